//! Transverse-mode Galerkin reduction of the shifted waveguide form and the
//! thin-limit checks built on it.
//!
//! A function on `I × S` is expanded as `ψ = Σ_{m=n..M} w_m(s) u_m(y)`.
//! Writing `A[m][k] = ∫ ⟨∇u_m, Ry⟩ u_k`, `S = (A + Aᵀ)/2`, `Q = (A − Aᵀ)/2`
//! and `B[m][k] = ∫ ⟨∇u_m, Ry⟩⟨∇u_k, Ry⟩`, the shifted form becomes
//!
//! ```text
//! Σ_m ∫ |w_m'|² + (λ_m − λ_n)/ε² |w_m|²
//!   + Σ_{m,k} ∫ (B_mk α'² − S_mk α'') w̄_m w_k + Q_mk α' (w̄_m w_k' − w̄_m' w_k)
//!   + [S_mk α' w̄_m w_k] at the ends of an interval.
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cross_section::{CouplingData, TransverseModeSet};
use crate::effective_1d::{element_mass, element_potential, element_stiffness, Spectrum1D};
use crate::error::{Error, Result};
use crate::floquet::{theta_grid, Gap};
use crate::spectral::{lowest_eigenpairs, CsrMatrix, GeneralizedEigenProblem, Scalar, DEFAULT_TOL};
use crate::twist::{potential_value, Domain, TwistProfile, UniformGrid};

pub const DEFAULT_EXTRA_MODES: usize = 6;
pub const DEFAULT_INTERVAL_NODES: usize = 1024;
pub const DEFAULT_FIBER_NODES: usize = 512;
pub const MAX_EPSILON: f64 = 0.5;
/// Relative error accepted at the smallest `ε` of a convergence study.
pub const CONVERGENCE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelCase {
    /// Natural conditions at both ends.
    Interval { a: f64, b: f64 },
    /// Quasi-momentum `θ` on one period `L`.
    Fiber {
        theta: f64,
        #[serde(rename = "L")]
        period: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullModelConfig {
    /// Target mode, 1-based.
    pub n: usize,
    pub epsilon: f64,
    /// Highest retained transverse mode `M`.
    pub cutoff: usize,
    pub nodes: usize,
    pub case: ModelCase,
    pub allow_degenerate: bool,
}

impl FullModelConfig {
    pub fn interval(n: usize, epsilon: f64, a: f64, b: f64) -> Self {
        Self {
            n,
            epsilon,
            cutoff: n + DEFAULT_EXTRA_MODES,
            nodes: DEFAULT_INTERVAL_NODES,
            case: ModelCase::Interval { a, b },
            allow_degenerate: false,
        }
    }

    pub fn fiber(n: usize, epsilon: f64, theta: f64, period: f64) -> Self {
        Self {
            n,
            epsilon,
            cutoff: n + DEFAULT_EXTRA_MODES,
            nodes: DEFAULT_FIBER_NODES,
            case: ModelCase::Fiber { theta, period },
            allow_degenerate: false,
        }
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        if let ModelCase::Fiber { period, .. } = self.case {
            self.case = ModelCase::Fiber { theta, period };
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("mode index starts at 1".into()));
        }
        if self.cutoff < self.n {
            return Err(Error::InvalidInput(format!(
                "cutoff {} below target mode {}",
                self.cutoff, self.n
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= MAX_EPSILON) {
            return Err(Error::InvalidInput(format!(
                "epsilon {} outside (0, {MAX_EPSILON}]",
                self.epsilon
            )));
        }
        if self.nodes < 16 {
            return Err(Error::InvalidInput(format!("{} nodes is too few", self.nodes)));
        }
        match self.case {
            ModelCase::Interval { a, b } if !(b > a) => {
                Err(Error::InvalidInput(format!("empty interval ({a}, {b})")))
            }
            ModelCase::Fiber { theta, period } => {
                if !(period > 0.0) || theta.abs() > PI / period * (1.0 + 1e-12) {
                    Err(Error::InvalidInput(format!(
                        "theta {theta} outside the zone of period {period}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Retained mode numbers `n..=M`.
    pub fn channels(&self) -> Vec<usize> {
        (self.n..=self.cutoff).collect()
    }
}

#[derive(Debug, Clone)]
pub enum ReducedProblem {
    Real(GeneralizedEigenProblem<f64>),
    Complex(GeneralizedEigenProblem<Complex64>),
}

#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub config: FullModelConfig,
    pub channels: Vec<usize>,
    /// `(λ_m − λ_n)/ε²` per retained channel.
    pub transverse_shifts: Vec<f64>,
    pub grid: UniformGrid,
    pub problem: ReducedProblem,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.channels.len() * self.grid.len
    }

    pub fn hermitian_defect(&self) -> (f64, f64) {
        match &self.problem {
            ReducedProblem::Real(p) => (p.a().hermitian_defect(), p.b().hermitian_defect()),
            ReducedProblem::Complex(p) => (p.a().hermitian_defect(), p.b().hermitian_defect()),
        }
    }

    pub fn real_problem(&self) -> Option<&GeneralizedEigenProblem<f64>> {
        match &self.problem {
            ReducedProblem::Real(p) => Some(p),
            ReducedProblem::Complex(_) => None,
        }
    }

    pub fn complex_problem(&self) -> Option<&GeneralizedEigenProblem<Complex64>> {
        match &self.problem {
            ReducedProblem::Complex(p) => Some(p),
            ReducedProblem::Real(_) => None,
        }
    }
}

struct Blocks {
    b: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

fn select_blocks(coupling: &CouplingData, channels: &[usize]) -> Result<Blocks> {
    let pos: Vec<usize> = channels
        .iter()
        .map(|m| {
            coupling.modes.iter().position(|x| x == m).ok_or_else(|| {
                Error::InvalidInput(format!("coupling data does not contain mode {m}"))
            })
        })
        .collect::<Result<_>>()?;
    let pick = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        pos.iter().map(|&i| pos.iter().map(|&k| f(i, k)).collect()).collect()
    };
    let a = &coupling.a;
    Ok(Blocks {
        b: pick(&|i, k| coupling.b[i][k]),
        s: pick(&|i, k| 0.5 * (a[i][k] + a[k][i])),
        q: pick(&|i, k| 0.5 * (a[i][k] - a[k][i])),
    })
}

/// Nodal `α'`, `α''` and element means of `α'`.
struct TwistSamples {
    da: Vec<f64>,
    dda: Vec<f64>,
    mean_da: Vec<f64>,
}

fn sample_twist(profile: &TwistProfile, grid: &UniformGrid, elements: usize) -> TwistSamples {
    let pts = grid.points();
    let end = |e: usize| if e + 1 < pts.len() { pts[e + 1] } else { grid.start + grid.step * (e + 1) as f64 };
    TwistSamples {
        da: pts.iter().map(|&s| profile.dalpha(s)).collect(),
        dda: pts.iter().map(|&s| profile.ddalpha(s)).collect(),
        mean_da: (0..elements)
            .map(|e| (profile.alpha(end(e)) - profile.alpha(pts[e])) / grid.step)
            .collect(),
    }
}

/// Block assembly in channel-major order. Element `e` joins nodes `e` and
/// `(e + 1) mod N`; off-diagonal local entries carry `phase` and its conjugate.
#[allow(clippy::too_many_arguments)]
fn assemble_blocks<T: Scalar>(
    blocks: &Blocks,
    shifts: &[f64],
    tw: &TwistSamples,
    nodes: usize,
    elements: usize,
    h: f64,
    phase: T,
    ends: Option<(f64, f64)>,
) -> Result<GeneralizedEigenProblem<T>> {
    let c = shifts.len();
    let dim = c * nodes;
    let mut ta: Vec<(usize, usize, T)> = Vec::with_capacity(elements * (8 + 4 * c * c));
    let mut tb: Vec<(usize, usize, T)> = Vec::with_capacity(elements * 4 * c);
    let (ke, me) = (element_stiffness(h), element_mass(h));
    let one = T::from_re(1.0);
    let ph = |r: usize, col: usize| match (r, col) {
        (0, 1) => phase,
        (1, 0) => phase.conjugate(),
        _ => one,
    };
    for e in 0..elements {
        let loc = [e, (e + 1) % nodes];
        for m in 0..c {
            for k in 0..c {
                let (bmk, smk, qmk) = (blocks.b[m][k], blocks.s[m][k], blocks.q[m][k]);
                let pe = element_potential(
                    h,
                    potential_value(bmk, smk, tw.da[loc[0]], tw.dda[loc[0]]),
                    potential_value(bmk, smk, tw.da[loc[1]], tw.dda[loc[1]]),
                );
                let q = qmk * tw.mean_da[e];
                for r in 0..2 {
                    for col in 0..2 {
                        let (i, j) = (m * nodes + loc[r], k * nodes + loc[col]);
                        if m == k {
                            ta.push((i, j, ph(r, col).scale_by(ke[r][col])));
                        }
                        ta.push((i, j, ph(r, col).scale_by(pe[r][col])));
                        if q != 0.0 && r != col {
                            let sign = if r == 0 { 1.0 } else { -1.0 };
                            ta.push((i, j, ph(r, col).scale_by(sign * q)));
                        }
                        if m == k {
                            let mass = ph(r, col).scale_by(me[r][col]);
                            tb.push((i, j, mass));
                            if shifts[m] != 0.0 {
                                ta.push((i, j, mass.scale_by(shifts[m])));
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some((da_a, da_b)) = ends {
        for m in 0..c {
            for k in 0..c {
                let smk = blocks.s[m][k];
                let (ra, rb) = (smk * da_a, smk * da_b);
                if ra != 0.0 {
                    ta.push((m * nodes, k * nodes, T::from_re(-ra)));
                }
                if rb != 0.0 {
                    ta.push((m * nodes + nodes - 1, k * nodes + nodes - 1, T::from_re(rb)));
                }
            }
        }
    }
    GeneralizedEigenProblem::new(
        CsrMatrix::from_triplets(dim, dim, ta),
        CsrMatrix::from_triplets(dim, dim, tb),
    )
}

pub fn assemble_reduced(
    config: &FullModelConfig,
    modes: &TransverseModeSet,
    coupling: &CouplingData,
    profile: &TwistProfile,
) -> Result<ReducedSystem> {
    config.validate()?;
    if config.cutoff > modes.len() {
        return Err(Error::InvalidInput(format!(
            "cutoff {} exceeds the {} computed modes",
            config.cutoff,
            modes.len()
        )));
    }
    if modes.is_degenerate(config.n) && !config.allow_degenerate {
        return Err(Error::DegenerateMode {
            index: config.n,
            lambda: modes.lambda(config.n),
        });
    }
    let channels = config.channels();
    let blocks = select_blocks(coupling, &channels)?;
    let ln = modes.lambda(config.n);
    let eps2 = config.epsilon * config.epsilon;
    let transverse_shifts: Vec<f64> = channels
        .iter()
        .map(|&m| if m == config.n { 0.0 } else { ((modes.lambda(m) - ln) / eps2).max(0.0) })
        .collect();
    let n = config.nodes;
    match config.case {
        ModelCase::Interval { a, b } => {
            match profile.domain() {
                Domain::Interval { a: pa, b: pb } if pa == a && pb == b => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "profile domain does not match the interval ({a}, {b})"
                    )))
                }
            }
            let grid = UniformGrid::interval(a, b, n)?;
            let tw = sample_twist(profile, &grid, n - 1);
            let ends = (profile.dalpha(a), profile.dalpha(b));
            let p = assemble_blocks(&blocks, &transverse_shifts, &tw, n, n - 1, grid.step, 1.0f64, Some(ends))?;
            Ok(ReducedSystem {
                config: *config,
                channels,
                transverse_shifts,
                grid,
                problem: ReducedProblem::Real(p),
            })
        }
        ModelCase::Fiber { theta, period } => {
            match profile.period() {
                Some(l) if (l - period).abs() <= 1e-12 * period => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "profile is not periodic with period {period}"
                    )))
                }
            }
            let grid = UniformGrid::periodic(period, n)?;
            let tw = sample_twist(profile, &grid, n);
            let phase = Complex64::from_polar(1.0, theta * grid.step);
            let p = assemble_blocks(&blocks, &transverse_shifts, &tw, n, n, grid.step, phase, None)?;
            Ok(ReducedSystem {
                config: *config,
                channels,
                transverse_shifts,
                grid,
                problem: ReducedProblem::Complex(p),
            })
        }
    }
}

/// Lowest `jmax` eigenvalues of the shifted form.
pub fn shifted_spectrum(system: &ReducedSystem, jmax: usize) -> Result<Vec<f64>> {
    if jmax == 0 || 4 * jmax > system.dim() {
        return Err(Error::InvalidInput(format!(
            "jmax {jmax} is not small against dimension {}",
            system.dim()
        )));
    }
    Ok(match &system.problem {
        ReducedProblem::Real(p) => lowest_eigenpairs(p, jmax, DEFAULT_TOL)?.values,
        ReducedProblem::Complex(p) => lowest_eigenpairs(p, jmax, DEFAULT_TOL)?.values,
    })
}

/// Everything a reduced run needs besides its configuration.
#[derive(Debug, Clone, Copy)]
pub struct ModelInputs<'a> {
    pub modes: &'a TransverseModeSet,
    pub coupling: &'a CouplingData,
    pub profile: &'a TwistProfile,
}

impl ModelInputs<'_> {
    pub fn spectrum(&self, config: &FullModelConfig, jmax: usize) -> Result<Vec<f64>> {
        shifted_spectrum(&assemble_reduced(config, self.modes, self.coupling, self.profile)?, jmax)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    /// `shifted[e][j]`
    pub shifted: Vec<Vec<f64>>,
    pub oracle: Vec<f64>,
    pub abs_errors: Vec<Vec<f64>>,
    /// Errors relative to `max(|oracle|, 1)`.
    pub rel_errors: Vec<Vec<f64>>,
    /// Largest error per band decreases with `ε`.
    pub errors_decreasing: bool,
    /// Every shifted value is nondecreasing as `ε` decreases.
    pub values_monotone: bool,
    pub threshold: f64,
    pub final_max_rel_error: f64,
}

impl ConvergenceReport {
    pub fn final_below_threshold(&self) -> bool {
        self.final_max_rel_error < self.threshold
    }
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(
            "need at least 3 strictly decreasing epsilons".into(),
        ));
    }
    Ok(())
}

fn build_report(epsilons: &[f64], shifted: Vec<Vec<f64>>, oracle: &[f64]) -> ConvergenceReport {
    let abs_errors: Vec<Vec<f64>> = shifted
        .iter()
        .map(|row| row.iter().zip(oracle).map(|(x, o)| (x - o).abs()).collect())
        .collect();
    let rel_errors: Vec<Vec<f64>> = abs_errors
        .iter()
        .map(|row| row.iter().zip(oracle).map(|(e, o)| e / o.abs().max(1.0)).collect())
        .collect();
    let worst: Vec<f64> = abs_errors
        .iter()
        .map(|r| r.iter().copied().fold(0.0, f64::max))
        .collect();
    let errors_decreasing = worst.windows(2).all(|w| w[1] <= w[0]);
    let values_monotone = shifted.windows(2).all(|w| {
        w[0].iter()
            .zip(&w[1])
            .all(|(big, small)| *small >= *big - 1e-9 * (1.0 + big.abs()))
    });
    let final_max_rel_error = rel_errors
        .last()
        .map(|r| r.iter().copied().fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    ConvergenceReport {
        epsilons: epsilons.to_vec(),
        shifted,
        oracle: oracle.to_vec(),
        abs_errors,
        rel_errors,
        errors_decreasing,
        values_monotone,
        threshold: CONVERGENCE_THRESHOLD,
        final_max_rel_error,
    }
}

/// Shifted eigenvalues on an interval against the effective 1D spectrum.
pub fn convergence_study(
    template: &FullModelConfig,
    inputs: ModelInputs<'_>,
    epsilons: &[f64],
    oracle: &Spectrum1D,
    jmax: usize,
) -> Result<ConvergenceReport> {
    check_epsilons(epsilons)?;
    if !matches!(template.case, ModelCase::Interval { .. }) {
        return Err(Error::InvalidInput("interval study needs an interval case".into()));
    }
    if oracle.values.len() < jmax {
        return Err(Error::DimensionMismatch {
            expected: jmax,
            found: oracle.values.len(),
        });
    }
    let shifted = epsilons
        .par_iter()
        .map(|&e| inputs.spectrum(&template.with_epsilon(e), jmax))
        .collect::<Result<Vec<_>>>()?;
    Ok(build_report(epsilons, shifted, &oracle.values[..jmax]))
}

/// Shifted fiber eigenvalues against the effective band values `k_j(θ)`.
pub fn fiber_convergence_study(
    template: &FullModelConfig,
    inputs: ModelInputs<'_>,
    epsilons: &[f64],
    oracle: &[f64],
    jmax: usize,
) -> Result<ConvergenceReport> {
    check_epsilons(epsilons)?;
    if !matches!(template.case, ModelCase::Fiber { .. }) {
        return Err(Error::InvalidInput("fiber study needs a fiber case".into()));
    }
    if oracle.len() < jmax {
        return Err(Error::DimensionMismatch {
            expected: jmax,
            found: oracle.len(),
        });
    }
    let shifted = epsilons
        .par_iter()
        .map(|&e| inputs.spectrum(&template.with_epsilon(e), jmax))
        .collect::<Result<Vec<_>>>()?;
    Ok(build_report(epsilons, shifted, &oracle[..jmax]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Persistence {
    /// The effective gap is empty; nothing to check.
    Skipped { j: usize },
    Checked {
        j: usize,
        epsilon: f64,
        /// `min_θ E_{j+1} − max_θ E_j`
        margin: f64,
        half_gap: f64,
    },
}

impl Persistence {
    /// `margin − ½|G_j|`, when checked.
    pub fn excess(&self) -> Option<f64> {
        match self {
            Persistence::Skipped { .. } => None,
            Persistence::Checked { margin, half_gap, .. } => Some(margin - half_gap),
        }
    }
}

/// Compares the separation of the shifted bands `j` and `j+1` over the zone
/// with half the width of the effective gap `G_j`.
pub fn gap_persistence_check(
    template: &FullModelConfig,
    inputs: ModelInputs<'_>,
    epsilon: f64,
    gap: &Gap,
    theta_count: usize,
) -> Result<Persistence> {
    let j = gap.j;
    if !gap.open {
        return Ok(Persistence::Skipped { j });
    }
    let period = match template.case {
        ModelCase::Fiber { period, .. } => period,
        ModelCase::Interval { .. } => {
            return Err(Error::InvalidInput("gap persistence needs a fiber case".into()))
        }
    };
    let thetas = theta_grid(period, theta_count)?;
    let config = template.with_epsilon(epsilon);
    let rows = thetas
        .par_iter()
        .map(|&t| inputs.spectrum(&config.with_theta(t), j + 1))
        .collect::<Result<Vec<_>>>()?;
    let top = rows.iter().map(|r| r[j - 1]).fold(f64::NEG_INFINITY, f64::max);
    let bottom = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
    Ok(Persistence::Checked {
        j,
        epsilon,
        margin: bottom - top,
        half_gap: 0.5 * gap.width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangeOfVariablesReport {
    /// `max |J Jᵀ − G|` with `G` from its closed form.
    pub metric_residual: f64,
    /// `max |J J⁻¹ − I|`
    pub inverse_residual: f64,
    /// `max |det J − ε²|`
    pub det_residual: f64,
}

type Mat3 = [[f64; 3]; 3];

/// Rows `∂F/∂s`, `∂F/∂y1`, `∂F/∂y2` of the rotated-section map.
pub fn jacobian(profile: &TwistProfile, epsilon: f64, s: f64, y: [f64; 2]) -> Mat3 {
    let (al, da) = (profile.alpha(s), profile.dalpha(s));
    let (sn, cs) = al.sin_cos();
    let z = [cs, -sn];
    let zp = [sn, cs];
    let dot = |u: [f64; 2]| u[0] * y[0] + u[1] * y[1];
    [
        [1.0, -epsilon * da * dot(zp), epsilon * da * dot(z)],
        [0.0, epsilon * cs, epsilon * sn],
        [0.0, -epsilon * sn, epsilon * cs],
    ]
}

pub fn jacobian_inverse(profile: &TwistProfile, epsilon: f64, s: f64, y: [f64; 2]) -> Mat3 {
    let (al, da) = (profile.alpha(s), profile.dalpha(s));
    let (sn, cs) = al.sin_cos();
    [
        [1.0, da * y[1], -da * y[0]],
        [0.0, cs / epsilon, -sn / epsilon],
        [0.0, sn / epsilon, cs / epsilon],
    ]
}

/// Closed form of the induced metric.
pub fn metric(profile: &TwistProfile, epsilon: f64, s: f64, y: [f64; 2]) -> Mat3 {
    let da = profile.dalpha(s);
    let e2 = epsilon * epsilon;
    let r2 = y[0] * y[0] + y[1] * y[1];
    [
        [1.0 + e2 * da * da * r2, -e2 * da * y[1], e2 * da * y[0]],
        [-e2 * da * y[1], e2, 0.0],
        [e2 * da * y[0], 0.0, e2],
    ]
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn validate_change_of_variables(
    profile: &TwistProfile,
    epsilon: f64,
    points: &[(f64, [f64; 2])],
) -> ChangeOfVariablesReport {
    let mut rep = ChangeOfVariablesReport {
        metric_residual: 0.0,
        inverse_residual: 0.0,
        det_residual: 0.0,
    };
    for &(s, y) in points {
        let j = jacobian(profile, epsilon, s, y);
        let ji = jacobian_inverse(profile, epsilon, s, y);
        let g = metric(profile, epsilon, s, y);
        for r in 0..3 {
            for c in 0..3 {
                let jjt: f64 = (0..3).map(|k| j[r][k] * j[c][k]).sum();
                let prod: f64 = (0..3).map(|k| j[r][k] * ji[k][c]).sum();
                let id = if r == c { 1.0 } else { 0.0 };
                rep.metric_residual = rep.metric_residual.max((jjt - g[r][c]).abs());
                rep.inverse_residual = rep.inverse_residual.max((prod - id).abs());
            }
        }
        rep.det_residual = rep.det_residual.max((det3(&j) - epsilon * epsilon).abs());
    }
    rep
}
