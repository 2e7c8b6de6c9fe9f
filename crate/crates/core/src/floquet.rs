//! Fiber operators of periodic effective Hamiltonians, band functions,
//! spectral gaps and their small-coupling asymptotics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::effective_1d::{element_mass, element_potential, element_stiffness};
use crate::error::{Error, Result};
use crate::spectral::{lowest_eigenpairs, CsrMatrix, GeneralizedEigenProblem, DEFAULT_TOL};
use crate::twist::{
    effective_potential, fourier_coefficients, w_potential, SampledPotential, TwistProfile,
    UniformGrid,
};

pub const DEFAULT_THETA_COUNT: usize = 65;
pub const DEFAULT_GAP_TOL: f64 = 1e-4;
pub const MIN_FIBER_NODES: usize = 16;

/// `1e-6 (1 + |k|)`
pub fn default_band_tol(k: f64) -> f64 {
    1e-6 * (1.0 + k.abs())
}

/// Symmetric grid over the closed zone `[−π/L, π/L]`; the middle point is
/// exactly 0 and the ends exactly `±π/L`.
pub fn theta_grid(period: f64, count: usize) -> Result<Vec<f64>> {
    if count < 3 || count % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "theta count {count} must be odd and at least 3"
        )));
    }
    let mid = (count - 1) / 2;
    let edge = PI / period;
    Ok((0..count)
        .map(|i| {
            let r = (i as f64 - mid as f64) / mid as f64;
            r * edge
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct FiberOperator {
    pub theta: f64,
    pub period: f64,
    pub grid: UniformGrid,
    pub potential: Vec<f64>,
    pub problem: GeneralizedEigenProblem<Complex64>,
}

/// Nodal potential on a periodic grid of `nodes` points.
pub(crate) fn periodic_samples(v: &SampledPotential, nodes: usize) -> Result<(f64, Vec<f64>)> {
    let period = v.period().ok_or_else(|| {
        Error::InvalidInput("fiber assembly needs a periodic potential".into())
    })?;
    let g = v.grid;
    if g.len != v.values.len() || (g.step * g.len as f64 - period).abs() > 1e-12 * period {
        return Err(Error::InvalidInput(
            "potential grid does not cover one period uniformly".into(),
        ));
    }
    if nodes < MIN_FIBER_NODES {
        return Err(Error::InvalidInput(format!(
            "{nodes} fiber nodes; at least {MIN_FIBER_NODES} required"
        )));
    }
    if nodes == g.len {
        return Ok((period, v.values.clone()));
    }
    let h = period / nodes as f64;
    let samples = (0..nodes)
        .map(|i| {
            let x = (g.start + i as f64 * h - g.start) / g.step;
            let k = x.floor() as usize;
            let t = x - k as f64;
            (1.0 - t) * v.values[k % g.len] + t * v.values[(k + 1) % g.len]
        })
        .collect();
    Ok((period, samples))
}

/// P1 assembly of `∫ |w' + iθw|² + V|w|²` on periodic `w`, written in the
/// gauge `u = e^{iθs} w`: element matrices of the quasi-periodic problem
/// with their coupling entries multiplied by `e^{±iθh}`.
pub(crate) fn assemble_gauge_fiber(
    potential: &[f64],
    period: f64,
    theta: f64,
) -> Result<GeneralizedEigenProblem<Complex64>> {
    let n = potential.len();
    let h = period / n as f64;
    let phase = Complex64::from_polar(1.0, theta * h);
    let (ke, me) = (element_stiffness(h), element_mass(h));
    let mut ta = Vec::with_capacity(12 * n);
    let mut tb = Vec::with_capacity(4 * n);
    for e in 0..n {
        let (i, j) = (e, (e + 1) % n);
        let pe = element_potential(h, potential[i], potential[j]);
        let nodes = [i, j];
        for r in 0..2 {
            for c in 0..2 {
                let ph = match (r, c) {
                    (0, 1) => phase,
                    (1, 0) => phase.conj(),
                    _ => Complex64::new(1.0, 0.0),
                };
                ta.push((nodes[r], nodes[c], ph * (ke[r][c] + pe[r][c])));
                tb.push((nodes[r], nodes[c], ph * me[r][c]));
            }
        }
    }
    GeneralizedEigenProblem::new(
        CsrMatrix::from_triplets(n, n, ta),
        CsrMatrix::from_triplets(n, n, tb),
    )
}

pub fn assemble_fiber(v: &SampledPotential, theta: f64, nodes: usize) -> Result<FiberOperator> {
    let (period, potential) = periodic_samples(v, nodes)?;
    let edge = PI / period;
    if !(theta.abs() <= edge * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "theta {theta} outside the zone [-{edge}, {edge}]"
        )));
    }
    let problem = assemble_gauge_fiber(&potential, period, theta)?;
    Ok(FiberOperator {
        theta,
        period,
        grid: UniformGrid::periodic(period, nodes)?,
        potential,
        problem,
    })
}

impl FiberOperator {
    pub fn eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        Ok(lowest_eigenpairs(&self.problem, count, DEFAULT_TOL)?.values)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandStructure {
    pub period: f64,
    pub jmax: usize,
    pub thetas: Vec<f64>,
    /// `k[j - 1][t]` is the j-th band function at `thetas[t]`.
    pub k: Vec<Vec<f64>>,
    pub symmetry_defect: f64,
    /// Monotonicity or symmetry violations beyond `band_tol`.
    pub violations: Vec<String>,
    /// Deviations below `band_tol` that are still nonzero.
    pub warnings: Vec<String>,
}

impl BandStructure {
    pub fn flagged(&self) -> bool {
        !self.violations.is_empty()
    }

    fn index_of(&self, theta: f64) -> usize {
        self.thetas
            .iter()
            .position(|&t| t == theta)
            .expect("theta grid contains 0 and the zone edge")
    }

    /// `k_j(0)`
    pub fn at_center(&self, j: usize) -> f64 {
        self.k[j - 1][self.index_of(0.0)]
    }

    /// `k_j(π/L)`
    pub fn at_edge(&self, j: usize) -> f64 {
        self.k[j - 1][self.thetas.len() - 1]
    }

    /// `max_θ k_j − min_θ k_j` per band.
    pub fn spreads(&self) -> Vec<f64> {
        self.k
            .iter()
            .map(|row| {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandOptions {
    pub theta_count: usize,
    pub jmax: usize,
    /// Defaults to the potential's own grid.
    pub nodes: Option<usize>,
}

pub fn band_structure(v: &SampledPotential, theta_count: usize, jmax: usize) -> Result<BandStructure> {
    band_structure_with(
        v,
        &BandOptions {
            theta_count,
            jmax,
            nodes: None,
        },
    )
}

pub fn band_structure_with(v: &SampledPotential, opts: &BandOptions) -> Result<BandStructure> {
    if opts.theta_count < 9 {
        return Err(Error::InvalidInput(format!(
            "theta count {} below 9",
            opts.theta_count
        )));
    }
    if opts.jmax == 0 {
        return Err(Error::InvalidInput("jmax must be positive".into()));
    }
    let nodes = opts.nodes.unwrap_or(v.grid.len);
    let (period, potential) = periodic_samples(v, nodes)?;
    let thetas = theta_grid(period, opts.theta_count)?;
    let fibers: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&theta| {
            let p = assemble_gauge_fiber(&potential, period, theta)?;
            Ok(lowest_eigenpairs(&p, opts.jmax, DEFAULT_TOL)?.values)
        })
        .collect::<Result<_>>()?;
    let k: Vec<Vec<f64>> = (0..opts.jmax)
        .map(|j| fibers.iter().map(|f| f[j]).collect())
        .collect();

    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let count = thetas.len();
    let mid = (count - 1) / 2;
    let mut symmetry_defect = 0.0f64;
    for (j, row) in k.iter().enumerate() {
        for t in 0..mid {
            let d = (row[t] - row[count - 1 - t]).abs();
            symmetry_defect = symmetry_defect.max(d);
            let tol = default_band_tol(row[t]);
            if d > tol {
                violations.push(format!(
                    "band {}: |k(θ) - k(-θ)| = {d:.3e} at θ = {:.6}",
                    j + 1,
                    thetas[count - 1 - t]
                ));
            }
        }
        // odd bands rise on [0, π/L], even bands fall
        let rising = j % 2 == 0;
        for t in mid..count - 1 {
            let step = row[t + 1] - row[t];
            let wrong = if rising { -step } else { step };
            if wrong > 0.0 {
                let tol = default_band_tol(row[t]);
                let msg = format!(
                    "band {}: monotonicity defect {wrong:.3e} between θ = {:.6} and {:.6}",
                    j + 1,
                    thetas[t],
                    thetas[t + 1]
                );
                if wrong > tol {
                    violations.push(msg);
                } else {
                    warnings.push(msg);
                }
            }
        }
    }
    Ok(BandStructure {
        period,
        jmax: opts.jmax,
        thetas,
        k,
        symmetry_defect,
        violations,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub j: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap {
    pub j: usize,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    /// Width above the gap tolerance.
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub bands: Vec<Band>,
    /// `G_j` for `j = 1..jmax-1`.
    pub gaps: Vec<Gap>,
    pub gap_tol: f64,
}

impl GapReport {
    pub fn open_gaps(&self) -> impl Iterator<Item = &Gap> {
        self.gaps.iter().filter(|g| g.open)
    }

    /// Largest overlap of consecutive bands (0 when they tile).
    pub fn max_overlap(&self) -> f64 {
        self.bands
            .windows(2)
            .map(|w| (w[0].upper - w[1].lower).max(0.0))
            .fold(0.0, f64::max)
    }
}

pub fn bands_and_gaps(bs: &BandStructure) -> GapReport {
    bands_and_gaps_with(bs, DEFAULT_GAP_TOL)
}

/// Bands from the endpoint values `k_j(0)`, `k_j(π/L)`; the gap `G_j` sits at
/// the zone edge for odd `j` and at the centre for even `j`.
pub fn bands_and_gaps_with(bs: &BandStructure, gap_tol: f64) -> GapReport {
    let bands = (1..=bs.jmax)
        .map(|j| {
            let (c, e) = (bs.at_center(j), bs.at_edge(j));
            Band {
                j,
                lower: c.min(e),
                upper: c.max(e),
            }
        })
        .collect();
    let gaps = (1..bs.jmax)
        .map(|j| {
            let (lower, upper) = if j % 2 == 1 {
                (bs.at_edge(j), bs.at_edge(j + 1))
            } else {
                (bs.at_center(j), bs.at_center(j + 1))
            };
            let width = upper - lower;
            Gap {
                j,
                lower,
                upper,
                width,
                open: width > gap_tol,
            }
        })
        .collect();
    GapReport {
        bands,
        gaps,
        gap_tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSpectra {
    pub beta: f64,
    /// `l^+`: periodic eigenvalues.
    pub plus: Vec<f64>,
    /// `l^-`: antiperiodic eigenvalues, from the zone-edge fiber.
    pub minus: Vec<f64>,
}

/// Spectra of `−d²/ds² + βW` under periodic and antiperiodic conditions.
pub fn periodic_antiperiodic_spectra(w: &SampledPotential, beta: f64, jmax: usize) -> Result<PeriodicSpectra> {
    let (period, values) = periodic_samples(w, w.grid.len)?;
    let scaled: Vec<f64> = values.iter().map(|x| beta * x).collect();
    let solve = |theta: f64| -> Result<Vec<f64>> {
        let p = assemble_gauge_fiber(&scaled, period, theta)?;
        Ok(lowest_eigenpairs(&p, jmax, DEFAULT_TOL)?.values)
    };
    Ok(PeriodicSpectra {
        beta,
        plus: solve(0.0)?,
        minus: solve(PI / period)?,
    })
}

/// `δ_j`: the antiperiodic pair `(j, j+1)` for odd `j`, the periodic pair
/// for even `j`. Returns the width and whether the pair is ambiguous (its
/// splitting not small against the distance to neighbouring eigenvalues).
fn gap_width(spectra: &PeriodicSpectra, j: usize) -> (f64, bool) {
    let l = if j % 2 == 1 { &spectra.minus } else { &spectra.plus };
    let (lo, hi) = (l[j - 1], l[j]);
    let width = hi - lo;
    let below = if j >= 2 { lo - l[j - 2] } else { f64::INFINITY };
    let above = if j + 1 < l.len() { l[j + 1] - hi } else { f64::INFINITY };
    (width, below.min(above) <= width)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapAsymptotics {
    pub j: usize,
    pub betas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Points excluded from the fit because the pairing was ambiguous.
    pub flagged: Vec<bool>,
    /// Least-squares slope through the origin over unflagged points.
    pub fitted_slope: f64,
    /// `(2/√L) |w^j|`
    pub predicted_slope: f64,
}

pub fn gap_asymptotics(w: &SampledPotential, j: usize, betas: &[f64]) -> Result<GapAsymptotics> {
    if j == 0 {
        return Err(Error::InvalidInput("gap index starts at 1".into()));
    }
    if betas.len() < 4 || betas.iter().any(|&b| !(b > 0.0 && b <= 0.5)) {
        return Err(Error::InvalidInput(
            "need at least 4 coupling values in (0, 0.5]".into(),
        ));
    }
    let period = w
        .period()
        .ok_or_else(|| Error::InvalidInput("gap asymptotics need a periodic W".into()))?;
    let coeffs = fourier_coefficients(w, j)?;
    let predicted_slope = 2.0 / period.sqrt() * coeffs.get(j as i64).norm();
    let count = j + 2;
    let rows: Vec<(f64, bool)> = betas
        .par_iter()
        .map(|&b| Ok(gap_width(&periodic_antiperiodic_spectra(w, b, count)?, j)))
        .collect::<Result<_>>()?;
    let deltas: Vec<f64> = rows.iter().map(|r| r.0.max(0.0)).collect();
    let flagged: Vec<bool> = rows.iter().map(|r| r.1).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for ((&b, &d), &f) in betas.iter().zip(&deltas).zip(&flagged) {
        if !f {
            num += b * d;
            den += b * b;
        }
    }
    let fitted_slope = if den > 0.0 { num / den } else { f64::NAN };
    Ok(GapAsymptotics {
        j,
        betas: betas.to_vec(),
        deltas,
        flagged,
        fitted_slope,
        predicted_slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairKind {
    Periodic,
    Antiperiodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BorgPair {
    pub kind: PairKind,
    /// 1-based indices of the paired eigenvalues.
    pub indices: [usize; 2],
    pub values: [f64; 2],
    pub split: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorgReport {
    /// Every pair coincides within `tol`: the spectral signature of a
    /// constant potential.
    pub constant_signature: bool,
    pub tol: f64,
    pub pairs: Vec<BorgPair>,
}

/// Compares the periodic pairs `(2j, 2j+1)` and antiperiodic pairs
/// `(2j−1, 2j)` among the lowest `jmax` eigenvalues.
pub fn borg_diagnostic(v: &SampledPotential, tol: f64, jmax: usize) -> Result<BorgReport> {
    if jmax < 2 {
        return Err(Error::InvalidInput("need at least two eigenvalues".into()));
    }
    let s = periodic_antiperiodic_spectra(v, 1.0, jmax + 1)?;
    let mut pairs = Vec::new();
    let mut i = 1;
    while i + 1 <= jmax {
        pairs.push(pair(PairKind::Antiperiodic, &s.minus, i));
        i += 2;
    }
    let mut i = 2;
    while i + 1 <= jmax {
        pairs.push(pair(PairKind::Periodic, &s.plus, i));
        i += 2;
    }
    pairs.sort_by(|a, b| a.values[0].total_cmp(&b.values[0]));
    Ok(BorgReport {
        constant_signature: pairs.iter().all(|p| p.split <= tol),
        tol,
        pairs,
    })
}

fn pair(kind: PairKind, l: &[f64], i: usize) -> BorgPair {
    BorgPair {
        kind,
        indices: [i, i + 1],
        values: [l[i - 1], l[i]],
        split: l[i] - l[i - 1],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledGapRow {
    pub gamma: f64,
    /// `G_j` of the operator with potential `γ²W − γ C2 α''`.
    pub gap_t: Gap,
    /// `G_j` of the operator with potential `γ²W`.
    pub gap_s: Gap,
    /// Largest `|k_i − ν_i|` over the two endpoints `i = j, j+1` at `θ*`.
    pub endpoint_difference: f64,
    /// `(2/√L) |w^j| γ²`
    pub predicted_s_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledGapStudy {
    pub j: usize,
    pub rows: Vec<ScaledGapRow>,
    /// Least-squares `K` in `difference ≈ K γ`.
    pub fitted_k: f64,
    /// Largest `difference / γ` over the sweep.
    pub max_ratio: f64,
}

/// Compares the gap `G_j` of the full scaled potential with that of its
/// `γ²W` part along a decreasing sweep of `γ`.
pub fn scaled_gap_study(
    profile: &TwistProfile,
    c1: f64,
    c2: f64,
    gammas: &[f64],
    j: usize,
    jmax: usize,
) -> Result<ScaledGapStudy> {
    let period = profile
        .period()
        .ok_or_else(|| Error::InvalidInput("scaled study needs a periodic profile".into()))?;
    if gammas.is_empty() || gammas.iter().any(|&g| !(g > 0.0)) || gammas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("gammas must be positive and decreasing".into()));
    }
    if j == 0 || j + 1 > jmax {
        return Err(Error::InvalidInput(format!("gap {j} needs jmax > {j}")));
    }
    let grid = UniformGrid::default_for(profile);
    let w = w_potential(profile, c1, &grid)?;
    let wj = fourier_coefficients(&w, j)?.get(j as i64).norm();
    let theta_star = if j % 2 == 1 { PI / period } else { 0.0 };
    let rows: Vec<ScaledGapRow> = gammas
        .par_iter()
        .map(|&g| {
            let scaled = profile.scaled(g);
            let vt = effective_potential(&scaled, c1, c2, &grid)?;
            let vs = w_potential(&scaled, c1, &grid)?;
            let kt = assemble_fiber(&vt, theta_star, grid.len)?.eigenvalues(jmax)?;
            let ks = assemble_fiber(&vs, theta_star, grid.len)?.eigenvalues(jmax)?;
            let gap = |k: &[f64]| {
                let width = k[j] - k[j - 1];
                Gap {
                    j,
                    lower: k[j - 1],
                    upper: k[j],
                    width,
                    open: width > DEFAULT_GAP_TOL,
                }
            };
            Ok(ScaledGapRow {
                gamma: g,
                gap_t: gap(&kt),
                gap_s: gap(&ks),
                endpoint_difference: (kt[j - 1] - ks[j - 1]).abs().max((kt[j] - ks[j]).abs()),
                predicted_s_width: 2.0 / period.sqrt() * wj * g * g,
            })
        })
        .collect::<Result<_>>()?;
    let (num, den) = rows.iter().fold((0.0, 0.0), |(n, d), r| {
        (n + r.gamma * r.endpoint_difference, d + r.gamma * r.gamma)
    });
    let max_ratio = rows
        .iter()
        .map(|r| r.endpoint_difference / r.gamma)
        .fold(0.0, f64::max);
    Ok(ScaledGapStudy {
        j,
        rows,
        fitted_k: num / den,
        max_ratio,
    })
}

/// Band functions whose spread over the zone does not exceed `tol`.
/// A constant band would be an eigenvalue of infinite multiplicity.
pub fn constant_bands(bs: &BandStructure, tol: f64) -> Vec<usize> {
    bs.spreads()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(j, _)| j + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid_is_symmetric() {
        let t = theta_grid(2.0, 9).unwrap();
        assert_eq!(t[4], 0.0);
        assert_eq!(t[8], PI / 2.0);
        for i in 0..9 {
            assert_eq!(t[i], -t[8 - i]);
        }
        assert!(theta_grid(1.0, 8).is_err());
    }

    #[test]
    fn fiber_matrices_are_hermitian() {
        let v: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).sin()).collect();
        let p = assemble_gauge_fiber(&v, 1.0, 0.7).unwrap();
        assert!(p.a().hermitian_defect() < 1e-15);
        assert!(p.b().hermitian_defect() < 1e-15);
    }
}
