//! The effective Schrödinger operator `−d²/ds² + V` on a bounded interval,
//! assembled from its quadratic form with Robin boundary terms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{lowest_eigenpairs, CsrMatrix, GeneralizedEigenProblem, DEFAULT_TOL};
use crate::twist::{Domain, SampledPotential, TwistProfile, UniformGrid};

pub const MIN_NODES: usize = 64;

/// Local P1 matrices on an element of length `h`, row-major.
pub(crate) fn element_stiffness(h: f64) -> [[f64; 2]; 2] {
    let k = 1.0 / h;
    [[k, -k], [-k, k]]
}

pub(crate) fn element_mass(h: f64) -> [[f64; 2]; 2] {
    let d = h / 3.0;
    let o = h / 6.0;
    [[d, o], [o, d]]
}

/// `∫ V φ_i φ_j` with `V` linear between its end values.
pub(crate) fn element_potential(h: f64, v0: f64, v1: f64) -> [[f64; 2]; 2] {
    let s = h / 12.0;
    let off = s * (v0 + v1);
    [[s * (3.0 * v0 + v1), off], [off, s * (v0 + 3.0 * v1)]]
}

/// Robin coefficients `r = C2 α'` at the two ends; the form carries
/// `− r_a |w(a)|² + r_b |w(b)|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobinSpec {
    pub r_a: f64,
    pub r_b: f64,
}

impl RobinSpec {
    pub const NEUMANN: RobinSpec = RobinSpec { r_a: 0.0, r_b: 0.0 };

    pub fn from_profile(profile: &TwistProfile, c2: f64) -> Result<Self> {
        match profile.domain() {
            Domain::Interval { a, b } => Ok(Self {
                r_a: c2 * profile.dalpha(a),
                r_b: c2 * profile.dalpha(b),
            }),
            Domain::Periodic { .. } => Err(Error::InvalidInput(
                "Robin data needs an interval profile".into(),
            )),
        }
    }

    pub fn is_neumann(&self) -> bool {
        self.r_a == 0.0 && self.r_b == 0.0
    }
}

#[derive(Debug, Clone)]
pub struct Operator1D {
    pub grid: UniformGrid,
    /// Potential at the nodes.
    pub potential: Vec<f64>,
    pub robin: RobinSpec,
    pub problem: GeneralizedEigenProblem<f64>,
}

/// P1 assembly of `∫ |w'|² + V |w|² + r_b |w(b)|² − r_a |w(a)|²` on a uniform
/// grid of `nodes` points. `V` is interpolated linearly when its grid differs
/// from the element grid.
pub fn assemble_interval_operator(
    potential: &SampledPotential,
    profile: &TwistProfile,
    c2: f64,
    nodes: usize,
) -> Result<Operator1D> {
    let (a, b) = match profile.domain() {
        Domain::Interval { a, b } => (a, b),
        Domain::Periodic { .. } => {
            return Err(Error::InvalidInput(
                "interval operator needs an interval profile".into(),
            ))
        }
    };
    if nodes < MIN_NODES {
        return Err(Error::InvalidInput(format!(
            "{nodes} nodes; at least {MIN_NODES} required"
        )));
    }
    let pg = potential.grid;
    let tol = 1e-12 * (b - a);
    if pg.period.is_some() || (pg.start - a).abs() > tol || (pg.end() - b).abs() > tol {
        return Err(Error::InvalidInput(format!(
            "potential grid [{}, {}] does not match the interval ({a}, {b})",
            pg.start,
            pg.end()
        )));
    }
    let grid = UniformGrid::interval(a, b, nodes)?;
    let v = if pg.len == nodes {
        potential.values.clone()
    } else {
        (0..nodes)
            .map(|i| interpolate(potential, grid.point(i)))
            .collect()
    };
    let robin = RobinSpec::from_profile(profile, c2)?;
    assemble_with(grid, v, robin)
}

fn interpolate(p: &SampledPotential, s: f64) -> f64 {
    let g = p.grid;
    let x = ((s - g.start) / g.step).clamp(0.0, (g.len - 1) as f64);
    let i = (x.floor() as usize).min(g.len - 2);
    let t = x - i as f64;
    (1.0 - t) * p.values[i] + t * p.values[i + 1]
}

/// Assembly from nodal potential values and explicit Robin data.
pub fn assemble_with(grid: UniformGrid, potential: Vec<f64>, robin: RobinSpec) -> Result<Operator1D> {
    let n = grid.len;
    if potential.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: potential.len(),
        });
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite potential".into()));
    }
    let h = grid.step;
    let mut ta = Vec::with_capacity(8 * (n - 1) + 2);
    let mut tb = Vec::with_capacity(4 * (n - 1));
    let (ke, me) = (element_stiffness(h), element_mass(h));
    for e in 0..n - 1 {
        let pe = element_potential(h, potential[e], potential[e + 1]);
        for r in 0..2 {
            for c in 0..2 {
                ta.push((e + r, e + c, ke[r][c]));
                ta.push((e + r, e + c, pe[r][c]));
                tb.push((e + r, e + c, me[r][c]));
            }
        }
    }
    if robin.r_a != 0.0 {
        ta.push((0, 0, -robin.r_a));
    }
    if robin.r_b != 0.0 {
        ta.push((n - 1, n - 1, robin.r_b));
    }
    let problem = GeneralizedEigenProblem::new(
        CsrMatrix::from_triplets(n, n, ta),
        CsrMatrix::from_triplets(n, n, tb),
    )?;
    Ok(Operator1D {
        grid,
        potential,
        robin,
        problem,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum1D {
    pub values: Vec<f64>,
    pub nodes: usize,
    pub h: f64,
    pub robin: RobinSpec,
}

/// The `jmax` lowest eigenvalues.
pub fn spectrum_1d(op: &Operator1D, jmax: usize) -> Result<Spectrum1D> {
    if jmax == 0 || 4 * jmax > op.grid.len {
        return Err(Error::InvalidInput(format!(
            "jmax {jmax} is not small against {} nodes",
            op.grid.len
        )));
    }
    let sol = lowest_eigenpairs(&op.problem, jmax, DEFAULT_TOL)?;
    Ok(Spectrum1D {
        values: sol.values,
        nodes: op.grid.len,
        h: op.grid.step,
        robin: op.robin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_potential_local_matrix() {
        let h = 0.1;
        let p = element_potential(h, 2.0, 2.0);
        let m = element_mass(h);
        for r in 0..2 {
            for c in 0..2 {
                assert!((p[r][c] - 2.0 * m[r][c]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn neumann_is_bit_identical_without_boundary_terms() {
        let grid = UniformGrid::interval(0.0, 1.0, 100).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|s| s * s).collect();
        let a = assemble_with(grid, v.clone(), RobinSpec::NEUMANN).unwrap();
        let b = assemble_with(grid, v, RobinSpec { r_a: 0.0, r_b: 0.0 }).unwrap();
        assert_eq!(a.problem.a(), b.problem.a());
        assert_eq!(a.problem.a().hermitian_defect(), 0.0);
    }
}
