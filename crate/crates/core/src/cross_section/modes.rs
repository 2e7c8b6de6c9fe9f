use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};
use crate::spectral::{
    lowest_eigenpairs_with, CsrMatrix, GeneralizedEigenProblem, SolverOptions, TripletBuilder,
};

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;
/// Eigenvalues below this are treated as a broken discretization.
pub const NEGATIVE_LAMBDA_TOL: f64 = 1e-8;
/// The transverse solve runs tighter than the default so the constant mode
/// and the orthonormality invariants hold with room to spare.
const MODE_SOLVER_TOL: f64 = 1e-11;

/// P1 gradients of the three hat functions on a triangle, and its area.
pub(crate) fn p1_gradients(mesh: &TriangleMesh, k: usize) -> ([[f64; 2]; 3], f64) {
    let [i, j, l] = mesh.triangles[k];
    let (p, q, r) = (mesh.vertices[i], mesh.vertices[j], mesh.vertices[l]);
    let area = mesh.triangle_area(k);
    let s = 0.5 / area;
    // gradient of the hat at a vertex is the rotated opposite edge over 2|T|
    let g = [
        [(q[1] - r[1]) * s, (r[0] - q[0]) * s],
        [(r[1] - p[1]) * s, (p[0] - r[0]) * s],
        [(p[1] - q[1]) * s, (q[0] - p[0]) * s],
    ];
    (g, area)
}

/// Stiffness and consistent mass of the Neumann Laplacian on a mesh.
#[derive(Debug, Clone)]
pub struct NeumannForms {
    pub mesh: Arc<TriangleMesh>,
    pub problem: GeneralizedEigenProblem<f64>,
}

impl NeumannForms {
    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        self.problem.a()
    }

    pub fn mass(&self) -> &CsrMatrix<f64> {
        self.problem.b()
    }
}

pub fn assemble_neumann_forms(mesh: TriangleMesh) -> Result<NeumannForms> {
    mesh.validate()?;
    let n = mesh.num_nodes();
    let cap = 9 * mesh.triangles.len();
    let mut k = TripletBuilder::with_capacity(n, n, cap);
    let mut m = TripletBuilder::with_capacity(n, n, cap);
    for t in 0..mesh.triangles.len() {
        let (g, area) = p1_gradients(&mesh, t);
        let idx = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let stiff = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                k.push(idx[a], idx[b], stiff);
                let mass = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                m.push(idx[a], idx[b], mass);
            }
        }
    }
    let problem = GeneralizedEigenProblem::new(k.build(), m.build())?;
    Ok(NeumannForms {
        mesh: Arc::new(mesh),
        problem,
    })
}

/// Lowest Neumann eigenpairs of the cross-section. Mode numbers are 1-based
/// in the public API (`lambda(1) == 0`); storage is 0-based.
#[derive(Debug, Clone)]
pub struct TransverseModeSet {
    pub lambdas: Vec<f64>,
    /// Mass-normalized nodal values; the entry of largest magnitude is
    /// positive (first such node on near-ties).
    pub mode_values: Vec<Vec<f64>>,
    pub degenerate_flags: Vec<bool>,
    pub forms: Arc<NeumannForms>,
}

impl TransverseModeSet {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.forms.mesh
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.lambdas[n - 1]
    }

    pub fn mode(&self, n: usize) -> &[f64] {
        &self.mode_values[n - 1]
    }

    pub fn is_degenerate(&self, n: usize) -> bool {
        self.degenerate_flags[n - 1]
    }

    pub(crate) fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidInput(format!(
                "mode index {n} outside 1..={}",
                self.len()
            )));
        }
        Ok(())
    }

    /// `∫|∇v|² / ∫|v|²` for a nodal vector.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        self.forms.stiffness().form(v, v) / self.forms.mass().form(v, v)
    }
}

pub fn solve_transverse_modes(
    forms: Arc<NeumannForms>,
    count: usize,
    degeneracy_tol: f64,
) -> Result<TransverseModeSet> {
    let dim = forms.problem.dim();
    if count < 2 || count > dim {
        return Err(Error::InvalidInput(format!(
            "mode count {count} outside 2..={dim}"
        )));
    }
    // one extra pair so the last requested mode has an upper neighbour
    let solve_count = (count + 1).min(dim);
    let sol = lowest_eigenpairs_with(
        &forms.problem,
        solve_count,
        &SolverOptions {
            tol: MODE_SOLVER_TOL,
            max_iterations: None,
        },
    )?;
    if let Some(&low) = sol.values.iter().find(|&&l| l < -NEGATIVE_LAMBDA_TOL) {
        return Err(Error::Discretization(format!(
            "negative Neumann eigenvalue {low:.3e}"
        )));
    }
    let all = &sol.values;
    let degenerate_flags = (0..count)
        .map(|m| {
            let scale = all[m].max(1.0);
            let below = if m > 0 { all[m] - all[m - 1] } else { f64::INFINITY };
            let above = if m + 1 < all.len() {
                all[m + 1] - all[m]
            } else {
                f64::INFINITY
            };
            below.min(above) < degeneracy_tol * scale
        })
        .collect();
    let mode_values = sol
        .vectors
        .into_iter()
        .take(count)
        .map(|mut v| {
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(TransverseModeSet {
        lambdas: all[..count].to_vec(),
        mode_values,
        degenerate_flags,
        forms,
    })
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if let Some(&pivot) = v.iter().find(|x| x.abs() >= (1.0 - 1e-6) * max) {
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Smallest Rayleigh quotient over deterministic trial functions that are
/// mass-orthogonal to modes `1..=k`. Trials mix modes `k+1..` with noise.
pub fn spectral_gap_check(modes: &TransverseModeSet, k: usize, trials: usize) -> Result<f64> {
    if k + 1 > modes.len() {
        return Err(Error::InvalidInput(format!(
            "gap check needs mode {} but only {} are available",
            k + 1,
            modes.len()
        )));
    }
    let n = modes.mesh().num_nodes();
    let mass = modes.forms.mass();
    let mut rng = ChaCha8Rng::seed_from_u64(((k as u64) << 32) ^ trials as u64);
    let mut worst = f64::INFINITY;
    for t in 0..trials.max(1) {
        let mut v = vec![0.0; n];
        for m in k..modes.len() {
            let c: f64 = rng.random_range(-1.0..1.0);
            for (vi, ui) in v.iter_mut().zip(&modes.mode_values[m]) {
                *vi += c * ui;
            }
        }
        // noise level sweeps several decades across trials
        let noise = 10f64.powi(-((t % 6) as i32));
        for vi in v.iter_mut() {
            *vi += noise * rng.random_range(-1.0..1.0);
        }
        for u in &modes.mode_values[..k] {
            let c = mass.form(u, &v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
        worst = worst.min(modes.rayleigh_quotient(&v));
    }
    Ok(worst)
}
