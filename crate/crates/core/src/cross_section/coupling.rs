use serde::Serialize;

use super::modes::{p1_gradients, TransverseModeSet};
use crate::error::{Error, Result};

/// `R y` with `R = [[0, -1], [1, 0]]`.
#[inline]
pub fn rotate(y: [f64; 2]) -> [f64; 2] {
    [-y[1], y[0]]
}

/// Twist-coupling integrals for a set of modes, indexed by position in
/// `modes` (mode numbers are stored alongside).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingData {
    /// 1-based mode numbers of the rows and columns.
    pub modes: Vec<usize>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    /// `A[m][k] = ∫ ⟨∇u_m, R y⟩ u_k`
    pub a: Vec<Vec<f64>>,
    /// `B[m][k] = ∫ ⟨∇u_m, R y⟩ ⟨∇u_k, R y⟩`
    pub b: Vec<Vec<f64>>,
    /// `∮ u_m u_k ⟨R y, ν⟩`
    pub boundary_gram: Vec<Vec<f64>>,
    pub h: f64,
}

impl CouplingData {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `max |A + Aᵀ − G|` over all entries.
    pub fn divergence_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for m in 0..n {
            for k in 0..n {
                let d = self.a[m][k] + self.a[k][m] - self.boundary_gram[m][k];
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

/// Interior and boundary integrals for modes at 0-based positions `idx`.
/// Each entry accumulates over triangles in mesh order, independently of the
/// other entries, so diagonal values do not depend on which modes are present.
fn integrals(modes: &TransverseModeSet, idx: &[usize]) -> CouplingData {
    let mesh = modes.mesh();
    let n = idx.len();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; n]; n];
    let mut f = vec![[0.0; 3]; n];
    let mut u = vec![[0.0; 3]; n];
    for t in 0..mesh.triangles.len() {
        let (g, area) = p1_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let ry = tri.map(|v| rotate(mesh.vertices[v]));
        for (slot, &m) in idx.iter().enumerate() {
            let vals = &modes.mode_values[m];
            let uv = tri.map(|v| vals[v]);
            let grad = [
                uv[0] * g[0][0] + uv[1] * g[1][0] + uv[2] * g[2][0],
                uv[0] * g[0][1] + uv[1] * g[1][1] + uv[2] * g[2][1],
            ];
            u[slot] = uv;
            f[slot] = ry.map(|r| grad[0] * r[0] + grad[1] * r[1]);
        }
        for p in 0..n {
            for q in 0..n {
                a[p][q] += linear_product(area, &f[p], &u[q]);
                b[p][q] += linear_product(area, &f[p], &f[q]);
            }
        }
    }
    let mut gram = vec![vec![0.0; n]; n];
    for e in &mesh.boundary_edges {
        let [p, q] = e.nodes;
        let (yp, yq) = (mesh.vertices[p], mesh.vertices[q]);
        let ym = [0.5 * (yp[0] + yq[0]), 0.5 * (yp[1] + yq[1])];
        let flux = |y: [f64; 2]| {
            let r = rotate(y);
            r[0] * e.normal[0] + r[1] * e.normal[1]
        };
        let (wp, wm, wq) = (flux(yp), flux(ym), flux(yq));
        for (s, &m) in idx.iter().enumerate() {
            let um = &modes.mode_values[m];
            for (r, &k) in idx.iter().enumerate() {
                let uk = &modes.mode_values[k];
                let mid = 0.25 * (um[p] + um[q]) * (uk[p] + uk[q]);
                // Simpson's rule, exact for the cubic integrand
                gram[s][r] += e.length / 6.0
                    * (um[p] * uk[p] * wp + 4.0 * mid * wm + um[q] * uk[q] * wq);
            }
        }
    }
    CouplingData {
        modes: idx.iter().map(|&m| m + 1).collect(),
        c1: (0..n).map(|m| b[m][m]).collect(),
        c2: (0..n).map(|m| a[m][m]).collect(),
        a,
        b,
        boundary_gram: gram,
        h: mesh.h,
    }
}

/// Exact `∫_T f g` for linear `f`, `g` given by vertex values.
#[inline]
fn linear_product(area: f64, f: &[f64; 3], g: &[f64; 3]) -> f64 {
    let dot = f[0] * g[0] + f[1] * g[1] + f[2] * g[2];
    let sf = f[0] + f[1] + f[2];
    let sg = g[0] + g[1] + g[2];
    area / 12.0 * (dot + sf * sg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingConstants {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    /// `½ ∮ u_n² ⟨R y, ν⟩`
    pub c2_boundary: f64,
    pub warning: Option<String>,
}

/// `C1 = ∫ |⟨∇u_n, R y⟩|²` and `C2 = ∫ u_n ⟨∇u_n, R y⟩` for mode `n` (1-based).
pub fn coupling_constants(
    modes: &TransverseModeSet,
    n: usize,
    allow_degenerate: bool,
) -> Result<CouplingConstants> {
    modes.check_index(n)?;
    let mut warning = None;
    if modes.is_degenerate(n) {
        let lambda = modes.lambda(n);
        if !allow_degenerate {
            return Err(Error::DegenerateMode { index: n, lambda });
        }
        warning = Some(format!(
            "mode {n} (lambda = {lambda:.6e}) is degenerate; constants depend on the chosen eigenbasis"
        ));
    }
    let d = integrals(modes, &[n - 1]);
    let (c1, c2, c2_boundary) = (d.c1[0], d.c2[0], 0.5 * d.boundary_gram[0][0]);
    let limit = 10.0 * d.h;
    if (c2 - c2_boundary).abs() > limit {
        return Err(Error::Discretization(format!(
            "C2 interior {c2:.6e} and boundary {c2_boundary:.6e} differ by more than {limit:.3e}"
        )));
    }
    Ok(CouplingConstants {
        n,
        c1,
        c2,
        c2_boundary,
        warning,
    })
}

/// Coupling matrices over modes `1..=cutoff`.
pub fn coupling_matrices(modes: &TransverseModeSet, cutoff: usize) -> Result<CouplingData> {
    if cutoff == 0 || cutoff > modes.len() {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff} outside 1..={}",
            modes.len()
        )));
    }
    let idx: Vec<usize> = (0..cutoff).collect();
    Ok(integrals(modes, &idx))
}

/// Coupling matrices over the given 1-based mode numbers.
pub fn coupling_matrices_for(modes: &TransverseModeSet, numbers: &[usize]) -> Result<CouplingData> {
    for &n in numbers {
        modes.check_index(n)?;
    }
    let idx: Vec<usize> = numbers.iter().map(|n| n - 1).collect();
    Ok(integrals(modes, &idx))
}
