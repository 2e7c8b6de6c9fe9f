use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::scalar::{dot, norm, Scalar};
use super::sparse::CsrMatrix;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// `A v = λ B v` with `A` Hermitian and `B` Hermitian positive definite.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenProblem<T> {
    a: CsrMatrix<T>,
    b: CsrMatrix<T>,
    norm_a: f64,
    norm_b: f64,
}

impl<T: Scalar> GeneralizedEigenProblem<T> {
    pub fn new(a: CsrMatrix<T>, b: CsrMatrix<T>) -> Result<Self> {
        let dim = a.nrows();
        if dim == 0 {
            return Err(Error::InvalidInput("empty eigenproblem".into()));
        }
        for m in [&a, &b] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: if m.nrows() != dim { m.nrows() } else { m.ncols() },
                });
            }
        }
        for m in [&a, &b] {
            let defect = m.hermitian_defect();
            if !(defect < HERMITIAN_TOL) {
                return Err(Error::NotHermitian { defect });
            }
        }
        let quotient = pd_probe(&b);
        if !(quotient > 0.0) {
            return Err(Error::NotPositiveDefinite { quotient });
        }
        let norm_a = a.norm_inf();
        let norm_b = b.norm_inf();
        Ok(Self {
            a,
            b,
            norm_a,
            norm_b,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CsrMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &CsrMatrix<T> {
        &self.b
    }

    /// Normwise backward error `‖Av − λBv‖ / ((‖A‖ + |λ|‖B‖)‖v‖)`.
    pub fn residual(&self, lambda: f64, v: &[T]) -> f64 {
        let av = self.a.mul_vec(v);
        let bv = self.b.mul_vec(v);
        self.residual_from_products(lambda, v, &av, &bv)
    }

    fn residual_from_products(&self, lambda: f64, v: &[T], av: &[T], bv: &[T]) -> f64 {
        let r: f64 = av
            .iter()
            .zip(bv)
            .map(|(&x, &y)| (x - y.scale_by(lambda)).norm2())
            .sum::<f64>()
            .sqrt();
        let denom = (self.norm_a + lambda.abs() * self.norm_b) * norm(v);
        if denom == 0.0 {
            if r == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            r / denom
        }
    }
}

/// Smallest Rayleigh quotient of `B` over its diagonal and a fixed probe set.
fn pd_probe<T: Scalar>(b: &CsrMatrix<T>) -> f64 {
    let n = b.nrows();
    let mut worst = b.diag().iter().map(|d| d.re()).fold(f64::INFINITY, f64::min);
    let mut probes: Vec<Vec<T>> = vec![
        vec![T::from_re(1.0); n],
        (0..n)
            .map(|i| T::from_re(if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ n as u64);
    for _ in 0..4 {
        probes.push(random_vector(&mut rng, n));
    }
    for p in &probes {
        let q = b.form(p, p).re() / dot(p, p).re();
        worst = worst.min(q);
    }
    worst
}

fn random_vector<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.random_range(-1.0..1.0);
            if T::IS_COMPLEX {
                let im: f64 = rng.random_range(-1.0..1.0);
                T::from_re(re) + T::phase(std::f64::consts::FRAC_PI_2).scale_by(im)
            } else {
                T::from_re(re)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution<T> {
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors, one per value.
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<f64>,
}

impl<T> EigenSolution<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn empty() -> Self {
        Self {
            values: Vec::new(),
            vectors: Vec::new(),
            residuals: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Defaults to `500 * count`.
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iterations: None,
        }
    }
}

pub fn lowest_eigenpairs<T: Scalar>(
    problem: &GeneralizedEigenProblem<T>,
    count: usize,
    tol: f64,
) -> Result<EigenSolution<T>> {
    lowest_eigenpairs_with(
        problem,
        count,
        &SolverOptions {
            tol,
            max_iterations: None,
        },
    )
}

/// Shift-invert block subspace iteration with Rayleigh-Ritz extraction.
pub fn lowest_eigenpairs_with<T: Scalar>(
    problem: &GeneralizedEigenProblem<T>,
    count: usize,
    opts: &SolverOptions,
) -> Result<EigenSolution<T>> {
    let n = problem.dim();
    if count == 0 || count > n {
        return Err(Error::InvalidInput(format!(
            "requested {count} eigenpairs of a {n}-dimensional problem"
        )));
    }
    if !(opts.tol > 0.0 && opts.tol <= 1e-3) {
        return Err(Error::InvalidInput(format!(
            "tolerance {} outside (0, 1e-3]",
            opts.tol
        )));
    }
    let budget = opts.max_iterations.unwrap_or(500 * count).max(1);
    let p = n.min((2 * count).max(count + 8));

    let llt = factor_shifted(problem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let mut x: Vec<Vec<T>> = (0..p).map(|_| random_vector(&mut rng, n)).collect();

    let mut best: Option<Vec<f64>> = None;
    for _ in 0..budget {
        let w = shift_invert(&llt, &problem.b, &x);
        let (y, by) = b_orthonormalize(&problem.b, w, &mut rng);
        let ay: Vec<Vec<T>> = y.iter().map(|c| problem.a.mul_vec(c)).collect();

        let h = Mat::<T>::from_fn(p, p, |i, j| dot(&y[i], &ay[j]));
        let h = Mat::<T>::from_fn(p, p, |i, j| {
            (h[(i, j)] + h[(j, i)].conjugate()).scale_by(0.5)
        });
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Factorization(format!("dense eigensolver: {e:?}")))?;
        let z = evd.U();
        let theta: Vec<f64> = (0..p).map(|i| evd.S().column_vector()[i].re()).collect();

        let combine = |basis: &[Vec<T>]| -> Vec<Vec<T>> {
            (0..p)
                .map(|k| {
                    let mut out = vec![T::default(); n];
                    for (i, col) in basis.iter().enumerate() {
                        let c = z[(i, k)];
                        for (o, v) in out.iter_mut().zip(col) {
                            *o += *v * c;
                        }
                    }
                    out
                })
                .collect()
        };
        x = combine(&y);
        let ax = combine(&ay);
        let bx = combine(&by);

        let residuals: Vec<f64> = (0..count)
            .map(|k| problem.residual_from_products(theta[k], &x[k], &ax[k], &bx[k]))
            .collect();
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            return Ok(EigenSolution {
                values: theta[..count].to_vec(),
                vectors: x.into_iter().take(count).collect(),
                residuals,
            });
        }
        let improved = best
            .as_ref()
            .is_none_or(|b| worst < b.iter().copied().fold(0.0, f64::max));
        if improved {
            best = Some(residuals);
        }
    }
    Err(Error::NoConvergence {
        iterations: budget,
        residuals: best.unwrap_or_default(),
    })
}

/// Factors `A − σB` for the first `σ = −4^k` that makes it positive definite.
fn factor_shifted<T: Scalar>(problem: &GeneralizedEigenProblem<T>) -> Result<Llt<usize, T>> {
    let mut sigma = -1.0;
    for _ in 0..40 {
        let shifted = problem.a.lin_comb(1.0, &problem.b, -sigma)?;
        if let Ok(llt) = shifted.to_faer()?.sp_cholesky(Side::Lower) {
            return Ok(llt);
        }
        sigma *= 4.0;
    }
    Err(Error::Factorization(
        "no shift below the spectrum gave a positive definite matrix".into(),
    ))
}

fn shift_invert<T: Scalar>(llt: &Llt<usize, T>, b: &CsrMatrix<T>, x: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = b.nrows();
    let mut rhs = Mat::<T>::zeros(n, x.len());
    for (j, col) in x.iter().enumerate() {
        b.mul_vec_into(col, rhs.col_as_slice_mut(j));
    }
    llt.solve_in_place(rhs.as_mut());
    (0..x.len()).map(|j| rhs.col_as_slice(j).to_vec()).collect()
}

/// Two-pass modified Gram-Schmidt in the B inner product. Columns that
/// collapse are replaced by fresh deterministic vectors.
fn b_orthonormalize<T: Scalar>(
    b: &CsrMatrix<T>,
    mut w: Vec<Vec<T>>,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let n = b.nrows();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(w.len());
    let mut bq: Vec<Vec<T>> = Vec::with_capacity(w.len());
    for col in w.iter_mut() {
        let mut attempts = 0;
        loop {
            let before = dot(col, &b.mul_vec(col)).re().max(0.0).sqrt();
            for _ in 0..2 {
                for (qi, bqi) in q.iter().zip(&bq) {
                    let c = dot(bqi, col);
                    for (v, u) in col.iter_mut().zip(qi) {
                        *v -= *u * c;
                    }
                }
            }
            let bc = b.mul_vec(col);
            let after = dot(col, &bc).re().max(0.0).sqrt();
            if after > 1e-10 * before && after > 0.0 && attempts < 8 {
                let s = 1.0 / after;
                q.push(col.iter().map(|v| v.scale_by(s)).collect());
                bq.push(bc.iter().map(|v| v.scale_by(s)).collect());
                break;
            }
            attempts += 1;
            if attempts >= 8 {
                // degenerate input; keep the column as is rather than loop
                let s = if after > 0.0 { 1.0 / after } else { 1.0 };
                q.push(col.iter().map(|v| v.scale_by(s)).collect());
                bq.push(bc.iter().map(|v| v.scale_by(s)).collect());
                break;
            }
            *col = random_vector(rng, n);
        }
    }
    (q, bq)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub residuals: Vec<f64>,
    /// `max |vᵢᴴ B vⱼ − δᵢⱼ|`
    pub orthonormality_defect: f64,
    pub violations: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_solution<T: Scalar>(
    problem: &GeneralizedEigenProblem<T>,
    solution: &EigenSolution<T>,
    tol: f64,
) -> Result<VerificationReport> {
    let n = problem.dim();
    let k = solution.values.len();
    if solution.vectors.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: solution.vectors.len(),
        });
    }
    if let Some(v) = solution.vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let mut violations = Vec::new();
    let residuals: Vec<f64> = solution
        .values
        .iter()
        .zip(&solution.vectors)
        .map(|(&l, v)| problem.residual(l, v))
        .collect();
    for (i, &r) in residuals.iter().enumerate() {
        if !(r <= tol) {
            violations.push(format!("pair {i}: residual {r:.3e} above {tol:.1e}"));
        }
    }
    for i in 1..k {
        if solution.values[i] < solution.values[i - 1] {
            violations.push(format!("values {} and {i} out of order", i - 1));
        }
    }
    let bv: Vec<Vec<T>> = solution.vectors.iter().map(|v| problem.b.mul_vec(v)).collect();
    let mut defect = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let g = dot(&solution.vectors[i], &bv[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((g - T::from_re(target)).modulus());
        }
    }
    if defect > ORTHONORMALITY_TOL {
        violations.push(format!("B-orthonormality defect {defect:.3e}"));
    }
    Ok(VerificationReport {
        residuals,
        orthonormality_defect: defect,
        violations,
    })
}
