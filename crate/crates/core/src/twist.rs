//! Twist angle profiles with exact derivatives, the effective potentials they
//! induce, and Fourier data of periodic potentials.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PERIODIC_POINTS: usize = 1024;
pub const DEFAULT_INTERVAL_POINTS: usize = 2048;
const ALPHA_A_TOL: f64 = 1e-12;
const PERIODICITY_TOL: f64 = 1e-10;
const PROBE_POINTS: usize = 64;

/// One term `sin·sin(2π f s / P) + cos·cos(2π f s / P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub freq: u32,
    #[serde(default)]
    pub sin: f64,
    #[serde(default)]
    pub cos: f64,
}

/// Structured profile description, as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TwistSpec {
    Periodic {
        #[serde(rename = "L")]
        period: f64,
        trig: Vec<TrigTerm>,
    },
    /// Either `poly` (coefficients of `1, s, s², …`) or `trig` with an
    /// explicit `period`.
    Interval {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        poly: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trig: Option<Vec<TrigTerm>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Periodic { period: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Polynomial(Vec<f64>),
    Trig { period: f64, terms: Vec<TrigTerm> },
}

impl Law {
    fn eval(&self, s: f64, order: u32) -> f64 {
        match self {
            Law::Polynomial(c) => {
                // Horner on the differentiated coefficients
                let mut acc = 0.0;
                for k in (order as usize..c.len()).rev() {
                    let falling: f64 = (0..order as usize).map(|i| (k - i) as f64).product();
                    acc = acc * s + falling * c[k];
                }
                acc
            }
            Law::Trig { period, terms } => {
                let mut acc = 0.0;
                for t in terms {
                    let w = TAU * t.freq as f64 / period;
                    let (sn, cs) = (w * s).sin_cos();
                    let wk = w.powi(order as i32);
                    acc += wk
                        * match order % 4 {
                            0 => t.sin * sn + t.cos * cs,
                            1 => t.sin * cs - t.cos * sn,
                            2 => -t.sin * sn - t.cos * cs,
                            _ => -t.sin * cs + t.cos * sn,
                        };
                }
                acc
            }
        }
    }

    fn scaled(&self, gamma: f64) -> Law {
        match self {
            Law::Polynomial(c) => Law::Polynomial(c.iter().map(|x| gamma * x).collect()),
            Law::Trig { period, terms } => Law::Trig {
                period: *period,
                terms: terms
                    .iter()
                    .map(|t| TrigTerm {
                        freq: t.freq,
                        sin: gamma * t.sin,
                        cos: gamma * t.cos,
                    })
                    .collect(),
            },
        }
    }
}

/// Twist angle `α` on an interval or a period cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistProfile {
    domain: Domain,
    law: Law,
    description: String,
}

pub fn make_twist(spec: &TwistSpec) -> Result<TwistProfile> {
    let (domain, law) = match spec {
        TwistSpec::Periodic { period, trig } => {
            if !(period.is_finite() && *period > 0.0) {
                return Err(Error::InvalidInput(format!("period {period}")));
            }
            check_terms(trig)?;
            (
                Domain::Periodic { period: *period },
                Law::Trig {
                    period: *period,
                    terms: trig.clone(),
                },
            )
        }
        TwistSpec::Interval {
            a,
            b,
            poly,
            trig,
            period,
        } => {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidInput(format!("interval ({a}, {b})")));
            }
            let law = match (poly, trig) {
                (Some(c), None) => {
                    if c.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidInput("non-finite coefficient".into()));
                    }
                    Law::Polynomial(c.clone())
                }
                (None, Some(t)) => {
                    let p = period.ok_or_else(|| {
                        Error::InvalidInput("trigonometric interval profile needs a period".into())
                    })?;
                    if !(p.is_finite() && p > 0.0) {
                        return Err(Error::InvalidInput(format!("period {p}")));
                    }
                    check_terms(t)?;
                    Law::Trig {
                        period: p,
                        terms: t.clone(),
                    }
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "interval profile needs exactly one of poly or trig".into(),
                    ))
                }
            };
            let at_a = law.eval(*a, 0);
            if at_a.abs() > ALPHA_A_TOL {
                return Err(Error::Constraint {
                    what: format!("alpha(a) = 0 at a = {a}"),
                    value: at_a,
                });
            }
            (Domain::Interval { a: *a, b: *b }, law)
        }
    };
    let profile = TwistProfile {
        domain,
        law,
        description: describe(spec),
    };
    profile.check_invariants()?;
    Ok(profile)
}

fn check_terms(terms: &[TrigTerm]) -> Result<()> {
    if terms.iter().any(|t| !(t.sin.is_finite() && t.cos.is_finite())) {
        return Err(Error::InvalidInput("non-finite trigonometric coefficient".into()));
    }
    Ok(())
}

fn describe(spec: &TwistSpec) -> String {
    serde_json::to_string(spec).unwrap_or_else(|_| format!("{spec:?}"))
}

impl TwistProfile {
    pub fn alpha(&self, s: f64) -> f64 {
        self.law.eval(s, 0)
    }

    pub fn dalpha(&self, s: f64) -> f64 {
        self.law.eval(s, 1)
    }

    pub fn ddalpha(&self, s: f64) -> f64 {
        self.law.eval(s, 2)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn period(&self) -> Option<f64> {
        match self.domain {
            Domain::Periodic { period } => Some(period),
            Domain::Interval { .. } => None,
        }
    }

    /// `(start, end)` of the interval or of the period cell `[0, L]`.
    pub fn extent(&self) -> (f64, f64) {
        match self.domain {
            Domain::Interval { a, b } => (a, b),
            Domain::Periodic { period } => (0.0, period),
        }
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// The profile `γ α`.
    pub fn scaled(&self, gamma: f64) -> TwistProfile {
        TwistProfile {
            domain: self.domain,
            law: self.law.scaled(gamma),
            description: format!("{gamma} * {}", self.description),
        }
    }

    /// Largest defects of the periodicity probe and of centred differences
    /// against the analytic first and second derivatives.
    pub fn consistency_defects(&self) -> ConsistencyDefects {
        let (s0, s1) = self.extent();
        let len = s1 - s0;
        let probe = |i: usize| s0 + len * (i as f64 + 0.5) / PROBE_POINTS as f64;
        let periodicity = match self.domain {
            Domain::Periodic { period } => (0..PROBE_POINTS)
                .map(|i| (self.alpha(probe(i) + period) - self.alpha(probe(i))).abs())
                .fold(0.0, f64::max),
            Domain::Interval { .. } => 0.0,
        };
        let d = 1e-4 * len;
        let (mut first, mut second) = (0.0f64, 0.0f64);
        for i in 0..PROBE_POINTS {
            let s = probe(i);
            let (m, c, p) = (self.alpha(s - d), self.alpha(s), self.alpha(s + d));
            first = first.max(((p - m) / (2.0 * d) - self.dalpha(s)).abs());
            second = second.max(((p - 2.0 * c + m) / (d * d) - self.ddalpha(s)).abs());
        }
        ConsistencyDefects {
            periodicity,
            first_derivative: first,
            second_derivative: second,
            step: d,
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let c = self.consistency_defects();
        if c.periodicity >= PERIODICITY_TOL {
            return Err(Error::Constraint {
                what: "periodicity alpha(s + L) = alpha(s)".into(),
                value: c.periodicity,
            });
        }
        let (s0, s1) = self.extent();
        let scale = (0..=PROBE_POINTS)
            .map(|i| {
                let s = s0 + (s1 - s0) * i as f64 / PROBE_POINTS as f64;
                self.alpha(s).abs() + self.dalpha(s).abs() + self.ddalpha(s).abs()
            })
            .fold(1.0, f64::max);
        // loose bound: O(step²) truncation plus rounding, relative to the profile scale
        let tol = 1e-4 * scale;
        if c.first_derivative > tol || c.second_derivative > tol {
            return Err(Error::Constraint {
                what: "finite-difference consistency of derivatives".into(),
                value: c.first_derivative.max(c.second_derivative),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyDefects {
    pub periodicity: f64,
    pub first_derivative: f64,
    pub second_derivative: f64,
    pub step: f64,
}

/// Uniform grid. Periodic grids cover `[start, start + L)` without the end
/// point; interval grids include both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
    pub period: Option<f64>,
}

impl UniformGrid {
    pub fn interval(a: f64, b: f64, len: usize) -> Result<Self> {
        if len < 2 || !(b > a) {
            return Err(Error::InvalidInput(format!(
                "interval grid ({a}, {b}) with {len} points"
            )));
        }
        Ok(Self {
            start: a,
            step: (b - a) / (len - 1) as f64,
            len,
            period: None,
        })
    }

    pub fn periodic(period: f64, len: usize) -> Result<Self> {
        if len < 1 || !(period > 0.0) {
            return Err(Error::InvalidInput(format!(
                "periodic grid of period {period} with {len} points"
            )));
        }
        Ok(Self {
            start: 0.0,
            step: period / len as f64,
            len,
            period: Some(period),
        })
    }

    /// Default grid for a profile: 1024 per period or 2048 on an interval.
    pub fn default_for(profile: &TwistProfile) -> Self {
        match profile.domain() {
            Domain::Periodic { period } => Self::periodic(period, DEFAULT_PERIODIC_POINTS).unwrap(),
            Domain::Interval { a, b } => Self::interval(a, b, DEFAULT_INTERVAL_POINTS).unwrap(),
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn end(&self) -> f64 {
        match self.period {
            Some(p) => self.start + p,
            None => self.point(self.len - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PotentialKind {
    /// `C1 α'² − C2 α''`
    V,
    /// `C1 α'²`
    W,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub c1: f64,
    pub c2: Option<f64>,
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledPotential {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
    pub kind: PotentialKind,
    pub provenance: Provenance,
}

impl SampledPotential {
    pub fn period(&self) -> Option<f64> {
        self.grid.period
    }

    /// Trapezoidal mean over the grid.
    pub fn mean(&self) -> f64 {
        let v = &self.values;
        match self.grid.period {
            Some(_) => v.iter().sum::<f64>() / v.len() as f64,
            None => {
                let n = v.len();
                let inner: f64 = v[1..n - 1].iter().sum();
                (inner + 0.5 * (v[0] + v[n - 1])) / (n - 1) as f64
            }
        }
    }

    /// The potential multiplied by a constant, keeping the grid.
    pub fn scaled(&self, factor: f64) -> SampledPotential {
        SampledPotential {
            values: self.values.iter().map(|v| factor * v).collect(),
            ..self.clone()
        }
    }
}

/// `C1 a'² − C2 a''`; shared by every assembly that evaluates the potential.
#[inline]
pub fn potential_value(c1: f64, c2: f64, dalpha: f64, ddalpha: f64) -> f64 {
    c1 * dalpha * dalpha - c2 * ddalpha
}

fn check_grid(profile: &TwistProfile, grid: &UniformGrid) -> Result<()> {
    if !grid.values_finite() {
        return Err(Error::InvalidInput("non-finite grid".into()));
    }
    match (profile.domain(), grid.period) {
        (Domain::Interval { a, b }, None) => {
            let tol = 1e-12 * (b - a);
            if grid.start < a - tol || grid.end() > b + tol {
                return Err(Error::InvalidInput(format!(
                    "grid [{}, {}] leaves the profile interval ({a}, {b})",
                    grid.start,
                    grid.end()
                )));
            }
        }
        (Domain::Periodic { period }, Some(p)) => {
            if (p - period).abs() > 1e-12 * period {
                return Err(Error::InvalidInput(format!(
                    "grid period {p} differs from the profile period {period}"
                )));
            }
        }
        (Domain::Periodic { .. }, None) => {}
        (Domain::Interval { .. }, Some(_)) => {
            return Err(Error::InvalidInput(
                "periodic grid on an interval profile".into(),
            ))
        }
    }
    Ok(())
}

impl UniformGrid {
    fn values_finite(&self) -> bool {
        self.start.is_finite() && self.step.is_finite() && self.step > 0.0
    }
}

/// `V(s) = C1 α'(s)² − C2 α''(s)` sampled on `grid`.
pub fn effective_potential(
    profile: &TwistProfile,
    c1: f64,
    c2: f64,
    grid: &UniformGrid,
) -> Result<SampledPotential> {
    check_grid(profile, grid)?;
    let values = grid
        .points()
        .into_iter()
        .map(|s| potential_value(c1, c2, profile.dalpha(s), profile.ddalpha(s)))
        .collect();
    Ok(SampledPotential {
        grid: *grid,
        values,
        kind: PotentialKind::V,
        provenance: Provenance {
            c1,
            c2: Some(c2),
            profile: profile.description().to_string(),
        },
    })
}

/// `W(s) = C1 α'(s)²` sampled on `grid`.
pub fn w_potential(profile: &TwistProfile, c1: f64, grid: &UniformGrid) -> Result<SampledPotential> {
    check_grid(profile, grid)?;
    let values = grid
        .points()
        .into_iter()
        .map(|s| potential_value(c1, 0.0, profile.dalpha(s), 0.0))
        .collect();
    Ok(SampledPotential {
        grid: *grid,
        values,
        kind: PotentialKind::W,
        provenance: Provenance {
            c1,
            c2: None,
            profile: profile.description().to_string(),
        },
    })
}

/// `w^j` for `j = −jmax..=jmax` under `W(s) = Σ L^{-1/2} w^j e^{2πijs/L}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierCoefficients {
    pub period: f64,
    pub jmax: usize,
    /// Entry `j + jmax` holds `w^j`.
    pub coeffs: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn get(&self, j: i64) -> Complex64 {
        self.coeffs[(j + self.jmax as i64) as usize]
    }

    /// `max |w^{-j} − conj(w^j)|`
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        (0..=self.jmax as i64)
            .map(|j| (self.get(-j) - self.get(j).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Trapezoidal (spectrally exact for band-limited data) transform of a
/// periodic sampled potential.
pub fn fourier_coefficients(potential: &SampledPotential, jmax: usize) -> Result<FourierCoefficients> {
    let period = potential.period().ok_or_else(|| {
        Error::InvalidInput("Fourier coefficients need a periodic potential".into())
    })?;
    let n = potential.values.len();
    let g = potential.grid;
    if g.len != n || (g.step * n as f64 - period).abs() > 1e-12 * period {
        return Err(Error::InvalidInput(
            "potential grid is not a uniform covering of one period".into(),
        ));
    }
    if !n.is_power_of_two() || n < 4 * jmax.max(1) {
        return Err(Error::InvalidInput(format!(
            "{n} samples; need a power of two of at least 4 * jmax = {}",
            4 * jmax.max(1)
        )));
    }
    let scale = period.sqrt() / n as f64;
    let coeffs = (-(jmax as i64)..=jmax as i64)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &w) in potential.values.iter().enumerate() {
                // integer phase index keeps the exponent exact modulo n
                let k = (j * i as i64).rem_euclid(n as i64) as f64;
                let phi = -TAU * k / n as f64;
                acc += Complex64::new(phi.cos(), phi.sin()) * w;
            }
            acc * scale
        })
        .collect();
    Ok(FourierCoefficients {
        period,
        jmax,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(period: f64) -> TwistProfile {
        make_twist(&TwistSpec::Periodic {
            period,
            trig: vec![TrigTerm {
                freq: 1,
                sin: 1.0,
                cos: 0.0,
            }],
        })
        .unwrap()
    }

    #[test]
    fn linear_polynomial() {
        let p = make_twist(&TwistSpec::Interval {
            a: 0.0,
            b: 2.0,
            poly: Some(vec![0.0, 0.75]),
            trig: None,
            period: None,
        })
        .unwrap();
        for s in [0.0, 0.3, 1.9] {
            assert_eq!(p.dalpha(s), 0.75);
            assert_eq!(p.ddalpha(s), 0.0);
        }
    }

    #[test]
    fn shifted_linear_polynomial() {
        // α = c (s − a) written in powers of s
        let (a, c) = (1.5, -0.4);
        let p = make_twist(&TwistSpec::Interval {
            a,
            b: 3.0,
            poly: Some(vec![-c * a, c]),
            trig: None,
            period: None,
        })
        .unwrap();
        assert_eq!(p.alpha(a), 0.0);
        assert_eq!(p.dalpha(2.2), c);
    }

    #[test]
    fn cubic_derivatives() {
        let p = make_twist(&TwistSpec::Interval {
            a: 0.0,
            b: 1.0,
            poly: Some(vec![0.0, 1.0, -2.0, 3.0]),
            trig: None,
            period: None,
        })
        .unwrap();
        let s = 0.7;
        assert!((p.alpha(s) - (s - 2.0 * s * s + 3.0 * s * s * s)).abs() < 1e-15);
        assert!((p.dalpha(s) - (1.0 - 4.0 * s + 9.0 * s * s)).abs() < 1e-14);
        assert!((p.ddalpha(s) - (-4.0 + 18.0 * s)).abs() < 1e-14);
    }

    #[test]
    fn sine_derivatives_at_zero() {
        let l = 2.5;
        let p = sine(l);
        assert!((p.dalpha(0.0) - TAU / l).abs() < 1e-15);
        assert_eq!(p.ddalpha(0.0), 0.0);
    }

    #[test]
    fn alpha_a_constraint() {
        let err = make_twist(&TwistSpec::Interval {
            a: 0.0,
            b: 1.0,
            poly: Some(vec![0.1, 1.0]),
            trig: None,
            period: None,
        })
        .unwrap_err();
        match err {
            Error::Constraint { value, .. } => assert_eq!(value, 0.1),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(make_twist(&TwistSpec::Periodic {
            period: 0.0,
            trig: vec![]
        })
        .is_err());
        assert!(make_twist(&TwistSpec::Interval {
            a: 0.0,
            b: 1.0,
            poly: None,
            trig: Some(vec![TrigTerm { freq: 1, sin: 1.0, cos: 0.0 }]),
            period: None,
        })
        .is_err());
        // cos term violates α(a) = 0
        assert!(make_twist(&TwistSpec::Interval {
            a: 0.0,
            b: 1.0,
            poly: None,
            trig: Some(vec![TrigTerm { freq: 1, sin: 0.0, cos: 1.0 }]),
            period: Some(1.0),
        })
        .is_err());
    }

    #[test]
    fn json_specs() {
        let p: TwistSpec = serde_json::from_str(
            r#"{"kind":"periodic","L":1.0,"trig":[{"freq":1,"sin":1.0,"cos":0.0}]}"#,
        )
        .unwrap();
        assert!(matches!(p, TwistSpec::Periodic { period, .. } if period == 1.0));
        let i: TwistSpec =
            serde_json::from_str(r#"{"kind":"interval","a":0.0,"b":1.0,"poly":[0.0,0.5]}"#).unwrap();
        let prof = make_twist(&i).unwrap();
        assert_eq!(prof.dalpha(0.3), 0.5);
    }

    #[test]
    fn potentials_closed_forms() {
        let p = sine(1.0);
        let g = UniformGrid::default_for(&p);
        let v = effective_potential(&p, 0.40301, 0.0, &g).unwrap();
        assert!((v.values[0] - 0.40301 * 4.0 * PI * PI).abs() < 1e-12);
        // 0.40301 * 4π² = 15.9102; the rounded figure 15.914 agrees to 3e-4 relative
        assert!((v.values[0] - 15.914).abs() < 1e-3 * 15.914);
        let w = w_potential(&p, 1.0, &g).unwrap();
        assert!((w.mean() - 2.0 * PI * PI).abs() < 1e-12);
        assert!(w.values.iter().all(|&x| x >= 0.0));
        let zero = effective_potential(&p, 0.0, 0.0, &g).unwrap();
        assert!(zero.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fourier_of_cosine_and_constant() {
        let l = 2.0;
        let grid = UniformGrid::periodic(l, 64).unwrap();
        let mk = |values: Vec<f64>| SampledPotential {
            grid,
            values,
            kind: PotentialKind::W,
            provenance: Provenance {
                c1: 1.0,
                c2: None,
                profile: String::new(),
            },
        };
        let c = fourier_coefficients(&mk(vec![3.0; 64]), 8).unwrap();
        assert!((c.get(0).re - 3.0 * l.sqrt()).abs() < 1e-12);
        for j in 1..=8 {
            assert!(c.get(j).norm() < 1e-12 && c.get(-j).norm() < 1e-12);
        }
        let cosine: Vec<f64> = grid.points().iter().map(|s| (TAU * s / l).cos()).collect();
        let c = fourier_coefficients(&mk(cosine), 8).unwrap();
        for j in [-1, 1] {
            assert!((c.get(j) - Complex64::new(l.sqrt() / 2.0, 0.0)).norm() < 1e-12);
        }
        assert!(c.get(0).norm() < 1e-12 && c.get(2).norm() < 1e-12);
        assert!(c.conjugate_symmetry_defect() < 1e-12);
    }

    #[test]
    fn fourier_preconditions() {
        let grid = UniformGrid::periodic(1.0, 48).unwrap();
        let pot = SampledPotential {
            grid,
            values: vec![0.0; 48],
            kind: PotentialKind::W,
            provenance: Provenance {
                c1: 0.0,
                c2: None,
                profile: String::new(),
            },
        };
        assert!(fourier_coefficients(&pot, 2).is_err());
        let interval = SampledPotential {
            grid: UniformGrid::interval(0.0, 1.0, 64).unwrap(),
            values: vec![0.0; 64],
            ..pot
        };
        assert!(fourier_coefficients(&interval, 2).is_err());
    }
}
