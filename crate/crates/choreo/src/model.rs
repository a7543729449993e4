//! Shared domain types: force laws, mass vectors, space descriptors and
//! numeric tolerances.
//!
//! A force law is a finite positive sum of inverse power terms of the
//! squared separation, `f(x) = Σ cᵢ·x^(−eᵢ)`. The admissible class requires
//! `√x·f(x)` strictly decreasing, which for power sums is exactly
//! `eᵢ ≥ 1/2` with at least one strict inequality. The classical
//! gravitational law is the single term `(1, 3/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};

/// Bounds of the log-spaced grid on which `√x·f(x)` monotonicity is
/// double-checked numerically.
const MONOTONE_GRID_LO: f64 = 1e-6;
const MONOTONE_GRID_HI: f64 = 1e6;
const MONOTONE_GRID_POINTS: usize = 256;

/// `f(x) = Σ cᵢ·x^(−eᵢ)` acting on squared separations `x > 0`.
///
/// Serialized as a JSON array of `[coefficient, exponent]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ForceLaw {
    terms: Vec<(f64, f64)>,
}

impl ForceLaw {
    /// Builds and validates a force law from `(coefficient, exponent)` terms.
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        let law = ForceLaw { terms };
        law.validate()?;
        Ok(law)
    }

    /// The classical law `f(x) = x^(−3/2)`, i.e. inverse-square attraction
    /// in terms of the separation itself.
    pub fn classical() -> Self {
        ForceLaw { terms: vec![(1.0, 1.5)] }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// Evaluates `f` at a squared separation `x > 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(ChoreoError::NonPositiveSeparation(x));
        }
        Ok(self.eval_unchecked(x))
    }

    /// As [`eval`](Self::eval) but without the domain check; callers must
    /// guarantee `x > 0`.
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * x.powf(-e)).sum()
    }

    /// Accepts iff every coefficient is positive and the exponent rule for
    /// strict decrease of `√x·f(x)` holds (`eᵢ ≥ 1/2`, at least one strict),
    /// then confirms the decrease numerically on a log-spaced grid over
    /// `[10⁻⁶, 10⁶]`.
    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(ChoreoError::InvalidForceLaw("no terms".into()));
        }
        let mut any_strict = false;
        for (idx, &(c, e)) in self.terms.iter().enumerate() {
            if !c.is_finite() || c <= 0.0 {
                return Err(ChoreoError::InvalidForceLaw(format!(
                    "term {idx} has non-positive coefficient {c}"
                )));
            }
            if !e.is_finite() || e < 0.5 {
                return Err(ChoreoError::InvalidForceLaw(format!(
                    "term {idx} has exponent {e} < 1/2, so sqrt(x)*f(x) is not decreasing"
                )));
            }
            if e > 0.5 {
                any_strict = true;
            }
        }
        if !any_strict {
            return Err(ChoreoError::InvalidForceLaw(
                "all exponents equal 1/2, so sqrt(x)*f(x) is constant, not decreasing".into(),
            ));
        }
        // Numerical double check of the closed-form rule.
        let ratio = (MONOTONE_GRID_HI / MONOTONE_GRID_LO).powf(1.0 / (MONOTONE_GRID_POINTS - 1) as f64);
        let mut x = MONOTONE_GRID_LO;
        let mut prev = x.sqrt() * self.eval_unchecked(x);
        for i in 1..MONOTONE_GRID_POINTS {
            x *= ratio;
            let cur = x.sqrt() * self.eval_unchecked(x);
            if cur >= prev {
                return Err(ChoreoError::InvalidForceLaw(format!(
                    "sqrt(x)*f(x) fails to decrease between grid points {} and {} (x = {x:e})",
                    i - 1,
                    i
                )));
            }
            prev = cur;
        }
        Ok(())
    }

    /// Pair potential `F` with `f = −2F′`, so that the flat equations of
    /// motion are the Euler–Lagrange equations of
    /// `Σ ½mₖ‖q̇ₖ‖² + Σ_{j<k} mⱼmₖ F(‖qⱼ−qₖ‖²)`.
    ///
    /// For a term `c·x^(−e)` the primitive is `c·x^(1−e)/(2(e−1))`; the
    /// logarithmic case `e = 1` is excluded.
    pub fn pair_potential(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(ChoreoError::NonPositiveSeparation(x));
        }
        let mut total = 0.0;
        for &(c, e) in &self.terms {
            if (e - 1.0).abs() < 1e-14 {
                return Err(ChoreoError::InvalidForceLaw(
                    "exponent 1 has a logarithmic primitive, which is excluded".into(),
                ));
            }
            total += c * x.powf(1.0 - e) / (2.0 * (e - 1.0));
        }
        Ok(total)
    }

    /// Scales every coefficient by `s > 0`. Scaling preserves validity and is
    /// how constructors absorb the time rescaling to the unit-spacing normal
    /// form while keeping unit masses.
    pub fn scaled(&self, s: f64) -> Self {
        ForceLaw {
            terms: self.terms.iter().map(|&(c, e)| (c * s, e)).collect(),
        }
    }
}

impl TryFrom<Vec<(f64, f64)>> for ForceLaw {
    type Error = ChoreoError;

    fn try_from(terms: Vec<(f64, f64)>) -> Result<Self> {
        ForceLaw::new(terms)
    }
}

impl From<ForceLaw> for Vec<(f64, f64)> {
    fn from(law: ForceLaw) -> Self {
        law.terms
    }
}

/// Positive masses `m₀..m_{n−1}` with cyclic index extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassVector {
    m: Vec<f64>,
}

impl MassVector {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.is_empty() {
            return Err(ChoreoError::InvalidMasses("empty mass vector".into()));
        }
        for (i, &mi) in m.iter().enumerate() {
            if !mi.is_finite() || mi <= 0.0 {
                return Err(ChoreoError::InvalidMasses(format!("mass {i} is {mi}, must be positive")));
            }
        }
        Ok(MassVector { m })
    }

    /// `n` equal masses of the given value.
    pub fn equal(n: usize, value: f64) -> Result<Self> {
        MassVector::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.m
    }

    /// Total mass `M`.
    pub fn total(&self) -> f64 {
        self.m.iter().sum()
    }

    /// Cyclic lookup `m_k` for any integer `k`, including negatives.
    pub fn cyclic(&self, k: isize) -> f64 {
        let n = self.m.len() as isize;
        self.m[(((k % n) + n) % n) as usize]
    }

    /// Deviations from the mean, `(m₀ − M/n, …, m_{n−1} − M/n)`. The masses
    /// are equal exactly when this vector vanishes.
    pub fn deviations(&self) -> Vec<f64> {
        let mean = self.total() / self.m.len() as f64;
        self.m.iter().map(|&mi| mi - mean).collect()
    }

    /// Cyclic up-shift by `k`: entry `j` of the result is `m_{j+k}`.
    pub fn shifted(&self, k: isize) -> Self {
        let n = self.m.len();
        MassVector {
            m: (0..n).map(|j| self.cyclic(j as isize + k)).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for MassVector {
    type Error = ChoreoError;

    fn try_from(m: Vec<f64>) -> Result<Self> {
        MassVector::new(m)
    }
}

impl From<MassVector> for Vec<f64> {
    fn from(mv: MassVector) -> Self {
        mv.m
    }
}

/// Sign of the constant Gaussian curvature: the sphere (`σ = +1`) or the
/// upper sheet of the hyperboloid (`σ = −1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Curvature {
    Positive,
    Negative,
}

impl Curvature {
    pub fn sign(self) -> f64 {
        match self {
            Curvature::Positive => 1.0,
            Curvature::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Curvature {
    type Error = ChoreoError;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Curvature::Positive),
            -1 => Ok(Curvature::Negative),
            other => Err(ChoreoError::InvalidSpace(format!("sigma must be +1 or -1, got {other}"))),
        }
    }
}

impl From<Curvature> for i8 {
    fn from(c: Curvature) -> i8 {
        match c {
            Curvature::Positive => 1,
            Curvature::Negative => -1,
        }
    }
}

/// Ambient space of the problem: flat `ℝ^d`, or the curved surface
/// `x₁² + x₂² + σx₃² = σ` inside `ℝ³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Space {
    Flat { dim: usize },
    Curved { sigma: Curvature },
}

impl Space {
    pub fn validate(&self) -> Result<()> {
        match self {
            Space::Flat { dim } if *dim == 0 => {
                Err(ChoreoError::InvalidSpace("flat dimension must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Ambient coordinate dimension: `d` for flat space, 3 for curved.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Space::Flat { dim } => *dim,
            Space::Curved { .. } => 3,
        }
    }

    pub fn is_curved(&self) -> bool {
        matches!(self, Space::Curved { .. })
    }

    pub fn curvature(&self) -> Option<Curvature> {
        match self {
            Space::Flat { .. } => None,
            Space::Curved { sigma } => Some(*sigma),
        }
    }
}

/// The σ-signed inner product `x⊙y = x₁y₁ + x₂y₂ + σx₃y₃` on `ℝ³`.
pub fn sigma_dot(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    debug_assert!(a.len() == 3 && b.len() == 3);
    a[0] * b[0] + a[1] * b[1] + sigma * a[2] * b[2]
}

/// Deviation of a point from the curved-surface constraint, `q⊙q − σ`.
pub fn constraint_defect(q: &[f64], sigma: f64) -> f64 {
    sigma_dot(q, q, sigma) - sigma
}

/// Checks `q⊙q = σ` within `tol`, and `x₃ > 0` for the hyperboloid.
pub fn on_manifold(q: &[f64], sigma: f64, tol: f64) -> bool {
    let ok_sheet = sigma > 0.0 || q[2] > 0.0;
    ok_sheet && constraint_defect(q, sigma).abs() <= tol
}

/// Numeric thresholds used throughout the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank and nullspace decisions.
    pub rank_rel: f64,
    /// Absolute residual threshold below which a sampled identity or
    /// equation-of-motion residual counts as satisfied.
    pub residual_abs: f64,
    /// Permitted drift from the curved-surface constraint.
    pub constraint_abs: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(ChoreoError::InvalidTolerances(format!("{name} must be positive, got {v}")));
            }
            Ok(())
        };
        check("rank_rel", self.rank_rel)?;
        check("residual_abs", self.residual_abs)?;
        check("constraint_abs", self.constraint_abs)?;
        if self.rank_rel >= 1.0 {
            return Err(ChoreoError::InvalidTolerances(format!(
                "rank_rel must be below 1, got {}",
                self.rank_rel
            )));
        }
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            // max(1e-8, 1e3 * machine epsilon) = 1e-8 for f64.
            rank_rel: (1e3 * f64::EPSILON).max(1e-8),
            residual_abs: 1e-8,
            constraint_abs: 1e-8,
        }
    }
}
