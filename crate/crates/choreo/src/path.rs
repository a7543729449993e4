//! Truncated Fourier loops with analytic derivatives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};

/// Coefficients of one coordinate: `a0 + Σ_m a_m cos(2πmt/P) + b_m sin(2πmt/P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSeries(pub f64, pub Vec<f64>, pub Vec<f64>);

impl DimSeries {
    pub fn zero(order: usize) -> Self {
        DimSeries(0.0, vec![0.0; order], vec![0.0; order])
    }
}

/// A closed curve `p(t)` of exact period `period`, one truncated Fourier
/// series per ambient coordinate. Derivatives are taken term by term, never
/// by finite differencing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathRepr", into = "PathRepr")]
pub struct FourierPath {
    dim: usize,
    period: f64,
    coeffs: Vec<DimSeries>,
}

/// On-disk shape `{dim, period, order, coeffs: [[a0, [a_m...], [b_m...]], ...]}`.
#[derive(Serialize, Deserialize)]
struct PathRepr {
    dim: usize,
    period: f64,
    order: usize,
    coeffs: Vec<DimSeries>,
}

impl FourierPath {
    pub fn new(dim: usize, period: f64, coeffs: Vec<DimSeries>) -> Result<Self> {
        if dim == 0 {
            return Err(ChoreoError::Contract("path dimension must be positive".into()));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(ChoreoError::Contract(format!("path period must be positive, got {period}")));
        }
        if coeffs.len() != dim {
            return Err(ChoreoError::Contract(format!(
                "expected {dim} coefficient series, got {}",
                coeffs.len()
            )));
        }
        let order = coeffs[0].1.len();
        for (d, DimSeries(a0, a, b)) in coeffs.iter().enumerate() {
            if a.len() != order || b.len() != order {
                return Err(ChoreoError::Contract(format!(
                    "coordinate {d} has ragged coefficient lists (expected order {order})"
                )));
            }
            if !a0.is_finite()
                || a.iter().any(|v| !v.is_finite())
                || b.iter().any(|v| !v.is_finite())
            {
                return Err(ChoreoError::Contract(format!("coordinate {d} has non-finite coefficients")));
            }
        }
        Ok(FourierPath { dim, period, coeffs })
    }

    pub fn zero(dim: usize, period: f64, order: usize) -> Result<Self> {
        FourierPath::new(dim, period, vec![DimSeries::zero(order); dim])
    }

    /// Planar circle of the given radius traversed once per period,
    /// starting at `(radius, 0)` and moving counterclockwise.
    pub fn circle(radius: f64, period: f64) -> Result<Self> {
        FourierPath::new(
            2,
            period,
            vec![
                DimSeries(0.0, vec![radius], vec![0.0]),
                DimSeries(0.0, vec![0.0], vec![radius]),
            ],
        )
    }

    /// Horizontal circle of radius `rho` at height `z` in ambient 3-space,
    /// traversed once per period.
    pub fn horizontal_circle(rho: f64, z: f64, period: f64) -> Result<Self> {
        FourierPath::new(
            3,
            period,
            vec![
                DimSeries(0.0, vec![rho], vec![0.0]),
                DimSeries(0.0, vec![0.0], vec![rho]),
                DimSeries(z, vec![0.0], vec![0.0]),
            ],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn order(&self) -> usize {
        self.coeffs[0].1.len()
    }

    pub fn coeffs(&self) -> &[DimSeries] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [DimSeries] {
        &mut self.coeffs
    }

    /// Angular frequency of harmonic `m`, `2πm / period`.
    pub fn omega(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.period
    }

    /// Position `p(t)`.
    pub fn position(&self, t: f64) -> Vec<f64> {
        self.eval(t, 0)
    }

    /// Velocity `ṗ(t)`.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        self.eval(t, 1)
    }

    /// Acceleration `p̈(t)`.
    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        self.eval(t, 2)
    }

    /// Position, velocity and acceleration in one pass.
    pub fn eval2(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let base = 2.0 * PI * t / self.period;
        let mut p = vec![0.0; self.dim];
        let mut v = vec![0.0; self.dim];
        let mut a = vec![0.0; self.dim];
        for (d, DimSeries(a0, ac, bs)) in self.coeffs.iter().enumerate() {
            p[d] = *a0;
            for m in 1..=ac.len() {
                let w = self.omega(m);
                let (s, c) = (base * m as f64).sin_cos();
                let (am, bm) = (ac[m - 1], bs[m - 1]);
                p[d] += am * c + bm * s;
                v[d] += w * (bm * c - am * s);
                a[d] -= w * w * (am * c + bm * s);
            }
        }
        (p, v, a)
    }

    fn eval(&self, t: f64, deriv: u8) -> Vec<f64> {
        let base = 2.0 * PI * t / self.period;
        let mut out = vec![0.0; self.dim];
        for (d, DimSeries(a0, ac, bs)) in self.coeffs.iter().enumerate() {
            if deriv == 0 {
                out[d] = *a0;
            }
            for m in 1..=ac.len() {
                let w = self.omega(m);
                let (s, c) = (base * m as f64).sin_cos();
                let (am, bm) = (ac[m - 1], bs[m - 1]);
                out[d] += match deriv {
                    0 => am * c + bm * s,
                    1 => w * (bm * c - am * s),
                    _ => -w * w * (am * c + bm * s),
                };
            }
        }
        out
    }

    /// The curve `t ↦ p(t + s)`, re-expressed in the same basis.
    pub fn time_shifted(&self, s: f64) -> Self {
        let mut out = self.clone();
        for DimSeries(_, ac, bs) in out.coeffs.iter_mut() {
            for m in 1..=ac.len() {
                let (sn, cs) = (self.omega(m) * s).sin_cos();
                let (am, bm) = (ac[m - 1], bs[m - 1]);
                ac[m - 1] = am * cs + bm * sn;
                bs[m - 1] = bm * cs - am * sn;
            }
        }
        out
    }

    /// The curve `t ↦ p(−t)`: cosine terms kept, sine terms negated.
    pub fn time_reflected(&self) -> Self {
        let mut out = self.clone();
        for DimSeries(_, _, bs) in out.coeffs.iter_mut() {
            for b in bs.iter_mut() {
                *b = -*b;
            }
        }
        out
    }

    /// Rotates a planar path by `theta` about the origin.
    pub fn rotated_xy(&self, theta: f64) -> Result<Self> {
        if self.dim != 2 {
            return Err(ChoreoError::Contract(format!(
                "planar rotation needs dimension 2, got {}",
                self.dim
            )));
        }
        let (sn, cs) = theta.sin_cos();
        let mut out = self.clone();
        let rot = |x: f64, y: f64| (cs * x - sn * y, sn * x + cs * y);
        let (x0, y0) = rot(self.coeffs[0].0, self.coeffs[1].0);
        out.coeffs[0].0 = x0;
        out.coeffs[1].0 = y0;
        for m in 0..self.order() {
            let (xa, ya) = rot(self.coeffs[0].1[m], self.coeffs[1].1[m]);
            out.coeffs[0].1[m] = xa;
            out.coeffs[1].1[m] = ya;
            let (xb, yb) = rot(self.coeffs[0].2[m], self.coeffs[1].2[m]);
            out.coeffs[0].2[m] = xb;
            out.coeffs[1].2[m] = yb;
        }
        Ok(out)
    }

    /// Translates the whole loop by a constant offset.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(ChoreoError::Contract(format!(
                "offset dimension {} does not match path dimension {}",
                offset.len(),
                self.dim
            )));
        }
        let mut out = self.clone();
        for (series, delta) in out.coeffs.iter_mut().zip(offset) {
            series.0 += delta;
        }
        Ok(out)
    }

    /// Mirrors the loop across the x-axis (planar paths only).
    pub fn mirrored_x(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(ChoreoError::Contract(format!(
                "planar mirror needs dimension 2, got {}",
                self.dim
            )));
        }
        let mut out = self.clone();
        out.coeffs[1].0 = -out.coeffs[1].0;
        for m in 0..self.order() {
            out.coeffs[1].1[m] = -out.coeffs[1].1[m];
            out.coeffs[1].2[m] = -out.coeffs[1].2[m];
        }
        Ok(out)
    }
}

impl TryFrom<PathRepr> for FourierPath {
    type Error = ChoreoError;

    fn try_from(r: PathRepr) -> Result<Self> {
        let path = FourierPath::new(r.dim, r.period, r.coeffs)?;
        if path.order() != r.order {
            return Err(ChoreoError::Contract(format!(
                "declared order {} does not match coefficient lists of length {}",
                r.order,
                path.order()
            )));
        }
        Ok(path)
    }
}

impl From<FourierPath> for PathRepr {
    fn from(p: FourierPath) -> Self {
        PathRepr {
            dim: p.dim,
            period: p.period,
            order: p.order(),
            coeffs: p.coeffs,
        }
    }
}
