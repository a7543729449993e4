//! Choreography configurations: a single loop traversed by all bodies with
//! fixed phase offsets, plus constructors for rotating-polygon solutions,
//! recentering, and symmetry-axis detection.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Problem, SystemState};
use crate::error::{ChoreoError, Result};
use crate::model::{constraint_defect, Curvature, ForceLaw, MassVector, Space, Tolerances};
use crate::path::FourierPath;
use crate::vecs;

/// Default number of path samples used by residual certificates.
pub const RESIDUAL_SAMPLES: usize = 128;

/// Number of candidate angles in the coarse symmetry-axis scan.
const AXIS_ANGLES: usize = 720;

/// Phase offsets `h_k` so that body `k` follows `t ↦ p(t + h_k)`.
///
/// Equally spaced choreographies are stored in the normal form `h_k = k`
/// with the path period equal to `n`; general offsets are kept raw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OffsetsRepr", into = "OffsetsRepr")]
pub struct PhaseOffsets {
    h: Vec<f64>,
    equally_spaced: bool,
}

#[derive(Serialize, Deserialize)]
struct OffsetsRepr {
    h: Vec<f64>,
    equally_spaced: bool,
}

impl PhaseOffsets {
    /// The normal form `h_k = k` for `n` bodies.
    pub fn equally_spaced(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ChoreoError::Contract("need at least one body".into()));
        }
        Ok(PhaseOffsets {
            h: (0..n).map(|k| k as f64).collect(),
            equally_spaced: true,
        })
    }

    /// Raw offsets with no spacing structure assumed.
    pub fn general(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(ChoreoError::Contract("need at least one offset".into()));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(ChoreoError::Contract("offsets must be finite".into()));
        }
        Ok(PhaseOffsets { h, equally_spaced: false })
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.h
    }

    pub fn is_equally_spaced(&self) -> bool {
        self.equally_spaced
    }

    /// `h_k` for any integer `k`, extended by `h_{k+Kn} = h_k + K·period`.
    pub fn extended(&self, k: isize, period: f64) -> f64 {
        let n = self.h.len() as isize;
        let wraps = k.div_euclid(n);
        self.h[k.rem_euclid(n) as usize] + wraps as f64 * period
    }

    fn check(&self) -> Result<()> {
        if self.equally_spaced {
            for (k, &hk) in self.h.iter().enumerate() {
                if (hk - k as f64).abs() > 1e-9 {
                    return Err(ChoreoError::Contract(format!(
                        "equally spaced offsets must satisfy h_k = k, but h_{k} = {hk}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<OffsetsRepr> for PhaseOffsets {
    type Error = ChoreoError;

    fn try_from(r: OffsetsRepr) -> Result<Self> {
        let out = PhaseOffsets { h: r.h, equally_spaced: r.equally_spaced };
        if out.h.is_empty() {
            return Err(ChoreoError::Contract("need at least one offset".into()));
        }
        out.check()?;
        Ok(out)
    }
}

impl From<PhaseOffsets> for OffsetsRepr {
    fn from(p: PhaseOffsets) -> Self {
        OffsetsRepr { h: p.h, equally_spaced: p.equally_spaced }
    }
}

/// A full choreography candidate: the loop, the offsets, and the problem
/// data (masses, space, interaction law, optional fixed central mass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoreographyConfig {
    pub path: FourierPath,
    pub offsets: PhaseOffsets,
    pub masses: MassVector,
    pub space: Space,
    pub force: ForceLaw,
    pub central_mass: f64,
}

/// Residual summary of the analytic equation-of-motion check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigCheck {
    /// Largest per-body norm of `p̈(t+h_k) − accel_k` over the sample grid.
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Largest deviation from the curved-surface constraint (0 when flat).
    pub max_constraint_defect: f64,
    pub samples: usize,
}

impl ChoreographyConfig {
    pub fn n_bodies(&self) -> usize {
        self.offsets.n()
    }

    pub fn validate(&self) -> Result<()> {
        self.offsets.check()?;
        self.masses.as_slice();
        self.force.validate()?;
        self.space.validate()?;
        if self.offsets.n() != self.masses.len() {
            return Err(ChoreoError::Contract(format!(
                "{} offsets but {} masses",
                self.offsets.n(),
                self.masses.len()
            )));
        }
        if self.path.dim() != self.space.ambient_dim() {
            return Err(ChoreoError::Contract(format!(
                "path dimension {} does not match ambient dimension {}",
                self.path.dim(),
                self.space.ambient_dim()
            )));
        }
        if !(self.central_mass.is_finite() && self.central_mass >= 0.0) {
            return Err(ChoreoError::Contract(format!(
                "central mass must be nonnegative, got {}",
                self.central_mass
            )));
        }
        if self.offsets.is_equally_spaced()
            && (self.path.period() - self.offsets.n() as f64).abs() > 1e-9
        {
            return Err(ChoreoError::Contract(format!(
                "equally spaced choreography requires period = n, got period {} for n = {}",
                self.path.period(),
                self.offsets.n()
            )));
        }
        Ok(())
    }

    pub fn problem(&self) -> Problem {
        Problem {
            space: self.space,
            force: self.force.clone(),
            masses: self.masses.clone(),
            central_mass: self.central_mass,
        }
    }

    /// Positions and velocities of all bodies at time `t`.
    pub fn state_at(&self, t: f64) -> SystemState {
        let n = self.n_bodies();
        let mut positions = Vec::with_capacity(n);
        let mut velocities = Vec::with_capacity(n);
        for k in 0..n {
            let tk = t + self.offsets.as_slice()[k];
            positions.push(self.path.position(tk));
            velocities.push(self.path.velocity(tk));
        }
        SystemState { time: t, positions, velocities }
    }

    /// Evaluates the equations of motion analytically on a uniform grid of
    /// `samples` times: compares the exact second derivative of the stored
    /// loop against the right-hand side at each body.
    pub fn verify(&self, samples: usize) -> Result<ConfigCheck> {
        self.validate()?;
        if samples == 0 {
            return Err(ChoreoError::Contract("need at least one sample".into()));
        }
        let problem = self.problem();
        let period = self.path.period();
        let n = self.n_bodies();
        let sigma = self.space.curvature().map(Curvature::sign);

        let per_sample: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let t = period * i as f64 / samples as f64;
                let state = self.state_at(t);
                let acc = problem
                    .accel(&state.positions, &state.velocities)
                    .map_err(|e| e.at_time(t))?;
                let mut worst: f64 = 0.0;
                for k in 0..n {
                    let tk = t + self.offsets.as_slice()[k];
                    let analytic = self.path.acceleration(tk);
                    worst = worst.max(vecs::dist_sq(&analytic, &acc[k]).sqrt());
                }
                let defect = match sigma {
                    Some(s) => state
                        .positions
                        .iter()
                        .map(|q| constraint_defect(q, s).abs())
                        .fold(0.0, f64::max),
                    None => 0.0,
                };
                Ok((worst, defect))
            })
            .collect::<Result<_>>()?;

        let max_residual = per_sample.iter().map(|x| x.0).fold(0.0, f64::max);
        let mean_residual = per_sample.iter().map(|x| x.0).sum::<f64>() / samples as f64;
        let max_constraint_defect = per_sample.iter().map(|x| x.1).fold(0.0, f64::max);
        Ok(ConfigCheck { max_residual, mean_residual, max_constraint_defect, samples })
    }
}

/// Regular polygon of `n` equal unit masses on a circle of the given
/// radius, rotating at the rate that balances the interaction law.
///
/// The physical rotation rate satisfies
/// `ω² = Σ_{j=1}^{n−1} (1 − cos(2πj/n)) · f(2·radius²·(1 − cos(2πj/n)))`;
/// the returned config is rescaled to the unit-spacing normal form
/// (period `n`, offsets `h_k = k`) by absorbing the time scale into the
/// force coefficients.
pub fn polygon_flat(n: usize, radius: f64, f: &ForceLaw) -> Result<ChoreographyConfig> {
    polygon_flat_with_center(n, radius, f, 0.0)
}

/// As [`polygon_flat`], with an additional fixed mass at the origin. The
/// balance gains the central pull: `ω² += central_mass · f(radius²)`.
pub fn polygon_flat_with_center(
    n: usize,
    radius: f64,
    f: &ForceLaw,
    central_mass: f64,
) -> Result<ChoreographyConfig> {
    if n < 2 {
        return Err(ChoreoError::Contract("polygon needs at least 2 bodies".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(ChoreoError::Contract(format!("radius must be positive, got {radius}")));
    }
    if !(central_mass.is_finite() && central_mass >= 0.0) {
        return Err(ChoreoError::Contract(format!(
            "central mass must be nonnegative, got {central_mass}"
        )));
    }
    f.validate()?;

    let mut omega_sq = 0.0;
    for j in 1..n {
        let gap = 1.0 - (2.0 * PI * j as f64 / n as f64).cos();
        omega_sq += gap * f.eval(2.0 * radius * radius * gap)?;
    }
    if central_mass > 0.0 {
        omega_sq += central_mass * f.eval(radius * radius)?;
    }

    // Physical period T = 2π/ω; normal form stores period n, so time is
    // scaled by α = T/n, which multiplies every force coefficient by α².
    let alpha_sq = (2.0 * PI).powi(2) / (omega_sq * (n as f64).powi(2));
    let config = ChoreographyConfig {
        path: FourierPath::circle(radius, n as f64)?,
        offsets: PhaseOffsets::equally_spaced(n)?,
        masses: MassVector::equal(n, 1.0)?,
        space: Space::Flat { dim: 2 },
        force: f.scaled(alpha_sq),
        central_mass,
    };
    certify(config)
}

/// Regular polygon rotating on the curved surface at height `x₃ = z`,
/// optionally around a fixed mass at `(0,0,1)`.
///
/// The rotation rate is found by a bracketed root solve on the radial
/// equation-of-motion residual of body 0 at `t = 0`; symmetry reduces the
/// full system to that single scalar. On the sphere `z = 0` puts the
/// polygon on a great circle where the pair forces cancel and any rate
/// works; rate 1 is chosen.
pub fn polygon_curved(
    n: usize,
    z: f64,
    sigma: Curvature,
    central_mass: f64,
) -> Result<ChoreographyConfig> {
    if n < 2 {
        return Err(ChoreoError::Contract("polygon needs at least 2 bodies".into()));
    }
    if !(central_mass.is_finite() && central_mass >= 0.0) {
        return Err(ChoreoError::Contract(format!(
            "central mass must be nonnegative, got {central_mass}"
        )));
    }
    let rho = match sigma {
        Curvature::Positive => {
            if !(z.abs() < 1.0) {
                return Err(ChoreoError::Contract(format!(
                    "spherical polygon needs |z| < 1, got {z}"
                )));
            }
            (1.0 - z * z).sqrt()
        }
        Curvature::Negative => {
            if !(z > 1.0) {
                return Err(ChoreoError::Contract(format!(
                    "hyperbolic polygon needs z > 1, got {z}"
                )));
            }
            (z * z - 1.0).sqrt()
        }
    };

    let omega = if z == 0.0 {
        if central_mass > 0.0 {
            return Err(ChoreoError::Infeasible(
                "a fixed mass at the pole pulls an equatorial polygon out of its plane; \
                 no rotation rate balances it"
                    .into(),
            ));
        }
        1.0
    } else {
        solve_polygon_rate(n, rho, z, sigma, central_mass)?
    };

    // Rescale to period n: the curved law has no adjustable coefficients,
    // so the time scale α = (2π/ω)/n is absorbed into the masses instead.
    let alpha_sq = (2.0 * PI).powi(2) / (omega * omega * (n as f64).powi(2));
    let config = ChoreographyConfig {
        path: FourierPath::horizontal_circle(rho, z, n as f64)?,
        offsets: PhaseOffsets::equally_spaced(n)?,
        masses: MassVector::equal(n, alpha_sq)?,
        space: Space::Curved { sigma },
        force: ForceLaw::classical(),
        central_mass: central_mass * alpha_sq,
    };
    certify(config)
}

/// Radial residual of body 0 at `t = 0` as a function of the rotation
/// rate: `s(ω) = (q̈₀ − accel₀)·e₁` for the rotating-ring ansatz.
fn polygon_rate_residual(
    n: usize,
    rho: f64,
    z: f64,
    sigma: Curvature,
    central_mass: f64,
    omega: f64,
) -> Result<f64> {
    let masses = MassVector::equal(n, 1.0)?;
    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        positions.push(vec![rho * theta.cos(), rho * theta.sin(), z]);
        velocities.push(vec![-rho * omega * theta.sin(), rho * omega * theta.cos(), 0.0]);
    }
    let acc = if central_mass > 0.0 {
        crate::dynamics::accel_curved_fixed_center(&positions, &velocities, &masses, sigma, central_mass)?
    } else {
        crate::dynamics::accel_curved(&positions, &velocities, &masses, sigma)?
    };
    Ok(-rho * omega * omega - acc[0][0])
}

fn solve_polygon_rate(
    n: usize,
    rho: f64,
    z: f64,
    sigma: Curvature,
    central_mass: f64,
) -> Result<f64> {
    let s = |omega: f64| polygon_rate_residual(n, rho, z, sigma, central_mass, omega);
    let s0 = s(0.0)?;
    if s0 <= 0.0 {
        return Err(ChoreoError::Infeasible(format!(
            "net radial force is outward: residual at ω = 0 is {s0:e}, \
             and the residual only decreases with ω"
        )));
    }
    let mut hi = 1.0;
    let mut s_hi = s(hi)?;
    let mut doublings = 0;
    while s_hi > 0.0 {
        hi *= 2.0;
        s_hi = s(hi)?;
        doublings += 1;
        if doublings > 60 {
            return Err(ChoreoError::Infeasible(format!(
                "no sign change in the radial residual on [0, {hi:e}]: s(0) = {s0:e}, s({hi:e}) = {s_hi:e}"
            )));
        }
    }
    let mut lo = 0.0;
    let mut hi = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if s(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let omega = 0.5 * (lo + hi);
    if omega * omega <= 1e-12 {
        return Err(ChoreoError::Infeasible(
            "balance only at zero rotation rate; the ring would be static, not a choreography".into(),
        ));
    }
    Ok(omega)
}

/// Runs the residual certificate on a freshly constructed config.
fn certify(config: ChoreographyConfig) -> Result<ChoreographyConfig> {
    let tol = Tolerances::default();
    let check = config.verify(RESIDUAL_SAMPLES)?;
    if check.max_residual > tol.residual_abs {
        return Err(ChoreoError::Infeasible(format!(
            "constructed configuration fails its own residual certificate: max residual {:e}",
            check.max_residual
        )));
    }
    if check.max_constraint_defect > tol.constraint_abs {
        return Err(ChoreoError::Infeasible(format!(
            "constructed configuration leaves the surface by {:e}",
            check.max_constraint_defect
        )));
    }
    Ok(config)
}

/// Moves the loop so the mass-weighted center `Σ m_k p(t+h_k)` vanishes for
/// all `t`, by zeroing every harmonic whose mass coupling
/// `c_m = Σ_k m_k e^{2πim h_k / P}` is nonzero. Idempotent; flat space with
/// no fixed center only (a fixed center pins the frame instead).
pub fn recentre(config: &ChoreographyConfig) -> Result<ChoreographyConfig> {
    config.validate()?;
    if config.space.is_curved() {
        return Err(ChoreoError::Contract("recentre applies to flat space only".into()));
    }
    if config.central_mass > 0.0 {
        return Err(ChoreoError::Contract(
            "recentre applies only without a fixed center; the center pins the frame".into(),
        ));
    }
    let total = config.masses.total();
    let period = config.path.period();
    let mut path = config.path.clone();
    for m in 0..=path.order() {
        let coupling: Complex64 = config
            .masses
            .as_slice()
            .iter()
            .zip(config.offsets.as_slice())
            .map(|(&mk, &hk)| mk * Complex64::new(0.0, 2.0 * PI * m as f64 * hk / period).exp())
            .sum();
        if coupling.norm() <= 1e-9 * total {
            continue;
        }
        for series in path.coeffs_mut() {
            if m == 0 {
                series.0 = 0.0;
            } else {
                series.1[m - 1] = 0.0;
                series.2[m - 1] = 0.0;
            }
        }
    }
    Ok(ChoreographyConfig { path, ..config.clone() })
}

/// A reflection symmetry of a planar loop: after rotating the path by
/// `−angle`, the time shift `time_shift` satisfies
/// `p(−t + time_shift) = diag(1,−1)·p(t)` up to `residual`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryAxis {
    pub angle: f64,
    pub time_shift: f64,
    pub residual: f64,
}

/// Largest grid deviation of the reflection identity for a given axis
/// angle and time shift.
///
/// Uses the equivalent rotation-free form
/// `‖p(−t+τ) − R(2θ)·diag(1,−1)·p(t)‖`, since rotations are isometries
/// and `diag(1,−1)·R(−θ) = R(θ)·diag(1,−1)`.
pub fn axis_residual(path: &FourierPath, theta: f64, tau: f64, ts: &[f64]) -> Result<f64> {
    if path.dim() != 2 {
        return Err(ChoreoError::Contract("symmetry axes are defined for planar paths".into()));
    }
    let (sn, cs) = (2.0 * theta).sin_cos();
    let mut worst: f64 = 0.0;
    for &t in ts {
        let q = path.position(t);
        let mirrored = [q[0], -q[1]];
        let target = [
            cs * mirrored[0] - sn * mirrored[1],
            sn * mirrored[0] + cs * mirrored[1],
        ];
        let lhs = path.position(-t + tau);
        worst = worst.max(vecs::dist_sq(&lhs, &target).sqrt());
    }
    Ok(worst)
}

/// Searches for a reflection axis of a planar loop.
///
/// Scans 720 candidate angles over `[0, π)` with all cyclic grid time
/// shifts, refines promising candidates by golden-section, and returns the
/// smallest passing angle (ties broken by the smallest time shift), or
/// `None` when no axis meets the tolerance.
pub fn detect_symmetry_axis(
    path: &FourierPath,
    grid_size: usize,
    tol: f64,
) -> Result<Option<SymmetryAxis>> {
    if path.dim() != 2 {
        return Err(ChoreoError::Contract("symmetry axes are defined for planar paths".into()));
    }
    if grid_size < 8 {
        return Err(ChoreoError::Contract("symmetry grid needs at least 8 samples".into()));
    }
    let period = path.period();
    let ts: Vec<f64> = (0..grid_size)
        .map(|i| period * i as f64 / grid_size as f64)
        .collect();
    let samples: Vec<[f64; 2]> = ts
        .iter()
        .map(|&t| {
            let q = path.position(t);
            [q[0], q[1]]
        })
        .collect();
    let mirrored: Vec<[f64; 2]> = samples.iter().map(|q| [q[0], -q[1]]).collect();

    // Coarse scan: for each angle, the best cyclic grid shift. The shift
    // s maps sample index i to index (s − i) mod N, which realizes
    // τ = s·P/N on the grid because p(−t_i + τ) = p(t_{(s−i) mod N}).
    let coarse: Vec<(f64, usize)> = (0..AXIS_ANGLES)
        .into_par_iter()
        .map(|a| {
            let theta = PI * a as f64 / AXIS_ANGLES as f64;
            let (sn, cs) = (2.0 * theta).sin_cos();
            let targets: Vec<[f64; 2]> = mirrored
                .iter()
                .map(|m| [cs * m[0] - sn * m[1], sn * m[0] + cs * m[1]])
                .collect();
            let mut best = (f64::INFINITY, 0);
            for s in 0..grid_size {
                let mut worst: f64 = 0.0;
                for i in 0..grid_size {
                    let j = (s + grid_size - i % grid_size) % grid_size;
                    let d = vecs::dist_sq(&samples[j], &targets[i]).sqrt();
                    if d > worst {
                        worst = d;
                    }
                    if worst >= best.0 {
                        break;
                    }
                }
                if worst < best.0 {
                    best = (worst, s);
                }
            }
            best
        })
        .collect();

    // The grid resolves angles to about π/720 and shifts to about P/N;
    // candidates within this coarse slack are refined continuously.
    let slack = coarse_slack(path, grid_size);
    let accept_coarse = tol + slack;
    for (a, &(res, s)) in coarse.iter().enumerate() {
        if res > accept_coarse {
            continue;
        }
        let theta0 = PI * a as f64 / AXIS_ANGLES as f64;
        let tau0 = period * s as f64 / grid_size as f64;
        let (theta, tau, refined) = refine_axis(path, theta0, tau0, &ts, grid_size)?;
        if refined <= tol {
            return Ok(Some(smallest_passing_axis(
                path, theta, tau, refined, tol, &ts, grid_size,
            )?));
        }
    }
    Ok(None)
}

/// Bound on how far a true axis residual can sit above zero at coarse grid
/// resolution, estimated from the path's velocity scale.
fn coarse_slack(path: &FourierPath, grid_size: usize) -> f64 {
    let period = path.period();
    let mut vmax: f64 = 0.0;
    for i in 0..64 {
        let t = period * i as f64 / 64.0;
        vmax = vmax.max(vecs::norm(&path.velocity(t)));
    }
    // Angle error π/720 moves points by ≤ |q|·2π/720; shift error P/N moves
    // them by ≤ vmax·P/N. Double both for safety.
    let mut qmax: f64 = 0.0;
    for i in 0..64 {
        let t = period * i as f64 / 64.0;
        qmax = qmax.max(vecs::norm(&path.position(t)));
    }
    2.0 * (qmax * 2.0 * PI / AXIS_ANGLES as f64 + vmax * period / grid_size as f64)
}

/// Nested golden-section refinement: the residual minimized over the time
/// shift is a function of the angle alone, and that profile is minimized.
fn refine_axis(
    path: &FourierPath,
    theta0: f64,
    tau0: f64,
    ts: &[f64],
    grid_size: usize,
) -> Result<(f64, f64, f64)> {
    let width_theta = 2.0 * PI / AXIS_ANGLES as f64;
    let width_tau = 2.0 * path.period() / grid_size as f64;
    let profile = |theta: f64| -> Result<(f64, f64)> {
        golden_min(|tau| axis_residual(path, theta, tau, ts), tau0 - width_tau, tau0 + width_tau)
    };
    let (theta, _) = golden_min(
        |theta| profile(theta).map(|(_, r)| r),
        theta0 - width_theta,
        theta0 + width_theta,
    )?;
    let (tau, best) = profile(theta)?;
    Ok((theta, tau, best))
}

/// Applies the smallest-angle-then-smallest-shift tie-break around a
/// refined axis candidate.
///
/// Paths with a continuum of axes (the circle) refine to an arbitrary
/// point of the passing set; this walks to its left edge. The passing
/// threshold tracks the achieved residual so that genuinely unique axes
/// are not dragged toward the tolerance boundary.
fn smallest_passing_axis(
    path: &FourierPath,
    theta: f64,
    tau: f64,
    refined: f64,
    tol: f64,
    ts: &[f64],
    grid_size: usize,
) -> Result<SymmetryAxis> {
    let period = path.period();
    let w_theta = 2.0 * PI / AXIS_ANGLES as f64;
    let w_tau = 2.0 * period / grid_size as f64;
    let pass = tol.min((10.0 * refined).max(1e-12));

    let profile = |th: f64, tau_center: f64| -> Result<(f64, f64)> {
        golden_min(
            |x| axis_residual(path, th, x, ts),
            tau_center - w_tau,
            tau_center + w_tau,
        )
    };

    let mut theta_best = theta;
    let mut tau_best = tau;
    // Refinement may land a hair below zero; zero wraps to π, so prefer the
    // zero representative whenever it passes.
    if theta_best < 0.0 {
        let (t0, r0) = profile(0.0, tau_best)?;
        if r0 <= pass {
            theta_best = 0.0;
            tau_best = t0;
        }
    }
    let lo = (theta_best - w_theta).max(0.0);
    if lo < theta_best {
        let (t_lo, r_lo) = profile(lo, tau_best)?;
        if r_lo <= pass {
            theta_best = lo;
            tau_best = t_lo;
        } else {
            let mut bad = lo;
            let mut good = theta_best;
            for _ in 0..60 {
                let mid = 0.5 * (bad + good);
                let (t_mid, r_mid) = profile(mid, tau_best)?;
                if r_mid <= pass {
                    good = mid;
                    tau_best = t_mid;
                } else {
                    bad = mid;
                }
            }
            theta_best = good;
        }
    }

    if tau_best < 0.0 && axis_residual(path, theta_best, 0.0, ts)? <= pass {
        tau_best = 0.0;
    }
    let lo_tau = (tau_best - w_tau).max(0.0);
    if lo_tau < tau_best {
        if axis_residual(path, theta_best, lo_tau, ts)? <= pass {
            tau_best = lo_tau;
        } else {
            let mut bad = lo_tau;
            let mut good = tau_best;
            for _ in 0..60 {
                let mid = 0.5 * (bad + good);
                if axis_residual(path, theta_best, mid, ts)? <= pass {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            tau_best = good;
        }
    }

    let residual = axis_residual(path, theta_best, tau_best, ts)?;
    Ok(SymmetryAxis {
        angle: theta_best.rem_euclid(PI),
        time_shift: tau_best.rem_euclid(period),
        residual,
    })
}

fn golden_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    if f1 < f2 {
        Ok((x1, f1))
    } else {
        Ok((x2, f2))
    }
}

/// Rotates and time-shifts the path into the normal form in which the
/// detected axis is the x-axis and the reflection identity reads
/// `p(−t) = diag(1,−1)·p(t)` with no residual shift.
pub fn normalize_to_axis(path: &FourierPath, axis: &SymmetryAxis) -> Result<FourierPath> {
    let rotated = path.rotated_xy(-axis.angle)?;
    Ok(rotated.time_shifted(axis.time_shift / 2.0))
}
