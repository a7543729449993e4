//! Equations of motion, time integration and trajectory verification.
//!
//! Flat space: `q̈_k = Σ_{j≠k} m_j (q_j − q_k) f(‖q_j−q_k‖²)`, optionally with
//! a fixed attracting mass at the origin. Curved space: the cotangent-law
//! equation on the surface `x₁² + x₂² + σx₃² = σ`,
//! `q̈_k = Σ_{j≠k} m_j (q_j − σ(q_k⊙q_j)q_k)/(σ − σ(q_k⊙q_j)²)^{3/2}
//!        − σ(q̇_k⊙q̇_k) q_k`,
//! optionally with a fixed mass at `(0,0,1)`.

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};
use crate::model::{sigma_dot, Curvature, ForceLaw, MassVector, Space};
use crate::vecs;

/// Squared separations below this abort the evaluation: the force laws are
/// unbounded at zero separation.
pub const COLLISION_SQ: f64 = 1e-10;

/// Instantaneous positions and velocities of all bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub time: f64,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl SystemState {
    pub fn new(time: f64, positions: Vec<Vec<f64>>, velocities: Vec<Vec<f64>>) -> Result<Self> {
        if positions.is_empty() || positions.len() != velocities.len() {
            return Err(ChoreoError::Contract(
                "positions and velocities must be non-empty and of equal length".into(),
            ));
        }
        let dim = positions[0].len();
        for (q, v) in positions.iter().zip(&velocities) {
            if q.len() != dim || v.len() != dim {
                return Err(ChoreoError::Contract("ragged state vectors".into()));
            }
        }
        Ok(SystemState { time, positions, velocities })
    }

    pub fn n_bodies(&self) -> usize {
        self.positions.len()
    }

    /// Checks the curved-surface invariants `q⊙q = σ` and `q⊙q̇ = 0`.
    pub fn check_curved(&self, sigma: Curvature, tol: f64) -> Result<()> {
        let s = sigma.sign();
        for (k, (q, v)) in self.positions.iter().zip(&self.velocities).enumerate() {
            let defect = sigma_dot(q, q, s) - s;
            if defect.abs() > tol {
                return Err(ChoreoError::Contract(format!(
                    "body {k} off the surface by {defect:e} at t = {}",
                    self.time
                )));
            }
            if s < 0.0 && q[2] <= 0.0 {
                return Err(ChoreoError::Contract(format!("body {k} on the wrong hyperboloid sheet")));
            }
            let tangency = sigma_dot(q, v, s);
            if tangency.abs() > tol {
                return Err(ChoreoError::Contract(format!(
                    "body {k} velocity leaves the tangent plane by {tangency:e} at t = {}",
                    self.time
                )));
            }
        }
        Ok(())
    }
}

/// Everything needed to evaluate the right-hand side: the space, the
/// interaction law, the masses, and an optional fixed central mass
/// (0 means none).
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub space: Space,
    pub force: ForceLaw,
    pub masses: MassVector,
    pub central_mass: f64,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        self.force.validate()?;
        if !(self.central_mass.is_finite() && self.central_mass >= 0.0) {
            return Err(ChoreoError::Contract(format!(
                "central mass must be nonnegative, got {}",
                self.central_mass
            )));
        }
        Ok(())
    }

    /// Accelerations of all bodies for the configured space and law.
    pub fn accel(&self, positions: &[Vec<f64>], velocities: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        match self.space {
            Space::Flat { .. } => {
                if self.central_mass > 0.0 {
                    accel_flat_fixed_center(positions, &self.masses, &self.force, self.central_mass)
                } else {
                    accel_flat(positions, &self.masses, &self.force)
                }
            }
            Space::Curved { sigma } => {
                if self.central_mass > 0.0 {
                    accel_curved_fixed_center(
                        positions,
                        velocities,
                        &self.masses,
                        sigma,
                        self.central_mass,
                    )
                } else {
                    accel_curved(positions, velocities, &self.masses, sigma)
                }
            }
        }
    }
}

/// Pairwise accelerations in flat space.
///
/// Each pair is evaluated once and applied with opposite signs, so the
/// mass-weighted total `Σ m_k q̈_k` vanishes to round-off.
pub fn accel_flat(positions: &[Vec<f64>], masses: &MassVector, f: &ForceLaw) -> Result<Vec<Vec<f64>>> {
    let n = positions.len();
    let dim = positions[0].len();
    let mut acc = vec![vec![0.0; dim]; n];
    for k in 0..n {
        for j in k + 1..n {
            let sep_sq = vecs::dist_sq(&positions[j], &positions[k]);
            if sep_sq < COLLISION_SQ {
                return Err(ChoreoError::Collision { i: k, j, sep_sq });
            }
            let g = f.eval_unchecked(sep_sq);
            for d in 0..dim {
                let delta = positions[j][d] - positions[k][d];
                acc[k][d] += masses.as_slice()[j] * g * delta;
                acc[j][d] -= masses.as_slice()[k] * g * delta;
            }
        }
    }
    Ok(acc)
}

/// Flat accelerations plus the pull `−central_mass · q_k · f(‖q_k‖²)` of a
/// fixed mass at the origin.
pub fn accel_flat_fixed_center(
    positions: &[Vec<f64>],
    masses: &MassVector,
    f: &ForceLaw,
    central_mass: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut acc = accel_flat(positions, masses, f)?;
    for (k, q) in positions.iter().enumerate() {
        let r_sq = vecs::norm_sq(q);
        if r_sq < COLLISION_SQ {
            return Err(ChoreoError::AtFixedCenter { i: k });
        }
        let g = central_mass * f.eval_unchecked(r_sq);
        for d in 0..q.len() {
            acc[k][d] -= g * q[d];
        }
    }
    Ok(acc)
}

/// Accelerations on the curved surface, velocity term included.
pub fn accel_curved(
    positions: &[Vec<f64>],
    velocities: &[Vec<f64>],
    masses: &MassVector,
    sigma: Curvature,
) -> Result<Vec<Vec<f64>>> {
    let s = sigma.sign();
    let n = positions.len();
    let mut acc = vec![vec![0.0; 3]; n];
    for k in 0..n {
        for j in 0..n {
            if j == k {
                continue;
            }
            let g = sigma_dot(&positions[k], &positions[j], s);
            // σ − σg² ≥ 0 on the surface; it vanishes at coincident or
            // antipodal pairs where the cotangent force is singular.
            let den_base = s - s * g * g;
            if den_base < COLLISION_SQ {
                return Err(ChoreoError::SingularPair { i: k.min(j), j: k.max(j) });
            }
            let scale = masses.as_slice()[j] / den_base.powf(1.5);
            for d in 0..3 {
                acc[k][d] += scale * (positions[j][d] - s * g * positions[k][d]);
            }
        }
        let v_sq = sigma_dot(&velocities[k], &velocities[k], s);
        for d in 0..3 {
            acc[k][d] -= s * v_sq * positions[k][d];
        }
    }
    Ok(acc)
}

/// Curved accelerations plus the pull of a fixed mass at `ê = (0,0,1)`:
/// `central_mass · (ê − σ(q_k⊙ê)q_k) / (σ − σ(q_k⊙ê)²)^{3/2}` per body.
pub fn accel_curved_fixed_center(
    positions: &[Vec<f64>],
    velocities: &[Vec<f64>],
    masses: &MassVector,
    sigma: Curvature,
    central_mass: f64,
) -> Result<Vec<Vec<f64>>> {
    let s = sigma.sign();
    let e_hat = [0.0, 0.0, 1.0];
    let mut acc = accel_curved(positions, velocities, masses, sigma)?;
    for (k, q) in positions.iter().enumerate() {
        let g = sigma_dot(q, &e_hat, s);
        let den_base = s - s * g * g;
        if den_base < COLLISION_SQ {
            return Err(ChoreoError::AtFixedCenter { i: k });
        }
        let scale = central_mass / den_base.powf(1.5);
        for d in 0..3 {
            acc[k][d] += scale * (e_hat[d] - s * g * q[d]);
        }
    }
    Ok(acc)
}

/// Integration schemes. Verlet applies to flat problems only; the projected
/// scheme applies to curved problems only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    Verlet,
    Rk4Projected,
}

/// A time-ordered, uniformly spaced sequence of states plus the problem
/// that generated it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SystemState>,
    pub step: f64,
    pub problem: Problem,
}

impl Trajectory {
    /// Euclidean distance between the final and initial state over all
    /// positions and velocities; small for a closed periodic orbit.
    pub fn closure_error(&self) -> f64 {
        let first = &self.states[0];
        let last = &self.states[self.states.len() - 1];
        let mut sum = 0.0;
        for k in 0..first.n_bodies() {
            sum += vecs::dist_sq(&first.positions[k], &last.positions[k]);
            sum += vecs::dist_sq(&first.velocities[k], &last.velocities[k]);
        }
        sum.sqrt()
    }

    /// Largest deviation from the curved-surface constraint over all states
    /// and bodies; zero for flat problems.
    pub fn max_constraint_defect(&self) -> f64 {
        let Some(sigma) = self.problem.space.curvature() else {
            return 0.0;
        };
        let s = sigma.sign();
        self.states
            .iter()
            .flat_map(|st| st.positions.iter())
            .map(|q| (sigma_dot(q, q, s) - s).abs())
            .fold(0.0, f64::max)
    }
}

/// Steps the problem forward `steps` times from `initial` with step `dt`.
pub fn integrate(
    initial: SystemState,
    problem: &Problem,
    dt: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ChoreoError::Contract(format!("dt must be positive, got {dt}")));
    }
    problem.validate()?;
    match (scheme, problem.space) {
        (Scheme::Verlet, Space::Curved { .. }) => {
            return Err(ChoreoError::Contract("verlet applies to flat problems only".into()))
        }
        (Scheme::Rk4Projected, Space::Flat { .. }) => {
            return Err(ChoreoError::Contract(
                "the projected scheme applies to curved problems only".into(),
            ))
        }
        _ => {}
    }

    let mut states = Vec::with_capacity(steps + 1);
    let mut current = initial;
    states.push(current.clone());
    for _ in 0..steps {
        let t = current.time;
        current = match scheme {
            Scheme::Rk4 => rk4_step(&current, problem, dt),
            Scheme::Verlet => verlet_step(&current, problem, dt),
            Scheme::Rk4Projected => {
                rk4_step(&current, problem, dt).and_then(|next| project(next, problem))
            }
        }
        .map_err(|e| e.at_time(t))?;
        states.push(current.clone());
    }
    Ok(Trajectory { states, step: dt, problem: problem.clone() })
}

fn rk4_step(state: &SystemState, problem: &Problem, dt: f64) -> Result<SystemState> {
    let n = state.n_bodies();
    let dim = state.positions[0].len();

    let eval = |q: &[Vec<f64>], v: &[Vec<f64>]| problem.accel(q, v);
    let advance = |q: &[Vec<f64>], v: &[Vec<f64>], dq: &[Vec<f64>], dv: &[Vec<f64>], h: f64| {
        let mut nq = q.to_vec();
        let mut nv = v.to_vec();
        for k in 0..n {
            vecs::axpy(&mut nq[k], h, &dq[k]);
            vecs::axpy(&mut nv[k], h, &dv[k]);
        }
        (nq, nv)
    };

    let k1v = eval(&state.positions, &state.velocities)?;
    let k1q = state.velocities.clone();

    let (q2, v2) = advance(&state.positions, &state.velocities, &k1q, &k1v, dt / 2.0);
    let k2v = eval(&q2, &v2)?;
    let k2q = v2;

    let (q3, v3) = advance(&state.positions, &state.velocities, &k2q, &k2v, dt / 2.0);
    let k3v = eval(&q3, &v3)?;
    let k3q = v3;

    let (q4, v4) = advance(&state.positions, &state.velocities, &k3q, &k3v, dt);
    let k4v = eval(&q4, &v4)?;
    let k4q = v4;

    let mut positions = state.positions.clone();
    let mut velocities = state.velocities.clone();
    for k in 0..n {
        for d in 0..dim {
            positions[k][d] +=
                dt / 6.0 * (k1q[k][d] + 2.0 * k2q[k][d] + 2.0 * k3q[k][d] + k4q[k][d]);
            velocities[k][d] +=
                dt / 6.0 * (k1v[k][d] + 2.0 * k2v[k][d] + 2.0 * k3v[k][d] + k4v[k][d]);
        }
    }
    Ok(SystemState { time: state.time + dt, positions, velocities })
}

fn verlet_step(state: &SystemState, problem: &Problem, dt: f64) -> Result<SystemState> {
    let n = state.n_bodies();
    let acc = problem.accel(&state.positions, &state.velocities)?;
    let mut positions = state.positions.clone();
    let mut half_v = state.velocities.clone();
    for k in 0..n {
        vecs::axpy(&mut half_v[k], dt / 2.0, &acc[k]);
        vecs::axpy(&mut positions[k], dt, &half_v[k]);
    }
    let acc_new = problem.accel(&positions, &half_v)?;
    let mut velocities = half_v;
    for k in 0..n {
        vecs::axpy(&mut velocities[k], dt / 2.0, &acc_new[k]);
    }
    Ok(SystemState { time: state.time + dt, positions, velocities })
}

/// Renormalizes each body onto the surface and strips the normal component
/// of its velocity: `q ← q/√|q⊙q|`, then `q̇ ← q̇ − σ(q⊙q̇)q`.
fn project(mut state: SystemState, problem: &Problem) -> Result<SystemState> {
    let Some(sigma) = problem.space.curvature() else {
        return Ok(state);
    };
    let s = sigma.sign();
    for k in 0..state.n_bodies() {
        let q_sq = sigma_dot(&state.positions[k], &state.positions[k], s);
        let scale = q_sq.abs().sqrt();
        if !(scale.is_finite()) || scale < 1e-8 {
            return Err(ChoreoError::Contract(format!(
                "body {k} degenerated toward the light cone (q⊙q = {q_sq:e})"
            )));
        }
        for d in 0..3 {
            state.positions[k][d] /= scale;
        }
        let tangency = sigma_dot(&state.positions[k], &state.velocities[k], s);
        for d in 0..3 {
            state.velocities[k][d] -= s * tangency * state.positions[k][d];
        }
    }
    Ok(state)
}

/// Residuals of the second-derivative check on a stored trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    /// Largest per-body residual norm over interior samples.
    pub max_residual: f64,
    /// Mean of the per-sample max residual norms.
    pub mean_residual: f64,
    /// Number of interior samples checked.
    pub samples: usize,
    /// Largest deviation of total energy from its initial value; only
    /// defined for flat problems whose pair potential has a closed form.
    pub energy_drift: Option<f64>,
}

impl ResidualStats {
    pub fn passes(&self, residual_abs: f64) -> bool {
        self.max_residual <= residual_abs
    }
}

/// Compares 4th-order central finite differences of the stored positions
/// against the right-hand side at each interior state.
///
/// The residual at a sample is the largest per-body norm of
/// `(−q_{i−2} + 16q_{i−1} − 30q_i + 16q_{i+1} − q_{i+2})/(12·dt²) − q̈`.
pub fn verify_trajectory(traj: &Trajectory) -> Result<ResidualStats> {
    let m = traj.states.len();
    if m < 5 {
        return Err(ChoreoError::Contract(format!(
            "finite-difference verification needs at least 5 states, got {m}"
        )));
    }
    let dt = traj.step;
    let n = traj.states[0].n_bodies();
    let dim = traj.states[0].positions[0].len();

    let mut max_residual: f64 = 0.0;
    let mut sum = 0.0;
    let mut samples = 0;
    for i in 2..m - 2 {
        let st = &traj.states[i];
        let acc = traj
            .problem
            .accel(&st.positions, &st.velocities)
            .map_err(|e| e.at_time(st.time))?;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let mut body_sq = 0.0;
            for d in 0..dim {
                let fd = (-traj.states[i - 2].positions[k][d]
                    + 16.0 * traj.states[i - 1].positions[k][d]
                    - 30.0 * st.positions[k][d]
                    + 16.0 * traj.states[i + 1].positions[k][d]
                    - traj.states[i + 2].positions[k][d])
                    / (12.0 * dt * dt);
                body_sq += (fd - acc[k][d]) * (fd - acc[k][d]);
            }
            worst = worst.max(body_sq.sqrt());
        }
        max_residual = max_residual.max(worst);
        sum += worst;
        samples += 1;
    }

    let energy_drift = energy_drift(traj);
    Ok(ResidualStats {
        max_residual,
        mean_residual: sum / samples as f64,
        samples,
        energy_drift,
    })
}

/// Total energy of a flat-space state: kinetic plus pair and central
/// potentials from the power-law primitive. `None` when a closed-form
/// primitive is unavailable or the space is curved.
pub fn energy(problem: &Problem, state: &SystemState) -> Option<f64> {
    if problem.space.is_curved() {
        return None;
    }
    let masses = problem.masses.as_slice();
    let mut e = 0.0;
    for (k, v) in state.velocities.iter().enumerate() {
        e += 0.5 * masses[k] * vecs::norm_sq(v);
    }
    let n = state.n_bodies();
    for k in 0..n {
        for j in k + 1..n {
            let r_sq = vecs::dist_sq(&state.positions[j], &state.positions[k]);
            e -= masses[j] * masses[k] * problem.force.pair_potential(r_sq).ok()?;
        }
    }
    if problem.central_mass > 0.0 {
        for (k, q) in state.positions.iter().enumerate() {
            let r_sq = vecs::norm_sq(q);
            e -= problem.central_mass * masses[k] * problem.force.pair_potential(r_sq).ok()?;
        }
    }
    Some(e)
}

fn energy_drift(traj: &Trajectory) -> Option<f64> {
    let e0 = energy(&traj.problem, &traj.states[0])?;
    let mut drift: f64 = 0.0;
    for st in &traj.states[1..] {
        drift = drift.max((energy(&traj.problem, st)? - e0).abs());
    }
    Some(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn classical() -> ForceLaw {
        ForceLaw::classical()
    }

    fn unit_masses(n: usize) -> MassVector {
        MassVector::equal(n, 1.0).unwrap()
    }

    /// Independent formulation: accumulate `m_j f(r²) · r · û` with explicit
    /// unit vectors, a different arithmetic path than the implementation.
    fn oracle_flat(q: &[Vec<f64>], m: &[f64], f: &ForceLaw) -> Vec<Vec<f64>> {
        let n = q.len();
        let dim = q[0].len();
        let mut acc = vec![vec![0.0; dim]; n];
        for k in 0..n {
            for j in 0..n {
                if j == k {
                    continue;
                }
                let r = vecs::dist_sq(&q[j], &q[k]).sqrt();
                let mag = m[j] * f.eval(r * r).unwrap() * r;
                for d in 0..dim {
                    acc[k][d] += mag * (q[j][d] - q[k][d]) / r;
                }
            }
        }
        acc
    }

    #[test]
    fn two_body_unit_separation() {
        let q = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let acc = accel_flat(&q, &unit_masses(2), &classical()).unwrap();
        assert!(vecs::dist_sq(&acc[0], &[1.0, 0.0]) < 1e-30);
        assert!(vecs::dist_sq(&acc[1], &[-1.0, 0.0]) < 1e-30);
    }

    #[test]
    fn equilateral_triangle_magnitudes() {
        let h = 3f64.sqrt() / 2.0;
        let q = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        let centroid = [0.5, h / 3.0];
        let acc = accel_flat(&q, &unit_masses(3), &classical()).unwrap();
        for (k, a) in acc.iter().enumerate() {
            assert!((vecs::norm(a) - 3f64.sqrt()).abs() < 1e-12);
            // Direction check: acceleration points from the body toward the centroid.
            let to_center = vecs::sub(&centroid, &q[k]);
            let cosine = vecs::dot(a, &to_center) / (vecs::norm(a) * vecs::norm(&to_center));
            assert!((cosine - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_unequal_masses_against_oracle() {
        let q = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![3.0, 0.0]];
        let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let acc = accel_flat(&q, &m, &classical()).unwrap();
        assert!((acc[0][0] - (2.0 + 9.0 / 27.0)).abs() < 1e-14);
        assert!(acc[0][1].abs() < 1e-30);
        let oracle = oracle_flat(&q, m.as_slice(), &classical());
        for k in 0..3 {
            assert!(vecs::dist_sq(&acc[k], &oracle[k]).sqrt() < 1e-12);
        }
    }

    #[test]
    fn momentum_is_conserved_to_round_off() {
        let q = vec![vec![0.3, -0.2], vec![1.1, 0.9], vec![-0.7, 0.4], vec![0.1, 2.0]];
        let m = MassVector::new(vec![1.0, 2.5, 0.3, 1.7]).unwrap();
        let acc = accel_flat(&q, &m, &classical()).unwrap();
        for d in 0..2 {
            let total: f64 = (0..4).map(|k| m.as_slice()[k] * acc[k][d]).sum();
            assert!(total.abs() < 1e-13);
        }
    }

    #[test]
    fn collision_is_reported() {
        let q = vec![vec![0.0, 0.0], vec![1e-6, 0.0]];
        let err = accel_flat(&q, &unit_masses(2), &classical()).unwrap_err();
        assert!(matches!(err, ChoreoError::Collision { i: 0, j: 1, .. }));
    }

    #[test]
    fn single_body_at_unit_radius_with_center() {
        let q = vec![vec![1.0, 0.0]];
        let acc = accel_flat_fixed_center(&q, &unit_masses(1), &classical(), 1.0).unwrap();
        assert!(vecs::dist_sq(&acc[0], &[-1.0, 0.0]) < 1e-30);
    }

    #[test]
    fn zero_central_mass_matches_plain_flat() {
        let q = vec![vec![0.4, 0.1], vec![-0.8, 0.6], vec![0.2, -1.1]];
        let m = MassVector::new(vec![1.0, 2.0, 0.5]).unwrap();
        let plain = accel_flat(&q, &m, &classical()).unwrap();
        let with_center = accel_flat_fixed_center(&q, &m, &classical(), 0.0).unwrap();
        for k in 0..3 {
            assert!(vecs::dist_sq(&plain[k], &with_center[k]) < 1e-30);
        }
    }

    #[test]
    fn symmetric_pair_with_center() {
        let q = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let acc = accel_flat_fixed_center(&q, &unit_masses(2), &classical(), 1.0).unwrap();
        assert!(vecs::dist_sq(&acc[0], &[-1.25, 0.0]) < 1e-28);
        assert!(vecs::dist_sq(&acc[1], &[1.25, 0.0]) < 1e-28);
    }

    #[test]
    fn body_at_origin_is_rejected() {
        let q = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let err = accel_flat_fixed_center(&q, &unit_masses(2), &classical(), 1.0).unwrap_err();
        assert!(matches!(err, ChoreoError::AtFixedCenter { i: 0 }));
    }

    #[test]
    fn orthogonal_pair_on_sphere() {
        let q = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let v = vec![vec![0.0; 3]; 2];
        let acc = accel_curved(&q, &v, &unit_masses(2), Curvature::Positive).unwrap();
        assert!(vecs::dist_sq(&acc[0], &[0.0, 1.0, 0.0]) < 1e-30);
        assert!(vecs::dist_sq(&acc[1], &[1.0, 0.0, 0.0]) < 1e-30);
    }

    #[test]
    fn hyperboloid_pair() {
        let q = vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 2f64.sqrt()]];
        let v = vec![vec![0.0; 3]; 2];
        let acc = accel_curved(&q, &v, &unit_masses(2), Curvature::Negative).unwrap();
        assert!(vecs::dist_sq(&acc[0], &[1.0, 0.0, 0.0]).sqrt() < 1e-15);
    }

    #[test]
    fn lone_body_on_equator_feels_only_velocity_term() {
        let vmag = 0.7;
        let q = vec![vec![1.0, 0.0, 0.0]];
        let v = vec![vec![0.0, vmag, 0.0]];
        let acc = accel_curved(&q, &v, &unit_masses(1), Curvature::Positive).unwrap();
        assert!(vecs::dist_sq(&acc[0], &[-vmag * vmag, 0.0, 0.0]).sqrt() < 1e-15);
    }

    #[test]
    fn antipodal_pair_is_singular() {
        let q = vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]];
        let v = vec![vec![0.0; 3]; 2];
        let err = accel_curved(&q, &v, &unit_masses(2), Curvature::Positive).unwrap_err();
        assert!(matches!(err, ChoreoError::SingularPair { i: 0, j: 1 }));
    }

    #[test]
    fn curved_constraint_consistency() {
        // q⊙q̈ + q̇⊙q̇ = 0 for states on the surface with tangent velocities.
        for sigma in [Curvature::Positive, Curvature::Negative] {
            let s = sigma.sign();
            let q = match sigma {
                Curvature::Positive => vec![
                    vec![0.6, 0.0, 0.8],
                    vec![0.0, 0.8, -0.6],
                    vec![(1.0f64 - 0.02).sqrt(), 0.1, 0.1],
                ],
                Curvature::Negative => vec![
                    vec![0.6, 0.0, (1.36f64).sqrt()],
                    vec![0.0, 0.8, (1.64f64).sqrt()],
                    vec![0.3, 0.4, (1.25f64).sqrt()],
                ],
            };
            // Tangent velocities: start from arbitrary vectors, strip normals.
            let mut v = vec![vec![0.3, -0.2, 0.5], vec![0.1, 0.4, -0.3], vec![-0.2, 0.2, 0.1]];
            for k in 0..3 {
                let t = sigma_dot(&q[k], &v[k], s);
                for d in 0..3 {
                    v[k][d] -= s * t * q[k][d];
                }
            }
            let acc = accel_curved(&q, &v, &unit_masses(3), sigma).unwrap();
            for k in 0..3 {
                let lhs = sigma_dot(&q[k], &acc[k], s) + sigma_dot(&v[k], &v[k], s);
                assert!(lhs.abs() < 1e-10, "sigma {s}: body {k} consistency {lhs:e}");
            }
        }
    }

    #[test]
    fn curved_center_on_equator() {
        let q = vec![vec![1.0, 0.0, 0.0]];
        let v = vec![vec![0.0; 3]];
        let acc =
            accel_curved_fixed_center(&q, &v, &unit_masses(1), Curvature::Positive, 1.0).unwrap();
        assert!(vecs::dist_sq(&acc[0], &[0.0, 0.0, 1.0]) < 1e-30);
    }

    #[test]
    fn curved_center_zero_mass_matches_plain() {
        let q = vec![vec![0.6, 0.0, 0.8], vec![0.0, 0.8, 0.6]];
        let v = vec![vec![0.0; 3]; 2];
        let plain = accel_curved(&q, &v, &unit_masses(2), Curvature::Positive).unwrap();
        let with_c =
            accel_curved_fixed_center(&q, &v, &unit_masses(2), Curvature::Positive, 0.0).unwrap();
        for k in 0..2 {
            assert!(vecs::dist_sq(&plain[k], &with_c[k]) < 1e-30);
        }
    }

    #[test]
    fn curved_center_at_latitude_against_direct_substitution() {
        let z: f64 = 0.6;
        let rho = (1.0 - z * z).sqrt();
        let q = vec![vec![rho, 0.0, z]];
        let v = vec![vec![0.0; 3]];
        let c = 1.3;
        let acc =
            accel_curved_fixed_center(&q, &v, &unit_masses(1), Curvature::Positive, c).unwrap();
        // Direct substitution with scalar arithmetic only.
        let den = (1.0 - z * z).powf(1.5);
        let expect = [-c * z * rho / den, 0.0, c * (1.0 - z * z) / den];
        assert!(vecs::dist_sq(&acc[0], &expect).sqrt() < 1e-14);
    }

    #[test]
    fn pole_separation_from_center_is_singular() {
        let q = vec![vec![0.0, 0.0, 1.0]];
        let v = vec![vec![0.0; 3]];
        let err = accel_curved_fixed_center(&q, &v, &unit_masses(1), Curvature::Positive, 1.0)
            .unwrap_err();
        assert!(matches!(err, ChoreoError::AtFixedCenter { i: 0 }));
    }

    fn circular_two_body(r: f64) -> (Problem, SystemState, f64) {
        // Balance: ω² = 2 f(4r²) for unit masses at ±(r, 0).
        let f = classical();
        let omega = (2.0 * f.eval(4.0 * r * r).unwrap()).sqrt();
        let problem = Problem {
            space: Space::Flat { dim: 2 },
            force: f,
            masses: unit_masses(2),
            central_mass: 0.0,
        };
        let state = SystemState::new(
            0.0,
            vec![vec![r, 0.0], vec![-r, 0.0]],
            vec![vec![0.0, omega * r], vec![0.0, -omega * r]],
        )
        .unwrap();
        (problem, state, 2.0 * PI / omega)
    }

    #[test]
    fn static_single_body_stays_put() {
        let problem = Problem {
            space: Space::Flat { dim: 2 },
            force: classical(),
            masses: unit_masses(1),
            central_mass: 0.0,
        };
        let state = SystemState::new(0.0, vec![vec![0.3, 0.4]], vec![vec![0.0, 0.0]]).unwrap();
        let traj = integrate(state.clone(), &problem, 0.1, 50, Scheme::Rk4).unwrap();
        for st in &traj.states {
            assert!(vecs::dist_sq(&st.positions[0], &state.positions[0]) < 1e-30);
        }
    }

    #[test]
    fn circular_orbit_closes_after_one_period() {
        let (problem, state, period) = circular_two_body(0.5);
        // Verlet is 2nd order, rk4 4th: step counts chosen for 1e-6 closure.
        for (scheme, steps) in [(Scheme::Rk4, 2000), (Scheme::Verlet, 16000)] {
            let traj = integrate(state.clone(), &problem, period / steps as f64, steps, scheme)
                .unwrap();
            assert!(traj.closure_error() < 1e-6, "{scheme:?}: {}", traj.closure_error());
        }
    }

    #[test]
    fn scheme_space_mismatch_is_rejected() {
        let (problem, state, _) = circular_two_body(0.5);
        assert!(integrate(state.clone(), &problem, 0.01, 1, Scheme::Rk4Projected).is_err());
        let curved = Problem {
            space: Space::Curved { sigma: Curvature::Positive },
            force: classical(),
            masses: unit_masses(1),
            central_mass: 0.0,
        };
        let cs = SystemState::new(0.0, vec![vec![1.0, 0.0, 0.0]], vec![vec![0.0, 0.3, 0.0]]).unwrap();
        assert!(integrate(cs, &curved, 0.01, 1, Scheme::Verlet).is_err());
    }

    #[test]
    fn projected_scheme_pins_constraint() {
        let curved = Problem {
            space: Space::Curved { sigma: Curvature::Positive },
            force: classical(),
            masses: unit_masses(1),
            central_mass: 0.0,
        };
        let cs = SystemState::new(0.0, vec![vec![1.0, 0.0, 0.0]], vec![vec![0.0, 0.5, 0.0]]).unwrap();
        let traj = integrate(cs, &curved, 0.01, 500, Scheme::Rk4Projected).unwrap();
        assert!(traj.max_constraint_defect() < 1e-14);
        for st in &traj.states {
            st.check_curved(Curvature::Positive, 1e-12).unwrap();
        }
    }

    #[test]
    fn verification_accepts_good_trajectory() {
        let (problem, state, period) = circular_two_body(0.5);
        let steps = 4000;
        let traj =
            integrate(state, &problem, period / steps as f64, steps, Scheme::Rk4).unwrap();
        let stats = verify_trajectory(&traj).unwrap();
        assert!(stats.max_residual < 1e-6, "residual {}", stats.max_residual);
        assert!(stats.passes(1e-6));
        assert!(stats.energy_drift.unwrap() < 1e-10);
    }

    #[test]
    fn verification_flags_perturbed_trajectory() {
        let (problem, state, period) = circular_two_body(0.5);
        let steps = 1000;
        let mut traj =
            integrate(state, &problem, period / steps as f64, steps, Scheme::Rk4).unwrap();
        traj.states[500].positions[0][0] += 1e-2;
        let stats = verify_trajectory(&traj).unwrap();
        assert!(!stats.passes(1e-8));
        assert!(stats.max_residual > 1.0);
    }

    #[test]
    fn static_state_residual_equals_force_magnitude() {
        let problem = Problem {
            space: Space::Flat { dim: 2 },
            force: classical(),
            masses: unit_masses(2),
            central_mass: 0.0,
        };
        let st = SystemState::new(
            0.0,
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap();
        let states: Vec<SystemState> = (0..5)
            .map(|i| SystemState { time: i as f64 * 0.1, ..st.clone() })
            .collect();
        let traj = Trajectory { states, step: 0.1, problem };
        let stats = verify_trajectory(&traj).unwrap();
        assert!((stats.max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_states_is_an_error() {
        let (problem, state, _) = circular_two_body(0.5);
        let traj = integrate(state, &problem, 0.01, 3, Scheme::Rk4).unwrap();
        assert!(verify_trajectory(&traj).is_err());
    }
}
