//! Variational search for flat choreographies by direct minimization of the
//! Lagrangian action over truncated Fourier loops.
//!
//! The action of one period of an equally spaced choreography on a loop `p`
//! of period `n` is
//! `A = ∫₀ⁿ [ Σ_k ½ m_k ‖ṗ(t+k)‖² + Σ_{j<k} m_j m_k F(‖q_j−q_k‖²) ] dt`,
//! with `F` the pair potential whose gradient reproduces the equations of
//! motion. Critical points are choreography solutions with the given law.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::choreography::{recentre, ChoreographyConfig, ConfigCheck, PhaseOffsets, RESIDUAL_SAMPLES};
use crate::dynamics::COLLISION_SQ;
use crate::error::{ChoreoError, Result};
use crate::model::{ForceLaw, MassVector, Space};
use crate::path::{DimSeries, FourierPath};

/// Default quadrature grid: uniform trapezoid with 2⁹ points per period,
/// which for periodic spectral integrands converges superalgebraically.
pub const ACTION_GRID: usize = 512;

/// Symmetry classes the search can impose on the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ansatz {
    /// `x(t)` odd (pure sines); `y(t)` even with half-period antisymmetry
    /// (cosines of odd harmonics only). Contains figure-eight loops with a
    /// vertical long axis, and circles.
    Eight,
    /// All harmonics of both coordinates free; only the constant terms are
    /// pinned to zero.
    Free,
}

/// Knobs for the minimization.
#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub order: usize,
    pub iterations: usize,
    pub grid: usize,
    pub seed: u64,
    /// Retries with a perturbed seed after collisions or stalls.
    pub restarts: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            order: 12,
            iterations: 4000,
            grid: ACTION_GRID,
            seed: 0,
            restarts: 5,
        }
    }
}

/// Outcome of the search: the recentered configuration, its action, the
/// equation-of-motion residual certificate, and convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub config: ChoreographyConfig,
    pub action: f64,
    pub check: ConfigCheck,
    pub converged: bool,
    pub iterations: usize,
    pub restarts_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Cos,
    Sin,
}

/// Fixed-period action functional over the free Fourier coefficients of a
/// planar loop, with precomputed trigonometric tables.
pub struct ActionProblem {
    n: usize,
    masses: Vec<f64>,
    force: ForceLaw,
    period: f64,
    order: usize,
    grid: usize,
    /// Free coefficients as `(dim, cos|sin, harmonic)` triples.
    map: Vec<(usize, Kind, usize)>,
    /// `cos(ω_m (t_i + k))` indexed `[i][k][m−1]`, and the sine analogue.
    cos_tab: Vec<Vec<Vec<f64>>>,
    sin_tab: Vec<Vec<Vec<f64>>>,
}

impl ActionProblem {
    pub fn new(
        n: usize,
        masses: &MassVector,
        force: &ForceLaw,
        ansatz: Ansatz,
        order: usize,
        grid: usize,
    ) -> Result<Self> {
        if n < 2 {
            return Err(ChoreoError::Contract("the search needs at least 2 bodies".into()));
        }
        if order < 4 {
            return Err(ChoreoError::Contract(format!("order must be at least 4, got {order}")));
        }
        if masses.len() != n {
            return Err(ChoreoError::Contract(format!(
                "expected {n} masses, got {}",
                masses.len()
            )));
        }
        if grid < 2 * order {
            return Err(ChoreoError::Contract(format!(
                "quadrature grid {grid} cannot resolve order {order}"
            )));
        }
        force.validate()?;
        // Closed-form pair potential required; probe it once up front.
        force.pair_potential(1.0)?;

        let mut map = Vec::new();
        match ansatz {
            Ansatz::Eight => {
                for m in 1..=order {
                    map.push((0, Kind::Sin, m));
                }
                for m in (1..=order).step_by(2) {
                    map.push((1, Kind::Cos, m));
                }
            }
            Ansatz::Free => {
                for d in 0..2 {
                    for m in 1..=order {
                        map.push((d, Kind::Cos, m));
                        map.push((d, Kind::Sin, m));
                    }
                }
            }
        }

        let period = n as f64;
        let mut cos_tab = Vec::with_capacity(grid);
        let mut sin_tab = Vec::with_capacity(grid);
        for i in 0..grid {
            let t = period * i as f64 / grid as f64;
            let mut ck = Vec::with_capacity(n);
            let mut sk = Vec::with_capacity(n);
            for k in 0..n {
                let s = t + k as f64;
                let mut cm = Vec::with_capacity(order);
                let mut sm = Vec::with_capacity(order);
                for m in 1..=order {
                    let w = 2.0 * PI * m as f64 / period;
                    let (sv, cv) = (w * s).sin_cos();
                    cm.push(cv);
                    sm.push(sv);
                }
                ck.push(cm);
                sk.push(sm);
            }
            cos_tab.push(ck);
            sin_tab.push(sk);
        }

        Ok(ActionProblem {
            n,
            masses: masses.as_slice().to_vec(),
            force: force.clone(),
            period,
            order,
            grid,
            map,
            cos_tab,
            sin_tab,
        })
    }

    pub fn n_params(&self) -> usize {
        self.map.len()
    }

    /// Reconstructs the loop encoded by a parameter vector.
    pub fn path(&self, params: &[f64]) -> Result<FourierPath> {
        if params.len() != self.map.len() {
            return Err(ChoreoError::Contract(format!(
                "expected {} parameters, got {}",
                self.map.len(),
                params.len()
            )));
        }
        let mut coeffs = vec![DimSeries::zero(self.order); 2];
        for (&(d, kind, m), &v) in self.map.iter().zip(params) {
            match kind {
                Kind::Cos => coeffs[d].1[m - 1] = v,
                Kind::Sin => coeffs[d].2[m - 1] = v,
            }
        }
        FourierPath::new(2, self.period, coeffs)
    }

    /// Positions and velocities of all bodies at every grid time.
    /// Layout: `values[i][k][d]`.
    fn states(&self, params: &[f64]) -> (Vec<Vec<[f64; 2]>>, Vec<Vec<[f64; 2]>>) {
        let mut pos = vec![vec![[0.0; 2]; self.n]; self.grid];
        let mut vel = vec![vec![[0.0; 2]; self.n]; self.grid];
        for i in 0..self.grid {
            for k in 0..self.n {
                let cm = &self.cos_tab[i][k];
                let sm = &self.sin_tab[i][k];
                for (&(d, kind, m), &v) in self.map.iter().zip(params) {
                    let w = 2.0 * PI * m as f64 / self.period;
                    match kind {
                        Kind::Cos => {
                            pos[i][k][d] += v * cm[m - 1];
                            vel[i][k][d] -= v * w * sm[m - 1];
                        }
                        Kind::Sin => {
                            pos[i][k][d] += v * sm[m - 1];
                            vel[i][k][d] += v * w * cm[m - 1];
                        }
                    }
                }
            }
        }
        (pos, vel)
    }

    /// Discretized action; `None` when the loop passes through a collision.
    pub fn action(&self, params: &[f64]) -> Option<f64> {
        let (pos, vel) = self.states(params);
        let dt = self.period / self.grid as f64;
        let mut total = 0.0;
        for i in 0..self.grid {
            let mut lagrangian = 0.0;
            for k in 0..self.n {
                lagrangian +=
                    0.5 * self.masses[k] * (vel[i][k][0] * vel[i][k][0] + vel[i][k][1] * vel[i][k][1]);
            }
            for k in 0..self.n {
                for j in k + 1..self.n {
                    let dx = pos[i][j][0] - pos[i][k][0];
                    let dy = pos[i][j][1] - pos[i][k][1];
                    let r_sq = dx * dx + dy * dy;
                    if r_sq < COLLISION_SQ {
                        return None;
                    }
                    lagrangian +=
                        self.masses[j] * self.masses[k] * self.force.pair_potential(r_sq).ok()?;
                }
            }
            total += lagrangian * dt;
        }
        Some(total)
    }

    /// Action and its analytic gradient with respect to the parameters.
    pub fn action_with_gradient(&self, params: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (pos, vel) = self.states(params);
        let dt = self.period / self.grid as f64;
        let mut total = 0.0;
        let mut grad = vec![0.0; self.map.len()];
        for i in 0..self.grid {
            let mut lagrangian = 0.0;
            for k in 0..self.n {
                lagrangian +=
                    0.5 * self.masses[k] * (vel[i][k][0] * vel[i][k][0] + vel[i][k][1] * vel[i][k][1]);
            }
            // Kinetic part: d/dθ ½m‖ṗ‖² = m ṗ · ∂ṗ/∂θ.
            for (p_idx, &(d, kind, m)) in self.map.iter().enumerate() {
                let w = 2.0 * PI * m as f64 / self.period;
                let mut acc = 0.0;
                for k in 0..self.n {
                    let dv = match kind {
                        Kind::Cos => -w * self.sin_tab[i][k][m - 1],
                        Kind::Sin => w * self.cos_tab[i][k][m - 1],
                    };
                    acc += self.masses[k] * vel[i][k][d] * dv;
                }
                grad[p_idx] += acc * dt;
            }
            // Pair part: dF(r²)/dθ = −f(r²) · Δ_d · ∂Δ_d/∂θ, since F′ = −f/2.
            for k in 0..self.n {
                for j in k + 1..self.n {
                    let dx = pos[i][j][0] - pos[i][k][0];
                    let dy = pos[i][j][1] - pos[i][k][1];
                    let r_sq = dx * dx + dy * dy;
                    if r_sq < COLLISION_SQ {
                        return None;
                    }
                    let mm = self.masses[j] * self.masses[k];
                    lagrangian += mm * self.force.pair_potential(r_sq).ok()?;
                    let w_pair = -mm * self.force.eval_unchecked(r_sq);
                    for (p_idx, &(d, kind, m)) in self.map.iter().enumerate() {
                        let basis_j = match kind {
                            Kind::Cos => self.cos_tab[i][j][m - 1],
                            Kind::Sin => self.sin_tab[i][j][m - 1],
                        };
                        let basis_k = match kind {
                            Kind::Cos => self.cos_tab[i][k][m - 1],
                            Kind::Sin => self.sin_tab[i][k][m - 1],
                        };
                        let delta_d = if d == 0 { dx } else { dy };
                        grad[p_idx] += w_pair * delta_d * (basis_j - basis_k) * dt;
                    }
                }
            }
            total += lagrangian * dt;
        }
        Some((total, grad))
    }
}

/// Action of an arbitrary stored configuration on a uniform grid.
pub fn action_of_config(config: &ChoreographyConfig, grid: usize) -> Result<f64> {
    config.validate()?;
    if config.space.is_curved() {
        return Err(ChoreoError::Contract("the action functional is defined for flat space".into()));
    }
    if config.central_mass > 0.0 {
        return Err(ChoreoError::Contract(
            "the action functional covers pair interactions only".into(),
        ));
    }
    let period = config.path.period();
    let dt = period / grid as f64;
    let masses = config.masses.as_slice();
    let n = config.n_bodies();
    let mut total = 0.0;
    for i in 0..grid {
        let t = period * i as f64 / grid as f64;
        let st = config.state_at(t);
        let mut lagrangian = 0.0;
        for k in 0..n {
            lagrangian += 0.5 * masses[k] * crate::vecs::norm_sq(&st.velocities[k]);
        }
        for k in 0..n {
            for j in k + 1..n {
                let r_sq = crate::vecs::dist_sq(&st.positions[j], &st.positions[k]);
                lagrangian += masses[j] * masses[k] * config.force.pair_potential(r_sq)?;
            }
        }
        total += lagrangian * dt;
    }
    Ok(total)
}

/// Radius at which a regular `n`-gon of unit masses rotates with period
/// exactly `n` under the law `f`: solves
/// `Σ_j (1 − cos(2πj/n)) f(2r²(1 − cos(2πj/n))) = (2π/n)²` by bisection.
/// The left side is strictly decreasing in `r` for admissible laws.
fn circle_radius_for_period(n: usize, f: &ForceLaw) -> Result<f64> {
    let target = (2.0 * PI / n as f64).powi(2);
    let rate_sq = |r: f64| -> Result<f64> {
        let mut total = 0.0;
        for j in 1..n {
            let gap = 1.0 - (2.0 * PI * j as f64 / n as f64).cos();
            total += gap * f.eval(2.0 * r * r * gap)?;
        }
        Ok(total)
    };
    let mut lo = 1e-6;
    let mut hi = 1.0;
    while rate_sq(lo)? < target {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(ChoreoError::Infeasible("no circle radius matches the period".into()));
        }
    }
    while rate_sq(hi)? > target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(ChoreoError::Infeasible("no circle radius matches the period".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate_sq(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn seed_params(problem: &ActionProblem, ansatz: Ansatz, f: &ForceLaw, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut params = vec![0.0; problem.n_params()];
    match ansatz {
        Ansatz::Eight => {
            // Vertical figure-eight shape: long axis along y at the base
            // harmonic, short axis along x at the doubled harmonic.
            let scale = 1.0;
            for (idx, &(d, kind, m)) in problem.map.iter().enumerate() {
                if d == 1 && kind == Kind::Cos && m == 1 {
                    params[idx] = scale;
                }
                if d == 0 && kind == Kind::Sin && m == 2 {
                    params[idx] = 0.35 * scale;
                }
            }
        }
        Ansatz::Free => {
            // Near-circular seed at the radius whose rotation period is n.
            let r = circle_radius_for_period(problem.n, f)?;
            for (idx, &(d, kind, m)) in problem.map.iter().enumerate() {
                if m == 1 {
                    if d == 0 && kind == Kind::Cos {
                        params[idx] = r;
                    }
                    if d == 1 && kind == Kind::Sin {
                        params[idx] = r;
                    }
                }
            }
        }
    }
    for v in params.iter_mut() {
        *v += 1e-3 * rng.random_range(-1.0..1.0);
    }
    Ok(params)
}

/// Searches for a choreography of `n` bodies under the law `f` by monotone
/// gradient descent (Barzilai–Borwein steps, Armijo backtracking) on the
/// discretized action. Restarts with a perturbed seed after collisions or
/// stalls, up to the configured budget; the same seed always produces the
/// same outcome.
pub fn minimize_action(
    n: usize,
    masses: &MassVector,
    f: &ForceLaw,
    ansatz: Ansatz,
    opts: &MinimizeOptions,
) -> Result<MinimizeOutcome> {
    let problem = ActionProblem::new(n, masses, f, ansatz, opts.order, opts.grid)?;

    let mut best: Option<(f64, Vec<f64>, bool, usize)> = None;
    let mut restarts_used = 0;
    for attempt in 0..=opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt as u64));
        let mut params = seed_params(&problem, ansatz, f, &mut rng)?;
        if attempt > 0 {
            restarts_used += 1;
            for v in params.iter_mut() {
                *v += 0.05 * rng.random_range(-1.0..1.0);
            }
        }
        match descend(&problem, params, opts.iterations) {
            Some((value, params, converged, used)) => {
                let better = match &best {
                    Some((v, ..)) => value < *v,
                    None => true,
                };
                if better {
                    best = Some((value, params, converged, used));
                }
                if converged {
                    break;
                }
            }
            None => continue,
        }
    }

    let (value, params, converged, iterations) = best.ok_or_else(|| {
        ChoreoError::NoConvergence(format!(
            "every start collided within {} restarts",
            opts.restarts
        ))
    })?;

    let config = ChoreographyConfig {
        path: problem.path(&params)?,
        offsets: PhaseOffsets::equally_spaced(n)?,
        masses: masses.clone(),
        space: Space::Flat { dim: 2 },
        force: f.clone(),
        central_mass: 0.0,
    };
    let config = recentre(&config)?;
    let check = config.verify(RESIDUAL_SAMPLES)?;
    Ok(MinimizeOutcome {
        config,
        action: value,
        check,
        converged,
        iterations,
        restarts_used,
    })
}

/// Monotone descent loop. Returns `None` when even the start collides.
///
/// The kinetic term gives harmonic `m` a curvature of order `ω_m²`, so the
/// raw gradient is badly scaled across harmonics; descent runs on the
/// diagonally preconditioned direction `g_m / (1 + ω_m²)` with
/// Barzilai–Borwein steps in the preconditioned metric.
fn descend(
    problem: &ActionProblem,
    start: Vec<f64>,
    iterations: usize,
) -> Option<(f64, Vec<f64>, bool, usize)> {
    let pre: Vec<f64> = problem
        .map
        .iter()
        .map(|&(_, _, m)| {
            let w = 2.0 * PI * m as f64 / problem.period;
            1.0 / (1.0 + w * w)
        })
        .collect();

    let mut x = start;
    let (mut value, mut grad) = problem.action_with_gradient(&x)?;
    let mut dir: Vec<f64> = grad.iter().zip(&pre).map(|(g, p)| g * p).collect();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut converged = false;
    let mut used = 0;

    for iter in 0..iterations {
        used = iter + 1;
        // Directional derivative along the preconditioned direction.
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let g_inf = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if g_inf <= 1e-8 * value.abs().max(1.0) {
            converged = true;
            break;
        }

        // Barzilai–Borwein step from the previous displacement, clamped.
        let mut step = match &prev {
            Some((dx, ddir)) => {
                let num: f64 = dx.iter().map(|a| a * a).sum();
                let den: f64 = dx.iter().zip(ddir).map(|(a, b)| a * b).sum();
                if den > 0.0 {
                    (num / den).clamp(1e-12, 1e3)
                } else {
                    1e-2
                }
            }
            None => 0.1 / (1.0 + slope.sqrt()),
        };

        // Armijo backtracking keeps accepted iterates strictly decreasing.
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi - step * di).collect();
            if let Some(trial_value) = problem.action(&trial) {
                if trial_value <= value - 1e-4 * step * slope {
                    accepted = Some((trial, trial_value));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((new_x, new_value)) = accepted else {
            // No admissible decrease: either the floating-point floor of
            // the quadrature or a genuine stall.
            converged = g_inf <= 1e-7 * value.abs().max(1.0);
            break;
        };

        let (_, new_grad) = problem.action_with_gradient(&new_x)?;
        let new_dir: Vec<f64> = new_grad.iter().zip(&pre).map(|(g, p)| g * p).collect();
        let dx: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let ddir: Vec<f64> = new_dir.iter().zip(&dir).map(|(a, b)| a - b).collect();
        prev = Some((dx, ddir));
        x = new_x;
        value = new_value;
        grad = new_grad;
        dir = new_dir;
    }
    Some((value, x, converged, used))
}
