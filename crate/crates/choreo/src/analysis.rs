//! Numerical mass-rigidity certificates for choreography configurations:
//! separation-vector span, per-mode exclusion sums, deviation identities,
//! the assembled mass-feasibility nullspace, reflection identities for
//! axisymmetric loops, and the final verdict.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::choreography::ChoreographyConfig;
use crate::error::{ChoreoError, Result};
use crate::model::{sigma_dot, Space, Tolerances};
use crate::spectral::dft_basis;
use crate::vecs;

/// Samples closer than this (in separation distance) are dropped from
/// analysis grids; the identities hold off collisions anyway.
pub const SEPARATION_CUTOFF: f64 = 1e-8;

/// Uniform time grid over one period with near-collision samples removed.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub times: Vec<f64>,
    pub excluded: usize,
}

/// Builds the analysis grid: `sample_count` uniform times, excluding any
/// where two bodies come within [`SEPARATION_CUTOFF`] of each other.
pub fn sample_grid(config: &ChoreographyConfig, sample_count: usize) -> Result<SampleGrid> {
    if sample_count == 0 {
        return Err(ChoreoError::Contract("need at least one sample".into()));
    }
    let n = config.n_bodies();
    let period = config.path.period();
    let h = config.offsets.as_slice();
    let mut times = Vec::with_capacity(sample_count);
    let mut excluded = 0;
    for i in 0..sample_count {
        let t = i as f64 * period / sample_count as f64;
        let positions: Vec<Vec<f64>> = h.iter().map(|&hk| config.path.position(t + hk)).collect();
        let mut clear = true;
        'pairs: for a in 0..n {
            for b in (a + 1)..n {
                if vecs::dist_sq(&positions[a], &positions[b]) < SEPARATION_CUTOFF * SEPARATION_CUTOFF {
                    clear = false;
                    break 'pairs;
                }
            }
        }
        if clear {
            times.push(t);
        } else {
            excluded += 1;
        }
    }
    if times.is_empty() {
        return Err(ChoreoError::Contract(
            "every sample sits at a near-collision; nothing to analyze".into(),
        ));
    }
    Ok(SampleGrid { times, excluded })
}

fn require_equally_spaced(config: &ChoreographyConfig) -> Result<()> {
    if !config.offsets.is_equally_spaced() {
        return Err(ChoreoError::Contract(
            "this analysis needs the equally spaced normal form (h_k = k, period n)".into(),
        ));
    }
    Ok(())
}

fn require_flat(config: &ChoreographyConfig) -> Result<()> {
    if config.space.is_curved() {
        return Err(ChoreoError::Contract("this analysis needs flat space".into()));
    }
    Ok(())
}

fn require_curved(config: &ChoreographyConfig) -> Result<f64> {
    match config.space {
        Space::Curved { sigma } => Ok(sigma.sign()),
        Space::Flat { .. } => Err(ChoreoError::Contract("this analysis needs curved space".into())),
    }
}

/// Separation vectors `Δ_j(t) = p(t+j) − p(t)` for `j = 1..n−1`.
pub fn delta_vectors(config: &ChoreographyConfig, t: f64) -> Result<Vec<Vec<f64>>> {
    require_equally_spaced(config)?;
    let p0 = config.path.position(t);
    Ok((1..config.n_bodies())
        .map(|j| {
            let pj = config.path.position(t + j as f64);
            vecs::sub(&pj, &p0)
        })
        .collect())
}

/// The curved analog of a separation term: the tangential attraction
/// `(p(t+j) − σ·g·p(t)) / (σ − σ·g²)^{3/2}` with `g = p(t+j) ⊙ p(t)`.
pub fn curved_pair_term(config: &ChoreographyConfig, t: f64, j: usize) -> Result<Vec<f64>> {
    let sigma = require_curved(config)?;
    let p0 = config.path.position(t);
    let pj = config.path.position(t + j as f64);
    let g = sigma_dot(&pj, &p0, sigma);
    let den = sigma - sigma * g * g;
    if den < crate::dynamics::COLLISION_SQ {
        return Err(ChoreoError::SingularPair { i: 0, j }.at_time(t));
    }
    let scale = den.powf(1.5);
    Ok(p0
        .iter()
        .zip(&pj)
        .map(|(&q0, &qj)| (qj - sigma * g * q0) / scale)
        .collect())
}

/// Rank structure of the separation vectors over the sample grid.
#[derive(Debug, Clone)]
pub struct RankProfile {
    /// Maximum rank attained over the grid.
    pub dim: usize,
    /// `(rank, fraction of usable samples attaining it)`, ascending in rank.
    pub histogram: Vec<(usize, f64)>,
    pub excluded_samples: usize,
}

/// Dimension spanned by `Δ_1(t)..Δ_{n−1}(t)` across one period.
pub fn span_dimension(
    config: &ChoreographyConfig,
    sample_count: usize,
    tol: &Tolerances,
) -> Result<RankProfile> {
    require_equally_spaced(config)?;
    let grid = sample_grid(config, sample_count)?;
    let n = config.n_bodies();
    let dim = config.path.dim();
    let ranks: Vec<usize> = grid
        .times
        .par_iter()
        .map(|&t| {
            let deltas = delta_vectors(config, t).expect("equally spaced checked above");
            let m = DMatrix::from_fn(n - 1, dim, |r, c| deltas[r][c]);
            rank_of(&m, tol.rank_rel)
        })
        .collect();
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max_rank + 1];
    for r in &ranks {
        counts[*r] += 1;
    }
    let total = ranks.len() as f64;
    let histogram = counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(rank, c)| (rank, c as f64 / total))
        .collect();
    Ok(RankProfile { dim: max_rank, histogram, excluded_samples: grid.excluded })
}

fn rank_of(m: &DMatrix<f64>, rel_cutoff: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    match sv.first() {
        Some(&largest) if largest > 0.0 => {
            sv.iter().filter(|&&s| s > rel_cutoff * largest).count()
        }
        _ => 0,
    }
}

/// True when all separations `‖Δ_j(t)‖` agree within `tol` at every sample,
/// i.e. the bodies sit at the vertices of a regular simplex for all time.
pub fn simplex_test(config: &ChoreographyConfig, sample_count: usize, tol: f64) -> Result<bool> {
    require_equally_spaced(config)?;
    let grid = sample_grid(config, sample_count)?;
    for &t in &grid.times {
        let deltas = delta_vectors(config, t)?;
        let norms: Vec<f64> = deltas.iter().map(|d| vecs::norm(d)).collect();
        for a in 0..norms.len() {
            for b in (a + 1)..norms.len() {
                if (norms[a] - norms[b]).abs() >= tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The two flat deviation identities at a single time, for label shift `k`:
/// `Σ_j (m_{k+j} − M/n)·Δ_j·f(‖Δ_j‖²)` and `Σ_j (m_{k+j} − M/n)·Δ_j`.
/// Both vanish identically on genuine equally spaced choreographies.
pub fn deviation_identity_flat(
    config: &ChoreographyConfig,
    k: isize,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    require_equally_spaced(config)?;
    require_flat(config)?;
    let n = config.n_bodies();
    let mean = config.masses.total() / n as f64;
    let deltas = delta_vectors(config, t)?;
    let dim = config.path.dim();
    let mut with_f = vec![0.0; dim];
    let mut without_f = vec![0.0; dim];
    for (j, delta) in deltas.iter().enumerate() {
        let coef = config.masses.cyclic(k + (j + 1) as isize) - mean;
        let fval = config.force.eval(vecs::norm_sq(delta))?;
        vecs::axpy(&mut with_f, coef * fval, delta);
        vecs::axpy(&mut without_f, coef, delta);
    }
    Ok((with_f, without_f))
}

/// Max-norm of the flat deviation identities over the sample grid.
pub fn deviation_residual_flat(
    config: &ChoreographyConfig,
    k: isize,
    sample_count: usize,
) -> Result<(f64, f64)> {
    let grid = sample_grid(config, sample_count)?;
    let pairs = grid
        .times
        .par_iter()
        .map(|&t| {
            deviation_identity_flat(config, k, t)
                .map(|(wf, wo)| (vecs::norm(&wf), vecs::norm(&wo)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs
        .into_iter()
        .fold((0.0f64, 0.0f64), |(af, ac), (bf, bc)| (af.max(bf), ac.max(bc))))
}

/// The curved deviation identity at a single time:
/// `Σ_j (m_{k+j} − M/n) · (p(t+j) − σ g p(t)) / (σ − σ g²)^{3/2}`.
pub fn deviation_identity_curved(
    config: &ChoreographyConfig,
    k: isize,
    t: f64,
) -> Result<Vec<f64>> {
    require_equally_spaced(config)?;
    let n = config.n_bodies();
    let mean = config.masses.total() / n as f64;
    let mut sum = vec![0.0; 3];
    for j in 1..n {
        let coef = config.masses.cyclic(k + j as isize) - mean;
        let term = curved_pair_term(config, t, j)?;
        vecs::axpy(&mut sum, coef, &term);
    }
    Ok(sum)
}

/// Max-norm of the curved deviation identity over the sample grid.
pub fn deviation_residual_curved(
    config: &ChoreographyConfig,
    k: isize,
    sample_count: usize,
) -> Result<f64> {
    let grid = sample_grid(config, sample_count)?;
    let norms = grid
        .times
        .par_iter()
        .map(|&t| deviation_identity_curved(config, k, t).map(|v| vecs::norm(&v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

/// Complex mode sums at a single time for mode `l`:
/// `Σ_j λ_l^{j−1}·Δ_j·f(‖Δ_j‖²)` and `Σ_j λ_l^{j−1}·Δ_j`.
pub fn mode_terms_flat(
    config: &ChoreographyConfig,
    l: usize,
    t: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    require_equally_spaced(config)?;
    require_flat(config)?;
    let n = config.n_bodies();
    check_mode(l, n)?;
    let basis = dft_basis(n)?;
    let deltas = delta_vectors(config, t)?;
    let dim = config.path.dim();
    let mut with_f = vec![Complex64::new(0.0, 0.0); dim];
    let mut without_f = vec![Complex64::new(0.0, 0.0); dim];
    for (idx, delta) in deltas.iter().enumerate() {
        let j = idx + 1;
        let lam = basis.eigenvalue(l as isize).powi(j as i32 - 1);
        let fval = config.force.eval(vecs::norm_sq(delta))?;
        for d in 0..dim {
            with_f[d] += lam * delta[d] * fval;
            without_f[d] += lam * delta[d];
        }
    }
    Ok((with_f, without_f))
}

/// Curved mode sum at a single time: `Σ_j λ_l^{j−1} · curved_pair_term_j(t)`.
pub fn mode_term_curved(
    config: &ChoreographyConfig,
    l: usize,
    t: f64,
) -> Result<Vec<Complex64>> {
    require_equally_spaced(config)?;
    require_curved(config)?;
    let n = config.n_bodies();
    check_mode(l, n)?;
    let basis = dft_basis(n)?;
    let mut sum = vec![Complex64::new(0.0, 0.0); 3];
    for j in 1..n {
        let lam = basis.eigenvalue(l as isize).powi(j as i32 - 1);
        let term = curved_pair_term(config, t, j)?;
        for d in 0..3 {
            sum[d] += lam * term[d];
        }
    }
    Ok(sum)
}

fn check_mode(l: usize, n: usize) -> Result<()> {
    if l == 0 || l >= n {
        return Err(ChoreoError::Contract(format!(
            "mode must lie in 1..{} (mode n is orthogonal to every deviation), got {l}",
            n - 1
        )));
    }
    Ok(())
}

fn complex_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Per-`k` sine-weighted sums that appear for even body counts.
#[derive(Debug, Clone)]
pub struct SineResidual {
    /// Label `k ∈ {1..n}` of the skipped pair `{k, k+n/2}`.
    pub k: usize,
    pub with_f: f64,
    pub without_f: f64,
}

/// Mode-exclusion residuals over the sample grid. A norm above tolerance
/// excludes the mode: no mass vector loading it can make this path an
/// equally spaced choreography.
#[derive(Debug, Clone)]
pub struct ModeResidualFlat {
    pub with_f: f64,
    pub without_f: f64,
    /// Present only for even `n`, where the conjugate combination yields
    /// extra sine-weighted sums.
    pub sine: Option<Vec<SineResidual>>,
    pub excluded_samples: usize,
}

/// Mode-`l` exclusion residuals for a flat equally spaced configuration.
pub fn mode_residual_flat(
    config: &ChoreographyConfig,
    l: usize,
    sample_count: usize,
) -> Result<ModeResidualFlat> {
    require_equally_spaced(config)?;
    require_flat(config)?;
    let n = config.n_bodies();
    check_mode(l, n)?;
    let grid = sample_grid(config, sample_count)?;

    let sums = grid
        .times
        .par_iter()
        .map(|&t| {
            let (wf, wo) = mode_terms_flat(config, l, t)?;
            Ok((complex_norm(&wf), complex_norm(&wo)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (with_f, without_f) = sums
        .into_iter()
        .fold((0.0f64, 0.0f64), |(af, ac), (bf, bc)| (af.max(bf), ac.max(bc)));

    let sine = if n % 2 == 0 {
        let mut rows = Vec::with_capacity(n);
        for k in 1..=n {
            let maxima = grid
                .times
                .par_iter()
                .map(|&t| sine_sums(config, l, k, t))
                .collect::<Result<Vec<_>>>()?;
            let (swf, swo) = maxima
                .into_iter()
                .fold((0.0f64, 0.0f64), |(af, ac), (bf, bc)| (af.max(bf), ac.max(bc)));
            rows.push(SineResidual { k, with_f: swf, without_f: swo });
        }
        Some(rows)
    } else {
        None
    };

    Ok(ModeResidualFlat { with_f, without_f, sine, excluded_samples: grid.excluded })
}

/// `Σ_{j ∉ {k, k+n/2}} sin(2πl(k−j)/n)·Δ_j·f` and its f-free analog (even n).
fn sine_sums(config: &ChoreographyConfig, l: usize, k: usize, t: f64) -> Result<(f64, f64)> {
    let n = config.n_bodies();
    let half = (n / 2) as isize;
    let deltas = delta_vectors(config, t)?;
    let dim = config.path.dim();
    let mut with_f = vec![0.0; dim];
    let mut without_f = vec![0.0; dim];
    for (idx, delta) in deltas.iter().enumerate() {
        let j = (idx + 1) as isize;
        let r = (k as isize - j).rem_euclid(n as isize);
        if r == 0 || r == half {
            continue;
        }
        let w = (2.0 * std::f64::consts::PI * l as f64 * (k as isize - j) as f64 / n as f64).sin();
        let fval = config.force.eval(vecs::norm_sq(delta))?;
        vecs::axpy(&mut with_f, w * fval, delta);
        vecs::axpy(&mut without_f, w, delta);
    }
    Ok((vecs::norm(&with_f), vecs::norm(&without_f)))
}

/// Mode-`l` exclusion residual for a curved equally spaced configuration.
pub fn mode_residual_curved(
    config: &ChoreographyConfig,
    l: usize,
    sample_count: usize,
) -> Result<f64> {
    let grid = sample_grid(config, sample_count)?;
    let norms = grid
        .times
        .par_iter()
        .map(|&t| mode_term_curved(config, l, t).map(|v| complex_norm(&v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

/// What the computed nullspace says about admissible mass deviations.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityClass {
    /// Only the zero deviation: all masses forced equal.
    Rigid,
    /// One degree of freedom along the alternating vector: odd-labeled
    /// masses equal and even-labeled masses equal.
    Alternating,
    /// Anything else, reported verbatim.
    Other(String),
}

/// Nullspace of the assembled deviation-identity system.
#[derive(Debug, Clone)]
pub struct Feasibility {
    pub nullspace_dim: usize,
    /// Unit-norm nullspace vectors in mass-deviation space, sign-fixed.
    pub basis: Vec<Vec<f64>>,
    pub classification: FeasibilityClass,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Smallest retained over largest discarded singular value; `None`
    /// when nothing is discarded.
    pub spectral_gap: Option<f64>,
    pub rows: usize,
    pub excluded_samples: usize,
}

/// Assembles the linear system the deviation identities impose on the mass
/// deviations `μ_1..μ_n` (with `Σ μ = 0` appended) and extracts its
/// numerical nullspace.
///
/// Rows are ordered by (time index, label shift k, identity kind,
/// component); the caller should have verified the path is a genuine
/// solution for at least one mass vector, otherwise the result is
/// meaningless.
pub fn mass_feasibility(
    config: &ChoreographyConfig,
    sample_count: usize,
    tol: &Tolerances,
) -> Result<Feasibility> {
    require_equally_spaced(config)?;
    let n = config.n_bodies();
    let grid = sample_grid(config, sample_count)?;
    if grid.times.len() < n {
        return Err(ChoreoError::Contract(format!(
            "need at least {} usable samples for {} unknowns, got {}",
            n,
            n,
            grid.times.len()
        )));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    match config.space {
        Space::Flat { dim } => {
            for &t in &grid.times {
                let deltas = delta_vectors(config, t)?;
                let fvals = deltas
                    .iter()
                    .map(|d| config.force.eval(vecs::norm_sq(d)))
                    .collect::<Result<Vec<f64>>>()?;
                for k in 0..n {
                    for d in 0..dim {
                        let mut row = vec![0.0; n];
                        for (idx, delta) in deltas.iter().enumerate() {
                            let j = idx + 1;
                            row[(k + j) % n] += delta[d] * fvals[idx];
                        }
                        rows.push(row);
                    }
                    for d in 0..dim {
                        let mut row = vec![0.0; n];
                        for (idx, delta) in deltas.iter().enumerate() {
                            let j = idx + 1;
                            row[(k + j) % n] += delta[d];
                        }
                        rows.push(row);
                    }
                }
            }
        }
        Space::Curved { .. } => {
            for &t in &grid.times {
                let terms = (1..n)
                    .map(|j| curved_pair_term(config, t, j))
                    .collect::<Result<Vec<_>>>()?;
                for k in 0..n {
                    for d in 0..3 {
                        let mut row = vec![0.0; n];
                        for (idx, term) in terms.iter().enumerate() {
                            let j = idx + 1;
                            row[(k + j) % n] += term[d];
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }
    rows.push(vec![1.0; n]);

    let row_count = rows.len();
    let matrix = DMatrix::from_fn(row_count, n, |r, c| rows[r][c]);
    let svd = matrix.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut pairs: Vec<(f64, Vec<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, v_t.row(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let singular_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = tol.rank_rel * sigma_max;
    let retained = singular_values.iter().filter(|&&s| s > cutoff).count();
    let nullspace_dim = n - retained;
    // When nothing is discarded the noise floor σ_max·ε stands in for the
    // largest discarded value, so a full-rank claim still reports how far
    // the spectrum sits above numerical zero.
    let spectral_gap = if retained > 0 {
        let floor = singular_values
            .get(retained)
            .copied()
            .unwrap_or(0.0)
            .max(sigma_max * f64::EPSILON)
            .max(f64::MIN_POSITIVE);
        Some(singular_values[retained - 1] / floor)
    } else {
        None
    };

    let basis: Vec<Vec<f64>> = pairs[retained..]
        .iter()
        .map(|(_, v)| normalize_sign(v))
        .collect();

    let classification = classify(nullspace_dim, &basis, n);
    Ok(Feasibility {
        nullspace_dim,
        basis,
        classification,
        singular_values,
        spectral_gap,
        rows: row_count,
        excluded_samples: grid.excluded,
    })
}

fn normalize_sign(v: &[f64]) -> Vec<f64> {
    let norm = vecs::norm(v);
    let sign = v
        .iter()
        .find(|x| x.abs() > 1e-12 * norm.max(1.0))
        .map(|&x| if x < 0.0 { -1.0 } else { 1.0 })
        .unwrap_or(1.0);
    v.iter().map(|&x| sign * x / norm).collect()
}

fn classify(dim: usize, basis: &[Vec<f64>], n: usize) -> FeasibilityClass {
    match dim {
        0 => FeasibilityClass::Rigid,
        1 if n % 2 == 0 => {
            let v = &basis[0];
            let scale = vecs::norm(v);
            let alternating = v
                .iter()
                .enumerate()
                .all(|(j, &x)| (x - v[0] * if j % 2 == 0 { 1.0 } else { -1.0 }).abs() < 1e-6 * scale);
            if alternating {
                FeasibilityClass::Alternating
            } else {
                FeasibilityClass::Other("one degree of freedom, not alternating".into())
            }
        }
        d => FeasibilityClass::Other(format!("{d} degrees of freedom")),
    }
}

/// Residuals of the four reflection identities for a pair of bodies on an
/// axis-normalized planar loop, plus the f-consistency certificate that
/// bounds the admissible mass difference.
#[derive(Debug, Clone)]
pub struct ReflectionCheck {
    /// Max-norm residuals of the four identities, in order.
    pub residuals: [f64; 4],
    /// Max-norm of (identity-1 sum) − f(‖D‖²)·(identity-3 sum); zero forces
    /// the mass-difference terms in both identities to agree.
    pub mass_certificate: f64,
    pub excluded_samples: usize,
}

/// Evaluates the reflection identities for bodies `k` and `l` (0-based).
///
/// The path must be normalized so its symmetry axis is the x-axis, i.e.
/// `p(−t) = diag(1,−1)·p(t)`; run axis detection and normalization first.
/// General (not necessarily equally spaced) offsets are allowed.
pub fn reflection_identities(
    config: &ChoreographyConfig,
    k: usize,
    l: usize,
    sample_count: usize,
) -> Result<ReflectionCheck> {
    require_flat(config)?;
    let n = config.n_bodies();
    if config.path.dim() != 2 {
        return Err(ChoreoError::Contract("reflection identities need a planar path".into()));
    }
    if k >= n || l >= n || k == l {
        return Err(ChoreoError::Contract(format!(
            "need two distinct bodies out of {n}, got {k} and {l}"
        )));
    }
    let grid = sample_grid(config, sample_count)?;
    let h = config.offsets.as_slice();
    let m = config.masses.as_slice();
    let p = |t: f64| config.path.position(t);
    let f = |v: &[f64]| config.force.eval(vecs::norm_sq(v));

    let mut residuals = [0.0f64; 4];
    let mut certificate = 0.0f64;
    for &t in &grid.times {
        let d_vec = vecs::sub(&p(t + h[l] - h[k]), &p(t));
        let fd = f(&d_vec)?;
        let lead = m[k] - m[l];

        let mut rhs1 = vec![0.0; 2];
        let mut rhs2 = vec![0.0; 2];
        let mut rhs3 = vec![0.0; 2];
        let mut rhs4 = vec![0.0; 2];
        for j in 0..n {
            if j == k || j == l {
                continue;
            }
            let a = vecs::sub(&p(t + h[j] - h[k]), &p(t));
            let b = vecs::sub(&p(t - (h[j] - h[l])), &p(t));
            vecs::axpy(&mut rhs1, m[j] * f(&a)?, &a);
            vecs::axpy(&mut rhs1, -m[j] * f(&b)?, &b);
            vecs::axpy(&mut rhs3, m[j], &a);
            vecs::axpy(&mut rhs3, -m[j], &b);

            let c = vecs::sub(&p(t + h[j] - h[k]), &p(t + h[l] - h[k]));
            let e = vecs::sub(&p(t + h[l] - h[j]), &p(t + h[l] - h[k]));
            vecs::axpy(&mut rhs2, m[j] * f(&c)?, &c);
            vecs::axpy(&mut rhs2, -m[j] * f(&e)?, &e);
            vecs::axpy(&mut rhs4, m[j], &c);
            vecs::axpy(&mut rhs4, -m[j], &e);
        }

        let mut i1 = vecs::scale(&d_vec, lead * fd);
        vecs::axpy(&mut i1, -1.0, &rhs1);
        let mut i2 = vecs::scale(&d_vec, lead * fd);
        vecs::axpy(&mut i2, -1.0, &rhs2);
        let mut i3 = vecs::scale(&d_vec, lead);
        vecs::axpy(&mut i3, -1.0, &rhs3);
        let mut i4 = vecs::scale(&d_vec, lead);
        vecs::axpy(&mut i4, -1.0, &rhs4);

        residuals[0] = residuals[0].max(vecs::norm(&i1));
        residuals[1] = residuals[1].max(vecs::norm(&i2));
        residuals[2] = residuals[2].max(vecs::norm(&i3));
        residuals[3] = residuals[3].max(vecs::norm(&i4));

        // The leading terms of identities 1 and 3 differ only by f(‖D‖²),
        // so this combination cancels the mass difference exactly.
        let mut combo = i1;
        vecs::axpy(&mut combo, -fd, &i3);
        certificate = certificate.max(vecs::norm(&combo));
    }
    Ok(ReflectionCheck {
        residuals,
        mass_certificate: certificate,
        excluded_samples: grid.excluded,
    })
}

/// True when a curved configuration's loop lies in a plane through the
/// origin. Spherical loops can (great circles); hyperboloid loops never do.
pub fn great_circle_test(
    config: &ChoreographyConfig,
    sample_count: usize,
    tol: &Tolerances,
) -> Result<bool> {
    let sigma = require_curved(config)?;
    if sigma < 0.0 {
        return Ok(false);
    }
    let grid = sample_grid(config, sample_count)?;
    let positions: Vec<Vec<f64>> = grid.times.iter().map(|&t| config.path.position(t)).collect();
    let m = DMatrix::from_fn(positions.len(), 3, |r, c| positions[r][c]);
    let svd = m.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    match (sv.first(), sv.last()) {
        (Some(&largest), Some(&smallest)) if largest > 0.0 => {
            Ok(smallest < tol.rank_rel * largest)
        }
        _ => Ok(true),
    }
}

/// Mass structure predicted by the rigidity results for a configuration's
/// geometry, before looking at the computed nullspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MassPrediction {
    AllEqual,
    /// Odd-labeled masses equal and even-labeled masses equal.
    OddEvenClasses,
    /// Opposite pairs equal: `m1 = m3` and `m2 = m4` (curved, n = 4).
    OppositePairs,
    /// No covered case applies; the computed nullspace stands alone.
    Outside,
}

/// The combined verdict: geometric prediction, prose, and whether the
/// computed nullspace classification is consistent with the prediction.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub prediction: MassPrediction,
    pub text: String,
    pub consistent: bool,
}

/// Derives the predicted mass structure from geometry and checks it
/// against the computed feasibility classification. The computation is
/// never overridden: an inconsistency is flagged, not reconciled.
pub fn rigidity_verdict(
    space: &Space,
    n: usize,
    d: usize,
    great_circle: bool,
    fixed_center: bool,
    classification: &FeasibilityClass,
) -> Verdict {
    let (prediction, mut text) = match space {
        Space::Flat { .. } => {
            if d + 1 == n || d + 2 == n {
                (MassPrediction::AllEqual, format!("masses equal predicted (d = n−{})", n - d))
            } else if d + 3 == n && n % 2 == 1 {
                (MassPrediction::AllEqual, "masses equal predicted (d = n−3, n odd)".to_string())
            } else if d + 3 == n {
                (
                    MassPrediction::OddEvenClasses,
                    "odd-labeled equal and even-labeled equal predicted (d = n−3, n even)"
                        .to_string(),
                )
            } else {
                (
                    MassPrediction::Outside,
                    format!("outside theorem coverage (n = {n}, d = {d}); computed nullspace reported"),
                )
            }
        }
        Space::Curved { .. } => {
            if great_circle {
                (
                    MassPrediction::Outside,
                    "great-circle configuration; rigidity not predicted".to_string(),
                )
            } else if n == 4 {
                (MassPrediction::OppositePairs, "m1 = m3, m2 = m4 predicted".to_string())
            } else if n < 6 {
                (MassPrediction::AllEqual, "masses equal predicted (curved, n < 6)".to_string())
            } else {
                (
                    MassPrediction::Outside,
                    format!("outside theorem coverage (curved, n = {n}); computed nullspace reported"),
                )
            }
        }
    };
    if fixed_center {
        text.push_str(" (with fixed center)");
    }

    let consistent = match prediction {
        MassPrediction::AllEqual => *classification == FeasibilityClass::Rigid,
        MassPrediction::OddEvenClasses | MassPrediction::OppositePairs => matches!(
            classification,
            FeasibilityClass::Rigid | FeasibilityClass::Alternating
        ),
        MassPrediction::Outside => true,
    };
    Verdict { prediction, text, consistent }
}

/// One row of the mode-residual table.
#[derive(Debug, Clone)]
pub struct ModeRow {
    pub l: usize,
    pub with_f: f64,
    /// `None` for curved configurations, where the identity has no f-free
    /// companion.
    pub without_f: Option<f64>,
}

/// Degeneracy flags relevant to the rigidity arguments.
#[derive(Debug, Clone)]
pub struct DegeneracyFlags {
    pub simplex: bool,
    pub great_circle: bool,
    pub collinear: bool,
}

/// Everything the analysis pipeline computes for one configuration.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub n: usize,
    pub space: Space,
    pub d: usize,
    pub rank_histogram: Vec<(usize, f64)>,
    pub modes: Vec<ModeRow>,
    pub feasibility: Feasibility,
    pub flags: DegeneracyFlags,
    pub verdict: Verdict,
    pub excluded_samples: usize,
}

/// Runs the full rigidity pipeline on an equally spaced configuration.
pub fn analyze(
    config: &ChoreographyConfig,
    sample_count: usize,
    tol: &Tolerances,
) -> Result<AnalysisReport> {
    require_equally_spaced(config)?;
    let n = config.n_bodies();
    let profile = span_dimension(config, sample_count, tol)?;
    let simplex = simplex_test(config, sample_count, tol.residual_abs.max(1e-6))?;
    let great_circle = if config.space.is_curved() {
        great_circle_test(config, sample_count, tol)?
    } else {
        false
    };

    let modes = (1..n)
        .map(|l| {
            if config.space.is_curved() {
                mode_residual_curved(config, l, sample_count)
                    .map(|norm| ModeRow { l, with_f: norm, without_f: None })
            } else {
                mode_residual_flat(config, l, sample_count).map(|r| ModeRow {
                    l,
                    with_f: r.with_f,
                    without_f: Some(r.without_f),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let feasibility = mass_feasibility(config, sample_count, tol)?;
    let verdict = rigidity_verdict(
        &config.space,
        n,
        profile.dim,
        great_circle,
        config.central_mass > 0.0,
        &feasibility.classification,
    );
    Ok(AnalysisReport {
        n,
        space: config.space,
        d: profile.dim,
        rank_histogram: profile.histogram,
        modes,
        feasibility,
        flags: DegeneracyFlags { simplex, great_circle, collinear: profile.dim <= 1 },
        verdict,
        excluded_samples: profile.excluded_samples,
    })
}
