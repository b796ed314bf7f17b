//! Exact two-objective expected hypervolume improvement.
//!
//! With the front sorted ascending in `f1` as `p_1..p_k`, the region not yet
//! dominated (inside the reference box) splits into `k + 1` vertical cells
//!
//! ```text
//! cell i = [l_i, u_i) x (-inf, h_i)
//! l_0 = -inf, h_0 = r2;  l_i = p_i.f1, h_i = p_i.f2;  u_i = p_{i+1}.f1, u_k = r1
//! ```
//!
//! and the improvement of an outcome `y` is `sum_i (u_i - max(y1, l_i))+ (h_i - y2)+`.
//! For independent Gaussians each factor has a closed form in terms of the
//! partial moment `psi(a, b) = sigma phi((b - mu) / sigma) + (a - mu) Phi((b - mu) / sigma)`:
//!
//! ```text
//! E[(u - max(Y, l))+] = psi(u, u) - psi(l, l)      (l <= u)
//! E[(h - Y)+]         = psi(h, h)
//! ```

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::objectives::{Bounds, ObjectiveVector};
use crate::space::{ConfigId, Configuration, SearchSpace};

pub use crate::pareto::normalize_objectives;

/// Front and reference point an EHVI is measured against.
#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionState {
    front: Vec<ObjectiveVector>,
    reference: ObjectiveVector,
}

impl AcquisitionState {
    /// `front` must be sorted strictly ascending in `f1` and strictly
    /// descending in `f2`, with every point strictly dominating `reference`.
    pub fn new(front: Vec<ObjectiveVector>, reference: ObjectiveVector) -> Result<Self> {
        for w in front.windows(2) {
            if !(w[0].f1 < w[1].f1 && w[0].f2 > w[1].f2) {
                return Err(Error::InvalidFront(format!("{:?} then {:?} is not a sorted front", w[0], w[1])));
            }
        }
        if let Some(p) = front.iter().find(|p| !p.strictly_dominates(&reference)) {
            return Err(Error::InvalidFront(format!("{p:?} does not dominate reference {reference:?}")));
        }
        Ok(Self { front, reference })
    }

    /// Builds the state from arbitrary points; points outside the reference
    /// box are ignored.
    pub fn from_points(points: &[ObjectiveVector], reference: ObjectiveVector) -> Result<Self> {
        let inside: Vec<_> = points.iter().copied().filter(|p| p.strictly_dominates(&reference)).collect();
        let front = crate::pareto::non_dominated(&inside)?.objectives();
        Self::new(front, reference)
    }

    pub fn front(&self) -> &[ObjectiveVector] {
        &self.front
    }

    pub fn reference(&self) -> ObjectiveVector {
        self.reference
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// `E[(a - Y) 1{Y <= a}]` for `Y ~ N(mu, sigma^2)`, i.e. `psi(a, a)`.
fn expected_shortfall(a: f64, mu: f64, sigma: f64, n: &Normal) -> f64 {
    if a == f64::NEG_INFINITY {
        return 0.0;
    }
    if sigma == 0.0 {
        return (a - mu).max(0.0);
    }
    let z = (a - mu) / sigma;
    sigma * n.pdf(z) + (a - mu) * n.cdf(z)
}

/// Exact EHVI for an outcome distributed as independent `N(mu_k, sigma_k^2)`.
pub fn ehvi_exact(state: &AcquisitionState, mu: (f64, f64), sigma: (f64, f64)) -> Result<f64> {
    if !(sigma.0 >= 0.0 && sigma.1 >= 0.0) || !mu.0.is_finite() || !mu.1.is_finite() {
        return Err(Error::InvalidArgument(format!("mu {mu:?}, sigma {sigma:?}")));
    }
    let n = std_normal();
    let r = state.reference;
    let k = state.front.len();
    let mut total = 0.0;
    for i in 0..=k {
        let (l, h) = if i == 0 { (f64::NEG_INFINITY, r.f2) } else { (state.front[i - 1].f1, state.front[i - 1].f2) };
        let u = if i == k { r.f1 } else { state.front[i].f1 };
        let width = expected_shortfall(u, mu.0, sigma.0, &n) - expected_shortfall(l, mu.0, sigma.0, &n);
        let height = expected_shortfall(h, mu.1, sigma.1, &n);
        total += width.max(0.0) * height;
    }
    Ok(total.max(0.0))
}

/// Tunables of candidate-pool acquisition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    pub pool_size: usize,
    /// Reference point is `(1 + margin, 1 + margin)` in normalized space.
    pub ref_margin: f64,
    /// Multiplies posterior standard deviations before scoring.
    pub sigma_scale: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self { pool_size: 512, ref_margin: 0.1, sigma_scale: 1.0 }
    }
}

impl AcquisitionConfig {
    pub fn reference(&self) -> ObjectiveVector {
        ObjectiveVector::new(1.0 + self.ref_margin, 1.0 + self.ref_margin)
    }
}

#[derive(Clone, Debug)]
pub struct Proposal {
    pub config: Configuration,
    pub ehvi: f64,
    /// Candidates scored (after removing already evaluated ones).
    pub scored: usize,
}

const FALLBACK_ATTEMPTS: usize = 10_000;

/// Picks the unevaluated pool candidate with the largest EHVI.
///
/// The models predict normalized objectives. Ties go to the earliest
/// candidate in pool order. If every pool candidate was already evaluated, a
/// fresh uniform unevaluated sample is returned instead.
pub fn propose_next<R: Rng + ?Sized>(
    space: &SearchSpace,
    evaluated: &HashSet<ConfigId>,
    models: (&GpModel, &GpModel),
    state: &AcquisitionState,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<Proposal> {
    if cfg.pool_size == 0 {
        return Err(Error::InvalidArgument("pool_size must be positive".into()));
    }
    if let Some(card) = space.cardinality() {
        if evaluated.len() as u128 >= card {
            return Err(Error::SpaceExhausted);
        }
    }
    let mut pool: Vec<Configuration> = Vec::with_capacity(cfg.pool_size);
    let mut in_pool = HashSet::new();
    for _ in 0..cfg.pool_size {
        let c = space.sample_uniform(rng);
        if !evaluated.contains(&c.id()) && in_pool.insert(c.id()) {
            pool.push(c);
        }
    }
    if pool.is_empty() {
        for _ in 0..FALLBACK_ATTEMPTS {
            let c = space.sample_uniform(rng);
            if !evaluated.contains(&c.id()) {
                return Ok(Proposal { config: c, ehvi: 0.0, scored: 0 });
            }
        }
        return Err(Error::SpaceExhausted);
    }
    let scores = pool
        .iter()
        .map(|c| score(space, c, models, state, cfg.sigma_scale))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    let ehvi = scores[best];
    let scored = pool.len();
    Ok(Proposal { config: pool.swap_remove(best), ehvi, scored })
}

fn score(
    space: &SearchSpace,
    c: &Configuration,
    models: (&GpModel, &GpModel),
    state: &AcquisitionState,
    sigma_scale: f64,
) -> Result<f64> {
    let x = space.encode(c)?;
    let (p1, p2) = (models.0.predict(&x)?, models.1.predict(&x)?);
    ehvi_exact(state, (p1.mean, p2.mean), (sigma_scale * p1.std_dev(), sigma_scale * p2.std_dev()))
}

/// Normalizes every point, returning how many needed clamping.
pub fn normalize_all(points: &[ObjectiveVector], bounds: &Bounds) -> Result<(Vec<ObjectiveVector>, usize)> {
    let mut clamped = 0;
    let out = points
        .iter()
        .map(|y| {
            let (n, c) = normalize_objectives(y, bounds)?;
            clamped += c as usize;
            Ok(n)
        })
        .collect::<Result<_>>()?;
    Ok((out, clamped))
}
