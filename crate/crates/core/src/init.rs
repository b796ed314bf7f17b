//! Initial-design strategies producing the surrogate's seed dataset.
//!
//! Random, Latin hypercube and Sobol designs evaluate exactly `n_points`
//! configurations. The objective-aware initializer runs short multi-objective
//! annealing chains, keeps every evaluation in the archive, and seeds the
//! surrogates with a maximin-diverse subset of it.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveProblem, ObjectiveVector};
use crate::pareto::normalize_objectives;
use crate::sobol::Sobol;
use crate::space::{euclidean, Configuration, SearchSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Random,
    Lhs,
    Sobol,
    Oasi,
}

impl InitMethod {
    pub const ALL: [InitMethod; 4] = [InitMethod::Random, InitMethod::Lhs, InitMethod::Sobol, InitMethod::Oasi];

    pub fn as_str(&self) -> &'static str {
        match self {
            InitMethod::Random => "random",
            InitMethod::Lhs => "lhs",
            InitMethod::Sobol => "sobol",
            InitMethod::Oasi => "oasi",
        }
    }
}

impl std::str::FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInitializer(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for InitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Annealing-chain parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OasiParams {
    pub n_chains: usize,
    pub n_iter: usize,
    pub t_acc0: f64,
    pub t_size0: f64,
    pub alpha_acc: f64,
    pub alpha_size: f64,
}

impl Default for OasiParams {
    fn default() -> Self {
        Self { n_chains: 5, n_iter: 45, t_acc0: 0.05, t_size0: 0.1, alpha_acc: 0.95, alpha_size: 0.95 }
    }
}

impl OasiParams {
    pub fn total_evaluations(&self) -> usize {
        self.n_chains * (self.n_iter + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitializerSpec {
    pub method: InitMethod,
    /// Size of the surrogate seed set.
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oasi: Option<OasiParams>,
    /// Apply a random digital shift to Sobol points.
    #[serde(default)]
    pub scramble: bool,
}

impl InitializerSpec {
    pub fn new(method: InitMethod, n_points: usize) -> Self {
        let oasi = (method == InitMethod::Oasi).then(OasiParams::default);
        Self { method, n_points, oasi, scramble: false }
    }

    pub fn oasi(n_points: usize, params: OasiParams) -> Self {
        Self { method: InitMethod::Oasi, n_points, oasi: Some(params), scramble: false }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInitializer(m));
        if self.n_points < 2 {
            return bad(format!("n_points must be at least 2, got {}", self.n_points));
        }
        if self.method == InitMethod::Oasi {
            let Some(p) = &self.oasi else {
                return bad("oasi parameters missing".into());
            };
            if p.n_chains < 1 || p.n_iter < 1 {
                return bad("n_chains and n_iter must be at least 1".into());
            }
            if !(p.t_acc0 > 0.0 && p.t_size0 > 0.0) {
                return bad("initial temperatures must be positive".into());
            }
            for a in [p.alpha_acc, p.alpha_size] {
                if !(a > 0.0 && a < 1.0) {
                    return bad(format!("cooling rate {a} outside (0, 1)"));
                }
            }
            if p.total_evaluations() < self.n_points {
                return bad(format!(
                    "chains produce {} evaluations, fewer than n_points = {}",
                    p.total_evaluations(),
                    self.n_points
                ));
            }
        }
        Ok(())
    }

    /// Objective evaluations this initializer consumes.
    pub fn evaluation_cost(&self) -> usize {
        match (&self.method, &self.oasi) {
            (InitMethod::Oasi, Some(p)) => p.total_evaluations(),
            _ => self.n_points,
        }
    }
}

/// Every evaluation made during initialization, in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InitArchive {
    pub entries: Vec<(Configuration, ObjectiveVector)>,
}

impl InitArchive {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push_eval(&mut self, problem: &ObjectiveProblem, cfg: Configuration) -> Result<ObjectiveVector> {
        let y = problem.evaluate(&cfg)?;
        self.entries.push((cfg, y));
        Ok(y)
    }
}

/// Archive plus the positions of the entries that seed the surrogates.
#[derive(Clone, Debug)]
pub struct InitOutcome {
    pub archive: InitArchive,
    pub seed_indices: Vec<usize>,
    /// Set when deduplication left fewer distinct entries than requested.
    pub short: bool,
}

/// Runs the initializer described by `spec`.
pub fn initialize<R: Rng + ?Sized>(problem: &ObjectiveProblem, spec: &InitializerSpec, rng: &mut R) -> Result<InitOutcome> {
    spec.validate()?;
    let space = &problem.space;
    let n = spec.n_points;
    let archive = match spec.method {
        InitMethod::Random => init_random(space, problem, n, rng)?,
        InitMethod::Lhs => init_lhs(space, problem, n, rng)?,
        InitMethod::Sobol => {
            let seed = spec.scramble.then(|| rng.random::<u64>());
            init_sobol(space, problem, n, seed)?
        }
        InitMethod::Oasi => {
            let archive = init_oasi(space, problem, spec, rng)?;
            let (seed_indices, short) = select_diverse_indices(&archive, n, space)?;
            return Ok(InitOutcome { archive, seed_indices, short });
        }
    };
    let seed_indices = (0..archive.len()).collect();
    Ok(InitOutcome { archive, seed_indices, short: false })
}

pub fn init_random<R: Rng + ?Sized>(
    space: &SearchSpace,
    problem: &ObjectiveProblem,
    n: usize,
    rng: &mut R,
) -> Result<InitArchive> {
    let mut archive = InitArchive::default();
    for _ in 0..n {
        archive.push_eval(problem, space.sample_uniform(rng))?;
    }
    Ok(archive)
}

/// Latin hypercube design: per dimension, one uniform draw inside each of
/// `n` equal strata of `[0, 1)`, independently permuted, then mapped onto the
/// domain. Categorical and integer dimensions therefore receive each value a
/// near-equal number of times.
pub fn init_lhs<R: Rng + ?Sized>(
    space: &SearchSpace,
    problem: &ObjectiveProblem,
    n: usize,
    rng: &mut R,
) -> Result<InitArchive> {
    let units = lhs_unit_design(space.len(), n, rng);
    let mut archive = InitArchive::default();
    for u in units {
        archive.push_eval(problem, space.from_unit(&u)?)?;
    }
    Ok(archive)
}

/// `n` points in `[0, 1)^d` with one point per stratum in every coordinate.
pub fn lhs_unit_design<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(rng);
        for (p, &s) in points.iter_mut().zip(&strata) {
            p[j] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// First `n` Sobol points (one coordinate per dimension), optionally shifted
/// with a digital scramble seeded by `scramble_seed`.
pub fn init_sobol(
    space: &SearchSpace,
    problem: &ObjectiveProblem,
    n: usize,
    scramble_seed: Option<u64>,
) -> Result<InitArchive> {
    let seq = match scramble_seed {
        Some(seed) => Sobol::scrambled(space.len(), &mut ChaCha8Rng::seed_from_u64(seed))?,
        None => Sobol::new(space.len())?,
    };
    let mut archive = InitArchive::default();
    for u in seq.take(n) {
        archive.push_eval(problem, space.from_unit(&u)?)?;
    }
    Ok(archive)
}

/// Probability of accepting a move on one objective.
///
/// `delta` is the worsening (positive means worse); improvements are always
/// accepted.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta < 0.0 {
        1.0
    } else {
        (-delta / temperature).exp()
    }
}

/// Joint acceptance probability `p_acc * p_size` for independent draws.
///
/// Accuracy must strictly increase and size strictly decrease for the
/// respective factor to be exactly one.
pub fn joint_acceptance(a_curr: f64, a_next: f64, s_curr: f64, s_next: f64, t_acc: f64, t_size: f64) -> (f64, f64) {
    let p_acc = if a_next > a_curr { 1.0 } else { (-(a_curr - a_next) / t_acc).exp() };
    let p_size = if s_next < s_curr { 1.0 } else { (-(s_next - s_curr) / t_size).exp() };
    (p_acc, p_size)
}

/// One proposal of an annealing chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OasiStep {
    pub chain: usize,
    pub iter: usize,
    pub a_curr: f64,
    pub a_next: f64,
    pub s_curr: f64,
    pub s_next: f64,
    pub t_acc: f64,
    pub t_size: f64,
    pub p_acc: f64,
    pub p_size: f64,
    pub u1: f64,
    pub u2: f64,
    pub accepted: bool,
    /// Archive position of the proposal.
    pub proposal: usize,
    /// Archive position of the chain state after this step.
    pub current: usize,
}

pub fn init_oasi<R: Rng + ?Sized>(
    space: &SearchSpace,
    problem: &ObjectiveProblem,
    spec: &InitializerSpec,
    rng: &mut R,
) -> Result<InitArchive> {
    init_oasi_traced(space, problem, spec, rng).map(|(a, _)| a)
}

/// Annealing initializer that also returns the per-step trace.
///
/// Each chain draws its own generator seed from `rng` up front, so chains are
/// independent and the archive is ordered by `(chain, iteration)`. Accuracy is
/// `-f1`; size is `f2` normalized by the problem's nominal bounds so that the
/// size temperature is dimensionless. Temperatures reset at the start of
/// every chain and cool geometrically after every proposal.
pub fn init_oasi_traced<R: Rng + ?Sized>(
    space: &SearchSpace,
    problem: &ObjectiveProblem,
    spec: &InitializerSpec,
    rng: &mut R,
) -> Result<(InitArchive, Vec<OasiStep>)> {
    spec.validate()?;
    let params = spec
        .oasi
        .as_ref()
        .filter(|_| spec.method == InitMethod::Oasi)
        .ok_or_else(|| Error::InvalidInitializer("spec is not an oasi initializer".into()))?;
    let bounds = problem.nominal_bounds;
    let size_of = |y: &ObjectiveVector| -> Result<f64> { Ok(normalize_objectives(y, &bounds)?.0.f2) };

    let chain_seeds: Vec<u64> = (0..params.n_chains).map(|_| rng.random()).collect();
    let mut archive = InitArchive::default();
    let mut trace = Vec::with_capacity(params.n_chains * params.n_iter);

    for (chain, seed) in chain_seeds.into_iter().enumerate() {
        let mut crng = ChaCha8Rng::seed_from_u64(seed);
        let mut t_acc = params.t_acc0;
        let mut t_size = params.t_size0;
        let mut curr = space.sample_uniform(&mut crng);
        let mut f_curr = archive.push_eval(problem, curr.clone())?;
        let mut curr_pos = archive.len() - 1;
        for iter in 1..=params.n_iter {
            let next = space.perturb(&curr, &mut crng)?;
            let f_next = archive.push_eval(problem, next.clone())?;
            let (a_curr, a_next) = (-f_curr.f1, -f_next.f1);
            let (s_curr, s_next) = (size_of(&f_curr)?, size_of(&f_next)?);
            let (p_acc, p_size) = joint_acceptance(a_curr, a_next, s_curr, s_next, t_acc, t_size);
            let u1: f64 = crng.random();
            let u2: f64 = crng.random();
            let accepted = u1 < p_acc && u2 < p_size;
            let proposal = archive.len() - 1;
            if accepted {
                curr = next;
                f_curr = f_next;
                curr_pos = proposal;
            }
            trace.push(OasiStep {
                chain,
                iter,
                a_curr,
                a_next,
                s_curr,
                s_next,
                t_acc,
                t_size,
                p_acc,
                p_size,
                u1,
                u2,
                accepted,
                proposal,
                current: curr_pos,
            });
            t_acc *= params.alpha_acc;
            t_size *= params.alpha_size;
        }
    }
    Ok((archive, trace))
}

/// Greedy maximin subset of the archive in encoded design space.
///
/// Entries are first deduplicated by configuration id (first occurrence
/// wins). The seed is the most accurate entry (lowest `f1`; ties to smaller
/// `f2`, then earlier position); each further pick maximizes the minimum
/// distance to the already selected entries, ties to the earlier position.
/// Returns fewer than `n` entries, with the flag set, when deduplication
/// leaves too few.
pub fn select_diverse_subset(
    archive: &InitArchive,
    n: usize,
    space: &SearchSpace,
) -> Result<(Vec<(Configuration, ObjectiveVector)>, bool)> {
    let (idx, short) = select_diverse_indices(archive, n, space)?;
    Ok((idx.into_iter().map(|i| archive.entries[i].clone()).collect(), short))
}

/// Same as [`select_diverse_subset`], returning archive positions in pick order.
pub fn select_diverse_indices(archive: &InitArchive, n: usize, space: &SearchSpace) -> Result<(Vec<usize>, bool)> {
    if archive.is_empty() {
        return Err(Error::Empty("cannot select from an empty archive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("subset size must be at least 1".into()));
    }
    let mut seen = HashSet::new();
    let unique: Vec<usize> = (0..archive.len()).filter(|&i| seen.insert(archive.entries[i].0.id())).collect();
    let encoded: Vec<Vec<f64>> =
        unique.iter().map(|&i| space.encode(&archive.entries[i].0)).collect::<Result<_>>()?;

    let y = |k: usize| archive.entries[unique[k]].1;
    let first = (0..unique.len())
        .min_by(|&a, &b| {
            let (ya, yb) = (y(a), y(b));
            ya.f1.total_cmp(&yb.f1).then(ya.f2.total_cmp(&yb.f2)).then(a.cmp(&b))
        })
        .expect("non-empty");

    let target = n.min(unique.len());
    let mut chosen = vec![first];
    let mut min_dist: Vec<f64> = encoded.iter().map(|e| euclidean(e, &encoded[first])).collect();
    let mut taken = vec![false; unique.len()];
    taken[first] = true;
    while chosen.len() < target {
        let mut best: Option<usize> = None;
        for k in 0..unique.len() {
            if !taken[k] && best.is_none_or(|b| min_dist[k] > min_dist[b]) {
                best = Some(k);
            }
        }
        let k = best.expect("remaining candidates");
        taken[k] = true;
        chosen.push(k);
        for (m, e) in encoded.iter().enumerate() {
            min_dist[m] = min_dist[m].min(euclidean(e, &encoded[k]));
        }
    }
    Ok((chosen.into_iter().map(|k| unique[k]).collect(), unique.len() < n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::benchmark_biobjective;
    use crate::space::{DimensionKind, DimensionSpec, Value};
    use crate::test_util::ConstRng;

    fn kws() -> ObjectiveProblem {
        ObjectiveProblem::by_name("kws").unwrap()
    }

    #[test]
    fn random_forced_stream_and_length() {
        let space = SearchSpace::new(vec![DimensionSpec::new("b", DimensionKind::Boolean)]).unwrap();
        let mut zero = ConstRng(0);
        assert_eq!(space.sample_uniform(&mut zero).values(), &[Value::Bool(false)]);
        let mut ones = ConstRng(u64::MAX);
        assert_eq!(space.sample_uniform(&mut ones).values(), &[Value::Bool(true)]);
        let problem = kws();
        for n in [2, 7, 30] {
            let a = init_random(&problem.space, &problem, n, &mut ChaCha8Rng::seed_from_u64(n as u64)).unwrap();
            assert_eq!(a.len(), n);
        }
    }

    #[test]
    fn random_marginals_pass_chi_square() {
        let problem = kws();
        let a = init_random(&problem.space, &problem, 10_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let idx = problem.space.index_of("conv_layers").unwrap();
        let mut counts = [0f64; 3];
        for (cfg, _) in &a.entries {
            let Value::Int(v) = cfg.values()[idx] else { panic!() };
            counts[(v - 1) as usize] += 1.0;
        }
        let e = 10_000.0 / 3.0;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        // 99% quantile, 2 dof
        assert!(chi2 < 9.21, "chi2 = {chi2}");
    }

    #[test]
    fn lhs_strata_in_one_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut xs: Vec<f64> = lhs_unit_design(1, 4, &mut rng).into_iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        for (i, x) in xs.iter().enumerate() {
            assert!(*x >= i as f64 * 0.25 && *x < (i + 1) as f64 * 0.25 + 1e-15);
        }
        assert_eq!(lhs_unit_design(3, 1, &mut rng).len(), 1);
    }

    #[test]
    fn lhs_projection_on_continuous_problem() {
        let problem = benchmark_biobjective("convex-quadratic-2d").unwrap();
        for seed in 0..100 {
            let a = init_lhs(&problem.space, &problem, 16, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for d in 0..2 {
                let mut strata: Vec<usize> = a
                    .entries
                    .iter()
                    .map(|(c, _)| {
                        let Value::Real(x) = c.values()[d] else { panic!() };
                        (((x + 0.5) / 2.0) * 16.0).floor().min(15.0) as usize
                    })
                    .collect();
                strata.sort_unstable();
                assert_eq!(strata, (0..16).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn sobol_initializer_is_deterministic() {
        let problem = kws();
        let a = init_sobol(&problem.space, &problem, 10, None).unwrap();
        let b = init_sobol(&problem.space, &problem, 10, None).unwrap();
        assert_eq!(a, b);
        let c = init_sobol(&problem.space, &problem, 10, Some(4)).unwrap();
        assert_eq!(c, init_sobol(&problem.space, &problem, 10, Some(4)).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn joint_improvement_accepts_with_certainty() {
        assert_eq!(joint_acceptance(0.8, 0.9, 0.5, 0.4, 1e-9, 1e-9), (1.0, 1.0));
        let (pa, ps) = joint_acceptance(0.90, 0.80, 0.5, 0.4, 0.1, 0.1);
        assert!((pa * ps - (-1.0f64).exp()).abs() < 1e-12);
        assert!((pa * ps - 0.367879).abs() < 1e-6);
        assert_eq!(acceptance_probability(-0.1, 0.5), 1.0);
    }

    #[test]
    fn oasi_counts_and_trace_replay() {
        let problem = kws();
        let params = OasiParams { n_chains: 3, n_iter: 12, ..OasiParams::default() };
        let spec = InitializerSpec::oasi(6, params.clone());
        let (archive, trace) =
            init_oasi_traced(&problem.space, &problem, &spec, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(archive.len(), 3 * 13);
        assert_eq!(trace.len(), 3 * 12);
        for chain in 0..3 {
            let steps: Vec<_> = trace.iter().filter(|s| s.chain == chain).collect();
            let mut current = chain * 13;
            for (k, s) in steps.iter().enumerate() {
                let expected_t = params.t_acc0 * params.alpha_acc.powi(k as i32);
                assert!((s.t_acc - expected_t).abs() <= 1e-15 * expected_t.max(1.0));
                // state only moves on acceptance
                current = if s.accepted { s.proposal } else { current };
                assert_eq!(s.current, current);
                assert_eq!(s.accepted, s.u1 < s.p_acc && s.u2 < s.p_size);
            }
        }
    }

    #[test]
    fn oasi_rejects_invalid_specs() {
        let mut spec = InitializerSpec::oasi(10, OasiParams { n_chains: 1, n_iter: 3, ..OasiParams::default() });
        assert!(spec.validate().is_err());
        spec.oasi = Some(OasiParams { alpha_acc: 1.0, ..OasiParams::default() });
        assert!(spec.validate().is_err());
        assert!(InitializerSpec::new(InitMethod::Random, 1).validate().is_err());
    }

    fn line_archive(xs: &[f64]) -> (SearchSpace, InitArchive) {
        let space =
            SearchSpace::new(vec![DimensionSpec::new("x", DimensionKind::Continuous { lo: 0.0, hi: 1.0 })]).unwrap();
        let entries = xs
            .iter()
            .map(|&x| (Configuration::new(&space, vec![Value::Real(x)]).unwrap(), ObjectiveVector::new(-0.5, 1.0)))
            .collect();
        (space, InitArchive { entries })
    }

    #[test]
    fn maximin_picks_extremes_on_a_line() {
        let (space, archive) = line_archive(&[0.0, 0.4, 1.0]);
        let (idx, short) = select_diverse_indices(&archive, 2, &space).unwrap();
        assert_eq!(idx, vec![0, 2]);
        assert!(!short);
        let (all, _) = select_diverse_indices(&archive, 3, &space).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn maximin_dedups_and_flags() {
        let (space, archive) = line_archive(&[0.3, 0.3, 0.9]);
        let (idx, short) = select_diverse_indices(&archive, 3, &space).unwrap();
        assert_eq!(idx, vec![0, 2]);
        assert!(short);
        assert!(select_diverse_indices(&InitArchive::default(), 1, &space).is_err());
    }

    #[test]
    fn maximin_seed_is_most_accurate() {
        let (space, mut archive) = line_archive(&[0.1, 0.5, 0.9]);
        archive.entries[1].1 = ObjectiveVector::new(-0.9, 2.0);
        archive.entries[2].1 = ObjectiveVector::new(-0.9, 1.5);
        let (idx, _) = select_diverse_indices(&archive, 1, &space).unwrap();
        assert_eq!(idx, vec![2]);
    }
}
