//! Pareto fronts and front-quality metrics for two minimized objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{Bounds, ObjectiveVector};
use crate::space::ConfigId;

/// Default reference point in normalized objective space.
pub const DEFAULT_REF: ObjectiveVector = ObjectiveVector::new(1.1, 1.1);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub objectives: ObjectiveVector,
    pub id: ConfigId,
}

/// Mutually non-dominated points sorted ascending by `f1` (hence strictly
/// descending by `f2`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<FrontPoint>,
    pub normalized: bool,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.points.iter().map(|p| p.objectives).collect()
    }

    /// Maps every point through `bounds`; the result stays sorted and
    /// non-dominated up to ties created by clamping, which are collapsed.
    pub fn normalize(&self, bounds: &Bounds) -> Result<ParetoFront> {
        let pts = self
            .points
            .iter()
            .map(|p| Ok((normalize_objectives(&p.objectives, bounds)?.0, p.id)))
            .collect::<Result<Vec<_>>>()?;
        let mut front = non_dominated_with_ids(&pts)?;
        front.normalized = true;
        Ok(front)
    }
}

/// Affine map of each objective onto `[0, 1]`. Out-of-range values are
/// clamped; the flag reports whether clamping happened.
pub fn normalize_objectives(y: &ObjectiveVector, bounds: &Bounds) -> Result<(ObjectiveVector, bool)> {
    bounds.validate()?;
    if !y.is_finite() {
        return Err(Error::NonFinite(format!("{y:?}")));
    }
    let map = |v: f64, (lo, hi): (f64, f64)| (v - lo) / (hi - lo);
    let raw = ObjectiveVector::new(map(y.f1, bounds.f1), map(y.f2, bounds.f2));
    let clamped = ObjectiveVector::new(raw.f1.clamp(0.0, 1.0), raw.f2.clamp(0.0, 1.0));
    Ok((clamped, clamped != raw))
}

/// Non-dominated subset of `points`, ids set to the input position.
pub fn non_dominated(points: &[ObjectiveVector]) -> Result<ParetoFront> {
    let with_ids: Vec<_> = points.iter().enumerate().map(|(i, &y)| (y, ConfigId(i as u64))).collect();
    non_dominated_with_ids(&with_ids)
}

/// Non-dominated subset under weak dominance. Exact duplicates collapse to
/// the first occurrence.
pub fn non_dominated_with_ids(points: &[(ObjectiveVector, ConfigId)]) -> Result<ParetoFront> {
    if let Some((y, _)) = points.iter().find(|(y, _)| !y.is_finite()) {
        return Err(Error::NonFinite(format!("{y:?}")));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Stable: equal vectors keep input order, so the first id survives.
    order.sort_by(|&a, &b| {
        let (ya, yb) = (points[a].0, points[b].0);
        ya.f1.total_cmp(&yb.f1).then(ya.f2.total_cmp(&yb.f2))
    });
    let mut out = Vec::new();
    let mut best_f2 = f64::INFINITY;
    for i in order {
        let (y, id) = points[i];
        if y.f2 < best_f2 {
            best_f2 = y.f2;
            out.push(FrontPoint { objectives: y, id });
        }
    }
    Ok(ParetoFront { points: out, normalized: false })
}

fn check_sorted(points: &[ObjectiveVector]) -> Result<()> {
    for w in points.windows(2) {
        if !(w[0].f1 < w[1].f1 && w[0].f2 > w[1].f2) {
            return Err(Error::InvalidFront(format!("points {:?} and {:?} out of order", w[0], w[1])));
        }
    }
    Ok(())
}

/// Exact dominated area of a sorted front up to `reference`.
pub fn hypervolume_2d(front: &ParetoFront, reference: &ObjectiveVector) -> Result<f64> {
    let pts = front.objectives();
    check_sorted(&pts)?;
    if let Some(p) = pts.iter().find(|p| !p.strictly_dominates(reference)) {
        return Err(Error::InvalidFront(format!("{p:?} does not dominate reference {reference:?}")));
    }
    Ok(sweep_area(&pts, reference))
}

fn sweep_area(sorted: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    sorted
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let next_f1 = sorted.get(i + 1).map_or(reference.f1, |q| q.f1);
            (next_f1 - p.f1) * (reference.f2 - p.f2)
        })
        .sum()
}

/// Hypervolume of an arbitrary point set; points not strictly dominating
/// the reference contribute nothing.
pub fn hypervolume_of_points(points: &[ObjectiveVector], reference: &ObjectiveVector) -> Result<f64> {
    let inside: Vec<_> = points.iter().copied().filter(|p| p.strictly_dominates(reference)).collect();
    let front = non_dominated(&inside)?;
    Ok(sweep_area(&front.objectives(), reference))
}

/// `sqrt(sum d_i^2) / n`, with `d_i` the distance from front point `i` to
/// its nearest reference-front point.
pub fn generational_distance(front: &ParetoFront, reference_front: &ParetoFront) -> Result<f64> {
    if front.is_empty() || reference_front.is_empty() {
        return Err(Error::Empty("generational distance needs two non-empty fronts".into()));
    }
    let sum_sq: f64 = front
        .points
        .iter()
        .map(|p| {
            reference_front
                .points
                .iter()
                .map(|r| {
                    let (a, b) = (p.objectives, r.objectives);
                    (a.f1 - b.f1).powi(2) + (a.f2 - b.f2).powi(2)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(sum_sq.sqrt() / front.len() as f64)
}

/// `lambda * f1 + (1 - lambda) * f2` on normalized objectives.
pub fn scalarize_weighted(y: &ObjectiveVector, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(lambda * y.f1 + (1.0 - lambda) * y.f2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedPoint {
    pub rank: usize,
    pub label: String,
    pub id: ConfigId,
    pub objectives: ObjectiveVector,
    pub score: f64,
}

/// Ranks every point of every front by weighted Tchebycheff distance to the
/// ideal point (computed as the componentwise minimum when not supplied).
/// Ties go to the smaller `f2`, then to the lexicographically smaller label.
pub fn rank_tchebycheff(
    fronts: &[(String, ParetoFront)],
    weights: (f64, f64),
    ideal: Option<ObjectiveVector>,
) -> Result<Vec<RankedPoint>> {
    if !(weights.0 > 0.0 && weights.1 > 0.0) {
        return Err(Error::InvalidArgument(format!("weights {weights:?} must be positive")));
    }
    let all: Vec<(&str, &FrontPoint)> =
        fronts.iter().flat_map(|(l, f)| f.points.iter().map(move |p| (l.as_str(), p))).collect();
    if all.is_empty() {
        return Err(Error::Empty("no points to rank".into()));
    }
    let z = ideal.unwrap_or_else(|| {
        all.iter().fold(ObjectiveVector::new(f64::INFINITY, f64::INFINITY), |z, (_, p)| {
            ObjectiveVector::new(z.f1.min(p.objectives.f1), z.f2.min(p.objectives.f2))
        })
    });
    let mut scored: Vec<RankedPoint> = all
        .into_iter()
        .map(|(label, p)| {
            let y = p.objectives;
            let score = (weights.0 * (y.f1 - z.f1).abs()).max(weights.1 * (y.f2 - z.f2).abs());
            RankedPoint { rank: 0, label: label.to_string(), id: p.id, objectives: y, score }
        })
        .collect();
    scored.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.objectives.f2.total_cmp(&b.objectives.f2))
            .then_with(|| a.label.cmp(&b.label))
    });
    for (i, p) in scored.iter_mut().enumerate() {
        p.rank = i + 1;
    }
    Ok(scored)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub eval_index: usize,
    pub elapsed_s: f64,
    pub best_acc: f64,
    pub hv: f64,
    pub best_j: f64,
}

/// Running best accuracy (`-f1`), prefix hypervolume and best weighted
/// scalarization (`lambda = 0.5`), sampled every `checkpoint_every`
/// evaluations and at the last one.
///
/// `entries` are `(eval_index, elapsed_s, raw objectives)` in archive order.
pub fn progression_curves(
    entries: &[(usize, f64, ObjectiveVector)],
    bounds: &Bounds,
    reference: &ObjectiveVector,
    checkpoint_every: usize,
) -> Result<Vec<ProgressPoint>> {
    if checkpoint_every == 0 {
        return Err(Error::InvalidArgument("checkpoint_every must be positive".into()));
    }
    let mut out = Vec::new();
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_j = f64::INFINITY;
    // Incrementally maintained non-dominated prefix, normalized.
    let mut front: Vec<ObjectiveVector> = Vec::new();
    for (k, &(eval_index, elapsed_s, y)) in entries.iter().enumerate() {
        let (norm, _) = normalize_objectives(&y, bounds)?;
        best_acc = best_acc.max(0.0 - y.f1);
        best_j = best_j.min(scalarize_weighted(&norm, 0.5)?);
        if !front.iter().any(|p| p.dominates(&norm) || *p == norm) {
            front.retain(|p| !norm.dominates(p));
            front.push(norm);
        }
        let last = k + 1 == entries.len();
        if (k + 1) % checkpoint_every == 0 || last {
            let hv = hypervolume_of_points(&front, reference)?;
            out.push(ProgressPoint { eval_index, elapsed_s, best_acc, hv, best_j });
        }
    }
    Ok(out)
}
