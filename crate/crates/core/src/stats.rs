//! Rank-based comparison of methods: Kruskal-Wallis omnibus test with tie
//! correction and eta-squared, Dunn's pairwise test with Holm step-down
//! adjustment.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mobo::RunRecord;

/// Labelled samples, one group per method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupedSamples {
    groups: Vec<(String, Vec<f64>)>,
}

impl GroupedSamples {
    pub fn new(groups: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSamples(m));
        if groups.len() < 2 {
            return bad(format!("need at least 2 groups, got {}", groups.len()));
        }
        for (i, (label, values)) in groups.iter().enumerate() {
            if values.is_empty() {
                return bad(format!("group `{label}` is empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return bad(format!("group `{label}` has non-finite values"));
            }
            if groups[..i].iter().any(|(l, _)| l == label) {
                return bad(format!("duplicate label `{label}`"));
            }
        }
        let n: usize = groups.iter().map(|(_, v)| v.len()).sum();
        if n < groups.len() + 1 {
            return bad(format!("total sample size {n} must exceed the number of groups"));
        }
        Ok(Self { groups })
    }

    pub fn labels(&self) -> Vec<&str> {
        self.groups.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn groups(&self) -> &[(String, Vec<f64>)] {
        &self.groups
    }

    fn total(&self) -> usize {
        self.groups.iter().map(|(_, v)| v.len()).sum()
    }

    /// Midranks of the pooled sample, split back per group, plus the tie
    /// term `sum(t^3 - t)` over tie blocks.
    fn pooled_ranks(&self) -> (Vec<Vec<f64>>, f64) {
        let pooled: Vec<(f64, usize, usize)> = self
            .groups
            .iter()
            .enumerate()
            .flat_map(|(g, (_, v))| v.iter().enumerate().map(move |(i, &x)| (x, g, i)))
            .collect();
        let mut order: Vec<usize> = (0..pooled.len()).collect();
        order.sort_by(|&a, &b| pooled[a].0.total_cmp(&pooled[b].0));
        let mut ranks: Vec<Vec<f64>> = self.groups.iter().map(|(_, v)| vec![0.0; v.len()]).collect();
        let mut ties = 0.0;
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && pooled[order[j + 1]].0 == pooled[order[i]].0 {
                j += 1;
            }
            let rank = (i + j) as f64 / 2.0 + 1.0;
            for &k in &order[i..=j] {
                let (_, g, pos) = pooled[k];
                ranks[g][pos] = rank;
            }
            let t = (j - i + 1) as f64;
            ties += t * t * t - t;
            i = j + 1;
        }
        (ranks, ties)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p_value: f64,
    pub eta_squared: f64,
    /// Every pooled value is identical; `h = 0`, `p = 1` by convention.
    pub degenerate: bool,
}

pub fn kruskal_wallis(samples: &GroupedSamples) -> KruskalWallis {
    let n = samples.total() as f64;
    let k = samples.groups.len() as f64;
    let (ranks, ties) = samples.pooled_ranks();
    let correction = 1.0 - ties / (n * n * n - n);
    let eta = |h: f64| (h - k + 1.0) / (n - k);
    if correction <= 0.0 {
        return KruskalWallis { h: 0.0, p_value: 1.0, eta_squared: eta(0.0), degenerate: true };
    }
    let sum: f64 = ranks.iter().map(|r| r.iter().sum::<f64>().powi(2) / r.len() as f64).sum();
    let raw = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    let h = (raw / correction).max(0.0);
    let chi = ChiSquared::new(k - 1.0).expect("positive degrees of freedom");
    let p_value = chi.sf(h).clamp(0.0, 1.0);
    KruskalWallis { h, p_value, eta_squared: eta(h), degenerate: false }
}

/// Holm step-down adjustment of `raw` p-values, returned in input order.
pub fn holm_adjust(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running = 0.0f64;
    for (step, &i) in order.iter().enumerate() {
        let adj = ((m - step) as f64 * raw[i]).min(1.0);
        running = running.max(adj);
        out[i] = running;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DunnResult {
    /// Two-sided unadjusted p-values, unit diagonal.
    pub raw: Vec<Vec<f64>>,
    /// Holm-adjusted p-values, unit diagonal.
    pub adjusted: Vec<Vec<f64>>,
    /// The pooled-variance term vanished; every pair reported as `p = 1`.
    pub degenerate: bool,
}

/// Dunn's pairwise z-tests on mean ranks with tie correction, Holm-adjusted
/// across all `k (k - 1) / 2` pairs.
pub fn dunn_holm(samples: &GroupedSamples) -> DunnResult {
    let k = samples.groups.len();
    let n = samples.total() as f64;
    let (ranks, ties) = samples.pooled_ranks();
    let mean_rank: Vec<f64> = ranks.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect();
    let sizes: Vec<f64> = ranks.iter().map(|r| r.len() as f64).collect();
    let variance = n * (n + 1.0) / 12.0 - ties / (12.0 * (n - 1.0));
    let mut raw = vec![vec![1.0; k]; k];
    let mut adjusted = vec![vec![1.0; k]; k];
    if variance <= 0.0 {
        return DunnResult { raw, adjusted, degenerate: true };
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut pairs = Vec::new();
    let mut p = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let z = (mean_rank[i] - mean_rank[j]) / (variance * (1.0 / sizes[i] + 1.0 / sizes[j])).sqrt();
            let pv = (2.0 * normal.sf(z.abs())).min(1.0);
            pairs.push((i, j));
            p.push(pv);
        }
    }
    let adj = holm_adjust(&p);
    for (((i, j), pv), a) in pairs.into_iter().zip(p).zip(adj) {
        raw[i][j] = pv;
        raw[j][i] = pv;
        adjusted[i][j] = a;
        adjusted[j][i] = a;
    }
    DunnResult { raw, adjusted, degenerate: false }
}

/// Per-run scalar compared across methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Hypervolume of the final normalized front.
    FinalHv,
    /// Best accuracy (`-f1`) in the archive.
    FinalBestAcc,
    /// Minimum weighted scalarization (`lambda = 0.5`) in the archive.
    FinalJ,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::FinalHv => "final_hv",
            Outcome::FinalBestAcc => "final_best_acc",
            Outcome::FinalJ => "final_j",
        }
    }

    pub fn extract(&self, run: &RunRecord) -> Result<f64> {
        let last = run
            .progression
            .last()
            .ok_or_else(|| Error::InvalidSamples(format!("run {}/{} has no progression", run.method, run.seed)))?;
        Ok(match self {
            Outcome::FinalHv => last.hv,
            Outcome::FinalBestAcc => last.best_acc,
            Outcome::FinalJ => last.best_j,
        })
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Outcome::FinalHv, Outcome::FinalBestAcc, Outcome::FinalJ]
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown outcome `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub outcome: Outcome,
    pub labels: Vec<String>,
    pub h: f64,
    pub p_value: f64,
    pub eta_squared: f64,
    pub dunn_matrix: Vec<Vec<f64>>,
    pub dunn_raw: Vec<Vec<f64>>,
    pub summaries: Vec<GroupSummary>,
    pub degenerate: bool,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile(&s, 0.5)
}

pub fn analyze(samples: &GroupedSamples, outcome: Outcome) -> StatReport {
    let kw = kruskal_wallis(samples);
    let dunn = dunn_holm(samples);
    let summaries = samples
        .groups
        .iter()
        .map(|(label, v)| {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            let (q1, q3) = (quantile(&s, 0.25), quantile(&s, 0.75));
            GroupSummary { label: label.clone(), n: s.len(), median: quantile(&s, 0.5), q1, q3, iqr: q3 - q1 }
        })
        .collect();
    StatReport {
        outcome,
        labels: samples.groups.iter().map(|(l, _)| l.clone()).collect(),
        h: kw.h,
        p_value: kw.p_value,
        eta_squared: kw.eta_squared,
        dunn_matrix: dunn.adjusted,
        dunn_raw: dunn.raw,
        summaries,
        degenerate: kw.degenerate || dunn.degenerate,
    }
}

/// Groups runs by method label (first-seen order) and compares `outcome`.
pub fn compare_methods(runs: &[RunRecord], outcome: Outcome) -> Result<StatReport> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for run in runs {
        let v = outcome.extract(run)?;
        match groups.iter_mut().find(|(l, _)| *l == run.method) {
            Some((_, vals)) => vals.push(v),
            None => groups.push((run.method.clone(), vec![v])),
        }
    }
    if groups.len() < 2 {
        return Err(Error::InvalidSamples("need at least 2 methods".into()));
    }
    if let Some((l, v)) = groups.iter().find(|(_, v)| v.len() < 3) {
        return Err(Error::InvalidSamples(format!("method `{l}` has {} seeds, need at least 3", v.len())));
    }
    Ok(analyze(&GroupedSamples::new(groups)?, outcome))
}

impl StatReport {
    /// Fixed-width text rendering: omnibus line, then the adjusted Dunn matrix.
    pub fn render_text(&self) -> String {
        let w = self.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Kruskal-Wallis ({}): H = {:.4}, p = {:.4}, eta^2 = {:.4}",
            self.outcome.as_str(),
            self.h,
            self.p_value,
            self.eta_squared
        );
        let _ = writeln!(s, "Dunn's test (Holm-adjusted p-values)");
        let _ = write!(s, "{:w$}", "");
        for l in &self.labels {
            let _ = write!(s, "  {l:>w$}");
        }
        s.push('\n');
        for (l, row) in self.labels.iter().zip(&self.dunn_matrix) {
            let _ = write!(s, "{l:<w$}");
            for v in row {
                let _ = write!(s, "  {v:>w$.3}");
            }
            s.push('\n');
        }
        s
    }
}
