//! Bi-objective evaluators.
//!
//! The keyword-spotting problem pairs an exact float32 size model of a
//! depthwise-separable CNN with a deterministic synthetic accuracy model.
//! The accuracy constants in [`KwsConstants`] are fixtures chosen to give a
//! saturating accuracy/size trade-off; they are not measured values.
//!
//! # Size model
//!
//! With `L` conv blocks of widths `F_1..F_L`, kernel `K`, `N` dense layers of
//! widths `U_1..U_N` and 10 output classes, the parameter count is
//!
//! ```text
//! conv block 1       K*K*1*F_1 + F_1                  (standard conv, 1 input channel)
//! conv block j >= 2  K*K*F_{j-1} + F_{j-1}            (depthwise, with bias)
//!                    + F_{j-1}*F_j + F_j              (1x1 pointwise, with bias)
//! batch norm         4*F_j per conv block, only when enabled
//! global avg pool    0
//! dense layers       F_L*U_1 + U_1, U_1*U_2 + U_2, ...
//! classifier         U_N*10 + 10
//! ```
//!
//! and the size is `4 * params` bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Configuration, DimensionKind, DimensionSpec, SearchSpace, Value};

pub const KWS_CLASSES: u64 = 10;
pub const BYTES_PER_PARAM: u64 = 4;

/// `(f1, f2)`, both minimized. For the KWS problem `f1 = -accuracy` and
/// `f2 = size in bytes`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectiveVector {
    pub const fn new(f1: f64, f2: f64) -> Self {
        Self { f1, f2 }
    }

    pub fn is_finite(&self) -> bool {
        self.f1.is_finite() && self.f2.is_finite()
    }

    /// Weak Pareto dominance for minimization: no worse everywhere and not equal.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        self.f1 <= other.f1 && self.f2 <= other.f2 && self != other
    }

    pub fn strictly_dominates(&self, other: &ObjectiveVector) -> bool {
        self.f1 < other.f1 && self.f2 < other.f2
    }
}

/// Per-objective `(lo, hi)` used to map objectives onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub f1: (f64, f64),
    pub f2: (f64, f64),
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("f1", self.f1), ("f2", self.f2)] {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::DegenerateBounds(format!("{name}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, y: &ObjectiveVector) -> bool {
        (self.f1.0..=self.f1.1).contains(&y.f1) && (self.f2.0..=self.f2.1).contains(&y.f2)
    }
}

/// Constants of the synthetic accuracy model and the simulated training cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KwsConstants {
    pub a_max: f64,
    pub p0: f64,
    /// Multiplier applied when the kernel is 3x3 (5x5 uses 1.0).
    pub small_kernel_factor: f64,
    /// Multiplier applied without batch norm.
    pub no_batch_norm_factor: f64,
    pub dropout_penalty: f64,
    pub dropout_optimum: f64,
    pub jitter: f64,
    /// Simulated seconds per evaluation: `base + per_kparam * params / 1000`.
    pub cost_base_s: f64,
    pub cost_per_kparam_s: f64,
}

impl Default for KwsConstants {
    fn default() -> Self {
        Self {
            a_max: 0.95,
            p0: 40_000.0,
            small_kernel_factor: 0.99,
            no_batch_norm_factor: 0.985,
            dropout_penalty: 0.1,
            dropout_optimum: 0.25,
            jitter: 0.01,
            cost_base_s: 20.0,
            cost_per_kparam_s: 2.0,
        }
    }
}

/// Architecture read out of a KWS configuration; dormant layers are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct KwsArch {
    pub filters: Vec<u64>,
    pub kernel: u64,
    pub stride: u64,
    pub dropout: f64,
    pub batch_norm: bool,
    pub units: Vec<u64>,
}

impl KwsArch {
    pub fn from_config(space: &SearchSpace, cfg: &Configuration) -> Result<Self> {
        space.check(cfg)?;
        let int = |name: &str| -> Result<u64> {
            match cfg.get(space, name) {
                Some(Value::Int(v)) if v > 0 => Ok(v as u64),
                _ => Err(Error::NotKwsConfig(name.to_string())),
            }
        };
        let layers = int("conv_layers")? as usize;
        let dense = int("dense_layers")? as usize;
        let filters = (1..=layers).map(|j| int(&format!("filters_{j}"))).collect::<Result<_>>()?;
        let units = (1..=dense).map(|j| int(&format!("units_{j}"))).collect::<Result<_>>()?;
        let kernel = match (space.index_of("kernel").map(|i| &space.dims()[i].kind), cfg.get(space, "kernel")) {
            (Some(DimensionKind::Categorical { choices }), Some(Value::Choice(i))) => choices[i] as u64,
            (_, Some(Value::Int(k))) if k > 0 => k as u64,
            _ => return Err(Error::NotKwsConfig("kernel".into())),
        };
        let stride = int("stride")?;
        let dropout = match cfg.get(space, "dropout") {
            Some(Value::Real(d)) => d,
            _ => return Err(Error::NotKwsConfig("dropout".into())),
        };
        let batch_norm = match cfg.get(space, "batch_norm") {
            Some(Value::Bool(b)) => b,
            _ => return Err(Error::NotKwsConfig("batch_norm".into())),
        };
        Ok(Self { filters, kernel, stride, dropout, batch_norm, units })
    }

    pub fn param_count(&self) -> u64 {
        let k2 = self.kernel * self.kernel;
        let mut params = 0;
        let mut prev = 1;
        for (j, &f) in self.filters.iter().enumerate() {
            if j == 0 {
                params += k2 * f + f;
            } else {
                params += k2 * prev + prev;
                params += prev * f + f;
            }
            if self.batch_norm {
                params += 4 * f;
            }
            prev = f;
        }
        for &u in &self.units {
            params += prev * u + u;
            prev = u;
        }
        params + prev * KWS_CLASSES + KWS_CLASSES
    }

    /// Hash of the active architecture only; dormant layer values never reach
    /// the accuracy jitter.
    fn canonical_key(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.filters.len() as u64);
        self.filters.iter().for_each(|&f| feed(f));
        feed(self.kernel);
        feed(self.stride);
        feed(self.dropout.to_bits());
        feed(self.batch_norm as u64);
        feed(self.units.len() as u64);
        self.units.iter().for_each(|&u| feed(u));
        h
    }
}

/// Exact float32 byte count of the DS-CNN described by `cfg`.
pub fn dscnn_size_bytes(space: &SearchSpace, cfg: &Configuration) -> Result<u64> {
    Ok(BYTES_PER_PARAM * KwsArch::from_config(space, cfg)?.param_count())
}

/// Deterministic synthetic validation accuracy in `[0, 1]`.
pub fn synthetic_accuracy(space: &SearchSpace, cfg: &Configuration, c: &KwsConstants) -> Result<f64> {
    let arch = KwsArch::from_config(space, cfg)?;
    Ok(accuracy_of(&arch, c))
}

fn accuracy_of(arch: &KwsArch, c: &KwsConstants) -> f64 {
    let p = arch.param_count() as f64;
    let kernel = if arch.kernel >= 5 { 1.0 } else { c.small_kernel_factor };
    let bn = if arch.batch_norm { 1.0 } else { c.no_batch_norm_factor };
    let drop = 1.0 - c.dropout_penalty * (arch.dropout - c.dropout_optimum).powi(2);
    let base = c.a_max * (1.0 - (-p / c.p0).exp()) * kernel * bn * drop;
    (base + c.jitter * jitter_unit(arch.canonical_key())).clamp(0.0, 1.0)
}

/// Maps a key to `[-1, 1]` through a splitmix64 finalizer.
fn jitter_unit(key: u64) -> f64 {
    let mut z = key.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    2.0 * ((z >> 11) as f64 / (1u64 << 53) as f64) - 1.0
}

/// Which closed-form or synthetic problem a [`ObjectiveProblem`] evaluates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProblemKind {
    Kws { constants: KwsConstants },
    /// `f1 = |x|^2`, `f2 = |x - (1, 1)|^2` on `[-0.5, 1.5]^2`.
    ConvexQuadratic2d,
    /// `f1 = x^2`, `f2 = (x - 2)^2` on `[-1, 3]`.
    SchafferN1,
    /// Schaffer N.1 on the 201-point grid `x = -1 + 0.02 i`.
    SchafferN1Grid,
}

pub const PROBLEM_NAMES: [&str; 4] = ["kws", "convex-quadratic-2d", "schaffer-n1", "schaffer-n1-grid"];

/// A black-box bi-objective problem over a search space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveProblem {
    pub name: String,
    pub space: SearchSpace,
    pub kind: ProblemKind,
    pub nominal_bounds: Bounds,
}

impl ObjectiveProblem {
    /// Looks up a problem by name (see [`PROBLEM_NAMES`]).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "kws" => Ok(Self::kws(KwsConstants::default())),
            other => benchmark_biobjective(other),
        }
    }

    pub fn kws(constants: KwsConstants) -> Self {
        let space = SearchSpace::kws_default();
        let bytes = |filters: u64, kernel: u64, bn: bool, units: u64, depth: usize| {
            let arch = KwsArch {
                filters: vec![filters; depth],
                kernel,
                stride: 1,
                dropout: 0.0,
                batch_norm: bn,
                units: vec![units; depth],
            };
            (BYTES_PER_PARAM * arch.param_count()) as f64
        };
        // Size is nondecreasing in every dimension, so the extreme corners bound it.
        let nominal_bounds = Bounds { f1: (-1.0, 0.0), f2: (bytes(16, 3, false, 32, 1), bytes(64, 5, true, 256, 3)) };
        Self { name: "kws".into(), space, kind: ProblemKind::Kws { constants }, nominal_bounds }
    }

    pub fn evaluate(&self, cfg: &Configuration) -> Result<ObjectiveVector> {
        let y = match &self.kind {
            ProblemKind::Kws { constants } => {
                let arch = KwsArch::from_config(&self.space, cfg)?;
                ObjectiveVector::new(-accuracy_of(&arch, constants), (BYTES_PER_PARAM * arch.param_count()) as f64)
            }
            ProblemKind::ConvexQuadratic2d => {
                let (x1, x2) = (self.real(cfg, 0)?, self.real(cfg, 1)?);
                ObjectiveVector::new(x1 * x1 + x2 * x2, (x1 - 1.0).powi(2) + (x2 - 1.0).powi(2))
            }
            ProblemKind::SchafferN1 => schaffer(self.real(cfg, 0)?),
            ProblemKind::SchafferN1Grid => match cfg.values().first() {
                Some(Value::Int(i)) => {
                    self.space.check(cfg)?;
                    schaffer(schaffer_grid_x(*i))
                }
                _ => return Err(Error::ConfigMismatch("expected grid index".into())),
            },
        };
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("objectives {y:?}")));
        }
        Ok(y)
    }

    /// Simulated wall time of one evaluation, in seconds.
    ///
    /// KWS charges a training-like cost growing with parameter count; the
    /// closed-form benchmarks charge one second per evaluation.
    pub fn eval_cost_seconds(&self, cfg: &Configuration) -> f64 {
        match &self.kind {
            ProblemKind::Kws { constants } => KwsArch::from_config(&self.space, cfg)
                .map(|a| constants.cost_base_s + constants.cost_per_kparam_s * a.param_count() as f64 / 1000.0)
                .unwrap_or(constants.cost_base_s),
            _ => 1.0,
        }
    }

    pub fn is_kws(&self) -> bool {
        matches!(self.kind, ProblemKind::Kws { .. })
    }

    fn real(&self, cfg: &Configuration, i: usize) -> Result<f64> {
        self.space.check(cfg)?;
        match cfg.values()[i] {
            Value::Real(x) => Ok(x),
            _ => Err(Error::ConfigMismatch(format!("dimension {i} is not continuous"))),
        }
    }
}

fn schaffer(x: f64) -> ObjectiveVector {
    ObjectiveVector::new(x * x, (x - 2.0).powi(2))
}

pub fn schaffer_grid_x(i: i64) -> f64 {
    -1.0 + 0.02 * i as f64
}

/// Closed-form benchmark with a known Pareto front.
pub fn benchmark_biobjective(name: &str) -> Result<ObjectiveProblem> {
    let cont = |n: &str, lo, hi| DimensionSpec::new(n, DimensionKind::Continuous { lo, hi });
    let (space, kind, bounds) = match name {
        "convex-quadratic-2d" => (
            SearchSpace::new(vec![cont("x1", -0.5, 1.5), cont("x2", -0.5, 1.5)])?,
            ProblemKind::ConvexQuadratic2d,
            Bounds { f1: (0.0, 4.5), f2: (0.0, 4.5) },
        ),
        "schaffer-n1" => (
            SearchSpace::new(vec![cont("x", -1.0, 3.0)])?,
            ProblemKind::SchafferN1,
            Bounds { f1: (0.0, 9.0), f2: (0.0, 9.0) },
        ),
        "schaffer-n1-grid" => (
            SearchSpace::new(vec![DimensionSpec::new("x_index", DimensionKind::Integer { lo: 0, hi: 200, step: 1 })])?,
            ProblemKind::SchafferN1Grid,
            Bounds { f1: (0.0, 9.0), f2: (0.0, 9.0) },
        ),
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    Ok(ObjectiveProblem { name: name.to_string(), space, kind, nominal_bounds: bounds })
}
