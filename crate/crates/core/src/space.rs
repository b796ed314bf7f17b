//! Mixed discrete/continuous hyperparameter spaces.
//!
//! A [`SearchSpace`] is an ordered list of named dimensions. Every
//! [`Configuration`] stores one value per dimension, including values for
//! layers that are inactive under the current depth ("dormant" values), so
//! the numeric encoding has a fixed length for a given space.
//!
//! Encoding into the unit hypercube:
//!
//! * integer and continuous ranges map affinely onto `[0, 1]`,
//! * booleans map to `0` or `1`,
//! * a categorical with `c` choices is one-hot encoded into `c` coordinates.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain of a single dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DimensionKind {
    /// Integers `lo, lo + step, ...` not exceeding `hi`.
    Integer { lo: i64, hi: i64, step: i64 },
    /// A finite set of labelled integer choices.
    Categorical { choices: Vec<i64> },
    Boolean,
    /// Closed real interval `[lo, hi]`.
    Continuous { lo: f64, hi: f64 },
}

impl DimensionKind {
    /// Number of distinct values, `None` for continuous ranges.
    pub fn cardinality(&self) -> Option<u64> {
        match self {
            DimensionKind::Integer { lo, hi, step } => Some(((hi - lo) / step + 1) as u64),
            DimensionKind::Categorical { choices } => Some(choices.len() as u64),
            DimensionKind::Boolean => Some(2),
            DimensionKind::Continuous { .. } => None,
        }
    }

    /// Width of this dimension in the encoded vector.
    pub fn encoded_width(&self) -> usize {
        match self {
            DimensionKind::Categorical { choices } => choices.len(),
            _ => 1,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpace(format!("dimension `{name}`: {msg}")));
        match self {
            DimensionKind::Integer { lo, hi, step } => {
                if lo > hi {
                    return bad(format!("lo {lo} > hi {hi}"));
                }
                if *step < 1 {
                    return bad(format!("step {step} < 1"));
                }
            }
            DimensionKind::Categorical { choices } => {
                if choices.len() < 2 {
                    return bad("categorical needs at least 2 choices".into());
                }
                let mut sorted = choices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != choices.len() {
                    return bad("duplicate categorical choices".into());
                }
            }
            DimensionKind::Boolean => {}
            DimensionKind::Continuous { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                    return bad(format!("continuous range requires finite lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        Ok(())
    }

    /// Maps `u` in `[0, 1)` onto the domain by the inverse of the uniform CDF.
    ///
    /// Grid dimensions pick the `floor(u * count)`-th value, so equal-width
    /// strata of `u` map to equal-probability sets of values.
    pub fn from_unit(&self, u: f64) -> Value {
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        let pick = |count: u64| ((u * count as f64).floor() as u64).min(count - 1);
        match self {
            DimensionKind::Integer { lo, step, .. } => {
                let count = self.cardinality().unwrap_or(1);
                Value::Int(lo + pick(count) as i64 * step)
            }
            DimensionKind::Categorical { choices } => Value::Choice(pick(choices.len() as u64) as usize),
            DimensionKind::Boolean => Value::Bool(u >= 0.5),
            DimensionKind::Continuous { lo, hi } => Value::Real((lo + u * (hi - lo)).min(*hi)),
        }
    }

    fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (DimensionKind::Integer { lo, hi, step }, Value::Int(v)) => {
                v >= lo && v <= hi && (v - lo) % step == 0
            }
            (DimensionKind::Categorical { choices }, Value::Choice(i)) => *i < choices.len(),
            (DimensionKind::Boolean, Value::Bool(_)) => true,
            (DimensionKind::Continuous { lo, hi }, Value::Real(v)) => v.is_finite() && v >= lo && v <= hi,
            _ => false,
        }
    }
}

/// A named dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: DimensionKind,
}

impl DimensionSpec {
    pub fn new(name: impl Into<String>, kind: DimensionKind) -> Self {
        Self { name: name.into(), kind }
    }
}

/// Value of one dimension. Categorical values are stored as the index of the choice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Choice(usize),
    Bool(bool),
    Real(f64),
}

/// Point in the unit hypercube produced by [`SearchSpace::encode`].
pub type UnitVector = Vec<f64>;

/// An ordered, validated list of dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DimensionSpec>", into = "Vec<DimensionSpec>")]
pub struct SearchSpace {
    dims: Vec<DimensionSpec>,
}

impl TryFrom<Vec<DimensionSpec>> for SearchSpace {
    type Error = Error;

    fn try_from(dims: Vec<DimensionSpec>) -> Result<Self> {
        SearchSpace::new(dims)
    }
}

impl From<SearchSpace> for Vec<DimensionSpec> {
    fn from(space: SearchSpace) -> Self {
        space.dims
    }
}

impl SearchSpace {
    pub fn new(dims: Vec<DimensionSpec>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("space has no dimensions".into()));
        }
        for (i, d) in dims.iter().enumerate() {
            d.kind.validate(&d.name)?;
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::InvalidSpace(format!("duplicate dimension name `{}`", d.name)));
            }
        }
        Ok(Self { dims })
    }

    /// The depthwise-separable CNN keyword-spotting space.
    ///
    /// Per-layer filter and unit counts are stored for the maximum depth;
    /// entries beyond the active depth are dormant.
    pub fn kws_default() -> Self {
        use DimensionKind::*;
        let filters = || Integer { lo: 16, hi: 64, step: 8 };
        let units = || Integer { lo: 32, hi: 256, step: 32 };
        Self::new(vec![
            DimensionSpec::new("conv_layers", Integer { lo: 1, hi: 3, step: 1 }),
            DimensionSpec::new("filters_1", filters()),
            DimensionSpec::new("filters_2", filters()),
            DimensionSpec::new("filters_3", filters()),
            DimensionSpec::new("kernel", Categorical { choices: vec![3, 5] }),
            DimensionSpec::new("stride", Integer { lo: 1, hi: 2, step: 1 }),
            DimensionSpec::new("dropout", Continuous { lo: 0.0, hi: 0.5 }),
            DimensionSpec::new("batch_norm", Boolean),
            DimensionSpec::new("dense_layers", Integer { lo: 1, hi: 3, step: 1 }),
            DimensionSpec::new("units_1", units()),
            DimensionSpec::new("units_2", units()),
            DimensionSpec::new("units_3", units()),
        ])
        .expect("built-in space is valid")
    }

    pub fn dims(&self) -> &[DimensionSpec] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    /// Length of encoded vectors.
    pub fn encoded_dim(&self) -> usize {
        self.dims.iter().map(|d| d.kind.encoded_width()).sum()
    }

    /// Number of configurations, `None` if any dimension is continuous.
    pub fn cardinality(&self) -> Option<u128> {
        self.dims
            .iter()
            .map(|d| d.kind.cardinality().map(u128::from))
            .try_fold(1u128, |acc, c| c.map(|c| acc * c))
    }

    /// Size of the discrete sub-lattice, ignoring continuous dimensions.
    pub fn discrete_cardinality(&self) -> u128 {
        self.dims
            .iter()
            .filter_map(|d| d.kind.cardinality())
            .map(u128::from)
            .product()
    }

    /// Builds a configuration from one `[0, 1)` coordinate per dimension.
    pub fn from_unit(&self, u: &[f64]) -> Result<Configuration> {
        if u.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), got: u.len() });
        }
        let values = self.dims.iter().zip(u).map(|(d, &x)| d.kind.from_unit(x)).collect();
        Configuration::new(self, values)
    }

    /// Draws every dimension independently and uniformly over its domain.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let values = self
            .dims
            .iter()
            .map(|d| d.kind.from_unit(rng.random::<f64>()))
            .collect();
        Configuration::from_trusted(values)
    }

    pub fn encode(&self, cfg: &Configuration) -> Result<UnitVector> {
        self.check(cfg)?;
        let mut out = Vec::with_capacity(self.encoded_dim());
        for (d, v) in self.dims.iter().zip(&cfg.values) {
            match (&d.kind, v) {
                (DimensionKind::Integer { lo, hi, .. }, Value::Int(x)) => {
                    out.push(if hi == lo { 0.0 } else { (x - lo) as f64 / (hi - lo) as f64 })
                }
                (DimensionKind::Categorical { choices }, Value::Choice(i)) => {
                    out.extend((0..choices.len()).map(|j| if j == *i { 1.0 } else { 0.0 }))
                }
                (DimensionKind::Boolean, Value::Bool(b)) => out.push(if *b { 1.0 } else { 0.0 }),
                (DimensionKind::Continuous { lo, hi }, Value::Real(x)) => out.push((x - lo) / (hi - lo)),
                _ => unreachable!("checked above"),
            }
        }
        Ok(out)
    }

    /// Inverse of [`encode`](Self::encode), snapping to the nearest grid value.
    pub fn decode(&self, x: &[f64]) -> Result<Configuration> {
        if x.len() != self.encoded_dim() {
            return Err(Error::DimensionMismatch { expected: self.encoded_dim(), got: x.len() });
        }
        let mut pos = 0;
        let mut values = Vec::with_capacity(self.dims.len());
        for d in &self.dims {
            let v = match &d.kind {
                DimensionKind::Integer { lo, hi, step } => {
                    let raw = lo + ((x[pos].clamp(0.0, 1.0) * (hi - lo) as f64) / *step as f64).round() as i64 * step;
                    Value::Int(raw.min(lo + (hi - lo) / step * step))
                }
                DimensionKind::Categorical { choices } => {
                    let slice = &x[pos..pos + choices.len()];
                    let best = slice
                        .iter()
                        .enumerate()
                        .fold(0, |b, (i, &s)| if s > slice[b] { i } else { b });
                    Value::Choice(best)
                }
                DimensionKind::Boolean => Value::Bool(x[pos] >= 0.5),
                DimensionKind::Continuous { lo, hi } => Value::Real(lo + x[pos].clamp(0.0, 1.0) * (hi - lo)),
            };
            pos += d.kind.encoded_width();
            values.push(v);
        }
        Configuration::new(self, values)
    }

    /// Returns a neighbour differing from `cfg` in exactly one dimension.
    ///
    /// The dimension is chosen uniformly. Integers move one grid step (the
    /// opposite direction is taken when the drawn one is blocked by a bound),
    /// booleans flip, categoricals resample a different choice, and
    /// continuous values take a Gaussian step of `0.1 * (hi - lo)`, clamped,
    /// re-drawn while the clamp leaves the value unchanged.
    pub fn perturb<R: Rng + ?Sized>(&self, cfg: &Configuration, rng: &mut R) -> Result<Configuration> {
        self.check(cfg)?;
        let movable: Vec<usize> = (0..self.dims.len())
            .filter(|&i| self.dims[i].kind.cardinality() != Some(1))
            .collect();
        if movable.is_empty() {
            return Ok(cfg.clone());
        }
        let i = movable[rng.random_range(0..movable.len())];
        let mut values = cfg.values.clone();
        values[i] = match (&self.dims[i].kind, cfg.values[i]) {
            (DimensionKind::Integer { lo, hi, step }, Value::Int(x)) => {
                let up = rng.random::<bool>();
                let max = lo + (hi - lo) / step * step;
                let next = if up { x + step } else { x - step };
                if next < *lo || next > max {
                    Value::Int(if up { x - step } else { x + step })
                } else {
                    Value::Int(next)
                }
            }
            (DimensionKind::Categorical { choices }, Value::Choice(c)) => {
                let mut j = rng.random_range(0..choices.len() - 1);
                if j >= c {
                    j += 1;
                }
                Value::Choice(j)
            }
            (DimensionKind::Boolean, Value::Bool(b)) => Value::Bool(!b),
            (DimensionKind::Continuous { lo, hi }, Value::Real(x)) => {
                let normal = Normal::new(0.0, 0.1 * (hi - lo)).expect("positive scale");
                let mut next = x;
                for _ in 0..64 {
                    next = (x + normal.sample(rng)).clamp(*lo, *hi);
                    if next != x {
                        break;
                    }
                }
                if next == x {
                    // Pathological stream: step inward deterministically.
                    next = if x >= *hi { hi - 0.1 * (hi - lo) } else { (x + 0.1 * (hi - lo)).min(*hi) };
                }
                Value::Real(next)
            }
            _ => unreachable!("checked above"),
        };
        Ok(Configuration::from_trusted(values))
    }

    /// Euclidean distance between the encodings of `a` and `b`.
    pub fn distance(&self, a: &Configuration, b: &Configuration) -> Result<f64> {
        let (ea, eb) = (self.encode(a)?, self.encode(b)?);
        Ok(euclidean(&ea, &eb))
    }

    /// Verifies that `cfg` has one in-domain value per dimension.
    pub fn check(&self, cfg: &Configuration) -> Result<()> {
        if cfg.values.len() != self.dims.len() {
            return Err(Error::ConfigMismatch(format!(
                "{} values for {} dimensions",
                cfg.values.len(),
                self.dims.len()
            )));
        }
        for (d, v) in self.dims.iter().zip(&cfg.values) {
            if !d.kind.contains(v) {
                return Err(Error::ConfigMismatch(format!("value {v:?} outside dimension `{}`", d.name)));
            }
        }
        Ok(())
    }

    /// Renders a configuration as a JSON object keyed by dimension name,
    /// with categorical values shown as the chosen label.
    pub fn to_json_object(&self, cfg: &Configuration) -> serde_json::Map<String, serde_json::Value> {
        self.dims
            .iter()
            .zip(&cfg.values)
            .map(|(d, v)| {
                let json = match (&d.kind, v) {
                    (DimensionKind::Categorical { choices }, Value::Choice(i)) => serde_json::json!(choices[*i]),
                    (_, Value::Int(x)) => serde_json::json!(x),
                    (_, Value::Bool(b)) => serde_json::json!(b),
                    (_, Value::Real(x)) => serde_json::json!(x),
                    (_, Value::Choice(i)) => serde_json::json!(i),
                };
                (d.name.clone(), json)
            })
            .collect()
    }

    /// Parses the object produced by [`to_json_object`](Self::to_json_object).
    pub fn from_json_object(&self, obj: &serde_json::Map<String, serde_json::Value>) -> Result<Configuration> {
        let mut values = Vec::with_capacity(self.dims.len());
        for d in &self.dims {
            let raw = obj
                .get(&d.name)
                .ok_or_else(|| Error::ConfigMismatch(format!("missing dimension `{}`", d.name)))?;
            let bad = || Error::ConfigMismatch(format!("bad value {raw} for `{}`", d.name));
            let v = match &d.kind {
                DimensionKind::Integer { .. } => Value::Int(raw.as_i64().ok_or_else(bad)?),
                DimensionKind::Categorical { choices } => {
                    let label = raw.as_i64().ok_or_else(bad)?;
                    Value::Choice(choices.iter().position(|&c| c == label).ok_or_else(bad)?)
                }
                DimensionKind::Boolean => Value::Bool(raw.as_bool().ok_or_else(bad)?),
                DimensionKind::Continuous { .. } => Value::Real(raw.as_f64().ok_or_else(bad)?),
            };
            values.push(v);
        }
        Configuration::new(self, values)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Stable 64-bit identifier of a configuration (FNV-1a over its values).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigId(pub u64);

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// One value per dimension of a [`SearchSpace`], plus a stable id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    values: Vec<Value>,
    id: ConfigId,
}

impl Configuration {
    pub fn new(space: &SearchSpace, values: Vec<Value>) -> Result<Self> {
        let cfg = Self::from_trusted(values);
        space.check(&cfg)?;
        Ok(cfg)
    }

    pub(crate) fn from_trusted(values: Vec<Value>) -> Self {
        let id = hash_values(&values);
        Self { values, id }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn id(&self) -> ConfigId {
        self.id
    }

    pub fn get(&self, space: &SearchSpace, name: &str) -> Option<Value> {
        space.index_of(name).and_then(|i| self.values.get(i).copied())
    }
}

fn hash_values(values: &[Value]) -> ConfigId {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    for v in values {
        match *v {
            Value::Int(x) => {
                feed(&[0]);
                feed(&x.to_le_bytes());
            }
            Value::Choice(i) => {
                feed(&[1]);
                feed(&(i as u64).to_le_bytes());
            }
            Value::Bool(b) => feed(&[2, b as u8]),
            Value::Real(x) => {
                feed(&[3]);
                // Normalize -0.0 so equal values hash equally.
                let x = if x == 0.0 { 0.0 } else { x };
                feed(&x.to_bits().to_le_bytes());
            }
        }
    }
    ConfigId(h)
}
