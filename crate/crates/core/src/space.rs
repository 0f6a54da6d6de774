//! Mixed numerical/categorical search spaces, configuration validation,
//! uniform sampling, and the fixed-length real encoding consumed by the
//! kernels.
//!
//! Numeric parameters are min-max scaled to [0, 1] (on the log scale when
//! `log_scale` is set) and categoricals are one-hot encoded, so the encoded
//! dimensionality is `#numeric + sum(|choices|)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// A single value of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    Cat(String),
}

impl ParamValue {
    fn kind_name(&self) -> &'static str {
        match self {
            ParamValue::Float(_) => "continuous",
            ParamValue::Int(_) => "integer",
            ParamValue::Cat(_) => "categorical",
        }
    }
}

/// The domain of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterKind {
    Continuous { low: f64, high: f64, log_scale: bool },
    Integer { low: i64, high: i64, log_scale: bool },
    Categorical { choices: Vec<String> },
}

/// One named parameter with its domain and default value.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDef {
    pub name: String,
    pub kind: ParameterKind,
    pub default: ParamValue,
}

impl ParameterDef {
    pub fn continuous(name: &str, low: f64, high: f64, log_scale: bool, default: f64) -> Self {
        ParameterDef {
            name: name.to_string(),
            kind: ParameterKind::Continuous { low, high, log_scale },
            default: ParamValue::Float(default),
        }
    }

    pub fn integer(name: &str, low: i64, high: i64, log_scale: bool, default: i64) -> Self {
        ParameterDef {
            name: name.to_string(),
            kind: ParameterKind::Integer { low, high, log_scale },
            default: ParamValue::Int(default),
        }
    }

    pub fn categorical(name: &str, choices: &[&str], default: &str) -> Self {
        ParameterDef {
            name: name.to_string(),
            kind: ParameterKind::Categorical {
                choices: choices.iter().map(|c| c.to_string()).collect(),
            },
            default: ParamValue::Cat(default.to_string()),
        }
    }

    /// Width of this parameter's block in the encoded vector.
    pub fn encoded_width(&self) -> usize {
        match &self.kind {
            ParameterKind::Categorical { choices } => choices.len(),
            _ => 1,
        }
    }

    /// Checks a value against this parameter's domain.
    pub fn check_value(&self, value: &ParamValue) -> Result<()> {
        let err = |reason: String| Error::InvalidConfiguration {
            param: self.name.clone(),
            reason,
        };
        match (&self.kind, value) {
            (ParameterKind::Continuous { low, high, .. }, ParamValue::Float(v)) => {
                if !v.is_finite() || v < low || v > high {
                    return Err(err(format!("value {v} outside [{low}, {high}]")));
                }
            }
            // A JSON number like 3.0 for an integer parameter is accepted as 3.
            (ParameterKind::Integer { low, high, .. }, ParamValue::Float(v)) => {
                if v.fract() != 0.0 {
                    return Err(err(format!("value {v} is not integral")));
                }
                let v = *v as i64;
                if v < *low || v > *high {
                    return Err(err(format!("value {v} outside [{low}, {high}]")));
                }
            }
            (ParameterKind::Integer { low, high, .. }, ParamValue::Int(v)) => {
                if v < low || v > high {
                    return Err(err(format!("value {v} outside [{low}, {high}]")));
                }
            }
            (ParameterKind::Categorical { choices }, ParamValue::Cat(c)) => {
                if !choices.iter().any(|x| x == c) {
                    return Err(err(format!("`{c}` is not one of {choices:?}")));
                }
            }
            (_, v) => {
                return Err(err(format!(
                    "expected a {} value, got {}",
                    match self.kind {
                        ParameterKind::Continuous { .. } => "continuous",
                        ParameterKind::Integer { .. } => "integer",
                        ParameterKind::Categorical { .. } => "categorical",
                    },
                    v.kind_name()
                )));
            }
        }
        Ok(())
    }
}

/// An ordered list of parameter definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    params: Vec<ParameterDef>,
}

/// A violation found by [`validate_space`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub param: String,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.param, self.reason)
    }
}

impl SearchSpace {
    /// Builds a space, rejecting it if any invariant is violated.
    pub fn new(params: Vec<ParameterDef>) -> Result<Self> {
        let space = SearchSpace { params };
        let violations = validate_space(&space);
        if violations.is_empty() {
            Ok(space)
        } else {
            Err(Error::InvalidArgument(
                violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// Builds a space without validating; used by `validate_space` tests.
    pub fn new_unchecked(params: Vec<ParameterDef>) -> Self {
        SearchSpace { params }
    }

    pub fn params(&self) -> &[ParameterDef] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Encoded dimensionality `d`.
    pub fn encoded_dim(&self) -> usize {
        self.params.iter().map(|p| p.encoded_width()).sum()
    }

    pub fn has_categorical(&self) -> bool {
        self.params
            .iter()
            .any(|p| matches!(p.kind, ParameterKind::Categorical { .. }))
    }

    /// Validates a configuration against this space.
    pub fn check_config(&self, config: &Configuration) -> Result<()> {
        if config.values.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                got: config.values.len(),
            });
        }
        for (def, value) in self.params.iter().zip(&config.values) {
            def.check_value(value)?;
        }
        Ok(())
    }

    pub fn default_configuration(&self) -> Configuration {
        Configuration {
            values: self.params.iter().map(|p| p.default.clone()).collect(),
        }
    }
}

/// Checks all [`ParameterDef`] and [`SearchSpace`] invariants; an empty list
/// means the space is valid.
pub fn validate_space(space: &SearchSpace) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |param: &str, reason: String| {
        out.push(Violation {
            param: param.to_string(),
            reason,
        })
    };
    let mut seen = std::collections::HashSet::new();
    for def in &space.params {
        if !seen.insert(def.name.clone()) {
            push(&def.name, "duplicate name".to_string());
        }
        match &def.kind {
            ParameterKind::Continuous { low, high, log_scale } => {
                if !(low < high) {
                    push(&def.name, format!("low < high required, got [{low}, {high}]"));
                }
                if *log_scale && *low <= 0.0 {
                    push(&def.name, format!("log scale requires low > 0, got {low}"));
                }
            }
            ParameterKind::Integer { low, high, log_scale } => {
                if !(low < high) {
                    push(&def.name, format!("low < high required, got [{low}, {high}]"));
                }
                if *log_scale && *low <= 0 {
                    push(&def.name, format!("log scale requires low > 0, got {low}"));
                }
            }
            ParameterKind::Categorical { choices } => {
                if choices.is_empty() {
                    push(&def.name, "choices must be non-empty".to_string());
                }
                let mut cs = std::collections::HashSet::new();
                for c in choices {
                    if !cs.insert(c) {
                        push(&def.name, format!("duplicate choice `{c}`"));
                    }
                }
            }
        }
        if let Err(Error::InvalidConfiguration { reason, .. }) = def.check_value(&def.default) {
            push(&def.name, format!("default: {reason}"));
        }
    }
    out
}

/// A point in a search space; values are ordered like the space's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub values: Vec<ParamValue>,
}

/// Canonical, hashable identity of a configuration. Float values compare by
/// exact bit pattern, so a 1e-9 perturbation is a different key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigKey(Vec<KeyPart>);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum KeyPart {
    F(u64),
    I(i64),
    S(String),
}

impl Configuration {
    pub fn new(values: Vec<ParamValue>) -> Self {
        Configuration { values }
    }

    pub fn key(&self) -> ConfigKey {
        ConfigKey(
            self.values
                .iter()
                .map(|v| match v {
                    ParamValue::Float(x) => KeyPart::F(x.to_bits()),
                    ParamValue::Int(x) => KeyPart::I(*x),
                    ParamValue::Cat(s) => KeyPart::S(s.clone()),
                })
                .collect(),
        )
    }

    /// Serializes to the `{"name": value, ...}` object used in benchmark files.
    pub fn to_json_map(&self, space: &SearchSpace) -> serde_json::Map<String, serde_json::Value> {
        let mut map = serde_json::Map::new();
        for (def, value) in space.params().iter().zip(&self.values) {
            let v = match value {
                ParamValue::Float(x) => serde_json::json!(x),
                ParamValue::Int(x) => serde_json::json!(x),
                ParamValue::Cat(s) => serde_json::json!(s),
            };
            map.insert(def.name.clone(), v);
        }
        map
    }

    /// Parses and validates the `{"name": value, ...}` object form.
    pub fn from_json_map(
        space: &SearchSpace,
        map: &serde_json::Map<String, serde_json::Value>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(space.len());
        for def in space.params() {
            let raw = map.get(&def.name).ok_or_else(|| Error::InvalidConfiguration {
                param: def.name.clone(),
                reason: "missing value".to_string(),
            })?;
            let value = match (&def.kind, raw) {
                (ParameterKind::Continuous { .. }, v) if v.is_number() => {
                    ParamValue::Float(v.as_f64().unwrap())
                }
                (ParameterKind::Integer { .. }, v) if v.is_i64() => {
                    ParamValue::Int(v.as_i64().unwrap())
                }
                (ParameterKind::Integer { .. }, v) if v.is_number() => {
                    ParamValue::Float(v.as_f64().unwrap())
                }
                (ParameterKind::Categorical { .. }, serde_json::Value::String(s)) => {
                    ParamValue::Cat(s.clone())
                }
                _ => {
                    return Err(Error::InvalidConfiguration {
                        param: def.name.clone(),
                        reason: format!("unexpected JSON value {raw}"),
                    })
                }
            };
            def.check_value(&value)?;
            // Normalize integral floats for integer parameters so keys are canonical.
            let value = match (&def.kind, value) {
                (ParameterKind::Integer { .. }, ParamValue::Float(v)) => ParamValue::Int(v as i64),
                (_, v) => v,
            };
            values.push(value);
        }
        Ok(Configuration { values })
    }
}

/// A configuration encoded as a fixed-length real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPoint {
    pub coords: Vec<f64>,
}

impl EncodedPoint {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

fn scale_to_unit(v: f64, low: f64, high: f64, log_scale: bool) -> f64 {
    if log_scale {
        (v.ln() - low.ln()) / (high.ln() - low.ln())
    } else {
        (v - low) / (high - low)
    }
}

fn unit_to_scale(u: f64, low: f64, high: f64, log_scale: bool) -> f64 {
    if log_scale {
        (low.ln() + u * (high.ln() - low.ln())).exp()
    } else {
        low + u * (high - low)
    }
}

/// Encodes a valid configuration into `[0,1]` coordinates and one-hot blocks.
pub fn encode(space: &SearchSpace, config: &Configuration) -> Result<EncodedPoint> {
    space.check_config(config)?;
    let mut coords = Vec::with_capacity(space.encoded_dim());
    for (def, value) in space.params().iter().zip(&config.values) {
        match (&def.kind, value) {
            (ParameterKind::Continuous { low, high, log_scale }, ParamValue::Float(v)) => {
                coords.push(scale_to_unit(*v, *low, *high, *log_scale));
            }
            (ParameterKind::Integer { low, high, log_scale }, v) => {
                let v = match v {
                    ParamValue::Int(x) => *x as f64,
                    ParamValue::Float(x) => *x,
                    _ => unreachable!("checked by check_config"),
                };
                coords.push(scale_to_unit(v, *low as f64, *high as f64, *log_scale));
            }
            (ParameterKind::Categorical { choices }, ParamValue::Cat(c)) => {
                for choice in choices {
                    coords.push(if choice == c { 1.0 } else { 0.0 });
                }
            }
            _ => unreachable!("checked by check_config"),
        }
    }
    Ok(EncodedPoint { coords })
}

/// Inverse of [`encode`]. Integers round to nearest and clamp; one-hot blocks
/// decode by argmax with ties broken toward the lowest choice index, so the
/// function is total over real vectors of the right length.
pub fn decode(space: &SearchSpace, point: &EncodedPoint) -> Result<Configuration> {
    if point.dim() != space.encoded_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.encoded_dim(),
            got: point.dim(),
        });
    }
    let mut values = Vec::with_capacity(space.len());
    let mut i = 0;
    for def in space.params() {
        match &def.kind {
            ParameterKind::Continuous { low, high, log_scale } => {
                let v = unit_to_scale(point.coords[i].clamp(0.0, 1.0), *low, *high, *log_scale);
                values.push(ParamValue::Float(v.clamp(*low, *high)));
                i += 1;
            }
            ParameterKind::Integer { low, high, log_scale } => {
                let v = unit_to_scale(
                    point.coords[i].clamp(0.0, 1.0),
                    *low as f64,
                    *high as f64,
                    *log_scale,
                );
                values.push(ParamValue::Int((v.round() as i64).clamp(*low, *high)));
                i += 1;
            }
            ParameterKind::Categorical { choices } => {
                let block = &point.coords[i..i + choices.len()];
                let mut best = 0;
                for (j, &x) in block.iter().enumerate() {
                    if x > block[best] {
                        best = j;
                    }
                }
                values.push(ParamValue::Cat(choices[best].clone()));
                i += choices.len();
            }
        }
    }
    Ok(Configuration { values })
}

/// Draws `n` independent configurations: numerics uniform on their (possibly
/// log) scale, categoricals uniform over choices. Deterministic per seed.
pub fn sample_uniform(space: &SearchSpace, n: usize, rng: &mut Rng) -> Vec<Configuration> {
    (0..n)
        .map(|_| {
            let values = space
                .params()
                .iter()
                .map(|def| match &def.kind {
                    ParameterKind::Continuous { low, high, log_scale } => {
                        let u: f64 = rng.random();
                        ParamValue::Float(unit_to_scale(u, *low, *high, *log_scale).clamp(*low, *high))
                    }
                    ParameterKind::Integer { low, high, log_scale } => {
                        if *log_scale {
                            let u: f64 = rng.random();
                            let v = unit_to_scale(u, *low as f64, *high as f64, true);
                            ParamValue::Int((v.round() as i64).clamp(*low, *high))
                        } else {
                            ParamValue::Int(rng.random_range(*low..=*high))
                        }
                    }
                    ParameterKind::Categorical { choices } => {
                        ParamValue::Cat(choices[rng.random_range(0..choices.len())].clone())
                    }
                })
                .collect();
            Configuration { values }
        })
        .collect()
}

/// Observations of one task: (configuration, objective) pairs, minimization
/// convention.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskHistory {
    pub observations: Vec<(Configuration, f64)>,
}

impl TaskHistory {
    pub fn new(observations: Vec<(Configuration, f64)>) -> Self {
        TaskHistory { observations }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.observations.iter().map(|(_, y)| *y).collect()
    }

    pub fn encoded_points(&self, space: &SearchSpace) -> Result<Vec<EncodedPoint>> {
        self.observations
            .iter()
            .map(|(c, _)| encode(space, c))
            .collect()
    }

    /// Index of the best (lowest-y) observation; ties go to the first index.
    pub fn incumbent_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, (_, y)) in self.observations.iter().enumerate() {
            if best.is_none_or(|b| *y < self.observations[b].1) {
                best = Some(i);
            }
        }
        best
    }

    pub fn push(&mut self, config: Configuration, y: f64) {
        self.observations.push((config, y));
    }
}

// --- JSON schema -----------------------------------------------------------
//
// {"params":[{"name":"max_features","type":"continuous","low":0.0,"high":1.0,
//             "log":false,"default":0.5},
//            {"name":"criterion","type":"categorical",
//             "choices":["gini","entropy"],"default":"gini"}]}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    params: Vec<ParamRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ParamRepr {
    Continuous {
        name: String,
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
        default: f64,
    },
    Integer {
        name: String,
        low: i64,
        high: i64,
        #[serde(default)]
        log: bool,
        default: i64,
    },
    Categorical {
        name: String,
        choices: Vec<String>,
        default: String,
    },
}

impl Serialize for SearchSpace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let params = self
            .params
            .iter()
            .map(|def| match (&def.kind, &def.default) {
                (ParameterKind::Continuous { low, high, log_scale }, ParamValue::Float(d)) => {
                    ParamRepr::Continuous {
                        name: def.name.clone(),
                        low: *low,
                        high: *high,
                        log: *log_scale,
                        default: *d,
                    }
                }
                (ParameterKind::Integer { low, high, log_scale }, ParamValue::Int(d)) => {
                    ParamRepr::Integer {
                        name: def.name.clone(),
                        low: *low,
                        high: *high,
                        log: *log_scale,
                        default: *d,
                    }
                }
                (ParameterKind::Categorical { choices }, ParamValue::Cat(d)) => {
                    ParamRepr::Categorical {
                        name: def.name.clone(),
                        choices: choices.clone(),
                        default: d.clone(),
                    }
                }
                _ => unreachable!("default kind always matches parameter kind"),
            })
            .collect();
        SpaceRepr { params }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SearchSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SpaceRepr::deserialize(deserializer)?;
        let params = repr
            .params
            .into_iter()
            .map(|p| match p {
                ParamRepr::Continuous { name, low, high, log, default } => ParameterDef {
                    name,
                    kind: ParameterKind::Continuous { low, high, log_scale: log },
                    default: ParamValue::Float(default),
                },
                ParamRepr::Integer { name, low, high, log, default } => ParameterDef {
                    name,
                    kind: ParameterKind::Integer { low, high, log_scale: log },
                    default: ParamValue::Int(default),
                },
                ParamRepr::Categorical { name, choices, default } => ParameterDef {
                    name,
                    kind: ParameterKind::Categorical { choices },
                    default: ParamValue::Cat(default),
                },
            })
            .collect();
        SearchSpace::new(params).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn rf_like_space() -> SearchSpace {
        SearchSpace::new(vec![
            ParameterDef::continuous("max_features", 0.0, 1.0, false, 0.5),
            ParameterDef::categorical("criterion", &["gini", "entropy"], "gini"),
        ])
        .unwrap()
    }

    #[test]
    fn validate_accepts_log_learning_rate_range() {
        let space = SearchSpace::new_unchecked(vec![ParameterDef::continuous(
            "lr", 1e-3, 0.3, true, 0.1,
        )]);
        assert!(validate_space(&space).is_empty());
    }

    #[test]
    fn validate_rejects_degenerate_range() {
        let space = SearchSpace::new_unchecked(vec![ParameterDef::continuous(
            "x", 2.0, 2.0, false, 2.0,
        )]);
        let violations = validate_space(&space);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].reason.contains("low < high"));
    }

    #[test]
    fn validate_rejects_duplicate_names() {
        let space = SearchSpace::new_unchecked(vec![
            ParameterDef::continuous("x", 0.0, 1.0, false, 0.5),
            ParameterDef::continuous("x", 0.0, 2.0, false, 0.5),
        ]);
        let violations = validate_space(&space);
        assert!(violations.iter().any(|v| v.reason.contains("duplicate name")));
    }

    #[test]
    fn validate_rejects_log_with_nonpositive_low_and_bad_default() {
        let space = SearchSpace::new_unchecked(vec![
            ParameterDef::continuous("a", 0.0, 1.0, true, 0.5),
            ParameterDef::continuous("b", 0.0, 1.0, false, 2.0),
            ParameterDef::categorical("c", &[], "x"),
        ]);
        let violations = validate_space(&space);
        assert!(violations.iter().any(|v| v.param == "a" && v.reason.contains("log")));
        assert!(violations.iter().any(|v| v.param == "b" && v.reason.contains("default")));
        assert!(violations.iter().any(|v| v.param == "c" && v.reason.contains("non-empty")));
    }

    #[test]
    fn encode_midpoint() {
        let space =
            SearchSpace::new(vec![ParameterDef::continuous("x", 0.0, 10.0, false, 1.0)]).unwrap();
        let p = encode(&space, &Configuration::new(vec![ParamValue::Float(5.0)])).unwrap();
        assert_eq!(p.coords, vec![0.5]);
    }

    #[test]
    fn encode_log_lower_bound() {
        let space =
            SearchSpace::new(vec![ParameterDef::continuous("lr", 1e-3, 0.3, true, 0.1)]).unwrap();
        let p = encode(&space, &Configuration::new(vec![ParamValue::Float(1e-3)])).unwrap();
        assert!(p.coords[0].abs() < 1e-15);
    }

    #[test]
    fn encode_one_hot() {
        let space = rf_like_space();
        let config = Configuration::new(vec![
            ParamValue::Float(0.5),
            ParamValue::Cat("entropy".to_string()),
        ]);
        let p = encode(&space, &config).unwrap();
        assert_eq!(p.coords, vec![0.5, 0.0, 1.0]);
    }

    #[test]
    fn encode_rejects_invalid_value_naming_parameter() {
        let space = rf_like_space();
        let config = Configuration::new(vec![
            ParamValue::Float(2.0),
            ParamValue::Cat("gini".to_string()),
        ]);
        match encode(&space, &config) {
            Err(Error::InvalidConfiguration { param, .. }) => assert_eq!(param, "max_features"),
            other => panic!("expected InvalidConfiguration, got {other:?}"),
        }
    }

    #[test]
    fn decode_round_trip() {
        let space = rf_like_space();
        let config = Configuration::new(vec![
            ParamValue::Float(0.5),
            ParamValue::Cat("gini".to_string()),
        ]);
        let back = decode(&space, &encode(&space, &config).unwrap()).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn decode_integer_rounds() {
        // round(2 + 0.5 * 18) = 11
        let space = SearchSpace::new(vec![ParameterDef::integer("n", 2, 20, false, 2)]).unwrap();
        let c = decode(&space, &EncodedPoint { coords: vec![0.5] }).unwrap();
        assert_eq!(c.values, vec![ParamValue::Int(11)]);
    }

    #[test]
    fn decode_categorical_argmax() {
        let space =
            SearchSpace::new(vec![ParameterDef::categorical("c", &["a", "b"], "a")]).unwrap();
        let c = decode(&space, &EncodedPoint { coords: vec![0.4, 0.6] }).unwrap();
        assert_eq!(c.values, vec![ParamValue::Cat("b".to_string())]);
        // tie goes to the lowest index
        let c = decode(&space, &EncodedPoint { coords: vec![0.5, 0.5] }).unwrap();
        assert_eq!(c.values, vec![ParamValue::Cat("a".to_string())]);
    }

    #[test]
    fn decode_rejects_wrong_dimension() {
        let space = rf_like_space();
        assert!(matches!(
            decode(&space, &EncodedPoint { coords: vec![0.5] }),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sample_uniform_empty_and_mean() {
        let space =
            SearchSpace::new(vec![ParameterDef::continuous("x", 0.0, 1.0, false, 0.5)]).unwrap();
        assert!(sample_uniform(&space, 0, &mut rng_from_seed(1)).is_empty());
        let samples = sample_uniform(&space, 10_000, &mut rng_from_seed(1));
        let mean: f64 = samples
            .iter()
            .map(|c| match c.values[0] {
                ParamValue::Float(v) => v,
                _ => unreachable!(),
            })
            .sum::<f64>()
            / samples.len() as f64;
        assert!((0.48..=0.52).contains(&mean), "mean {mean}");
    }

    #[test]
    fn sample_uniform_deterministic() {
        let space = rf_like_space();
        let a = sample_uniform(&space, 50, &mut rng_from_seed(7));
        let b = sample_uniform(&space, 50, &mut rng_from_seed(7));
        assert_eq!(a, b);
    }

    #[test]
    fn space_json_schema_round_trip() {
        let json = r#"{"params":[
            {"name":"max_features","type":"continuous","low":0.0,"high":1.0,"log":false,"default":0.5},
            {"name":"criterion","type":"categorical","choices":["gini","entropy"],"default":"gini"}]}"#;
        let space: SearchSpace = serde_json::from_str(json).unwrap();
        assert_eq!(space, rf_like_space());
        let out = serde_json::to_string(&space).unwrap();
        let again: SearchSpace = serde_json::from_str(&out).unwrap();
        assert_eq!(again, space);
    }

    #[test]
    fn config_key_is_exact() {
        let a = Configuration::new(vec![ParamValue::Float(0.5)]);
        let b = Configuration::new(vec![ParamValue::Float(0.5 + 1e-9)]);
        assert_ne!(a.key(), b.key());
        assert_eq!(a.key(), a.key());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn mixed_space() -> SearchSpace {
            SearchSpace::new(vec![
                ParameterDef::continuous("x", -3.0, 4.0, false, 0.0),
                ParameterDef::continuous("lr", 1e-4, 1.0, true, 1e-2),
                ParameterDef::integer("n", 1, 32, false, 4),
                ParameterDef::categorical("c", &["a", "b", "c"], "a"),
            ])
            .unwrap()
        }

        proptest! {
            #[test]
            fn sampled_configs_encode_in_unit_cube_and_round_trip(seed in 0u64..5000) {
                let space = mixed_space();
                let mut rng = rng_from_seed(seed);
                for config in sample_uniform(&space, 4, &mut rng) {
                    prop_assert!(space.check_config(&config).is_ok());
                    let point = encode(&space, &config).unwrap();
                    for &x in &point.coords {
                        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&x));
                    }
                    // each one-hot block sums to one
                    let cat_block = &point.coords[3..6];
                    prop_assert!((cat_block.iter().sum::<f64>() - 1.0).abs() < 1e-15);
                    // integers in the sampler are exact, so the round trip is exact
                    let back = decode(&space, &point).unwrap();
                    for (orig, dec) in config.values.iter().zip(&back.values) {
                        match (orig, dec) {
                            (ParamValue::Float(a), ParamValue::Float(b)) => {
                                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0))
                            }
                            (a, b) => prop_assert_eq!(a, b),
                        }
                    }
                }
            }
        }
    }
}
