//! JSON run manifests. Parsing is strict: unknown keys are rejected, and every
//! violation found is reported at once.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use fpp_core::capacity::CapacityDistribution;
use fpp_core::estimate::{ExperimentSpec, HeightFn};
use fpp_core::flow::Arithmetic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub d: usize,
    pub k: Vec<u32>,
    pub m: u32,
    pub distribution: CapacityDistribution,
    #[serde(default)]
    pub replicate: u64,
    #[serde(default)]
    pub arithmetic: Arithmetic,
    /// Truncate at `eta` before solving: `t'(e) = 1{t(e) > eta}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default)]
    pub with_flows: bool,
    /// Also write the sampled capacities.
    #[serde(default)]
    pub dump_field: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub d: usize,
    pub ns: Vec<u32>,
    pub height: HeightFn,
    pub distribution: CapacityDistribution,
    pub epsilons: Vec<f64>,
    pub replicates: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_confidence() -> f64 {
    0.99
}

fn default_floor() -> f64 {
    0.05
}

/// One sampled rescaled cylinder: `X_K` on its blocks, the block path
/// packing, and the open paths built from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    /// Region `[0, n]^(d-1) x [0, h]`, rescaled by `K`.
    pub n: u32,
    pub h: u32,
    #[serde(default)]
    pub replicate: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksConfig {
    pub d: usize,
    /// Block sides `K`, all even.
    pub ks: Vec<u32>,
    pub p: f64,
    pub replicates: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Exhaustive event probabilities for `Lambda(K)` where it has few enough edges.
    #[serde(default)]
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub d: usize,
    pub epsilon: f64,
    pub p: f64,
    /// Growth constant for diamond-connected sets; estimated by counting when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Growth constant for L1 vertex animals; estimated by counting when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<f64>,
    /// `ln h(n) / n^(d-1)`.
    #[serde(default)]
    pub rho: f64,
    /// Block side for the renormalization threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Side and height for the zero-flow bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    MinCut,
    Packing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub d: usize,
    pub k: Vec<u32>,
    pub m: u32,
    pub distribution: CapacityDistribution,
    pub mode: OracleMode,
    /// Instances, replicate ids `0..replicates`.
    #[serde(default = "one")]
    pub replicates: u64,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Flow(FlowConfig),
    Sweep(SweepConfig),
    Blocks(BlocksConfig),
    Bounds(BoundsConfig),
    Oracle(OracleConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Flow(_) => "flow",
            Experiment::Sweep(_) => "sweep",
            Experiment::Blocks(_) => "blocks",
            Experiment::Bounds(_) => "bounds",
            Experiment::Oracle(_) => "oracle",
        }
    }
}

/// A validated experiment with its seed and where its results go.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub seed: u64,
    /// Directory for the result files.
    pub output: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// SHA-256 of the canonical JSON form with `output` left out, in hex.
    /// Where the results go does not change them.
    pub fn hash(&self) -> String {
        let placed = RunManifest {
            output: String::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(placed.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const COMMON_KEYS: [&str; 4] = ["kind", "seed", "output", "tool_version"];

fn keys_of(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "flow" => &[
            "d",
            "k",
            "m",
            "distribution",
            "replicate",
            "arithmetic",
            "eta",
            "with_flows",
            "dump_field",
        ],
        "sweep" => &[
            "d",
            "ns",
            "height",
            "distribution",
            "epsilons",
            "replicates",
            "confidence",
            "floor",
        ],
        "blocks" => &[
            "d",
            "ks",
            "p",
            "replicates",
            "confidence",
            "exact",
            "process",
        ],
        "bounds" => &[
            "d", "epsilon", "p", "c", "c_prime", "rho", "k", "eta", "n", "h",
        ],
        "oracle" => &["d", "k", "m", "distribution", "mode", "replicates"],
        _ => return None,
    })
}

fn required_of(kind: &str) -> &'static [&'static str] {
    match kind {
        "flow" => &["d", "k", "m", "distribution"],
        "sweep" => &[
            "d",
            "ns",
            "height",
            "distribution",
            "epsilons",
            "replicates",
        ],
        "blocks" => &["d", "ks", "p", "replicates"],
        "bounds" => &["d", "epsilon", "p"],
        "oracle" => &["d", "k", "m", "distribution", "mode"],
        _ => &[],
    }
}

fn check_cylinder(d: usize, k: &[u32], m: u32, out: &mut Vec<String>) {
    if d < 2 {
        out.push(format!("d = {d}: the dimension must be at least 2"));
    }
    if d >= 2 && k.len() != d - 1 {
        out.push(format!(
            "k has {} entries; d = {d} needs {}",
            k.len(),
            d - 1
        ));
    }
    if k.contains(&0) {
        out.push("every side length in k must be at least 1".into());
    }
    if m == 0 {
        out.push("m = 0: the height must be at least 1".into());
    }
}

fn check_unit(name: &str, v: f64, out: &mut Vec<String>) {
    if !(0.0..=1.0).contains(&v) {
        out.push(format!("{name} = {v} outside [0, 1]"));
    }
}

fn check_confidence(v: f64, out: &mut Vec<String>) {
    if !(v > 0.0 && v < 1.0) {
        out.push(format!("confidence = {v} outside (0, 1)"));
    }
}

fn check_even_k(k: u32, out: &mut Vec<String>) {
    if k < 2 || k % 2 == 1 {
        out.push(format!("K = {k}: block sides must be even and at least 2"));
    }
}

/// Semantic checks on a structurally valid experiment.
pub fn violations(exp: &Experiment) -> Vec<String> {
    let mut out = Vec::new();
    match exp {
        Experiment::Flow(c) => {
            check_cylinder(c.d, &c.k, c.m, &mut out);
            if let Err(e) = c.distribution.validate() {
                out.push(e.to_string());
            }
            if let Some(eta) = c.eta {
                if !(eta >= 0.0 && eta.is_finite()) {
                    out.push(format!("eta = {eta} must be finite and >= 0"));
                }
            }
        }
        Experiment::Sweep(c) => {
            let spec = sweep_spec(c, 0);
            out.extend(spec.violations());
            if c.ns.windows(2).any(|w| w[0] >= w[1]) {
                out.push("ns must be strictly increasing".into());
            }
            if !c.floor.is_finite() {
                out.push(format!("floor = {} must be finite", c.floor));
            }
        }
        Experiment::Blocks(c) => {
            if c.d < 2 {
                out.push(format!("d = {}: the dimension must be at least 2", c.d));
            }
            if c.ks.is_empty() {
                out.push("ks must list at least one block side".into());
            }
            for &k in &c.ks {
                check_even_k(k, &mut out);
            }
            check_unit("p", c.p, &mut out);
            if c.replicates == 0 {
                out.push("replicates must be at least 1".into());
            }
            check_confidence(c.confidence, &mut out);
            if let Some(pr) = &c.process {
                if pr.n == 0 || pr.h == 0 {
                    out.push("process.n and process.h must be positive".into());
                }
                if c.ks.len() != 1 {
                    out.push("process needs exactly one block side in ks".into());
                } else if c.ks[0] < 6 {
                    out.push(format!(
                        "K = {}: the crossing construction needs K >= 6",
                        c.ks[0]
                    ));
                }
            }
        }
        Experiment::Bounds(c) => {
            if c.d < 2 {
                out.push(format!("d = {}: the dimension must be at least 2", c.d));
            }
            if !(0.0..1.0).contains(&c.epsilon) {
                out.push(format!("epsilon = {} outside [0, 1)", c.epsilon));
            }
            check_unit("p", c.p, &mut out);
            for (name, v) in [("c", c.c), ("c_prime", c.c_prime)] {
                if let Some(v) = v {
                    if !(v > 1.0 && v.is_finite()) {
                        out.push(format!("{name} = {v} must be finite and > 1"));
                    }
                }
            }
            if !(c.d == 2 || c.d == 3) && (c.c.is_none() || c.c_prime.is_none()) {
                out.push(format!(
                    "d = {}: growth constants can only be counted for d = 2, 3; give c and c_prime",
                    c.d
                ));
            }
            if !(c.rho >= 0.0 && c.rho.is_finite()) {
                out.push(format!("rho = {} must be finite and >= 0", c.rho));
            }
            if let Some(k) = c.k {
                check_even_k(k, &mut out);
            }
            if let Some(eta) = c.eta {
                if !(eta > 0.0 && eta.is_finite()) {
                    out.push(format!("eta = {eta} must be positive"));
                }
            }
            if c.n.is_some() != c.h.is_some() {
                out.push("the zero-flow bound needs both n and h".into());
            }
            if c.n == Some(0) || c.h == Some(0) {
                out.push("n and h must be positive".into());
            }
        }
        Experiment::Oracle(c) => {
            check_cylinder(c.d, &c.k, c.m, &mut out);
            if let Err(e) = c.distribution.validate() {
                out.push(e.to_string());
            }
            if c.replicates == 0 {
                out.push("replicates must be at least 1".into());
            }
            if c.mode == OracleMode::Packing
                && !matches!(c.distribution, CapacityDistribution::Bernoulli { .. })
            {
                out.push("packing mode needs a bernoulli distribution".into());
            }
        }
    }
    out
}

pub fn sweep_spec(c: &SweepConfig, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        d: c.d,
        ns: c.ns.clone(),
        height: c.height.clone(),
        distribution: c.distribution.clone(),
        epsilons: c.epsilons.clone(),
        replicates: c.replicates,
        seed,
        confidence: c.confidence,
    }
}

/// Parses and validates a manifest. On failure returns every problem found:
/// unknown and missing keys, then type errors, then range violations.
pub fn parse_config(text: &str) -> Result<RunManifest, Vec<String>> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| vec![format!("invalid JSON: {e}")])?;
    let obj = value
        .as_object()
        .ok_or_else(|| vec!["the configuration must be a JSON object".to_string()])?;
    from_object(obj.clone())
}

pub fn from_object(mut obj: Map<String, Value>) -> Result<RunManifest, Vec<String>> {
    let mut errs = Vec::new();
    let kind = match obj.get("kind").and_then(Value::as_str) {
        Some(k) => k.to_string(),
        None => {
            return Err(vec![
                "missing \"kind\" (flow, sweep, blocks, bounds or oracle)".into(),
            ])
        }
    };
    let Some(allowed) = keys_of(&kind) else {
        return Err(vec![format!(
            "unknown kind \"{kind}\" (expected flow, sweep, blocks, bounds or oracle)"
        )]);
    };
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) && !COMMON_KEYS.contains(&key.as_str()) {
            errs.push(format!("unknown key \"{key}\" for kind {kind}"));
        }
    }
    for key in required_of(&kind) {
        if !obj.contains_key(*key) {
            errs.push(format!("missing key \"{key}\" for kind {kind}"));
        }
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    let seed = match obj.remove("seed") {
        None => 0,
        Some(v) => match v.as_u64() {
            Some(s) => s,
            None => {
                return Err(vec![format!(
                    "seed = {v} must be a nonnegative 64-bit integer"
                )])
            }
        },
    };
    let output = match obj.remove("output") {
        None => ".".to_string(),
        Some(Value::String(s)) => s,
        Some(v) => return Err(vec![format!("output = {v} must be a string")]),
    };
    let tool_version = match obj.remove("tool_version") {
        None => TOOL_VERSION.to_string(),
        Some(Value::String(s)) => s,
        Some(v) => return Err(vec![format!("tool_version = {v} must be a string")]),
    };
    let experiment: Experiment =
        serde_json::from_value(Value::Object(obj)).map_err(|e| vec![e.to_string()])?;
    let errs = violations(&experiment);
    if !errs.is_empty() {
        return Err(errs);
    }
    Ok(RunManifest {
        experiment,
        seed,
        output,
        tool_version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_flow_config() {
        let m = parse_config(
            r#"{"kind":"flow","d":2,"k":[2],"m":3,"distribution":{"type":"bernoulli","p":1.0}}"#,
        )
        .unwrap();
        assert_eq!(m.experiment.kind(), "flow");
        assert_eq!(m.seed, 0);
        let again = parse_config(&m.to_json()).unwrap();
        assert_eq!(again, m);
        assert_eq!(again.hash(), m.hash());
        let moved = RunManifest {
            output: "elsewhere".into(),
            ..m.clone()
        };
        assert_eq!(moved.hash(), m.hash());
        let reseeded = RunManifest {
            seed: 1,
            ..m.clone()
        };
        assert_ne!(reseeded.hash(), m.hash());
    }

    #[test]
    fn dimension_one_is_rejected() {
        let errs = parse_config(
            r#"{"kind":"flow","d":1,"k":[],"m":3,"distribution":{"type":"bernoulli","p":1.0}}"#,
        )
        .unwrap_err();
        assert!(
            errs.iter()
                .any(|e| e.contains("d = 1") && e.contains("at least 2")),
            "{errs:?}"
        );
    }

    #[test]
    fn odd_block_side_is_rejected() {
        let errs = parse_config(r#"{"kind":"blocks","d":2,"ks":[4,5],"p":0.9,"replicates":10}"#)
            .unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("K = 5") && errs[0].contains("even"));
    }

    #[test]
    fn all_violations_are_listed() {
        let errs = parse_config(
            r#"{"kind":"blocks","d":1,"ks":[3],"p":1.5,"replicates":0,"typo":1,"other":2}"#,
        )
        .unwrap_err();
        assert_eq!(errs.len(), 2, "unknown keys first: {errs:?}");
        let errs =
            parse_config(r#"{"kind":"blocks","d":1,"ks":[3],"p":1.5,"replicates":0}"#).unwrap_err();
        assert_eq!(errs.len(), 4, "{errs:?}");
    }

    #[test]
    fn missing_and_unknown_kind() {
        assert!(parse_config(r#"{"d":2}"#).is_err());
        assert!(parse_config(r#"{"kind":"serve"}"#).unwrap_err()[0].contains("unknown kind"));
        let errs = parse_config(r#"{"kind":"sweep"}"#).unwrap_err();
        assert_eq!(errs.len(), 6);
    }
}
