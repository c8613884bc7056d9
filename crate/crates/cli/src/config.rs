//! Run configuration: model, parameters, window, grid, seed and orbit batch.
//!
//! ```json
//! {
//!   "model": "competition",
//!   "params": {"r1": 2, "r2": 2, "K1": 1, "K2": 1, "alpha1": 1, "alpha2": 1},
//!   "bbox": {"x0": 0, "x1": 2.4, "y0": 0, "y1": 2.4},
//!   "grid": 200,
//!   "seed": 0,
//!   "orbits": {"n": 1000, "steps": 10000, "tol": 1e-6}
//! }
//! ```
//!
//! Generic models take `"params": {"F": "<expr>", "G": "<expr>", ...}` where
//! every other numeric entry is a named constant usable in the expressions.

use std::collections::BTreeMap;
use std::path::Path;

use augmap_core::{
    BBox, CompetitionParams, MutualismParams, PlanarMap, PredPreyParams, RickerParams,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::expr;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "AUGMAP_SEED";

pub const DEFAULT_GRID: usize = 200;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("{}{msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSettings {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Window the starts are drawn from; model default when absent.
    #[serde(default)]
    pub window: Option<BBox>,
}

fn default_n() -> usize {
    1000
}

fn default_steps() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for OrbitSettings {
    fn default() -> Self {
        OrbitSettings { n: default_n(), steps: default_steps(), tol: default_tol(), window: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: String,
    params: Value,
    #[serde(default)]
    bbox: Option<BBox>,
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    orbits: Option<OrbitSettings>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub model: String,
    /// Parameters as given, for echoing into reports.
    pub params: Value,
    pub map: PlanarMap,
    pub bbox: BBox,
    pub grid: usize,
    pub seed: u64,
    /// Present when the config asked for an orbit batch.
    pub orbits: Option<OrbitSettings>,
}

impl Config {
    pub fn orbit_settings(&self) -> OrbitSettings {
        self.orbits.unwrap_or_default()
    }

    /// Window for orbit starts: explicit, else `[0,4]^2` for competition
    /// models and the portrait window otherwise.
    pub fn start_window(&self) -> BBox {
        match (self.orbit_settings().window, &self.map) {
            (Some(w), _) => w,
            (None, PlanarMap::Competition(_)) => BBox { x0: 0.0, x1: 4.0, y0: 0.0, y1: 4.0 },
            (None, _) => BBox { x0: self.bbox.x0.max(0.0), x1: self.bbox.x1, y0: self.bbox.y0.max(0.0), y1: self.bbox.y1 },
        }
    }
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let src = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    let seed_env = std::env::var(SEED_ENV).ok();
    parse_with_seed(&src, seed_env.as_deref())
}

pub fn parse(src: &str) -> Result<Config, ConfigError> {
    parse_with_seed(src, None)
}

/// Parses `src`; `seed_override` (the environment value) wins over the
/// configured seed.
pub fn parse_with_seed(src: &str, seed_override: Option<&str>) -> Result<Config, ConfigError> {
    let raw: RawConfig = serde_json::from_str(src).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: strip_position(&e.to_string()),
    })?;
    let invalid = |key: &str, msg: String| ConfigError::Invalid { line: line_of(src, key), msg };

    let map = build_map(&raw.model, &raw.params, src)?;
    let bbox = match raw.bbox {
        Some(b) => {
            b.validate().map_err(|e| invalid("bbox", e.to_string()))?;
            b
        }
        None => map.default_bbox(),
    };
    let grid = raw.grid.unwrap_or(DEFAULT_GRID);
    if grid < 16 {
        return Err(invalid("grid", format!("grid must be at least 16, got {grid}")));
    }
    if let Some(o) = &raw.orbits {
        if o.n == 0 || o.steps == 0 || !(o.tol > 0.0 && o.tol.is_finite()) {
            return Err(invalid("orbits", "orbits needs n > 0, steps > 0 and a positive tol".into()));
        }
        if let Some(w) = o.window {
            w.validate().map_err(|e| invalid("window", e.to_string()))?;
        }
    }
    let seed = match seed_override {
        Some(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|_| ConfigError::Invalid { line: None, msg: format!("{SEED_ENV}='{s}' is not an unsigned integer") })?,
        None => raw.seed.unwrap_or(0),
    };
    Ok(Config { model: raw.model, params: raw.params, map, bbox, grid, seed, orbits: raw.orbits })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// 1-based line of the first occurrence of `"key"` in the source.
fn line_of(src: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    src.find(&needle).map(|i| src[..i].matches('\n').count() + 1)
}

fn typed<T: for<'de> Deserialize<'de> + Serialize>(params: &Value, src: &str) -> Result<T, ConfigError> {
    let parsed: T = serde_json::from_value(params.clone())
        .map_err(|e| ConfigError::Invalid { line: line_of(src, "params"), msg: format!("params: {e}") })?;
    // Reject keys the model does not know about.
    let known = serde_json::to_value(&parsed).expect("parameters serialize");
    if let (Value::Object(given), Value::Object(known)) = (params, &known) {
        if let Some(k) = given.keys().find(|k| !known.contains_key(*k)) {
            return Err(ConfigError::Invalid { line: line_of(src, k), msg: format!("unknown parameter '{k}'") });
        }
    }
    Ok(parsed)
}

fn param_error(src: &str, e: augmap_core::Error) -> ConfigError {
    let line = match &e {
        augmap_core::Error::InvalidParameter { name, .. } => line_of(src, name),
        _ => None,
    };
    ConfigError::Invalid { line, msg: e.to_string() }
}

fn build_map(model: &str, params: &Value, src: &str) -> Result<PlanarMap, ConfigError> {
    let map = match model {
        "competition" => {
            let p: CompetitionParams = typed(params, src)?;
            p.validate().map_err(|e| param_error(src, e))?;
            PlanarMap::Competition(p)
        }
        "ricker" => {
            let p: RickerParams = typed(params, src)?;
            p.validate().map_err(|e| param_error(src, e))?;
            PlanarMap::Ricker(p)
        }
        "mutualism" => {
            let p: MutualismParams = typed(params, src)?;
            p.validate().map_err(|e| param_error(src, e))?;
            PlanarMap::Mutualism(p)
        }
        "predprey" => {
            let p: PredPreyParams = typed(params, src)?;
            p.validate().map_err(|e| param_error(src, e))?;
            PlanarMap::PredPrey(p)
        }
        "generic" => generic_map(params, src)?,
        other => {
            return Err(ConfigError::Invalid {
                line: line_of(src, "model"),
                msg: format!("unknown model '{other}' (expected competition, ricker, mutualism, predprey or generic)"),
            })
        }
    };
    Ok(map)
}

fn generic_map(params: &Value, src: &str) -> Result<PlanarMap, ConfigError> {
    let invalid = |key: &str, msg: String| ConfigError::Invalid { line: line_of(src, key), msg };
    let Value::Object(obj) = params else {
        return Err(invalid("params", "generic params must be an object".into()));
    };
    let mut constants = BTreeMap::new();
    let mut exprs = BTreeMap::new();
    for (k, v) in obj {
        match (k.as_str(), v) {
            ("F" | "G", Value::String(s)) => {
                exprs.insert(k.clone(), s.clone());
            }
            ("F" | "G", _) => return Err(invalid(k, format!("'{k}' must be an expression string"))),
            (_, Value::Number(n)) => {
                constants.insert(k.clone(), n.as_f64().unwrap_or(f64::NAN));
            }
            _ => return Err(invalid(k, format!("constant '{k}' must be a number"))),
        }
    }
    let mut compile = |name: &str| -> Result<expr::Expr, ConfigError> {
        let s = exprs.remove(name).ok_or_else(|| invalid("params", format!("generic model needs '{name}'")))?;
        expr::parse(&s, &constants).map_err(|e| invalid(name, format!("{name}: {e}")))
    };
    let f = compile("F")?;
    let g = compile("G")?;
    Ok(PlanarMap::generic(move |x, y| f.eval(x, y), move |x, y| g.eval(x, y), None))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG6B: &str = r#"{
  "model": "competition",
  "params": {"r1": 2, "r2": 2, "K1": 1, "K2": 1, "alpha1": 1, "alpha2": 1},
  "seed": 7
}"#;

    #[test]
    fn parses_competition() {
        let c = parse(FIG6B).unwrap();
        assert_eq!(c.model, "competition");
        assert_eq!(c.seed, 7);
        assert_eq!(c.grid, DEFAULT_GRID);
        assert!(c.orbits.is_none());
        assert!(matches!(c.map, PlanarMap::Competition(p) if p.r1 == 2.0));
    }

    #[test]
    fn seed_override_wins() {
        assert_eq!(parse_with_seed(FIG6B, Some("42")).unwrap().seed, 42);
        assert!(parse_with_seed(FIG6B, Some("x")).is_err());
    }

    #[test]
    fn negative_parameter_reports_its_line() {
        let src = "{\n  \"model\": \"competition\",\n  \"params\": {\"r1\": 2, \"r2\": 2, \"K1\": 1, \"K2\": 1,\n    \"alpha1\": -1, \"alpha2\": 1}\n}";
        match parse(src).unwrap_err() {
            ConfigError::Invalid { line, msg } => {
                assert_eq!(line, Some(4));
                assert!(msg.contains("alpha1"), "{msg}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn syntax_errors_have_positions() {
        let src = "{\n  \"model\": \"ricker\",\n  \"params\": {\"K\": 0.9,, }\n}";
        match parse(src).unwrap_err() {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let src = r#"{"model": "ricker", "params": {"K": 0.9, "L": 1.6, "a": 0.4, "b": 0.3, "c": 1}}"#;
        assert!(parse(src).unwrap_err().to_string().contains("'c'"));
        let src = r#"{"model": "ricker", "params": {"K": 0.9, "L": 1.6, "a": 0.4, "b": 0.3}, "extra": 1}"#;
        assert!(matches!(parse(src), Err(ConfigError::Syntax { .. })));
        let src = r#"{"model": "logistic", "params": {}}"#;
        assert!(parse(src).unwrap_err().to_string().contains("logistic"));
    }

    #[test]
    fn generic_model_matches_builtin() {
        let src = r#"{"model": "generic", "params": {
            "F": "X*exp(K - X - a*Y)", "G": "Y*exp(L - b*X - Y)",
            "K": 0.9, "L": 1.6, "a": 0.4, "b": 0.3}}"#;
        let c = parse(src).unwrap();
        let builtin = PlanarMap::Ricker(RickerParams::new(0.9, 1.6, 0.4, 0.3).unwrap());
        for (x, y) in [(0.1, 0.2), (1.0, 3.0), (0.5, 0.5)] {
            let p = augmap_core::Point::new(x, y);
            assert_eq!(c.map.step(p).unwrap(), builtin.step(p).unwrap());
        }
        let bad = r#"{"model": "generic", "params": {"F": "X +", "G": "Y"}}"#;
        assert!(parse(bad).unwrap_err().to_string().contains("F:"));
    }
}
