//! Run configuration: a JSON file with system / sector / scan / solver
//! blocks, resolved into a [`RingModel`] and the analysis options. Parsing
//! walks the tree by hand so every error names the offending key.

use crate::analysis::ScanSpec;
use crate::model::{Interaction, RingModel, Sector};
use crate::solver::SolverOpts;
use crate::{FluxRingError, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

fn bad(key: &str, what: impl AsRef<str>) -> FluxRingError {
    FluxRingError::InvalidConfig(format!("{key}: {}", what.as_ref()))
}

/// A coupling given as one number, one list, or one list per spin.
/// Context decides whether entries are per bond or per site. Serializes
/// untagged, so emitted configs parse back through [`parse_config`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RealSpec {
    Scalar(f64),
    PerEntry(Vec<f64>),
    PerSpin([Vec<f64>; 2]),
}

impl RealSpec {
    /// Expand to one list per spin of length `n`.
    fn resolve(&self, n: usize, key: &str) -> Result<[Vec<f64>; 2]> {
        let one = |list: &Vec<f64>| -> Result<Vec<f64>> {
            if list.len() != n {
                return Err(bad(key, format!("expected {n} entries, got {}", list.len())));
            }
            Ok(list.clone())
        };
        Ok(match self {
            RealSpec::Scalar(x) => [vec![*x; n], vec![*x; n]],
            RealSpec::PerEntry(list) => {
                let v = one(list)?;
                [v.clone(), v]
            }
            RealSpec::PerSpin([up, down]) => [one(up)?, one(down)?],
        })
    }
}

/// On-site interaction: one value or one per site, where a value is a
/// number or the literal "inf".
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum InteractionSpec {
    Scalar(Interaction),
    PerSite(Vec<Interaction>),
}

impl InteractionSpec {
    fn resolve(&self, l: usize, key: &str) -> Result<Vec<Interaction>> {
        Ok(match self {
            InteractionSpec::Scalar(u) => vec![*u; l],
            InteractionSpec::PerSite(list) => {
                if list.len() != l {
                    return Err(bad(key, format!("expected {l} entries, got {}", list.len())));
                }
                list.clone()
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemConfig {
    #[serde(rename = "L")]
    pub length: usize,
    /// Hop magnitudes per bond.
    pub t: RealSpec,
    /// Hop phases per bond, radians. The total flux is their sum.
    pub theta: RealSpec,
    #[serde(rename = "U")]
    pub u: InteractionSpec,
    /// On-site potential per site.
    pub v: RealSpec,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            length: 4,
            t: RealSpec::Scalar(1.0),
            theta: RealSpec::Scalar(0.0),
            u: InteractionSpec::Scalar(Interaction::Finite(0.0)),
            v: RealSpec::Scalar(0.0),
        }
    }
}

impl SystemConfig {
    pub fn build_model(&self) -> Result<RingModel> {
        let l = self.length;
        let t = self.t.resolve(l, "system.t")?;
        let theta = self.theta.resolve(l, "system.theta")?;
        let u = self.u.resolve(l, "system.U")?;
        let v = self.v.resolve(l, "system.v")?;
        RingModel::new(l, t, theta, u, v)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SectorConfig {
    pub n_up: usize,
    pub n_down: usize,
}

impl Default for SectorConfig {
    fn default() -> Self {
        SectorConfig { n_up: 1, n_down: 1 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanConfig {
    /// Grid size; None means the density-scaled default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    pub refine_tol: f64,
    pub dedup_tol: f64,
    pub period_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let d = ScanSpec::default();
        ScanConfig {
            grid_points: d.points,
            refine_tol: d.refine_tol,
            dedup_tol: d.dedup_tol,
            period_tol: d.period_tol,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverConfig {
    pub dense_threshold: usize,
    pub residual_tol: f64,
    pub max_restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOpts::default();
        SolverConfig {
            dense_threshold: d.dense_threshold,
            residual_tol: d.residual_tol,
            max_restarts: d.max_restarts,
        }
    }
}

/// Everything a run needs, assembled from file plus flag overrides.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub sector: SectorConfig,
    pub scan: ScanConfig,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl RunConfig {
    pub fn build_model(&self) -> Result<RingModel> {
        self.system.build_model()
    }

    pub fn sector_of(&self, model: &RingModel) -> Result<Sector> {
        model.sector(self.sector.n_up, self.sector.n_down)
    }

    pub fn solver_opts(&self) -> SolverOpts {
        SolverOpts {
            dense_threshold: self.solver.dense_threshold,
            residual_tol: self.solver.residual_tol,
            max_restarts: self.solver.max_restarts,
            seed: self.seed,
            ..SolverOpts::default()
        }
    }

    pub fn scan_spec(&self) -> ScanSpec {
        ScanSpec {
            points: self.scan.grid_points,
            refine_tol: self.scan.refine_tol,
            dedup_tol: self.scan.dedup_tol,
            period_tol: self.scan.period_tol,
            solver: self.solver_opts(),
            ..ScanSpec::default()
        }
    }

    /// Hash of the fully resolved configuration; field order is fixed by
    /// the struct definitions, so equal configs hash equally.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn as_object<'a>(v: &'a Value, key: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(key, "expected an object"))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| bad(key, "expected a number"))
}

fn as_usize(v: &Value, key: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| bad(key, "expected a nonnegative integer"))
}

fn as_f64_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| bad(key, "expected a list"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| as_f64(x, &format!("{key}[{i}]")))
        .collect()
}

fn parse_real_spec(v: &Value, key: &str) -> Result<RealSpec> {
    match v {
        Value::Number(_) => Ok(RealSpec::Scalar(as_f64(v, key)?)),
        Value::Array(items) => {
            if items.iter().all(Value::is_array) {
                if items.len() != 2 {
                    return Err(bad(key, "per-spin form needs exactly two lists"));
                }
                Ok(RealSpec::PerSpin([
                    as_f64_list(&items[0], &format!("{key}[0]"))?,
                    as_f64_list(&items[1], &format!("{key}[1]"))?,
                ]))
            } else {
                Ok(RealSpec::PerEntry(as_f64_list(v, key)?))
            }
        }
        _ => Err(bad(key, "expected a number, a list, or two lists")),
    }
}

/// A number, or the literal "inf" for the projective interaction.
pub fn parse_interaction(v: &Value, key: &str) -> Result<Interaction> {
    match v {
        Value::Number(_) => Ok(Interaction::Finite(as_f64(v, key)?)),
        Value::String(s) if s == "inf" => Ok(Interaction::Infinite),
        Value::String(s) => Err(bad(key, format!("unknown literal {s:?}, only \"inf\" is accepted"))),
        _ => Err(bad(key, "expected a number or \"inf\"")),
    }
}

fn parse_interaction_spec(v: &Value, key: &str) -> Result<InteractionSpec> {
    match v {
        Value::Array(items) => {
            let list = items
                .iter()
                .enumerate()
                .map(|(i, x)| parse_interaction(x, &format!("{key}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(InteractionSpec::PerSite(list))
        }
        _ => Ok(InteractionSpec::Scalar(parse_interaction(v, key)?)),
    }
}

fn reject_unknown(map: &Map<String, Value>, known: &[&str], prefix: &str) -> Result<()> {
    for k in map.keys() {
        if !known.contains(&k.as_str()) {
            return Err(FluxRingError::InvalidConfig(format!(
                "unknown key {prefix}{k}"
            )));
        }
    }
    Ok(())
}

/// Parse a configuration file. Missing blocks and fields keep defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| FluxRingError::InvalidConfig(format!("not valid JSON: {e}")))?;
    let top = as_object(&root, "top level")?;
    reject_unknown(top, &["system", "sector", "scan", "solver", "seed"], "")?;
    let mut cfg = RunConfig::default();

    if let Some(sys) = top.get("system") {
        let map = as_object(sys, "system")?;
        reject_unknown(map, &["L", "t", "theta", "U", "v"], "system.")?;
        if let Some(v) = map.get("L") {
            cfg.system.length = as_usize(v, "system.L")?;
        }
        if let Some(v) = map.get("t") {
            cfg.system.t = parse_real_spec(v, "system.t")?;
        }
        if let Some(v) = map.get("theta") {
            cfg.system.theta = parse_real_spec(v, "system.theta")?;
        }
        if let Some(v) = map.get("U") {
            cfg.system.u = parse_interaction_spec(v, "system.U")?;
        }
        if let Some(v) = map.get("v") {
            cfg.system.v = parse_real_spec(v, "system.v")?;
        }
    }
    if let Some(sec) = top.get("sector") {
        let map = as_object(sec, "sector")?;
        reject_unknown(map, &["n_up", "n_down"], "sector.")?;
        if let Some(v) = map.get("n_up") {
            cfg.sector.n_up = as_usize(v, "sector.n_up")?;
        }
        if let Some(v) = map.get("n_down") {
            cfg.sector.n_down = as_usize(v, "sector.n_down")?;
        }
    }
    if let Some(scan) = top.get("scan") {
        let map = as_object(scan, "scan")?;
        reject_unknown(map, &["grid_points", "refine_tol", "dedup_tol", "period_tol"], "scan.")?;
        if let Some(v) = map.get("grid_points") {
            cfg.scan.grid_points = Some(as_usize(v, "scan.grid_points")?);
        }
        if let Some(v) = map.get("refine_tol") {
            cfg.scan.refine_tol = as_f64(v, "scan.refine_tol")?;
        }
        if let Some(v) = map.get("dedup_tol") {
            cfg.scan.dedup_tol = as_f64(v, "scan.dedup_tol")?;
        }
        if let Some(v) = map.get("period_tol") {
            cfg.scan.period_tol = as_f64(v, "scan.period_tol")?;
        }
    }
    if let Some(solver) = top.get("solver") {
        let map = as_object(solver, "solver")?;
        reject_unknown(map, &["dense_threshold", "residual_tol", "max_restarts"], "solver.")?;
        if let Some(v) = map.get("dense_threshold") {
            cfg.solver.dense_threshold = as_usize(v, "solver.dense_threshold")?;
        }
        if let Some(v) = map.get("residual_tol") {
            cfg.solver.residual_tol = as_f64(v, "solver.residual_tol")?;
        }
        if let Some(v) = map.get("max_restarts") {
            cfg.solver.max_restarts = as_usize(v, "solver.max_restarts")?;
        }
    }
    if let Some(v) = top.get("seed") {
        cfg.seed = v.as_u64().ok_or_else(|| bad("seed", "expected a nonnegative integer"))?;
    }
    Ok(cfg)
}

/// Header stamped into every emitted file.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
    pub phi_match_tol: f64,
    pub refine_tol: f64,
    pub residual_tol: f64,
    pub version: String,
}

impl Metadata {
    pub fn for_config(cfg: &RunConfig) -> Metadata {
        Metadata {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            phi_match_tol: crate::analysis::PHI_MATCH_TOL,
            refine_tol: cfg.scan.refine_tol,
            residual_tol: cfg.solver.residual_tol,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Comment-style header lines for CSV and DOT files.
    pub fn comment_lines(&self, comment: &str) -> String {
        format!(
            "{c} config_hash={} seed={} version={}\n{c} phi_match_tol={} refine_tol={} residual_tol={}\n",
            self.config_hash,
            self.seed,
            self.version,
            self.phi_match_tol,
            self.refine_tol,
            self.residual_tol,
            c = comment,
        )
    }
}
