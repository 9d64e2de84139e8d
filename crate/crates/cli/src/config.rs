//! Experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use wgr::balls::{build_family_with, BallFamily};
use wgr::instances::{fit_radius, Instance, InstanceSpec};
use wgr::{Ball, DoublingProfile, RadiusPolicy, Space};

/// Invalid configuration or usage; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub family: FamilyConfig,
    /// Doubling constant to use instead of the exact one.
    #[serde(default)]
    pub doubling: Option<DoublingOverride>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub sigma: f64,
    pub eta: f64,
    #[serde(default)]
    pub base_ball: BaseBall,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseBall {
    #[serde(default)]
    pub center: CenterSelector,
    #[serde(default)]
    pub radius: RadiusSelector,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterSelector {
    Index(usize),
    Nearest {
        nearest: Vec<f64>,
    },
    /// `"auto"`: the instance's own base point, else the point nearest the
    /// middle of the bounding box, else point 0.
    Keyword(CenterKeyword),
}

impl Default for CenterSelector {
    fn default() -> Self {
        CenterSelector::Keyword(CenterKeyword::Auto)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterKeyword {
    Auto,
}

/// A radius, or `"fit"`: the largest radius with `sigma (1 + eta) B0` inside
/// the bounding box (see [`fit_radius`]).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusSelector {
    Value(f64),
    Keyword(RadiusKeyword),
}

impl Default for RadiusSelector {
    fn default() -> Self {
        RadiusSelector::Keyword(RadiusKeyword::Fit)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusKeyword {
    Fit,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default)]
    pub radius_policy: RadiusPolicy,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingOverride {
    pub c_mu: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

fn default_directory() -> String {
    "out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Checker names and the parameters each accepts.
pub const CHECKS: &[(&str, &str)] = &[
    ("thm_superlevel", "eps?, lambda? (default (eps + 1)/2)"),
    ("thm_osc_from_ainfty", "alpha (default 0.5), beta?"),
    ("thm_neg_superlevel", "eps?, lambda? (default (eps + 1)/2)"),
    ("thm_neg_osc", "beta (default 0.5), alpha?"),
    (
        "lemma23_empirical",
        "alphas (default [0.25, 0.5, 0.75]), p_grid (default [2])",
    ),
    ("jn_decay", "lambda_grid?, eps?"),
    ("jn_contraction", "max_levels (default 20), eps?"),
    ("osc_rhi", "p, eps?"),
    ("weak_rhi", "p, eps?"),
    ("final_rhi", "p, eps?"),
    ("beta_asymptotic", "p, ys"),
    ("cavalieri", "p (default 2); region is the base ball"),
    ("sawyer_bound", "none; needs a lattice indicator weight"),
];

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsLambda {
    pub eps: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaBeta {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma23Params {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<f64>,
}

fn default_alphas() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_p_grid() -> Vec<f64> {
    vec![2.0]
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayParams {
    pub lambda_grid: Option<Vec<f64>>,
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionParams {
    #[serde(default = "default_levels")]
    pub max_levels: usize,
    pub eps: Option<f64>,
}

fn default_levels() -> usize {
    20
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentParams {
    pub p: f64,
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaParams {
    pub p: f64,
    pub ys: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavalieriParams {
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    2.0
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

/// Parsed parameters of one check.
#[derive(Clone, Debug)]
pub enum Check {
    ThmSuperlevel(EpsLambda),
    ThmOscFromAinfty(AlphaBeta),
    ThmNegSuperlevel(EpsLambda),
    ThmNegOsc(AlphaBeta),
    Lemma23(Lemma23Params),
    JnDecay(DecayParams),
    JnContraction(ContractionParams),
    OscRhi(ExponentParams),
    WeakRhi(ExponentParams),
    FinalRhi(ExponentParams),
    BetaAsymptotic(BetaParams),
    Cavalieri(CavalieriParams),
    SawyerBound,
}

fn params<T: DeserializeOwned>(v: &Value, at: &str) -> anyhow::Result<T> {
    let v = if v.is_null() {
        Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_json::from_value(v).map_err(|e| config_error(format!("{at}.params: {e}")))
}

impl Check {
    pub fn parse(spec: &CheckSpec, at: &str) -> anyhow::Result<Self> {
        let v = &spec.params;
        Ok(match spec.name.as_str() {
            "thm_superlevel" => Check::ThmSuperlevel(params(v, at)?),
            "thm_osc_from_ainfty" => Check::ThmOscFromAinfty(params(v, at)?),
            "thm_neg_superlevel" => Check::ThmNegSuperlevel(params(v, at)?),
            "thm_neg_osc" => Check::ThmNegOsc(params(v, at)?),
            "lemma23_empirical" => Check::Lemma23(params(v, at)?),
            "jn_decay" => Check::JnDecay(params(v, at)?),
            "jn_contraction" => Check::JnContraction(params(v, at)?),
            "osc_rhi" => Check::OscRhi(params(v, at)?),
            "weak_rhi" => Check::WeakRhi(params(v, at)?),
            "final_rhi" => Check::FinalRhi(params(v, at)?),
            "beta_asymptotic" => Check::BetaAsymptotic(params(v, at)?),
            "cavalieri" => Check::Cavalieri(params(v, at)?),
            "sawyer_bound" => {
                let _: NoParams = params(v, at)?;
                Check::SawyerBound
            }
            other => {
                let names: Vec<&str> = CHECKS.iter().map(|c| c.0).collect();
                return Err(config_error(format!(
                    "{at}.name: unknown check `{other}`; expected one of {}",
                    names.join(", ")
                )));
            }
        })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        let g = &self.geometry;
        if !(g.sigma.is_finite() && g.sigma >= 1.0) {
            return Err(config_error(format!(
                "geometry.sigma: {} must be >= 1",
                g.sigma
            )));
        }
        if !(g.eta.is_finite() && g.eta > 0.0) {
            return Err(config_error(format!("geometry.eta: {} must be > 0", g.eta)));
        }
        if let RadiusSelector::Value(r) = g.base_ball.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(config_error(format!(
                    "geometry.base_ball.radius: {r} must be > 0"
                )));
            }
        }
        if let Some(d) = self.doubling {
            DoublingProfile::new(d.c_mu)
                .map_err(|e| config_error(format!("doubling.c_mu: {e}")))?;
        }
        self.parsed_checks()?;
        Ok(())
    }

    pub fn parsed_checks(&self) -> anyhow::Result<Vec<(String, Check)>> {
        self.checks
            .iter()
            .enumerate()
            .map(|(i, c)| Ok((c.name.clone(), Check::parse(c, &format!("checks[{i}]"))?)))
            .collect()
    }
}

/// Everything a command needs once the configuration is resolved.
pub struct Setup {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub base: Ball,
    pub family: BallFamily,
    pub profile_override: Option<DoublingProfile>,
}

impl Setup {
    pub fn new(mut config: ExperimentConfig, seed: Option<u64>) -> anyhow::Result<Self> {
        if let Some(s) = seed {
            config.instance = config.instance.with_seed(s);
        }
        let instance = config
            .instance
            .build()
            .map_err(|e| config_error(format!("instance: {e}")))?;
        let g = &config.geometry;
        let center = select_center(&instance, &g.base_ball.center)?;
        let radius = match g.base_ball.radius {
            RadiusSelector::Value(r) => r,
            RadiusSelector::Keyword(RadiusKeyword::Fit) => {
                fit_radius(&instance.space, center, g.sigma, g.eta)
                    .map_err(|e| config_error(format!("geometry.base_ball.radius: {e}")))?
            }
        };
        let base = Ball::new(center, radius)
            .map_err(|e| config_error(format!("geometry.base_ball: {e}")))?;
        let family = build_family_with(
            &instance.space,
            base,
            g.eta,
            g.sigma,
            config.family.radius_policy,
        )
        .map_err(|e| config_error(format!("family: {e}")))?;
        let profile_override = config
            .doubling
            .map(|d| DoublingProfile::new(d.c_mu))
            .transpose()
            .map_err(|e| config_error(format!("doubling: {e}")))?;
        Ok(Self {
            config,
            instance,
            base,
            family,
            profile_override,
        })
    }

    pub fn space(&self) -> &Space {
        &self.instance.space
    }

    pub fn sigma(&self) -> f64 {
        self.config.geometry.sigma
    }

    pub fn eta(&self) -> f64 {
        self.config.geometry.eta
    }

    pub fn profile(&self) -> anyhow::Result<DoublingProfile> {
        match self.profile_override {
            Some(p) => Ok(p),
            None => Ok(DoublingProfile::exact(self.space())?),
        }
    }

    /// Seeds appearing in the effective instance specification.
    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        collect_seeds(
            &serde_json::to_value(&self.config.instance).unwrap_or(Value::Null),
            "instance",
            &mut out,
        );
        out
    }
}

fn collect_seeds(v: &Value, path: &str, out: &mut BTreeMap<String, u64>) {
    if let Value::Object(m) = v {
        for (k, x) in m {
            let p = format!("{path}.{k}");
            if k == "seed" {
                if let Some(s) = x.as_u64() {
                    out.insert(p, s);
                }
            } else {
                collect_seeds(x, &p, out);
            }
        }
    }
}

fn select_center(inst: &Instance, sel: &CenterSelector) -> anyhow::Result<usize> {
    let space = &inst.space;
    match sel {
        CenterSelector::Index(i) if *i < space.len() => Ok(*i),
        CenterSelector::Index(i) => Err(config_error(format!(
            "geometry.base_ball.center: index {i} out of range for {} points",
            space.len()
        ))),
        CenterSelector::Nearest { nearest } => {
            if space.dim() != Some(nearest.len()) {
                return Err(config_error(
                    "geometry.base_ball.center: `nearest` needs a coordinate space of matching dimension",
                ));
            }
            Ok(space.nearest_point(nearest).expect("coordinate space"))
        }
        CenterSelector::Keyword(CenterKeyword::Auto) => {
            if let Some(c) = inst.base_center {
                return Ok(c);
            }
            Ok(space
                .bounding_box()
                .and_then(|bb| {
                    space.nearest_point(&bb.iter().map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>())
                })
                .unwrap_or(0))
        }
    }
}
