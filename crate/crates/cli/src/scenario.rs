use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use spiderlab::graphs::{generate, FamilySpec, Limits, Substrate, VertexId};
use spiderlab::quotient::{confluence_key, pair_key};
use spiderlab::spider::{midpoint_height, Config, ConfigRule, RuleDocument};

use crate::presets;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub substrate: FamilySpec,
    /// Absent for a single walker.
    #[serde(default)]
    pub rule: Option<RuleDocument>,
    /// Leg addresses; defaults to the first local configuration at the root.
    #[serde(default)]
    pub start: Option<Vec<String>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub limits: Option<Limits>,
    #[serde(default)]
    pub output: Output,
    pub analyses: Vec<Analysis>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKeyKind {
    /// Every state in one block.
    Trivial,
    /// Maximal pairwise leg distance.
    Span,
    /// Leg offsets relative to the first leg (integer substrates).
    Shape,
    /// (leg distance, height difference) on a tree, 2 legs.
    Pair,
    /// Steps from each leg to the confluent on a tree, 2 legs.
    Confluence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightKind {
    FirstLeg,
    Mean,
    /// Height of the geodesic midpoint (tree, 2 legs).
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LampertiMethod {
    Walk,
    Spider,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitKind {
    Hit,
    Return,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// Spider network (or substrate ball) of the given radius, as JSON.
    Build { radius: u64 },
    Simulate { n_jumps: usize, replicas: usize },
    SpeedExact { key: BlockKeyKind, height: HeightKind },
    SpeedMc { n_jumps: usize, replicas: usize, height: HeightKind },
    /// Drift profile at 1..=x_max and its Lamperti verdict.
    Classify {
        method: LampertiMethod,
        x_max: u64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    Lumpability { radius: u64, key: BlockKeyKind },
    Resistance { radii: Vec<u64> },
    Distortion {
        radius: u64,
        #[serde(default)]
        sites: Option<Vec<String>>,
    },
    /// Expected hitting or return times of `target` within the given radius.
    Hitting { radius: u64, target: Vec<Vec<String>>, mode: HitKind },
    Preset { name: String },
}

fn default_margin() -> f64 {
    spiderlab::classify::DEFAULT_MARGIN
}

impl Analysis {
    pub fn kind(&self) -> &'static str {
        match self {
            Analysis::Build { .. } => "build",
            Analysis::Simulate { .. } => "simulate",
            Analysis::SpeedExact { .. } => "speed_exact",
            Analysis::SpeedMc { .. } => "speed_mc",
            Analysis::Classify { .. } => "classify",
            Analysis::Lumpability { .. } => "lumpability",
            Analysis::Resistance { .. } => "resistance",
            Analysis::Distortion { .. } => "distortion",
            Analysis::Hitting { .. } => "hitting",
            Analysis::Preset { .. } => "preset",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        match self {
            Analysis::Simulate { .. } | Analysis::SpeedMc { .. } => true,
            Analysis::Preset { name } => presets::find(name).is_some_and(|p| p.stochastic),
            _ => false,
        }
    }
}

/// A scenario whose substrate, rule and start have been instantiated.
pub struct Prepared {
    pub scenario: Scenario,
    pub sub: Arc<dyn Substrate>,
    /// The rule actually used; a single walker is a 1-leg spider.
    pub rule: ConfigRule,
    pub walker: bool,
    pub start: Config,
    pub limits: Limits,
    pub dir: PathBuf,
    pub prefix: String,
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_config(legs: &[String]) -> Result<Config, CliError> {
    let legs = legs
        .iter()
        .map(|s| s.parse::<VertexId>().map_err(|e| invalid(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Config::new(legs).map_err(|e| invalid(e.to_string()))
}

pub fn prepare(scenario: Scenario, base: &Path) -> Result<Prepared, CliError> {
    if scenario.schema != SCHEMA_VERSION {
        return Err(invalid(format!("unsupported schema {} (expected {SCHEMA_VERSION})", scenario.schema)));
    }
    if scenario.name.is_empty() {
        return Err(invalid("scenario name is empty"));
    }
    if scenario.analyses.is_empty() {
        return Err(invalid("scenario lists no analyses"));
    }
    if scenario.seed.is_none() {
        if let Some(a) = scenario.analyses.iter().find(|a| a.is_stochastic()) {
            return Err(invalid(format!("analysis `{}` is stochastic and needs a seed", a.kind())));
        }
    }
    let limits = scenario.limits.unwrap_or_default();
    let sub = generate(&scenario.substrate, &limits).map_err(|e| invalid(e.to_string()))?;
    let walker = scenario.rule.is_none();
    let rule = match &scenario.rule {
        Some(doc) => ConfigRule::from_document(doc).map_err(|e| invalid(e.to_string()))?,
        None => ConfigRule::bounded_span(1, 1).expect("one leg"),
    };
    let start = match &scenario.start {
        Some(legs) => parse_config(legs)?,
        None => rule
            .local_configs(&sub.root(), sub.as_ref())
            .into_iter()
            .next()
            .ok_or_else(|| invalid(format!("rule admits no configuration at {}", sub.root())))?,
    };
    if start.k() != rule.k() {
        return Err(invalid(format!("start has {} legs, rule needs {}", start.k(), rule.k())));
    }
    if let Some(leg) = start.legs().iter().find(|v| !sub.contains(v)) {
        return Err(invalid(format!("start leg {leg} is not a vertex of {}", sub.name())));
    }
    if !rule.admits(&start, sub.as_ref()) {
        return Err(invalid(format!("start {start} is not admissible")));
    }
    let dir = match &scenario.output.dir {
        Some(d) if d.is_relative() => base.join(d),
        Some(d) => d.clone(),
        None => base.to_path_buf(),
    };
    let prefix = scenario.output.prefix.clone().unwrap_or_else(|| scenario.name.clone());
    let prepared = Prepared { scenario, sub, rule, walker, start, limits, dir, prefix };
    for a in &prepared.scenario.analyses {
        prepared.check(a)?;
    }
    Ok(prepared)
}

impl Prepared {
    fn check(&self, a: &Analysis) -> Result<(), CliError> {
        let kind = a.kind();
        let positive = |name: &str, v: u64| {
            if v == 0 {
                Err(invalid(format!("{kind}: {name} must be >= 1")))
            } else {
                Ok(())
            }
        };
        match a {
            Analysis::Build { radius } | Analysis::Lumpability { radius, .. } | Analysis::Distortion { radius, .. } => {
                positive("radius", *radius)?
            }
            Analysis::Simulate { n_jumps, replicas } => {
                positive("n_jumps", *n_jumps as u64)?;
                positive("replicas", *replicas as u64)?;
            }
            Analysis::SpeedMc { n_jumps, replicas, height } => {
                positive("n_jumps", *n_jumps as u64)?;
                if *replicas < 2 {
                    return Err(invalid("speed_mc: replicas must be >= 2"));
                }
                self.height_fn(*height)(&self.start).map_err(|e| invalid(format!("{kind}: {e}")))?;
            }
            Analysis::SpeedExact { key, height } => {
                self.key_fn(*key)(&self.start).map_err(|e| invalid(format!("{kind}: {e}")))?;
                self.height_fn(*height)(&self.start).map_err(|e| invalid(format!("{kind}: {e}")))?;
            }
            Analysis::Classify { method, x_max, margin } => {
                if !(margin.is_finite() && *margin >= 0.0) {
                    return Err(invalid(format!("classify: margin must be finite and >= 0, got {margin}")));
                }
                if (*x_max as f64) < spiderlab::classify::MIN_COVERAGE {
                    return Err(invalid(format!(
                        "classify: x_max must be >= {}",
                        spiderlab::classify::MIN_COVERAGE
                    )));
                }
                if *method == LampertiMethod::Spider && self.span_s().is_none() {
                    return Err(invalid("classify: the spider method needs a 2-leg bounded-span rule"));
                }
            }
            Analysis::Resistance { radii } => {
                if radii.len() < 4 || radii[0] == 0 || !radii.windows(2).all(|w| w[0] < w[1]) {
                    return Err(invalid("resistance: need >= 4 positive, strictly increasing radii"));
                }
                // the start must stay off the boundary of the smallest ball
                let span = self.rule.span(self.sub.as_ref());
                if radii[0] <= 2 * span {
                    return Err(invalid(format!("resistance: radii must exceed twice the rule span ({span})")));
                }
            }
            Analysis::Hitting { radius, target, .. } => {
                positive("radius", *radius)?;
                if target.is_empty() {
                    return Err(invalid("hitting: target is empty"));
                }
                for legs in target {
                    let cfg = parse_config(legs)?;
                    if cfg.k() != self.rule.k() || !self.rule.admits(&cfg, self.sub.as_ref()) {
                        return Err(invalid(format!("hitting: target {cfg} is not admissible")));
                    }
                }
            }
            Analysis::Preset { name } => {
                if presets::find(name).is_none() {
                    return Err(invalid(format!("unknown preset `{name}` (see list-presets)")));
                }
            }
        }
        if let Analysis::Lumpability { key, .. } = a {
            self.key_fn(*key)(&self.start).map_err(|e| invalid(format!("{kind}: {e}")))?;
        }
        if let Analysis::Distortion { sites: Some(sites), .. } = a {
            for s in sites {
                s.parse::<VertexId>().map_err(|e| invalid(format!("{kind}: {e}")))?;
            }
        }
        Ok(())
    }

    /// s of a 2-leg bounded-span rule.
    pub fn span_s(&self) -> Option<u64> {
        match self.rule {
            ConfigRule::BoundedSpan { k: 2, s, .. } if !self.walker => Some(s),
            _ => None,
        }
    }

    pub fn targets(&self, target: &[Vec<String>]) -> Result<Vec<Config>, CliError> {
        target.iter().map(|legs| parse_config(legs)).collect()
    }

    pub fn key_fn(&self, kind: BlockKeyKind) -> impl Fn(&Config) -> spiderlab::Result<String> + '_ {
        let sub = self.sub.as_ref();
        move |c: &Config| match kind {
            BlockKeyKind::Trivial => Ok("*".to_string()),
            BlockKeyKind::Span => Ok(c.span(sub).to_string()),
            BlockKeyKind::Shape => {
                let base = c.leg(0).as_int().ok_or_else(|| spiderlab::Error::Address(c.to_string()))?;
                let rel = c.legs()[1..]
                    .iter()
                    .map(|v| v.as_int().map(|x| (x - base).to_string()))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| spiderlab::Error::Address(c.to_string()))?;
                Ok(format!("[{}]", rel.join(" ")))
            }
            BlockKeyKind::Pair => pair_key(c, sub).map(|k| k.to_string()),
            BlockKeyKind::Confluence => confluence_key(c, sub).map(|k| k.to_string()),
        }
    }

    pub fn height_fn(&self, kind: HeightKind) -> impl Fn(&Config) -> spiderlab::Result<f64> + Sync + '_ {
        let sub = self.sub.as_ref();
        move |c: &Config| {
            let h = |v: &VertexId| sub.height(v).ok_or_else(|| spiderlab::Error::Height(v.to_string()));
            match kind {
                HeightKind::FirstLeg => h(c.leg(0)),
                HeightKind::Mean => {
                    let total = c.legs().iter().map(h).sum::<spiderlab::Result<f64>>()?;
                    Ok(total / c.k() as f64)
                }
                HeightKind::Midpoint => midpoint_height(c, sub),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Prepared, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        prepare(s, Path::new("."))
    }

    const LINE: &str = r#"{"schema":1,"name":"t","substrate":{"family":"line","p":0.7,"q":0.3},
        "rule":{"kind":"bounded_span","k":2,"s":3,"left_leg":true},"seed":1,
        "analyses":[{"kind":"speed_exact","key":"span","height":"first_leg"}]}"#;

    #[test]
    fn minimal_scenario_prepares() {
        let p = parse(LINE).unwrap();
        assert_eq!(p.start.to_string(), "(0;1)");
        assert_eq!(p.prefix, "t");
        assert!(!p.walker);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = LINE.replace("\"seed\":1", "\"seed\":1,\"sed\":2");
        assert!(matches!(parse(&text), Err(CliError::Validation(m)) if m.contains("unknown field")));
        let text = LINE.replace("\"height\":\"first_leg\"", "\"height\":\"first_leg\",\"radius\":3");
        assert!(matches!(parse(&text), Err(CliError::Validation(_))));
    }

    #[test]
    fn stochastic_analyses_need_a_seed() {
        let text = LINE
            .replace(",\"seed\":1", "")
            .replace("\"analyses\":[", "\"analyses\":[{\"kind\":\"simulate\",\"n_jumps\":10,\"replicas\":1},");
        let Err(CliError::Validation(m)) = parse(&text) else { panic!("accepted") };
        assert!(m.contains("seed"), "{m}");
        let text = LINE.replace(",\"seed\":1", "");
        assert!(parse(&text).is_ok());
    }

    #[test]
    fn semantic_checks() {
        let bad_schema = LINE.replace("\"schema\":1", "\"schema\":2");
        assert!(parse(&bad_schema).is_err());
        let bad_start = LINE.replace("\"seed\":1", "\"seed\":1,\"start\":[\"1\",\"0\"]");
        assert!(matches!(parse(&bad_start), Err(CliError::Validation(m)) if m.contains("admissible")));
        let pair_on_line = LINE.replace("\"key\":\"span\"", "\"key\":\"pair\"");
        assert!(parse(&pair_on_line).is_err());
        let preset = LINE.replace(
            "{\"kind\":\"speed_exact\"",
            "{\"kind\":\"preset\",\"name\":\"no-such\"},{\"kind\":\"speed_exact\"",
        );
        assert!(matches!(parse(&preset), Err(CliError::Validation(m)) if m.contains("no-such")));
        let bad_p = LINE.replace("\"p\":0.7", "\"p\":-1");
        assert!(parse(&bad_p).is_err());
    }

    #[test]
    fn walker_defaults_to_one_leg() {
        let text = r#"{"schema":1,"name":"w","substrate":{"family":"tree_with_end","m":3},
            "analyses":[{"kind":"speed_exact","key":"trivial","height":"first_leg"}]}"#;
        let p = parse(text).unwrap();
        assert!(p.walker);
        assert_eq!(p.start.k(), 1);
    }
}
