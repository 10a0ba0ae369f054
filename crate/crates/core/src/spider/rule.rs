use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::Config;
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::graphs::{Offset, Substrate, VertexId};

type Predicate = Arc<dyn Fn(&Config, &dyn Substrate) -> bool + Send + Sync>;

/// The admissible set: which k-tuples of leg positions are allowed.
#[derive(Clone)]
pub enum ConfigRule {
    /// Legs pairwise distinct with all pairwise distances at most `s`.
    /// With `left_leg`, legs must also appear in strictly increasing height
    /// order (on the integers: first leg leftmost).
    BoundedSpan { k: usize, s: u64, left_leg: bool },
    /// L(x) = {(x + o_1, ..., x + o_k)} for each offset row; the first
    /// offset of every row is zero.
    Explicit { k: usize, offsets: Vec<Vec<Offset>> },
    /// Arbitrary predicate with a declared span used for boundary margins.
    Custom { k: usize, span: u64, name: String, predicate: Predicate },
}

impl fmt::Debug for ConfigRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigRule::BoundedSpan { k, s, left_leg } => f
                .debug_struct("BoundedSpan")
                .field("k", k)
                .field("s", s)
                .field("left_leg", left_leg)
                .finish(),
            ConfigRule::Explicit { k, offsets } => {
                f.debug_struct("Explicit").field("k", k).field("offsets", offsets).finish()
            }
            ConfigRule::Custom { k, span, name, .. } => {
                f.debug_struct("Custom").field("k", k).field("span", span).field("name", name).finish()
            }
        }
    }
}

/// JSON form of a rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleDocument {
    BoundedSpan {
        k: usize,
        s: u64,
        #[serde(default)]
        left_leg: bool,
    },
    Explicit { k: usize, offsets: Vec<Vec<Offset>> },
}

fn is_zero(o: &Offset) -> bool {
    matches!(o, Offset::Int(0) | Offset::Pair(0, 0))
}

impl ConfigRule {
    pub fn bounded_span(k: usize, s: u64) -> Result<Self> {
        Self::from_document(&RuleDocument::BoundedSpan { k, s, left_leg: false })
    }

    /// Bounded span with the first leg leftmost.
    pub fn bounded_span_left(k: usize, s: u64) -> Result<Self> {
        Self::from_document(&RuleDocument::BoundedSpan { k, s, left_leg: true })
    }

    pub fn explicit(k: usize, offsets: Vec<Vec<Offset>>) -> Result<Self> {
        Self::from_document(&RuleDocument::Explicit { k, offsets })
    }

    /// Three legs on ℤ with L(x) = {(x,x+1,x+2), (x,x+1,x+3), (x,x+2,x+3), (x,x+2,x+4)}.
    pub fn three_leg_line_table() -> Self {
        let rows = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [0, 2, 4]];
        ConfigRule::Explicit { k: 3, offsets: rows.iter().map(|r| r.iter().map(|&o| Offset::Int(o)).collect()).collect() }
    }

    /// Two legs on ℤ₃ × ℤ at distance at most 2, as offsets (du, dx).
    pub fn product_z3_z_table() -> Self {
        let second = [(1, 0), (-1, 0), (0, 1), (0, -1), (-1, 1), (-1, -1), (1, 1), (1, -1), (0, 2), (0, -2)];
        let offsets = second.iter().map(|&(du, dx)| vec![Offset::Pair(0, 0), Offset::Pair(du, dx)]).collect();
        ConfigRule::Explicit { k: 2, offsets }
    }

    pub fn custom(
        k: usize,
        span: u64,
        name: impl Into<String>,
        predicate: impl Fn(&Config, &dyn Substrate) -> bool + Send + Sync + 'static,
    ) -> Self {
        ConfigRule::Custom { k, span, name: name.into(), predicate: Arc::new(predicate) }
    }

    pub fn from_document(doc: &RuleDocument) -> Result<Self> {
        match doc {
            &RuleDocument::BoundedSpan { k, s, left_leg } => {
                if k == 0 || s == 0 {
                    return Err(Error::Parameter(format!("bounded span needs k >= 1 and s >= 1, got k={k}, s={s}")));
                }
                Ok(ConfigRule::BoundedSpan { k, s, left_leg })
            }
            RuleDocument::Explicit { k, offsets } => {
                if offsets.is_empty() {
                    return Err(Error::Parameter("explicit rule needs at least one offset row".into()));
                }
                for row in offsets {
                    if row.len() != *k {
                        return Err(Error::Parameter(format!("offset row {row:?} does not have k={k} entries")));
                    }
                    if !is_zero(&row[0]) {
                        return Err(Error::Parameter(format!("offset row {row:?} must start at the base site")));
                    }
                }
                Ok(ConfigRule::Explicit { k: *k, offsets: offsets.clone() })
            }
        }
    }

    pub fn to_document(&self) -> Option<RuleDocument> {
        match self {
            &ConfigRule::BoundedSpan { k, s, left_leg } => Some(RuleDocument::BoundedSpan { k, s, left_leg }),
            ConfigRule::Explicit { k, offsets } => Some(RuleDocument::Explicit { k: *k, offsets: offsets.clone() }),
            ConfigRule::Custom { .. } => None,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            ConfigRule::BoundedSpan { k, .. } | ConfigRule::Explicit { k, .. } | ConfigRule::Custom { k, .. } => *k,
        }
    }

    /// Largest leg distance any admissible configuration can have.
    pub fn span(&self, sub: &dyn Substrate) -> u64 {
        match self {
            ConfigRule::BoundedSpan { s, .. } => *s,
            ConfigRule::Custom { span, .. } => *span,
            ConfigRule::Explicit { offsets, .. } => {
                let base = sub.root();
                offsets
                    .iter()
                    .filter_map(|row| self.realize(&base, row, sub))
                    .map(|c| c.span(sub))
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    fn realize(&self, base: &VertexId, row: &[Offset], sub: &dyn Substrate) -> Option<Config> {
        let legs = row.iter().map(|&o| sub.offset(base, o)).collect::<Option<Vec<_>>>()?;
        Config::new(legs).ok()
    }

    /// Whether `cfg` is admissible. Distinctness of legs is always required.
    pub fn admits(&self, cfg: &Config, sub: &dyn Substrate) -> bool {
        if cfg.k() != self.k() || !cfg.legs().iter().all(|v| sub.contains(v)) {
            return false;
        }
        let legs = cfg.legs();
        for (i, a) in legs.iter().enumerate() {
            if legs[i + 1..].contains(a) {
                return false;
            }
        }
        match self {
            ConfigRule::BoundedSpan { s, left_leg, .. } => {
                cfg.span(sub) <= *s && (!*left_leg || Self::ordered(cfg, sub))
            }
            ConfigRule::Explicit { offsets, .. } => offsets.iter().any(|row| {
                row.iter().zip(legs).all(|(&o, leg)| sub.offset(cfg.site(), o).as_ref() == Some(leg))
            }),
            ConfigRule::Custom { predicate, .. } => predicate(cfg, sub),
        }
    }

    fn ordered(cfg: &Config, sub: &dyn Substrate) -> bool {
        cfg.legs().windows(2).all(|w| match (sub.height(&w[0]), sub.height(&w[1])) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        })
    }

    /// Admissibility of `cfg` with leg `i` moved to `to`, assuming `cfg`
    /// itself is admissible.
    pub fn admits_move(&self, cfg: &Config, i: usize, to: &VertexId, sub: &dyn Substrate) -> bool {
        if cfg.contains(to) {
            return false;
        }
        match self {
            ConfigRule::BoundedSpan { s, left_leg, .. } => {
                let legs = cfg.legs();
                let within = legs.iter().enumerate().all(|(j, other)| j == i || sub.distance(to, other) <= *s);
                if !within {
                    return false;
                }
                if *left_leg {
                    let h = sub.height(to);
                    let below = i == 0 || sub.height(&legs[i - 1]) < h;
                    let above = i + 1 == legs.len() || h < sub.height(&legs[i + 1]);
                    h.is_some() && below && above
                } else {
                    true
                }
            }
            _ => self.admits(&cfg.with_leg(i, to.clone()), sub),
        }
    }

    /// The local configuration set L(x): admissible configurations with
    /// first leg at `site`.
    pub fn local_configs(&self, site: &VertexId, sub: &dyn Substrate) -> Vec<Config> {
        match self {
            ConfigRule::Explicit { offsets, .. } => {
                let mut out: Vec<Config> =
                    offsets.iter().filter_map(|row| self.realize(site, row, sub)).collect();
                out.sort();
                out.dedup();
                out
            }
            _ => {
                let span = self.span(sub);
                let nearby = ball_vertices(sub, site, span);
                let mut out = Vec::new();
                let mut legs = vec![site.clone()];
                self.extend_local(&nearby, &mut legs, sub, &mut out);
                out.sort();
                out
            }
        }
    }

    fn extend_local(&self, nearby: &[VertexId], legs: &mut Vec<VertexId>, sub: &dyn Substrate, out: &mut Vec<Config>) {
        if legs.len() == self.k() {
            let cfg = Config::new(legs.clone()).expect("legs kept distinct");
            if self.admits(&cfg, sub) {
                out.push(cfg);
            }
            return;
        }
        for v in nearby {
            if legs.contains(v) {
                continue;
            }
            if let ConfigRule::BoundedSpan { s, .. } = self {
                if legs.iter().any(|l| sub.distance(l, v) > *s) {
                    continue;
                }
            }
            legs.push(v.clone());
            self.extend_local(nearby, legs, sub, out);
            legs.pop();
        }
    }
}

/// Substrate vertices within distance `radius` of `center`, BFS order.
pub(crate) fn ball_vertices(sub: &dyn Substrate, center: &VertexId, radius: u64) -> Vec<VertexId> {
    let mut seen = HashSet::from([center.clone()]);
    let mut order = vec![center.clone()];
    let mut queue = VecDeque::from([(center.clone(), 0u64)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == radius {
            continue;
        }
        for n in sub.neighbors(&v) {
            if seen.insert(n.vertex.clone()) {
                order.push(n.vertex.clone());
                queue.push_back((n.vertex, d + 1));
            }
        }
    }
    order
}

/// The spider walk as a lazily generated chain on configurations: each leg
/// jumps along substrate edges with the substrate rate; jumps into
/// inadmissible configurations are suppressed.
#[derive(Clone, Copy, Debug)]
pub struct SpiderDynamics<'a> {
    pub sub: &'a dyn Substrate,
    pub rule: &'a ConfigRule,
}

impl<'a> SpiderDynamics<'a> {
    pub fn new(sub: &'a dyn Substrate, rule: &'a ConfigRule) -> Self {
        SpiderDynamics { sub, rule }
    }
}

impl Dynamics for SpiderDynamics<'_> {
    type State = Config;

    fn moves(&self, cfg: &Config) -> Vec<(Config, f64)> {
        let mut out = Vec::new();
        for (i, leg) in cfg.legs().iter().enumerate() {
            for n in self.sub.neighbors(leg) {
                if self.rule.admits_move(cfg, i, &n.vertex, self.sub) {
                    out.push((cfg.with_leg(i, n.vertex), n.forward));
                }
            }
        }
        out
    }

    fn recenter(&self, cfg: &Config) -> Option<(Config, f64)> {
        // only distance-based rules survive an automorphism
        if !matches!(self.rule, ConfigRule::BoundedSpan { .. }) {
            return None;
        }
        let (legs, shift) = self.sub.recenter(cfg.legs())?;
        Some((Config::new(legs).ok()?, shift))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{Line, ProductZ3Z};

    #[test]
    fn line_local_configs_s3() {
        let line = Line::new(0.5, 0.5).unwrap();
        let rule = ConfigRule::bounded_span_left(2, 3).unwrap();
        let l = rule.local_configs(&VertexId::Int(4), &line);
        let expected: Vec<Config> = [5, 6, 7].iter().map(|&y| Config::from_ints(&[4, y]).unwrap()).collect();
        assert_eq!(l, expected);
        // without the left-leg convention both orientations appear
        let rule = ConfigRule::bounded_span(2, 3).unwrap();
        assert_eq!(rule.local_configs(&VertexId::Int(4), &line).len(), 6);
    }

    #[test]
    fn explicit_rule_validation() {
        assert!(ConfigRule::explicit(2, vec![vec![Offset::Int(1), Offset::Int(2)]]).is_err());
        assert!(ConfigRule::explicit(3, vec![vec![Offset::Int(0), Offset::Int(2)]]).is_err());
    }

    #[test]
    fn explicit_three_leg_table() {
        let line = Line::new(1.0, 1.0).unwrap();
        let rule = ConfigRule::three_leg_line_table();
        assert_eq!(rule.local_configs(&VertexId::Int(7), &line).len(), 4);
        assert!(!rule.admits(&Config::from_ints(&[0, 1, 4]).unwrap(), &line));
        assert!(rule.admits(&Config::from_ints(&[0, 2, 4]).unwrap(), &line));
        assert_eq!(rule.span(&line), 4);
    }

    #[test]
    fn product_table_matches_bounded_span() {
        let g = ProductZ3Z;
        let site = VertexId::Product { u: 2, x: -3 };
        let table = ConfigRule::product_z3_z_table().local_configs(&site, &g);
        assert_eq!(table.len(), 10);
        assert_eq!(table, ConfigRule::bounded_span(2, 2).unwrap().local_configs(&site, &g));
    }

    #[test]
    fn rule_document_json() {
        let doc: RuleDocument = serde_json::from_str(r#"{"kind":"explicit","k":2,"offsets":[[[0,0],[1,1]]]}"#).unwrap();
        let rule = ConfigRule::from_document(&doc).unwrap();
        let g = ProductZ3Z;
        let l = rule.local_configs(&VertexId::Product { u: 2, x: 5 }, &g);
        assert_eq!(l.len(), 1);
        assert_eq!(l[0].leg(1), &VertexId::Product { u: 0, x: 6 });
        let doc: RuleDocument = serde_json::from_str(r#"{"kind":"bounded_span","k":2,"s":3}"#).unwrap();
        assert_eq!(doc, RuleDocument::BoundedSpan { k: 2, s: 3, left_leg: false });
    }

    #[test]
    fn blocked_moves_are_not_realized() {
        let line = Line::new(0.7, 0.3).unwrap();
        let rule = ConfigRule::bounded_span_left(2, 2).unwrap();
        let dynamics = SpiderDynamics::new(&line, &rule);
        // (x, x+1): left leg may step left, right leg may step right
        let moves = dynamics.moves(&Config::from_ints(&[0, 1]).unwrap());
        assert_eq!(
            moves,
            vec![(Config::from_ints(&[-1, 1]).unwrap(), 0.3), (Config::from_ints(&[0, 2]).unwrap(), 0.7)]
        );
    }
}
