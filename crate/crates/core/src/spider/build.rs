use std::collections::HashMap;

use super::config::Config;
use super::rule::{ball_vertices, ConfigRule, SpiderDynamics};
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::graphs::{FiniteNetwork, Limits, Substrate, VertexId};

/// A finite piece of the spider graph: admissible configurations reachable
/// from a start configuration without any leg leaving the substrate ball of
/// `radius` around the start's base site.
#[derive(Debug)]
pub struct SpiderNetwork<'a> {
    pub net: FiniteNetwork<Config>,
    pub sub: &'a dyn Substrate,
    pub rule: ConfigRule,
    pub center: VertexId,
    pub radius: u64,
    start: usize,
}

impl<'a> SpiderNetwork<'a> {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    pub fn config(&self, i: usize) -> &Config {
        self.net.label(i)
    }

    /// Indices of configurations whose first leg sits at `site`.
    pub fn local_indices(&self, site: &VertexId) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.config(i).site() == site).collect()
    }
}

/// Breadth-first closure of admissible configurations reachable from
/// `start` with every leg inside the substrate ball of `radius` around the
/// start's first leg. A configuration is boundary-flagged when some leg is
/// at distance >= radius - span from the centre, so interior configurations
/// have their full neighbourhood in the network.
pub fn build_spider_network<'a>(
    sub: &'a dyn Substrate,
    rule: &ConfigRule,
    start: &Config,
    radius: u64,
    limits: &Limits,
) -> Result<SpiderNetwork<'a>> {
    if radius < 1 {
        return Err(Error::Parameter("spider radius must be >= 1".into()));
    }
    if !rule.admits(start, sub) {
        return Err(Error::RuleViolation {
            config: start.to_string(),
            reason: "start configuration is not admissible".into(),
        });
    }
    let center = start.site().clone();
    let margin = rule.span(sub);
    let dynamics = SpiderDynamics::new(sub, rule);
    let inside = |c: &Config| c.legs().iter().all(|v| sub.distance(&center, v) <= radius);

    let mut labels = vec![start.clone()];
    let mut index = HashMap::from([(start.clone(), 0usize)]);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut head = 0;
    while head < labels.len() {
        let cfg = labels[head].clone();
        let mut row = Vec::new();
        for (target, rate) in dynamics.moves(&cfg) {
            if !inside(&target) {
                continue;
            }
            let j = match index.get(&target) {
                Some(&j) => j,
                None => {
                    if labels.len() >= limits.max_vertices {
                        return Err(Error::Size {
                            what: "spider network".into(),
                            count: labels.len() + 1,
                            cap: limits.max_vertices,
                        });
                    }
                    let j = labels.len();
                    index.insert(target.clone(), j);
                    labels.push(target);
                    j
                }
            };
            row.push((j, rate));
        }
        rows.push(row);
        head += 1;
    }
    let boundary = labels
        .iter()
        .map(|c| c.legs().iter().any(|v| sub.distance(&center, v) + margin >= radius))
        .collect();
    let net = FiniteNetwork::from_rows(labels, 0, rows, boundary)?;
    Ok(SpiderNetwork { net, sub, rule: rule.clone(), center, radius, start: 0 })
}

/// Outcome of [`check_irreducible`].
#[derive(Clone, Debug, PartialEq)]
pub struct Irreducibility {
    pub irreducible: bool,
    /// Two configurations that cannot reach each other.
    pub witness: Option<(Config, Config)>,
}

/// Whether the spider restricted to the ball is irreducible: every interior
/// configuration connects to the start, and every local configuration of
/// every site near the centre was reached from the start.
///
/// Rates have symmetric support, so reachability is mutual.
pub fn check_irreducible(spn: &SpiderNetwork<'_>) -> Irreducibility {
    let dist = spn.net.bfs(spn.start);
    let start = spn.config(spn.start).clone();
    if let Some(i) = spn.net.interior().find(|&i| dist[i].is_none()) {
        return Irreducibility { irreducible: false, witness: Some((start, spn.config(i).clone())) };
    }
    let margin = spn.rule.span(spn.sub);
    let probe = (spn.radius.saturating_sub(margin) / 2).max(1);
    for site in ball_vertices(spn.sub, &spn.center, probe) {
        for cfg in spn.rule.local_configs(&site, spn.sub) {
            if spn.net.index_of(&cfg).is_none() {
                return Irreducibility { irreducible: false, witness: Some((start, cfg)) };
            }
        }
    }
    Irreducibility { irreducible: true, witness: None }
}

/// Largest spider-graph distance between two local configurations of a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConfigDiameter {
    pub diameter: usize,
    /// Some shortest path may have been cut by the ball boundary, so
    /// `diameter` is only a lower bound.
    pub truncated: bool,
    /// Pairs of local configurations with no connecting path in the network.
    pub unreachable_pairs: usize,
}

impl SpiderNetwork<'_> {
    /// Distance of every configuration to the nearest boundary configuration.
    pub fn boundary_distance(&self) -> Vec<Option<usize>> {
        self.net.bfs_from(&self.net.boundary_indices())
    }
}

/// Whether a path of length `d` between configurations with boundary
/// distances `a` and `b` might be beaten by a path leaving the network. Such
/// a path passes a boundary configuration and so has length >= a + b.
pub(crate) fn maybe_cut(d: usize, a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a + b < d,
        _ => false,
    }
}

/// max over pairs ℓ_i(site), ℓ_j(site) of the spider-graph distance.
pub fn config_diameter(spn: &SpiderNetwork<'_>, site: &VertexId) -> Result<ConfigDiameter> {
    let local = spn.local_indices(site);
    config_diameter_with(spn, site, &local, &spn.boundary_distance())
}

pub(crate) fn config_diameter_with(
    spn: &SpiderNetwork<'_>,
    site: &VertexId,
    local: &[usize],
    to_boundary: &[Option<usize>],
) -> Result<ConfigDiameter> {
    if local.is_empty() {
        return Err(Error::NotFound(format!("no local configurations at {site}")));
    }
    let mut out = ConfigDiameter { diameter: 0, truncated: false, unreachable_pairs: 0 };
    for &a in local {
        if spn.net.is_boundary(a) {
            out.truncated = true;
        }
        let dist = spn.net.bfs(a);
        for &b in local {
            match dist[b] {
                Some(d) => {
                    out.diameter = out.diameter.max(d);
                    if maybe_cut(d, to_boundary[a], to_boundary[b]) {
                        out.truncated = true;
                    }
                }
                None => {
                    out.unreachable_pairs += 1;
                    out.truncated = true;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{Line, Offset, TreeWithEnd};

    fn line_spider(s: u64) -> (Line, ConfigRule) {
        (Line::new(0.5, 0.5).unwrap(), ConfigRule::bounded_span_left(2, s).unwrap())
    }

    #[test]
    fn stretched_line_structure() {
        let (line, rule) = line_spider(2);
        let spn = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 10, &Limits::default())
            .unwrap();
        // (x,x+1) <-> (x,x+2) <-> (x+1,x+2)
        let idx = |a, b| spn.net.index_of(&Config::from_ints(&[a, b]).unwrap()).unwrap();
        assert!(spn.net.rate(idx(3, 4), idx(3, 5)) > 0.0);
        assert!(spn.net.rate(idx(3, 5), idx(4, 5)) > 0.0);
        assert_eq!(spn.net.rates(idx(3, 5)).len(), 2);
        assert_eq!(spn.net.rates(idx(3, 4)).len(), 2);
    }

    #[test]
    fn three_shapes_per_site() {
        let (line, rule) = line_spider(3);
        let spn = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 12, &Limits::default())
            .unwrap();
        assert_eq!(spn.local_indices(&VertexId::Int(2)).len(), 3);
        assert!(check_irreducible(&spn).irreducible);
        let d = config_diameter(&spn, &VertexId::Int(0)).unwrap();
        assert_eq!(d, ConfigDiameter { diameter: 2, truncated: false, unreachable_pairs: 0 });
    }

    #[test]
    fn span_one_is_reducible() {
        let (line, rule) = line_spider(1);
        let spn = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 8, &Limits::default())
            .unwrap();
        assert_eq!(spn.len(), 1);
        let verdict = check_irreducible(&spn);
        assert!(!verdict.irreducible);
        assert!(verdict.witness.is_some());
    }

    #[test]
    fn no_left_leg_on_line_is_reducible() {
        let line = Line::new(0.5, 0.5).unwrap();
        let rule = ConfigRule::bounded_span(2, 3).unwrap();
        let spn = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 12, &Limits::default())
            .unwrap();
        assert!(!check_irreducible(&spn).irreducible);
    }

    #[test]
    fn explicit_table_four_configs_per_site() {
        let line = Line::new(1.0, 1.0).unwrap();
        let rows = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [0, 2, 4]];
        let rule = ConfigRule::explicit(3, rows.iter().map(|r| r.iter().map(|&o| Offset::Int(o)).collect()).collect())
            .unwrap();
        let spn =
            build_spider_network(&line, &rule, &Config::from_ints(&[0, 1, 2]).unwrap(), 16, &Limits::default())
                .unwrap();
        for x in -6..=6 {
            assert_eq!(spn.local_indices(&VertexId::Int(x)).len(), 4, "site {x}");
        }
        assert!(check_irreducible(&spn).irreducible);
    }

    #[test]
    fn tree_spider_irreducible() {
        let t = TreeWithEnd::with_bias(3, 0.5).unwrap();
        let rule = ConfigRule::bounded_span(2, 2).unwrap();
        let start = Config::new(vec![t.root(), t.father(&t.root()).unwrap()]).unwrap();
        let spn = build_spider_network(&t, &rule, &start, 4, &Limits::default()).unwrap();
        assert!(check_irreducible(&spn).irreducible);
    }

    #[test]
    fn inadmissible_start_rejected() {
        let (line, rule) = line_spider(2);
        let err = build_spider_network(&line, &rule, &Config::from_ints(&[0, 3]).unwrap(), 5, &Limits::default());
        assert!(matches!(err, Err(Error::RuleViolation { .. })));
    }

    #[test]
    fn vertex_cap() {
        let (line, rule) = line_spider(3);
        let limits = Limits { max_vertices: 20, ..Limits::default() };
        let err = build_spider_network(&line, &rule, &Config::from_ints(&[0, 1]).unwrap(), 50, &limits);
        assert!(matches!(err, Err(Error::Size { .. })));
    }
}
