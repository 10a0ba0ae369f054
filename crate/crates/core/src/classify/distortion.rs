use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{Limits, Substrate, VertexId};
use crate::spider::{ball_vertices, build_spider_network, config_diameter_with, maybe_cut, ConfigRule, SpiderNetwork};

/// Which sites to scan.
#[derive(Clone, Debug, PartialEq)]
pub enum SiteSelection {
    /// Every substrate vertex within this distance of the root.
    Ball(u64),
    Sites(Vec<VertexId>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteDiameter {
    pub site: String,
    pub diameter: usize,
    pub truncated: bool,
    pub unreachable_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRatio {
    pub x: String,
    pub y: String,
    pub distance: u64,
    pub spider_distance: usize,
    pub ratio: f64,
    pub truncated: bool,
}

/// Comparison of substrate distances d(x,y) with spider-graph distances
/// d^S(ℓ₁(x), ℓ₁(y)).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub mapping: String,
    pub substrate: String,
    pub k: usize,
    pub span: u64,
    /// 2k(s+k), the bound on config diameters over bounded-degree substrates.
    pub diameter_bound: u64,
    pub radius: u64,
    pub sites: Vec<SiteDiameter>,
    pub pairs: Vec<PairRatio>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Multiplicative constant, fitted on the untruncated pairs at the
    /// largest distances.
    pub alpha: f64,
    /// Additive constant making α⁻¹d − β <= d^S <= αd + β hold on every
    /// untruncated pair.
    pub beta: f64,
}

impl DistortionReport {
    pub fn max_diameter(&self) -> usize {
        self.sites.iter().map(|s| s.diameter).max().unwrap_or(0)
    }

    pub fn any_truncated(&self) -> bool {
        self.sites.iter().any(|s| s.truncated) || self.pairs.iter().any(|p| p.truncated)
    }
}

/// Scan the sites near the root. Moving a k-leg spider by d takes about kd
/// steps, so sites stay within (radius - span)/(2k) of the root.
pub fn distortion_scan(sub: &dyn Substrate, rule: &ConfigRule, radius: u64, limits: &Limits) -> Result<DistortionReport> {
    let probe = (radius.saturating_sub(rule.span(sub)) / (2 * rule.k() as u64)).max(1);
    distortion_scan_sites(sub, rule, radius, &SiteSelection::Ball(probe), limits)
}

pub fn distortion_scan_sites(
    sub: &dyn Substrate,
    rule: &ConfigRule,
    radius: u64,
    selection: &SiteSelection,
    limits: &Limits,
) -> Result<DistortionReport> {
    let root = sub.root();
    let start = rule
        .local_configs(&root, sub)
        .into_iter()
        .next()
        .ok_or_else(|| Error::NotFound(format!("no local configuration at {root}")))?;
    let spn = build_spider_network(sub, rule, &start, radius, limits)?;
    let sites = match selection {
        SiteSelection::Ball(r) => ball_vertices(sub, &root, *r),
        SiteSelection::Sites(v) => v.clone(),
    };
    if sites.is_empty() {
        return Err(Error::Parameter("no sites to scan".into()));
    }
    let first: Vec<usize> = sites
        .iter()
        .map(|x| {
            let cfg = rule
                .local_configs(x, sub)
                .into_iter()
                .next()
                .ok_or_else(|| Error::NotFound(format!("no local configuration at {x}")))?;
            spn.net.index_of(&cfg).ok_or_else(|| Error::Truncation(format!("{cfg} lies outside radius {radius}")))
        })
        .collect::<Result<_>>()?;

    let to_boundary = spn.boundary_distance();
    let diameters = sites
        .par_iter()
        .map(|x| {
            let local = spn.local_indices(x);
            let d = config_diameter_with(&spn, x, &local, &to_boundary)?;
            Ok(SiteDiameter {
                site: x.to_string(),
                diameter: d.diameter,
                truncated: d.truncated,
                unreachable_pairs: d.unreachable_pairs,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<PairRatio> = (0..sites.len())
        .into_par_iter()
        .flat_map_iter(|a| pair_rows(&spn, &sites, &first, &to_boundary, a))
        .collect();

    let k = rule.k() as u64;
    let span = rule.span(sub);
    let (alpha, beta) = fit_constants(&pairs);
    let ratios = pairs.iter().map(|p| p.ratio);
    Ok(DistortionReport {
        mapping: "x -> first local configuration at x".into(),
        substrate: sub.name().into(),
        k: k as usize,
        span,
        diameter_bound: 2 * k * (span + k),
        radius,
        min_ratio: ratios.clone().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.fold(f64::NEG_INFINITY, f64::max),
        sites: diameters,
        pairs,
        alpha,
        beta,
    })
}

fn pair_rows(
    spn: &SpiderNetwork<'_>,
    sites: &[VertexId],
    first: &[usize],
    to_boundary: &[Option<usize>],
    a: usize,
) -> Vec<PairRatio> {
    let dist = spn.net.bfs(first[a]);
    (a + 1..sites.len())
        .filter_map(|b| {
            let d = spn.sub.distance(&sites[a], &sites[b]);
            if d == 0 {
                return None;
            }
            let (ds, truncated) = match dist[first[b]] {
                Some(ds) => (ds, maybe_cut(ds, to_boundary[first[a]], to_boundary[first[b]])),
                None => (0, true),
            };
            Some(PairRatio {
                x: sites[a].to_string(),
                y: sites[b].to_string(),
                distance: d,
                spider_distance: ds,
                ratio: ds as f64 / d as f64,
                truncated,
            })
        })
        .collect()
}

fn fit_constants(pairs: &[PairRatio]) -> (f64, f64) {
    let good: Vec<&PairRatio> = pairs.iter().filter(|p| !p.truncated).collect();
    let Some(far) = good.iter().map(|p| p.distance).max() else {
        return (f64::NAN, f64::NAN);
    };
    let alpha = good
        .iter()
        .filter(|p| 2 * p.distance >= far)
        .map(|p| p.ratio.max(1.0 / p.ratio))
        .fold(1.0f64, f64::max);
    let beta = good
        .iter()
        .map(|p| {
            let (d, ds) = (p.distance as f64, p.spider_distance as f64);
            (ds - alpha * d).max(d / alpha - ds)
        })
        .fold(0.0f64, f64::max);
    (alpha, beta)
}
