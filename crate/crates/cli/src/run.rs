use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use spiderlab::chain::{
    hitting_times, mc_speed, simulate_replica, write_speed_csv, write_traces_csv, HitMode, McOptions,
};
use spiderlab::classify::{
    distortion_scan, distortion_scan_sites, lamperti_classify, spider_drift_profile, spider_resistance_growth,
    walk_drift_profile, DriftProfile, SiteSelection, Verdict,
};
use spiderlab::graphs::{NetworkDocument, VertexId};
use spiderlab::quotient::{exact_speed, explore_factor_chain, lumpability_check, ExploreOptions, Partition, LUMP_TOLERANCE};
use spiderlab::spider::{build_spider_network, check_irreducible, Config, SpiderDynamics, SpiderNetwork};

use crate::output::{finish, finish_raw, row, Artifacts};
use crate::presets;
use crate::scenario::{Analysis, HeightKind, HitKind, LampertiMethod, Prepared};
use crate::CliError;

#[derive(Serialize)]
struct BuildSummary {
    states: usize,
    edges: usize,
    boundary: usize,
    irreducible: bool,
    witness: Option<(String, String)>,
    network: NetworkDocument,
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    verdict: &'a Verdict,
    label: String,
    fit: Option<spiderlab::classify::LimitFit>,
}

/// Execute every analysis in order. Returns the artifact paths.
pub fn run(p: &Prepared) -> Result<Vec<std::path::PathBuf>, CliError> {
    let mut out = Artifacts::new(&p.dir, &p.prefix)?;
    for (i, a) in p.scenario.analyses.iter().enumerate() {
        let stem = format!("{i:02}_{}", a.kind());
        run_one(p, a, &stem, &mut out)?;
    }
    Ok(out.written)
}

fn network<'a>(p: &'a Prepared, radius: u64) -> Result<SpiderNetwork<'a>, CliError> {
    Ok(build_spider_network(p.sub.as_ref(), &p.rule, &p.start, radius, &p.limits)?)
}

fn run_one(p: &Prepared, a: &Analysis, stem: &str, out: &mut Artifacts) -> Result<(), CliError> {
    let sub = p.sub.as_ref();
    let d = SpiderDynamics::new(sub, &p.rule);
    let seed = p.scenario.seed.unwrap_or(0);
    match a {
        Analysis::Build { radius } => {
            let spn = network(p, *radius)?;
            let irr = check_irreducible(&spn);
            let summary = BuildSummary {
                states: spn.len(),
                edges: spn.net.edge_count(),
                boundary: spn.net.boundary_indices().len(),
                irreducible: irr.irreducible,
                witness: irr.witness.map(|(a, b)| (a.to_string(), b.to_string())),
                network: spn.net.to_document(),
            };
            out.json(stem, &summary)?;
        }
        Analysis::Simulate { n_jumps, replicas } => {
            let traces = (0..*replicas as u64)
                .into_par_iter()
                .map(|r| simulate_replica(&d, &p.start, *n_jumps, seed, r))
                .collect::<spiderlab::Result<Vec<_>>>()?;
            let height = p.height_fn(HeightKind::FirstLeg);
            let (_, mut w) = out.raw_csv(stem)?;
            write_traces_csv(&mut w, &traces, |c: &Config| height(c).ok())?;
            finish_raw(w)?;
        }
        Analysis::SpeedExact { key, height } => {
            let h = p.height_fn(*height);
            let hd: &dyn Fn(&Config) -> spiderlab::Result<f64> = &h;
            let fc = explore_factor_chain(&d, &p.start, p.key_fn(*key), Some(hd), ExploreOptions::default())?;
            let report = exact_speed(&fc, &p.scenario.name)?;
            let st = fc.stationary()?;
            out.json(&format!("{stem}_factor"), &fc.to_document(&st))?;
            let (_, mut w) = out.raw_csv(stem)?;
            write_speed_csv(&mut w, &[report])?;
            finish_raw(w)?;
        }
        Analysis::SpeedMc { n_jumps, replicas, height } => {
            let opts = McOptions { n_jumps: *n_jumps, replicas: *replicas, seed };
            let report = mc_speed(&d, &p.start, p.height_fn(*height), opts, &p.scenario.name)?;
            let (_, mut w) = out.raw_csv(stem)?;
            write_speed_csv(&mut w, &[report])?;
            finish_raw(w)?;
        }
        Analysis::Classify { method, x_max, margin } => {
            let profile = match method {
                LampertiMethod::Walk => {
                    let points: Vec<VertexId> = (1..=*x_max as i64).map(VertexId::Int).collect();
                    walk_drift_profile(sub, &points)?
                }
                LampertiMethod::Spider => {
                    let s = p.span_s().expect("checked during validation");
                    spider_drift_profile(sub, s, &(1..=*x_max).collect::<Vec<_>>())?
                }
            };
            let verdict = lamperti_classify(&profile, *margin)?;
            write_profile(out, stem, &profile)?;
            let fit = profile.fit;
            out.json(stem, &ClassifyOutput { label: verdict.label(), verdict: &verdict, fit })?;
            println!("{}: {verdict}", p.scenario.name);
        }
        Analysis::Lumpability { radius, key } => {
            let spn = network(p, *radius)?;
            let key = p.key_fn(*key);
            let keys = spn
                .net
                .interior()
                .chain(spn.net.boundary_indices())
                .map(|i| Ok((spn.config(i).clone(), key(spn.config(i))?)))
                .collect::<spiderlab::Result<HashMap<Config, String>>>()?;
            let part = Partition::from_key(&spn.net, |c: &Config| keys.get(c).cloned().unwrap_or_default());
            let verdict = lumpability_check(&spn.net, &part, LUMP_TOLERANCE);
            println!("{}: lumpable={} blocks={}", p.scenario.name, verdict.lumpable, verdict.blocks);
            out.json(stem, &verdict)?;
        }
        Analysis::Resistance { radii } => {
            let g = spider_resistance_growth(sub, &p.rule, &p.start, radii, &p.limits)?;
            let (_, mut w) = out.raw_csv(stem)?;
            g.write_csv(&mut w)?;
            finish_raw(w)?;
            out.json(&format!("{stem}_verdict"), &g.verdict)?;
            println!("{}: {}", p.scenario.name, g.verdict);
        }
        Analysis::Distortion { radius, sites } => {
            let report = match sites {
                Some(sites) => {
                    let sites = sites.iter().map(|s| s.parse()).collect::<spiderlab::Result<Vec<VertexId>>>()?;
                    distortion_scan_sites(sub, &p.rule, *radius, &SiteSelection::Sites(sites), &p.limits)?
                }
                None => distortion_scan(sub, &p.rule, *radius, &p.limits)?,
            };
            let mut w = out.csv(stem, &["site", "diameter", "truncated", "unreachable_pairs"])?;
            for s in &report.sites {
                row(&mut w, [s.site.clone(), s.diameter.to_string(), s.truncated.to_string(), s.unreachable_pairs.to_string()])?;
            }
            finish(w)?;
            out.json(stem, &report)?;
        }
        Analysis::Hitting { radius, target, mode } => {
            let spn = network(p, *radius)?;
            let mut idx = p
                .targets(target)?
                .iter()
                .map(|c| spn.net.index_of(c).ok_or_else(|| spiderlab::Error::NotFound(format!("{c} within radius {radius}"))))
                .collect::<spiderlab::Result<Vec<_>>>()?;
            let mode = match mode {
                HitKind::Hit => HitMode::Hit,
                HitKind::Return => HitMode::Return,
            };
            // a truncated ball: the walk also stops on leaving it
            if mode == HitMode::Hit {
                let extra: Vec<usize> = spn.net.boundary_indices().into_iter().filter(|b| !idx.contains(b)).collect();
                idx.extend(extra);
            }
            let report = hitting_times(&spn.net, &idx, mode)?;
            let mut w = out.csv(stem, &["state", "steps", "time"])?;
            for i in 0..spn.len() {
                if report.time[i].is_finite() {
                    row(&mut w, [spn.config(i).to_string(), report.steps[i].to_string(), report.time[i].to_string()])?;
                }
            }
            finish(w)?;
        }
        Analysis::Preset { name } => {
            let preset = presets::find(name).expect("checked during validation");
            (preset.run)(seed, out)?;
        }
    }
    Ok(())
}

fn write_profile(out: &mut Artifacts, stem: &str, profile: &DriftProfile) -> Result<(), CliError> {
    let mut w = out.csv(&format!("{stem}_profile"), &["x", "mu", "g"])?;
    for ((x, mu), g) in profile.x.iter().zip(&profile.mu).zip(profile.scaled()) {
        row(&mut w, [x.to_string(), mu.to_string(), g.to_string()])?;
    }
    finish(w)
}
