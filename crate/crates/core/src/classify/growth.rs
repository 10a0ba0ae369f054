use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lamperti::{Verdict, VerdictClass};
use crate::chain::{resistance_between, reversible_measure};
use crate::error::{Error, Result};
use crate::graphs::{materialize_ball, Limits, Substrate};
use crate::spider::{build_spider_network, Config, ConfigRule};

/// Relative size of the last increment below which the curve counts as
/// flattened.
pub const CAUCHY_TOLERANCE: f64 = 1e-4;

/// Successive increments shrinking by less than this factor count as
/// sustained growth.
pub const GROWTH_RATIO: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub radius: u64,
    pub resistance: f64,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResistanceGrowth {
    pub label: String,
    pub curve: Vec<CurvePoint>,
    pub verdict: Verdict,
}

impl ResistanceGrowth {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["radius", "R_eff", "states"]).map_err(csv_error)?;
        for p in &self.curve {
            w.write_record([p.radius.to_string(), p.resistance.to_string(), p.states.to_string()]).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Parameter(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parameter(format!("csv write failed: {e}"))
}

fn check_radii(radii: &[u64]) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::Parameter(format!("need at least 3 radii, got {}", radii.len())));
    }
    if radii[0] < 1 || !radii.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Parameter("radii must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// R_eff from the root to the sphere of each radius.
pub fn resistance_growth(sub: &dyn Substrate, radii: &[u64], limits: &Limits) -> Result<ResistanceGrowth> {
    check_radii(radii)?;
    let curve = radii
        .par_iter()
        .map(|&r| {
            let net = materialize_ball(sub, &sub.root(), r as usize, limits)?;
            let rs = reversible_measure(&net)?;
            let sol = resistance_between(&rs, net.root(), &net.boundary_indices())?;
            Ok(CurvePoint { radius: r, resistance: sol.resistance, states: net.len() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResistanceGrowth { label: format!("walk on {}", sub.name()), verdict: growth_verdict(&curve), curve })
}

/// R_eff from `start` to the boundary configurations of the spider network
/// of each radius.
pub fn spider_resistance_growth(
    sub: &dyn Substrate,
    rule: &ConfigRule,
    start: &Config,
    radii: &[u64],
    limits: &Limits,
) -> Result<ResistanceGrowth> {
    check_radii(radii)?;
    let curve = radii
        .par_iter()
        .map(|&r| {
            let spn = build_spider_network(sub, rule, start, r, limits)?;
            let rs = reversible_measure(&spn.net)?;
            let sinks = spn.net.boundary_indices();
            let sol = resistance_between(&rs, spn.start(), &sinks)?;
            Ok(CurvePoint { radius: r, resistance: sol.resistance, states: spn.len() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResistanceGrowth {
        label: format!("{}-leg spider on {}", rule.k(), sub.name()),
        verdict: growth_verdict(&curve),
        curve,
    })
}

/// Classify the curve, then again without its last point; disagreement
/// makes the verdict inconclusive.
pub fn growth_verdict(curve: &[CurvePoint]) -> Verdict {
    let full = classify_curve(curve);
    let dropped = if curve.len() > 3 { classify_curve(&curve[..curve.len() - 1]) } else { VerdictClass::Inconclusive };
    let n = curve.len();
    let last = curve[n - 1].resistance;
    let inc = last - curve[n - 2].resistance;
    let prev = curve[n - 2].resistance - curve[n - 3].resistance;
    let mut notes = Vec::new();
    let class = if full == dropped {
        full
    } else {
        notes.push(format!("{full} on all radii but {dropped} without the largest"));
        VerdictClass::Inconclusive
    };
    Verdict {
        class,
        evidence: vec![
            ("R_last".into(), last),
            ("last_increment".into(), inc),
            ("relative_increment".into(), inc / last),
            ("increment_ratio".into(), inc / prev),
        ],
        notes,
    }
}

fn classify_curve(curve: &[CurvePoint]) -> VerdictClass {
    let n = curve.len();
    if n < 3 {
        return VerdictClass::Inconclusive;
    }
    let last = curve[n - 1].resistance;
    let inc = last - curve[n - 2].resistance;
    let prev = curve[n - 2].resistance - curve[n - 3].resistance;
    if inc.abs() < CAUCHY_TOLERANCE * last {
        VerdictClass::Transient
    } else if prev > 0.0 && inc >= GROWTH_RATIO * prev {
        VerdictClass::Recurrent
    } else {
        VerdictClass::Inconclusive
    }
}
