use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};

/// Generator for replica `replica` of an experiment seeded with `seed`.
/// Replicas use disjoint ChaCha streams of the same key.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// A simulated trajectory. `states[0]` is the start at time 0, `times[n]`
/// is the time of the n-th jump.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace<S> {
    pub seed: u64,
    pub replica: u64,
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

impl<S> Trace<S> {
    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }
}

/// One competing-exponentials step: holding time and next state.
fn step<D: Dynamics, R: Rng>(dynamics: &D, state: &D::State, rng: &mut R) -> Result<(f64, D::State)> {
    let moves = dynamics.moves(state);
    let total: f64 = moves.iter().map(|m| m.1).sum();
    if moves.is_empty() || !(total > 0.0) {
        return Err(Error::Frozen(state.to_string()));
    }
    let hold: f64 = rng.sample::<f64, _>(Exp1) / total;
    let mut u = rng.random::<f64>() * total;
    let last = moves.len() - 1;
    for (i, (target, rate)) in moves.into_iter().enumerate() {
        if u < rate || i == last {
            return Ok((hold, target));
        }
        u -= rate;
    }
    unreachable!("moves is non-empty")
}

pub fn simulate<D: Dynamics>(dynamics: &D, start: &D::State, n_jumps: usize, seed: u64) -> Result<Trace<D::State>> {
    simulate_replica(dynamics, start, n_jumps, seed, 0)
}

pub fn simulate_replica<D: Dynamics>(
    dynamics: &D,
    start: &D::State,
    n_jumps: usize,
    seed: u64,
    replica: u64,
) -> Result<Trace<D::State>> {
    if n_jumps == 0 {
        return Err(Error::Parameter("n_jumps must be >= 1".into()));
    }
    let mut rng = replica_rng(seed, replica);
    let mut times = Vec::with_capacity(n_jumps + 1);
    let mut states = Vec::with_capacity(n_jumps + 1);
    times.push(0.0);
    states.push(start.clone());
    let mut t = 0.0;
    for _ in 0..n_jumps {
        let (hold, next) = step(dynamics, states.last().expect("non-empty"), &mut rng)?;
        t += hold;
        times.push(t);
        states.push(next);
    }
    Ok(Trace { seed, replica, times, states })
}

/// Write traces as CSV rows (replica, jump_index, time, state_address, height).
pub fn write_traces_csv<S: std::fmt::Display, W: Write>(
    out: W,
    traces: &[Trace<S>],
    height: impl Fn(&S) -> Option<f64>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Parameter(format!("csv output failed: {e}"));
    w.write_record(["replica", "jump_index", "time", "state_address", "height"]).map_err(io)?;
    for tr in traces {
        for (n, (t, s)) in tr.times.iter().zip(&tr.states).enumerate() {
            let h = height(s).map_or_else(String::new, |h| h.to_string());
            w.write_record([tr.replica.to_string(), n.to_string(), t.to_string(), s.to_string(), h]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Parameter(format!("csv output failed: {e}")))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    MonteCarlo,
}

/// A speed V = D / T with where it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub label: String,
    pub provenance: Provenance,
    pub speed: f64,
    /// Standard error across replicas (Monte Carlo only).
    pub stderr: Option<f64>,
    /// Mean height increment per jump.
    pub drift: Option<f64>,
    /// Mean holding time per jump.
    pub holding: Option<f64>,
    pub replicas: usize,
    pub n_jumps: usize,
    pub seed: Option<u64>,
}

impl SpeedReport {
    pub const CSV_HEADER: [&'static str; 6] = ["label", "estimate", "stderr", "replicas", "n_jumps", "seed"];

    pub fn csv_record(&self) -> [String; 6] {
        [
            self.label.clone(),
            self.speed.to_string(),
            self.stderr.map_or_else(String::new, |s| s.to_string()),
            self.replicas.to_string(),
            self.n_jumps.to_string(),
            self.seed.map_or_else(String::new, |s| s.to_string()),
        ]
    }

    /// |self - other| in units of the combined standard error.
    pub fn z_score(&self, other: &SpeedReport) -> f64 {
        let se = (self.stderr.unwrap_or(0.0).powi(2) + other.stderr.unwrap_or(0.0).powi(2)).sqrt();
        (self.speed - other.speed).abs() / se
    }
}

pub fn write_speed_csv<W: Write>(out: W, reports: &[SpeedReport]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Parameter(format!("csv output failed: {e}"));
    w.write_record(SpeedReport::CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record(r.csv_record()).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parameter(format!("csv output failed: {e}")))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    pub n_jumps: usize,
    pub replicas: usize,
    pub seed: u64,
}

/// Monte Carlo speed: per replica (h(S_T) - h(S_0)) / T after `n_jumps`
/// jumps, averaged over replicas run in parallel.
pub fn mc_speed<D, H>(dynamics: &D, start: &D::State, height: H, opts: McOptions, label: &str) -> Result<SpeedReport>
where
    D: Dynamics,
    H: Fn(&D::State) -> Result<f64> + Sync,
{
    if opts.replicas < 2 {
        return Err(Error::Parameter("mc_speed needs at least 2 replicas".into()));
    }
    if opts.n_jumps == 0 {
        return Err(Error::Parameter("n_jumps must be >= 1".into()));
    }
    let h0 = height(start)?;
    let per_replica: Vec<f64> = (0..opts.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(opts.seed, r);
            let mut state = start.clone();
            let mut shift = 0.0;
            let mut t = 0.0;
            for n in 1..=opts.n_jumps {
                let (hold, next) = step(dynamics, &state, &mut rng)?;
                t += hold;
                state = next;
                if n % 256 == 0 {
                    if let Some((s, h)) = dynamics.recenter(&state) {
                        state = s;
                        shift += h;
                    }
                }
            }
            Ok((height(&state)? + shift - h0) / t)
        })
        .collect::<Result<_>>()?;
    let r = per_replica.len() as f64;
    let mean = per_replica.iter().sum::<f64>() / r;
    let var = per_replica.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(SpeedReport {
        label: label.to_string(),
        provenance: Provenance::MonteCarlo,
        speed: mean,
        stderr: Some((var / r).sqrt()),
        drift: None,
        holding: None,
        replicas: opts.replicas,
        n_jumps: opts.n_jumps,
        seed: Some(opts.seed),
    })
}
