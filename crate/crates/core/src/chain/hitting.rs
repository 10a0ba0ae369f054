use std::collections::VecDeque;
use std::fmt::Display;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::jump::{jump_chain, JumpChain};
use super::linalg::SparseMatrix;
use crate::error::{Error, Result};
use crate::graphs::FiniteNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitMode {
    /// Time until the first visit to B, zero when starting inside B.
    Hit,
    /// Time until the first visit to B after at least one jump.
    Return,
}

/// Expected hitting or return times, per start vertex. Entries are NaN for
/// vertices where the value is not defined (boundary vertices, and vertices
/// outside B in return mode).
#[derive(Clone, Debug)]
pub struct HittingTimeReport {
    pub target: Vec<usize>,
    pub mode: HitMode,
    /// Jump-chain steps.
    pub steps: Vec<f64>,
    /// Continuous time: steps weighted by holding times.
    pub time: Vec<f64>,
    /// max |m_x - 1 - sum_y p(x,y) m_y| over the solved equations.
    pub residual: f64,
}

pub fn hitting_times<L: Clone + Eq + Hash + Display>(
    net: &FiniteNetwork<L>,
    target: &[usize],
    mode: HitMode,
) -> Result<HittingTimeReport> {
    let jc = jump_chain(net)?;
    hitting_times_with(net, &jc, target, mode)
}

pub fn hitting_times_with<L: Clone + Eq + Hash + Display>(
    net: &FiniteNetwork<L>,
    jc: &JumpChain,
    target: &[usize],
    mode: HitMode,
) -> Result<HittingTimeReport> {
    let n = net.len();
    if target.is_empty() {
        return Err(Error::Parameter("target set is empty".into()));
    }
    let mut in_b = vec![false; n];
    for &b in target {
        if b >= n {
            return Err(Error::Parameter(format!("target index {b} out of range")));
        }
        in_b[b] = true;
    }
    // unknowns: interior vertices outside B
    let unknown: Vec<usize> = (0..n).filter(|&x| !in_b[x] && !net.is_boundary(x)).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &x) in unknown.iter().enumerate() {
        slot[x] = k;
    }
    let needs_values = |x: usize| !in_b[x] && !net.is_boundary(x) || (mode == HitMode::Return && in_b[x]);
    for x in (0..n).filter(|&x| needs_values(x)) {
        if let Some(&(y, _)) = jc.probs[x].iter().find(|&&(y, _)| !in_b[y] && net.is_boundary(y)) {
            return Err(Error::Truncation(format!(
                "{} can jump to boundary vertex {} outside the target",
                net.label(x),
                net.label(y)
            )));
        }
    }
    check_reachable(net, jc, &in_b, &unknown)?;

    let rows: Vec<Vec<(usize, f64)>> = unknown
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let mut row = vec![(k, 1.0)];
            for &(y, p) in &jc.probs[x] {
                if slot[y] != usize::MAX {
                    row.push((slot[y], -p));
                }
            }
            row
        })
        .collect();
    let a = SparseMatrix::from_rows(rows);
    let ones = vec![1.0; unknown.len()];
    let hold: Vec<f64> = unknown.iter().map(|&x| jc.holding[x]).collect();
    let (m, t) = if unknown.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let mut sol = a.solve_direct(&[ones.clone(), hold.clone()])?;
        let t = sol.pop().expect("two solutions");
        (sol.pop().expect("two solutions"), t)
    };
    let residual = a.residual(&m, &ones).max(a.residual(&t, &hold) / hold.iter().fold(1.0f64, |a, h| a.max(*h)));

    let mut steps = vec![f64::NAN; n];
    let mut time = vec![f64::NAN; n];
    for (k, &x) in unknown.iter().enumerate() {
        steps[x] = m[k];
        time[x] = t[k];
    }
    let value = |v: &[f64], y: usize| if in_b[y] { 0.0 } else { v[y] };
    for &b in target {
        match mode {
            HitMode::Hit => {
                steps[b] = 0.0;
                time[b] = 0.0;
            }
            HitMode::Return => {
                if net.is_boundary(b) {
                    continue;
                }
                steps[b] = 1.0 + jc.probs[b].iter().map(|&(y, p)| p * value(&steps, y)).sum::<f64>();
                time[b] = jc.holding[b] + jc.probs[b].iter().map(|&(y, p)| p * value(&time, y)).sum::<f64>();
            }
        }
    }
    Ok(HittingTimeReport { target: target.to_vec(), mode, steps, time, residual })
}

/// Every unknown must reach B through unknowns.
fn check_reachable<L: Clone + Eq + Hash + Display>(
    net: &FiniteNetwork<L>,
    jc: &JumpChain,
    in_b: &[bool],
    unknown: &[usize],
) -> Result<()> {
    let n = net.len();
    // support is symmetric, so reverse reachability is forward reachability
    let mut reached = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&x| in_b[x]).collect();
    for &b in &queue {
        reached[b] = true;
    }
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &jc.probs[x] {
            if !reached[y] && !in_b[y] && !net.is_boundary(y) && jc.prob(y, x) > 0.0 {
                reached[y] = true;
                queue.push_back(y);
            }
        }
        // vertices in B may have no outgoing moves in the jump chain but
        // are still entered from their neighbours
        if in_b[x] {
            for &(y, _) in net.rates(x) {
                if !reached[y] && !in_b[y] && !net.is_boundary(y) {
                    reached[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    let stuck: Vec<String> = unknown.iter().filter(|&&x| !reached[x]).map(|&x| net.label(x).to_string()).collect();
    if stuck.is_empty() {
        Ok(())
    } else {
        Err(Error::Unreachable(stuck))
    }
}
