use std::collections::VecDeque;
use std::fmt::Display;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::graphs::FiniteNetwork;

/// Relative tolerance for the cycle consistency test.
pub const REVERSIBILITY_TOLERANCE: f64 = 1e-9;

/// Reversible measure and the induced electrical network.
#[derive(Clone, Debug)]
pub struct ReversibleStructure {
    /// Continuous-time reversible measure, normalised by mu(root) = 1.
    pub mu: Vec<f64>,
    /// pi(x) = exit(x) mu(x), reversible for the jump chain.
    pub pi: Vec<f64>,
    /// Symmetric conductances c(x, y) = mu(x) q(x, y), per vertex row.
    pub conductance: Vec<Vec<(usize, f64)>>,
}

impl ReversibleStructure {
    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.conductance[x].iter().find(|e| e.0 == y).map_or(0.0, |e| e.1)
    }

    pub fn resistance(&self, x: usize, y: usize) -> f64 {
        1.0 / self.conductance(x, y)
    }
}

/// Propagate mu along a BFS spanning tree from the root and test every
/// remaining edge against detailed balance.
pub fn reversible_measure<L: Clone + Eq + Hash + Display>(net: &FiniteNetwork<L>) -> Result<ReversibleStructure> {
    reversible_measure_with(net, REVERSIBILITY_TOLERANCE)
}

pub fn reversible_measure_with<L: Clone + Eq + Hash + Display>(
    net: &FiniteNetwork<L>,
    tol: f64,
) -> Result<ReversibleStructure> {
    let n = net.len();
    let root = net.root();
    let mut mu = vec![f64::NAN; n];
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    mu[root] = 1.0;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &(y, qxy) in net.rates(x) {
            if mu[y].is_nan() {
                mu[y] = mu[x] * qxy / net.rate(y, x);
                parent[y] = x;
                depth[y] = depth[x] + 1;
                queue.push_back(y);
            }
        }
    }
    if let Some(x) = mu.iter().position(|m| m.is_nan()) {
        return Err(Error::Network(format!("vertex {} is not connected to the root", net.label(x))));
    }
    for x in 0..n {
        for &(y, qxy) in net.rates(x) {
            if y < x || parent[y] == x || parent[x] == y {
                continue;
            }
            let a = mu[x] * qxy;
            let b = mu[y] * net.rate(y, x);
            let mismatch = (a - b).abs() / a.max(b);
            if mismatch > tol {
                return Err(Error::NonReversible { cycle: name_cycle(net, &parent, &depth, x, y), mismatch });
            }
        }
    }
    let pi = (0..n).map(|x| mu[x] * net.exit_rate(x)).collect();
    let conductance = (0..n)
        .map(|x| net.rates(x).iter().map(|&(y, qxy)| (y, 0.5 * (mu[x] * qxy + mu[y] * net.rate(y, x)))).collect())
        .collect();
    Ok(ReversibleStructure { mu, pi, conductance })
}

/// The fundamental cycle closed by the non-tree edge x-y.
fn name_cycle<L: Clone + Eq + Hash + Display>(
    net: &FiniteNetwork<L>,
    parent: &[usize],
    depth: &[usize],
    x: usize,
    y: usize,
) -> String {
    let (mut a, mut b) = (x, y);
    let (mut left, mut right) = (vec![a], vec![b]);
    while a != b {
        if depth[a] >= depth[b] {
            a = parent[a];
            left.push(a);
        } else {
            b = parent[b];
            right.push(b);
        }
    }
    right.pop();
    left.extend(right.into_iter().rev());
    left.push(x);
    left.iter().map(|&i| net.label(i).to_string()).collect::<Vec<_>>().join(" -> ")
}

/// Largest relative violation of mu(x) q(x,y) = mu(y) q(y,x) over all edges.
pub fn detailed_balance_residual<L: Clone + Eq + Hash>(net: &FiniteNetwork<L>, rs: &ReversibleStructure) -> f64 {
    let mut worst = 0.0f64;
    for x in 0..net.len() {
        for &(y, qxy) in net.rates(x) {
            let a = rs.mu[x] * qxy;
            let b = rs.mu[y] * net.rate(y, x);
            worst = worst.max((a - b).abs() / a.max(b));
        }
    }
    worst
}
