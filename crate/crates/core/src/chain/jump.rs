use std::hash::Hash;

use crate::error::{Error, Result};
use crate::graphs::FiniteNetwork;

/// Embedded discrete chain of a continuous-time network.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpChain {
    /// Total exit rate per vertex.
    pub exit: Vec<f64>,
    /// Jump probabilities p(x, y) = q(x, y) / exit(x).
    pub probs: Vec<Vec<(usize, f64)>>,
    /// Mean holding time 1 / exit(x); infinite for a boundary vertex with no moves.
    pub holding: Vec<f64>,
}

impl JumpChain {
    pub fn len(&self) -> usize {
        self.exit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exit.is_empty()
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x].iter().find(|e| e.0 == y).map_or(0.0, |e| e.1)
    }
}

pub fn jump_chain<L: Clone + Eq + Hash + std::fmt::Display>(net: &FiniteNetwork<L>) -> Result<JumpChain> {
    let n = net.len();
    let mut exit = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    let mut holding = Vec::with_capacity(n);
    for x in 0..n {
        let total = net.exit_rate(x);
        if total <= 0.0 {
            if !net.is_boundary(x) {
                return Err(Error::Absorbing(net.label(x).to_string()));
            }
            exit.push(0.0);
            probs.push(Vec::new());
            holding.push(f64::INFINITY);
            continue;
        }
        exit.push(total);
        probs.push(net.rates(x).iter().map(|&(y, q)| (y, q / total)).collect());
        holding.push(1.0 / total);
    }
    Ok(JumpChain { exit, probs, holding })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{materialize_ball, Limits, Substrate, TreeWithEnd, VertexId};

    #[test]
    fn equal_rates() {
        let labels: Vec<VertexId> = (0..4).map(VertexId::Int).collect();
        let net = FiniteNetwork::from_edges(labels, 0, &[(0, 1, 1.0, 1.0), (0, 2, 1.0, 1.0), (0, 3, 1.0, 1.0)], &[])
            .unwrap();
        let jc = jump_chain(&net).unwrap();
        assert_eq!(jc.probs[0].iter().map(|e| e.1).collect::<Vec<_>>(), vec![1.0 / 3.0; 3]);
        assert_eq!(jc.holding[0], 1.0 / 3.0);
    }

    #[test]
    fn biased_tree_rates_are_probabilities() {
        let t = TreeWithEnd::with_bias(3, 0.3).unwrap();
        let net = materialize_ball(&t, &t.root(), 2, &Limits::default()).unwrap();
        let jc = jump_chain(&net).unwrap();
        let o = net.index_of(&t.root()).unwrap();
        assert!((jc.holding[o] - 1.0).abs() < 1e-15);
        let f = net.index_of(&t.father(&t.root()).unwrap()).unwrap();
        assert!((jc.prob(o, f) - 0.7).abs() < 1e-15);
        for x in net.interior() {
            let s: f64 = jc.probs[x].iter().map(|e| e.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn absorbing_interior_rejected() {
        let labels: Vec<VertexId> = (0..1).map(VertexId::Int).collect();
        let net = FiniteNetwork::from_rows(labels, 0, vec![vec![]], vec![false]).unwrap();
        assert!(matches!(jump_chain(&net), Err(Error::Absorbing(_))));
    }
}
