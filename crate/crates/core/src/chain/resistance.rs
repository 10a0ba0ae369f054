use std::fmt::Display;
use std::hash::Hash;

use super::linalg::SparseMatrix;
use super::reversible::{reversible_measure, ReversibleStructure};
use crate::error::{Error, Result};
use crate::graphs::FiniteNetwork;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResistanceSolution {
    pub resistance: f64,
    /// Number of free potentials solved for.
    pub unknowns: usize,
    /// max |L v - b| relative to the source potential.
    pub residual: f64,
}

/// Effective resistance between `source` and the set `sinks`.
pub fn effective_resistance<L: Clone + Eq + Hash + Display>(
    net: &FiniteNetwork<L>,
    source: &L,
    sinks: &[L],
) -> Result<ResistanceSolution> {
    let rs = reversible_measure(net)?;
    let s = net.index_of(source).ok_or_else(|| Error::NotFound(source.to_string()))?;
    let t = sinks
        .iter()
        .map(|l| net.index_of(l).ok_or_else(|| Error::NotFound(l.to_string())))
        .collect::<Result<Vec<_>>>()?;
    resistance_between(&rs, s, &t)
}

/// Effective resistance on the electrical network of `rs`, by a direct solve
/// of the grounded conductance Laplacian.
pub fn resistance_between(rs: &ReversibleStructure, source: usize, sinks: &[usize]) -> Result<ResistanceSolution> {
    let n = rs.mu.len();
    if sinks.is_empty() {
        return Err(Error::Parameter("sink set is empty".into()));
    }
    if sinks.contains(&source) {
        return Err(Error::Parameter("source lies in the sink set".into()));
    }
    let mut sink = vec![false; n];
    for &t in sinks {
        sink[t] = true;
    }
    // only the component of the source matters
    let mut seen = vec![false; n];
    let mut stack = vec![source];
    seen[source] = true;
    let mut hits_sink = false;
    while let Some(x) = stack.pop() {
        for &(y, _) in &rs.conductance[x] {
            if !seen[y] {
                seen[y] = true;
                if sink[y] {
                    hits_sink = true;
                } else {
                    stack.push(y);
                }
            }
        }
    }
    if !hits_sink {
        return Err(Error::Singular("source is disconnected from the sinks".into()));
    }
    // unit current in at the source, sinks grounded: R is the source
    // potential. Farthest vertices are eliminated first, which on trees and
    // thin graphs creates no fill.
    let depth = bfs_depth(rs, source);
    let mut unknown: Vec<usize> = (0..n).filter(|&x| seen[x] && !sink[x]).collect();
    unknown.sort_by_key(|&x| (std::cmp::Reverse(depth[x]), x));
    let mut slot = vec![usize::MAX; n];
    for (k, &x) in unknown.iter().enumerate() {
        slot[x] = k;
    }
    let rows = unknown
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let mut row: Vec<(usize, f64)> =
                rs.conductance[x].iter().filter(|&&(y, _)| !sink[y]).map(|&(y, c)| (slot[y], -c)).collect();
            row.push((k, rs.conductance[x].iter().map(|e| e.1).sum()));
            row
        })
        .collect();
    let a = SparseMatrix::from_rows(rows);
    let mut rhs = vec![0.0; unknown.len()];
    rhs[slot[source]] = 1.0;
    let v = a.solve_direct(std::slice::from_ref(&rhs))?.remove(0);
    let resistance = v[slot[source]];
    if !(resistance.is_finite() && resistance > 0.0) {
        return Err(Error::Singular(format!("non-positive resistance {resistance:e}")));
    }
    Ok(ResistanceSolution { resistance, unknowns: unknown.len(), residual: a.residual(&v, &rhs) / resistance })
}

fn bfs_depth(rs: &ReversibleStructure, source: usize) -> Vec<usize> {
    let mut depth = vec![usize::MAX; rs.mu.len()];
    depth[source] = 0;
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &rs.conductance[x] {
            if depth[y] == usize::MAX {
                depth[y] = depth[x] + 1;
                queue.push_back(y);
            }
        }
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{materialize_ball, Limits, RootedTree, Substrate, VertexId};
    use proptest::prelude::*;

    fn path(n: usize) -> FiniteNetwork {
        let labels: Vec<VertexId> = (0..=n as i64).map(VertexId::Int).collect();
        let edges: Vec<_> = (0..n).map(|i| (i, i + 1, 1.0, 1.0)).collect();
        FiniteNetwork::from_edges(labels, 0, &edges, &[n]).unwrap()
    }

    #[test]
    fn series_law() {
        for n in [1, 2, 7, 40] {
            let net = path(n);
            let r = effective_resistance(&net, &VertexId::Int(0), &[VertexId::Int(n as i64)]).unwrap();
            assert!((r.resistance - n as f64).abs() < 1e-12 * n as f64, "n={n}: {}", r.resistance);
        }
    }

    #[test]
    fn long_path_is_fast_and_exact() {
        let n = 200_000;
        let net = path(n);
        let r = effective_resistance(&net, &VertexId::Int(0), &[VertexId::Int(n as i64)]).unwrap();
        // the grounded path Laplacian has condition number ~ n^2
        assert!((r.resistance - n as f64).abs() < 1e-6 * n as f64, "{r:?}");
        assert_eq!(r.unknowns, n);
    }

    #[test]
    fn rooted_tree_series_parallel() {
        let t = RootedTree::new(3).unwrap();
        for depth in 1..=6usize {
            let net = materialize_ball(&t, &t.root(), depth, &Limits::default()).unwrap();
            let sinks: Vec<VertexId> = net.boundary_indices().iter().map(|&i| net.label(i).clone()).collect();
            let r = effective_resistance(&net, &t.root(), &sinks).unwrap();
            // level 1 has 3 parallel edges, deeper levels double
            let exact = (2.0 / 3.0) * (1.0 - 0.5f64.powi(depth as i32));
            assert!((r.resistance - exact).abs() < 1e-12, "depth {depth}");
        }
    }

    #[test]
    fn disconnected_sink() {
        let rs = ReversibleStructure {
            mu: vec![1.0; 4],
            pi: vec![1.0; 4],
            conductance: vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![(3, 1.0)], vec![(2, 1.0)]],
        };
        assert!(matches!(resistance_between(&rs, 0, &[3]), Err(Error::Singular(_))));
        assert!(matches!(resistance_between(&rs, 0, &[0]), Err(Error::Parameter(_))));
        assert!((resistance_between(&rs, 0, &[1]).unwrap().resistance - 1.0).abs() < 1e-15);
    }

    /// Brute-force resistance by dense Gaussian elimination.
    fn dense_resistance(n: usize, edges: &[(usize, usize, f64)], s: usize, t: usize) -> f64 {
        let mut lap = nalgebra::DMatrix::<f64>::zeros(n, n);
        for &(i, j, c) in edges {
            lap[(i, i)] += c;
            lap[(j, j)] += c;
            lap[(i, j)] -= c;
            lap[(j, i)] -= c;
        }
        // ground t, inject unit current at s
        let keep: Vec<usize> = (0..n).filter(|&i| i != t).collect();
        let m = nalgebra::DMatrix::from_fn(n - 1, n - 1, |a, b| lap[(keep[a], keep[b])]);
        let mut b = nalgebra::DVector::zeros(n - 1);
        b[keep.iter().position(|&i| i == s).unwrap()] = 1.0;
        let v = m.lu().solve(&b).unwrap();
        v[keep.iter().position(|&i| i == s).unwrap()]
    }

    proptest! {
        #[test]
        fn rayleigh_monotonicity(
            extra in proptest::collection::vec((0usize..7, 0usize..7, 0.1f64..3.0), 0..10),
            bump in 0usize..16,
            factor in 1.0f64..4.0,
        ) {
            let n = 7;
            // spanning path plus random chords, merged
            let mut map = std::collections::BTreeMap::new();
            for i in 0..n - 1 {
                map.insert((i, i + 1), 1.0 + i as f64 * 0.25);
            }
            for (a, b, c) in extra {
                if a != b {
                    *map.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
                }
            }
            let edges: Vec<(usize, usize, f64)> = map.into_iter().map(|((a, b), c)| (a, b, c)).collect();
            let build = |edges: &[(usize, usize, f64)]| {
                let labels: Vec<VertexId> = (0..n as i64).map(VertexId::Int).collect();
                let e: Vec<_> = edges.iter().map(|&(a, b, c)| (a, b, c, c)).collect();
                let net = FiniteNetwork::from_edges(labels, 0, &e, &[]).unwrap();
                effective_resistance(&net, &VertexId::Int(0), &[VertexId::Int(n as i64 - 1)]).unwrap().resistance
            };
            let r0 = build(&edges);
            prop_assert!((r0 - dense_resistance(n, &edges, 0, n - 1)).abs() < 1e-9 * r0);
            let mut bumped = edges.clone();
            let k = bump % bumped.len();
            bumped[k].2 *= factor;
            let r1 = build(&bumped);
            prop_assert!(r1 <= r0 * (1.0 + 1e-9));
        }
    }
}
