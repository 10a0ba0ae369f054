use std::collections::HashMap;

use super::config::Config;
use crate::error::{Error, Result};
use crate::graphs::{FiniteNetwork, Substrate, VertexId};

/// Global position of a configuration: the leg closest to the network root,
/// ties broken by the smallest index in `enumeration`.
pub fn global_position(cfg: &Config, net: &FiniteNetwork, enumeration: &[VertexId]) -> Result<VertexId> {
    let dist = net.bfs(net.root());
    let rank: HashMap<&VertexId, usize> = enumeration.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut best: Option<(usize, usize, &VertexId)> = None;
    for leg in cfg.legs() {
        let i = net.index_of(leg).ok_or_else(|| Error::NotFound(leg.to_string()))?;
        let d = dist[i].ok_or_else(|| Error::NotFound(format!("{leg} is not connected to the root")))?;
        let r = *rank.get(leg).ok_or_else(|| Error::NotFound(format!("{leg} missing from enumeration")))?;
        if best.is_none_or(|(bd, br, _)| (d, r) < (bd, br)) {
            best = Some((d, r, leg));
        }
    }
    Ok(best.expect("configs have at least one leg").2.clone())
}

/// The enumeration 0, 1, -1, 2, -2, ... of the integers up to `n`.
pub fn integer_enumeration(n: i64) -> Vec<VertexId> {
    let mut out = vec![VertexId::Int(0)];
    for x in 1..=n {
        out.push(VertexId::Int(x));
        out.push(VertexId::Int(-x));
    }
    out
}

/// Height of the midpoint of the geodesic between the two legs of `cfg` on a
/// tree substrate. For odd leg distance the midpoint is the middle of an edge
/// and its height is the mean of the two end heights.
pub fn midpoint_height(cfg: &Config, sub: &dyn Substrate) -> Result<f64> {
    if cfg.k() != 2 {
        return Err(Error::Parameter(format!("midpoint height needs 2 legs, got {}", cfg.k())));
    }
    let tree = sub
        .tree()
        .ok_or_else(|| Error::Parameter(format!("midpoint height needs a tree substrate, got {}", sub.name())))?;
    let (a, b) = (cfg.leg(0), cfg.leg(1));
    let h1 = sub.height(a).ok_or_else(|| Error::Height(a.to_string()))?;
    let (up, down) = tree.confluence(a, b);
    let top = h1 - up as f64;
    let at = |t: u64| if t <= up { h1 - t as f64 } else { top + (t - up) as f64 };
    let l = up + down;
    Ok(if l % 2 == 0 { at(l / 2) } else { 0.5 * (at(l / 2) + at(l / 2 + 1)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{materialize_ball, Limits, Line, ProductZ3Z, RootedTree, TreeWithEnd};

    fn end(up: u32, word: &[u8]) -> VertexId {
        VertexId::End { up, word: word.to_vec() }
    }

    #[test]
    fn global_position_line() {
        let line = Line::new(0.5, 0.5).unwrap();
        let net = materialize_ball(&line, &VertexId::Int(0), 6, &Limits::default()).unwrap();
        let en = integer_enumeration(6);
        assert_eq!(global_position(&Config::from_ints(&[3, 5]).unwrap(), &net, &en).unwrap(), VertexId::Int(3));
        assert_eq!(global_position(&Config::from_ints(&[-2, 2]).unwrap(), &net, &en).unwrap(), VertexId::Int(2));
        assert_eq!(global_position(&Config::from_ints(&[2, -2]).unwrap(), &net, &en).unwrap(), VertexId::Int(2));
        // the ball's own BFS order is the same enumeration
        assert_eq!(&net.labels()[..5], &en[..5]);
    }

    #[test]
    fn global_position_tree() {
        let t = RootedTree::new(3).unwrap();
        let net = materialize_ball(&t, &t.root(), 4, &Limits::default()).unwrap();
        let x = VertexId::Rooted(vec![1, 0, 1]);
        let father = VertexId::Rooted(vec![1, 0]);
        let cfg = Config::new(vec![x, father.clone()]).unwrap();
        assert_eq!(global_position(&cfg, &net, net.labels()).unwrap(), father);
    }

    #[test]
    fn midpoint_examples() {
        let t = TreeWithEnd::simple(3).unwrap();
        // heights 2 and 4 on one geodesic
        let cfg = Config::new(vec![end(0, &[1, 1]), end(0, &[1, 1, 0, 1])]).unwrap();
        assert_eq!(midpoint_height(&cfg, &t).unwrap(), 3.0);
        // adjacent legs at heights 2 and 3
        let cfg = Config::new(vec![end(0, &[1, 1]), end(0, &[1, 1, 0])]).unwrap();
        assert_eq!(midpoint_height(&cfg, &t).unwrap(), 2.5);
        // both at height 5, confluent at height 3
        let cfg = Config::new(vec![end(0, &[1, 1, 1, 0, 0]), end(0, &[1, 1, 1, 1, 0])]).unwrap();
        assert_eq!(midpoint_height(&cfg, &t).unwrap(), 3.0);
    }

    #[test]
    fn midpoint_rejects_non_tree() {
        let g = ProductZ3Z;
        let cfg = Config::new(vec![VertexId::Product { u: 0, x: 0 }, VertexId::Product { u: 1, x: 0 }]).unwrap();
        assert!(midpoint_height(&cfg, &g).is_err());
    }
}
