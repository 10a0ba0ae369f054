use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::Substrate;
use crate::spider::Config;

/// Steps from each leg of a 2-leg tree configuration up to their confluent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConfluenceKey {
    pub i: u64,
    pub j: u64,
}

/// Leg distance l and height difference k of a 2-leg tree configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub l: u64,
    pub k: u64,
}

impl fmt::Display for ConfluenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.i, self.j)
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.l, self.k)
    }
}

impl From<ConfluenceKey> for PairKey {
    fn from(c: ConfluenceKey) -> Self {
        PairKey { l: c.i + c.j, k: c.i.abs_diff(c.j) }
    }
}

pub fn confluence_key(cfg: &Config, sub: &dyn Substrate) -> Result<ConfluenceKey> {
    if cfg.k() != 2 {
        return Err(Error::Parameter(format!("pair keys need 2 legs, got {}", cfg.k())));
    }
    let tree = sub
        .tree()
        .ok_or_else(|| Error::Parameter(format!("pair keys need a tree substrate, got {}", sub.name())))?;
    let (i, j) = tree.confluence(cfg.leg(0), cfg.leg(1));
    if i == u64::MAX {
        return Err(Error::Address(cfg.to_string()));
    }
    Ok(ConfluenceKey { i, j })
}

pub fn pair_key(cfg: &Config, sub: &dyn Substrate) -> Result<PairKey> {
    confluence_key(cfg, sub).map(PairKey::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{TreeWithEnd, VertexId};

    #[test]
    fn keys_of_simple_configs() {
        let t = TreeWithEnd::simple(3).unwrap();
        let o = t.root();
        let f = t.father(&o).unwrap();
        let cfg = Config::new(vec![o.clone(), f]).unwrap();
        assert_eq!(confluence_key(&cfg, &t).unwrap(), ConfluenceKey { i: 1, j: 0 });
        assert_eq!(pair_key(&cfg, &t).unwrap(), PairKey { l: 1, k: 1 });
        let sons = t.sons(&o);
        let cfg = Config::new(sons.clone()).unwrap();
        assert_eq!(pair_key(&cfg, &t).unwrap(), PairKey { l: 2, k: 0 });
        assert_eq!(pair_key(&cfg, &t).unwrap().to_string(), "(2,0)");
        let cfg = Config::new(vec![VertexId::Int(0), VertexId::Int(1)]).unwrap();
        assert!(pair_key(&cfg, &crate::graphs::Line::new(0.5, 0.5).unwrap()).is_err());
    }
}
