use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::families::{Limits, Substrate};
use super::vertex::VertexId;
use crate::error::{Error, Result};

/// An explicit finite network: labelled vertices, sparse transition rates,
/// a root and boundary marks (vertices whose neighbourhood was cut off by
/// truncation).
#[derive(Clone, Debug)]
pub struct FiniteNetwork<L = VertexId> {
    labels: Vec<L>,
    index: HashMap<L, usize>,
    root: usize,
    out: Vec<Vec<(usize, f64)>>,
    boundary: Vec<bool>,
}

impl<L: Clone + Eq + Hash + fmt::Display> FiniteNetwork<L> {
    /// Build from per-vertex outgoing rate rows. Checks adaptedness
    /// (q(x,y) > 0 iff q(y,x) > 0), the absence of self-rates and that all
    /// rates are finite and positive.
    pub fn from_rows(labels: Vec<L>, root: usize, rows: Vec<Vec<(usize, f64)>>, boundary: Vec<bool>) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n || boundary.len() != n {
            return Err(Error::Network("row/boundary count does not match vertex count".into()));
        }
        if root >= n {
            return Err(Error::Network(format!("root index {root} out of range")));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Network(format!("duplicate vertex {l}")));
            }
        }
        let mut out = rows;
        for row in out.iter_mut() {
            row.sort_by_key(|e| e.0);
        }
        let net = FiniteNetwork { labels, index, root, out, boundary };
        net.check_structure()?;
        Ok(net)
    }

    /// Build from undirected edges `(i, j, q_ij, q_ji)`.
    pub fn from_edges(labels: Vec<L>, root: usize, edges: &[(usize, usize, f64, f64)], boundary: &[usize]) -> Result<Self> {
        let n = labels.len();
        let mut rows = vec![Vec::new(); n];
        for &(i, j, qij, qji) in edges {
            if i >= n || j >= n {
                return Err(Error::Network(format!("edge ({i},{j}) out of range")));
            }
            rows[i].push((j, qij));
            rows[j].push((i, qji));
        }
        let mut flags = vec![false; n];
        for &b in boundary {
            *flags.get_mut(b).ok_or_else(|| Error::Network(format!("boundary index {b} out of range")))? = true;
        }
        Self::from_rows(labels, root, rows, flags)
    }

    fn check_structure(&self) -> Result<()> {
        for (i, row) in self.out.iter().enumerate() {
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Network(format!("duplicate edge {} -> {}", self.labels[i], self.labels[w[0].0])));
                }
            }
            for &(j, q) in row {
                if j >= self.len() {
                    return Err(Error::Network(format!("edge target {j} out of range")));
                }
                if j == i {
                    return Err(Error::Network(format!("self-rate at {}", self.labels[i])));
                }
                if !(q.is_finite() && q > 0.0) {
                    return Err(Error::Network(format!(
                        "rate {} -> {} must be finite and positive, got {q}",
                        self.labels[i], self.labels[j]
                    )));
                }
                if self.rate(j, i) <= 0.0 {
                    return Err(Error::Network(format!(
                        "support not symmetric: q({}, {}) > 0 but reverse is 0",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<L: Clone + Eq + Hash> FiniteNetwork<L> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &L {
        &self.labels[i]
    }

    pub fn index_of(&self, l: &L) -> Option<usize> {
        self.index.get(l).copied()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Outgoing rates of `i`, sorted by target index.
    pub fn rates(&self, i: usize) -> &[(usize, f64)] {
        &self.out[i]
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        match self.out[i].binary_search_by_key(&j, |e| e.0) {
            Ok(k) => self.out[i][k].1,
            Err(_) => 0.0,
        }
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.out[i].iter().map(|e| e.1).sum()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.boundary[i])
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.boundary[i]).collect()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Breadth-first distances from `source` along positive-rate edges.
    pub fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        self.bfs_from(&[source])
    }

    /// Distance to the nearest of `sources`.
    pub fn bfs_from(&self, sources: &[usize]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        for &s in sources {
            dist[s] = Some(0);
        }
        let mut queue: VecDeque<usize> = sources.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for &(y, _) in &self.out[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// True iff the non-boundary vertices induce a connected subgraph.
    pub fn interior_connected(&self) -> bool {
        let Some(start) = self.interior().next() else { return true };
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.out[x] {
                if !self.boundary[y] && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        self.interior().all(|i| seen[i])
    }
}

impl<L: Clone + Eq + Hash + fmt::Display> FiniteNetwork<L> {
    /// Graph distance between two labelled vertices; `Ok(None)` when they
    /// are not connected.
    pub fn distance(&self, x: &L, y: &L) -> Result<Option<usize>> {
        let i = self.index_of(x).ok_or_else(|| Error::NotFound(x.to_string()))?;
        let j = self.index_of(y).ok_or_else(|| Error::NotFound(y.to_string()))?;
        Ok(self.bfs(i)[j])
    }
}

/// JSON document for finite networks.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub vertices: Vec<String>,
    pub root: usize,
    /// `[i, j, q_ij, q_ji]`, one entry per undirected edge with i < j.
    pub edges: Vec<(usize, usize, f64, f64)>,
    pub boundary: Vec<usize>,
}

impl<L> FiniteNetwork<L>
where
    L: Clone + Eq + Hash + fmt::Display + FromStr<Err = Error>,
{
    pub fn to_document(&self) -> NetworkDocument {
        let mut edges = Vec::with_capacity(self.edge_count());
        for i in 0..self.len() {
            for &(j, q) in &self.out[i] {
                if i < j {
                    edges.push((i, j, q, self.rate(j, i)));
                }
            }
        }
        NetworkDocument {
            vertices: self.labels.iter().map(ToString::to_string).collect(),
            root: self.root,
            edges,
            boundary: self.boundary_indices(),
        }
    }

    pub fn from_document(doc: &NetworkDocument) -> Result<Self> {
        let labels = doc.vertices.iter().map(|s| s.parse()).collect::<Result<Vec<L>>>()?;
        Self::from_edges(labels, doc.root, &doc.edges, &doc.boundary)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }
}

/// All vertices within graph distance `radius` of `center`, with rates
/// copied from the oracle. Vertices at distance exactly `radius` are
/// boundary-flagged.
pub fn materialize_ball(sub: &dyn Substrate, center: &VertexId, radius: usize, limits: &Limits) -> Result<FiniteNetwork> {
    if radius < 1 {
        return Err(Error::Parameter("ball radius must be >= 1".into()));
    }
    if !sub.contains(center) {
        return Err(Error::NotFound(center.to_string()));
    }
    let mut labels = vec![center.clone()];
    let mut index = HashMap::from([(center.clone(), 0usize)]);
    let mut dist = vec![0usize];
    let mut neighbors = Vec::new();
    let mut head = 0;
    while head < labels.len() {
        let v = labels[head].clone();
        let d = dist[head];
        let nb = sub.neighbors(&v);
        if nb.len() > limits.max_degree {
            return Err(Error::Size { what: format!("degree of {v}"), count: nb.len(), cap: limits.max_degree });
        }
        if d < radius {
            for n in &nb {
                if !index.contains_key(&n.vertex) {
                    if labels.len() >= limits.max_vertices {
                        return Err(Error::Size { what: "ball".into(), count: labels.len() + 1, cap: limits.max_vertices });
                    }
                    index.insert(n.vertex.clone(), labels.len());
                    labels.push(n.vertex.clone());
                    dist.push(d + 1);
                }
            }
        }
        neighbors.push(nb);
        head += 1;
    }
    let rows = neighbors
        .into_iter()
        .map(|nb| nb.into_iter().filter_map(|n| index.get(&n.vertex).map(|&j| (j, n.forward))).collect())
        .collect();
    let boundary = dist.iter().map(|&d| d == radius).collect();
    FiniteNetwork::from_rows(labels, 0, rows, boundary)
}
