//! Undirected simple graphs: the families used in experiments and the plain-text
//! edge-list format (`u v` per line, 0-based ids, `#` comments).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a simple graph on `n` vertices. Repeated edges collapse to one; self-loops
    /// are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { adj, edges: set.into_iter().collect() })
    }

    pub fn n_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// Parses the edge-list format. The vertex count is one more than the largest id,
    /// unless `n` is given explicitly (isolated trailing vertices).
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_id = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse { line: i + 1, message: format!("expected \"u v\", got {line:?}") });
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse { line: i + 1, message: format!("bad vertex id {s:?}: {e}") })
            };
            let (u, v) = (parse(fields[0])?, parse(fields[1])?);
            max_id = Some(max_id.unwrap_or(0).max(u).max(v));
            edges.push((u, v));
        }
        let inferred = max_id.map_or(0, |m| m + 1);
        Graph::from_edges(n.unwrap_or(inferred).max(inferred), edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {} vertices, {} edges\n", self.n_vertices(), self.edges.len());
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::from_edges(n, edges).expect("complete graph is simple")
    }

    pub fn cycle(n: usize) -> Self {
        let edges = if n < 2 { vec![] } else { (0..n).map(|u| (u, (u + 1) % n)).collect() };
        Graph::from_edges(n, edges).expect("cycle is simple")
    }

    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|u| (u - 1, u))).expect("path is simple")
    }

    /// Star with centre 0 and `n - 1` leaves.
    pub fn star(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|u| (0, u))).expect("star is simple")
    }

    /// Hypercube `{0,1}^dim`.
    pub fn hypercube(dim: u32) -> Self {
        let n = 1usize << dim;
        let edges = (0..n).flat_map(|u| (0..dim).map(move |b| (u, u ^ (1 << b)))).filter(|&(u, v)| u < v);
        Graph::from_edges(n, edges).expect("hypercube is simple")
    }

    /// Discrete torus `(Z/side)^dim`.
    pub fn torus(dim: u32, side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::invalid("torus side must be at least 2"));
        }
        let n = side.pow(dim);
        let mut edges = Vec::new();
        for u in 0..n {
            let mut stride = 1;
            for _ in 0..dim {
                let coord = (u / stride) % side;
                let v = u - coord * stride + ((coord + 1) % side) * stride;
                edges.push((u, v));
                stride *= side;
            }
        }
        Graph::from_edges(n, edges)
    }

    /// G(n, p) with its own seeded stream.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
        }
        let mut rng = rng::stream(seed, "erdos_renyi", 0);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, edges)
    }
}

/// Named graph family. Families taking a single size read it from the caller
/// (`--n` on the command line); `torus` and `erdos_renyi` carry their parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Complete,
    Cycle,
    Path,
    Star,
    /// Size is the dimension.
    Hypercube,
    Torus { dim: u32, side: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
}

impl Family {
    pub fn build(&self, size: Option<usize>) -> Result<Graph> {
        let need = || size.ok_or_else(|| Error::invalid(format!("family {self} needs a size")));
        match self {
            Family::Complete => Ok(Graph::complete(need()?)),
            Family::Cycle => Ok(Graph::cycle(need()?)),
            Family::Path => Ok(Graph::path(need()?)),
            Family::Star => Ok(Graph::star(need()?)),
            Family::Hypercube => {
                let d = need()?;
                if d > 16 {
                    return Err(Error::invalid("hypercube dimension above 16"));
                }
                Ok(Graph::hypercube(d as u32))
            }
            Family::Torus { dim, side } => Graph::torus(*dim, *side),
            Family::ErdosRenyi { n, p, seed } => Graph::erdos_renyi(*n, *p, *seed),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Complete => write!(f, "complete"),
            Family::Cycle => write!(f, "cycle"),
            Family::Path => write!(f, "path"),
            Family::Star => write!(f, "star"),
            Family::Hypercube => write!(f, "hypercube"),
            Family::Torus { dim, side } => write!(f, "torus({dim},{side})"),
            Family::ErdosRenyi { n, p, seed } => write!(f, "erdos_renyi({n},{p},{seed})"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| Error::invalid(format!("unbalanced parentheses in {s:?}")))?;
                let args: Vec<&str> = close[open + 1..].split(',').map(str::trim).collect();
                (&s[..open], args)
            }
            None => (s, Vec::new()),
        };
        let bad = |what: &str| Error::invalid(format!("family {s:?}: {what}"));
        let arg = |i: usize| args.get(i).copied().ok_or_else(|| bad("missing argument"));
        match (name, args.len()) {
            ("complete", 0) => Ok(Family::Complete),
            ("cycle", 0) => Ok(Family::Cycle),
            ("path", 0) => Ok(Family::Path),
            ("star", 0) => Ok(Family::Star),
            ("hypercube", 0) => Ok(Family::Hypercube),
            ("torus", 2) => Ok(Family::Torus {
                dim: arg(0)?.parse().map_err(|_| bad("bad dimension"))?,
                side: arg(1)?.parse().map_err(|_| bad("bad side"))?,
            }),
            ("erdos_renyi", 3) => Ok(Family::ErdosRenyi {
                n: arg(0)?.parse().map_err(|_| bad("bad n"))?,
                p: arg(1)?.parse().map_err(|_| bad("bad p"))?,
                seed: arg(2)?.parse().map_err(|_| bad("bad seed"))?,
            }),
            _ => Err(bad("unknown family or wrong number of arguments")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_sizes() {
        assert_eq!(Graph::complete(5).edges().len(), 10);
        assert_eq!(Graph::cycle(5).edges().len(), 5);
        assert_eq!(Graph::cycle(2).edges().len(), 1);
        assert_eq!(Graph::star(5).degree(0), 4);
        assert_eq!(Graph::hypercube(3).edges().len(), 12);
        let t = Graph::torus(2, 4).unwrap();
        assert_eq!(t.n_vertices(), 16);
        assert!((0..16).all(|v| t.degree(v) == 4));
        assert!(t.is_connected());
        assert!(!Graph::from_edges(3, [(0, 1)]).unwrap().is_connected());
    }

    #[test]
    fn edge_list_parses_comments_and_rejects_garbage() {
        let g = Graph::parse_edge_list("# a triangle\n0 1\n1 2 # trailing\n\n2 0\n", None).unwrap();
        assert_eq!(g, Graph::complete(3));
        assert!(matches!(Graph::parse_edge_list("0 1\n1\n", None), Err(Error::Parse { line: 2, .. })));
        assert!(Graph::parse_edge_list("0 0\n", None).is_err());
        let round = Graph::parse_edge_list(&g.to_edge_list(), None).unwrap();
        assert_eq!(round, g);
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("torus(2,4)".parse::<Family>().unwrap(), Family::Torus { dim: 2, side: 4 });
        assert_eq!(
            "erdos_renyi(10, 0.5, 3)".parse::<Family>().unwrap(),
            Family::ErdosRenyi { n: 10, p: 0.5, seed: 3 }
        );
        assert!("wheel".parse::<Family>().is_err());
        assert!("torus(2)".parse::<Family>().is_err());
        assert_eq!(Family::Cycle.build(Some(6)).unwrap(), Graph::cycle(6));
        assert!(Family::Complete.build(None).is_err());
    }
}
