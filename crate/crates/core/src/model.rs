//! Euclidean embedded graphs and the power-law systems they generate.
//!
//! An [`EGraph`] is a finite directed graph whose vertices are distinct points
//! of ℝⁿ. Each edge `s -> t` contributes the monomial term `k · x^s · (t - s)`
//! to the generated right-hand side.

use std::collections::{HashMap, VecDeque};

use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::linalg::{independent_rows, null_space};
use crate::scalar::{add, is_zero_vec, sub, vec_eq, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct EGraph<T> {
    dim: usize,
    vertices: Vec<Vec<T>>,
    edges: Vec<(usize, usize)>,
}

/// One monomial term `rate · x^exponent · direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T> {
    pub exponent: Vec<T>,
    pub direction: Vec<T>,
    pub rate: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem<T> {
    dim: usize,
    terms: Vec<Term<T>>,
}

/// Decomposition of a weakly reversible graph into directed cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleCover<T> {
    /// Vertex indices of each cycle, rotated to start at the smallest index.
    pub cycles: Vec<Vec<usize>>,
    /// Edge indices of each cycle; `cycle_edges[c][i]` joins `cycles[c][i]` to its successor.
    pub cycle_edges: Vec<Vec<usize>>,
    /// For each edge, the `(cycle, fraction)` pairs sharing its rate.
    pub weights: Vec<Vec<(usize, T)>>,
}

/// The edge space S and a basis of its orthogonal complement.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSpace<T> {
    pub span: Vec<Vec<T>>,
    pub complement: Vec<Vec<T>>,
}

impl<T: Scalar> EGraph<T> {
    pub fn new(dim: usize, vertices: Vec<Vec<T>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGraph("dimension must be positive".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidGraph(format!(
                    "vertex {i} has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
            if let Some(j) = vertices[..i].iter().position(|w| vec_eq(v, w)) {
                return Err(Error::InvalidGraph(format!("vertices {j} and {i} coincide")));
            }
        }
        for (e, &(s, t)) in edges.iter().enumerate() {
            if s >= vertices.len() || t >= vertices.len() {
                return Err(Error::InvalidGraph(format!(
                    "edge {e} references a missing vertex"
                )));
            }
            if s == t {
                return Err(Error::InvalidGraph(format!("edge {e} is a self-loop")));
            }
            if edges[..e].contains(&(s, t)) {
                return Err(Error::InvalidGraph(format!("edge {e} is a duplicate")));
            }
        }
        Ok(Self {
            dim,
            vertices,
            edges,
        })
    }

    /// The canonical graph generating a term list: vertices `{s_i} ∪ {s_i + v_i}`
    /// in order of first appearance, one edge `s_i -> s_i + v_i` per term.
    pub fn from_terms(terms: &[(Vec<T>, Vec<T>)]) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidGraph("empty term list".into()));
        };
        let dim = first.0.len();
        let mut vertices: Vec<Vec<T>> = Vec::new();
        let mut edges = Vec::with_capacity(terms.len());
        let intern = |p: Vec<T>, vertices: &mut Vec<Vec<T>>| match vertices
            .iter()
            .position(|w| vec_eq(w, &p))
        {
            Some(i) => i,
            None => {
                vertices.push(p);
                vertices.len() - 1
            }
        };
        for (i, (s, v)) in terms.iter().enumerate() {
            if s.len() != dim || v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: if s.len() != dim { s.len() } else { v.len() },
                });
            }
            if is_zero_vec(v) {
                return Err(Error::ZeroDirection { index: i });
            }
            if let Some(first) = terms[..i]
                .iter()
                .position(|(s2, v2)| vec_eq(s, s2) && vec_eq(v, v2))
            {
                return Err(Error::DuplicateTerm { index: i, first });
            }
            let a = intern(s.clone(), &mut vertices);
            let b = intern(add(s, v), &mut vertices);
            edges.push((a, b));
        }
        Self::new(dim, vertices, edges)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_vector(&self, e: usize) -> Vec<T> {
        let (s, t) = self.edges[e];
        sub(&self.vertices[t], &self.vertices[s])
    }

    pub fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        self.edges.iter().position(|&e| e == (from, to))
    }

    /// Mass-action system with one term `(s(e), v(e), k_e)` per edge.
    pub fn system(&self, rates: &[T]) -> Result<PolySystem<T>> {
        if rates.len() != self.edges.len() {
            let edge = rates.len().min(self.edges.len());
            return Err(Error::InvalidRate {
                edge,
                reason: format!(
                    "expected {} rates, got {}",
                    self.edges.len(),
                    rates.len()
                ),
            });
        }
        let terms = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &(s, _))| Term {
                exponent: self.vertices[s].clone(),
                direction: self.edge_vector(e),
                rate: rates[e].clone(),
            })
            .collect();
        PolySystem::new(self.dim, terms)
    }

    pub fn unit_rates(&self) -> Vec<T> {
        vec![T::one(); self.edges.len()]
    }

    pub fn is_reversible(&self) -> bool {
        self.first_irreversible_edge().is_none()
    }

    fn first_irreversible_edge(&self) -> Option<usize> {
        self.edges
            .iter()
            .position(|&(s, t)| !self.edges.contains(&(t, s)))
    }

    pub fn require_reversible(&self) -> Result<()> {
        match self.first_irreversible_edge() {
            None => Ok(()),
            Some(edge) => Err(Error::NotReversible {
                edge,
                from: self.edges[edge].0,
                to: self.edges[edge].1,
            }),
        }
    }

    /// Strongly connected components, each sorted, ordered by smallest member.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.vertices.len(), self.edges.len());
        let nodes: Vec<_> = (0..self.vertices.len()).map(|_| g.add_node(())).collect();
        for &(s, t) in &self.edges {
            g.add_edge(nodes[s], nodes[t], ());
        }
        let mut comps: Vec<Vec<usize>> = petgraph::algo::tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                c.sort_unstable();
                c
            })
            .collect();
        comps.sort_by_key(|c| c[0]);
        comps
    }

    fn component_ids(comps: &[Vec<usize>], n: usize) -> Vec<usize> {
        let mut id = vec![0; n];
        for (c, members) in comps.iter().enumerate() {
            for &v in members {
                id[v] = c;
            }
        }
        id
    }

    fn first_acyclic_edge(&self) -> Option<usize> {
        let id = Self::component_ids(&self.strongly_connected_components(), self.vertices.len());
        self.edges.iter().position(|&(s, t)| id[s] != id[t])
    }

    pub fn is_weakly_reversible(&self) -> bool {
        self.first_acyclic_edge().is_none()
    }

    pub fn require_weakly_reversible(&self) -> Result<()> {
        match self.first_acyclic_edge() {
            None => Ok(()),
            Some(edge) => Err(Error::NotWeaklyReversible {
                edge,
                from: self.edges[edge].0,
                to: self.edges[edge].1,
            }),
        }
    }

    /// Connected components of the underlying undirected graph (linkage classes),
    /// restricted to vertices that touch at least one edge, plus isolated vertices.
    pub fn linkage_classes(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(s, t) in &self.edges {
            let (a, b) = (find(&mut parent, s), find(&mut parent, t));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut index: HashMap<usize, usize> = HashMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            let c = *index.entry(r).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[c].push(v);
        }
        classes
    }

    fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(s, t) in &self.edges {
            adj[s].push(t);
        }
        adj
    }

    /// Shortest directed path `from -> ... -> to` by breadth-first search.
    fn shortest_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; adj.len()];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &w in &adj[u] {
                if prev[w] == usize::MAX {
                    prev[w] = u;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Covers every edge by the shortest directed cycle through it. Repeated
    /// cycles are kept once; each edge's rate is split equally among the
    /// retained cycles that use it.
    pub fn cycle_cover(&self) -> Result<CycleCover<T>> {
        self.require_weakly_reversible()?;
        let adj = self.out_adjacency();
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        for (e, &(s, t)) in self.edges.iter().enumerate() {
            let back = Self::shortest_path(&adj, t, s)
                .ok_or(Error::NotWeaklyReversible { edge: e, from: s, to: t })?;
            let mut cycle = vec![s];
            cycle.extend_from_slice(&back[..back.len() - 1]);
            let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
            cycle.rotate_left(start);
            if !cycles.contains(&cycle) {
                cycles.push(cycle);
            }
        }
        let cycle_edges: Vec<Vec<usize>> = cycles
            .iter()
            .map(|c| {
                (0..c.len())
                    .map(|i| {
                        self.edge_index(c[i], c[(i + 1) % c.len()])
                            .expect("cycle follows graph edges")
                    })
                    .collect()
            })
            .collect();
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); self.edges.len()];
        for (c, es) in cycle_edges.iter().enumerate() {
            for &e in es {
                users[e].push(c);
            }
        }
        let weights = users
            .into_iter()
            .map(|cs| {
                let f = T::one() / T::from_i64(cs.len() as i64);
                cs.into_iter().map(|c| (c, f.clone())).collect()
            })
            .collect();
        Ok(CycleCover {
            cycles,
            cycle_edges,
            weights,
        })
    }

    pub fn edge_space(&self) -> EdgeSpace<T> {
        let vectors: Vec<Vec<T>> = (0..self.edges.len()).map(|e| self.edge_vector(e)).collect();
        let span = independent_rows(&vectors, self.dim)
            .into_iter()
            .map(|i| vectors[i].clone())
            .collect();
        EdgeSpace {
            span,
            complement: null_space(&vectors, self.dim),
        }
    }

    /// Translates every vertex by `offset`; edges and edge vectors are unchanged.
    /// The generated right-hand side is multiplied by the monomial `x^offset`.
    pub fn shift_vertices(&self, offset: &[T]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: offset.len(),
            });
        }
        Ok(Self {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| add(v, offset)).collect(),
            edges: self.edges.clone(),
        })
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> EGraph<U> {
        EGraph {
            dim: self.dim,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(&f).collect())
                .collect(),
            edges: self.edges.clone(),
        }
    }
}

impl<T: Scalar> CycleCover<T> {
    /// Smallest rate fraction assigned to any (edge, cycle) pair.
    pub fn min_fraction(&self) -> T {
        self.weights
            .iter()
            .flatten()
            .map(|(_, f)| f.clone())
            .fold(T::one(), |acc, f| if f < acc { f } else { acc })
    }

    /// Per-cycle weighted term lists `(edge, fraction · rate)`.
    pub fn weighted_rates(&self, rates: &[T]) -> Vec<Vec<(usize, T)>> {
        self.cycle_edges
            .iter()
            .enumerate()
            .map(|(c, es)| {
                es.iter()
                    .map(|&e| {
                        let f = self.weights[e]
                            .iter()
                            .find(|(cc, _)| *cc == c)
                            .map(|(_, f)| f.clone())
                            .expect("edge weight recorded for its cycle");
                        (e, f * rates[e].clone())
                    })
                    .collect()
            })
            .collect()
    }
}

impl<T: Scalar> PolySystem<T> {
    pub fn new(dim: usize, terms: Vec<Term<T>>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.exponent.len() != dim || t.direction.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.exponent.len().max(t.direction.len()),
                });
            }
            if t.rate.sign() <= 0 {
                return Err(Error::InvalidRate {
                    edge: i,
                    reason: "rate constant must be positive".into(),
                });
            }
            if let Some(first) = terms[..i].iter().position(|u| {
                vec_eq(&u.exponent, &t.exponent) && vec_eq(&u.direction, &t.direction)
            }) {
                return Err(Error::DuplicateTerm { index: i, first });
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn with_rates(&self, rates: &[T]) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .zip(rates)
            .map(|(t, k)| Term {
                rate: k.clone(),
                ..t.clone()
            })
            .collect();
        Self::new(self.dim, terms)
    }
}
