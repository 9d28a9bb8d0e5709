//! Network files: vertices with ids and exact coordinates, edges between ids
//! with optional rate constants.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use toric_core::model::EGraph;
use toric_core::scalar::{parse_rational, Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: String,
    /// Coordinates as `"p/q"` strings, decimal strings or JSON numbers.
    pub point: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub dimension: usize,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Map<String, Value>>,
}

/// A validated document: the graph, its rates and the vertex ids.
#[derive(Clone, Debug)]
pub struct Network {
    pub graph: EGraph<Rational>,
    /// Rate of each edge; `1` where the document gives none.
    pub rates: Vec<Rational>,
    pub ids: Vec<String>,
    pub document: NetworkDocument,
}

fn number(v: &Value, field: &str) -> Result<Rational> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => bail!("{field}: expected a number or a \"p/q\" string, found {other}"),
    };
    parse_rational(&text).ok_or_else(|| anyhow!("{field}: cannot parse {text:?} as a rational"))
}

fn literal(q: &Rational) -> Value {
    Value::String(q.to_literal())
}

impl NetworkDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow!("malformed network document at line {}, column {}: {e}", e.line(), e.column()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks ids and coordinates and builds the graph.
    pub fn validate(&self) -> Result<Network> {
        if self.dimension == 0 {
            bail!("dimension: must be positive");
        }
        let mut index = HashMap::new();
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            if index.insert(v.id.as_str(), i).is_some() {
                bail!("vertices[{i}].id: duplicate id {:?}", v.id);
            }
            if v.point.len() != self.dimension {
                bail!(
                    "vertices[{i}].point: {} coordinates for dimension {}",
                    v.point.len(),
                    self.dimension
                );
            }
            let p = v
                .point
                .iter()
                .enumerate()
                .map(|(j, c)| number(c, &format!("vertices[{i}].point[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            vertices.push(p);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut rates = Vec::with_capacity(self.edges.len());
        for (e, r) in self.edges.iter().enumerate() {
            let end = |id: &str, side: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| anyhow!("edges[{e}].{side}: unknown vertex id {id:?} in edge {:?} -> {:?}", r.from, r.to))
            };
            edges.push((end(&r.from, "from")?, end(&r.to, "to")?));
            let k = match &r.rate {
                Some(v) => number(v, &format!("edges[{e}].rate"))?,
                None => Rational::one(),
            };
            if k.sign() <= 0 {
                bail!("edges[{e}].rate: must be positive, got {k}");
            }
            rates.push(k);
        }
        let graph = EGraph::new(self.dimension, vertices, edges).map_err(|err| anyhow!("{err}"))?;
        Ok(Network {
            graph,
            rates,
            ids: self.vertices.iter().map(|v| v.id.clone()).collect(),
            document: self.clone(),
        })
    }

    /// Coordinates and rates rewritten as exact literals.
    pub fn canonical(&self) -> Result<Self> {
        let net = self.validate()?;
        Ok(Self {
            dimension: self.dimension,
            vertices: self
                .vertices
                .iter()
                .zip(net.graph.vertices())
                .map(|(v, p)| VertexRecord {
                    id: v.id.clone(),
                    point: p.iter().map(literal).collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .zip(&net.rates)
                .map(|(e, k)| EdgeRecord {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    rate: e.rate.as_ref().map(|_| literal(k)),
                })
                .collect(),
            metadata: self.metadata.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

impl Network {
    pub fn rates_f64(&self) -> Vec<f64> {
        self.rates.iter().map(Scalar::to_f64).collect()
    }

    /// `"A -> B"` for edge `e`.
    pub fn edge_name(&self, e: usize) -> String {
        let (s, t) = self.graph.edges()[e];
        format!("{} -> {}", self.ids[s], self.ids[t])
    }

    /// Rewrites vertex indices in core error messages as ids.
    pub fn describe(&self, err: &toric_core::Error) -> String {
        use toric_core::Error::*;
        match err {
            NotWeaklyReversible { edge, .. } => {
                format!("graph is not weakly reversible: edge {} lies on no directed cycle", self.edge_name(*edge))
            }
            NotReversible { edge, .. } => format!("graph is not reversible: edge {} has no reverse", self.edge_name(*edge)),
            other => other.to_string(),
        }
    }
}
