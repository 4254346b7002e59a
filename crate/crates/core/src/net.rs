//! Layered directed weighted multigraphs of interbank loans.
//!
//! Banks are nodes, every issued loan is one parallel edge carrying its
//! ruble amount as a positive weight, and each loan maturity class defines
//! a layer. Monthly graphs keep only the banks active in that month.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The eight maturity classes reported for interbank loans, ordered from
/// short to long. The ordinal doubles as the layer index of a freshly
/// ingested monthly graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MaturityClass {
    #[serde(rename = "<1d")]
    Overnight,
    #[serde(rename = "2-7d")]
    D2to7,
    #[serde(rename = "8-30d")]
    D8to30,
    #[serde(rename = "31-90d")]
    D31to90,
    #[serde(rename = "91-180d")]
    D91to180,
    #[serde(rename = "0.5-1y")]
    HalfToOneY,
    #[serde(rename = "1-3y")]
    Y1to3,
    #[serde(rename = ">3y")]
    Over3y,
}

impl MaturityClass {
    pub const ALL: [MaturityClass; 8] = [
        MaturityClass::Overnight,
        MaturityClass::D2to7,
        MaturityClass::D8to30,
        MaturityClass::D31to90,
        MaturityClass::D91to180,
        MaturityClass::HalfToOneY,
        MaturityClass::Y1to3,
        MaturityClass::Over3y,
    ];

    pub fn code(self) -> &'static str {
        match self {
            MaturityClass::Overnight => "<1d",
            MaturityClass::D2to7 => "2-7d",
            MaturityClass::D8to30 => "8-30d",
            MaturityClass::D31to90 => "31-90d",
            MaturityClass::D91to180 => "91-180d",
            MaturityClass::HalfToOneY => "0.5-1y",
            MaturityClass::Y1to3 => "1-3y",
            MaturityClass::Over3y => ">3y",
        }
    }

    pub fn from_code(code: &str) -> Option<MaturityClass> {
        Self::ALL.iter().copied().find(|m| m.code() == code)
    }

    /// Layer index, 0 (shortest) through 7 (longest).
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ord: usize) -> Option<MaturityClass> {
        Self::ALL.get(ord).copied()
    }
}

impl fmt::Display for MaturityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One issued loan. `month` follows the dataset convention where month 1
/// is January 2000; any positive integer is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoanRecord {
    pub lender: String,
    pub borrower: String,
    pub month: u32,
    pub amount: f64,
    pub maturity: MaturityClass,
    pub rate: Option<f64>,
}

impl LoanRecord {
    /// Checks the record invariants; `row` goes into the error message.
    pub fn validate(&self, row: u64) -> Result<()> {
        if !(self.amount > 0.0) || !self.amount.is_finite() {
            return Err(Error::BadRecord {
                row,
                reason: format!("non-positive amount {}", self.amount),
            });
        }
        if let Some(r) = self.rate {
            if r < 0.0 || !r.is_finite() {
                return Err(Error::BadRecord {
                    row,
                    reason: format!("negative rate {r}"),
                });
            }
        }
        if self.lender.is_empty() || self.borrower.is_empty() {
            return Err(Error::BadRecord {
                row,
                reason: "empty bank id".into(),
            });
        }
        Ok(())
    }
}

/// One parallel edge: a loan of weight `w` from node `src` to node `dst`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub w: f64,
}

/// A directed weighted multigraph with one edge list per layer.
///
/// Invariants: all endpoints index into `nodes`, all weights are positive,
/// and every node is active (has at least one edge) in at least one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredMultigraph {
    pub nodes: Vec<String>,
    pub layer_labels: Vec<String>,
    pub layers: Vec<Vec<Edge>>,
}

impl LayeredMultigraph {
    pub fn new(
        nodes: Vec<String>,
        layer_labels: Vec<String>,
        layers: Vec<Vec<Edge>>,
    ) -> Result<Self> {
        if layer_labels.len() != layers.len() {
            return Err(Error::Mismatch(format!(
                "{} layer labels for {} layers",
                layer_labels.len(),
                layers.len()
            )));
        }
        let g = LayeredMultigraph {
            nodes,
            layer_labels,
            layers,
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut active = vec![false; n];
        for layer in &self.layers {
            for e in layer {
                if e.src >= n || e.dst >= n {
                    return Err(Error::Mismatch(format!(
                        "edge ({}, {}) out of range for {} nodes",
                        e.src, e.dst, n
                    )));
                }
                if !(e.w > 0.0) || !e.w.is_finite() {
                    return Err(Error::Degenerate(format!("edge weight {} not positive", e.w)));
                }
                active[e.src] = true;
                active[e.dst] = true;
            }
        }
        if let Some(i) = active.iter().position(|a| !a) {
            return Err(Error::Degenerate(format!(
                "node {} ({}) inactive in every layer",
                i, self.nodes[i]
            )));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Total number of parallel edges over all layers.
    pub fn n_edges(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Self-loops per layer (lender == borrower), kept in the graph but
    /// reported separately.
    pub fn self_loops(&self) -> Vec<usize> {
        self.layers
            .iter()
            .map(|l| l.iter().filter(|e| e.src == e.dst).count())
            .collect()
    }

    /// All layers flattened into one, edge lists concatenated in layer order.
    pub fn collapse(&self) -> LayeredMultigraph {
        let mut edges = Vec::with_capacity(self.n_edges());
        for layer in &self.layers {
            edges.extend_from_slice(layer);
        }
        LayeredMultigraph {
            nodes: self.nodes.clone(),
            layer_labels: vec![self.layer_labels.join("+")],
            layers: vec![edges],
        }
    }

    /// Merges layers into one output layer per bin, bins ordered by their
    /// smallest member ordinal.
    pub fn merge_layers(&self, bins: &BinSet) -> Result<LayeredMultigraph> {
        bins.check_partitions(self.n_layers())?;
        let mut labels = Vec::with_capacity(bins.len());
        let mut layers = Vec::with_capacity(bins.len());
        for bin in &bins.bins {
            let mut edges = Vec::new();
            let mut label_parts = Vec::new();
            for &l in bin {
                edges.extend_from_slice(&self.layers[l]);
                label_parts.push(self.layer_labels[l].clone());
            }
            labels.push(label_parts.join("+"));
            layers.push(edges);
        }
        Ok(LayeredMultigraph {
            nodes: self.nodes.clone(),
            layer_labels: labels,
            layers,
        })
    }

    /// In-, out- and total strength of node `i` over a set of layers:
    /// the amounts it borrows and lends there.
    pub fn strength(&self, i: usize, layer_set: &[usize]) -> Result<Strength> {
        if i >= self.n_nodes() {
            return Err(Error::UnknownNode(format!("index {i}")));
        }
        let mut s = Strength::default();
        for &l in layer_set {
            let layer = self.layers.get(l).ok_or(Error::BadLayer(l))?;
            for e in layer {
                if e.dst == i {
                    s.s_in += e.w;
                }
                if e.src == i {
                    s.s_out += e.w;
                }
            }
        }
        s.total = s.s_in + s.s_out;
        Ok(s)
    }

    /// Strengths of every node over a set of layers in one pass.
    pub fn strengths(&self, layer_set: &[usize]) -> Result<Vec<Strength>> {
        let mut out = vec![Strength::default(); self.n_nodes()];
        for &l in layer_set {
            let layer = self.layers.get(l).ok_or(Error::BadLayer(l))?;
            for e in layer {
                out[e.dst].s_in += e.w;
                out[e.src].s_out += e.w;
            }
        }
        for s in &mut out {
            s.total = s.s_in + s.s_out;
        }
        Ok(out)
    }

    /// S^ℓ: the sum of all edge weights over the given layers, i.e. the
    /// total amount borrowed or lent there, each loan counted once.
    pub fn layer_size(&self, layer_set: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &l in layer_set {
            let layer = self.layers.get(l).ok_or(Error::BadLayer(l))?;
            total += layer.iter().map(|e| e.w).sum::<f64>();
        }
        Ok(total)
    }

    /// S: the size of the whole network.
    pub fn network_size(&self) -> f64 {
        let all: Vec<usize> = (0..self.n_layers()).collect();
        self.layer_size(&all).expect("all layers valid")
    }
}

/// Node strength in a layer set, split into borrowed and lent amounts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Strength {
    pub s_in: f64,
    pub s_out: f64,
    pub total: f64,
}

/// Contiguity constraint for bin sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinningKind {
    Contiguous,
    NonContiguous,
}

/// An ordered set of layer bins defining a granularity level. Bins
/// partition the layer ordinals and are indexed from short to long
/// maturities (by smallest contained ordinal).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSet {
    pub bins: Vec<Vec<usize>>,
    pub kind: BinningKind,
}

impl BinSet {
    pub fn new(mut bins: Vec<Vec<usize>>, kind: BinningKind) -> Result<Self> {
        for bin in &mut bins {
            bin.sort_unstable();
        }
        bins.sort_by_key(|b| b.first().copied().unwrap_or(usize::MAX));
        let set = BinSet { bins, kind };
        set.validate()?;
        Ok(set)
    }

    /// Every layer in its own bin (complete differentiation).
    pub fn singletons(n_layers: usize, kind: BinningKind) -> Self {
        BinSet {
            bins: (0..n_layers).map(|l| vec![l]).collect(),
            kind,
        }
    }

    /// One bin holding all layers (complete aggregation).
    pub fn aggregated(n_layers: usize, kind: BinningKind) -> Self {
        BinSet {
            bins: vec![(0..n_layers).collect()],
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn n_layers(&self) -> usize {
        self.bins.iter().map(Vec::len).sum()
    }

    fn validate(&self) -> Result<()> {
        let l = self.n_layers();
        let mut seen = vec![false; l];
        for bin in &self.bins {
            if bin.is_empty() {
                return Err(Error::BadBinSet("empty bin".into()));
            }
            for &ord in bin {
                if ord >= l {
                    return Err(Error::BadBinSet(format!("ordinal {ord} out of range")));
                }
                if seen[ord] {
                    return Err(Error::BadBinSet(format!("ordinal {ord} repeated")));
                }
                seen[ord] = true;
            }
            if self.kind == BinningKind::Contiguous {
                let lo = bin[0];
                let hi = *bin.last().unwrap();
                if bin.len() != hi - lo + 1 {
                    return Err(Error::BadBinSet(format!(
                        "bin {bin:?} is not an ordinal interval"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that this bin set partitions exactly `n_layers` ordinals.
    pub fn check_partitions(&self, n_layers: usize) -> Result<()> {
        if self.n_layers() != n_layers {
            return Err(Error::BadBinSet(format!(
                "bin set covers {} ordinals, graph has {} layers",
                self.n_layers(),
                n_layers
            )));
        }
        self.validate()
    }

    /// Replaces bins `i` and `j` by their union, reordering by smallest
    /// ordinal. The result may violate contiguity only if `kind` allows it.
    pub fn merge_bins(&self, i: usize, j: usize) -> Result<BinSet> {
        if i == j || i >= self.len() || j >= self.len() {
            return Err(Error::BadBinSet(format!("cannot merge bins {i} and {j}")));
        }
        let mut bins = Vec::with_capacity(self.len() - 1);
        let mut merged: Vec<usize> = self.bins[i].clone();
        merged.extend_from_slice(&self.bins[j]);
        merged.sort_unstable();
        for (k, bin) in self.bins.iter().enumerate() {
            if k != i && k != j {
                bins.push(bin.clone());
            }
        }
        bins.push(merged);
        BinSet::new(bins, self.kind)
    }
}

impl fmt::Display for BinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .bins
            .iter()
            .map(|b| {
                let inner: Vec<String> = b.iter().map(|o| o.to_string()).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Accumulates loans by bank name and produces graphs whose node lists are
/// sorted and restricted to active banks.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    layer_labels: Vec<String>,
    edges: Vec<Vec<(String, String, f64)>>,
}

impl GraphBuilder {
    pub fn new(layer_labels: Vec<String>) -> Self {
        let n = layer_labels.len();
        GraphBuilder {
            layer_labels,
            edges: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, layer: usize, src: &str, dst: &str, w: f64) -> Result<()> {
        if layer >= self.edges.len() {
            return Err(Error::BadLayer(layer));
        }
        self.edges[layer].push((src.to_owned(), dst.to_owned(), w));
        Ok(())
    }

    pub fn finish(self) -> Result<LayeredMultigraph> {
        let mut names: Vec<&str> = Vec::new();
        for layer in &self.edges {
            for (src, dst, _) in layer {
                names.push(src);
                names.push(dst);
            }
        }
        names.sort_unstable();
        names.dedup();
        let index: BTreeMap<&str, usize> =
            names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let layers = self
            .edges
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|(src, dst, w)| Edge {
                        src: index[src.as_str()],
                        dst: index[dst.as_str()],
                        w: *w,
                    })
                    .collect()
            })
            .collect();
        LayeredMultigraph::new(
            names.into_iter().map(str::to_owned).collect(),
            self.layer_labels,
            layers,
        )
    }
}

/// Aggregates loan records by issuance month into monthly layered graphs,
/// one layer per maturity class. Node sets hold the month's active banks
/// only; months absent from the input stay absent.
pub fn ingest<I>(records: I) -> Result<BTreeMap<u32, LayeredMultigraph>>
where
    I: IntoIterator<Item = LoanRecord>,
{
    let labels: Vec<String> = MaturityClass::ALL.iter().map(|m| m.code().to_owned()).collect();
    let mut builders: BTreeMap<u32, GraphBuilder> = BTreeMap::new();
    for (i, rec) in records.into_iter().enumerate() {
        let row = i as u64 + 1;
        rec.validate(row)?;
        builders
            .entry(rec.month)
            .or_insert_with(|| GraphBuilder::new(labels.clone()))
            .add_edge(rec.maturity.ordinal(), &rec.lender, &rec.borrower, rec.amount)?;
    }
    builders
        .into_iter()
        .map(|(month, b)| b.finish().map(|g| (month, g)))
        .collect()
}
