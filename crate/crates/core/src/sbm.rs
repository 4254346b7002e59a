//! Exact description-length terms for the microcanonical directed
//! degree-corrected SBM with log-normal edge weights, on a single layer.
//!
//! All terms are negative base-2 log probabilities ("bits"):
//!
//! - partition: p(b) = [prod_r n_r! / N!] / (C(N-1, B-1) N)
//! - edge matrix: uniform over B x B count matrices summing to E
//! - degrees: uniform over degree sequences compatible with the group
//!   stub counts (flat conditional prior, multiset counts)
//! - adjacency: P(A|k,e,b) = prod_rs e_rs! prod_i k_out_i! k_in_i! /
//!   (prod_r e_out_r! e_in_r! prod_ij A_ij!)
//! - weights: per ordered group pair, the marginal of the log-weights
//!   under a Normal with its normal-inverse-chi-squared prior integrated
//!   out, plus the log-normal Jacobian.
//!
//! Everything is computed in log space with `ln_gamma`; description
//! lengths are exact up to f64 rounding, deterministic, and invariant
//! under group relabelling.

use crate::comb::{log2_binomial, log2_factorial, log2_multiset};
use crate::net::LayeredMultigraph;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};

/// Node-to-group assignment with `b` nonempty groups labelled `0..b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct Partition {
    assignment: Vec<usize>,
    b: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::BadPartition("no nodes".into()));
        }
        let b = assignment.iter().max().unwrap() + 1;
        let mut seen = vec![false; b];
        for &g in &assignment {
            seen[g] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::BadPartition(format!("group {missing} is empty")));
        }
        Ok(Partition { assignment, b })
    }

    /// Every node in one group.
    pub fn trivial(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            b: 1,
        }
    }

    /// Every node in its own group.
    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            b: n,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.b];
        for &g in &self.assignment {
            sizes[g] += 1;
        }
        sizes
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Vec<usize> {
        p.assignment
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Partition> {
        Partition::new(v)
    }
}

/// Hyperparameters of the normal-inverse-chi-squared prior on the
/// per-group-pair log-weight distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPrior {
    pub mu0: f64,
    pub kappa0: f64,
    pub nu0: f64,
    pub sigma0_sq: f64,
}

impl Default for WeightPrior {
    fn default() -> Self {
        WeightPrior {
            mu0: 0.0,
            kappa0: 1.0,
            nu0: 1.0,
            sigma0_sq: 1.0,
        }
    }
}

impl WeightPrior {
    /// -log2 of the marginal density of `n` log-weights with sufficient
    /// statistics (n, sum z, sum z^2). Zero observations cost zero bits.
    pub fn bits(&self, n: u64, sum_z: f64, sum_z2: f64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        let kn = self.kappa0 + nf;
        let nun = self.nu0 + nf;
        let zbar = sum_z / nf;
        let ss = (sum_z2 - sum_z * sum_z / nf).max(0.0);
        let nun_sn2 =
            self.nu0 * self.sigma0_sq + ss + self.kappa0 * nf * (zbar - self.mu0).powi(2) / kn;
        let ln_p = ln_gamma(nun / 2.0) - ln_gamma(self.nu0 / 2.0)
            + 0.5 * (self.kappa0.ln() - kn.ln())
            + (self.nu0 / 2.0) * (self.nu0 * self.sigma0_sq).ln()
            - (nun / 2.0) * nun_sn2.ln()
            - (nf / 2.0) * PI.ln();
        -ln_p / LN_2
    }
}

/// Bits of the group-membership prior: -log2 p({b_i}) with
/// p({b_i}) = [prod_r n_r! / N!] / (C(N-1, B-1) N).
pub fn dl_partition(p: &Partition) -> f64 {
    let n = p.n() as u64;
    let sizes = p.group_sizes();
    let mut bits = log2_factorial(n);
    bits -= sizes.iter().map(|&s| log2_factorial(s as u64)).sum::<f64>();
    bits += log2_binomial(n - 1, p.b() as u64 - 1);
    bits += (n as f64).log2();
    bits
}

/// Bits of the uniform prior over B x B edge-count matrices with sum E.
pub fn dl_edge_matrix(b: usize, e: u64) -> f64 {
    log2_multiset((b * b) as u64, e)
}

/// One description length, split by model term. `total` is the sum; the
/// data bits (adjacency + weights) and model bits (the rest) partition it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlBreakdown {
    pub bits_partition: f64,
    pub bits_edge_matrix: f64,
    pub bits_degrees: f64,
    pub bits_adjacency: f64,
    pub bits_weights: f64,
    pub total: f64,
}

impl DlBreakdown {
    fn assemble(
        bits_partition: f64,
        bits_edge_matrix: f64,
        bits_degrees: f64,
        bits_adjacency: f64,
        bits_weights: f64,
    ) -> Self {
        // partition bits are added last so that a breakdown without them
        // (per-bin terms of a layered DL) sums bit-identically
        let core = bits_edge_matrix + bits_degrees + bits_adjacency + bits_weights;
        DlBreakdown {
            bits_partition,
            bits_edge_matrix,
            bits_degrees,
            bits_adjacency,
            bits_weights,
            total: bits_partition + core,
        }
    }

    /// Data bits given the parameters (the "S" part of total = S + L).
    pub fn data_bits(&self) -> f64 {
        self.bits_adjacency + self.bits_weights
    }

    /// Parameter bits (the "L" part).
    pub fn model_bits(&self) -> f64 {
        self.bits_partition + self.bits_edge_matrix + self.bits_degrees
    }
}

/// Sufficient statistics of one layer under a partition: edge counts per
/// ordered group pair, stub counts per group, per-node degrees and the
/// per-pair log-weight sums. Supports O(degree + B) single-node move
/// deltas for the samplers.
#[derive(Debug, Clone)]
pub struct BlockState {
    b: usize,
    e_total: u64,
    e_rs: Vec<u64>,
    e_out: Vec<u64>,
    e_in: Vec<u64>,
    k_out: Vec<u64>,
    k_in: Vec<u64>,
    wsum: Vec<f64>,
    wsum2: Vec<f64>,
    out_nbrs: Vec<Vec<(usize, f64)>>,
    in_nbrs: Vec<Vec<(usize, f64)>>,
    log2_adj_fact: f64,
    log2_deg_fact: f64,
    jacobian_bits: f64,
}

impl BlockState {
    /// Builds the statistics of layer `layer` of `g` under `partition`.
    pub fn from_layer(g: &LayeredMultigraph, layer: usize, partition: &Partition) -> Result<Self> {
        if partition.n() != g.n_nodes() {
            return Err(Error::Mismatch(format!(
                "partition over {} nodes, graph has {}",
                partition.n(),
                g.n_nodes()
            )));
        }
        let edges = g.layers.get(layer).ok_or(Error::BadLayer(layer))?;
        let n = g.n_nodes();
        let b = partition.b();
        let mut st = BlockState {
            b,
            e_total: edges.len() as u64,
            e_rs: vec![0; b * b],
            e_out: vec![0; b],
            e_in: vec![0; b],
            k_out: vec![0; n],
            k_in: vec![0; n],
            wsum: vec![0.0; b * b],
            wsum2: vec![0.0; b * b],
            out_nbrs: vec![Vec::new(); n],
            in_nbrs: vec![Vec::new(); n],
            log2_adj_fact: 0.0,
            log2_deg_fact: 0.0,
            jacobian_bits: 0.0,
        };
        let mut adj: HashMap<(usize, usize), u64> = HashMap::new();
        for e in edges {
            if !(e.w > 0.0) {
                return Err(Error::Degenerate(format!("non-positive weight {}", e.w)));
            }
            let (r, s) = (partition.group_of(e.src), partition.group_of(e.dst));
            let z = e.w.ln();
            let p = r * b + s;
            st.e_rs[p] += 1;
            st.wsum[p] += z;
            st.wsum2[p] += z * z;
            st.e_out[r] += 1;
            st.e_in[s] += 1;
            st.k_out[e.src] += 1;
            st.k_in[e.dst] += 1;
            st.jacobian_bits += e.w.log2();
            *adj.entry((e.src, e.dst)).or_insert(0) += 1;
            st.out_nbrs[e.src].push((e.dst, z));
            if e.dst != e.src {
                st.in_nbrs[e.dst].push((e.src, z));
            }
        }
        st.log2_adj_fact = adj.values().map(|&c| log2_factorial(c)).sum();
        st.log2_deg_fact = (0..n)
            .map(|i| log2_factorial(st.k_out[i]) + log2_factorial(st.k_in[i]))
            .sum();
        Ok(st)
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn e_total(&self) -> u64 {
        self.e_total
    }

    pub fn e_rs(&self) -> &[u64] {
        &self.e_rs
    }

    pub fn k_out(&self) -> &[u64] {
        &self.k_out
    }

    pub fn k_in(&self) -> &[u64] {
        &self.k_in
    }

    /// Multigraph degree (in + out) of a node in this layer.
    pub fn degree(&self, i: usize) -> u64 {
        self.k_out[i] + self.k_in[i]
    }

    /// Non-self neighbours of `i` with edge multiplicity, both directions.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_nbrs[i]
            .iter()
            .filter(move |(j, _)| *j != i)
            .map(|(j, _)| *j)
            .chain(self.in_nbrs[i].iter().map(|(j, _)| *j))
    }

    /// Internal consistency of the stub bookkeeping.
    pub fn validate(&self) -> Result<()> {
        let sum: u64 = self.e_rs.iter().sum();
        if sum != self.e_total {
            return Err(Error::Mismatch("e_rs does not sum to E".into()));
        }
        for r in 0..self.b {
            let row: u64 = (0..self.b).map(|s| self.e_rs[r * self.b + s]).sum();
            let col: u64 = (0..self.b).map(|s| self.e_rs[s * self.b + r]).sum();
            if row != self.e_out[r] || col != self.e_in[r] {
                return Err(Error::Mismatch(format!("stub counts of group {r} inconsistent")));
            }
        }
        if self.k_out.iter().sum::<u64>() != self.e_total
            || self.k_in.iter().sum::<u64>() != self.e_total
        {
            return Err(Error::Mismatch("degree sums do not match E".into()));
        }
        Ok(())
    }

    pub fn bits_edge_matrix(&self) -> f64 {
        dl_edge_matrix(self.b, self.e_total)
    }

    pub fn bits_degrees(&self, n_r: &[usize]) -> f64 {
        (0..self.b)
            .map(|r| {
                log2_multiset(n_r[r] as u64, self.e_out[r])
                    + log2_multiset(n_r[r] as u64, self.e_in[r])
            })
            .sum()
    }

    pub fn bits_adjacency(&self) -> f64 {
        let mut bits = self.log2_adj_fact - self.log2_deg_fact;
        bits -= self.e_rs.iter().map(|&c| log2_factorial(c)).sum::<f64>();
        bits += (0..self.b)
            .map(|r| log2_factorial(self.e_out[r]) + log2_factorial(self.e_in[r]))
            .sum::<f64>();
        bits
    }

    pub fn bits_weights(&self, prior: &WeightPrior) -> f64 {
        let mut bits = self.jacobian_bits;
        for p in 0..self.b * self.b {
            bits += prior.bits(self.e_rs[p], self.wsum[p], self.wsum2[p]);
        }
        bits
    }

    /// Everything except the partition term.
    pub fn bits_core(&self, n_r: &[usize], prior: &WeightPrior) -> f64 {
        self.bits_edge_matrix()
            + self.bits_degrees(n_r)
            + self.bits_adjacency()
            + self.bits_weights(prior)
    }

    /// Breakdown of this layer's terms with the partition bits left out.
    pub fn breakdown(&self, n_r: &[usize], prior: &WeightPrior) -> DlBreakdown {
        DlBreakdown::assemble(
            0.0,
            self.bits_edge_matrix(),
            self.bits_degrees(n_r),
            self.bits_adjacency(),
            self.bits_weights(prior),
        )
    }

    // -log2 factorial part + weight marginal for one ordered pair
    fn pair_bits(&self, count: u64, s1: f64, s2: f64, prior: &WeightPrior) -> f64 {
        -log2_factorial(count) + prior.bits(count, s1, s2)
    }

    // stub factorials + degree prior for one group
    fn group_bits(&self, n: usize, e_out: u64, e_in: u64) -> f64 {
        log2_factorial(e_out)
            + log2_factorial(e_in)
            + log2_multiset(n as u64, e_out)
            + log2_multiset(n as u64, e_in)
    }

    /// Bit change of this layer's core terms when node `i` moves from
    /// group `r` to `s`. `assignment` holds the current groups of all
    /// other nodes; self-loops follow `i`.
    pub fn move_delta(
        &self,
        assignment: &[usize],
        n_r: &[usize],
        i: usize,
        r: usize,
        s: usize,
        prior: &WeightPrior,
        scratch: &mut MoveScratch,
    ) -> f64 {
        if r == s {
            return 0.0;
        }
        let mut delta = self.group_bits(n_r[r] - 1, self.e_out[r] - self.k_out[i], self.e_in[r] - self.k_in[i])
            - self.group_bits(n_r[r], self.e_out[r], self.e_in[r])
            + self.group_bits(n_r[s] + 1, self.e_out[s] + self.k_out[i], self.e_in[s] + self.k_in[i])
            - self.group_bits(n_r[s], self.e_out[s], self.e_in[s]);

        scratch.pairs.clear();
        for &(j, z) in &self.out_nbrs[i] {
            if j == i {
                scratch.add(r * self.b + r, -1, -z, -z * z);
                scratch.add(s * self.b + s, 1, z, z * z);
            } else {
                let t = assignment[j];
                scratch.add(r * self.b + t, -1, -z, -z * z);
                scratch.add(s * self.b + t, 1, z, z * z);
            }
        }
        for &(j, z) in &self.in_nbrs[i] {
            let t = assignment[j];
            scratch.add(t * self.b + r, -1, -z, -z * z);
            scratch.add(t * self.b + s, 1, z, z * z);
        }
        for &(p, dc, ds1, ds2) in &scratch.pairs {
            let c_old = self.e_rs[p];
            let c_new = (c_old as i64 + dc) as u64;
            delta += self.pair_bits(c_new, self.wsum[p] + ds1, self.wsum2[p] + ds2, prior)
                - self.pair_bits(c_old, self.wsum[p], self.wsum2[p], prior);
        }
        delta
    }

    /// Applies the move evaluated by [`move_delta`].
    pub fn apply_move(&mut self, assignment: &[usize], i: usize, r: usize, s: usize) {
        if r == s {
            return;
        }
        self.e_out[r] -= self.k_out[i];
        self.e_out[s] += self.k_out[i];
        self.e_in[r] -= self.k_in[i];
        self.e_in[s] += self.k_in[i];
        let b = self.b;
        // split borrows: neighbour lists are not touched by the updates below
        let out_nbrs = std::mem::take(&mut self.out_nbrs[i]);
        for &(j, z) in &out_nbrs {
            let (from, to) = if j == i {
                (r * b + r, s * b + s)
            } else {
                let t = assignment[j];
                (r * b + t, s * b + t)
            };
            self.shift_edge(from, to, z);
        }
        self.out_nbrs[i] = out_nbrs;
        let in_nbrs = std::mem::take(&mut self.in_nbrs[i]);
        for &(j, z) in &in_nbrs {
            let t = assignment[j];
            self.shift_edge(t * b + r, t * b + s, z);
        }
        self.in_nbrs[i] = in_nbrs;
    }

    fn shift_edge(&mut self, from: usize, to: usize, z: f64) {
        self.e_rs[from] -= 1;
        self.wsum[from] -= z;
        self.wsum2[from] -= z * z;
        self.e_rs[to] += 1;
        self.wsum[to] += z;
        self.wsum2[to] += z * z;
    }

    /// Bit change of this layer's core terms when groups `a` and `c`
    /// merge (B decreases by one).
    pub fn merge_delta(&self, n_r: &[usize], a: usize, c: usize, prior: &WeightPrior) -> f64 {
        let b = self.b;
        let mut delta = log2_multiset(((b - 1) * (b - 1)) as u64, self.e_total)
            - log2_multiset((b * b) as u64, self.e_total);
        delta += self.group_bits(
            n_r[a] + n_r[c],
            self.e_out[a] + self.e_out[c],
            self.e_in[a] + self.e_in[c],
        ) - self.group_bits(n_r[a], self.e_out[a], self.e_in[a])
            - self.group_bits(n_r[c], self.e_out[c], self.e_in[c]);
        let pb = |p: usize| self.pair_bits(self.e_rs[p], self.wsum[p], self.wsum2[p], prior);
        for t in 0..b {
            if t == a || t == c {
                continue;
            }
            // rows a,t and c,t pool
            delta += self.pair_bits(
                self.e_rs[a * b + t] + self.e_rs[c * b + t],
                self.wsum[a * b + t] + self.wsum[c * b + t],
                self.wsum2[a * b + t] + self.wsum2[c * b + t],
                prior,
            ) - pb(a * b + t)
                - pb(c * b + t);
            delta += self.pair_bits(
                self.e_rs[t * b + a] + self.e_rs[t * b + c],
                self.wsum[t * b + a] + self.wsum[t * b + c],
                self.wsum2[t * b + a] + self.wsum2[t * b + c],
                prior,
            ) - pb(t * b + a)
                - pb(t * b + c);
        }
        let block = [a * b + a, a * b + c, c * b + a, c * b + c];
        let (mut cc, mut s1, mut s2) = (0u64, 0.0, 0.0);
        let mut old = 0.0;
        for &p in &block {
            cc += self.e_rs[p];
            s1 += self.wsum[p];
            s2 += self.wsum2[p];
            old += pb(p);
        }
        delta += self.pair_bits(cc, s1, s2, prior) - old;
        delta
    }
}

/// Reusable per-pair delta accumulator for [`BlockState::move_delta`].
#[derive(Debug, Default)]
pub struct MoveScratch {
    pairs: Vec<(usize, i64, f64, f64)>,
}

impl MoveScratch {
    fn add(&mut self, p: usize, dc: i64, ds1: f64, ds2: f64) {
        for entry in &mut self.pairs {
            if entry.0 == p {
                entry.1 += dc;
                entry.2 += ds1;
                entry.3 += ds2;
                return;
            }
        }
        self.pairs.push((p, dc, ds1, ds2));
    }
}

/// Full description length of a single-layer graph under a partition.
pub fn description_length(
    g: &LayeredMultigraph,
    partition: &Partition,
    prior: &WeightPrior,
) -> Result<DlBreakdown> {
    if g.n_layers() != 1 {
        return Err(Error::Mismatch(format!(
            "expected a single layer, got {}",
            g.n_layers()
        )));
    }
    let state = BlockState::from_layer(g, 0, partition)?;
    let n_r = partition.group_sizes();
    Ok(DlBreakdown::assemble(
        dl_partition(partition),
        state.bits_edge_matrix(),
        state.bits_degrees(&n_r),
        state.bits_adjacency(),
        state.bits_weights(prior),
    ))
}
