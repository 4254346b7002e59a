//! Shared-partition multilayer description length and the coarse-graining
//! terms: the layer-recovery extension and the bin-set priors.
//!
//! A layered fit at granularity {ℓ} costs: the partition bits once, the
//! per-bin SBM terms of the merged graph, an extension term encoding how
//! the bin's edges distribute over its member layers (so the original
//! layered graph is recoverable), and the prior over bin sets.

use crate::comb::{log2_binomial, log2_multinomial, log2_multiset, stirling2};
use crate::net::{BinSet, BinningKind, LayeredMultigraph};
use crate::sbm::{dl_partition, BlockState, DlBreakdown, Partition, WeightPrior};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Description length of a layered graph at one granularity. The per-bin
/// breakdowns carry no partition bits; those are counted once globally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredDl {
    pub per_bin: Vec<DlBreakdown>,
    pub bits_partition: f64,
    pub extension_bits: f64,
    pub binset_prior_bits: f64,
    pub total: f64,
}

impl LayeredDl {
    /// Data bits over all bins (the "S" part).
    pub fn data_bits(&self) -> f64 {
        self.per_bin.iter().map(DlBreakdown::data_bits).sum()
    }

    /// Parameter and selection bits (the "L" part).
    pub fn model_bits(&self) -> f64 {
        self.total - self.data_bits()
    }
}

/// Bits to recover the member layers of every bin from the binned graph:
/// per bin, a uniform code over the edge-count split followed by a uniform
/// code over the assignment of the bin's edges to its member layers.
pub fn extension_term(g: &LayeredMultigraph, bins: &BinSet) -> Result<f64> {
    bins.check_partitions(g.n_layers())?;
    let mut bits = 0.0;
    for bin in &bins.bins {
        if bin.len() < 2 {
            continue;
        }
        let counts: Vec<u64> = bin.iter().map(|&l| g.layers[l].len() as u64).collect();
        let total: u64 = counts.iter().sum();
        bits += log2_multinomial(&counts);
        bits += log2_multiset(bin.len() as u64, total);
    }
    Ok(bits)
}

/// Bits of the uninformative prior over bin sets of `n_layers` layers:
/// uniform over the number of bins D, then uniform over the bin sets with
/// that D (ordinal intervals when contiguous, set partitions otherwise).
pub fn binset_prior(bins: &BinSet, n_layers: usize) -> Result<f64> {
    let d = bins.len();
    if d == 0 || d > n_layers {
        return Err(Error::BadBinSet(format!(
            "{d} bins for {n_layers} layers"
        )));
    }
    bins.check_partitions(n_layers)?;
    let l = n_layers as u64;
    let count_bits = match bins.kind {
        BinningKind::Contiguous => log2_binomial(l - 1, d as u64 - 1),
        BinningKind::NonContiguous => (stirling2(l, d as u64) as f64).log2(),
    };
    Ok((l as f64).log2() + count_bits)
}

/// Full description length of `g` explained at granularity `bins` with a
/// shared partition.
pub fn layered_dl(
    g: &LayeredMultigraph,
    partition: &Partition,
    bins: &BinSet,
    prior: &WeightPrior,
) -> Result<LayeredDl> {
    let merged = g.merge_layers(bins)?;
    let n_r = partition.group_sizes();
    let mut per_bin = Vec::with_capacity(merged.n_layers());
    for l in 0..merged.n_layers() {
        let state = BlockState::from_layer(&merged, l, partition)?;
        per_bin.push(state.breakdown(&n_r, prior));
    }
    let bits_partition = dl_partition(partition);
    let extension_bits = extension_term(g, bins)?;
    let binset_prior_bits = binset_prior(bins, g.n_layers())?;
    let mut total = bits_partition;
    for b in &per_bin {
        total += b.total;
    }
    total += extension_bits;
    total += binset_prior_bits;
    Ok(LayeredDl {
        per_bin,
        bits_partition,
        extension_bits,
        binset_prior_bits,
        total,
    })
}

/// Partition bits plus the core terms of every layer of an already-merged
/// graph: the part of the layered DL that depends on the partition.
pub fn multilayer_core_dl(
    g_merged: &LayeredMultigraph,
    partition: &Partition,
    prior: &WeightPrior,
) -> Result<f64> {
    let n_r = partition.group_sizes();
    let mut total = dl_partition(partition);
    for l in 0..g_merged.n_layers() {
        total += BlockState::from_layer(g_merged, l, partition)?.bits_core(&n_r, prior);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Edge;
    use crate::sbm::description_length;
    use approx::assert_relative_eq;

    fn graph(n: usize, layers: Vec<Vec<Edge>>, labels: &[&str]) -> LayeredMultigraph {
        LayeredMultigraph {
            nodes: (0..n).map(|i| format!("n{i}")).collect(),
            layer_labels: labels.iter().map(|s| s.to_string()).collect(),
            layers,
        }
    }

    #[test]
    fn extension_zero_for_singletons() {
        let g = graph(
            2,
            vec![
                vec![Edge { src: 0, dst: 1, w: 1.0 }],
                vec![Edge { src: 1, dst: 0, w: 2.0 }],
            ],
            &["a", "b"],
        );
        let bins = BinSet::singletons(2, BinningKind::Contiguous);
        assert_eq!(extension_term(&g, &bins).unwrap(), 0.0);
    }

    #[test]
    fn extension_two_layer_bin() {
        // one bin of 2 layers with one edge each: log2 2 + log2 3
        let g = graph(
            2,
            vec![
                vec![Edge { src: 0, dst: 1, w: 1.0 }],
                vec![Edge { src: 1, dst: 0, w: 2.0 }],
            ],
            &["a", "b"],
        );
        let bins = BinSet::aggregated(2, BinningKind::Contiguous);
        assert_relative_eq!(
            extension_term(&g, &bins).unwrap(),
            1.0 + (3f64).log2(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn extension_empty_bin_is_free() {
        let g = graph(
            2,
            vec![vec![Edge { src: 0, dst: 1, w: 1.0 }], vec![], vec![]],
            &["a", "b", "c"],
        );
        // bin {1,2} holds no edges: zero recovery bits
        let bins = BinSet::new(vec![vec![0], vec![1, 2]], BinningKind::Contiguous).unwrap();
        assert_eq!(extension_term(&g, &bins).unwrap(), 0.0);
    }

    /// The layer-recovery code is a probability distribution: summed over
    /// every assignment of the bin's edges to member layers it gives 1.
    #[test]
    fn extension_recovery_code_normalizes() {
        for (m, e) in [(2usize, 4u64), (3, 5), (3, 3)] {
            let mut total = 0.0;
            let assignments = (m as u64).pow(e as u32);
            for code in 0..assignments {
                let mut counts = vec![0u64; m];
                let mut c = code;
                for _ in 0..e {
                    counts[(c % m as u64) as usize] += 1;
                    c /= m as u64;
                }
                let bits = log2_multinomial(&counts) + log2_multiset(m as u64, e);
                total += (2f64).powf(-bits);
            }
            assert!((total - 1.0).abs() < 1e-10, "m={m} e={e}: {total}");
        }
    }

    #[test]
    fn binset_prior_cases() {
        let b1 = BinSet::singletons(1, BinningKind::Contiguous);
        assert_eq!(binset_prior(&b1, 1).unwrap(), 0.0);

        // L = 8, D = 4 contiguous: log2 8 + log2 C(7,3) = 3 + log2 35
        let b =
            BinSet::new(vec![vec![0, 1], vec![2], vec![3], vec![4, 5, 6, 7]], BinningKind::Contiguous)
                .unwrap();
        assert_relative_eq!(
            binset_prior(&b, 8).unwrap(),
            3.0 + (35f64).log2(),
            epsilon = 1e-12
        );

        // D > L rejected
        assert!(binset_prior(&b, 3).is_err());
    }

    #[test]
    fn binset_prior_normalizes_contiguous() {
        for l in 1..=8usize {
            let mut total = 0.0;
            for cuts in 0..(1u32 << (l - 1)) {
                let mut bins = Vec::new();
                let mut cur = vec![0usize];
                for pos in 1..l {
                    if cuts >> (pos - 1) & 1 == 1 {
                        bins.push(std::mem::take(&mut cur));
                    }
                    cur.push(pos);
                }
                bins.push(cur);
                let bs = BinSet::new(bins, BinningKind::Contiguous).unwrap();
                total += (2f64).powf(-binset_prior(&bs, l).unwrap());
            }
            assert!((total - 1.0).abs() < 1e-10, "L={l}: {total}");
        }
    }

    #[test]
    fn binset_prior_normalizes_non_contiguous() {
        for l in 1..=6usize {
            // enumerate set partitions of the layers via restricted growth strings
            let mut rgs = vec![0usize; l];
            let mut total = 0.0;
            let mut done = false;
            while !done {
                let nbins = rgs.iter().max().unwrap() + 1;
                let mut bins = vec![Vec::new(); nbins];
                for (layer, &bin) in rgs.iter().enumerate() {
                    bins[bin].push(layer);
                }
                let bs = BinSet::new(bins, BinningKind::NonContiguous).unwrap();
                total += (2f64).powf(-binset_prior(&bs, l).unwrap());
                let mut i = l - 1;
                loop {
                    let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
                    if i > 0 && rgs[i] <= max_prefix {
                        rgs[i] += 1;
                        for v in rgs.iter_mut().skip(i + 1) {
                            *v = 0;
                        }
                        break;
                    }
                    if i == 0 {
                        done = true;
                        break;
                    }
                    i -= 1;
                }
            }
            assert!((total - 1.0).abs() < 1e-10, "L={l}: {total}");
        }
    }

    #[test]
    fn single_layer_reduces_to_flat_sbm() {
        let g = graph(
            3,
            vec![vec![
                Edge { src: 0, dst: 1, w: 2.0 },
                Edge { src: 1, dst: 2, w: 3.0 },
                Edge { src: 2, dst: 0, w: 0.5 },
            ]],
            &["only"],
        );
        let p = Partition::new(vec![0, 0, 1]).unwrap();
        let prior = WeightPrior::default();
        let flat = description_length(&g, &p, &prior).unwrap();
        let bins = BinSet::singletons(1, BinningKind::Contiguous);
        let layered = layered_dl(&g, &p, &bins, &prior).unwrap();
        assert_eq!(layered.total.to_bits(), flat.total.to_bits());
        assert_eq!(layered.extension_bits, 0.0);
        assert_eq!(layered.binset_prior_bits, 0.0);
        assert_eq!(layered.per_bin.len(), 1);
        assert_eq!(layered.per_bin[0].bits_adjacency, flat.bits_adjacency);
    }

    #[test]
    fn total_is_sum_of_parts() {
        let g = graph(
            3,
            vec![
                vec![Edge { src: 0, dst: 1, w: 2.0 }, Edge { src: 1, dst: 2, w: 1.0 }],
                vec![Edge { src: 2, dst: 0, w: 4.0 }],
            ],
            &["x", "y"],
        );
        let p = Partition::new(vec![0, 1, 1]).unwrap();
        let prior = WeightPrior::default();
        let bins = BinSet::singletons(2, BinningKind::Contiguous);
        let dl = layered_dl(&g, &p, &bins, &prior).unwrap();
        let resum = dl.bits_partition
            + dl.per_bin.iter().map(|b| b.total).sum::<f64>()
            + dl.extension_bits
            + dl.binset_prior_bits;
        assert_relative_eq!(dl.total, resum, epsilon = 1e-12);
        assert_relative_eq!(dl.data_bits() + dl.model_bits(), dl.total, epsilon = 1e-12);
    }

    #[test]
    fn aggregation_equals_collapsed_plus_overheads() {
        let g = graph(
            3,
            vec![
                vec![Edge { src: 0, dst: 1, w: 2.0 }, Edge { src: 1, dst: 2, w: 1.0 }],
                vec![Edge { src: 2, dst: 0, w: 4.0 }],
            ],
            &["x", "y"],
        );
        let p = Partition::trivial(3);
        let prior = WeightPrior::default();
        let bins = BinSet::aggregated(2, BinningKind::Contiguous);
        let dl = layered_dl(&g, &p, &bins, &prior).unwrap();
        let flat = description_length(&g.collapse(), &p, &prior).unwrap();
        let expected = flat.total + extension_term(&g, &bins).unwrap() + binset_prior(&bins, 2).unwrap();
        assert_relative_eq!(dl.total, expected, epsilon = 1e-12);
    }

    /// A layer and its exact copy compress better in one bin than in two:
    /// the pooled pattern pays the recovery code but saves a whole set of
    /// per-layer parameter priors.
    #[test]
    fn duplicated_layer_prefers_merged_bin() {
        // sparse assortative two-block pattern over 20 nodes
        let mut edges = Vec::new();
        for i in 0..10usize {
            for d in 1..=3usize {
                let j = (i + d) % 10;
                edges.push(Edge { src: i, dst: j, w: 3.0 });
                edges.push(Edge { src: 10 + i, dst: 10 + j, w: 3.5 });
            }
        }
        edges.push(Edge { src: 0, dst: 10, w: 1.0 });
        edges.push(Edge { src: 10, dst: 0, w: 1.2 });
        let g = graph(20, vec![edges.clone(), edges], &["l1", "l2"]);
        let p = Partition::new(
            (0..20).map(|i| if i < 10 { 0 } else { 1 }).collect::<Vec<_>>(),
        )
        .unwrap();
        let prior = WeightPrior::default();
        let merged = layered_dl(&g, &p, &BinSet::aggregated(2, BinningKind::Contiguous), &prior)
            .unwrap();
        let separate = layered_dl(&g, &p, &BinSet::singletons(2, BinningKind::Contiguous), &prior)
            .unwrap();
        assert!(
            merged.total < separate.total,
            "merged {} vs separate {}",
            merged.total,
            separate.total
        );
    }

    #[test]
    fn core_dl_matches_layered_parts() {
        let g = graph(
            3,
            vec![
                vec![Edge { src: 0, dst: 1, w: 2.0 }],
                vec![Edge { src: 2, dst: 0, w: 4.0 }, Edge { src: 1, dst: 2, w: 1.0 }],
            ],
            &["x", "y"],
        );
        let p = Partition::new(vec![0, 1, 1]).unwrap();
        let prior = WeightPrior::default();
        let bins = BinSet::singletons(2, BinningKind::Contiguous);
        let merged = g.merge_layers(&bins).unwrap();
        let core = multilayer_core_dl(&merged, &p, &prior).unwrap();
        let dl = layered_dl(&g, &p, &bins, &prior).unwrap();
        assert_relative_eq!(
            core,
            dl.total - dl.extension_bits - dl.binset_prior_bits,
            epsilon = 1e-9
        );
    }
}
