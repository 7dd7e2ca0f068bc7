//! Property tests for the numeric kernels, model symmetries, the binomial
//! tail, and the measure identities.

use gnnanatomy::dense::DenseMatrix;
use gnnanatomy::graph::{normalized_adjacency, Graph};
use gnnanatomy::models::{
    spmm, Model, ModelKind, ModelSpec, PreparedGraph, PropagationKind, TaskKind,
};
use gnnanatomy::stats::{binom_upper_tail, SolvableSet};
use proptest::prelude::*;

/// Arbitrary undirected simple graph as an edge mask over at most n nodes.
fn arb_graph(max_nodes: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_nodes).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        let len = pairs.len();
        (
            Just(n),
            proptest::collection::vec(any::<bool>(), len).prop_map(move |mask| {
                pairs
                    .iter()
                    .zip(&mask)
                    .filter(|&(_, &keep)| keep)
                    .map(|(&e, _)| e)
                    .collect::<Vec<_>>()
            }),
        )
    })
}

fn dense_of(adj: &gnnanatomy::graph::CsrMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(adj.num_rows, adj.num_cols);
    for i in 0..adj.num_rows {
        for k in adj.row_offsets[i]..adj.row_offsets[i + 1] {
            out.set(i, adj.col_indices[k], adj.values[k]);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// spmm agrees with the dense matrix product of the densified adjacency.
    #[test]
    fn spmm_matches_dense_oracle(
        (n, edges) in arb_graph(50),
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let feats: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let graph = Graph::from_edges(n, &edges, DenseMatrix::from_rows(&feats), None).unwrap();
        let adj = normalized_adjacency(&graph);
        let sparse = spmm(&adj, graph.features()).unwrap();
        let dense = gnnanatomy::dense::matmul(&dense_of(&adj), graph.features());
        for (a, b) in sparse.data().iter().zip(dense.data()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    /// Normalized adjacency: symmetric, coefficients in (0, 1].
    #[test]
    fn normalized_adjacency_properties((n, edges) in arb_graph(30)) {
        let graph = Graph::from_edges(n, &edges, DenseMatrix::zeros(n, 1), None).unwrap();
        let adj = normalized_adjacency(&graph);
        let dense = dense_of(&adj);
        for i in 0..n {
            for j in 0..n {
                let v = dense.get(i, j);
                prop_assert!(v >= 0.0 && v <= 1.0);
                prop_assert!((v - dense.get(j, i)).abs() < 1e-15);
            }
            prop_assert!(dense.get(i, i) > 0.0);
        }
    }

    /// Permuting node ids permutes node logits identically, for every model
    /// family, and leaves the graph readout unchanged.
    #[test]
    fn node_permutation_equivariance(
        (n, edges) in arb_graph(12),
        seed in 0u64..1000,
        kind_idx in 0usize..6,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let kind = match kind_idx {
            0 => ModelKind::Features,
            i => ModelKind::Gnn(PropagationKind::ALL[i - 1]),
        };
        let feats: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();

        // random permutation
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let permuted_feats: Vec<Vec<f64>> = (0..n).map(|v| feats[perm[v]].clone()).collect();
        let inv: Vec<usize> = {
            let mut inv = vec![0; n];
            for (new, &old) in perm.iter().enumerate() {
                inv[old] = new;
            }
            inv
        };
        let permuted_edges: Vec<(usize, usize)> =
            edges.iter().map(|&(u, v)| (inv[u], inv[v])).collect();

        let g = PreparedGraph::new(
            Graph::from_edges(n, &edges, DenseMatrix::from_rows(&feats), None).unwrap(),
        );
        let gp = PreparedGraph::new(
            Graph::from_edges(n, &permuted_edges, DenseMatrix::from_rows(&permuted_feats), None)
                .unwrap(),
        );

        let spec = ModelSpec {
            hidden_override: Some(4),
            ..ModelSpec::new(kind, TaskKind::Node)
        };
        let model = Model::new(spec, 3, 2);
        let params = model.init_params(&mut rng);
        let logits = model.forward(&g, &params).unwrap();
        let logits_p = model.forward(&gp, &params).unwrap();
        for old in 0..n {
            for j in 0..2 {
                let a = logits.logits().get(old, j);
                let b = logits_p.logits().get(inv[old], j);
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "node {old} ch {j}: {a} vs {b}");
            }
        }
        let r = gnnanatomy::models::graph_readout(logits.logits()).unwrap();
        let rp = gnnanatomy::models::graph_readout(logits_p.logits()).unwrap();
        for (a, b) in r.iter().zip(&rp) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    /// Upper tail agrees with direct f64 summation of the pmf for small n.
    #[test]
    fn binom_tail_matches_direct_summation(
        n in 1usize..=60,
        k_frac in 0.0f64..=1.0,
        p in prop::sample::select(vec![0.5, 1.0/3.0, 0.25, 1.0/7.0, 0.1]),
    ) {
        let k = ((n as f64) * k_frac).round() as usize;
        let tail = binom_upper_tail(n, k, p).unwrap();
        // direct oracle: pmf by multiplicative recurrence from i = 0
        let mut pmf = (1.0 - p).powi(n as i32);
        let mut acc = 0.0;
        for i in 0..=n {
            if i >= k {
                acc += pmf;
            }
            if i < n {
                pmf *= ((n - i) as f64 / (i + 1) as f64) * (p / (1.0 - p));
            }
        }
        prop_assert!((tail - acc).abs() <= 1e-10 * acc.max(1e-300), "n={n} k={k} p={p}: {tail} vs {acc}");
    }

    /// The measure chain 0 <= FandE <= min <= max <= ForE <= F+E and exact
    /// integer inclusion-exclusion, on random subsets of a shared universe.
    #[test]
    fn measure_identities(
        universe in 1usize..200,
        mask_f in proptest::collection::vec(any::<bool>(), 200),
        mask_e in proptest::collection::vec(any::<bool>(), 200),
    ) {
        let make = |name: &str, mask: &[bool]| SolvableSet {
            dataset_name: "ds".into(),
            model_name: name.into(),
            prediction_ids: (0..universe).filter(|&i| mask[i]).collect(),
            universe_size: universe,
            alpha: 0.001,
            n_runs: 100,
            num_classes: 2,
        };
        let f = make("features", &mask_f);
        let e = make("edges", &mask_e);
        let fande = gnnanatomy::measures::fande(&f, &e).unwrap();
        let fore = gnnanatomy::measures::fore(&f, &e).unwrap();
        let rf = f.ratio();
        let re = e.ratio();
        prop_assert!(0.0 <= fande);
        prop_assert!(fande <= rf.min(re) + 1e-15);
        prop_assert!(rf.max(re) <= fore + 1e-15);
        prop_assert!(fore <= rf + re + 1e-15);
        // inclusion-exclusion as exact set-cardinality arithmetic
        let p = universe as f64;
        let union = (fore * p).round() as i64;
        let inter = (fande * p).round() as i64;
        prop_assert_eq!(union, f.len() as i64 + e.len() as i64 - inter);
        // jaccard: symmetric, in [0,1], 1 iff equal (when defined)
        let j_fe = gnnanatomy::measures::jaccard_across_datasets(&[&f], &[&e]).unwrap();
        let j_ef = gnnanatomy::measures::jaccard_across_datasets(&[&e], &[&f]).unwrap();
        prop_assert_eq!(j_fe, j_ef);
        if let Some(j) = j_fe {
            prop_assert!((0.0..=1.0).contains(&j));
            prop_assert_eq!(j == 1.0, f.prediction_ids == e.prediction_ids);
        } else {
            prop_assert!(f.is_empty() && e.is_empty());
        }
    }
}
