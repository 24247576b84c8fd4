//! Values at positions the adjacency excludes never reach the output.

use cofusion::genegraph::AdjacencyMask;
use cofusion::netmodel::{Heads, ModelInput, Network, NetworkConfig, Variant};
use cofusion::numcore::{Matrix, RngStream};

fn random(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

fn random_network(seed: u64) -> (Network, Matrix, Matrix, RngStream) {
    let mut rng = RngStream::new(seed, 0);
    let p = 4 + rng.index(20);
    let density = rng.uniform_range(0.0, 0.5);
    let mut pairs = Vec::new();
    for r in 0..p {
        for c in r + 1..p {
            if rng.bernoulli(density) {
                pairs.push((r, c));
            }
        }
    }
    let mask = AdjacencyMask::from_pairs(p, pairs).unwrap();
    let image_dim = 3 + rng.index(10);
    let mut cfg = NetworkConfig::new(Variant::Fused, Heads::Both, p, 3).with_image_dim(image_dim);
    cfg.gene_repr_dim = 2 + rng.index(12);
    cfg.trunk_dims = vec![8, 4];
    cfg.head_hidden = 4;
    let net = Network::assemble(cfg, Some(mask), &mut rng).unwrap();
    let n = 1 + rng.index(8);
    let x = random(n, p, &mut rng);
    let img = random(n, image_dim, &mut rng);
    (net, x, img, rng)
}

#[test]
fn dense_forward_ignores_injected_values_outside_the_mask() {
    for seed in 0..100 {
        let (net, x, img, mut rng) = random_network(seed);
        let layer = net.gene_layer().unwrap();
        let p = layer.mask.dim();
        let mut dense = layer.dense_weights(net.params());
        for r in 0..p {
            for c in 0..p {
                if !layer.mask.contains(r, c) {
                    dense.set(r, c, 1e6 * rng.normal());
                }
            }
        }
        let input = ModelInput { expression: Some(&x), image: Some(&img) };
        let sparse = net.predict(input).unwrap();
        let reference = net.predict_dense_reference(input, &dense).unwrap();
        let bits =
            |m: &Option<Matrix>| -> Vec<u64> { m.as_ref().unwrap().as_slice().iter().map(|v| v.to_bits()).collect() };
        assert_eq!(bits(&sparse.risk), bits(&reference.risk), "seed {seed}");
        assert_eq!(bits(&sparse.log_probs), bits(&reference.log_probs), "seed {seed}");
    }
}

#[test]
fn masked_weights_have_one_slot_per_adjacency_entry() {
    for seed in 0..20 {
        let (net, ..) = random_network(seed);
        let layer = net.gene_layer().unwrap();
        let id = net.param_index("gene.sparse.weight").unwrap();
        assert_eq!(net.params()[id].value.shape(), (1, layer.mask.nnz()));
        let dense = layer.dense_weights(net.params());
        let p = layer.mask.dim();
        for r in 0..p {
            for c in 0..p {
                if !layer.mask.contains(r, c) {
                    assert_eq!(dense.get(r, c), 0.0);
                }
            }
        }
    }
}
