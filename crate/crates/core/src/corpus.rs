//! Model families and random model generators.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{CompartmentId, Model};

type Edge = (CompartmentId, CompartmentId);

fn doubled(pairs: &[Edge]) -> Vec<Edge> {
    pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect()
}

/// Path `1 <-> 2 <-> ... <-> n`.
pub fn catenary(n: usize) -> Vec<Edge> {
    doubled(&(1..n).map(|i| (i, i + 1)).collect::<Vec<_>>())
}

/// Star with center 1.
pub fn mammillary(n: usize) -> Vec<Edge> {
    doubled(&(2..=n).map(|i| (1, i)).collect::<Vec<_>>())
}

/// Cycle `1 <-> 2 <-> ... <-> n <-> 1`, `n >= 3`.
pub fn bidirectional_cycle(n: usize) -> Vec<Edge> {
    assert!(n >= 3);
    let mut pairs: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
    pairs.push((n, 1));
    doubled(&pairs)
}

/// Undirected tree encoded by a Prüfer sequence over `1..=n`.
pub fn prufer_decode(seq: &[usize], n: usize) -> Vec<Edge> {
    assert_eq!(seq.len() + 2, n.max(2));
    if n == 1 {
        return Vec::new();
    }
    let mut degree = vec![1usize; n + 1];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &v in seq {
        let leaf = (1..=n).find(|&u| degree[u] == 1).unwrap();
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<_> = (1..=n).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges.sort_unstable();
    edges
}

/// All `n^(n-2)` labeled trees on `1..=n`, as doubled edge lists.
pub fn labeled_trees(n: usize) -> Vec<Vec<Edge>> {
    if n <= 2 {
        return vec![catenary(n)];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let seq: Vec<_> = (0..len)
                .map(|_| {
                    let d = code % n;
                    code /= n;
                    d + 1
                })
                .collect();
            doubled(&prufer_decode(&seq, n))
        })
        .collect()
}

/// Subsets of `1..=n` with at most `max` elements, smallest first.
pub fn subsets_up_to(n: usize, max: usize) -> Vec<Vec<CompartmentId>> {
    let mut out: Vec<Vec<CompartmentId>> = (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize <= max)
        .map(|mask| (1..=n).filter(|&i| mask & (1 << (i - 1)) != 0).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Every single-input single-output model on `edges` with at most
/// `max_leaks` leaks.
pub fn single_io_models(n: usize, edges: &[Edge], max_leaks: usize) -> Vec<Model> {
    let mut out = Vec::new();
    for inp in 1..=n {
        for o in 1..=n {
            for leaks in subsets_up_to(n, max_leaks) {
                out.push(Model::new(n, edges, &[inp], &[o], &leaks).expect("valid by construction"));
            }
        }
    }
    out
}

/// A random strongly connected graph on `n` compartments, resampled until
/// strongly connected. `density` is the probability of each ordered pair.
pub fn random_sc_edges(rng: &mut impl Rng, n: usize, density: f64) -> Vec<Edge> {
    let pairs: Vec<Edge> = (1..=n)
        .flat_map(|a| (1..=n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    loop {
        let edges: Vec<Edge> = pairs.iter().copied().filter(|_| rng.gen_bool(density)).collect();
        let m = Model::new(n, &edges, &[1], &[1], &[]).expect("valid by construction");
        if m.is_strongly_connected() {
            return edges;
        }
    }
}

fn random_nonempty(rng: &mut impl Rng, n: usize) -> Vec<CompartmentId> {
    let k = rng.gen_range(1..=n);
    let mut all: Vec<_> = (1..=n).collect();
    all.shuffle(rng);
    all.truncate(k);
    all.sort_unstable();
    all
}

/// Random strongly connected model with `1 <= n <= max_n`, nonempty random
/// inputs and outputs, and each compartment leaking with probability 1/3.
pub fn random_sc_model(rng: &mut impl Rng, max_n: usize) -> Model {
    let n = rng.gen_range(1..=max_n);
    let density = rng.gen_range(0.3..0.8);
    let edges = random_sc_edges(rng, n, density);
    let inputs = random_nonempty(rng, n);
    let outputs = random_nonempty(rng, n);
    let leaks: Vec<_> = (1..=n).filter(|_| rng.gen_bool(1.0 / 3.0)).collect();
    Model::new(n, &edges, &inputs, &outputs, &leaks).expect("valid by construction")
}

/// Random strongly connected leakless model with `In = Out = {1}` and
/// `min_n <= n <= max_n`.
pub fn random_sc_io1_model(rng: &mut impl Rng, min_n: usize, max_n: usize) -> Model {
    let n = rng.gen_range(min_n..=max_n);
    let density = rng.gen_range(0.3..0.8);
    let edges = random_sc_edges(rng, n, density);
    Model::new(n, &edges, &[1], &[1], &[]).expect("valid by construction")
}

fn stream_rng(seed: u64, stream: u64, i: usize) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let base = seed ^ stream.wrapping_mul(0xA24B_AED4_963E_E407);
    rand_chacha::ChaCha8Rng::seed_from_u64(crate::ident::trial_seed(base, i))
}

/// `count` models from [`random_sc_model`]; model `i` depends only on
/// `(seed, i)`.
pub fn random_sc_models(seed: u64, count: usize, max_n: usize) -> Vec<Model> {
    (0..count)
        .map(|i| random_sc_model(&mut stream_rng(seed, 1, i), max_n))
        .collect()
}

/// `count` models from [`random_sc_io1_model`]; model `i` depends only on
/// `(seed, i)`.
pub fn random_sc_io1_models(seed: u64, count: usize, min_n: usize, max_n: usize) -> Vec<Model> {
    (0..count)
        .map(|i| random_sc_io1_model(&mut stream_rng(seed, 2, i), min_n, max_n))
        .collect()
}

/// Small named models with known verdicts.
pub mod fixtures {
    use super::*;

    /// Complete bidirected graph on three compartments, leak at 2.
    pub fn k3_leak2() -> Model {
        Model::new(3, &doubled(&[(1, 2), (1, 3), (2, 3)]), &[1], &[1], &[2]).unwrap()
    }

    pub fn uniden_dist0_leak0() -> Model {
        Model::new(3, &[(1, 2), (3, 1), (2, 3), (3, 2)], &[1], &[1], &[]).unwrap()
    }

    pub fn iden_dist2() -> Model {
        Model::new(3, &[(1, 2), (2, 3), (3, 1)], &[1], &[3], &[]).unwrap()
    }

    pub fn iden_leak2() -> Model {
        Model::new(3, &[(1, 2), (2, 3), (3, 1)], &[1], &[2], &[1, 2]).unwrap()
    }

    pub fn triangle() -> Model {
        Model::new(3, &[(2, 1), (1, 2), (2, 3), (3, 1)], &[1], &[1], &[]).unwrap()
    }

    /// Leaf `1 <-> 4` on [`triangle`], output moved to 4.
    pub fn triangle_leaf_out4() -> Model {
        triangle().with_leaf_edge(1).unwrap().with_sets(&[1], &[4], &[]).unwrap()
    }

    /// Leaf `1 <-> 4` on [`triangle`], input and output kept at 1.
    pub fn triangle_leaf() -> Model {
        triangle().with_leaf_edge(1).unwrap()
    }

    pub fn cat3_leak1() -> Model {
        Model::new(3, &catenary(3), &[1], &[1], &[1]).unwrap()
    }

    /// Leaf `1 <-> 4` on [`cat3_leak1`], input moved to 4.
    pub fn cat3_leaf_in4() -> Model {
        cat3_leak1().with_leaf_edge(1).unwrap().with_sets(&[4], &[1], &[1]).unwrap()
    }

    pub fn cat2_in1_out2() -> Model {
        Model::new(2, &catenary(2), &[1], &[2], &[]).unwrap()
    }

    pub fn one_compartment() -> Model {
        Model::new(1, &[], &[1], &[1], &[]).unwrap()
    }

    pub fn bicycle(n: usize) -> Model {
        Model::new(n, &bidirectional_cycle(n), &[1], &[1], &[]).unwrap()
    }

    /// `(name, model, identifiable)` for every fixture with a known verdict.
    pub fn verdicts() -> Vec<(String, Model, bool)> {
        let mut v = vec![
            ("k3-leak2".to_string(), k3_leak2(), false),
            ("uniden-dist0-leak0".into(), uniden_dist0_leak0(), false),
            ("iden-dist2".into(), iden_dist2(), true),
            ("iden-leak2".into(), iden_leak2(), true),
            ("triangle".into(), triangle(), true),
            ("triangle-leaf-out4".into(), triangle_leaf_out4(), true),
            ("triangle-leaf".into(), triangle_leaf(), true),
            ("cat3-leak1".into(), cat3_leak1(), true),
            ("cat3-leaf-in4".into(), cat3_leaf_in4(), true),
        ];
        for n in 3..=6 {
            v.push((format!("bicycle-{n}"), bicycle(n), false));
        }
        v
    }

    /// Every named fixture, for writing to disk.
    pub fn all() -> Vec<(String, Model)> {
        let mut v: Vec<_> = verdicts().into_iter().map(|(n, m, _)| (n, m)).collect();
        v.push(("cat2-in1-out2".into(), cat2_in1_out2()));
        v.push(("one-compartment".into(), one_compartment()));
        v
    }
}
