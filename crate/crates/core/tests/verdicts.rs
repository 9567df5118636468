use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lincomp::corpus::{self, fixtures};
use lincomp::ident::{
    count_criterion, decide_identifiability, expected_dimension, isc_sufficiency, leak_excess,
    Method, RankOptions, Status,
};
use lincomp::transforms::{add_leaf_edge, add_leak, apply, Guarantee, Transform};
use lincomp::Model;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn forced() -> RankOptions {
    RankOptions {
        force_rank: true,
        ..RankOptions::default()
    }
}

fn rank_identifiable(m: &Model) -> bool {
    decide_identifiability(m, &forced()).unwrap().status.is_identifiable()
}

fn random_corpus(seed: u64, count: usize, max_n: usize) -> Vec<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| corpus::random_sc_model(&mut rng, max_n)).collect()
}

fn single_io(m: &Model, rng_pick: usize) -> Model {
    let n = m.n();
    let i = rng_pick % n + 1;
    let o = (rng_pick / n) % n + 1;
    let leaks: Vec<_> = m.leaks().iter().copied().collect();
    m.with_sets(&[i], &[o], &leaks).unwrap()
}

#[test]
fn fixture_files_match_generators() {
    for (name, model) in fixtures::all() {
        let path = fixture_dir().join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Model::from_json(&text).unwrap(), model, "{name}");
    }
    let bad = std::fs::read_to_string(fixture_dir().join("malformed.json")).unwrap();
    assert!(Model::from_json(&bad).is_err());
}

#[test]
fn manifest_lists_every_fixture() {
    let text = std::fs::read_to_string(fixture_dir().join("manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    for (name, _) in fixtures::all() {
        assert!(manifest.get(&name).is_some(), "{name} missing from manifest");
    }
}

#[test]
fn fixture_verdicts_hold_with_and_without_shortcuts() {
    for (name, m, want) in fixtures::verdicts() {
        let fast = decide_identifiability(&m, &RankOptions::default()).unwrap();
        let slow = decide_identifiability(&m, &forced()).unwrap();
        assert_eq!(fast.status.is_identifiable(), want, "{name}");
        assert_eq!(slow.status.is_identifiable(), want, "{name}");
    }
}

#[test]
fn k3_is_refuted_by_counting() {
    let v = decide_identifiability(&fixtures::k3_leak2(), &RankOptions::default()).unwrap();
    assert_eq!((v.status, v.method), (Status::Unidentifiable, Method::CountCriterion));
    let m = fixtures::uniden_dist0_leak0();
    assert_eq!(count_criterion(&m), Ok(None));
    assert_eq!(decide_identifiability(&m, &RankOptions::default()).unwrap().method, Method::JacobianRank);
}

#[test]
fn structural_shortcuts_agree_with_rank() {
    for (k, m) in random_corpus(11, 150, 4).iter().enumerate() {
        let m = single_io(m, k * 7);
        let rank = rank_identifiable(&m);
        if count_criterion(&m).unwrap().is_some() {
            assert!(!rank, "count criterion: {}", m.to_json());
        }
        if isc_sufficiency(&m).is_some() {
            assert!(rank, "isc: {}", m.to_json());
        }
        if leak_excess(&m) {
            assert!(!rank, "leak excess: {}", m.to_json());
        }
    }
}

#[test]
fn guarantees_hold_empirically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let m = corpus::random_sc_io1_model(&mut rng, 2, 4);
        let before = rank_identifiable(&m);
        let dim_before = expected_dimension(&m, &RankOptions::default()).unwrap().has_expected_dimension;
        for t in [
            Transform::AddLeafEdge { at: 1 },
            Transform::AddLeafEdge { at: m.n() },
            Transform::AddLeafMoveOutput { at: 1 },
            Transform::AddLeafMoveInput { at: 1 },
            Transform::AddLeak { at: 1 },
        ] {
            let r = apply(&m, t).unwrap();
            assert_ne!(r.guarantee, Guarantee::None, "{t:?}");
            let after = rank_identifiable(&r.model);
            let dim_after = expected_dimension(&r.model, &RankOptions::default())
                .unwrap()
                .has_expected_dimension;
            if r.guarantee.preserves_identifiability() && before {
                assert!(after, "{t:?} on {}", m.to_json());
            }
            if r.guarantee.preserves_expected_dimension() && dim_before {
                assert!(dim_after, "{t:?} on {}", m.to_json());
            }
            if r.guarantee == Guarantee::Iff {
                assert_eq!(before, after, "{t:?} on {}", m.to_json());
                assert_eq!(dim_before, dim_after, "{t:?} on {}", m.to_json());
            }
        }
    }
}

#[test]
fn removing_the_only_leak_keeps_identifiability() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let base = corpus::random_sc_io1_model(&mut rng, 2, 4);
        let m = base.with_sets(&[1], &[1], &[1]).unwrap();
        let r = apply(&m, Transform::RemoveLeak { at: 1 }).unwrap();
        assert_eq!(r.guarantee, Guarantee::PreservesIdentifiability);
        if rank_identifiable(&m) {
            assert!(rank_identifiable(&r.model));
        }
    }
}

#[test]
fn adding_a_leak_keeps_expected_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let opts = RankOptions::default();
    for k in 0..40 {
        let base = corpus::random_sc_io1_model(&mut rng, 2, 4);
        let m = single_io(&base, k);
        let at = k % m.n() + 1;
        let leaky = add_leak(&m, at).unwrap().model;
        if expected_dimension(&m, &opts).unwrap().has_expected_dimension {
            assert!(expected_dimension(&leaky, &opts).unwrap().has_expected_dimension, "{}", m.to_json());
        }
    }
}

#[test]
fn leaf_edges_keep_trees_trees() {
    for n in 1..=4 {
        for g in corpus::labeled_trees(n) {
            let m = Model::new(n, &g, &[1], &[1], &[]).unwrap();
            for at in 1..=n {
                assert!(add_leaf_edge(&m, at).unwrap().model.is_bidirectional_tree());
            }
        }
    }
}

#[test]
fn verdicts_are_seed_independent_on_fixtures() {
    for (name, m, _) in fixtures::verdicts() {
        let a = decide_identifiability(&m, &forced()).unwrap().status;
        let b = decide_identifiability(&m, &RankOptions { seed: 99, ..forced() }).unwrap().status;
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn isc_sufficiency_agrees_with_rank_on_all_small_graphs() {
    for n in 1..=4usize {
        let pairs: Vec<_> = (1..=n)
            .flat_map(|a| (1..=n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = (0..pairs.len()).filter(|&k| mask & (1 << k) != 0).map(|k| pairs[k]).collect();
            for leak in 0..=n {
                let leaks: Vec<_> = (leak > 0).then_some(leak).into_iter().collect();
                let m = Model::new(n, &edges, &[1], &[1], &leaks).unwrap();
                if isc_sufficiency(&m).is_some() {
                    assert!(rank_identifiable(&m), "{}", m.to_json());
                }
            }
        }
    }
}
