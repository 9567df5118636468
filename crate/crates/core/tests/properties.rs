use std::collections::BTreeMap;

use proptest::prelude::*;

use lincomp::auxgraph::{leak_augmented, strip_outgoing, AuxGraph};
use lincomp::det::{det_laplace, det_leibniz};
use lincomp::forest::{enumerate_forests, forest_sums, nonconstant_counts, ForestQuery};
use lincomp::ident::{coefficient_map, rank_mod};
use lincomp::poly::{mul_mod, add_mod, FieldPoint, Monomial, PRIMES};
use lincomp::{LambdaPoly, Model, Param, Polynomial};

fn model_strategy(max_n: usize) -> impl Strategy<Value = Model> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1);
        (
            Just(n),
            proptest::collection::vec(any::<bool>(), pairs),
            proptest::collection::vec(any::<bool>(), n),
            1..=n,
            1..=n,
        )
            .prop_map(|(n, mask, leak_mask, inp, out)| {
                let all: Vec<_> = (1..=n)
                    .flat_map(|a| (1..=n).filter(move |&b| b != a).map(move |b| (a, b)))
                    .collect();
                let edges: Vec<_> = all.into_iter().zip(mask).filter(|(_, k)| *k).map(|(e, _)| e).collect();
                let leaks: Vec<_> = (1..=n).zip(leak_mask).filter(|(_, k)| *k).map(|(i, _)| i).collect();
                Model::new(n, &edges, &[inp], &[out], &leaks).unwrap()
            })
    })
}

fn sc_model_strategy(max_n: usize) -> impl Strategy<Value = Model> {
    model_strategy(max_n).prop_filter("strongly connected", |m| m.is_strongly_connected())
}

const VARS: [Param; 4] = [
    Param::Edge { to: 2, from: 1 },
    Param::Edge { to: 1, from: 2 },
    Param::Leak { at: 1 },
    Param::Edge { to: 3, from: 2 },
];

fn poly_strategy() -> impl Strategy<Value = Polynomial> {
    proptest::collection::vec((proptest::collection::vec(0usize..4, 0..4), -5i64..=5), 0..5).prop_map(
        |terms| {
            let mut p = Polynomial::zero();
            for (vars, c) in terms {
                let mono = Monomial::from_params(vars.into_iter().map(|v| VARS[v]).collect());
                p.add_term(mono, c.into());
            }
            p
        },
    )
}

fn point_strategy() -> impl Strategy<Value = FieldPoint> {
    proptest::collection::vec(1u64..PRIMES[0], 4)
        .prop_map(|vals| FieldPoint::new(PRIMES[0], VARS.iter().copied().zip(vals)))
}

fn reachability(m: &Model) -> Vec<Vec<bool>> {
    let n = m.n();
    let mut r = vec![vec![false; n + 1]; n + 1];
    for i in 1..=n {
        r[i][i] = true;
    }
    for (a, b) in m.edges() {
        r[a][b] = true;
    }
    for k in 1..=n {
        for i in 1..=n {
            for j in 1..=n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

/// Sums over every edge subset that is a spanning incoming forest.
fn brute_force_sums(host: &AuxGraph, pair: Option<(usize, usize)>) -> Vec<Polynomial> {
    let nodes = host.nodes();
    let pos = |v: usize| nodes.binary_search(&v).unwrap();
    let edges = host.edges();
    let mut sums = vec![Polynomial::zero(); nodes.len()];
    for mask in 0u32..(1 << edges.len()) {
        let chosen: Vec<_> = (0..edges.len()).filter(|&e| mask & (1 << e) != 0).collect();
        let mut out_deg = vec![0; nodes.len()];
        let mut parent: Vec<usize> = (0..nodes.len()).collect();
        fn find(p: &mut Vec<usize>, v: usize) -> usize {
            if p[v] != v {
                let r = find(p, p[v]);
                p[v] = r;
            }
            p[v]
        }
        let mut ok = true;
        for &e in &chosen {
            let (a, b) = (pos(edges[e].from), pos(edges[e].to));
            out_deg[a] += 1;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if out_deg[a] > 1 || ra == rb {
                ok = false;
                break;
            }
            parent[ra] = rb;
        }
        if !ok {
            continue;
        }
        if let Some((k, l)) = pair {
            if find(&mut parent, pos(k)) != find(&mut parent, pos(l)) {
                continue;
            }
        }
        let labels = chosen.iter().map(|&e| edges[e].label).collect();
        sums[chosen.len()].add_term(Monomial::from_params(labels), 1.into());
    }
    sums
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in poly_strategy(), b in poly_strategy(), c in poly_strategy()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &Polynomial::one(), a.clone());
        prop_assert!((&a * &Polynomial::zero()).is_zero());
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in poly_strategy(), b in poly_strategy(), pt in point_strategy()) {
        let p = pt.prime();
        let (ea, eb) = (a.eval_mod(&pt).unwrap(), b.eval_mod(&pt).unwrap());
        prop_assert_eq!((&a * &b).eval_mod(&pt).unwrap(), mul_mod(ea, eb, p));
        prop_assert_eq!((&a + &b).eval_mod(&pt).unwrap(), add_mod(ea, eb, p));
    }

    #[test]
    fn product_rule(a in poly_strategy(), b in poly_strategy(), v in 0usize..4) {
        let x = VARS[v];
        let lhs = (&a * &b).partial_derivative(x);
        let rhs = &(&a.partial_derivative(x) * &b) + &(&a * &b.partial_derivative(x));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn text_round_trip(a in poly_strategy()) {
        let back: Polynomial = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn strong_connectivity_matches_closure(m in model_strategy(4)) {
        let r = reachability(&m);
        let closure_sc = (1..=m.n()).all(|i| (1..=m.n()).all(|j| r[i][j]));
        prop_assert_eq!(m.is_strongly_connected(), closure_sc);
    }

    #[test]
    fn distance_triangle_inequality(m in model_strategy(5), a in 1usize..=5, b in 1usize..=5, c in 1usize..=5) {
        let n = m.n();
        let (a, b, c) = ((a - 1) % n + 1, (b - 1) % n + 1, (c - 1) % n + 1);
        prop_assert_eq!(m.distance(a, a), Some(0));
        if let (Some(ab), Some(bc)) = (m.distance(a, b), m.distance(b, c)) {
            let ac = m.distance(a, c);
            prop_assert!(ac.is_some_and(|ac| ac <= ab + bc));
        }
    }

    #[test]
    fn inductive_orders_are_valid(m in model_strategy(5)) {
        if let Some(order) = m.inductive_order(1) {
            prop_assert!(m.is_strongly_connected());
            prop_assert_eq!(order[0], 1);
            for k in 1..=order.len() {
                prop_assert!(m.induced_strongly_connected(&order[..k]));
            }
        }
    }

    #[test]
    fn json_round_trip(m in model_strategy(5)) {
        prop_assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn forest_enumeration_matches_brute_force(m in model_strategy(3)) {
        let g = leak_augmented(&m);
        prop_assert_eq!(forest_sums(&g, None), brute_force_sums(&g, None));
        let out = *m.outputs().iter().next().unwrap();
        let inp = *m.inputs().iter().next().unwrap();
        let s = strip_outgoing(&m, out);
        prop_assert_eq!(forest_sums(&s, Some((inp, out))), brute_force_sums(&s, Some((inp, out))));
    }

    #[test]
    fn every_forest_component_has_one_sink(m in model_strategy(4), k in 0usize..4) {
        let g = leak_augmented(&m);
        for f in enumerate_forests(&ForestQuery { host: &g, edge_count: k, pair: None }) {
            // Acyclic with out-degree <= 1: components = nodes - edges, and
            // each component has exactly one node without an outgoing edge.
            let sources: std::collections::BTreeSet<_> = f.edges.iter().map(|&e| g.edges()[e].from).collect();
            prop_assert_eq!(sources.len(), f.edges.len());
            let sinks = g.nodes().len() - sources.len();
            prop_assert_eq!(sinks, g.nodes().len() - f.edges.len());
        }
    }

    #[test]
    fn laplace_matches_leibniz(size in 1usize..=4, seed in proptest::collection::vec((poly_strategy(), any::<bool>()), 16)) {
        let mat: Vec<Vec<LambdaPoly>> = (0..size)
            .map(|r| (0..size).map(|c| {
                let (p, lam) = seed[r * 4 + c].clone();
                if lam { LambdaPoly::lambda_plus(p) } else { LambdaPoly::constant(p) }
            }).collect())
            .collect();
        prop_assert_eq!(det_laplace(&mat), det_leibniz(&mat));
    }

    #[test]
    fn rank_is_transpose_invariant(rows in proptest::collection::vec(proptest::collection::vec(0u64..7, 4), 1..5)) {
        let t: Vec<Vec<u64>> = (0..4).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        prop_assert_eq!(rank_mod(rows.clone(), 7), rank_mod(t, 7));
    }

    #[test]
    fn nonconstant_counts_match_coefficient_map(m in sc_model_strategy(4)) {
        let (l, r) = nonconstant_counts(&m).unwrap();
        let cm = coefficient_map(&m).unwrap();
        prop_assert_eq!(cm.len(), l + r);
        let mut sides: BTreeMap<bool, usize> = BTreeMap::new();
        for e in &cm.entries {
            *sides.entry(e.label.starts_with('c')).or_default() += 1;
        }
        prop_assert_eq!(sides.get(&true).copied().unwrap_or(0), l);
    }

    #[test]
    fn coefficients_are_sums_of_distinct_monomials(m in model_strategy(4)) {
        for c in lincomp::forest::lhs_coefficients(&m) {
            prop_assert!(c.all_coefficients_one());
        }
    }
}
