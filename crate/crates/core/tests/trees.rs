mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sandpile_core::tree::{root_subgroup_order, LevelVector, RegularTree};
use sandpile_core::{
    build_wired_ball, ChipConfig, RootedTree, Sandpile, WiredTree, DEFAULT_ENUMERATION_BOUND,
};
use serde::Deserialize;

#[derive(Deserialize)]
struct LabelledConfig {
    degree: usize,
    height: usize,
    chips: BTreeMap<String, u64>,
    critical: BTreeSet<String>,
}

fn word(label: &str) -> Vec<u32> {
    label.chars().map(|c| c.to_digit(10).unwrap()).collect()
}

#[test]
fn ternary_height_five_fixture() {
    let raw = include_str!("fixtures/ternary_height_five.json");
    let fx: LabelledConfig = serde_json::from_str(raw).unwrap();
    let t = RegularTree::new(fx.degree, fx.height).unwrap();
    assert_eq!(fx.chips.len(), t.tree().size());
    let mut chips = vec![0u64; t.tree().size()];
    for (label, &c) in &fx.chips {
        chips[t.position_of_word(&word(label)).unwrap()] = c;
    }
    let u = ChipConfig::from_u64s(&chips);
    let sp = Sandpile::new(t.tree().graph());

    let critical: BTreeSet<String> = t
        .tree()
        .critical_vertices(&u)
        .unwrap()
        .into_iter()
        .map(|p| t.word(p).iter().map(u32::to_string).collect())
        .collect();
    assert_eq!(critical, fx.critical);
    assert!(sp.is_recurrent_burning(&u).unwrap());
    assert!(t.tree().is_recurrent_critical(&u).unwrap());

    // Taking a chip off any critical vertex breaks recurrence.
    for label in &fx.critical {
        let p = t.position_of_word(&word(label)).unwrap();
        if chips[p] > 0 {
            let mut fewer = chips.clone();
            fewer[p] -= 1;
            let v = ChipConfig::from_u64s(&fewer);
            assert!(!sp.is_recurrent_burning(&v).unwrap(), "{label}");
            assert!(!t.tree().is_recurrent_critical(&v).unwrap(), "{label}");
        }
    }
}

#[test]
fn lex_orbit_law() {
    for d in 3..=4 {
        for n in 3..=5 {
            let t = RegularTree::new(d, n).unwrap();
            let period = usize::try_from(root_subgroup_order(d, n).unwrap()).unwrap();
            let fired = t.root_multiples(period + 1).unwrap();
            let start = t.level_vector_of(&fired[0]).unwrap();
            let lex = t.lex_orbit(&start, period + 1).unwrap();
            for (u, v) in fired.iter().zip(&lex) {
                assert_eq!(t.level_vector_of(u).as_ref(), Some(v), "d={d} n={n}");
            }
            assert_eq!(lex[period], lex[0]);
            assert!(lex[1..period].iter().all(|v| v != &lex[0]));
        }
    }
}

#[test]
fn level_constant_recurrent_configurations_are_root_multiples() {
    let t = RegularTree::new(3, 4).unwrap();
    let sp = Sandpile::new(t.tree().graph());
    let multiples: BTreeSet<ChipConfig> = t.root_multiples(15).unwrap().into_iter().collect();
    let level_constant: BTreeSet<ChipConfig> = sp
        .enumerate_recurrent(DEFAULT_ENUMERATION_BOUND)
        .unwrap()
        .into_iter()
        .filter(|u| t.is_level_constant(u))
        .collect();
    assert_eq!(level_constant, multiples);
    for u in &multiples {
        assert!(t.level_vector_of(u).unwrap().is_recurrent_form(3));
    }
}

#[test]
fn branches_of_recurrent_configurations_are_recurrent() {
    let tree = WiredTree::regular(3, 4).unwrap();
    let sp = Sandpile::new(tree.graph());
    let branches = tree.branches().unwrap();
    let branch_sps: Vec<Sandpile<'_>> = branches.iter().map(|b| Sandpile::new(b.graph())).collect();
    for u in sp.enumerate_recurrent(DEFAULT_ENUMERATION_BOUND).unwrap() {
        let split = tree.branch_split(&u).unwrap();
        for (c, s) in split.branch_configs.iter().zip(&branch_sps) {
            assert!(s.is_recurrent_burning(c).unwrap());
        }
        assert_eq!(tree.branch_join(&split).unwrap(), u);
    }
}

#[test]
fn recurrent_branches_with_full_root_join_to_recurrent() {
    let tree = WiredTree::regular(3, 4).unwrap();
    let sp = Sandpile::new(tree.graph());
    let branches = tree.branches().unwrap();
    let k = branches.len();
    let per_branch: Vec<Vec<ChipConfig>> = branches
        .iter()
        .map(|b| Sandpile::new(b.graph()).enumerate_recurrent(DEFAULT_ENUMERATION_BOUND).unwrap())
        .collect();
    for u1 in &per_branch[0] {
        for u2 in &per_branch[1] {
            let split = sandpile_core::tree::BranchSplit {
                root_chips: k.into(),
                branch_configs: vec![u1.clone(), u2.clone()],
            };
            let u = tree.branch_join(&split).unwrap();
            assert!(sp.is_recurrent_burning(&u).unwrap());
            assert_eq!(tree.branch_split(&u).unwrap(), split);
        }
    }
}

#[test]
fn identity_maps_into_the_diagonal() {
    for tree in [WiredTree::regular(3, 4).unwrap(), common::two_by_three_wired()] {
        let sp = Sandpile::new(tree.graph());
        let split = tree.branch_split(sp.identity()).unwrap();
        let branches = tree.branches().unwrap();
        let sps: Vec<Sandpile<'_>> = branches.iter().map(|b| Sandpile::new(b.graph())).collect();
        let reps: Vec<ChipConfig> = branches
            .iter()
            .zip(&sps)
            .map(|(b, s)| s.vertex_rep(b.root()).unwrap())
            .collect();
        let mut current: Vec<ChipConfig> = reps.clone();
        let mut found = false;
        for _ in 0..1000 {
            if current == split.branch_configs {
                found = true;
                break;
            }
            current = current
                .iter()
                .zip(&reps)
                .zip(&sps)
                .map(|((x, r), s)| s.add_and_stabilize(x, r).unwrap())
                .collect();
        }
        assert!(found);
    }
}

fn random_recurrent(sp: &Sandpile<'_>, rng: &mut StdRng) -> ChipConfig {
    let chips: Vec<u64> = (0..sp.size()).map(|_| rng.gen_range(0..6)).collect();
    sp.recurrent_rep(&ChipConfig::from_u64s(&chips)).unwrap()
}

#[test]
fn automorphisms_act_on_the_group() {
    let mut rng = StdRng::seed_from_u64(11);
    for (d, n) in [(3, 5), (4, 4)] {
        let t = RegularTree::new(d, n).unwrap();
        let sp = Sandpile::new(t.tree().graph());
        let alphas = t.all_alphas();
        for _ in 0..40 {
            let alpha = &alphas[rng.gen_range(0..alphas.len())];
            let u = random_recurrent(&sp, &mut rng);
            let v = random_recurrent(&sp, &mut rng);
            let lhs = t.level_automorphism(alpha, &sp.add_and_stabilize(&u, &v).unwrap()).unwrap();
            let su = t.level_automorphism(alpha, &u).unwrap();
            let sv = t.level_automorphism(alpha, &v).unwrap();
            assert_eq!(lhs, sp.add_and_stabilize(&su, &sv).unwrap());
            assert!(sp.is_recurrent_burning(&su).unwrap());
        }
    }
}

#[test]
fn level_constant_configurations_are_fixed_by_automorphisms() {
    let t = RegularTree::new(3, 5).unwrap();
    for (k, u) in t.root_multiples(31).unwrap().iter().enumerate() {
        for alpha in t.all_alphas() {
            assert_eq!(&t.level_automorphism(&alpha, u).unwrap(), u, "k={k}");
        }
    }
}

#[test]
fn symmetrization_is_an_idempotent_retraction() {
    let mut rng = StdRng::seed_from_u64(5);
    for (d, n) in [(3, 4), (3, 5), (4, 4)] {
        let t = RegularTree::new(d, n).unwrap();
        let sp = Sandpile::new(t.tree().graph());
        for _ in 0..20 {
            let u = random_recurrent(&sp, &mut rng);
            let p = t.symmetrize(&sp, &u).unwrap();
            assert!(t.is_level_constant(&p));
            assert!(t.level_vector_of(&p).unwrap().is_recurrent_form(d));
            assert_eq!(t.symmetrize(&sp, &p).unwrap(), p);
        }
        let zero = ChipConfig::zeros(t.tree().size());
        if !sp.is_recurrent_burning(&zero).unwrap() {
            assert!(t.symmetrize(&sp, &zero).is_err());
        }
    }
}

#[test]
fn critical_and_burning_agree_on_random_configurations_of_larger_trees() {
    let trees = vec![
        WiredTree::regular(3, 6).unwrap(),
        WiredTree::regular(4, 5).unwrap(),
        WiredTree::ball(3, 3).unwrap(),
    ];
    let mut rng = StdRng::seed_from_u64(99);
    for tree in &trees {
        let sp = Sandpile::new(tree.graph());
        let degrees = tree.graph().degrees().to_vec();
        let mut recurrent = 0;
        for _ in 0..300 {
            // bias towards full vertices so that both outcomes show up
            let chips: Vec<u64> = degrees
                .iter()
                .map(|&d| if rng.gen_bool(0.8) { d - 1 } else { rng.gen_range(0..d) })
                .collect();
            let u = ChipConfig::from_u64s(&chips);
            let burning = sp.is_recurrent_burning(&u).unwrap();
            assert_eq!(burning, tree.is_recurrent_critical(&u).unwrap());
            recurrent += usize::from(burning);
        }
        assert!(recurrent > 0 && recurrent < 300);
    }
}

fn random_tree() -> impl Strategy<Value = RootedTree> {
    (2usize..=9)
        .prop_flat_map(|n| proptest::collection::vec(any::<prop::sample::Index>(), n - 1))
        .prop_map(|picks| {
            let mut parents = vec![None];
            for (i, p) in picks.iter().enumerate() {
                parents.push(Some(p.index(i + 1)));
            }
            RootedTree::from_parents(parents, None).unwrap()
        })
        .prop_filter("root must not be a leaf", |t| !t.is_leaf(t.root()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn critical_and_burning_agree_exhaustively_on_small_trees(t in random_tree()) {
        let tree = WiredTree::from_rooted(&t).unwrap();
        let stable = common::all_stable(tree.graph());
        prop_assume!(stable.len() <= 1000);
        let sp = Sandpile::new(tree.graph());
        let mut count = 0u64;
        for u in &stable {
            let burning = sp.is_recurrent_burning(u).unwrap();
            prop_assert_eq!(burning, tree.is_recurrent_critical(u).unwrap());
            count += u64::from(burning);
        }
        prop_assert_eq!(num_bigint::BigUint::from(count), tree.graph().spanning_tree_count());
    }

    #[test]
    fn split_join_round_trip(t in random_tree(), seed in any::<u64>()) {
        let tree = WiredTree::from_rooted(&t).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let chips: Vec<u64> = (0..tree.size()).map(|_| rng.gen_range(0..10)).collect();
        let u = ChipConfig::from_u64s(&chips);
        let split = tree.branch_split(&u).unwrap();
        prop_assert_eq!(split.branch_configs.len(), tree.children(tree.root()).len());
        prop_assert_eq!(tree.branch_join(&split).unwrap(), u);
    }
}

#[test]
fn ball_root_subgroup_order() {
    for (d, n) in [(3, 1), (3, 2), (4, 1), (4, 2)] {
        let g = build_wired_ball(d, n).unwrap();
        let sp = Sandpile::new(&g);
        let root_hat = sp.vertex_rep(0).unwrap();
        let expected = sandpile_core::tree::ball_root_subgroup_order(d, n).unwrap();
        assert_eq!(num_bigint::BigUint::from(sp.element_order(&root_hat).unwrap()), expected);
    }
}

#[test]
fn level_vector_display() {
    assert_eq!(LevelVector::new(vec![2, 2, 1], 3).unwrap().to_string(), "(2,2,1)");
}
