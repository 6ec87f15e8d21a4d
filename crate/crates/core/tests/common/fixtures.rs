//! Leaf-capacity boundary constructions that force splits, steals and merges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmmt::{NodeSummary, Rmmt, LEAF_CAP};

use super::{random_dyck, Flat};

fn pairs(n: usize, fill: f64) -> Rmmt {
    Rmmt::build_with_capacity(&"()".repeat(n).parse().unwrap(), LEAF_CAP, fill).unwrap()
}

/// Root summary recomputed by a scan of the flat sequence.
pub fn scan_summary(f: &Flat) -> NodeSummary {
    if f.bits.is_empty() {
        return NodeSummary::EMPTY;
    }
    let (mut e, mut min, mut max, mut count) = (0i32, i32::MAX, i32::MIN, 0u32);
    for &b in &f.bits {
        e += if b { 1 } else { -1 };
        if e < min {
            min = e;
            count = 0;
        }
        if e == min {
            count += 1;
        }
        max = max.max(e);
    }
    NodeSummary { total_excess: e, min_excess: min, max_excess: max, min_count: count, num_parens: f.len() as u32 }
}

/// Structure check, root summary against a scan, leaf occupancy, and equal
/// depth of every leaf.
pub fn assert_invariants(t: &Rmmt) {
    let report = t.validate();
    assert!(report.ok(), "{report}");
    let f = Flat::from_tree(t);
    assert_eq!(t.summary(), scan_summary(&f));
    let sizes = t.leaf_sizes();
    if sizes.len() > 1 {
        assert!(sizes.iter().all(|&s| (LEAF_CAP / 2..=LEAF_CAP).contains(&s)), "{sizes:?}");
    }
    let step = (f.len() / 97).max(1);
    for i in (0..f.len()).step_by(step) {
        assert_eq!(t.path_to(i).len(), t.height(), "position {i}");
    }
}

pub fn split_on_full_leaf() {
    let mut t = pairs(160, 1.0);
    assert_eq!(t.leaf_sizes(), vec![320]);
    t.insert_leaf(100).unwrap();
    // the close overflows the leaf into 161 | 160, then the open joins the left half
    assert_eq!(t.leaf_sizes(), vec![162, 160]);
    assert_eq!(t.height(), 2);
    assert_invariants(&t);
}

pub fn steal_from_left() {
    let mut t = pairs(160, 1.0);
    t.insert_leaf(100).unwrap();
    assert_eq!(t.leaf_sizes(), vec![162, 160]);
    let mut f = Flat::from_tree(&t);
    t.delete_pair(250).unwrap();
    f.delete_pair(250).unwrap();
    assert_eq!(t.leaf_sizes(), vec![160, 160]);
    assert_eq!(Flat::from_tree(&t), f);
    assert_invariants(&t);
}

pub fn merge_with_minimal_sibling() {
    let mut t = pairs(160, 0.5);
    assert_eq!(t.leaf_sizes(), vec![160, 160]);
    t.delete_pair(200).unwrap();
    assert_eq!(t.leaf_sizes(), vec![318]);
    assert_eq!(t.height(), 1);
    assert_invariants(&t);
}

pub fn first_leaf_steals_from_right() {
    let mut t = pairs(166, 0.5);
    assert_eq!(t.leaf_sizes(), vec![160, 172]);
    t.delete_pair(0).unwrap();
    assert_eq!(t.leaf_sizes(), vec![160, 170]);
    assert_invariants(&t);
}

/// Grows the tree to several internal levels by inserts, then deletes
/// everything back down to one leaf.
pub fn internal_levels_grow_and_shrink(inserts: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut t = Rmmt::new();
    let mut f = Flat::default();
    let mut tallest = 0;
    let every = (inserts / 8).max(1);
    for k in 0..inserts {
        let i = rng.gen_range(0..=f.len());
        t.insert_leaf(i).unwrap();
        f.insert_pair(i, i).unwrap();
        tallest = tallest.max(t.height());
        if k % every == 0 {
            assert_invariants(&t);
        }
    }
    assert!(tallest >= 3, "height {tallest}");
    assert_invariants(&t);
    assert_eq!(Flat::from_tree(&t), f);
    let mut k = 0;
    while f.len() > 0 {
        let i = rng.gen_range(0..f.len());
        if !f.bits[i] {
            continue;
        }
        t.delete_pair(i).unwrap();
        f.delete_pair(i).unwrap();
        k += 1;
        if k % every == 0 {
            assert_invariants(&t);
        }
    }
    assert_eq!(t.height(), 1);
    assert_invariants(&t);
}

pub fn built_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for nodes in [0, 1, 80, 159, 160, 161, 1000, 50_000] {
        for fill in [0.5, 0.75, 1.0] {
            let f = random_dyck(&mut rng, nodes);
            let t = Rmmt::build(&f.to_seq(), fill).unwrap();
            assert_eq!(Flat::from_tree(&t), f);
            assert_invariants(&t);
        }
    }
}
