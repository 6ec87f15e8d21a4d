mod common;

use common::{all_balanced, all_queries, random_dyck, random_query, Flat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmmt::{Answer, BwdMatch, Error, Paren, Query, Rmmt, Update};

fn tree(f: &Flat, cap: usize) -> Rmmt {
    Rmmt::build_with_capacity(&f.to_seq(), cap, 0.75).unwrap()
}

fn assert_agree(t: &Rmmt, f: &Flat, q: &Query) {
    assert_eq!(t.query(q), f.answer(q), "{q:?} on {}", f.text());
}

#[test]
fn spec_examples_on_small_sequences() {
    let s = Rmmt::build(&"(()())".parse().unwrap(), 1.0).unwrap();
    assert_eq!(s.access(3), Ok(Paren::Open));
    assert_eq!(s.excess(3), Ok(2));
    assert_eq!(s.excess(5), Ok(0));
    assert_eq!(s.fwd_search(0, -1), Ok(Some(5)));
    assert_eq!(s.fwd_search(1, -1), Ok(Some(2)));
    assert_eq!(s.bwd_search(5, 0), Ok(BwdMatch::LeftEdge));
    assert_eq!(s.bwd_search(2, 0), Ok(BwdMatch::At(0)));
    assert_eq!(s.find_close(0), Ok(5));
    assert_eq!(s.find_close(3), Ok(4));
    assert_eq!(s.find_open(5), Ok(0));
    assert_eq!(s.find_open(2), Ok(1));
    assert_eq!(s.enclose(3), Ok(Some(0)));
    assert_eq!(s.depth(3), Ok(2));
    assert_eq!(s.subtree_size(0), Ok(3));
    assert_eq!(s.subtree_size(1), Ok(1));
    assert_eq!(s.range_min(1, 4), Ok((1, 2)));
    assert_eq!(s.range_min(0, 5), Ok((0, 1)));

    let p = Rmmt::build(&"()".parse().unwrap(), 1.0).unwrap();
    assert_eq!(p.access(1), Ok(Paren::Close));
    assert_eq!(p.access(2), Err(Error::OutOfRange { pos: 2, len: 2 }));
    assert_eq!(p.fwd_search(1, 1), Ok(None));
    assert_eq!(p.enclose(0), Ok(None));
    assert_eq!(p.range_min(0, 0), Ok((1, 1)));

    let n = Rmmt::build(&"((()))".parse().unwrap(), 1.0).unwrap();
    assert_eq!(n.bwd_search(2, -2), Ok(BwdMatch::At(0)));
    assert_eq!(n.enclose(2), Ok(Some(1)));
    assert_eq!(n.depth(2), Ok(3));
}

#[test]
fn flat_model_matches_spec_examples() {
    // the model itself is checked against the hand-worked values
    let f = Flat::parse("(()())");
    assert_eq!(f.excess(3), Ok(2));
    assert_eq!(f.fwd_search(0, -1), Ok(Some(5)));
    assert_eq!(f.bwd_search(5, 0), Ok(BwdMatch::LeftEdge));
    assert_eq!(f.enclose(3), Ok(Some(0)));
    assert_eq!(f.depth(3), Ok(2));
    assert_eq!(f.subtree_size(0), Ok(3));
    assert_eq!(f.range_min(1, 4), Ok((1, 2)));
    assert_eq!(Flat::parse("((()))").bwd_search(2, -2), Ok(BwdMatch::At(0)));
    let mut g = Flat::parse("()()");
    assert_eq!(g.insert_pair(1, 3), Err(Error::InvalidWrap { from: 1, to: 3 }));
    let mut h = Flat::parse("(()())");
    h.insert_pair(2, 2).unwrap();
    assert_eq!(h.text(), "((())())");
}

#[test]
fn random_sequences_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (k, cap) in [4usize, 8, 64, 320].into_iter().cycle().take(12).enumerate() {
        let nodes = rng.gen_range(1..=400 * (k + 1));
        let f = random_dyck(&mut rng, nodes);
        let t = tree(&f, cap);
        assert!(t.validate().ok());
        for _ in 0..300 {
            let q = random_query(&mut rng, f.len());
            assert_agree(&t, &f, &q);
        }
    }
}

#[test]
fn every_query_on_every_small_sequence() {
    for len in (0..=10).step_by(2) {
        for f in all_balanced(len) {
            for cap in [2, 4, 320] {
                let t = tree(&f, cap);
                for q in all_queries(&f) {
                    assert_agree(&t, &f, &q);
                }
            }
        }
    }
}

#[test]
fn every_update_on_every_small_sequence() {
    for len in (0..=8).step_by(2) {
        for f in all_balanced(len) {
            let n = f.len();
            let mut updates = Vec::new();
            for i in 0..=n + 1 {
                updates.push(Update::InsertLeaf(i));
                updates.push(Update::DeletePair(i));
                for j in 0..=n + 1 {
                    updates.push(Update::InsertPair(i, j));
                }
            }
            for cap in [2, 4] {
                for u in &updates {
                    let mut t = tree(&f, cap);
                    let mut g = f.clone();
                    assert_eq!(t.apply(u), g.apply(u), "{u:?} on {}", f.text());
                    assert_eq!(Flat::from_tree(&t), g, "{u:?} on {}", f.text());
                    assert!(t.validate().ok(), "{u:?} on {}: {:?}", f.text(), t.validate());
                }
            }
        }
    }
}

#[test]
fn round_trips_hold_on_a_random_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_dyck(&mut rng, 3000);
    let t = tree(&f, 64);
    for i in 0..f.len() {
        if f.bits[i] {
            let c = t.find_close(i).unwrap();
            assert_eq!(t.find_open(c), Ok(i));
            if let Some(p) = t.enclose(i).unwrap() {
                assert_eq!(t.access(p), Ok(Paren::Open));
                let pc = t.find_close(p).unwrap();
                assert!(pc > c);
                // no open strictly between p and i also encloses i
                for q in p + 1..i {
                    if f.bits[q] {
                        assert!(t.find_close(q).unwrap() < i);
                    }
                }
            }
        } else {
            let o = t.find_open(i).unwrap();
            assert_eq!(t.find_close(o), Ok(i));
        }
    }
}

#[test]
fn updates_keep_matching_a_flat_mirror() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for cap in [4usize, 16, 320] {
        let mut f = random_dyck(&mut rng, 200);
        let mut t = tree(&f, cap);
        for step in 0..1500 {
            let n = f.len();
            let u = match rng.gen_range(0..3) {
                0 => Update::InsertLeaf(rng.gen_range(0..=n)),
                1 if n > 0 => {
                    // wrap a run of complete siblings starting at an open
                    let i = rng.gen_range(0..n);
                    if f.bits[i] {
                        let mut j = f.find_close(i).unwrap() + 1;
                        while j < n && f.bits[j] && rng.gen_bool(0.5) {
                            j = f.find_close(j).unwrap() + 1;
                        }
                        Update::InsertPair(i, j)
                    } else {
                        Update::InsertPair(i, i)
                    }
                }
                _ if n > 0 => Update::DeletePair(rng.gen_range(0..n)),
                _ => Update::InsertLeaf(0),
            };
            assert_eq!(t.apply(&u), f.apply(&u), "step {step}: {u:?}");
            let s = t.summary();
            assert_eq!(s.total_excess, 0);
            assert!(s.min_excess >= 0);
            if step % 100 == 0 {
                assert!(t.validate().ok(), "step {step}");
                assert_eq!(Flat::from_tree(&t), f);
                for _ in 0..50 {
                    if f.len() > 0 {
                        let q = random_query(&mut rng, f.len());
                        assert_agree(&t, &f, &q);
                    }
                }
            }
        }
    }
}

#[test]
fn random_updates_follow_the_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut f = Flat::default();
    let mut t = Rmmt::build_with_capacity(&f.to_seq(), 4, 0.75).unwrap();
    for _ in 0..3000 {
        let key: u64 = rng.gen();
        let u = if rng.gen_bool(0.55) { Update::RandomInsertLeaf { key } } else { Update::RandomDeleteLeaf { key } };
        assert_eq!(t.apply(&u), f.apply(&u));
    }
    assert_eq!(Flat::from_tree(&t), f);
    assert!(t.validate().ok());
    for key in 0..200u64 {
        for kind in [rmmt::NavKind::FindClose, rmmt::NavKind::Enclose, rmmt::NavKind::Depth] {
            let q = Query::RandomNav { kind, key: key * 7919 };
            assert_agree(&t, &f, &q);
        }
    }
    assert_eq!(t.query(&Query::TotalSize), Ok(Answer::Count(f.len())));
}
