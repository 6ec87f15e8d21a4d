mod common;

use common::{linearizable, record, Call, Event, Flat, Ret};
use rmmt::{Answer, Applied, ConcurrencyMode, Query, Update};

fn event(call: Call, ret: Ret, invoked: u64, returned: u64) -> Event {
    Event { thread: 0, call, ret, invoked, returned }
}

#[test]
fn checker_accepts_sequential_histories() {
    let init = Flat::parse("()");
    let h = vec![
        event(Call::Write(Update::InsertLeaf(0)), Ret::Write(Ok(Applied::Inserted { open: 0, close: 1 })), 0, 1),
        event(Call::Read(Query::TotalSize), Ret::Read(Ok(Answer::Count(4))), 2, 3),
    ];
    assert!(linearizable(&init, &h));
}

#[test]
fn checker_rejects_a_stale_read_after_a_completed_write() {
    let init = Flat::parse("()");
    let h = vec![
        event(Call::Write(Update::InsertLeaf(0)), Ret::Write(Ok(Applied::Inserted { open: 0, close: 1 })), 0, 1),
        event(Call::Read(Query::TotalSize), Ret::Read(Ok(Answer::Count(2))), 2, 3),
    ];
    assert!(!linearizable(&init, &h));
}

#[test]
fn checker_allows_either_order_for_overlapping_ops() {
    let init = Flat::parse("()");
    for seen in [2, 4] {
        let h = vec![
            event(Call::Write(Update::InsertLeaf(0)), Ret::Write(Ok(Applied::Inserted { open: 0, close: 1 })), 0, 3),
            event(Call::Read(Query::TotalSize), Ret::Read(Ok(Answer::Count(seen))), 1, 2),
        ];
        assert!(linearizable(&init, &h), "size {seen}");
    }
}

#[test]
fn checker_rejects_a_read_no_order_explains() {
    // two overlapping inserts can never leave six parentheses
    let init = Flat::default();
    let h = vec![
        event(Call::Write(Update::InsertLeaf(0)), Ret::Write(Ok(Applied::Inserted { open: 0, close: 1 })), 0, 9),
        event(Call::Write(Update::InsertPair(0, 0)), Ret::Write(Ok(Applied::Inserted { open: 0, close: 1 })), 1, 9),
        event(Call::Read(Query::TotalSize), Ret::Read(Ok(Answer::Count(0))), 2, 3),
        event(Call::Read(Query::TotalSize), Ret::Read(Ok(Answer::Count(6))), 4, 5),
    ];
    assert!(!linearizable(&init, &h));
}

#[test]
fn recorded_histories_are_linearizable() {
    let modes = [
        ConcurrencyMode::GlobalRwLock,
        ConcurrencyMode::Speculative { retry_limit: 0 },
        ConcurrencyMode::Speculative { retry_limit: 1 },
        ConcurrencyMode::Speculative { retry_limit: 2 },
    ];
    let mut runs = 0;
    for seed in 0..30u64 {
        for mode in modes {
            let threads = 2 + (seed as usize % 3);
            let (init, h) = record(mode, threads, 200 / threads, seed);
            assert!(h.len() <= 200);
            assert!(linearizable(&init, &h), "{mode:?}, seed {seed}");
            runs += 1;
        }
    }
    assert!(runs >= 100);
}
