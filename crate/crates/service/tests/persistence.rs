mod common;

use std::sync::Arc;
use std::thread;

use common::{random_event, run_session, SessionOpts};
use dac_core::{Assignment, QuestionId, TradeSpec};
use dac_service::{
    read_ledger, replay, LedgerEvent, MarketHost, MarketService, MarketSnapshot, NewMarket,
    NewQuestion, ServiceConfig, ServiceError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every query the API can answer, serialized, for bit-level comparison.
fn responses(s: &MarketSnapshot) -> Vec<String> {
    let mut out = vec![serde_json::to_string(&s.question_statuses().unwrap()).unwrap()];
    let open: Vec<QuestionId> = s.market.open_questions().map(|q| q.id).collect();
    out.push(serde_json::to_string(&s.market.marginal(&open).unwrap()).unwrap());
    for user in s.users.keys() {
        out.push(serde_json::to_string(&s.user_report(user).unwrap()).unwrap());
        for &q in &open {
            let given = Assignment::new();
            out.push(serde_json::to_string(&s.edit_limits(user, q, &given).unwrap()).unwrap());
        }
    }
    out
}

#[test]
fn replay_reproduces_live_state() {
    for seed in 0..40 {
        let (live, records, _) = run_session(seed, &SessionOpts::default(), |_, _| {});
        let replayed = replay(&records).unwrap().unwrap();
        assert_eq!(replayed, live, "seed {seed}");
        assert_eq!(responses(&replayed), responses(&live), "seed {seed}");
    }
}

#[test]
fn truncated_ledger_gives_the_state_at_that_point() {
    let mut states = Vec::new();
    let (_, records, _) = run_session(99, &SessionOpts::default(), |s, _| states.push(s.clone()));
    let skip = records.len() - states.len();
    for (i, want) in states.iter().enumerate() {
        let got = replay(&records[..skip + i + 1]).unwrap().unwrap();
        assert_eq!(&got, want);
    }
}

fn disk_config(dir: &std::path::Path, every: u64) -> ServiceConfig {
    ServiceConfig {
        data_dir: Some(dir.to_path_buf()),
        snapshot_every: every,
        ..ServiceConfig::default()
    }
}

fn new_market(svc: &MarketService, n: usize) -> Arc<MarketHost> {
    let questions = (0..n)
        .map(|i| NewQuestion {
            name: format!("q{i}"),
            cardinality: 2,
        })
        .collect();
    svc.create_market(NewMarket {
        questions,
        b: Some(10.0),
        ..NewMarket::default()
    })
    .unwrap()
}

/// Drives a host with random events, ignoring rejections.
fn drive(host: &MarketHost, seed: u64, steps: usize) {
    let opts = SessionOpts::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..steps {
        match random_event(&mut rng, &host.snapshot(), &opts) {
            LedgerEvent::Trade { user, trade } => match host.submit_trade(&user, trade, false) {
                Ok(_) | Err(ServiceError::Rejected { .. }) => {}
                Err(e) => panic!("{e}"),
            },
            LedgerEvent::Resolve { question, state } => {
                host.resolve(question, state).unwrap();
            }
            _ => unreachable!(),
        }
    }
}

#[test]
fn restart_restores_every_market() {
    let dir = tempfile::tempdir().unwrap();
    for every in [0, 1, 4, 1000] {
        let root = dir.path().join(every.to_string());
        let before: Vec<MarketSnapshot> = {
            let svc = MarketService::open(disk_config(&root, every)).unwrap();
            (0..2)
                .map(|m| {
                    let host = new_market(&svc, 6);
                    host.create_account("u0", "").unwrap();
                    host.create_account("u1", "").unwrap();
                    drive(&host, m, 30);
                    MarketSnapshot::clone(&host.snapshot())
                })
                .collect()
        };
        let svc = MarketService::open(disk_config(&root, every)).unwrap();
        assert_eq!(svc.market_ids(), vec![1, 2]);
        for want in &before {
            let host = svc.market(want.market_id).unwrap();
            assert_eq!(&*host.snapshot(), want, "snapshot_every {every}");
            assert_eq!(responses(&host.snapshot()), responses(want));
            assert_eq!(host.records(0).len() as u64, want.sequence);
        }
        // keeps appending after restart
        let host = svc.market(1).unwrap();
        drive(&host, 77, 5);
        let seq = host.snapshot().sequence;
        drop(svc);
        let svc = MarketService::open(disk_config(&root, every)).unwrap();
        assert_eq!(svc.market(1).unwrap().snapshot().sequence, seq);
    }
}

#[test]
fn bad_snapshot_falls_back_to_full_replay() {
    let dir = tempfile::tempdir().unwrap();
    let want = {
        let svc = MarketService::open(disk_config(dir.path(), 3)).unwrap();
        let host = new_market(&svc, 5);
        host.create_account("u0", "").unwrap();
        host.create_account("u1", "").unwrap();
        drive(&host, 5, 20);
        MarketSnapshot::clone(&host.snapshot())
    };
    std::fs::write(dir.path().join("1").join("snapshot.json"), b"{ not json").unwrap();
    let svc = MarketService::open(disk_config(dir.path(), 3)).unwrap();
    assert_eq!(*svc.market(1).unwrap().snapshot(), want);
}

#[test]
fn torn_ledger_tail_is_discarded_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let want = {
        let svc = MarketService::open(disk_config(dir.path(), 0)).unwrap();
        let host = new_market(&svc, 3);
        host.create_account("u0", "").unwrap();
        MarketSnapshot::clone(&host.snapshot())
    };
    let ledger = dir.path().join("1").join("ledger.jsonl");
    let mut text = std::fs::read_to_string(&ledger).unwrap();
    text.push_str("{\"sequence\":3,\"timestamp\":\"20");
    std::fs::write(&ledger, text).unwrap();

    let svc = MarketService::open(disk_config(dir.path(), 0)).unwrap();
    let host = svc.market(1).unwrap();
    assert_eq!(*host.snapshot(), want);
    let t = TradeSpec::new(QuestionId(0), Assignment::new(), vec![0.4, 0.6]);
    host.submit_trade("u0", t, false).unwrap();
    let records = read_ledger(&ledger).unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(replay(&records).unwrap().unwrap(), *host.snapshot());
}

#[test]
fn rejected_trades_touch_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let svc = MarketService::open(disk_config(dir.path(), 1)).unwrap();
    let host = new_market(&svc, 2);
    host.create_account("u0", "").unwrap();
    let before = MarketSnapshot::clone(&host.snapshot());
    let ledger = std::fs::read(dir.path().join("1").join("ledger.jsonl")).unwrap();
    // b = 10, baseline 100: moving 0.5 to 0.001 costs 10·ln(500) ≈ 62, fine;
    // stacking two such trades is not
    let t = TradeSpec::new(QuestionId(0), Assignment::new(), vec![0.999, 0.001]);
    host.submit_trade("u0", t.clone(), false).unwrap();
    let mid = MarketSnapshot::clone(&host.snapshot());
    let mid_ledger = std::fs::read(dir.path().join("1").join("ledger.jsonl")).unwrap();
    assert!(mid_ledger.len() > ledger.len());
    let t2 = TradeSpec::new(QuestionId(1), Assignment::new(), vec![0.999, 0.001]);
    assert!(matches!(
        host.submit_trade("u0", t2, false),
        Err(ServiceError::Rejected { .. })
    ));
    assert_eq!(*host.snapshot(), mid);
    assert_ne!(mid, before);
    assert_eq!(
        std::fs::read(dir.path().join("1").join("ledger.jsonl")).unwrap(),
        mid_ledger
    );
}

#[test]
fn concurrent_writers_serialize_in_ledger_order() {
    let svc = MarketService::in_memory();
    let host = new_market(&svc, 6);
    host.create_account("u0", "").unwrap();
    host.create_account("u1", "").unwrap();
    let readers_saw_consistent = thread::scope(|s| {
        for seed in 0..4 {
            let host = &host;
            s.spawn(move || drive(host, 100 + seed, 15));
        }
        let reader = s.spawn(|| {
            (0..200).all(|_| {
                let snap = host.snapshot();
                // a snapshot's numbers all come from one sequence point
                let a = snap.user_report("u0").unwrap();
                let b = snap.user_report("u0").unwrap();
                a == b && a.sequence == snap.sequence
            })
        });
        reader.join().unwrap()
    });
    assert!(readers_saw_consistent);
    let records = host.records(0);
    assert!(records
        .windows(2)
        .all(|w| w[1].sequence == w[0].sequence + 1));
    assert_eq!(replay(&records).unwrap().unwrap(), *host.snapshot());
}
