use std::collections::BTreeSet;
use std::thread;

use listwise::shared::SharedStrategy;
use listwise::synth::{self, LogShape};
use listwise_core::{parse_list, Strategy, StrategyConfig, StrategyMode, SuffixTable};

#[test]
fn concurrent_hybrid_evaluation_converges() {
    let table = SuffixTable::builtin();
    let mut rng = synth::rng(42);
    let list = synth::scale_list(&mut rng, 2_000, 200, 100);
    let log = synth::scale_log(
        &mut rng,
        &list,
        LogShape {
            requests: 4_000,
            blockable: 0.5,
            ..LogShape::default()
        },
    );
    let (rules, _) = parse_list(&list.text);
    let config = |mode| StrategyConfig {
        mode,
        full_rules: rules.clone(),
        hot_rule_ids: BTreeSet::new(),
    };
    let shared = SharedStrategy::new(Strategy::new(config(StrategyMode::Hybrid)).unwrap());

    thread::scope(|scope| {
        for chunk in log.records.chunks(log.len() / 4 + 1) {
            let (shared, table) = (&shared, &table);
            scope.spawn(move || {
                for record in chunk {
                    let decision = shared.decide_sync(&record.request, table).unwrap();
                    shared.evaluate_async(&record.request, &decision, table);
                }
            });
        }
    });

    let counters = shared.snapshot_counters().unwrap();
    assert!(counters.late_blocks > 0);
    assert_eq!(counters.hot_size_end - counters.hot_size_start, counters.promotions);

    // Every rule the log needs is promoted by now, so a second pass agrees
    // with the full list and leaks nothing.
    let full = Strategy::new(config(StrategyMode::FullSync)).unwrap();
    for record in &log.records {
        let got = shared.decide_sync(&record.request, &table).unwrap();
        let want = full.decide_sync(&record.request, &table).unwrap();
        assert_eq!(got.status, want.status, "{}", record.request.url);
        shared.evaluate_async(&record.request, &got, &table);
    }
    assert_eq!(shared.snapshot_counters().unwrap().late_blocks, counters.late_blocks);
    assert_eq!(shared.into_inner().mode(), StrategyMode::Hybrid);
}
