use mission_intent::features::{extract_all, featurize_corpus, FeatureRow};
use mission_intent::ingest::synthetic::{generate_synthetic_corpus, random_mission, SyntheticSpec};
use mission_intent::ingest::{assemble_corpus, LogCorpus};
use mission_intent::learn::{fit_arrays, Hyperparams, LogisticParams, ModelSpec};
use mission_intent::logmodel::{ClickEvent, QueryEvent};
use mission_intent::{seed, Granularity, Intent};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn features(corpus: &LogCorpus) -> Vec<FeatureRow> {
    let mut rows = featurize_corpus(corpus, Granularity::Mission);
    rows.extend(featurize_corpus(corpus, Granularity::LogicalSession));
    rows
}

/// Rebuilds a corpus from its events after `edit` has rearranged them.
fn rebuild(corpus: &LogCorpus, edit: impl FnOnce(&mut Vec<QueryEvent>, &mut Vec<ClickEvent>)) -> LogCorpus {
    let (mut queries, mut clicks) = corpus.to_events();
    edit(&mut queries, &mut clicks);
    assemble_corpus(queries, clicks, &corpus.labels()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tsv_round_trip_preserves_everything(seed in any::<u64>(), per_class in 1usize..6) {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::balanced(per_class, seed));
        let dir = tempfile::tempdir().unwrap();
        corpus.write_tsv_dir(dir.path()).unwrap();
        let (back, missing) = LogCorpus::read_tsv_dir(dir.path()).unwrap();
        prop_assert!(missing.is_empty());
        prop_assert_eq!(back.stats(), corpus.stats());
        prop_assert_eq!(back.labels(), corpus.labels());
        prop_assert_eq!(features(&back), features(&corpus));
        // a second pass is byte-identical
        let again = tempfile::tempdir().unwrap();
        back.write_tsv_dir(again.path()).unwrap();
        for file in ["queries.tsv", "clicks.tsv", "labels.tsv"] {
            prop_assert_eq!(
                std::fs::read(dir.path().join(file)).unwrap(),
                std::fs::read(again.path().join(file)).unwrap()
            );
        }
    }

    #[test]
    fn row_order_does_not_matter(seed in any::<u64>()) {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::balanced(3, seed));
        let shuffled = rebuild(&corpus, |queries, clicks| {
            let mut rng = seed::rng(seed, &[77]);
            let mut order: Vec<usize> = (0..queries.len()).collect();
            order.shuffle(&mut rng);
            let mut new_pos = vec![0; order.len()];
            for (pos, &old) in order.iter().enumerate() {
                new_pos[old] = pos;
            }
            *queries = order.iter().map(|&i| queries[i].clone()).collect();
            for (pos, q) in queries.iter_mut().enumerate() {
                q.seq = pos;
            }
            for c in clicks.iter_mut() {
                c.query_index = new_pos[c.query_index];
            }
            clicks.shuffle(&mut rng);
        });
        prop_assert_eq!(features(&shuffled), features(&corpus));
    }

    #[test]
    fn shifting_time_changes_no_feature(seed in any::<u64>(), shift in -400_000_000i64..400_000_000) {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::balanced(2, seed));
        let moved = rebuild(&corpus, |queries, clicks| {
            for q in queries.iter_mut() {
                q.timestamp = q.timestamp.offset(shift);
            }
            for c in clicks.iter_mut() {
                c.timestamp = c.timestamp.offset(shift);
            }
        });
        prop_assert_eq!(features(&moved), features(&corpus));
    }

    #[test]
    fn logistic_weights_ignore_row_order(seed in any::<u64>()) {
        let corpus = generate_synthetic_corpus(&SyntheticSpec::balanced(6, seed));
        let rows = featurize_corpus(&corpus, Granularity::Mission);
        let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.to_array().to_vec()).collect();
        let y: Vec<Intent> = rows.iter().map(|r| r.label.unwrap().intent().unwrap()).collect();
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(&mut seed::rng(seed, &[78]));
        let px: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
        let py: Vec<Intent> = order.iter().map(|&i| y[i]).collect();
        let spec = ModelSpec::new(
            Hyperparams::LogisticRegression(LogisticParams { iterations: 100, ..Default::default() }),
            0,
        );
        let a = fit_arrays(&spec, &x, &y).unwrap();
        let b = fit_arrays(&spec, &px, &py).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn fuzzed_missions_keep_feature_invariants() {
    let mut rng = seed::rng(2024, &[1]);
    for i in 0..2_000 {
        let mission = random_mission(&mut rng, i);
        let v = extract_all(&mission);
        assert!(
            v.invariant_violations().is_empty(),
            "{i}: {:?}",
            v.invariant_violations()
        );
        for session in &mission.sessions {
            let v = extract_all(session);
            assert!(v.invariant_violations().is_empty(), "{i}/{}", session.id);
        }
    }
}
