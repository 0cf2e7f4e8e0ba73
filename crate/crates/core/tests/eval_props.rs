mod common;

use std::collections::HashMap;

use ehub_core::eval::{bleu_n, lower_median, multiset_f1, rouge, EvalCaseResult, EvalReport, ErrorType, RougeVariant, UserClass};
use proptest::prelude::*;

fn tokens() -> impl Strategy<Value = Vec<String>> {
    const VOCAB: [&str; 12] = ["select", "from", "where", "a", "b", "c", "=", "1", ",", "count", "(", ")"];
    proptest::collection::vec(proptest::sample::select(VOCAB.to_vec()), 0..24)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn nonempty() -> impl Strategy<Value = Vec<String>> {
    tokens().prop_filter("non-empty", |t| !t.is_empty())
}

/// Straightforward BLEU-1: clipped unigram precision times brevity penalty.
fn slow_bleu1(pred: &[String], gold: &[String]) -> f64 {
    let mut gold_counts: HashMap<&String, i64> = HashMap::new();
    for g in gold {
        *gold_counts.entry(g).or_default() += 1;
    }
    let mut hits = 0;
    for p in pred {
        let left = gold_counts.entry(p).or_default();
        if *left > 0 {
            *left -= 1;
            hits += 1;
        }
    }
    let precision = hits as f64 / pred.len() as f64;
    let bp = if pred.len() >= gold.len() { 1.0 } else { (1.0 - gold.len() as f64 / pred.len() as f64).exp() };
    bp * precision
}

fn case(model: &str, class: UserClass, error: Option<ErrorType>) -> EvalCaseResult {
    EvalCaseResult {
        case_id: String::new(),
        model: model.into(),
        user_class: class,
        question: String::new(),
        gold_sql: String::new(),
        predicted_sql: String::new(),
        generation_error: None,
        prediction_error: None,
        execution_match: error.is_none(),
        component_f1: 0.0,
        bleu_1: 0.0,
        bleu_2: 0.0,
        bleu_3: 0.0,
        bleu_4: 0.0,
        rouge_1: 0.0,
        rouge_2: 0.0,
        rouge_l: 0.0,
        error_type: error,
    }
}

fn error() -> impl Strategy<Value = Option<ErrorType>> {
    prop_oneof![Just(None), proptest::sample::select(ErrorType::ALL.to_vec()).prop_map(Some)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn metrics_are_bounded(p in tokens(), g in tokens()) {
        for n in 1..=4 {
            let b = bleu_n(&p, &g, n);
            prop_assert!((0.0..=1.0).contains(&b));
        }
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            prop_assert!((0.0..=1.0).contains(&rouge(&p, &g, v)));
        }
        prop_assert!((0.0..=1.0).contains(&multiset_f1(&p, &g)));
    }

    #[test]
    fn identical_sequences_score_one(t in nonempty()) {
        prop_assert!((bleu_n(&t, &t, 1) - 1.0).abs() < 1e-12);
        if t.len() >= 4 {
            prop_assert!((bleu_n(&t, &t, 4) - 1.0).abs() < 1e-12);
        }
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::L] {
            prop_assert_eq!(rouge(&t, &t, v), 1.0);
        }
        prop_assert_eq!(multiset_f1(&t, &t), 1.0);
    }

    #[test]
    fn bleu1_matches_reference(p in nonempty(), g in tokens()) {
        prop_assert!((bleu_n(&p, &g, 1) - slow_bleu1(&p, &g)).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_is_one_only_for_identical(p in nonempty(), g in nonempty()) {
        prop_assert_eq!(rouge(&p, &g, RougeVariant::L) == 1.0, p == g);
    }

    #[test]
    fn metrics_are_symmetric_where_expected(p in tokens(), g in tokens()) {
        prop_assert_eq!(multiset_f1(&p, &g), multiset_f1(&g, &p));
        prop_assert!((rouge(&p, &g, RougeVariant::L) - rouge(&g, &p, RougeVariant::L)).abs() < 1e-12);
    }

    #[test]
    fn error_proportions_sum_to_one(errors in proptest::collection::vec((error(), any::<bool>()), 1..40)) {
        let cases = errors
            .iter()
            .map(|(e, user)| case("m", if *user { UserClass::User } else { UserClass::SystemOperator }, *e))
            .collect();
        let report = EvalReport::from_cases(cases);
        for g in &report.groups {
            let total: f64 = g.error_proportions.values().sum();
            let errs: usize = g.error_counts.values().sum();
            if errs == 0 {
                prop_assert_eq!(total, 0.0);
            } else {
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(errs, g.cases - (g.execution_accuracy * g.cases as f64).round() as usize);
        }
    }

    #[test]
    fn lower_median_splits_the_sample(v in proptest::collection::vec(-1e6f64..1e6, 1..50)) {
        let m = lower_median(&v).unwrap();
        prop_assert!(v.contains(&m));
        let below = v.iter().filter(|x| **x < m).count();
        let at_most = v.iter().filter(|x| **x <= m).count();
        prop_assert!(below < v.len().div_ceil(2) && at_most >= v.len().div_ceil(2));
    }
}
