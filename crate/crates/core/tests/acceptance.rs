//! Acceptance suite: one line per criterion on stderr, then the assertion.
//! Run with `cargo test -p ehub-core --test acceptance`.

mod common;

use std::io::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use common::*;
use ehub_core::eval::{
    bleu_n, classify_error, component_match_f1, execution_accuracy, rouge, run_evaluation, tokenize_sql, ErrorType,
    EvalReport, RougeVariant, UserClass,
};
use ehub_core::network::{build_graph, load_scenario, AgentClass, TransportMode};
use ehub_core::rag::{cosine_similarity, Embedder, FixtureEmbedder, Retrieved};
use ehub_core::routing::{brute_force_oracle, expand_graph, od_benchmark, solve_route, BenchmarkOptions, EnergyModelParams};
use ehub_core::service::{router, AppState};
use ehub_core::sim::{run_scenario, EdgeTrafficRecord, TrafficLevel};
use ehub_core::store::{Datastore, StoreError, Value};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};
use tower::ServiceExt;

/// Writes straight to the stderr handle so the line shows without `--nocapture`.
fn verdict(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] {criterion}: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

#[test]
fn metric_oracles() {
    let started = Instant::now();
    let bleu = bleu_n(&words("select a from t"), &words("select b from t"), 1);
    let rouge_l = rouge(&words("a b c"), &words("a c"), RougeVariant::L);
    let f1 = component_match_f1(TABLE3_SYSTEM_PRED, TABLE3_SYSTEM_GOLD);
    let identical = [TABLE3_SYSTEM_GOLD, TABLE3_USER_GOLD, TABLE4_SYSTEM_GOLD, TABLE4_USER_GOLD].iter().all(|q| {
        let t = tokenize_sql(q);
        let all = [
            component_match_f1(q, q),
            bleu_n(&t, &t, 1),
            bleu_n(&t, &t, 2),
            bleu_n(&t, &t, 3),
            bleu_n(&t, &t, 4),
            rouge(&t, &t, RougeVariant::One),
            rouge(&t, &t, RougeVariant::Two),
            rouge(&t, &t, RougeVariant::L),
        ];
        all.iter().all(|v| (v - 1.0).abs() < 1e-12)
    });
    let elapsed = started.elapsed();
    let checks = [
        ("bleu-1", (bleu - 0.75).abs() <= 1e-9),
        ("rouge-l", (rouge_l - 0.8).abs() <= 1e-9),
        ("component-f1", (f1 - 0.9333).abs() <= 1e-4),
        ("identical", identical),
        ("runtime", elapsed < Duration::from_secs(1)),
    ];
    let pass = checks.iter().all(|(_, ok)| *ok);
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    verdict(
        "metric oracle suite",
        pass,
        &format!(
            "BLEU-1 {bleu:.12}, ROUGE-L {rouge_l:.12}, component F1 {f1:.6} (want 0.9333 ± 1e-4), identical → 1: {identical}, {}{}",
            secs(elapsed),
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    );
    assert!(pass, "failed checks: {failed:?}");
}

#[test]
fn execution_accuracy_harness() {
    let started = Instant::now();
    let store = fixture_store();
    let pipeline = hashing_pipeline(&store);
    let backend = replay("golden", "eval/golden_cassette.json");
    let report = run_evaluation(&corpus("golden_corpus.jsonl"), &pipeline, &backend, &store).unwrap();
    let accuracy = |class| report.group("golden", class).map(|g| g.execution_accuracy);
    let (sys, usr) = (accuracy(UserClass::SystemOperator), accuracy(UserClass::User));
    let matched = |p, g| execution_accuracy(p, g, &store).unwrap().matched;
    let table3 = matched(TABLE3_SYSTEM_PRED, TABLE3_SYSTEM_GOLD) && matched(TABLE3_USER_PRED, TABLE3_USER_GOLD);
    let table4 = matched(TABLE4_SYSTEM_PRED, TABLE4_SYSTEM_GOLD) || matched(TABLE4_USER_PRED, TABLE4_USER_GOLD);
    let elapsed = started.elapsed();
    let pass = sys == Some(0.8)
        && usr == Some(0.8)
        && report.cases.len() == 20
        && table3
        && !table4
        && elapsed < Duration::from_secs(5);
    verdict(
        "execution-accuracy harness",
        pass,
        &format!(
            "system {sys:?}, user {usr:?} (want 0.8 each); Table III pairs match: {table3}; Table IV pairs match: {table4}; {}",
            secs(elapsed)
        ),
    );
    assert!(pass);
}

#[test]
fn error_classifier() {
    let store = fixture_store();
    let labels = [
        (classify_error(TABLE4_SYSTEM_PRED, TABLE4_SYSTEM_GOLD, &store), ErrorType::Qsd),
        (classify_error(TABLE4_USER_PRED, TABLE4_USER_GOLD, &store), ErrorType::Qle),
        (classify_error("SELECT station_id FROM stations;", "SELECT DISTINCT station_id FROM stations;", &store), ErrorType::Rpe),
        (
            classify_error(
                "SELECT path_id FROM user_paths ORDER BY time_cost_s DESC LIMIT 1;",
                "SELECT path_id, time_cost_s FROM user_paths ORDER BY time_cost_s DESC LIMIT 1;",
                &store,
            ),
            ErrorType::Rge,
        ),
    ];
    let labels_ok = labels.iter().all(|(got, want)| got == want);

    let pipeline = hashing_pipeline(&store);
    let backend = replay("golden", "eval/golden_cassette.json");
    let golden = run_evaluation(&corpus("golden_corpus.jsonl"), &pipeline, &backend, &store).unwrap();
    let report = EvalReport::merge([golden]);
    let sums: Vec<f64> = report.groups.iter().map(|g| g.error_proportions.values().sum()).collect();
    let sums_ok = !sums.is_empty() && sums.iter().all(|s| (s - 1.0).abs() <= 1e-9);
    let pass = labels_ok && sums_ok;
    let got: Vec<&str> = labels.iter().map(|(g, _)| g.as_str()).collect();
    verdict(
        "error classifier",
        pass,
        &format!("labels {got:?} (want [QSD, QLE, RPE, RGE]); proportion sums {sums:?}"),
    );
    assert!(pass);
}

#[test]
fn optimizer_exactness() {
    let started = Instant::now();
    let params = EnergyModelParams::default();
    let (mut instances, mut routed, mut with_vehicle, mut mismatches) = (0, 0, 0, Vec::new());
    for seed in 0..300u64 {
        let inst = random_instance(seed);
        let xg = expand_graph(&inst.graph, &inst.stations, &inst.request, &inst.snapshot, &params).unwrap();
        instances += 1;
        match (solve_route(&inst.request, &xg), brute_force_oracle(&inst.request, &xg)) {
            (Ok(plan), Ok(oracle)) => {
                routed += 1;
                if plan.legs.iter().any(|l| l.mode != TransportMode::Walk) {
                    with_vehicle += 1;
                }
                if plan.total_time_s != oracle.total_time_s || !plan.same_route(&oracle) || !plan.satisfies(&inst.request) {
                    mismatches.push(seed);
                }
            }
            (Err(_), Err(_)) => {}
            _ => mismatches.push(seed),
        }
    }
    let elapsed = started.elapsed();
    let pass = instances >= 200 && mismatches.is_empty() && elapsed < Duration::from_secs(60);
    verdict(
        "optimizer exactness",
        pass,
        &format!(
            "{instances} instances ({routed} routable, {with_vehicle} using a vehicle), mismatches {mismatches:?}, {}",
            secs(elapsed)
        ),
    );
    assert!(pass);
}

#[test]
fn od_benchmark_ordering() {
    let started = Instant::now();
    let config = load_scenario(&fixture("network/grid24h.json")).unwrap();
    let graph = build_graph(&config).unwrap();
    let report = od_benchmark(&graph, &config, &BenchmarkOptions::default()).unwrap();
    let medium = report.extra(TrafficLevel::Medium).unwrap();
    let high = report.extra(TrafficLevel::High).unwrap();
    let nonneg = high.values_s.iter().filter(|v| **v >= 0.0).count() as f64 / high.values_s.len().max(1) as f64;
    let elapsed = started.elapsed();
    let pass = report.pairs.len() == 400
        && high.mean_s > medium.mean_s
        && medium.mean_s >= 0.0
        && nonneg >= 0.8
        && elapsed < Duration::from_secs(300);
    verdict(
        "OD benchmark ordering",
        pass,
        &format!(
            "mean(Medium−Low) {:.2}s, mean(High−Low) {:.2}s, {:.1}% of {} pairs nonnegative under High, {} excluded, {}",
            medium.mean_s,
            high.mean_s,
            nonneg * 100.0,
            high.values_s.len(),
            report.excluded,
            secs(elapsed)
        ),
    );
    assert!(pass);
}

#[test]
fn simulator_demand_fidelity() {
    let started = Instant::now();
    let config = load_scenario(&fixture("network/grid24h.json")).unwrap();
    let graph = build_graph(&config).unwrap();
    let mut records: Vec<EdgeTrafficRecord> = Vec::new();
    let summary = run_scenario(&graph, &config, &mut records).unwrap();

    let mut worst: f64 = 0.0;
    for class in &summary.classes {
        for i in &class.intervals {
            worst = worst.max((i.spawned as f64 - i.expected).abs() / i.expected);
        }
    }
    let speeds_ok = records.iter().all(|r| {
        let edge = graph.edge(graph.edge_ix(&r.edge_id).unwrap());
        AgentClass::ALL.iter().all(|&c| match (r.speed(c), edge.free_flow_speed(c)) {
            (Some(v), Some(vf)) => (0.0..=vf).contains(&v),
            (None, None) => true,
            _ => false,
        })
    });
    let expected_records = config.window_count() as usize * graph.edge_count();
    let elapsed = started.elapsed();
    let pass = worst <= 0.05
        && speeds_ok
        && records.len() == expected_records
        && summary.records == expected_records as u64
        && elapsed < Duration::from_secs(120);
    verdict(
        "simulator demand fidelity",
        pass,
        &format!(
            "worst interval spawn deviation {:.3}%, speeds within [0, vf]: {speeds_ok}, records {} (want {expected_records}), {}",
            worst * 100.0,
            records.len(),
            secs(elapsed)
        ),
    );
    assert!(pass);
}

#[tokio::test]
async fn rag_determinism() {
    let state = Arc::new(
        AppState::new(fixture_store())
            .with_embedder(|| {
                Ok(Box::new(FixtureEmbedder::from_file(&fixture("rag/vectors.json"))?) as Box<dyn Embedder>)
            })
            .with_backend(Arc::new(replay("xiyan-replay", "rag/cassette.json"))),
    );
    let app = router(state);
    let mut sqls = Vec::new();
    let mut ranked = Vec::new();
    for _ in 0..3 {
        let req = Request::post("/query")
            .header("content-type", "application/json")
            .body(Body::from(json!({"question": TABLE3_USER_Q, "user_class": "user"}).to_string()))
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
        let body: Json = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
        sqls.push(body["generated_sql"].as_str().unwrap().as_bytes().to_vec());
        ranked.push(body["retrieved_schemas"][0]["doc_id"].as_str().unwrap().to_string());
    }
    let identical = sqls.windows(2).all(|w| w[0] == w[1]);
    let rank1 = ranked.iter().all(|d| d == "ehub.user_paths");

    let embedder = FixtureEmbedder::from_file(&fixture("rag/vectors.json")).unwrap();
    let stored: Vec<Retrieved> =
        serde_json::from_str(&std::fs::read_to_string(fixture("rag/table3_user_scores.json")).unwrap()).unwrap();
    let store = fixture_store();
    let pipeline = fixture_pipeline(&store);
    let q = embedder.embed(TABLE3_USER_Q).unwrap();
    let worst = stored
        .iter()
        .map(|r| {
            let doc = pipeline.doc(&r.doc_id).unwrap();
            let cos = cosine_similarity(&q, &embedder.embed(&doc.text).unwrap()).unwrap();
            (cos - r.score).abs()
        })
        .fold(0.0, f64::max);
    let pass = identical && rank1 && worst <= 1e-9 && stored.len() == 3;
    verdict(
        "RAG determinism",
        pass,
        &format!("3 runs byte-identical: {identical}, rank-1 {:?}, max cosine drift {worst:.2e}", ranked[0]),
    );
    assert!(pass);
}

const ADVERSARIAL: [&str; 50] = [
    "DELETE FROM online_demo",
    "DELETE FROM stations WHERE 1=1",
    "UPDATE stations SET battery_level = 0",
    "UPDATE user_paths SET end_edge = 'E1'",
    "INSERT INTO stations VALUES ('H9','E1','v','ebike',1)",
    "INSERT INTO online_demo (edge_id, simulation_time) VALUES ('x', 1)",
    "REPLACE INTO stations VALUES ('H1','E3','x','ebike',1)",
    "DROP TABLE stations",
    "DROP TABLE IF EXISTS user_paths",
    "DROP VIEW v",
    "DROP INDEX i",
    "CREATE TABLE evil (x)",
    "CREATE TEMP TABLE t AS SELECT * FROM stations",
    "CREATE INDEX i ON stations(edge_id)",
    "CREATE VIEW v AS SELECT 1",
    "CREATE TRIGGER t AFTER INSERT ON stations BEGIN DELETE FROM stations; END",
    "ALTER TABLE stations ADD COLUMN x",
    "ALTER TABLE stations RENAME TO s2",
    "ATTACH DATABASE ':memory:' AS other",
    "DETACH DATABASE other",
    "PRAGMA writable_schema = 1",
    "PRAGMA journal_mode = DELETE",
    "PRAGMA table_info(stations)",
    "VACUUM",
    "REINDEX",
    "ANALYZE",
    "BEGIN",
    "BEGIN TRANSACTION; DELETE FROM stations; COMMIT",
    "COMMIT",
    "ROLLBACK",
    "SAVEPOINT s",
    "RELEASE s",
    "EXPLAIN DELETE FROM stations",
    "EXPLAIN QUERY PLAN SELECT 1",
    "SELECT 1; DELETE FROM stations",
    "SELECT * FROM stations; DROP TABLE stations;",
    "WITH x AS (SELECT 1) DELETE FROM stations",
    "WITH x AS (SELECT 1) UPDATE stations SET edge_id = 'E0'",
    "WITH x AS (SELECT 1) INSERT INTO stations SELECT * FROM stations",
    "  delete from stations",
    "\n\tUpDaTe stations SET edge_id = 'E0'",
    "/* comment */ DELETE FROM stations",
    "-- comment\nDROP TABLE stations",
    "(SELECT 1); DELETE FROM stations",
    "",
    "   ",
    ";",
    "VALUES (1)",
    "UPSERT stations",
    "SELECT 1; ATTACH DATABASE ':memory:' AS x",
];

#[test]
fn datastore_round_trip() {
    let started = Instant::now();
    let store = Datastore::initialized().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let speed = |rng: &mut ChaCha8Rng, vf: f64| rng.gen_bool(0.9).then(|| rng.gen_range(0.0..vf));
    let records: Vec<EdgeTrafficRecord> = (0..100_000)
        .map(|i| EdgeTrafficRecord {
            edge_id: format!("E{:04}", i % 250),
            simulation_time: (i / 250) as i64 * 360,
            pedestrian_speed: speed(&mut rng, 1.4),
            bike_speed: speed(&mut rng, 5.0),
            car_speed: speed(&mut rng, 13.9),
        })
        .collect();
    let mut shuffled = records.clone();
    rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
    store.ingest_all(&shuffled).unwrap();

    let table = store.execute_sql("SELECT * FROM online_demo ORDER BY simulation_time, edge_id").unwrap();
    let real = |v: Option<f64>| v.map_or(Value::Null, Value::Real);
    let expected: Vec<Vec<Value>> = records
        .iter()
        .map(|r| {
            vec![
                Value::Text(r.edge_id.clone()),
                Value::Integer(r.simulation_time),
                real(r.pedestrian_speed),
                real(r.bike_speed),
                real(r.car_speed),
            ]
        })
        .collect();
    let round_trip = table.rows == expected;

    let seeded = fixture_store();
    let before = seeded.checksum().unwrap();
    let accepted: Vec<&str> = ADVERSARIAL
        .iter()
        .copied()
        .filter(|s| !matches!(seeded.execute_sql(s), Err(StoreError::NotReadOnly)))
        .collect();
    let unchanged = seeded.checksum().unwrap() == before;
    let elapsed = started.elapsed();
    let pass = round_trip && accepted.is_empty() && unchanged;
    verdict(
        "datastore round trip",
        pass,
        &format!(
            "100000 records reproduced exactly: {round_trip}; {} of {} adversarial statements rejected{}; checksum unchanged: {unchanged}; {}",
            ADVERSARIAL.len() - accepted.len(),
            ADVERSARIAL.len(),
            if accepted.is_empty() { String::new() } else { format!(" (accepted {accepted:?})") },
            secs(elapsed)
        ),
    );
    assert!(pass);
}
