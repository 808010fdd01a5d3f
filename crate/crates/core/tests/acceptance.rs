//! Acceptance gate: one test per release criterion. Each prints a single
//! PASS/FAIL line so the whole gate can be read at a glance with
//! `cargo test --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use delta_core::coherence::{solve_exact, solve_greedy};
use delta_core::engine::{
    delta_categorize, parse_stimuli, sweep, RepresentationKind, Stage, Stimulus, SweepParam,
    SweepSpec,
};
use delta_core::kb::{EngineParams, KnowledgeBase};
use delta_core::space::{distance, similarity, ConceptualSpace, Point};

fn criterion(label: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {label}: PASS"),
        Err(payload) => {
            println!("criterion {label}: FAIL");
            resume_unwind(payload);
        }
    }
}

fn load_fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"))
}

fn load_kb(name: &str) -> KnowledgeBase {
    KnowledgeBase::load_str(&load_fixture(name), true).expect("fixture KB loads")
}

fn load_stimuli(name: &str) -> Vec<Stimulus> {
    parse_stimuli(&load_fixture(name), true)
        .expect("fixture stimuli parse")
        .into_iter()
        .map(|r| r.expect("fixture stimulus is valid"))
        .collect()
}

// ---------------------------------------------------------------------------
// 1. the atypical golden zebra is recovered by a theory override

#[test]
fn c1_golden_zebra_override() {
    criterion("1 (golden zebra override)", || {
        let start = Instant::now();
        let kb = load_kb("golden_zebra.kb.json");
        let stimuli = load_stimuli("golden_zebra.stimuli.json");
        let result = delta_categorize(&stimuli[0], &kb, &kb.params).unwrap();
        let elapsed = start.elapsed();

        assert_eq!(result.concept, "zebra");
        assert_eq!(result.kind, RepresentationKind::TheoryOverride);
        let gate = result
            .trace
            .steps
            .iter()
            .find(|s| s.stage == Stage::CoherenceCheck)
            .expect("trace records the coherence check");
        assert!(
            gate.outcome.contains("< theta_coherence") && gate.outcome.contains("'horse'"),
            "gate step must show the failed check against the horse theory: {}",
            gate.outcome
        );
        // same inputs, same answer
        let again = delta_categorize(&stimuli[0], &kb, &kb.params).unwrap();
        assert_eq!(result, again);
        assert!(
            elapsed < Duration::from_millis(100),
            "took {elapsed:?}, budget 100ms"
        );
    });
}

// ---------------------------------------------------------------------------
// 2. a stored penguin exemplar beats the robin-like bird prototype

#[test]
fn c2_penguin_prefers_exemplar() {
    criterion("2 (penguin exemplar preference)", || {
        let kb = load_kb("penguin.kb.json");
        let stimuli = load_stimuli("penguin.stimuli.json");
        let result = delta_categorize(&stimuli[0], &kb, &kb.params).unwrap();
        assert_eq!(result.concept, "bird");
        assert_eq!(result.kind, RepresentationKind::Exemplar);
    });
}

// ---------------------------------------------------------------------------
// 3. a furry, woofing, tail-wagging stimulus confirms the dog prototype

#[test]
fn c3_dog_prototype_confirmed() {
    criterion("3 (dog prototype confirmation)", || {
        let kb = load_kb("dog.kb.json");
        let stimuli = load_stimuli("dog.stimuli.json");
        let result = delta_categorize(&stimuli[0], &kb, &kb.params).unwrap();
        assert_eq!(result.concept, "dog");
        assert_eq!(result.kind, RepresentationKind::Prototype);
        let coherence = result.coherence.expect("gate score is recorded");
        assert!(coherence >= kb.params.theta_coherence);
        let gate = result
            .trace
            .steps
            .iter()
            .find(|s| s.stage == Stage::CoherenceCheck)
            .expect("trace records the coherence check");
        assert_eq!(gate.candidates[0].score, coherence);
    });
}

// ---------------------------------------------------------------------------
// 4. the exact solver matches a brute-force oracle; greedy never beats it

#[test]
fn c4_coherence_oracle_equivalence() {
    criterion("4 (coherence oracle equivalence)", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eedc4);
        for _ in 0..500 {
            let n = rng.gen_range(0..=12usize);
            let (elements, constraints) = common::gen_raw_network(&mut rng, n);
            let p = common::problem_from_raw(&elements, &constraints);
            let exact = solve_exact(&p).unwrap();
            let oracle = common::brute_force_max_satisfied(&elements, &constraints);
            assert_eq!(
                exact.satisfied_weight, oracle,
                "exact solver disagrees with brute force on {n} elements"
            );
            let greedy = solve_greedy(&p);
            assert!(greedy.satisfied_weight <= exact.satisfied_weight);
        }
        let elapsed = start.elapsed();
        assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    });
}

// ---------------------------------------------------------------------------
// 5. metric axioms hold on 10,000 random point triples

#[test]
fn c5_metric_property_suite() {
    criterion("5 (metric axioms on 10,000 triples)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eedc5);
        for _ in 0..500 {
            let doc = common::gen_space_doc(&mut rng);
            let space: ConceptualSpace = serde_json::from_value(doc).unwrap();
            for _ in 0..20 {
                let a = common::gen_point(&mut rng, &space);
                let b = common::gen_point(&mut rng, &space);
                let c = common::gen_point(&mut rng, &space);
                assert!(distance(&a, &a, &space).unwrap() <= 1e-12);
                let dab = distance(&a, &b, &space).unwrap();
                let dba = distance(&b, &a, &space).unwrap();
                assert!((dab - dba).abs() <= 1e-9);
                let dbc = distance(&b, &c, &space).unwrap();
                let dac = distance(&a, &c, &space).unwrap();
                assert!(dac <= dab + dbc + 1e-9);
                let s = similarity(&a, &b, &space, 1.0).unwrap();
                assert!(s > 0.0 && s <= 1.0);
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 6. the engine agrees with a straight-line reference implementation

#[test]
fn c6_engine_oracle_equivalence() {
    criterion("6 (decision-rule oracle equivalence)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eedc6);
        for i in 0..200 {
            let kb = common::gen_kb(&mut rng, 5);
            let d = common::gen_stimulus(&mut rng, &kb, &format!("s{i}"));
            let expected = common::reference_delta(&d, &kb, &kb.params);
            match delta_categorize(&d, &kb, &kb.params) {
                Ok(result) => {
                    let (concept, kind) = expected.expect("oracle finds a comparable body");
                    assert_eq!((result.concept, result.kind), (concept, kind), "kb {i}");
                }
                Err(delta_core::engine::EngineError::EmptyKnowledgeBase) => {
                    assert!(expected.is_none(), "kb {i}");
                }
                Err(other) => panic!("kb {i}: unexpected error {other:?}"),
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 7. threshold sweeps are monotone on the combined fixture set

#[test]
fn c7_sweep_monotonicity() {
    criterion("7 (threshold sweep monotonicity)", || {
        let kb = load_kb("menagerie.kb.json");
        let stimuli = load_stimuli("menagerie.stimuli.json");
        let grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();

        let spec = SweepSpec::new(SweepParam::ThetaExemplar, grid.clone()).unwrap();
        let rows = sweep(&kb, &stimuli, &kb.params, &spec);
        for w in rows.windows(2) {
            assert!(
                w[1].exemplar_step1 <= w[0].exemplar_step1,
                "step-1 exemplar count rose from {} to {} at theta_exemplar {}",
                w[0].exemplar_step1,
                w[1].exemplar_step1,
                w[1].value
            );
        }
        // sanity: the sweep actually moves across this grid
        assert!(rows.first().unwrap().exemplar_step1 > rows.last().unwrap().exemplar_step1);

        let spec = SweepSpec::new(SweepParam::ThetaCoherence, grid).unwrap();
        let rows = sweep(&kb, &stimuli, &kb.params, &spec);
        for w in rows.windows(2) {
            assert!(
                w[1].theory_override >= w[0].theory_override,
                "override count fell from {} to {} at theta_coherence {}",
                w[0].theory_override,
                w[1].theory_override,
                w[1].value
            );
        }
        assert!(rows.last().unwrap().theory_override > rows.first().unwrap().theory_override);
    });
}

// ---------------------------------------------------------------------------
// 8. 1,000 stimuli against a 100-concept knowledge base in under 2 seconds

fn perf_kb() -> KnowledgeBase {
    let mut concepts = Vec::new();
    for i in 0..100 {
        let x = i as f64 / 100.0;
        let exemplars: Vec<serde_json::Value> = (0..3)
            .map(|j| {
                serde_json::json!({
                    "exemplar_id": format!("x{j}"),
                    "space": "perf-space",
                    "point": {"x": x, "y": 0.1 * j as f64, "tag": 1.0},
                })
            })
            .collect();
        let elements: Vec<serde_json::Value> = (0..10)
            .map(|e| serde_json::json!({"id": format!("c{i:03}-e{e}")}))
            .collect();
        let constraints: Vec<serde_json::Value> = (0..9)
            .map(|e| {
                serde_json::json!({
                    "a": format!("c{i:03}-e{e}"),
                    "b": format!("c{i:03}-e{}", e + 1),
                    "sign": "+",
                    "weight": 1.0,
                })
            })
            .collect();
        concepts.push(serde_json::json!({
            "id": format!("c{i:03}"),
            "anchor": format!("anchor-{i:03}"),
            "prototype": {
                "space": "perf-space",
                "point": {"x": x, "y": 0.5, "tag": 0.0},
            },
            "exemplars": exemplars,
            "theory": {"elements": elements, "constraints": constraints},
        }));
    }
    let doc = serde_json::json!({
        "spaces": [{
            "name": "perf-space",
            "domains": [
                {"name": "position", "dimensions": [
                    {"name": "x", "weight": 1.0, "range": [0.0, 1.0]},
                    {"name": "y", "weight": 1.0, "range": [0.0, 1.0]},
                ]},
                {"name": "marker", "dimensions": [
                    {"name": "tag", "weight": 1.0, "range": [0.0, 1.0]},
                ]},
            ],
        }],
        "concepts": concepts,
    });
    KnowledgeBase::load_str(&doc.to_string(), true).unwrap()
}

#[test]
fn c8_performance_floor() {
    criterion("8 (1,000 stimuli vs 100 concepts < 2s)", || {
        let kb = perf_kb();
        let stimuli: Vec<Stimulus> = (0..1000)
            .map(|s| {
                let t = s % 100;
                let x = t as f64 / 100.0;
                let (point, observed) = if s % 2 == 0 {
                    // lands on a stored exemplar
                    (
                        Point::from_pairs([("x", x), ("y", 0.0), ("tag", 1.0)]),
                        vec![],
                    )
                } else {
                    // lands on the prototype and confirms its theory
                    (
                        Point::from_pairs([("x", x), ("y", 0.5), ("tag", 0.0)]),
                        (0..3).map(|e| format!("c{t:03}-e{e}")).collect(),
                    )
                };
                Stimulus {
                    id: format!("s{s:04}"),
                    space: "perf-space".to_string(),
                    point,
                    observed: observed.into_iter().collect(),
                    contradicted: BTreeSet::new(),
                }
            })
            .collect();

        let start = Instant::now();
        let mut exemplar = 0usize;
        let mut prototype = 0usize;
        for d in &stimuli {
            match delta_categorize(d, &kb, &kb.params).unwrap().kind {
                RepresentationKind::Exemplar => exemplar += 1,
                RepresentationKind::Prototype => prototype += 1,
                RepresentationKind::TheoryOverride => {}
            }
        }
        let elapsed = start.elapsed();
        assert_eq!((exemplar, prototype), (500, 500));
        assert!(
            elapsed < Duration::from_secs(2),
            "took {elapsed:?}, budget 2s"
        );
    });
}

// ---------------------------------------------------------------------------
// 9. serialize/load fixpoint and byte-identical repeated runs

#[test]
fn c9_round_trip_and_determinism() {
    criterion("9 (round trip and byte determinism)", || {
        let kb = load_kb("menagerie.kb.json");
        let text = kb.to_json_string();
        let reloaded = KnowledgeBase::load_str(&text, true).unwrap();
        assert_eq!(reloaded, kb);
        assert_eq!(reloaded.to_json_string(), text);

        let stimuli = load_stimuli("menagerie.stimuli.json");
        let run = |kb: &KnowledgeBase, params: &EngineParams| -> String {
            stimuli
                .iter()
                .map(|d| serde_json::to_string(&delta_categorize(d, kb, params).unwrap()).unwrap())
                .collect::<Vec<_>>()
                .join("\n")
        };
        let first = run(&kb, &kb.params);
        let second = run(&kb, &kb.params);
        let through_reload = run(&reloaded, &reloaded.params);
        assert_eq!(first, second);
        assert_eq!(first, through_reload);
    });
}
