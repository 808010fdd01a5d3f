//! Shared generators and independent oracles for the integration suites.
//!
//! Everything here stays deliberately independent of the solver internals it
//! checks: the coherence oracle enumerates partitions over the raw constraint
//! list, and the categorization oracle is a straight-line re-statement of the
//! decision rules.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::prelude::*;

use delta_core::coherence::{CoherenceProblem, Sign, EVIDENCE_ID};
use delta_core::engine::{RepresentationKind, Stimulus};
use delta_core::kb::{EngineParams, KnowledgeBase};
use delta_core::space::{similarity, ConceptualSpace, Point};

pub const ELEMENT_POOL: [&str; 6] = ["barks", "flies", "lays-eggs", "purrs", "swims", "wild"];

// ---------------------------------------------------------------------------
// random instances

/// One conceptual space with 1-3 domains of 1-2 dimensions each.
pub fn gen_space_doc(rng: &mut impl Rng) -> serde_json::Value {
    let n_domains = rng.gen_range(1..=3);
    let mut dim_index = 0;
    let domains: Vec<serde_json::Value> = (0..n_domains)
        .map(|d| {
            let n_dims = rng.gen_range(1..=2);
            let dims: Vec<serde_json::Value> = (0..n_dims)
                .map(|_| {
                    let lo: f64 = rng.gen_range(-5.0..5.0);
                    let width: f64 = rng.gen_range(0.5..10.0);
                    let weight: f64 = rng.gen_range(0.25..4.0);
                    let dim = serde_json::json!({
                        "name": format!("q{dim_index}"),
                        "weight": weight,
                        "range": [lo, lo + width],
                    });
                    dim_index += 1;
                    dim
                })
                .collect();
            serde_json::json!({"name": format!("dom{d}"), "dimensions": dims})
        })
        .collect();
    serde_json::json!({"name": "random-space", "domains": domains})
}

pub fn gen_point(rng: &mut impl Rng, space: &ConceptualSpace) -> Point {
    Point {
        coords: space
            .dimensions()
            .map(|dim| {
                let value = rng.gen_range(dim.range[0]..=dim.range[1]);
                (dim.name.clone(), value)
            })
            .collect(),
    }
}

fn gen_theory_doc(rng: &mut impl Rng) -> serde_json::Value {
    let mut pool: Vec<&str> = ELEMENT_POOL.to_vec();
    pool.shuffle(rng);
    let n = rng.gen_range(1..=4);
    let ids: Vec<&str> = pool[..n].to_vec();
    let elements: Vec<serde_json::Value> =
        ids.iter().map(|id| serde_json::json!({"id": id})).collect();
    let mut constraints = Vec::new();
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            if rng.gen_bool(0.5) {
                let sign = if rng.gen_bool(0.5) { "+" } else { "-" };
                let weight: f64 = rng.gen_range(0.25..3.0);
                constraints.push(serde_json::json!({
                    "a": ids[i], "b": ids[j], "sign": sign, "weight": weight,
                }));
            }
        }
    }
    serde_json::json!({"elements": elements, "constraints": constraints})
}

/// A random, valid-by-construction knowledge base with at most `max_concepts`
/// concepts, exercised through the strict loader.
pub fn gen_kb(rng: &mut impl Rng, max_concepts: usize) -> KnowledgeBase {
    let space_doc = gen_space_doc(rng);
    let space: ConceptualSpace = serde_json::from_value(space_doc.clone()).unwrap();
    let n_concepts = rng.gen_range(1..=max_concepts);
    let mut concepts = Vec::new();
    for i in 0..n_concepts {
        // Force numeric content into the first concept so the KB is never
        // empty for the engine.
        let has_prototype = rng.gen_bool(0.7) || i == 0;
        let n_exemplars = rng.gen_range(0..=2);
        let mut doc = serde_json::json!({
            "id": format!("c{i}"),
            "anchor": format!("anchor-{i}"),
        });
        let obj = doc.as_object_mut().unwrap();
        if has_prototype {
            obj.insert(
                "prototype".into(),
                serde_json::json!({"space": "random-space", "point": gen_point(rng, &space).coords}),
            );
        }
        if n_exemplars > 0 {
            let exemplars: Vec<serde_json::Value> = (0..n_exemplars)
                .map(|j| {
                    serde_json::json!({
                        "exemplar_id": format!("x{j}"),
                        "space": "random-space",
                        "point": gen_point(rng, &space).coords,
                    })
                })
                .collect();
            obj.insert("exemplars".into(), serde_json::json!(exemplars));
        }
        if rng.gen_bool(0.6) {
            obj.insert("theory".into(), gen_theory_doc(rng));
        }
        if !has_prototype && n_exemplars == 0 && !obj.contains_key("theory") {
            obj.insert("theory".into(), gen_theory_doc(rng));
        }
        concepts.push(doc);
    }
    let params = serde_json::json!({
        "theta_exemplar": rng.gen_range(0.05..0.95),
        "theta_coherence": rng.gen_range(0.05..0.95),
        "decay_k": rng.gen_range(0.2..3.0),
    });
    let doc = serde_json::json!({
        "spaces": [space_doc],
        "concepts": concepts,
        "params": params,
    });
    KnowledgeBase::load_str(&doc.to_string(), true).expect("generated KB is valid")
}

pub fn gen_stimulus(rng: &mut impl Rng, kb: &KnowledgeBase, id: &str) -> Stimulus {
    let space = kb.spaces.values().next().unwrap();
    let mut observed = BTreeSet::new();
    let mut contradicted = BTreeSet::new();
    for el in ELEMENT_POOL {
        let roll: f64 = rng.gen();
        if roll < 0.3 {
            observed.insert(el.to_string());
        } else if roll < 0.5 {
            contradicted.insert(el.to_string());
        }
    }
    Stimulus {
        id: id.to_string(),
        space: space.name.clone(),
        point: gen_point(rng, space),
        observed,
        contradicted,
    }
}

/// One constraint as raw parts: endpoints, sign, weight.
pub type RawConstraint = (String, String, Sign, f64);

/// A random signed network over `n` free elements, as raw parts. Evidence
/// constraints appear with the same probability as internal ones.
pub fn gen_raw_network(rng: &mut impl Rng, n: usize) -> (Vec<String>, Vec<RawConstraint>) {
    let elements: Vec<String> = (0..n).map(|i| format!("e{i:02}")).collect();
    let mut constraints = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.3) {
                constraints.push((
                    elements[i].clone(),
                    elements[j].clone(),
                    if rng.gen_bool(0.5) {
                        Sign::Positive
                    } else {
                        Sign::Negative
                    },
                    rng.gen_range(0.25..3.0),
                ));
            }
        }
        if rng.gen_bool(0.4) {
            constraints.push((
                elements[i].clone(),
                EVIDENCE_ID.to_string(),
                if rng.gen_bool(0.5) {
                    Sign::Positive
                } else {
                    Sign::Negative
                },
                rng.gen_range(0.25..3.0),
            ));
        }
    }
    (elements, constraints)
}

// ---------------------------------------------------------------------------
// independent oracles

/// Maximum satisfied weight over all 2^n partitions, computed directly from
/// the raw constraint list. EVIDENCE always counts as accepted.
pub fn brute_force_max_satisfied(elements: &[String], constraints: &[RawConstraint]) -> f64 {
    let n = elements.len();
    assert!(n <= 20, "oracle is exponential");
    let side = |id: &str, mask: u64| -> bool {
        if id == EVIDENCE_ID {
            return true;
        }
        let idx = elements.iter().position(|e| e == id).unwrap();
        mask & (1u64 << idx) != 0
    };
    let mut best = f64::NEG_INFINITY;
    for mask in 0..(1u64 << n) {
        let mut sum = 0.0;
        for (a, b, sign, weight) in constraints {
            let same = side(a, mask) == side(b, mask);
            let satisfied = match sign {
                Sign::Positive => same,
                Sign::Negative => !same,
            };
            if satisfied {
                sum += weight;
            }
        }
        if sum > best {
            best = sum;
        }
    }
    best
}

/// Build a solver problem from the same raw parts the oracle consumes.
pub fn problem_from_raw(elements: &[String], constraints: &[RawConstraint]) -> CoherenceProblem {
    CoherenceProblem::from_parts(elements.to_vec(), constraints).unwrap()
}

/// Straight-line restatement of the decision rules: exemplar priority, then
/// nearest of all, then the coherence gate, then the best theory. Returns the
/// (concept, kind) decision, or None when there is nothing to compare with.
pub fn reference_delta(
    d: &Stimulus,
    kb: &KnowledgeBase,
    params: &EngineParams,
) -> Option<(String, RepresentationKind)> {
    let space = kb.spaces.get(&d.space)?;
    let obs = delta_core::coherence::ObservationSet {
        observed: d.observed.clone(),
        contradicted: d.contradicted.clone(),
    };
    let config = delta_core::coherence::CoherenceConfig::default();

    // 1. exemplar scan
    let mut best_ex: Option<(String, String, f64)> = None;
    for (cid, ex) in kb.all_exemplars() {
        if ex.space != d.space {
            continue;
        }
        let sim = similarity(&d.point, &ex.point, space, params.decay_k).unwrap();
        if best_ex.as_ref().is_none_or(|(_, _, s)| sim > *s) {
            best_ex = Some((cid.to_string(), ex.exemplar_id.clone(), sim));
        }
    }
    if let Some((cid, _, sim)) = &best_ex {
        if *sim >= params.theta_exemplar {
            return Some((cid.clone(), RepresentationKind::Exemplar));
        }
    }

    // 2. nearest representation of any kind (prototype sorts before the
    // exemplars of the same concept on ties)
    let mut reps: Vec<(String, Option<String>, f64)> = Vec::new();
    for (cid, proto) in kb.all_prototypes() {
        if proto.space == d.space {
            let sim = similarity(&d.point, &proto.point, space, params.decay_k).unwrap();
            reps.push((cid.to_string(), None, sim));
        }
    }
    for (cid, ex) in kb.all_exemplars() {
        if ex.space == d.space {
            let sim = similarity(&d.point, &ex.point, space, params.decay_k).unwrap();
            reps.push((cid.to_string(), Some(ex.exemplar_id.clone()), sim));
        }
    }
    reps.sort_by(|x, y| (&x.0, x.1.is_some(), &x.1).cmp(&(&y.0, y.1.is_some(), &y.1)));
    let nearest = reps.iter().fold(
        None::<&(String, Option<String>, f64)>,
        |best, r| match best {
            Some(b) if b.2 >= r.2 => best,
            _ => Some(r),
        },
    )?;
    if nearest.1.is_some() {
        return Some((nearest.0.clone(), RepresentationKind::Exemplar));
    }

    // 3. coherence gate on the retrieved prototype
    let concept = nearest.0.clone();
    match kb.theory_of(&concept).unwrap() {
        Some(theory) => {
            let score = delta_core::coherence::coherence_score(theory, &obs, &config);
            if score >= params.theta_coherence {
                return Some((concept, RepresentationKind::Prototype));
            }
        }
        None => return Some((concept, RepresentationKind::Prototype)),
    }

    // 4. best theory wins
    let mut winner: Option<(String, f64)> = None;
    for (cid, theory) in kb.all_theories() {
        let score = delta_core::coherence::coherence_score(theory, &obs, &config);
        if winner.as_ref().is_none_or(|(_, s)| score > *s) {
            winner = Some((cid.to_string(), score));
        }
    }
    match winner {
        Some((cid, _)) => Some((cid, RepresentationKind::TheoryOverride)),
        None => Some((concept, RepresentationKind::Prototype)),
    }
}
