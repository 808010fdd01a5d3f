//! The DELTA categorization algorithm: exemplar-priority retrieval, a
//! nearest-representation fallback, a coherence gate on the retrieved
//! prototype, and theory-like override when the gate fails. Every decision is
//! recorded in an auditable trace, and the winning body of knowledge can be
//! tokenized into a proxy token.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coherence::{
    evaluate, CoherenceConfig, CoherenceSolution, ObservationSet, TheoryNetwork,
};
use crate::kb::{EngineParams, ExemplarBody, KbError, KnowledgeBase, PrototypeBody};
use crate::space::{similarity, validate_point, Point, SpaceError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("knowledge base has no prototypes or exemplars comparable to the stimulus")]
    EmptyKnowledgeBase,
    #[error("stimulus '{stimulus}' names unknown space '{space}'")]
    UnknownSpace { stimulus: String, space: String },
    #[error("invalid stimulus '{stimulus}': {detail}")]
    InvalidStimulus { stimulus: String, detail: String },
    #[error(transparent)]
    DimensionMismatch(#[from] SpaceError),
    #[error("stale result: {0}")]
    StaleResult(String),
}

/// A numeric percept plus the symbolic assertions it carries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stimulus {
    pub id: String,
    pub space: String,
    pub point: Point,
    pub observed: BTreeSet<String>,
    pub contradicted: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepresentationKind {
    Exemplar,
    Prototype,
    TheoryOverride,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    ExemplarScan,
    NearestScan,
    CoherenceCheck,
    TheorySearch,
    Proxyfication,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceNote {
    TheoryAbsent,
    NoTheoriesInKB,
    LowConfidenceOverride,
}

/// A candidate considered at some stage, with the score it earned there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub concept: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exemplar: Option<String>,
    pub kind: RepresentationKind,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub stage: Stage,
    pub candidates: Vec<Candidate>,
    pub thresholds: BTreeMap<String, f64>,
    pub outcome: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<TraceNote>,
}

/// Ordered record of the stages the algorithm went through.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionTrace {
    pub steps: Vec<TraceStep>,
}

/// Outcome of categorizing one stimulus, with the full decision trace.
/// Similarity is absent exactly for theory overrides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategorizationResult {
    pub stimulus: String,
    pub concept: String,
    pub kind: RepresentationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence: Option<f64>,
    pub trace: DecisionTrace,
    /// Winning exemplar id, when the winning kind is Exemplar.
    #[serde(skip)]
    pub exemplar: Option<String>,
}

/// The winning body of knowledge, copied by value to go proxy for its
/// category in working memory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyToken {
    pub concept: String,
    pub kind: RepresentationKind,
    pub payload: ProxyPayload,
    pub stimulus: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "body")]
pub enum ProxyPayload {
    Exemplar(ExemplarBody),
    Prototype(PrototypeBody),
    Theory(TheoryNetwork),
}

struct ScanCandidate<'a> {
    concept: &'a str,
    exemplar: Option<&'a str>,
    point: &'a Point,
    similarity: f64,
}

/// Categorize `d` against `kb`: exemplar scan, nearest-of-all fallback,
/// coherence gate, theory override, in that order.
pub fn delta_categorize(
    d: &Stimulus,
    kb: &KnowledgeBase,
    params: &EngineParams,
) -> Result<CategorizationResult, EngineError> {
    let space = kb
        .spaces
        .get(&d.space)
        .ok_or_else(|| EngineError::UnknownSpace {
            stimulus: d.id.clone(),
            space: d.space.clone(),
        })?;
    let report = validate_point(&d.point, space);
    if !report.is_valid() {
        return Err(EngineError::InvalidStimulus {
            stimulus: d.id.clone(),
            detail: format!("{:?}", report.findings),
        });
    }
    if !d.observed.is_disjoint(&d.contradicted) {
        return Err(EngineError::InvalidStimulus {
            stimulus: d.id.clone(),
            detail: "observed and contradicted sets overlap".into(),
        });
    }

    // Gather comparable representations in (concept, prototype-first,
    // exemplar-id) order; the first maximum then wins every tie-break.
    let mut exemplars: Vec<ScanCandidate> = Vec::new();
    let mut all: Vec<ScanCandidate> = Vec::new();
    for entry in kb.concepts.values() {
        if let Some(proto) = &entry.prototype {
            if proto.space == d.space {
                let sim = similarity(&d.point, &proto.point, space, params.decay_k)?;
                all.push(ScanCandidate {
                    concept: &entry.id,
                    exemplar: None,
                    point: &proto.point,
                    similarity: sim,
                });
            }
        }
        for ex in &entry.exemplars {
            if ex.space == d.space {
                let sim = similarity(&d.point, &ex.point, space, params.decay_k)?;
                exemplars.push(ScanCandidate {
                    concept: &entry.id,
                    exemplar: Some(&ex.exemplar_id),
                    point: &ex.point,
                    similarity: sim,
                });
                all.push(ScanCandidate {
                    concept: &entry.id,
                    exemplar: Some(&ex.exemplar_id),
                    point: &ex.point,
                    similarity: sim,
                });
            }
        }
    }
    if all.is_empty() {
        return Err(EngineError::EmptyKnowledgeBase);
    }

    let mut trace = DecisionTrace::default();
    let obs = ObservationSet {
        observed: d.observed.clone(),
        contradicted: d.contradicted.clone(),
    };
    let coherence_config = CoherenceConfig::default();

    // Step 1: exemplar scan.
    let best_exemplar = exemplars
        .iter()
        .fold(None::<&ScanCandidate>, |best, c| match best {
            Some(b) if b.similarity >= c.similarity => best,
            _ => Some(c),
        });
    let mut thresholds = BTreeMap::new();
    thresholds.insert("theta_exemplar".to_string(), params.theta_exemplar);
    let exemplar_candidates: Vec<Candidate> = exemplars
        .iter()
        .map(|c| Candidate {
            concept: c.concept.to_string(),
            exemplar: c.exemplar.map(str::to_string),
            kind: RepresentationKind::Exemplar,
            score: c.similarity,
            exact: None,
        })
        .collect();
    if let Some(best) = best_exemplar {
        if best.similarity >= params.theta_exemplar {
            let concept = best.concept.to_string();
            let exemplar_id = best.exemplar.map(str::to_string);
            let similarity = best.similarity;
            trace.steps.push(TraceStep {
                stage: Stage::ExemplarScan,
                candidates: exemplar_candidates,
                thresholds,
                outcome: format!(
                    "exemplar '{}' of concept '{}' retrieved at similarity {:.6} >= theta_exemplar",
                    exemplar_id.as_deref().unwrap_or(""),
                    concept,
                    similarity
                ),
                notes: vec![],
            });
            return Ok(CategorizationResult {
                stimulus: d.id.clone(),
                concept,
                kind: RepresentationKind::Exemplar,
                similarity: Some(similarity),
                coherence: None,
                trace,
                exemplar: exemplar_id,
            });
        }
    }
    trace.steps.push(TraceStep {
        stage: Stage::ExemplarScan,
        candidates: exemplar_candidates,
        thresholds,
        outcome: match best_exemplar {
            Some(b) => format!(
                "best exemplar similarity {:.6} below theta_exemplar; continuing",
                b.similarity
            ),
            None => "no exemplars stored; continuing".to_string(),
        },
        notes: vec![],
    });

    // Step 2: nearest representation of any kind.
    let nearest = all
        .iter()
        .fold(None::<&ScanCandidate>, |best, c| match best {
            Some(b) if b.similarity >= c.similarity => best,
            _ => Some(c),
        })
        .expect("non-empty candidate list");
    let nearest_kind = if nearest.exemplar.is_some() {
        RepresentationKind::Exemplar
    } else {
        RepresentationKind::Prototype
    };
    trace.steps.push(TraceStep {
        stage: Stage::NearestScan,
        candidates: all
            .iter()
            .map(|c| Candidate {
                concept: c.concept.to_string(),
                exemplar: c.exemplar.map(str::to_string),
                kind: if c.exemplar.is_some() {
                    RepresentationKind::Exemplar
                } else {
                    RepresentationKind::Prototype
                },
                score: c.similarity,
                exact: None,
            })
            .collect(),
        thresholds: BTreeMap::new(),
        outcome: format!(
            "nearest representation is {} of concept '{}' at similarity {:.6}",
            match nearest.exemplar {
                Some(id) => format!("exemplar '{id}'"),
                None => "the prototype".to_string(),
            },
            nearest.concept,
            nearest.similarity
        ),
        notes: vec![],
    });
    let _ = nearest.point;
    if nearest_kind == RepresentationKind::Exemplar {
        return Ok(CategorizationResult {
            stimulus: d.id.clone(),
            concept: nearest.concept.to_string(),
            kind: RepresentationKind::Exemplar,
            similarity: Some(nearest.similarity),
            coherence: None,
            trace,
            exemplar: nearest.exemplar.map(str::to_string),
        });
    }

    // Step 3: coherence gate on the retrieved prototype.
    let concept = nearest.concept.to_string();
    let proto_similarity = nearest.similarity;
    let mut thresholds = BTreeMap::new();
    thresholds.insert("theta_coherence".to_string(), params.theta_coherence);
    let entry = &kb.concepts[&concept];
    let gate: Option<CoherenceSolution> = entry
        .theory
        .as_ref()
        .map(|t| evaluate(t, &obs, &coherence_config));
    match &gate {
        Some(solution) => {
            let passed = solution.score >= params.theta_coherence;
            trace.steps.push(TraceStep {
                stage: Stage::CoherenceCheck,
                candidates: vec![Candidate {
                    concept: concept.clone(),
                    exemplar: None,
                    kind: RepresentationKind::Prototype,
                    score: solution.score,
                    exact: Some(solution.exact),
                }],
                thresholds: thresholds.clone(),
                outcome: if passed {
                    format!(
                        "coherence {:.6} >= theta_coherence; prototype of '{concept}' is coherent enough",
                        solution.score
                    )
                } else {
                    format!(
                        "coherence {:.6} < theta_coherence; prototype of '{concept}' fails the gate",
                        solution.score
                    )
                },
                notes: vec![],
            });
            if passed {
                return Ok(CategorizationResult {
                    stimulus: d.id.clone(),
                    concept,
                    kind: RepresentationKind::Prototype,
                    similarity: Some(proto_similarity),
                    coherence: Some(solution.score),
                    trace,
                    exemplar: None,
                });
            }
        }
        None => {
            trace.steps.push(TraceStep {
                stage: Stage::CoherenceCheck,
                candidates: vec![],
                thresholds: thresholds.clone(),
                outcome: format!("concept '{concept}' has no theory; prototype answer kept"),
                notes: vec![TraceNote::TheoryAbsent],
            });
            return Ok(CategorizationResult {
                stimulus: d.id.clone(),
                concept,
                kind: RepresentationKind::Prototype,
                similarity: Some(proto_similarity),
                coherence: None,
                trace,
                exemplar: None,
            });
        }
    }

    // Step 4: theory override by the best-scoring theory in the KB.
    let mut theory_candidates: Vec<Candidate> = Vec::new();
    let mut best: Option<(String, f64, bool)> = None;
    for (cid, theory) in kb.all_theories() {
        let solution = evaluate(theory, &obs, &coherence_config);
        theory_candidates.push(Candidate {
            concept: cid.to_string(),
            exemplar: None,
            kind: RepresentationKind::TheoryOverride,
            score: solution.score,
            exact: Some(solution.exact),
        });
        match &best {
            Some((_, s, _)) if *s >= solution.score => {}
            _ => best = Some((cid.to_string(), solution.score, solution.exact)),
        }
    }
    match best {
        Some((winner, score, _)) => {
            let mut notes = vec![];
            if score < params.theta_coherence {
                notes.push(TraceNote::LowConfidenceOverride);
            }
            trace.steps.push(TraceStep {
                stage: Stage::TheorySearch,
                candidates: theory_candidates,
                thresholds,
                outcome: format!(
                    "prototype overridden by theory of '{winner}' at coherence {score:.6}"
                ),
                notes,
            });
            Ok(CategorizationResult {
                stimulus: d.id.clone(),
                concept: winner,
                kind: RepresentationKind::TheoryOverride,
                similarity: None,
                coherence: Some(score),
                trace,
                exemplar: None,
            })
        }
        // Unreachable through step 3 (a failed gate implies at least one
        // theory exists), kept for the contract's sake.
        None => {
            trace.steps.push(TraceStep {
                stage: Stage::TheorySearch,
                candidates: vec![],
                thresholds,
                outcome: format!(
                    "no theories in the knowledge base; prototype of '{concept}' kept"
                ),
                notes: vec![TraceNote::NoTheoriesInKB],
            });
            Ok(CategorizationResult {
                stimulus: d.id.clone(),
                concept,
                kind: RepresentationKind::Prototype,
                similarity: Some(proto_similarity),
                coherence: None,
                trace,
                exemplar: None,
            })
        }
    }
}

/// Tokenize the winning body of knowledge — and only that body — for the
/// result's concept.
pub fn proxyfy(
    result: &CategorizationResult,
    kb: &KnowledgeBase,
) -> Result<ProxyToken, EngineError> {
    let entry = kb.concepts.get(&result.concept).ok_or_else(|| {
        EngineError::StaleResult(format!("concept '{}' no longer exists", result.concept))
    })?;
    let payload = match result.kind {
        RepresentationKind::Exemplar => {
            let id = result.exemplar.as_deref().ok_or_else(|| {
                EngineError::StaleResult("exemplar result carries no exemplar id".into())
            })?;
            let body = entry
                .exemplars
                .iter()
                .find(|e| e.exemplar_id == id)
                .ok_or_else(|| {
                    EngineError::StaleResult(format!(
                        "exemplar '{id}' no longer exists in concept '{}'",
                        result.concept
                    ))
                })?;
            ProxyPayload::Exemplar(body.clone())
        }
        RepresentationKind::Prototype => {
            let body = entry.prototype.as_ref().ok_or_else(|| {
                EngineError::StaleResult(format!(
                    "concept '{}' no longer has a prototype",
                    result.concept
                ))
            })?;
            ProxyPayload::Prototype(body.clone())
        }
        RepresentationKind::TheoryOverride => {
            let body = entry.theory.as_ref().ok_or_else(|| {
                EngineError::StaleResult(format!(
                    "concept '{}' no longer has a theory",
                    result.concept
                ))
            })?;
            ProxyPayload::Theory(body.clone())
        }
    };
    Ok(ProxyToken {
        concept: result.concept.clone(),
        kind: result.kind,
        payload,
        stimulus: result.stimulus.clone(),
    })
}

/// Render the decision trace as text. Everything in the trace appears in the
/// rendering; the machine form of the same data is the trace's JSON.
pub fn explain(result: &CategorizationResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "stimulus '{}': concept='{}' kind={:?}",
        result.stimulus, result.concept, result.kind
    ));
    if let Some(s) = result.similarity {
        out.push_str(&format!(" similarity={s:.6}"));
    }
    if let Some(c) = result.coherence {
        out.push_str(&format!(" coherence={c:.6}"));
    }
    out.push('\n');
    for (i, step) in result.trace.steps.iter().enumerate() {
        out.push_str(&format!("  [{}] {:?}", i + 1, step.stage));
        if !step.thresholds.is_empty() {
            let ts: Vec<String> = step
                .thresholds
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            out.push_str(&format!(" ({})", ts.join(", ")));
        }
        out.push('\n');
        for c in &step.candidates {
            out.push_str(&format!(
                "      {} {}{} score={:.6}{}\n",
                c.concept,
                match c.kind {
                    RepresentationKind::Exemplar => "exemplar",
                    RepresentationKind::Prototype => "prototype",
                    RepresentationKind::TheoryOverride => "theory",
                },
                c.exemplar
                    .as_deref()
                    .map(|e| format!(" '{e}'"))
                    .unwrap_or_default(),
                c.score,
                c.exact.map(|e| format!(" exact={e}")).unwrap_or_default(),
            ));
        }
        out.push_str(&format!("      outcome: {}\n", step.outcome));
        for note in &step.notes {
            out.push_str(&format!("      note: {note:?}\n"));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// stimulus parsing

fn parse_id_set(v: &Value, loc: &str) -> Result<BTreeSet<String>, KbError> {
    let list = v.as_array().ok_or_else(|| KbError::Schema {
        location: loc.into(),
        detail: "expected an array of element ids".into(),
    })?;
    let mut out = BTreeSet::new();
    for (i, item) in list.iter().enumerate() {
        let id = item.as_str().ok_or_else(|| KbError::Schema {
            location: format!("{loc}[{i}]"),
            detail: "expected a string".into(),
        })?;
        out.insert(id.to_string());
    }
    Ok(out)
}

/// Parse one stimulus object.
pub fn stimulus_from_value(v: &Value, loc: &str, strict: bool) -> Result<Stimulus, KbError> {
    let map = v.as_object().ok_or_else(|| KbError::Schema {
        location: loc.into(),
        detail: "expected an object".into(),
    })?;
    if strict {
        for key in map.keys() {
            if !["id", "space", "point", "observed", "contradicted"].contains(&key.as_str()) {
                return Err(KbError::Schema {
                    location: loc.into(),
                    detail: format!("unknown key '{key}'"),
                });
            }
        }
    }
    let get = |key: &str| -> Result<&Value, KbError> {
        map.get(key).ok_or_else(|| KbError::Schema {
            location: loc.into(),
            detail: format!("missing required key '{key}'"),
        })
    };
    let id = get("id")?.as_str().ok_or_else(|| KbError::Schema {
        location: format!("{loc}.id"),
        detail: "expected a string".into(),
    })?;
    let space = get("space")?.as_str().ok_or_else(|| KbError::Schema {
        location: format!("{loc}.space"),
        detail: "expected a string".into(),
    })?;
    let point_map = get("point")?.as_object().ok_or_else(|| KbError::Schema {
        location: format!("{loc}.point"),
        detail: "expected an object".into(),
    })?;
    let mut coords = BTreeMap::new();
    for (dim, val) in point_map {
        let value = val.as_f64().ok_or_else(|| KbError::Schema {
            location: format!("{loc}.point.{dim}"),
            detail: "expected a number".into(),
        })?;
        coords.insert(dim.clone(), value);
    }
    let observed = match map.get("observed") {
        Some(v) => parse_id_set(v, &format!("{loc}.observed"))?,
        None => BTreeSet::new(),
    };
    let contradicted = match map.get("contradicted") {
        Some(v) => parse_id_set(v, &format!("{loc}.contradicted"))?,
        None => BTreeSet::new(),
    };
    if !observed.is_disjoint(&contradicted) {
        return Err(KbError::Schema {
            location: loc.into(),
            detail: "observed and contradicted sets overlap".into(),
        });
    }
    Ok(Stimulus {
        id: id.to_string(),
        space: space.to_string(),
        point: Point { coords },
        observed,
        contradicted,
    })
}

/// Parse a stimulus file: a single stimulus object or an array of them.
/// Malformed elements become per-element errors; a file that is not valid
/// JSON at all is a single parse error.
pub fn parse_stimuli(
    source: &str,
    strict: bool,
) -> Result<Vec<Result<Stimulus, KbError>>, KbError> {
    let value: Value = serde_json::from_str(source).map_err(|e| KbError::Parse(e.to_string()))?;
    match value {
        Value::Array(items) => Ok(items
            .iter()
            .enumerate()
            .map(|(i, v)| stimulus_from_value(v, &format!("$[{i}]"), strict))
            .collect()),
        other => Ok(vec![stimulus_from_value(&other, "$", strict)]),
    }
}

// ---------------------------------------------------------------------------
// threshold sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    ThetaExemplar,
    ThetaCoherence,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::ThetaExemplar => "theta_exemplar",
            SweepParam::ThetaCoherence => "theta_coherence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub grid: Vec<f64>,
}

impl SweepSpec {
    pub fn new(param: SweepParam, grid: Vec<f64>) -> Result<Self, String> {
        if grid.is_empty() {
            return Err("sweep grid must be non-empty".into());
        }
        for w in grid.windows(2) {
            if w[0] >= w[1] {
                return Err(format!(
                    "sweep grid must be strictly ascending, got {} before {}",
                    w[0], w[1]
                ));
            }
        }
        for v in &grid {
            if !(*v > 0.0 && *v < 1.0) {
                return Err(format!("sweep grid values must lie in (0,1), got {v}"));
            }
        }
        Ok(SweepSpec { param, grid })
    }
}

/// Outcome histogram for one grid value. `exemplar_step1` counts exemplar
/// wins decided at the exemplar-scan stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub exemplar: usize,
    pub exemplar_step1: usize,
    pub prototype: usize,
    pub theory_override: usize,
    pub errors: usize,
}

/// Re-run the whole stimulus set once per grid value, varying one threshold.
pub fn sweep(
    kb: &KnowledgeBase,
    stimuli: &[Stimulus],
    base_params: &EngineParams,
    spec: &SweepSpec,
) -> Vec<SweepRow> {
    spec.grid
        .iter()
        .map(|&value| {
            let mut params = *base_params;
            match spec.param {
                SweepParam::ThetaExemplar => params.theta_exemplar = value,
                SweepParam::ThetaCoherence => params.theta_coherence = value,
            }
            let mut row = SweepRow {
                value,
                exemplar: 0,
                exemplar_step1: 0,
                prototype: 0,
                theory_override: 0,
                errors: 0,
            };
            for d in stimuli {
                match delta_categorize(d, kb, &params) {
                    Ok(result) => match result.kind {
                        RepresentationKind::Exemplar => {
                            row.exemplar += 1;
                            if result.trace.steps.len() == 1 {
                                row.exemplar_step1 += 1;
                            }
                        }
                        RepresentationKind::Prototype => row.prototype += 1,
                        RepresentationKind::TheoryOverride => row.theory_override += 1,
                    },
                    Err(_) => row.errors += 1,
                }
            }
            row
        })
        .collect()
}
