//! Theory-like default knowledge as signed, weighted constraint networks, and
//! conceptual coherence as a coherence-maximization problem.
//!
//! A partition of the elements into Accepted/Rejected satisfies a positive
//! constraint when both endpoints land on the same side and a negative
//! constraint when they land on opposite sides. Observations are wired in as
//! data-priority constraints against a distinguished EVIDENCE element that is
//! pinned Accepted. The coherence score is the optimal satisfied weight
//! normalized by the total weight, so it lives on [0,1] across theories of
//! different sizes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved id of the pinned evidence element; theory elements may not use it.
pub const EVIDENCE_ID: &str = "EVIDENCE";

/// Free elements beyond this cap are too many for exhaustive enumeration.
pub const DEFAULT_EXACT_CAP: usize = 20;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoherenceError {
    #[error("problem has {free} free elements, exceeding the exact-solver cap of {cap}")]
    TooLarge { free: usize, cap: usize },
    #[error("constraint references unknown element '{0}'")]
    UnknownElement(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub a: String,
    pub b: String,
    pub sign: Sign,
    pub weight: f64,
}

/// Elements plus signed weighted constraints between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryNetwork {
    pub elements: Vec<Element>,
    pub constraints: Vec<Constraint>,
}

impl TheoryNetwork {
    /// Structural problems: unresolved or self-loop endpoints, duplicate
    /// unordered pairs, non-positive weights, duplicate or reserved element
    /// ids. Empty means well-formed.
    pub fn structural_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut ids = BTreeSet::new();
        for el in &self.elements {
            if el.id == EVIDENCE_ID {
                errors.push(format!("element id '{EVIDENCE_ID}' is reserved"));
            }
            if !ids.insert(el.id.as_str()) {
                errors.push(format!("element '{}' declared more than once", el.id));
            }
        }
        let mut pairs = BTreeSet::new();
        for c in &self.constraints {
            if c.a == c.b {
                errors.push(format!(
                    "constraint endpoints must be distinct, got '{}'",
                    c.a
                ));
            }
            for end in [&c.a, &c.b] {
                if !ids.contains(end.as_str()) {
                    errors.push(format!("constraint references unknown element '{end}'"));
                }
            }
            let key = if c.a <= c.b {
                (c.a.clone(), c.b.clone())
            } else {
                (c.b.clone(), c.a.clone())
            };
            if !pairs.insert(key) {
                errors.push(format!(
                    "more than one constraint on the pair ({}, {})",
                    c.a, c.b
                ));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                errors.push(format!(
                    "constraint ({}, {}) has non-positive weight {}",
                    c.a, c.b, c.weight
                ));
            }
        }
        errors
    }

    pub fn element_ids(&self) -> BTreeSet<&str> {
        self.elements.iter().map(|e| e.id.as_str()).collect()
    }
}

/// What a stimulus asserts and denies, by element id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservationSet {
    pub observed: BTreeSet<String>,
    pub contradicted: BTreeSet<String>,
}

/// Node of a coherence problem: a free element (by index into the sorted
/// element list) or the pinned EVIDENCE node.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Evidence,
    Free(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct ProblemConstraint {
    a: Node,
    b: Node,
    sign: Sign,
    weight: f64,
}

/// A theory network augmented with evidence constraints, ready to solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceProblem {
    /// Free element ids, sorted; index order is the bit order of partitions.
    elements: Vec<String>,
    constraints: Vec<ProblemConstraint>,
}

impl CoherenceProblem {
    /// Build a problem from raw parts. Constraint endpoints name either a
    /// member of `elements` or [`EVIDENCE_ID`].
    pub fn from_parts(
        elements: Vec<String>,
        constraints: &[(String, String, Sign, f64)],
    ) -> Result<Self, CoherenceError> {
        let mut sorted = elements;
        sorted.sort();
        sorted.dedup();
        let resolve = |id: &str| -> Result<Node, CoherenceError> {
            if id == EVIDENCE_ID {
                return Ok(Node::Evidence);
            }
            sorted
                .binary_search_by(|e| e.as_str().cmp(id))
                .map(Node::Free)
                .map_err(|_| CoherenceError::UnknownElement(id.to_string()))
        };
        let mut resolved = Vec::with_capacity(constraints.len());
        for (a, b, sign, weight) in constraints {
            resolved.push(ProblemConstraint {
                a: resolve(a)?,
                b: resolve(b)?,
                sign: *sign,
                weight: *weight,
            });
        }
        Ok(CoherenceProblem {
            elements: sorted,
            constraints: resolved,
        })
    }

    pub fn free_element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.constraints.iter().map(|c| c.weight).sum()
    }

    fn satisfied_weight(&self, mask: u64) -> f64 {
        let side = |n: Node| -> bool {
            match n {
                Node::Evidence => true,
                Node::Free(i) => mask & (1u64 << i) != 0,
            }
        };
        let mut sum = 0.0;
        for c in &self.constraints {
            let same = side(c.a) == side(c.b);
            let satisfied = match c.sign {
                Sign::Positive => same,
                Sign::Negative => !same,
            };
            if satisfied {
                sum += c.weight;
            }
        }
        sum
    }

    fn solution(&self, mask: u64, satisfied: f64, exact: bool) -> CoherenceSolution {
        let mut accepted = BTreeSet::new();
        let mut rejected = BTreeSet::new();
        for (i, id) in self.elements.iter().enumerate() {
            if mask & (1u64 << i) != 0 {
                accepted.insert(id.clone());
            } else {
                rejected.insert(id.clone());
            }
        }
        let total = self.total_weight();
        let score = if total > 0.0 { satisfied / total } else { 0.0 };
        CoherenceSolution {
            accepted,
            rejected,
            satisfied_weight: satisfied,
            total_weight: total,
            score,
            exact,
        }
    }
}

/// An Accepted/Rejected partition with its satisfied weight and normalized
/// score. `exact` records whether the global optimum was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSolution {
    pub accepted: BTreeSet<String>,
    pub rejected: BTreeSet<String>,
    pub satisfied_weight: f64,
    pub total_weight: f64,
    pub score: f64,
    pub exact: bool,
}

/// Augment `theory` with one evidence constraint per observed (positive) or
/// contradicted (negative) id that actually occurs in the theory; ids outside
/// the theory are ignored. `w_d` is the data-priority weight.
pub fn build_problem(theory: &TheoryNetwork, obs: &ObservationSet, w_d: f64) -> CoherenceProblem {
    let ids = theory.element_ids();
    let mut raw: Vec<(String, String, Sign, f64)> = theory
        .constraints
        .iter()
        .map(|c| (c.a.clone(), c.b.clone(), c.sign, c.weight))
        .collect();
    for id in &obs.observed {
        if ids.contains(id.as_str()) {
            raw.push((id.clone(), EVIDENCE_ID.to_string(), Sign::Positive, w_d));
        }
    }
    for id in &obs.contradicted {
        if ids.contains(id.as_str()) {
            raw.push((id.clone(), EVIDENCE_ID.to_string(), Sign::Negative, w_d));
        }
    }
    let elements = theory.elements.iter().map(|e| e.id.clone()).collect();
    CoherenceProblem::from_parts(elements, &raw)
        .expect("theory constraints resolve by construction")
}

/// Compare the accepted index sequences of two masks lexicographically.
fn accepted_set_less(candidate: u64, best: u64, n: usize) -> bool {
    // Walk set bits in index order; the first position where the sequences
    // differ decides.
    let (mut ci, mut bi) = (0usize, 0usize);
    loop {
        while ci < n && candidate & (1u64 << ci) == 0 {
            ci += 1;
        }
        while bi < n && best & (1u64 << bi) == 0 {
            bi += 1;
        }
        match (ci < n, bi < n) {
            (false, false) => return false, // equal sets
            (false, true) => return true,   // candidate is a proper prefix
            (true, false) => return false,
            (true, true) => {
                if ci != bi {
                    return ci < bi;
                }
                ci += 1;
                bi += 1;
            }
        }
    }
}

fn solve_exact_capped(
    p: &CoherenceProblem,
    cap: usize,
) -> Result<CoherenceSolution, CoherenceError> {
    let n = p.free_element_count();
    if n > cap {
        return Err(CoherenceError::TooLarge { free: n, cap });
    }
    let mut best_mask = 0u64;
    let mut best_weight = p.satisfied_weight(0);
    for mask in 1..(1u64 << n) {
        let w = p.satisfied_weight(mask);
        if w > best_weight || (w == best_weight && accepted_set_less(mask, best_mask, n)) {
            best_weight = w;
            best_mask = mask;
        }
    }
    Ok(p.solution(best_mask, best_weight, true))
}

/// Globally optimal partition by exhaustive enumeration; EVIDENCE is pinned
/// Accepted. Among optima, the lexicographically smallest accepted element
/// set wins.
pub fn solve_exact(p: &CoherenceProblem) -> Result<CoherenceSolution, CoherenceError> {
    solve_exact_capped(p, DEFAULT_EXACT_CAP)
}

/// Deterministic local search: start all-Accepted and repeatedly flip the
/// single element with the largest satisfied-weight gain (ties broken by the
/// lexicographically smallest id). Zero-gain flips are taken only when they
/// shrink the accepted set, which keeps the search terminating and makes the
/// degenerate instances agree with [`solve_exact`].
pub fn solve_greedy(p: &CoherenceProblem) -> CoherenceSolution {
    let n = p.free_element_count();
    let mut mask: u64 = if n == 0 { 0 } else { (1u64 << n) - 1 };
    let mut current = p.satisfied_weight(mask);
    loop {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            let flipped = mask ^ (1u64 << i);
            let gain = p.satisfied_weight(flipped) - current;
            let improving = gain > 0.0;
            let shrinking_tie = gain == 0.0 && mask & (1u64 << i) != 0;
            if improving || shrinking_tie {
                match best {
                    Some((g, _)) if g >= gain => {}
                    _ => best = Some((gain, i)),
                }
            }
        }
        match best {
            Some((_, i)) => {
                mask ^= 1u64 << i;
                current = p.satisfied_weight(mask);
            }
            None => break,
        }
    }
    p.solution(mask, p.satisfied_weight(mask), false)
}

/// Solver configuration: the data-priority weight attached to evidence
/// constraints and the free-element cap of the exact solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceConfig {
    pub data_weight: f64,
    pub exact_cap: usize,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            data_weight: 1.0,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

/// Solve the coherence problem for `theory` under `obs`, exactly when the
/// free-element count allows it and greedily otherwise.
pub fn evaluate(
    theory: &TheoryNetwork,
    obs: &ObservationSet,
    config: &CoherenceConfig,
) -> CoherenceSolution {
    let p = build_problem(theory, obs, config.data_weight);
    if p.free_element_count() <= config.exact_cap.min(63) {
        solve_exact_capped(&p, config.exact_cap.min(63)).expect("within cap")
    } else {
        solve_greedy(&p)
    }
}

/// The conceptual coherence of `obs` with `theory` on [0,1]; 0 when no
/// constraint (internal or evidence) exists.
pub fn coherence_score(
    theory: &TheoryNetwork,
    obs: &ObservationSet,
    config: &CoherenceConfig,
) -> f64 {
    evaluate(theory, obs, config).score
}
