//! Categorization engine over heterogeneous conceptual representations.
//!
//! A knowledge base stores, per concept, co-referring bodies of knowledge
//! under one anchor id: a prototype (a typical point in a conceptual space),
//! exemplars (stored instances), and a theory-like network of signed weighted
//! constraints. The DELTA algorithm picks the most appropriate representation
//! for a stimulus: exemplars first when one is similar enough, then the
//! nearest representation overall, with a conceptual-coherence gate that lets
//! theory networks override a prototype answer. Every decision carries an
//! auditable trace.

pub mod coherence;
pub mod engine;
pub mod kb;
pub mod space;

pub use coherence::{
    build_problem, coherence_score, solve_exact, solve_greedy, CoherenceConfig, CoherenceProblem,
    CoherenceSolution, ObservationSet, TheoryNetwork,
};
pub use engine::{
    delta_categorize, explain, parse_stimuli, proxyfy, sweep, CategorizationResult, DecisionTrace,
    EngineError, ProxyToken, RepresentationKind, Stage, Stimulus, SweepParam, SweepRow, SweepSpec,
};
pub use kb::{EngineParams, KbError, KnowledgeBase};
pub use space::{distance, similarity, validate_point, ConceptualSpace, Point};
