//! Conceptual spaces: weighted quality dimensions grouped into domains, and
//! the distance/similarity metrics used to compare points in them.
//!
//! Distance is weighted Euclidean within a domain (after range-normalizing
//! every coordinate to [0,1]) and city-block across domains. Similarity is an
//! exponential decay of distance, so it lives on a thresholdable (0,1] scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpaceError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// One quality dimension: a named axis with a salience weight and a closed
/// value range used for normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub weight: f64,
    /// Closed interval [lo, hi] with lo < hi.
    pub range: [f64; 2],
}

impl Dimension {
    pub fn width(&self) -> f64 {
        self.range[1] - self.range[0]
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.range[0] && value <= self.range[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub dimensions: Vec<Dimension>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptualSpace {
    pub name: String,
    pub domains: Vec<Domain>,
}

impl ConceptualSpace {
    pub fn dimension_count(&self) -> usize {
        self.domains.iter().map(|d| d.dimensions.len()).sum()
    }

    pub fn dimensions(&self) -> impl Iterator<Item = &Dimension> {
        self.domains.iter().flat_map(|d| d.dimensions.iter())
    }

    pub fn dimension(&self, name: &str) -> Option<&Dimension> {
        self.dimensions().find(|d| d.name == name)
    }

    /// Structural problems with the space itself (empty domains, duplicate
    /// names, bad weights or ranges). Empty means well-formed.
    pub fn structural_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.domains.is_empty() {
            errors.push(format!("space '{}' has no domains", self.name));
        }
        let mut domain_names = std::collections::BTreeSet::new();
        let mut dim_names = std::collections::BTreeSet::new();
        for domain in &self.domains {
            if !domain_names.insert(&domain.name) {
                errors.push(format!(
                    "space '{}' declares domain '{}' more than once",
                    self.name, domain.name
                ));
            }
            if domain.dimensions.is_empty() {
                errors.push(format!(
                    "domain '{}' in space '{}' has no dimensions",
                    domain.name, self.name
                ));
            }
            for dim in &domain.dimensions {
                if !dim_names.insert(&dim.name) {
                    errors.push(format!(
                        "dimension '{}' declared more than once in space '{}'",
                        dim.name, self.name
                    ));
                }
                if !(dim.weight > 0.0 && dim.weight.is_finite()) {
                    errors.push(format!(
                        "dimension '{}' has non-positive weight {}",
                        dim.name, dim.weight
                    ));
                }
                if !(dim.range[0].is_finite()
                    && dim.range[1].is_finite()
                    && dim.range[0] < dim.range[1])
                {
                    errors.push(format!(
                        "dimension '{}' has degenerate range [{}, {}]",
                        dim.name, dim.range[0], dim.range[1]
                    ));
                }
            }
        }
        errors
    }
}

/// A location in a conceptual space, keyed by dimension name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    pub coords: BTreeMap<String, f64>,
}

impl Point {
    pub fn new(coords: BTreeMap<String, f64>) -> Self {
        Point { coords }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Point {
            coords: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Finding {
    OutOfRange {
        dimension: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    UnknownDimension {
        dimension: String,
    },
}

/// Diagnostic report from [`validate_point`]; empty iff the point is valid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

/// List every out-of-range coordinate and every unknown dimension of `p`
/// relative to `space`. Range boundaries are inclusive.
pub fn validate_point(p: &Point, space: &ConceptualSpace) -> ValidationReport {
    let mut findings = Vec::new();
    for (name, value) in &p.coords {
        match space.dimension(name) {
            None => findings.push(Finding::UnknownDimension {
                dimension: name.clone(),
            }),
            Some(dim) => {
                if !dim.contains(*value) {
                    findings.push(Finding::OutOfRange {
                        dimension: name.clone(),
                        value: *value,
                        lo: dim.range[0],
                        hi: dim.range[1],
                    });
                }
            }
        }
    }
    ValidationReport { findings }
}

fn check_coverage(p: &Point, space: &ConceptualSpace) -> Result<(), SpaceError> {
    let mut missing = Vec::new();
    for dim in space.dimensions() {
        if !p.coords.contains_key(&dim.name) {
            missing.push(dim.name.clone());
        }
    }
    if !missing.is_empty() {
        return Err(SpaceError::DimensionMismatch(format!(
            "point is missing coordinates for dimensions [{}] of space '{}'",
            missing.join(", "),
            space.name
        )));
    }
    if p.coords.len() != space.dimension_count() {
        let unknown: Vec<&str> = p
            .coords
            .keys()
            .filter(|k| space.dimension(k).is_none())
            .map(|k| k.as_str())
            .collect();
        return Err(SpaceError::DimensionMismatch(format!(
            "point has coordinates for unknown dimensions [{}] of space '{}'",
            unknown.join(", "),
            space.name
        )));
    }
    Ok(())
}

/// Distance between two points: per domain, weighted Euclidean over the
/// domain's range-normalized coordinates; across domains, the per-domain
/// distances are summed. Zero iff the points coincide.
pub fn distance(a: &Point, b: &Point, space: &ConceptualSpace) -> Result<f64, SpaceError> {
    check_coverage(a, space)?;
    check_coverage(b, space)?;
    let mut total = 0.0;
    for domain in &space.domains {
        let mut sq_sum = 0.0;
        for dim in &domain.dimensions {
            let x = a.coords[&dim.name];
            let y = b.coords[&dim.name];
            let delta = (x - y) / dim.width();
            sq_sum += dim.weight * delta * delta;
        }
        total += sq_sum.sqrt();
    }
    Ok(total)
}

/// Similarity as exponential decay of distance: `exp(-k * d)`. Equals 1 iff
/// the distance is 0, and stays within (0, 1] for finite distances.
pub fn similarity(
    a: &Point,
    b: &Point,
    space: &ConceptualSpace,
    decay_k: f64,
) -> Result<f64, SpaceError> {
    let d = distance(a, b, space)?;
    Ok((-decay_k * d).exp())
}
