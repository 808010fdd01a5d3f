//! The heterogeneous declarative memory: for each concept, co-referring
//! prototype, exemplar and theory bodies of knowledge under one anchor id,
//! loaded from a JSON document and fully validated before any query is served.
//!
//! The loader is strict by default: unknown keys are schema errors unless
//! lenient mode is requested. A knowledge base that loads successfully never
//! produces reference or range errors at query time.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::coherence::{Constraint, Element, Sign, TheoryNetwork};
use crate::space::{validate_point, ConceptualSpace, Dimension, Domain, Finding, Point};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KbError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {location}: {detail}")]
    Schema { location: String, detail: String },
    #[error("reference error at {location}: {detail}")]
    Reference { location: String, detail: String },
    #[error("range error at {location}: {detail}")]
    Range { location: String, detail: String },
    #[error("unknown concept '{0}'")]
    UnknownConcept(String),
}

impl KbError {
    fn schema(location: impl Into<String>, detail: impl Into<String>) -> Self {
        KbError::Schema {
            location: location.into(),
            detail: detail.into(),
        }
    }

    fn reference(location: impl Into<String>, detail: impl Into<String>) -> Self {
        KbError::Reference {
            location: location.into(),
            detail: detail.into(),
        }
    }

    fn range(location: impl Into<String>, detail: impl Into<String>) -> Self {
        KbError::Range {
            location: location.into(),
            detail: detail.into(),
        }
    }
}

/// The typical member of a category as a point in a conceptual space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrototypeBody {
    pub space: String,
    pub point: Point,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A stored, specific encountered instance of a category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExemplarBody {
    pub exemplar_id: String,
    pub space: String,
    pub point: Point,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// One concept's heterogeneous bodies of knowledge under a shared anchor id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptEntry {
    pub id: String,
    pub anchor: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prototype: Option<PrototypeBody>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub exemplars: Vec<ExemplarBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryNetwork>,
}

/// Engine-wide thresholds and the similarity decay constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngineParams {
    pub theta_exemplar: f64,
    pub theta_coherence: f64,
    pub decay_k: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            theta_exemplar: 0.85,
            theta_coherence: 0.6,
            decay_k: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    pub spaces: BTreeMap<String, ConceptualSpace>,
    pub concepts: BTreeMap<String, ConceptEntry>,
    pub params: EngineParams,
}

// ---------------------------------------------------------------------------
// parsing helpers

fn as_object<'a>(v: &'a Value, loc: &str) -> Result<&'a serde_json::Map<String, Value>, KbError> {
    v.as_object()
        .ok_or_else(|| KbError::schema(loc, "expected an object"))
}

fn as_array<'a>(v: &'a Value, loc: &str) -> Result<&'a Vec<Value>, KbError> {
    v.as_array()
        .ok_or_else(|| KbError::schema(loc, "expected an array"))
}

fn as_string(v: &Value, loc: &str) -> Result<String, KbError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| KbError::schema(loc, "expected a string"))
}

fn as_number(v: &Value, loc: &str) -> Result<f64, KbError> {
    v.as_f64()
        .ok_or_else(|| KbError::schema(loc, "expected a number"))
}

fn required<'a>(
    map: &'a serde_json::Map<String, Value>,
    key: &str,
    loc: &str,
) -> Result<&'a Value, KbError> {
    map.get(key)
        .ok_or_else(|| KbError::schema(loc, format!("missing required key '{key}'")))
}

fn check_keys(
    map: &serde_json::Map<String, Value>,
    allowed: &[&str],
    loc: &str,
    strict: bool,
) -> Result<(), KbError> {
    if !strict {
        return Ok(());
    }
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(KbError::schema(loc, format!("unknown key '{key}'")));
        }
    }
    Ok(())
}

fn parse_point(v: &Value, loc: &str) -> Result<Point, KbError> {
    let map = as_object(v, loc)?;
    let mut coords = BTreeMap::new();
    for (dim, val) in map {
        let value = as_number(val, &format!("{loc}.{dim}"))?;
        coords.insert(dim.clone(), value);
    }
    Ok(Point { coords })
}

fn parse_dimension(v: &Value, loc: &str, strict: bool) -> Result<Dimension, KbError> {
    let map = as_object(v, loc)?;
    check_keys(map, &["name", "weight", "range"], loc, strict)?;
    let name = as_string(required(map, "name", loc)?, &format!("{loc}.name"))?;
    let weight = as_number(required(map, "weight", loc)?, &format!("{loc}.weight"))?;
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(KbError::range(
            format!("{loc}.weight"),
            format!("dimension weight must be positive, got {weight}"),
        ));
    }
    let range_loc = format!("{loc}.range");
    let range = as_array(required(map, "range", loc)?, &range_loc)?;
    if range.len() != 2 {
        return Err(KbError::schema(range_loc, "expected [lo, hi]"));
    }
    let lo = as_number(&range[0], &range_loc)?;
    let hi = as_number(&range[1], &range_loc)?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(KbError::range(
            range_loc,
            format!("range must satisfy lo < hi, got [{lo}, {hi}]"),
        ));
    }
    Ok(Dimension {
        name,
        weight,
        range: [lo, hi],
    })
}

fn parse_domain(v: &Value, loc: &str, strict: bool) -> Result<Domain, KbError> {
    let map = as_object(v, loc)?;
    check_keys(map, &["name", "dimensions"], loc, strict)?;
    let name = as_string(required(map, "name", loc)?, &format!("{loc}.name"))?;
    let dims_loc = format!("{loc}.dimensions");
    let dims = as_array(required(map, "dimensions", loc)?, &dims_loc)?;
    if dims.is_empty() {
        return Err(KbError::schema(
            dims_loc,
            "domain needs at least one dimension",
        ));
    }
    let dimensions = dims
        .iter()
        .enumerate()
        .map(|(i, d)| parse_dimension(d, &format!("{dims_loc}[{i}]"), strict))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Domain { name, dimensions })
}

fn parse_space(v: &Value, loc: &str, strict: bool) -> Result<ConceptualSpace, KbError> {
    let map = as_object(v, loc)?;
    check_keys(map, &["name", "domains"], loc, strict)?;
    let name = as_string(required(map, "name", loc)?, &format!("{loc}.name"))?;
    let domains_loc = format!("{loc}.domains");
    let domains = as_array(required(map, "domains", loc)?, &domains_loc)?;
    if domains.is_empty() {
        return Err(KbError::schema(
            domains_loc,
            "space needs at least one domain",
        ));
    }
    let domains = domains
        .iter()
        .enumerate()
        .map(|(i, d)| parse_domain(d, &format!("{domains_loc}[{i}]"), strict))
        .collect::<Result<Vec<_>, _>>()?;
    let space = ConceptualSpace { name, domains };
    let mut domain_names = BTreeSet::new();
    let mut dim_names = BTreeSet::new();
    for domain in &space.domains {
        if !domain_names.insert(domain.name.clone()) {
            return Err(KbError::schema(
                loc,
                format!("duplicate domain name '{}'", domain.name),
            ));
        }
        for dim in &domain.dimensions {
            if !dim_names.insert(dim.name.clone()) {
                return Err(KbError::schema(
                    loc,
                    format!("duplicate dimension name '{}'", dim.name),
                ));
            }
        }
    }
    Ok(space)
}

fn parse_theory(v: &Value, loc: &str, strict: bool) -> Result<TheoryNetwork, KbError> {
    let map = as_object(v, loc)?;
    check_keys(map, &["elements", "constraints"], loc, strict)?;
    let elements_loc = format!("{loc}.elements");
    let mut elements = Vec::new();
    for (i, el) in as_array(required(map, "elements", loc)?, &elements_loc)?
        .iter()
        .enumerate()
    {
        let el_loc = format!("{elements_loc}[{i}]");
        let el_map = as_object(el, &el_loc)?;
        check_keys(el_map, &["id", "label"], &el_loc, strict)?;
        let id = as_string(required(el_map, "id", &el_loc)?, &format!("{el_loc}.id"))?;
        let label = match el_map.get("label") {
            Some(l) => Some(as_string(l, &format!("{el_loc}.label"))?),
            None => None,
        };
        elements.push(Element { id, label });
    }
    let constraints_loc = format!("{loc}.constraints");
    let mut constraints = Vec::new();
    if let Some(list) = map.get("constraints") {
        for (i, c) in as_array(list, &constraints_loc)?.iter().enumerate() {
            let c_loc = format!("{constraints_loc}[{i}]");
            let c_map = as_object(c, &c_loc)?;
            check_keys(c_map, &["a", "b", "sign", "weight"], &c_loc, strict)?;
            let a = as_string(required(c_map, "a", &c_loc)?, &format!("{c_loc}.a"))?;
            let b = as_string(required(c_map, "b", &c_loc)?, &format!("{c_loc}.b"))?;
            let sign_str = as_string(required(c_map, "sign", &c_loc)?, &format!("{c_loc}.sign"))?;
            let sign = match sign_str.as_str() {
                "+" => Sign::Positive,
                "-" => Sign::Negative,
                other => {
                    return Err(KbError::schema(
                        format!("{c_loc}.sign"),
                        format!("expected \"+\" or \"-\", got \"{other}\""),
                    ))
                }
            };
            let weight = as_number(
                required(c_map, "weight", &c_loc)?,
                &format!("{c_loc}.weight"),
            )?;
            // canonical endpoint order: a < b
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            constraints.push(Constraint { a, b, sign, weight });
        }
    }
    let mut theory = TheoryNetwork {
        elements,
        constraints,
    };
    theory.elements.sort_by(|x, y| x.id.cmp(&y.id));
    theory
        .constraints
        .sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    if let Some(msg) = theory.structural_errors().into_iter().next() {
        let err = if msg.contains("unknown element") {
            KbError::reference(loc, msg)
        } else if msg.contains("weight") {
            KbError::range(loc, msg)
        } else {
            KbError::schema(loc, msg)
        };
        return Err(err);
    }
    Ok(theory)
}

fn parse_prototype(v: &Value, loc: &str, strict: bool) -> Result<PrototypeBody, KbError> {
    let map = as_object(v, loc)?;
    check_keys(map, &["space", "point", "label"], loc, strict)?;
    let space = as_string(required(map, "space", loc)?, &format!("{loc}.space"))?;
    let point = parse_point(required(map, "point", loc)?, &format!("{loc}.point"))?;
    let label = match map.get("label") {
        Some(l) => Some(as_string(l, &format!("{loc}.label"))?),
        None => None,
    };
    Ok(PrototypeBody {
        space,
        point,
        label,
    })
}

fn parse_exemplar(v: &Value, loc: &str, strict: bool) -> Result<ExemplarBody, KbError> {
    let map = as_object(v, loc)?;
    check_keys(
        map,
        &["exemplar_id", "space", "point", "label"],
        loc,
        strict,
    )?;
    let exemplar_id = as_string(
        required(map, "exemplar_id", loc)?,
        &format!("{loc}.exemplar_id"),
    )?;
    let space = as_string(required(map, "space", loc)?, &format!("{loc}.space"))?;
    let point = parse_point(required(map, "point", loc)?, &format!("{loc}.point"))?;
    let label = match map.get("label") {
        Some(l) => Some(as_string(l, &format!("{loc}.label"))?),
        None => None,
    };
    Ok(ExemplarBody {
        exemplar_id,
        space,
        point,
        label,
    })
}

fn parse_concept(v: &Value, loc: &str, strict: bool) -> Result<ConceptEntry, KbError> {
    let map = as_object(v, loc)?;
    check_keys(
        map,
        &["id", "anchor", "prototype", "exemplars", "theory"],
        loc,
        strict,
    )?;
    let id = as_string(required(map, "id", loc)?, &format!("{loc}.id"))?;
    let anchor = as_string(required(map, "anchor", loc)?, &format!("{loc}.anchor"))?;
    let prototype = match map.get("prototype") {
        Some(p) => Some(parse_prototype(p, &format!("{loc}.prototype"), strict)?),
        None => None,
    };
    let mut exemplars = Vec::new();
    if let Some(list) = map.get("exemplars") {
        let ex_loc = format!("{loc}.exemplars");
        for (i, e) in as_array(list, &ex_loc)?.iter().enumerate() {
            exemplars.push(parse_exemplar(e, &format!("{ex_loc}[{i}]"), strict)?);
        }
    }
    let theory = match map.get("theory") {
        Some(t) => Some(parse_theory(t, &format!("{loc}.theory"), strict)?),
        None => None,
    };
    if prototype.is_none() && exemplars.is_empty() && theory.is_none() {
        return Err(KbError::schema(
            loc,
            format!("concept '{id}' needs at least one of prototype, exemplars or theory"),
        ));
    }
    let mut seen = BTreeSet::new();
    for ex in &exemplars {
        if !seen.insert(ex.exemplar_id.clone()) {
            return Err(KbError::schema(
                loc,
                format!(
                    "duplicate exemplar_id '{}' in concept '{id}'",
                    ex.exemplar_id
                ),
            ));
        }
    }
    exemplars.sort_by(|x, y| x.exemplar_id.cmp(&y.exemplar_id));
    Ok(ConceptEntry {
        id,
        anchor,
        prototype,
        exemplars,
        theory,
    })
}

fn parse_params(v: &Value, loc: &str, strict: bool) -> Result<EngineParams, KbError> {
    let map = as_object(v, loc)?;
    check_keys(
        map,
        &["theta_exemplar", "theta_coherence", "decay_k"],
        loc,
        strict,
    )?;
    let mut params = EngineParams::default();
    if let Some(v) = map.get("theta_exemplar") {
        params.theta_exemplar = as_number(v, &format!("{loc}.theta_exemplar"))?;
    }
    if let Some(v) = map.get("theta_coherence") {
        params.theta_coherence = as_number(v, &format!("{loc}.theta_coherence"))?;
    }
    if let Some(v) = map.get("decay_k") {
        params.decay_k = as_number(v, &format!("{loc}.decay_k"))?;
    }
    validate_params(&params, loc)?;
    Ok(params)
}

pub fn validate_params(params: &EngineParams, loc: &str) -> Result<(), KbError> {
    for (name, value) in [
        ("theta_exemplar", params.theta_exemplar),
        ("theta_coherence", params.theta_coherence),
    ] {
        if !(value > 0.0 && value < 1.0) {
            return Err(KbError::range(
                format!("{loc}.{name}"),
                format!("{name} must lie in (0,1), got {value}"),
            ));
        }
    }
    if !(params.decay_k > 0.0 && params.decay_k.is_finite()) {
        return Err(KbError::range(
            format!("{loc}.decay_k"),
            format!("decay_k must be positive, got {}", params.decay_k),
        ));
    }
    Ok(())
}

fn check_body_point(
    point: &Point,
    space_name: &str,
    spaces: &BTreeMap<String, ConceptualSpace>,
    loc: &str,
) -> Result<(), KbError> {
    let space = spaces
        .get(space_name)
        .ok_or_else(|| KbError::reference(loc, format!("space '{space_name}' is not declared")))?;
    if let Some(finding) = validate_point(point, space).findings.into_iter().next() {
        return Err(match finding {
            Finding::UnknownDimension { dimension } => KbError::reference(
                format!("{loc}.point"),
                format!("dimension '{dimension}' is not declared in space '{space_name}'"),
            ),
            Finding::OutOfRange {
                dimension,
                value,
                lo,
                hi,
            } => KbError::range(
                format!("{loc}.point"),
                format!("coordinate {dimension}={value} outside [{lo}, {hi}]"),
            ),
        });
    }
    for dim in space.dimensions() {
        if !point.coords.contains_key(&dim.name) {
            return Err(KbError::schema(
                format!("{loc}.point"),
                format!("missing coordinate for dimension '{}'", dim.name),
            ));
        }
    }
    Ok(())
}

impl KnowledgeBase {
    /// Parse and fully validate a knowledge-base document. Strict mode
    /// rejects unknown keys.
    pub fn load_str(source: &str, strict: bool) -> Result<Self, KbError> {
        let value: Value =
            serde_json::from_str(source).map_err(|e| KbError::Parse(e.to_string()))?;
        Self::load_value(&value, strict)
    }

    pub fn load_value(value: &Value, strict: bool) -> Result<Self, KbError> {
        let root = as_object(value, "$")?;
        check_keys(root, &["spaces", "concepts", "params"], "$", strict)?;

        let mut spaces = BTreeMap::new();
        let spaces_loc = "$.spaces";
        for (i, s) in as_array(required(root, "spaces", "$")?, spaces_loc)?
            .iter()
            .enumerate()
        {
            let space = parse_space(s, &format!("{spaces_loc}[{i}]"), strict)?;
            if spaces.contains_key(&space.name) {
                return Err(KbError::schema(
                    format!("{spaces_loc}[{i}]"),
                    format!("duplicate space name '{}'", space.name),
                ));
            }
            spaces.insert(space.name.clone(), space);
        }

        let mut concepts: BTreeMap<String, ConceptEntry> = BTreeMap::new();
        let mut anchors = BTreeSet::new();
        let concepts_loc = "$.concepts";
        for (i, c) in as_array(required(root, "concepts", "$")?, concepts_loc)?
            .iter()
            .enumerate()
        {
            let loc = format!("{concepts_loc}[{i}]");
            let concept = parse_concept(c, &loc, strict)?;
            if concepts.contains_key(&concept.id) {
                return Err(KbError::schema(
                    loc,
                    format!("duplicate concept id '{}'", concept.id),
                ));
            }
            if !anchors.insert(concept.anchor.clone()) {
                return Err(KbError::schema(
                    loc,
                    format!("duplicate anchor id '{}'", concept.anchor),
                ));
            }
            // all numeric bodies of one concept live in one space
            let mut body_space: Option<&str> = None;
            if let Some(proto) = &concept.prototype {
                check_body_point(
                    &proto.point,
                    &proto.space,
                    &spaces,
                    &format!("{loc}.prototype"),
                )?;
                body_space = Some(proto.space.as_str());
            }
            for (j, ex) in concept.exemplars.iter().enumerate() {
                let ex_loc = format!("{loc}.exemplars[{j}] ('{}')", ex.exemplar_id);
                check_body_point(&ex.point, &ex.space, &spaces, &ex_loc)?;
                match body_space {
                    None => body_space = Some(ex.space.as_str()),
                    Some(s) if s != ex.space => {
                        return Err(KbError::schema(
                            ex_loc,
                            format!(
                                "concept '{}' mixes spaces '{s}' and '{}'",
                                concept.id, ex.space
                            ),
                        ))
                    }
                    Some(_) => {}
                }
            }
            concepts.insert(concept.id.clone(), concept);
        }

        let params = match root.get("params") {
            Some(p) => parse_params(p, "$.params", strict)?,
            None => EngineParams::default(),
        };

        Ok(KnowledgeBase {
            spaces,
            concepts,
            params,
        })
    }

    /// Serialize to the canonical document form: spaces and concepts sorted
    /// by name/id, params always explicit. `load_str` of the output yields an
    /// equal knowledge base.
    pub fn to_json_value(&self) -> Value {
        #[derive(Serialize)]
        struct Doc<'a> {
            spaces: Vec<&'a ConceptualSpace>,
            concepts: Vec<&'a ConceptEntry>,
            params: &'a EngineParams,
        }
        serde_json::to_value(Doc {
            spaces: self.spaces.values().collect(),
            concepts: self.concepts.values().collect(),
            params: &self.params,
        })
        .expect("knowledge base serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("knowledge base serializes")
    }

    /// Every exemplar, ordered lexicographically by (concept id, exemplar id).
    pub fn all_exemplars(&self) -> Vec<(&str, &ExemplarBody)> {
        self.concepts
            .values()
            .flat_map(|c| c.exemplars.iter().map(move |e| (c.id.as_str(), e)))
            .collect()
    }

    /// Every prototype, ordered lexicographically by concept id.
    pub fn all_prototypes(&self) -> Vec<(&str, &PrototypeBody)> {
        self.concepts
            .values()
            .filter_map(|c| c.prototype.as_ref().map(|p| (c.id.as_str(), p)))
            .collect()
    }

    /// Every theory network, ordered lexicographically by concept id.
    pub fn all_theories(&self) -> Vec<(&str, &TheoryNetwork)> {
        self.concepts
            .values()
            .filter_map(|c| c.theory.as_ref().map(|t| (c.id.as_str(), t)))
            .collect()
    }

    /// The theory body of `concept_id`, if any.
    pub fn theory_of(&self, concept_id: &str) -> Result<Option<&TheoryNetwork>, KbError> {
        self.concepts
            .get(concept_id)
            .map(|c| c.theory.as_ref())
            .ok_or_else(|| KbError::UnknownConcept(concept_id.to_string()))
    }
}
