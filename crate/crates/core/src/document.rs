//! JSON input document shared by every command.
//!
//! ```json
//! {
//!   "mode": "exact",
//!   "family": {"universe": ["a", "b"], "sets": [["a"], ["a", "b"]]},
//!   "probabilities": ["1/2", "1/3"],
//!   "curve": {"kind": "diagonal"},
//!   "prebasis": {"vectors": [[1, 0], [[1, 0], [0, 1]]]},
//!   "projectors": {"dimension": 2, "n": 2, "projectors": {"{1}": [[1, 0], [0, 0]]}},
//!   "rho": [["1/2", 0], [0, "1/2"]],
//!   "state": [1, 0]
//! }
//! ```
//!
//! Every section is optional. Scalars are JSON numbers or strings holding a
//! fraction `"p/q"` or a decimal; a complex entry is a scalar or a `[re, im]`
//! pair. Projector keys list 1-based indices, `"{1,3}"`, with `"{}"` or `"∅"`
//! for the empty set. Unknown fields are ignored.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cardinality::{FamilyError, FamilySpec, SetFamily};
use crate::curve::{CurveError, CurveSpec, MonotoneCurve};
use crate::lattice::IndexSet;
use crate::operator::{Operator, OperatorError};
use crate::prebasis::{GenericityMode, PreBasis, PrebasisError, ProjectorFamily};
use crate::random_sets::{ProbabilityError, ProbabilityVector};
use crate::scalar::{decimal_f64_to_rational, parse_rational, rational_to_f64, Entry, ExactComplex, Rational, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("document has no sections")]
    Empty,
    #[error("missing `{0}` section")]
    Missing(&'static str),
    #[error("bad number `{0}`")]
    BadNumber(String),
    #[error("bad subset key `{0}`")]
    BadKey(String),
    #[error("{what} has size {got}, expected {expected}")]
    SizeMismatch { what: String, expected: usize, got: usize },
    #[error("conflicting sections: {0}")]
    Conflict(String),
    #[error("explicit projectors without a pre-basis must list all {expected} subsets, got {got}")]
    IncompleteProjectors { expected: usize, got: usize },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Prebasis(#[from] PrebasisError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Double,
}

/// A real number as written in the document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(serde_json::Number),
    Text(String),
}

impl Scalar {
    /// Integers and text parse exactly; a JSON float is read through its
    /// shortest decimal form.
    pub fn to_rational(&self) -> Result<Rational, DocumentError> {
        match self {
            Scalar::Text(s) => parse_rational(s).map_err(|_| DocumentError::BadNumber(s.clone())),
            Scalar::Number(n) => parse_rational(&n.to_string())
                .ok()
                .or_else(|| n.as_f64().and_then(decimal_f64_to_rational))
                .ok_or_else(|| DocumentError::BadNumber(n.to_string())),
        }
    }

    pub fn to_f64(&self) -> Result<f64, DocumentError> {
        match self {
            Scalar::Number(n) => n.as_f64().ok_or_else(|| DocumentError::BadNumber(n.to_string())),
            Scalar::Text(_) => Ok(rational_to_f64(&self.to_rational()?)),
        }
    }

    /// Whether this value was written as an integer or as text.
    fn is_exact_text(&self) -> bool {
        match self {
            Scalar::Text(_) => true,
            Scalar::Number(n) => !n.is_f64(),
        }
    }
}

impl From<&Rational> for Scalar {
    fn from(r: &Rational) -> Self {
        Scalar::Text(crate::scalar::format_rational(r))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexScalar {
    Real(Scalar),
    Pair([Scalar; 2]),
}

impl ComplexScalar {
    fn parts(&self) -> Vec<&Scalar> {
        match self {
            ComplexScalar::Real(s) => vec![s],
            ComplexScalar::Pair([re, im]) => vec![re, im],
        }
    }

    pub fn to_exact(&self) -> Result<ExactComplex, DocumentError> {
        match self {
            ComplexScalar::Real(s) => Ok(ExactComplex::from_real(s.to_rational()?)),
            ComplexScalar::Pair([re, im]) => Ok(ExactComplex::new(re.to_rational()?, im.to_rational()?)),
        }
    }

    pub fn to_c64(&self) -> Result<C64, DocumentError> {
        match self {
            ComplexScalar::Real(s) => Ok(C64::new(s.to_f64()?, 0.0)),
            ComplexScalar::Pair([re, im]) => Ok(C64::new(re.to_f64()?, im.to_f64()?)),
        }
    }
}

impl From<C64> for ComplexScalar {
    fn from(z: C64) -> Self {
        let num = |x: f64| Scalar::Number(serde_json::Number::from_f64(x).unwrap_or_else(|| 0.into()));
        if z.im == 0.0 {
            ComplexScalar::Real(num(z.re))
        } else {
            ComplexScalar::Pair([num(z.re), num(z.im)])
        }
    }
}

pub type Matrix = Vec<Vec<ComplexScalar>>;

/// Entry scalars read from a document.
pub trait DocumentEntry: Entry {
    fn read(value: &ComplexScalar) -> Result<Self, DocumentError>;
}

impl DocumentEntry for C64 {
    fn read(value: &ComplexScalar) -> Result<Self, DocumentError> {
        value.to_c64()
    }
}

impl DocumentEntry for ExactComplex {
    fn read(value: &ComplexScalar) -> Result<Self, DocumentError> {
        value.to_exact()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrebasisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// One entry per vector.
    pub vectors: Vec<Vec<ComplexScalar>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorsSpec {
    pub dimension: usize,
    pub n: usize,
    pub projectors: BTreeMap<String, Matrix>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InputDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<NumericMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prebasis: Option<PrebasisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projectors: Option<ProjectorsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<ComplexScalar>>,
}

/// Parses `"{1,3}"`, `"1,3"`, `"{}"` or `"∅"` into a 0-based index set.
pub fn parse_subset_key(key: &str) -> Result<IndexSet, DocumentError> {
    let bad = || DocumentError::BadKey(key.to_string());
    let inner = key.trim();
    let inner = inner.strip_prefix('{').and_then(|s| s.strip_suffix('}')).unwrap_or(inner).trim();
    if inner.is_empty() || inner == "∅" {
        return Ok(IndexSet::EMPTY);
    }
    let mut set = IndexSet::EMPTY;
    for part in inner.split(',') {
        let i: usize = part.trim().parse().map_err(|_| bad())?;
        if i == 0 || i > crate::lattice::MAX_GROUND {
            return Err(bad());
        }
        if set.contains(i - 1) {
            return Err(bad());
        }
        set = set.with(i - 1);
    }
    Ok(set)
}

fn read_matrix<E: DocumentEntry>(m: &Matrix, what: &str, d: usize) -> Result<Operator<E>, DocumentError> {
    if m.len() != d {
        return Err(DocumentError::SizeMismatch { what: what.to_string(), expected: d, got: m.len() });
    }
    let rows = m
        .iter()
        .map(|row| {
            if row.len() != d {
                return Err(DocumentError::SizeMismatch { what: format!("row of {what}"), expected: d, got: row.len() });
            }
            row.iter().map(E::read).collect()
        })
        .collect::<Result<Vec<Vec<E>>, _>>()?;
    Ok(Operator::from_rows(rows)?)
}

impl InputDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let doc: InputDocument = serde_json::from_str(text).map_err(|e| DocumentError::Json(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_none()
            && self.probabilities.is_none()
            && self.curve.is_none()
            && self.prebasis.is_none()
            && self.projectors.is_none()
            && self.rho.is_none()
            && self.state.is_none()
    }

    /// Checks that the sections agree on `n` and `d`.
    pub fn validate(&self) -> Result<(), DocumentError> {
        if self.is_empty() {
            return Err(DocumentError::Empty);
        }
        if self.rho.is_some() && self.state.is_some() {
            return Err(DocumentError::Conflict("both `rho` and `state` are given".into()));
        }
        let mut n: Option<(usize, &str)> = None;
        let mut d: Option<(usize, &str)> = None;
        let agree = |slot: &mut Option<(usize, &'static str)>, v: usize, what: &'static str| match slot {
            Some((expected, first)) if *expected != v => Err(DocumentError::SizeMismatch {
                what: format!("`{what}` (against `{first}`)"),
                expected: *expected,
                got: v,
            }),
            Some(_) => Ok(()),
            None => {
                *slot = Some((v, what));
                Ok(())
            }
        };
        if let Some(f) = &self.family {
            agree(&mut n, f.sets.len(), "family")?;
        }
        if let Some(p) = &self.probabilities {
            agree(&mut n, p.len(), "probabilities")?;
        }
        if let Some(dim) = self.curve.as_ref().map(MonotoneCurve::from_spec).transpose()?.and_then(|c| c.dimension()) {
            agree(&mut n, dim, "curve")?;
        }
        if let Some(b) = &self.prebasis {
            agree(&mut n, b.vectors.len(), "prebasis")?;
            if let Some(dim) = b.dimension {
                agree(&mut d, dim, "prebasis")?;
            }
            for v in &b.vectors {
                agree(&mut d, v.len(), "prebasis")?;
            }
        }
        if let Some(p) = &self.projectors {
            agree(&mut n, p.n, "projectors")?;
            agree(&mut d, p.dimension, "projectors")?;
        }
        if let Some(r) = &self.rho {
            agree(&mut d, r.len(), "rho")?;
        }
        if let Some(s) = &self.state {
            agree(&mut d, s.len(), "state")?;
        }
        Ok(())
    }

    /// The explicit `mode`, else exact when every number is an integer or
    /// text.
    pub fn numeric_mode(&self) -> NumericMode {
        if let Some(m) = self.mode {
            return m;
        }
        let mut scalars: Vec<&Scalar> = Vec::new();
        if let Some(p) = &self.probabilities {
            scalars.extend(p);
        }
        if let Some(p) = &self.projectors {
            scalars.extend(p.projectors.values().flatten().flatten().flat_map(ComplexScalar::parts));
        }
        if let Some(r) = &self.rho {
            scalars.extend(r.iter().flatten().flat_map(ComplexScalar::parts));
        }
        if scalars.iter().all(|s| s.is_exact_text()) {
            NumericMode::Exact
        } else {
            NumericMode::Double
        }
    }

    pub fn family(&self) -> Result<Option<SetFamily>, DocumentError> {
        Ok(self.family.as_ref().map(SetFamily::from_spec).transpose()?)
    }

    pub fn require_family(&self) -> Result<SetFamily, DocumentError> {
        self.family()?.ok_or(DocumentError::Missing("family"))
    }

    pub fn probabilities_exact(&self) -> Result<Option<ProbabilityVector<Rational>>, DocumentError> {
        let Some(p) = &self.probabilities else { return Ok(None) };
        let v = p.iter().map(Scalar::to_rational).collect::<Result<Vec<_>, _>>()?;
        Ok(Some(ProbabilityVector::new(v)?))
    }

    pub fn probabilities_f64(&self) -> Result<Option<ProbabilityVector<f64>>, DocumentError> {
        let Some(p) = &self.probabilities else { return Ok(None) };
        let v = p.iter().map(Scalar::to_f64).collect::<Result<Vec<_>, _>>()?;
        Ok(Some(ProbabilityVector::new(v)?))
    }

    pub fn curve(&self) -> Result<Option<MonotoneCurve>, DocumentError> {
        Ok(self.curve.as_ref().map(MonotoneCurve::from_spec).transpose()?)
    }

    pub fn prebasis(&self, mode: GenericityMode) -> Result<Option<PreBasis>, DocumentError> {
        let Some(spec) = &self.prebasis else { return Ok(None) };
        let cols = spec
            .vectors
            .iter()
            .map(|v| v.iter().map(ComplexScalar::to_c64).collect())
            .collect::<Result<Vec<Vec<C64>>, _>>()?;
        Ok(Some(PreBasis::new(cols, mode)?))
    }

    fn explicit_entries<E: DocumentEntry>(&self) -> Result<Option<BTreeMap<IndexSet, Operator<E>>>, DocumentError> {
        let Some(spec) = &self.projectors else { return Ok(None) };
        let mut out = BTreeMap::new();
        for (key, m) in &spec.projectors {
            let set = parse_subset_key(key)?;
            if set.iter().any(|i| i >= spec.n) {
                return Err(DocumentError::BadKey(key.clone()));
            }
            if out.insert(set, read_matrix(m, &format!("projector {key}"), spec.dimension)?).is_some() {
                return Err(DocumentError::Conflict(format!("subset {set} listed twice")));
            }
        }
        Ok(Some(out))
    }

    /// Explicit projectors read exactly. All `2^n` subsets must be listed.
    pub fn projectors_exact(&self) -> Result<Option<ProjectorFamily<ExactComplex>>, DocumentError> {
        let Some(entries) = self.explicit_entries::<ExactComplex>()? else { return Ok(None) };
        let spec = self.projectors.as_ref().expect("entries imply a section");
        if entries.len() != 1 << spec.n {
            return Err(DocumentError::IncompleteProjectors { expected: 1 << spec.n, got: entries.len() });
        }
        Ok(Some(ProjectorFamily::explicit(spec.dimension, spec.n, entries)?))
    }

    /// Projectors from the pre-basis, overridden by explicit entries where
    /// given, or the explicit family alone.
    pub fn projector_family(&self, mode: GenericityMode) -> Result<Option<ProjectorFamily<C64>>, DocumentError> {
        let basis = self.prebasis(mode)?;
        let explicit = self.explicit_entries::<C64>()?;
        match (basis, explicit) {
            (None, None) => Ok(None),
            (Some(b), None) => Ok(Some(ProjectorFamily::from_prebasis(&b))),
            (Some(b), Some(e)) => Ok(Some(ProjectorFamily::completed(&b, &e)?)),
            (None, Some(e)) => {
                let spec = self.projectors.as_ref().expect("entries imply a section");
                if e.len() != 1 << spec.n {
                    return Err(DocumentError::IncompleteProjectors { expected: 1 << spec.n, got: e.len() });
                }
                Ok(Some(ProjectorFamily::explicit(spec.dimension, spec.n, e)?))
            }
        }
    }

    /// `rho`, or `|s⟩⟨s|/⟨s|s⟩` from `state`.
    pub fn density<E: DocumentEntry>(&self, d: usize) -> Result<Option<Operator<E>>, DocumentError> {
        if let Some(r) = &self.rho {
            return Ok(Some(read_matrix(r, "rho", d)?));
        }
        let Some(s) = self.state.as_ref().map(|s| s.iter().map(E::read).collect::<Result<Vec<E>, _>>()).transpose()? else {
            return Ok(None);
        };
        if s.len() != d {
            return Err(DocumentError::SizeMismatch { what: "state".into(), expected: d, got: s.len() });
        }
        let norm = s.iter().fold(E::Real::zero(), |acc, z| acc + z.norm_sqr());
        if norm == E::Real::zero() {
            return Err(DocumentError::Conflict("state is the zero vector".into()));
        }
        Ok(Some(Operator::outer(&s).scale_real(&(E::Real::one() / norm))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{integer, rational};

    #[test]
    fn subset_keys() {
        assert_eq!(parse_subset_key("{}").unwrap(), IndexSet::EMPTY);
        assert_eq!(parse_subset_key("∅").unwrap(), IndexSet::EMPTY);
        assert_eq!(parse_subset_key("{1, 3}").unwrap(), IndexSet::from_indices([0, 2]));
        assert_eq!(parse_subset_key("2").unwrap(), IndexSet::singleton(1));
        for bad in ["{0}", "{1,1}", "{a}", "{1,}"] {
            assert!(parse_subset_key(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn mode_detection_and_numbers() {
        let doc = InputDocument::parse(r#"{"probabilities": ["1/2", 1, "0.25"]}"#).unwrap();
        assert_eq!(doc.numeric_mode(), NumericMode::Exact);
        let p = doc.probabilities_exact().unwrap().unwrap();
        assert_eq!(p.values(), &[rational(1, 2), integer(1), rational(1, 4)]);
        let doc = InputDocument::parse(r#"{"probabilities": [0.5, 0.1], "extra": true}"#).unwrap();
        assert_eq!(doc.numeric_mode(), NumericMode::Double);
        assert_eq!(doc.probabilities_exact().unwrap().unwrap().values()[1], rational(1, 10));
        let doc = InputDocument::parse(r#"{"mode": "double", "probabilities": ["1/3"]}"#).unwrap();
        assert_eq!(doc.numeric_mode(), NumericMode::Double);
        assert!(InputDocument::parse(r#"{"probabilities": ["x"]}"#).unwrap().probabilities_f64().is_err());
        assert!(InputDocument::parse(r#"{"probabilities": [2]}"#).unwrap().probabilities_f64().is_err());
    }

    #[test]
    fn validation() {
        assert_eq!(InputDocument::parse("{}"), Err(DocumentError::Empty));
        assert!(matches!(InputDocument::parse("not json"), Err(DocumentError::Json(_))));
        let mismatch = r#"{"family": {"universe": ["a"], "sets": [["a"], ["a"]]}, "probabilities": [1]}"#;
        assert!(matches!(InputDocument::parse(mismatch), Err(DocumentError::SizeMismatch { .. })));
        let both = r#"{"rho": [[1]], "state": [1]}"#;
        assert!(matches!(InputDocument::parse(both), Err(DocumentError::Conflict(_))));
        let dims = r#"{"prebasis": {"vectors": [[1, 0], [0, 1]]}, "rho": [[1]]}"#;
        assert!(matches!(InputDocument::parse(dims), Err(DocumentError::SizeMismatch { .. })));
    }

    #[test]
    fn projector_sections() {
        let text = r#"{
            "prebasis": {"vectors": [[1, 0], [1, 1]]},
            "projectors": {"dimension": 2, "n": 2, "projectors": {"{1}": [[1, 0], [0, 0]]}}
        }"#;
        let doc = InputDocument::parse(text).unwrap();
        let fam = doc.projector_family(GenericityMode::Permissive).unwrap().unwrap();
        assert!(fam.laws().passes());
        assert!(matches!(doc.projectors_exact(), Err(DocumentError::IncompleteProjectors { expected: 4, got: 1 })));
        let conflict = text.replace("[[1, 0], [0, 0]]", "[[0, 0], [0, 1]]");
        let doc = InputDocument::parse(&conflict).unwrap();
        assert!(matches!(
            doc.projector_family(GenericityMode::Permissive),
            Err(DocumentError::Prebasis(PrebasisError::Conflict { .. }))
        ));
        let exact = r#"{"projectors": {"dimension": 1, "n": 1, "projectors": {"{}": [[0]], "{1}": [["1"]]}}}"#;
        let fam = InputDocument::parse(exact).unwrap().projectors_exact().unwrap().unwrap();
        assert!(fam.laws().passes());
    }

    #[test]
    fn density_from_state() {
        let doc = InputDocument::parse(r#"{"state": [1, [0, 1]]}"#).unwrap();
        let rho: Operator<ExactComplex> = doc.density(2).unwrap().unwrap();
        assert_eq!(rho.get(0, 1), &ExactComplex::new(integer(0), rational(-1, 2)));
        let rho: Operator<C64> = doc.density(2).unwrap().unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        assert!(InputDocument::parse(r#"{"state": [0, 0]}"#).unwrap().density::<C64>(2).is_err());
    }

    #[test]
    fn round_trip() {
        let text = r#"{"family": {"universe": ["a", "b"], "sets": [["a"], ["a", "b"]]}, "probabilities": ["1/2", 0.25], "curve": {"kind": "diagonal"}}"#;
        let doc = InputDocument::parse(text).unwrap();
        assert_eq!(InputDocument::parse(&doc.to_json()).unwrap(), doc);
    }
}
