//! Scenario files: the space, named calibrations and operators, a task list
//! and optional tolerance overrides.

use std::collections::BTreeMap;
use std::fmt;

use calspec::calib::CalibrationSpec;
use calspec::oper::OperatorSpec;
use calspec::{Calibration, Operator, Tolerances, C64};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Space {
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedOperator {
    pub name: String,
    #[serde(flatten)]
    pub spec: OperatorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Classify {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        operator: String,
        calibration: String,
    },
    Spectrum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        operator: String,
        calibration: String,
    },
    Radius {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        operator: String,
        calibration: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<usize>,
        /// Semigroup checks `α⁻¹T` for each listed `α`.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        alphas: Vec<f64>,
    },
    Gelfand {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        operator: String,
        calibration: String,
        /// 1-based index into the calibration; all seminorms when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seminorm: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<usize>,
    },
    Resolvent {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        operator: String,
        calibration: String,
        /// `[re, im]` pairs.
        lambdas: Vec<C64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_terms: Option<usize>,
    },
    Properties {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        operator: String,
        other: String,
        calibration: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
    InfimumStudy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        operator: String,
        calibrations: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m_values: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<usize>,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Classify { .. } => "classify",
            Task::Spectrum { .. } => "spectrum",
            Task::Radius { .. } => "radius",
            Task::Gelfand { .. } => "gelfand",
            Task::Resolvent { .. } => "resolvent",
            Task::Properties { .. } => "properties",
            Task::InfimumStudy { .. } => "infimum-study",
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            Task::Classify { id, .. }
            | Task::Spectrum { id, .. }
            | Task::Radius { id, .. }
            | Task::Gelfand { id, .. }
            | Task::Resolvent { id, .. }
            | Task::Properties { id, .. }
            | Task::InfimumStudy { id, .. } => id.as_deref(),
        }
    }

    /// `(field, name)` pairs of every operator reference.
    fn operator_refs(&self) -> Vec<(&'static str, &str)> {
        match self {
            Task::Properties { operator, other, .. } => vec![("operator", operator), ("other", other)],
            Task::Classify { operator, .. }
            | Task::Spectrum { operator, .. }
            | Task::Radius { operator, .. }
            | Task::Gelfand { operator, .. }
            | Task::Resolvent { operator, .. }
            | Task::InfimumStudy { operator, .. } => vec![("operator", operator)],
        }
    }

    /// JSON-pointer suffixes and names of every calibration reference.
    fn calibration_refs(&self) -> Vec<(String, &str)> {
        match self {
            Task::InfimumStudy { calibrations, .. } => calibrations
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("calibrations/{i}"), c.as_str()))
                .collect(),
            Task::Classify { calibration, .. }
            | Task::Spectrum { calibration, .. }
            | Task::Radius { calibration, .. }
            | Task::Gelfand { calibration, .. }
            | Task::Resolvent { calibration, .. }
            | Task::Properties { calibration, .. } => vec![("calibration".into(), calibration)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub space: Space,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub calibrations: Vec<CalibrationSpec>,
    pub operators: Vec<NamedOperator>,
    pub tasks: Vec<Task>,
    /// Kept as written so reports can echo it verbatim.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub tolerances: Map<String, Value>,
}

/// A parse or validation failure located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{at}: {}", self.message)
    }
}

impl std::error::Error for ValidationError {}

fn verr(pointer: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => {}
        }
    }
    out
}

/// Parses scenario JSON, reporting the location of the first error.
pub fn parse(text: &str) -> Result<Scenario, ValidationError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        let inner = e.into_inner();
        verr(pointer, inner.to_string())
    })
}

/// A scenario with every name resolved and every dimension checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub tolerances: Tolerances,
    pub operators: BTreeMap<String, Operator>,
    pub calibrations: BTreeMap<String, Calibration>,
}

/// Builds operators and calibrations, resolves task references and applies
/// tolerance overrides.
pub fn validate(scenario: Scenario) -> Result<Resolved, ValidationError> {
    let dim = scenario.space.dim;
    if dim == 0 {
        return Err(verr("/space/dim", "dimension must be positive"));
    }

    let tolerances: Tolerances = {
        let value = Value::Object(scenario.tolerances.clone());
        serde_path_to_error::deserialize(value).map_err(|e| {
            let pointer = format!("/tolerances{}", pointer_of(e.path()));
            verr(pointer, e.into_inner().to_string())
        })?
    };

    let mut calibrations = BTreeMap::new();
    for (i, spec) in scenario.calibrations.iter().enumerate() {
        let at = format!("/calibrations/{i}");
        let name = spec
            .name
            .clone()
            .ok_or_else(|| verr(format!("{at}/name"), "calibration needs a name"))?;
        if spec.dim != dim {
            return Err(verr(
                format!("{at}/dim"),
                format!("dimension {} does not match space dimension {dim}", spec.dim),
            ));
        }
        let cal = spec.build(&name).map_err(|e| verr(&at, e.to_string()))?;
        if calibrations.insert(name.clone(), cal).is_some() {
            return Err(verr(format!("{at}/name"), format!("duplicate calibration name {name:?}")));
        }
    }

    let mut operators = BTreeMap::new();
    for (i, named) in scenario.operators.iter().enumerate() {
        let at = format!("/operators/{i}");
        if named.spec.dim() != dim {
            return Err(verr(
                &at,
                format!(
                    "operator {:?} has dimension {}, space dimension is {dim}",
                    named.name,
                    named.spec.dim()
                ),
            ));
        }
        let op = named.spec.build().map_err(|e| verr(&at, e.to_string()))?;
        if operators.insert(named.name.clone(), op).is_some() {
            return Err(verr(format!("{at}/name"), format!("duplicate operator name {:?}", named.name)));
        }
    }

    let mut ids = BTreeMap::new();
    for (i, task) in scenario.tasks.iter().enumerate() {
        let at = format!("/tasks/{i}");
        for (field, name) in task.operator_refs() {
            if !operators.contains_key(name) {
                return Err(verr(format!("{at}/{field}"), format!("unknown operator {name:?}")));
            }
        }
        for (field, name) in task.calibration_refs() {
            if !calibrations.contains_key(name) {
                return Err(verr(format!("{at}/{field}"), format!("unknown calibration {name:?}")));
            }
        }
        if let Some(id) = task.id() {
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                return Err(verr(format!("{at}/id"), "id must be a plain file stem"));
            }
            if ids.insert(id.to_string(), i).is_some() {
                return Err(verr(format!("{at}/id"), format!("duplicate task id {id:?}")));
            }
        }
        match task {
            Task::Gelfand { seminorm: Some(k), calibration, .. } => {
                let len = calibrations[calibration.as_str()].len();
                if *k == 0 || *k > len {
                    return Err(verr(format!("{at}/seminorm"), format!("seminorm index {k} outside 1..={len}")));
                }
            }
            Task::Resolvent { lambdas, .. } if lambdas.is_empty() => {
                return Err(verr(format!("{at}/lambdas"), "at least one λ is required"));
            }
            Task::Radius { alphas, .. } => {
                if let Some(j) = alphas.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(verr(format!("{at}/alphas/{j}"), "α must be positive and finite"));
                }
            }
            Task::InfimumStudy { calibrations: cs, m_values, .. } => {
                if cs.is_empty() {
                    return Err(verr(format!("{at}/calibrations"), "at least one calibration is required"));
                }
                if let Some(j) = m_values
                    .iter()
                    .flatten()
                    .position(|m| !(m.is_finite() && *m > 0.0))
                {
                    return Err(verr(format!("{at}/m_values/{j}"), "m must be positive and finite"));
                }
            }
            _ => {}
        }
        let horizon = match task {
            Task::Radius { terms, .. } | Task::Gelfand { terms, .. } | Task::InfimumStudy { terms, .. } => *terms,
            _ => None,
        };
        if horizon.is_some_and(|n| n < 2) {
            return Err(verr(format!("{at}/terms"), "terms must be at least 2"));
        }
    }

    Ok(Resolved {
        scenario,
        tolerances,
        operators,
        calibrations,
    })
}
