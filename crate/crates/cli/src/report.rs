use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use glx_core::closed_form::{ComponentConditions, ConditionReport};
use glx_core::graph::CycleStats;
use glx_core::{ComponentOutcome, Method};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::io::write_atomic;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct CommandEcho {
    pub argv: Vec<String>,
    /// SHA-256 of the input file, when there is one.
    pub input_digest: Option<String>,
}

#[derive(Debug, Default, Serialize)]
pub struct ComponentSummary {
    pub size: usize,
    pub first_vertex: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acyclic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_definite: Option<bool>,
    /// Squared largest normalized residue entry; compared with `margin`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub girth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    /// Largest number of simple paths between two vertices; `null` past the cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_paths: Option<Option<u64>>,
    /// Violation bound of the closed form restricted to this component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl ComponentSummary {
    pub fn from_conditions(c: &ComponentConditions) -> Self {
        Self {
            size: c.vertices.len(),
            first_vertex: c.vertices[0],
            acyclic: Some(c.acyclic),
            positive_definite: c.pd_check,
            alpha_squared: Some(c.gap_lhs),
            margin: c.gap_rhs.is_finite().then_some(c.gap_rhs),
            exact: Some(c.exact()),
            ..Self::default()
        }
    }

    pub fn with_outcome(mut self, o: &ComponentOutcome) -> Self {
        self.method = Some(o.method);
        self.iterations = Some(o.iterations);
        self
    }

    pub fn with_stats(mut self, s: &CycleStats) -> Self {
        self.girth = s.girth;
        self.max_degree = Some(s.max_degree);
        self.max_paths = Some(match s.max_paths {
            glx_core::graph::PathCount::Exact(p) => Some(p),
            glx_core::graph::PathCount::Overflow => None,
        });
        self
    }
}

/// Component summaries for a solution, merged with condition data by vertex set.
pub fn summarize(outcomes: &[ComponentOutcome], conditions: Option<&ConditionReport>) -> Vec<ComponentSummary> {
    let by_first: BTreeMap<usize, &ComponentConditions> =
        conditions.map(|r| r.components.iter().map(|c| (c.vertices[0], c)).collect()).unwrap_or_default();
    outcomes
        .iter()
        .map(|o| {
            let base = match by_first.get(&o.vertices[0]) {
                Some(c) if c.vertices == o.vertices => ComponentSummary::from_conditions(c),
                _ => ComponentSummary { size: o.vertices.len(), first_vertex: o.vertices[0], ..Default::default() },
            };
            base.with_outcome(o)
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: CommandEcho,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub components: Vec<ComponentSummary>,
    pub metrics: Map<String, Value>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(argv: &[String]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: CommandEcho { argv: argv.to_vec(), input_digest: None },
            lambda: None,
            k: None,
            components: Vec::new(),
            metrics: Map::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings_ms.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }

    /// Writes to `path`, or to standard output when absent.
    pub fn emit(&self, path: Option<&Path>) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)?;
        match path {
            Some(p) => write_atomic(p, |w| writeln!(w, "{text}")),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }
}
