//! JSON file schemas for problems, ideals, tensors and results.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spectrax::hierarchy::{BoundReport, LevelRecord, MethodChoice, SphericalSpec};
use spectrax::polyring::{parse, parse_rational};
use spectrax::problems::Tensor3;
use spectrax::{IdealPresentation, MonomialOrder, Polynomial, ProblemSpec, Sense};

use crate::CliError;

pub const PROBLEM_SCHEMA: &str = "spectrax-problem/1";
pub const IDEAL_SCHEMA: &str = "spectrax-ideal/1";
pub const TENSOR_SCHEMA: &str = "spectrax-tensor/1";
pub const RESULT_SCHEMA: &str = "spectrax-result/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealSection {
    pub generators: Vec<String>,
    #[serde(default)]
    pub trusted_groebner: bool,
    #[serde(default)]
    pub order: MonomialOrder,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalSection {
    pub polys: Vec<String>,
    pub square_scale: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    pub levels: Option<usize>,
    pub method: Option<MethodChoice>,
    pub budget_ms: Option<u64>,
    /// Fixed bases keyed by level.
    #[serde(default)]
    pub pinned: BTreeMap<usize, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub variables: Vec<String>,
    pub objective: String,
    #[serde(default)]
    pub sense: Sense,
    pub ideal: IdealSection,
    #[serde(default)]
    pub spherical: Option<SphericalSection>,
    #[serde(default)]
    pub options: OptionsSection,
}

/// An ideal with an optional spherical system, shared by `distvar` and `spectratope`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealFile {
    pub schema: String,
    pub variables: Vec<String>,
    pub ideal: IdealSection,
    #[serde(default)]
    pub spherical: Option<SphericalSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub schema: String,
    pub dims: [usize; 3],
    /// Row-major entries.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub k: usize,
    pub d_k: Option<usize>,
    pub bound: Option<f64>,
    /// The bound mapped to the application's quantity (cut value, distance, norm).
    pub transformed_value: Option<f64>,
    pub wall_ms: f64,
    pub eig_path: Option<String>,
    pub converged: bool,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema: String,
    pub kappa: usize,
    pub method: String,
    pub sense: Sense,
    pub levels: Vec<LevelEntry>,
    pub monotone_ok: bool,
    pub warnings: Vec<String>,
}

impl ResultFile {
    pub fn from_report(report: &BoundReport, transform: impl Fn(f64) -> f64) -> Self {
        ResultFile {
            schema: RESULT_SCHEMA.into(),
            kappa: report.kappa,
            method: report.method.name().into(),
            sense: report.sense,
            levels: report.levels.iter().map(|l| level_entry(l, &transform)).collect(),
            monotone_ok: report.monotone_ok,
            warnings: report.warnings.clone(),
        }
    }
}

fn level_entry(l: &LevelRecord, transform: &impl Fn(f64) -> f64) -> LevelEntry {
    let status = match &l.status {
        spectrax::hierarchy::LevelStatus::Failed(msg) => format!("failed: {msg}"),
        s => s.name().to_string(),
    };
    LevelEntry {
        k: l.k,
        d_k: l.d_k,
        bound: l.bound,
        transformed_value: l.bound.map(transform),
        wall_ms: l.wall_time.as_secs_f64() * 1e3,
        eig_path: l.eig_path.map(|p| p.name().to_string()),
        converged: l.converged,
        status,
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

fn check_schema(found: &str, expected: &str) -> Result<(), CliError> {
    if found != expected {
        return Err(CliError::Schema(format!("schema '{found}' is not '{expected}'")));
    }
    Ok(())
}

fn poly(text: &str, names: &[String]) -> Result<Polynomial, CliError> {
    parse(text, names).map_err(|e| CliError::Schema(format!("polynomial '{text}': {e}")))
}

fn polys(texts: &[String], names: &[String]) -> Result<Vec<Polynomial>, CliError> {
    texts.iter().map(|t| poly(t, names)).collect()
}

impl IdealSection {
    pub fn to_presentation(&self, names: &[String]) -> Result<IdealPresentation, CliError> {
        let gens = polys(&self.generators, names)?
            .into_iter()
            .map(|g| g.with_order(self.order))
            .collect();
        Ok(IdealPresentation::new(names.len(), gens)
            .map_err(|e| CliError::Schema(e.to_string()))?
            .with_order(self.order)
            .trusted(self.trusted_groebner))
    }
}

impl SphericalSection {
    pub fn to_spec(&self, names: &[String]) -> Result<SphericalSpec, CliError> {
        Ok(SphericalSpec {
            polys: polys(&self.polys, names)?,
            square_scale: parse_rational(&self.square_scale).map_err(|e| CliError::Schema(e.to_string()))?,
        })
    }
}

impl ProblemFile {
    pub fn to_spec(&self) -> Result<ProblemSpec, CliError> {
        check_schema(&self.schema, PROBLEM_SCHEMA)?;
        let names = &self.variables;
        let ideal = self.ideal.to_presentation(names)?;
        let mut spec = ProblemSpec::new(names.clone(), poly(&self.objective, names)?, ideal).with_sense(self.sense);
        if let Some(s) = &self.spherical {
            spec.spherical = Some(s.to_spec(names)?);
        }
        for (level, elems) in &self.options.pinned {
            spec = spec.with_pinned_basis(*level, polys(elems, names)?);
        }
        Ok(spec)
    }
}

impl IdealFile {
    pub fn parts(&self) -> Result<(IdealPresentation, Option<SphericalSpec>), CliError> {
        check_schema(&self.schema, IDEAL_SCHEMA)?;
        let ideal = self.ideal.to_presentation(&self.variables)?;
        let sph = self.spherical.as_ref().map(|s| s.to_spec(&self.variables)).transpose()?;
        Ok((ideal, sph))
    }
}

impl TensorFile {
    pub fn to_tensor(&self) -> Result<Tensor3, CliError> {
        check_schema(&self.schema, TENSOR_SCHEMA)?;
        Tensor3::new(self.dims, self.values.clone()).map_err(|e| CliError::Schema(e.to_string()))
    }
}
