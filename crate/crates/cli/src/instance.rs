//! On-disk instance format.
//!
//! A single JSON document describes an algebra by generators, a named map of
//! states, and optional dynamics. Complex numbers are `[re, im]` pairs and
//! matrices are row-major lists of rows, so fixtures stay diff-able and easy
//! to produce from any language.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use qlebesgue::algebra::CStarAlgebra;
use qlebesgue::functional::Plf;
use qlebesgue::kms::Dynamics;
use qlebesgue::numerics::c;
use qlebesgue::{CMatrix, CVector, Tolerance};

use crate::error::CliError;

pub type ComplexPair = [f64; 2];
pub type MatrixData = Vec<Vec<ComplexPair>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub ambient_dim: usize,
    pub generators: Vec<MatrixData>,
    pub states: BTreeMap<String, StateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<ToleranceSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Expectation against a density matrix in the ambient space.
    Density { matrix: MatrixData },
    /// Values against the generated orthonormal basis of the algebra.
    Values { vector: Vec<ComplexPair> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub hamiltonian: MatrixData,
    pub beta: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eq_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd_slack: Option<f64>,
}

/// Library objects built from a parsed instance.
pub struct LoadedInstance {
    pub algebra: Arc<CStarAlgebra>,
    pub states: BTreeMap<String, Plf>,
    pub dynamics: Option<Dynamics>,
    pub tolerance: Tolerance,
}

pub fn matrix_from_data(data: &MatrixData, n: usize, what: &str) -> Result<CMatrix, CliError> {
    if data.len() != n {
        return Err(CliError::Input(format!(
            "{what}: expected {n} rows, got {}",
            data.len()
        )));
    }
    for (r, row) in data.iter().enumerate() {
        if row.len() != n {
            return Err(CliError::Input(format!(
                "{what}: row {r} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    Ok(CMatrix::from_fn(n, n, |r, s| {
        c(data[r][s][0], data[r][s][1])
    }))
}

pub fn matrix_to_data(m: &CMatrix) -> MatrixData {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|s| [m[(r, s)].re, m[(r, s)].im]).collect())
        .collect()
}

pub fn vector_from_data(data: &[ComplexPair]) -> CVector {
    CVector::from_fn(data.len(), |k, _| c(data[k][0], data[k][1]))
}

pub fn vector_to_data(v: &CVector) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Tolerance overrides from the file, further overridden by command flags.
pub fn resolve_tolerance(
    file: Option<&ToleranceSpec>,
    rank_rel: Option<f64>,
    eq_abs: Option<f64>,
    psd_slack: Option<f64>,
) -> Result<Tolerance, CliError> {
    let base = Tolerance::default();
    let pick = |flag: Option<f64>, file_val: Option<f64>, default: f64| {
        flag.or(file_val).unwrap_or(default)
    };
    Tolerance::new(
        pick(rank_rel, file.and_then(|t| t.rank_rel), base.rank_rel),
        pick(eq_abs, file.and_then(|t| t.eq_abs), base.eq_abs),
        pick(psd_slack, file.and_then(|t| t.psd_slack), base.psd_slack),
    )
    .map_err(|e| CliError::Input(e.to_string()))
}

pub fn parse_file(path: &Path) -> Result<InstanceFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn build(file: &InstanceFile, tolerance: Tolerance) -> Result<LoadedInstance, CliError> {
    let n = file.ambient_dim;
    if n == 0 {
        return Err(CliError::Input("ambient_dim must be positive".into()));
    }
    let generators: Vec<CMatrix> = file
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| matrix_from_data(g, n, &format!("generator {k}")))
        .collect::<Result<_, _>>()?;
    let algebra = Arc::new(CStarAlgebra::generate(&generators, n, tolerance)?);
    let mut states = BTreeMap::new();
    for (name, spec) in &file.states {
        let plf = match spec {
            StateSpec::Density { matrix } => {
                let rho = matrix_from_data(matrix, n, &format!("state {name}"))?;
                Plf::from_density(&algebra, &rho)?
            }
            StateSpec::Values { vector } => {
                if vector.len() != algebra.dim() {
                    return Err(CliError::Input(format!(
                        "state {name}: {} values for an algebra of dimension {}",
                        vector.len(),
                        algebra.dim()
                    )));
                }
                Plf::from_values(&algebra, vector_from_data(vector))?
            }
        };
        states.insert(name.clone(), plf);
    }
    let dynamics = match &file.dynamics {
        Some(spec) => {
            let h = matrix_from_data(&spec.hamiltonian, n, "hamiltonian")?;
            Some(Dynamics::new(&algebra, h, spec.beta)?)
        }
        None => None,
    };
    Ok(LoadedInstance {
        algebra,
        states,
        dynamics,
        tolerance,
    })
}

/// Canonical serialization; `parse -> serialize` is byte-identical on its own
/// output because floats are printed at 12 significant digits, which f64
/// round-trips exactly.
pub fn to_canonical_json(file: &InstanceFile) -> Result<String, CliError> {
    crate::report::to_canonical_string(file)
}
