//! Brute-force measure decomposition on finite atom sets.
//!
//! Everything here is elementary bookkeeping on weight vectors, deliberately
//! independent of the operator-algebra machinery, so it can serve as an
//! oracle: embedding a measure as a diagonal density must route the abelian
//! case of the decomposition and derivative pipeline back to these formulas.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::algebra::CStarAlgebra;
use crate::error::{Error, Result};
use crate::functional::Plf;
use crate::gns;
use crate::lebesgue;
use crate::numerics::{cr, hermitian_eig, CMatrix, Tolerance};
use crate::radon_nikodym;

/// A positive measure on finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    weights: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::IllDefined {
                    reason: format!("measure weight {w} at atom {k} is not a finite nonnegative real"),
                });
            }
        }
        Ok(FiniteMeasure { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Atoms carrying strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&k| self.weights[k] > 0.0)
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Output of the atom-by-atom Lebesgue decomposition.
#[derive(Debug, Clone)]
pub struct ClassicalDecomposition {
    pub ac: FiniteMeasure,
    pub singular: FiniteMeasure,
    /// Density `d ac / d lambda` listed over the support of the reference,
    /// in atom order.
    pub density: Vec<f64>,
}

/// Splits `mu` atomwise: mass sitting on the support of `lambda` is
/// absolutely continuous, the rest is singular, and the density is the
/// weight ratio on the support.
pub fn classical_decompose(
    mu: &FiniteMeasure,
    lambda: &FiniteMeasure,
) -> Result<ClassicalDecomposition> {
    if mu.len() != lambda.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "measures live on {} and {} atoms",
                mu.len(),
                lambda.len()
            ),
        });
    }
    let mut ac = vec![0.0; mu.len()];
    let mut singular = vec![0.0; mu.len()];
    let mut density = Vec::new();
    for k in 0..mu.len() {
        if lambda.weights[k] > 0.0 {
            ac[k] = mu.weights[k];
            density.push(mu.weights[k] / lambda.weights[k]);
        } else {
            singular[k] = mu.weights[k];
        }
    }
    Ok(ClassicalDecomposition {
        ac: FiniteMeasure::new(ac)?,
        singular: FiniteMeasure::new(singular)?,
        density,
    })
}

/// The diagonal algebras are shared across calls: they depend only on the
/// atom count, and rebuilding structure data for every random pair of a
/// bulk sweep would dominate the runtime.
fn diagonal_algebra(m: usize) -> Result<Arc<CStarAlgebra>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CStarAlgebra>>>> = OnceLock::new();
    if m == 0 {
        return Err(Error::IllDefined {
            reason: "cannot embed a measure on zero atoms".into(),
        });
    }
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("diagonal algebra cache poisoned");
    if let Some(alg) = guard.get(&m) {
        return Ok(Arc::clone(alg));
    }
    let scale = (m as f64).sqrt();
    let basis: Vec<CMatrix> = (0..m)
        .map(|k| {
            let mut e = CMatrix::zeros(m, m);
            e[(k, k)] = cr(scale);
            e
        })
        .collect();
    let alg = Arc::new(CStarAlgebra::from_orthonormal_basis(
        basis,
        m,
        Tolerance::default(),
    )?);
    guard.insert(m, Arc::clone(&alg));
    Ok(alg)
}

/// Realizes a finite measure as a functional on the diagonal subalgebra of
/// `M_m`: the atoms become the diagonal matrix units and integration becomes
/// the trace against the weight matrix.
pub fn embed_diagonal(measure: &FiniteMeasure) -> Result<(Arc<CStarAlgebra>, Plf)> {
    let m = measure.len();
    let alg = diagonal_algebra(m)?;
    let mut rho = CMatrix::zeros(m, m);
    for (k, &w) in measure.weights.iter().enumerate() {
        rho[(k, k)] = cr(w);
    }
    let plf = Plf::from_density(&alg, &rho)?;
    Ok((alg, plf))
}

/// Entrywise gaps between the operator pipeline and the atomwise oracle.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    /// max gap on the absolutely continuous values.
    pub ac_gap: f64,
    /// max gap on the singular values.
    pub singular_gap: f64,
    /// max gap between the sorted derivative spectrum and the sorted density.
    pub density_gap: f64,
    /// max gap between the reconstructed functional and the embedded
    /// absolutely continuous part.
    pub reconstruction_gap: f64,
    pub gns_dim: usize,
    pub support_size: usize,
    pub tolerance: f64,
}

impl CrossValidation {
    pub fn passed(&self) -> bool {
        self.gns_dim == self.support_size
            && self.ac_gap <= self.tolerance
            && self.singular_gap <= self.tolerance
            && self.density_gap <= self.tolerance
            && self.reconstruction_gap <= self.tolerance
    }
}

/// Runs the operator decomposition and derivative on the embedded pair and
/// measures every deviation from the atomwise answer.
///
/// The derivative is taken of the absolutely continuous part, which exists
/// for every pair; its spectrum must reproduce the classical density, and
/// the GNS space must have one dimension per support atom.
pub fn cross_validate(mu: &FiniteMeasure, lambda: &FiniteMeasure) -> Result<CrossValidation> {
    let oracle = classical_decompose(mu, lambda)?;
    let (alg, mu_plf) = embed_diagonal(mu)?;
    let (_, lambda_plf) = embed_diagonal(lambda)?;
    let tolerance = 1e-10;

    let parts = lebesgue::decompose(&mu_plf, &lambda_plf)?;
    let (_, oracle_ac) = embed_diagonal(&oracle.ac)?;
    let (_, oracle_s) = embed_diagonal(&oracle.singular)?;
    let gap = |a: &Plf, b: &Plf| {
        (a.values() - b.values())
            .iter()
            .fold(0.0f64, |acc, e| acc.max(e.norm()))
    };
    let ac_gap = gap(parts.mu_ac(), &oracle_ac);
    let singular_gap = gap(parts.mu_s(), &oracle_s);

    let gns_data = gns::gns(&lambda_plf)?;
    let derivative = radon_nikodym::derivative(parts.mu_ac(), &gns_data)?;
    let reconstruction_gap = gap(&derivative.reconstruct()?, parts.mu_ac());

    let mut spectrum = if gns_data.dim() == 0 {
        Vec::new()
    } else {
        hermitian_eig(derivative.matrix(), alg.tol())?.eigenvalues
    };
    let mut density = oracle.density.clone();
    spectrum.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalues are finite"));
    density.sort_by(|a, b| b.partial_cmp(a).expect("densities are finite"));
    let density_gap = if spectrum.len() == density.len() {
        spectrum
            .iter()
            .zip(density.iter())
            .fold(0.0f64, |acc, (s, d)| acc.max((s - d).abs()))
    } else {
        f64::INFINITY
    };

    Ok(CrossValidation {
        ac_gap,
        singular_gap,
        density_gap,
        reconstruction_gap,
        gns_dim: gns_data.dim(),
        support_size: lambda.support().len(),
        tolerance,
    })
}
