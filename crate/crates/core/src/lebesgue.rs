//! Lebesgue decomposition of one positive functional against another:
//! `mu = mu_ac + mu_s` with `mu_ac` absolutely continuous with respect to
//! `lambda` and `mu_s` carried by directions `lambda` cannot see.
//!
//! Everything runs on Gram matrices. The absolutely continuous part is the
//! shorted operator (generalized Schur complement) of `G_mu` onto the range
//! of `G_lambda`: the maximal positive form below `G_mu` whose range fits
//! inside `lambda`'s support. Absolute continuity itself is kernel inclusion
//! `ker G_lambda <= ker G_mu`, and mutual singularity is the vanishing of the
//! parallel sum `G_mu : G_lambda`.

use crate::error::{Error, Result};
use crate::functional::Plf;
use crate::gns;
use crate::numerics::{
    hermitian_eig, null_space, parallel_sum, psd_check, range_space, shorted_operator,
    spectral_apply, spectral_norm, CMatrix, CVector,
};
use crate::radon_nikodym;

/// Numerical evidence attached to a decomposition.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Whether `ker G_lambda <= ker G_mu`, i.e. the pair was already
    /// absolutely continuous and the singular part vanishes.
    pub kernel_inclusion: bool,
    /// Spectral norm of the parallel sum of the two Grams; zero exactly when
    /// the pair is mutually singular.
    pub parallel_sum_norm: f64,
    /// Distance between the shorted Gram and the Gram rebuilt from the
    /// recovered value vector; roundoff-sized when the short is representable
    /// by a functional, which finite dimension guarantees.
    pub short_residual: f64,
}

/// The two parts of `mu` relative to `lambda`, with the reference functional
/// and diagnostics.
#[derive(Debug, Clone)]
pub struct Decomposition {
    mu_ac: Plf,
    mu_s: Plf,
    lambda: Plf,
    diagnostics: Diagnostics,
}

impl Decomposition {
    pub fn mu_ac(&self) -> &Plf {
        &self.mu_ac
    }

    pub fn mu_s(&self) -> &Plf {
        &self.mu_s
    }

    pub fn lambda(&self) -> &Plf {
        &self.lambda
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }
}

fn positivity_gate(plf: &Plf) -> Result<()> {
    let report = psd_check(plf.gram(), plf.algebra().tol())?;
    if !report.is_psd {
        return Err(Error::NotPositive {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    Ok(())
}

/// Magnitude of the kernel-inclusion violation: the norm of `G_mu`
/// compressed to the kernel of `G_lambda`. Zero iff `mu` is absolutely
/// continuous with respect to `lambda`.
pub(crate) fn containment_defect(lambda: &Plf, mu: &Plf) -> Result<f64> {
    let kernel = null_space(lambda.gram(), lambda.algebra().tol())?;
    if kernel.dim() == 0 {
        return Ok(0.0);
    }
    Ok((kernel.basis().adjoint() * mu.gram() * kernel.basis()).norm())
}

/// Splits `mu` into its absolutely continuous and singular parts relative to
/// `lambda`.
///
/// The shorted Gram is converted back into a functional by evaluating the
/// form against the unit coordinates, and the singular part is the exact
/// value-vector difference, so `mu_ac + mu_s = mu` holds to the last bit.
pub fn decompose(mu: &Plf, lambda: &Plf) -> Result<Decomposition> {
    check_same_algebra(mu, lambda)?;
    positivity_gate(mu)?;
    positivity_gate(lambda)?;
    let alg = mu.algebra();
    let tol = alg.tol();

    let support = range_space(lambda.gram(), tol)?;
    let g_ac = shorted_operator(mu.gram(), &support, tol)?;

    // mu(a) is the Gram form against the unit: value k is <G e_k, u>.
    let row = alg.unit_coords().adjoint() * &g_ac;
    let values = CVector::from_iterator(alg.dim(), row.iter().copied());
    let mu_ac = Plf::from_values(alg, values)?;

    let short_residual = (mu_ac.gram() - &g_ac).norm();
    let scale = mu.gram().norm().max(1.0);
    if short_residual > 100.0 * tol.eq_abs * scale {
        return Err(Error::RepresentabilityBreach {
            residual: short_residual,
        });
    }
    let mu_s = mu.sub(&mu_ac)?;
    for part in [&mu_ac, &mu_s] {
        let report = psd_check(part.gram(), tol)?;
        if !report.is_psd {
            return Err(Error::RepresentabilityBreach {
                residual: -report.min_eigenvalue,
            });
        }
    }

    let diagnostics = Diagnostics {
        kernel_inclusion: lambda.ideal_contained(mu)?,
        parallel_sum_norm: spectral_norm(&parallel_sum(mu.gram(), lambda.gram(), tol)?),
        short_residual,
    };
    Ok(Decomposition {
        mu_ac,
        mu_s,
        lambda: lambda.clone(),
        diagnostics,
    })
}

/// Outcome of the absolute-continuity test.
#[derive(Debug, Clone)]
pub struct ContinuityCertificate {
    pub absolutely_continuous: bool,
    /// Least `t` with `mu <= t lambda` on the support of `lambda`; present
    /// only when the pair is absolutely continuous. In finite dimension a
    /// single uniform bound certifies the whole increasing-sequence
    /// definition.
    pub uniform_bound: Option<f64>,
}

/// Tests `mu << lambda` via kernel inclusion of the Grams and, on success,
/// produces the least domination constant on `lambda`'s support from the
/// largest generalized eigenvalue of the compressed pair.
pub fn is_absolutely_continuous(mu: &Plf, lambda: &Plf) -> Result<ContinuityCertificate> {
    check_same_algebra(mu, lambda)?;
    positivity_gate(mu)?;
    positivity_gate(lambda)?;
    let tol = mu.algebra().tol();
    if !lambda.ideal_contained(mu)? {
        return Ok(ContinuityCertificate {
            absolutely_continuous: false,
            uniform_bound: None,
        });
    }
    let support = range_space(lambda.gram(), tol)?;
    if support.dim() == 0 {
        // lambda = 0 forces mu = 0 under kernel inclusion; any bound works.
        return Ok(ContinuityCertificate {
            absolutely_continuous: true,
            uniform_bound: Some(0.0),
        });
    }
    let compressed_mu = support.basis().adjoint() * mu.gram() * support.basis();
    let compressed_lambda = support.basis().adjoint() * lambda.gram() * support.basis();
    let lambda_eig = hermitian_eig(&compressed_lambda, tol)?;
    let whitener = spectral_apply(&lambda_eig, |e| {
        crate::numerics::cr(1.0 / e.max(f64::MIN_POSITIVE).sqrt())
    });
    let pencil = &whitener * compressed_mu * &whitener;
    let sym = (&pencil + pencil.adjoint()).scale(0.5);
    let top = hermitian_eig(&sym, tol)?
        .eigenvalues
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    Ok(ContinuityCertificate {
        absolutely_continuous: true,
        uniform_bound: Some(top),
    })
}

/// Tests mutual singularity: no nonzero positive functional is below both
/// `mu` and `lambda`, detected by the parallel sum of their Grams vanishing.
pub fn is_singular(mu: &Plf, lambda: &Plf) -> Result<bool> {
    check_same_algebra(mu, lambda)?;
    positivity_gate(mu)?;
    positivity_gate(lambda)?;
    let tol = mu.algebra().tol();
    let meet = parallel_sum(mu.gram(), lambda.gram(), tol)?;
    let scale = 1.0 + mu.gram().norm().min(lambda.gram().norm());
    Ok(spectral_norm(&meet) <= tol.eq_abs * scale)
}

/// One term of the increasing sequence witnessing absolute continuity.
#[derive(Debug, Clone)]
pub struct WitnessTerm {
    pub functional: Plf,
    /// Domination constant: `functional <= bound * lambda`.
    pub bound: f64,
}

/// Builds the increasing sequence `mu_1 <= mu_2 <= ... <= mu` with
/// `mu_k <= t_k lambda` that certifies absolute continuity, by cutting the
/// Radon-Nikodym derivative at evenly spaced spectral thresholds
/// `t_k = k ||D|| / n_terms`.
pub fn witness_sequence(mu: &Plf, lambda: &Plf, n_terms: usize) -> Result<Vec<WitnessTerm>> {
    check_same_algebra(mu, lambda)?;
    if n_terms == 0 {
        return Err(Error::IllDefined {
            reason: "witness sequence needs at least one term".into(),
        });
    }
    let certificate = is_absolutely_continuous(mu, lambda)?;
    if !certificate.absolutely_continuous {
        return Err(Error::NotAbsolutelyContinuous {
            defect: containment_defect(lambda, mu)?,
        });
    }
    let gns_data = gns::gns(lambda)?;
    if gns_data.is_degenerate() {
        // lambda = 0 and kernel inclusion force mu = 0: every term is zero.
        let zero = Plf::zero(mu.algebra());
        return Ok((1..=n_terms)
            .map(|_| WitnessTerm {
                functional: zero.clone(),
                bound: 0.0,
            })
            .collect());
    }
    let derivative = radon_nikodym::derivative(mu, &gns_data)?;
    let eig = hermitian_eig(derivative.matrix(), gns_data.algebra().tol())?;
    let step = derivative.norm_bound() / n_terms as f64;
    let xi = gns_data.cyclic_vector();
    let alg = mu.algebra();
    // Boundary slack keeps the top eigenvalue inside the final window.
    let slack = 1e-12 * derivative.norm_bound().max(1.0);
    let mut terms = Vec::with_capacity(n_terms);
    for k in 1..=n_terms {
        let threshold = step * k as f64;
        let cut = spectral_apply(&eig, |e| {
            if e <= threshold + slack {
                crate::numerics::cr(e.max(0.0))
            } else {
                crate::numerics::cr(0.0)
            }
        });
        let shifted = &cut * xi;
        let values = CVector::from_iterator(
            alg.dim(),
            (0..alg.dim()).map(|i| xi.dotc(&(&gns_data.rep()[i] * &shifted))),
        );
        terms.push(WitnessTerm {
            functional: Plf::from_values(alg, values)?,
            bound: threshold,
        });
    }
    Ok(terms)
}

/// One verified clause of the decomposition laws.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub passed: bool,
    pub residual: f64,
}

/// Report of the structural laws a decomposition must satisfy: additivity of
/// parts, monotonicity in the functional, heredity of the two cones, and
/// basis independence.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub additivity: PropertyCheck,
    /// Absent when `mu <= tau` fails, since the law is conditional on it.
    pub monotonicity: Option<PropertyCheck>,
    pub hereditary: PropertyCheck,
    pub uniqueness: PropertyCheck,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.additivity.passed
            && self.monotonicity.as_ref().map_or(true, |c| c.passed)
            && self.hereditary.passed
            && self.uniqueness.passed
    }
}

fn value_gap(a: &Plf, b: &Plf) -> f64 {
    (a.values() - b.values())
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.norm()))
}

fn max_abs(values: &CVector) -> f64 {
    values.iter().fold(0.0f64, |acc, e| acc.max(e.norm()))
}

/// Runs the decomposition laws on a triple and reports each with its
/// residual.
pub fn property_suite(mu: &Plf, tau: &Plf, lambda: &Plf) -> Result<PropertyReport> {
    check_same_algebra(mu, lambda)?;
    check_same_algebra(tau, lambda)?;
    let alg = mu.algebra();
    let tol = alg.tol();
    let scale = 1.0 + mu.norm() + tau.norm() + lambda.norm();
    let budget = tol.eq_abs * scale;

    let d_mu = decompose(mu, lambda)?;
    let d_tau = decompose(tau, lambda)?;
    let d_sum = decompose(&mu.add(tau)?, lambda)?;

    let additivity_residual = value_gap(d_sum.mu_ac(), &d_mu.mu_ac().add(d_tau.mu_ac())?)
        .max(value_gap(d_sum.mu_s(), &d_mu.mu_s().add(d_tau.mu_s())?));
    let additivity = PropertyCheck {
        passed: additivity_residual <= budget,
        residual: additivity_residual,
    };

    let monotonicity = if mu.leq(tau)? {
        let ac_gap = psd_check(&(d_tau.mu_ac().gram() - d_mu.mu_ac().gram()), tol)?;
        let s_gap = psd_check(&(d_tau.mu_s().gram() - d_mu.mu_s().gram()), tol)?;
        let residual = (-ac_gap.min_eigenvalue).max(-s_gap.min_eigenvalue).max(0.0);
        Some(PropertyCheck {
            passed: ac_gap.is_psd && s_gap.is_psd,
            residual,
        })
    } else {
        None
    };

    let mut hereditary_residual = 0.0f64;
    for alpha in [0.3, 0.7, 1.0] {
        let from_singular = decompose(&d_mu.mu_s().scale(alpha), lambda)?;
        hereditary_residual = hereditary_residual.max(max_abs(from_singular.mu_ac().values()));
        let from_continuous = decompose(&d_mu.mu_ac().scale(alpha), lambda)?;
        hereditary_residual = hereditary_residual.max(max_abs(from_continuous.mu_s().values()));
    }
    let hereditary = PropertyCheck {
        passed: hereditary_residual <= budget,
        residual: hereditary_residual,
    };

    let uniqueness_residual = permuted_basis_gap(mu, lambda, &d_mu)?;
    let uniqueness = PropertyCheck {
        passed: uniqueness_residual <= budget,
        residual: uniqueness_residual,
    };

    Ok(PropertyReport {
        additivity,
        monotonicity,
        hereditary,
        uniqueness,
    })
}

/// Redoes the decomposition in a reversed-order copy of the basis and
/// measures the gap after transporting the parts back.
fn permuted_basis_gap(mu: &Plf, lambda: &Plf, reference: &Decomposition) -> Result<f64> {
    let alg = mu.algebra();
    let d = alg.dim();
    let reversed: Vec<CMatrix> = alg.basis().iter().rev().cloned().collect();
    let permuted_alg = std::sync::Arc::new(crate::algebra::CStarAlgebra::from_orthonormal_basis(
        reversed,
        alg.ambient_dim(),
        alg.tol().clone(),
    )?);
    let flip = |plf: &Plf| -> Result<Plf> {
        let values = CVector::from_iterator(d, plf.values().iter().rev().copied());
        Plf::from_values(&permuted_alg, values)
    };
    let decomposition = decompose(&flip(mu)?, &flip(lambda)?)?;
    let unflip = |plf: &Plf| -> CVector {
        CVector::from_iterator(d, plf.values().iter().rev().copied())
    };
    let ac_gap = &unflip(decomposition.mu_ac()) - reference.mu_ac().values();
    let s_gap = &unflip(decomposition.mu_s()) - reference.mu_s().values();
    Ok(max_abs(&ac_gap).max(max_abs(&s_gap)))
}

pub(crate) fn check_same_algebra(a: &Plf, b: &Plf) -> Result<()> {
    let (x, y) = (a.algebra(), b.algebra());
    let same = std::sync::Arc::ptr_eq(x, y)
        || (x.ambient_dim() == y.ambient_dim()
            && x.dim() == y.dim()
            && x.basis().iter().zip(y.basis().iter()).all(|(p, q)| p == q));
    if same {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            context: "functionals act on different algebras".into(),
        })
    }
}
