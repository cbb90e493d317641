//! Heisenberg dynamics generated by a Hamiltonian inside the algebra, Gibbs
//! functionals, KMS residuals, and the finite-dimensional modular operator of
//! a cyclic separating vector.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * `sigma(z, a) = e^{izh} a e^{-izh}`, entire in `z` because everything is a
//!   matrix.
//! * A functional is KMS at inverse temperature `beta` when
//!   `lambda(ab) = lambda(b sigma_{i beta}(a))`, i.e. the analytic
//!   continuation appears on the *second* factor. The Gibbs density
//!   `e^{-beta h}/Z` then passes exactly, by cyclicity of the trace.
//! * The modular operator is normalized so the vector state of a cyclic
//!   separating vector is KMS at `beta = 1`: continuing the modular flow of
//!   `nabla` gives `sigma_i(a) = nabla a nabla^{-1}`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::CStarAlgebra;
use crate::error::{Error, Result};
use crate::functional::Plf;
use crate::numerics::{
    cr, hermitian_eig, psd_check, spectral_apply, CMatrix, CVector, HermitianEig, RMatrix,
};

/// Times at which the modular flow is sampled when verifying that it maps the
/// algebra into itself. Incommensurate values so a coincidence at one sample
/// cannot hide a genuine drift.
const FLOW_SAMPLES: [f64; 3] = [0.5, 1.3, -2.1];

/// A one-parameter automorphism group `t -> e^{ith} (.) e^{-ith}` together
/// with an inverse temperature.
///
/// The Hamiltonian must lie in the algebra so the flow restricts to it; the
/// eigendecomposition is cached because every operation evaluates functions
/// of `h` on its spectrum.
#[derive(Debug, Clone)]
pub struct Dynamics {
    algebra: Arc<CStarAlgebra>,
    hamiltonian: CMatrix,
    beta: f64,
    eig: HermitianEig,
}

impl Dynamics {
    pub fn new(algebra: &Arc<CStarAlgebra>, hamiltonian: CMatrix, beta: f64) -> Result<Self> {
        let n = algebra.ambient_dim();
        if hamiltonian.nrows() != n || hamiltonian.ncols() != n {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "hamiltonian is {}x{}, ambient dimension is {}",
                    hamiltonian.nrows(),
                    hamiltonian.ncols(),
                    n
                ),
            });
        }
        if hamiltonian
            .iter()
            .any(|e| !e.re.is_finite() || !e.im.is_finite())
        {
            return Err(Error::IllDefined {
                reason: "hamiltonian has non-finite entries".into(),
            });
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::IllDefined {
                reason: format!("inverse temperature must be finite and nonnegative, got {beta}"),
            });
        }
        let eig = hermitian_eig(&hamiltonian, algebra.tol())?;
        if !algebra.contains(&hamiltonian)? {
            return Err(Error::NotInAlgebra {
                residual: algebra.projection_residual(&hamiltonian)?,
            });
        }
        Ok(Dynamics {
            algebra: Arc::clone(algebra),
            hamiltonian,
            beta,
            eig,
        })
    }

    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        &self.algebra
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Evolved operator `e^{izh} a e^{-izh}` for a complex time `z`.
    ///
    /// Real `z` gives a *-automorphism of the algebra; imaginary `z` gives the
    /// analytic continuation used by the KMS condition.
    pub fn sigma(&self, z: Complex64, a: &CMatrix) -> Result<CMatrix> {
        if !self.algebra.contains(a)? {
            return Err(Error::NotInAlgebra {
                residual: self.algebra.projection_residual(a)?,
            });
        }
        let i = Complex64::new(0.0, 1.0);
        let forward = spectral_apply(&self.eig, |e| (i * z * e).exp());
        let backward = spectral_apply(&self.eig, |e| (-i * z * e).exp());
        Ok(&forward * a * &backward)
    }

    /// Gibbs functional `a -> tr(a e^{-beta h}) / tr(e^{-beta h})`.
    ///
    /// The spectrum is shifted by the ground energy before exponentiating;
    /// the shift cancels in the ratio and keeps the weights in `(0, 1]` even
    /// for large `beta`.
    pub fn gibbs(&self) -> Result<Plf> {
        let ground = self
            .eig
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &e| a.min(e));
        let partition: f64 = self
            .eig
            .eigenvalues
            .iter()
            .map(|&e| (-self.beta * (e - ground)).exp())
            .sum();
        let density = spectral_apply(&self.eig, |e| {
            cr((-self.beta * (e - ground)).exp() / partition)
        });
        Plf::from_density(&self.algebra, &density)
    }
}

/// Worst violation of `lambda(b_i b_j) = lambda(b_j sigma_{i beta}(b_i))`
/// over all basis pairs.
///
/// Both sides are bilinear in the pair, so vanishing on a basis is equivalent
/// to the KMS identity on the whole algebra.
pub fn kms_residual(lambda: &Plf, dynamics: &Dynamics) -> Result<f64> {
    if !same_algebra(lambda.algebra(), dynamics.algebra()) {
        return Err(Error::ShapeMismatch {
            context: "functional and dynamics act on different algebras".into(),
        });
    }
    let alg = lambda.algebra();
    let report = psd_check(lambda.gram(), alg.tol())?;
    if !report.is_psd {
        return Err(Error::NotPositive {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let d = alg.dim();
    // pair_values[i][j] = lambda(b_i b_j).
    let pair_values: Vec<CVector> = (0..d)
        .map(|i| alg.left_mult(i).transpose() * lambda.values())
        .collect();
    // sigma_{i beta}(a) = e^{-beta h} a e^{beta h}; shifting the spectrum by
    // the ground energy cancels between the two factors.
    let ground = dynamics
        .eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &e| a.min(e));
    let damp = spectral_apply(&dynamics.eig, |e| cr((-dynamics.beta * (e - ground)).exp()));
    let grow = spectral_apply(&dynamics.eig, |e| cr((dynamics.beta * (e - ground)).exp()));
    let mut worst = 0.0f64;
    for i in 0..d {
        let twisted = &damp * &alg.basis()[i] * &grow;
        let continued = alg.coords(&twisted)?;
        for j in 0..d {
            let direct = pair_values[i][j];
            let swapped = pair_values[j].dot(&continued);
            worst = worst.max((direct - swapped).norm());
        }
    }
    Ok(worst)
}

/// Accepts `lambda` as KMS when the residual is below `eq_abs` scaled by the
/// functional's norm.
pub fn is_kms(lambda: &Plf, dynamics: &Dynamics) -> Result<bool> {
    let residual = kms_residual(lambda, dynamics)?;
    Ok(residual <= lambda.algebra().tol().eq_abs * lambda.norm())
}

/// Worst drift `|lambda(sigma_t(b_k)) - lambda(b_k)|` over the sampled times
/// and the basis.
pub fn time_invariance_residual(
    lambda: &Plf,
    dynamics: &Dynamics,
    t_samples: &[f64],
) -> Result<f64> {
    if !same_algebra(lambda.algebra(), dynamics.algebra()) {
        return Err(Error::ShapeMismatch {
            context: "functional and dynamics act on different algebras".into(),
        });
    }
    let alg = lambda.algebra();
    let report = psd_check(lambda.gram(), alg.tol())?;
    if !report.is_psd {
        return Err(Error::NotPositive {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let mut worst = 0.0f64;
    for &t in t_samples {
        if !t.is_finite() {
            return Err(Error::IllDefined {
                reason: format!("non-finite sample time {t}"),
            });
        }
        let unitary = spectral_apply(&dynamics.eig, |e| Complex64::new(0.0, t * e).exp());
        let inverse = unitary.adjoint();
        for (k, b) in alg.basis().iter().enumerate() {
            let moved = &unitary * b * &inverse;
            let value = lambda.evaluate_coords(&alg.coords(&moved)?)?;
            worst = worst.max((value - lambda.values()[k]).norm());
        }
    }
    Ok(worst)
}

/// Residual diagnostics from the modular construction. All of them sit at
/// roundoff scale for well-conditioned cyclic separating vectors; they grow
/// with the condition number of the orbit matrix `[b_0 eta ... b_{d-1} eta]`.
#[derive(Debug, Clone)]
pub struct ModularResiduals {
    /// Worst of: `S(b_k eta)` versus `b_k^* eta`, the involution defect
    /// `J^2 - 1`, and the antiunitarity defect of `J`.
    pub conjugation: f64,
    /// KMS defect of the vector state under the modular dynamics at
    /// `beta = 1`.
    pub kms: f64,
    /// Worst projection residual of `nabla^{it} b_k nabla^{-it}` onto the
    /// algebra at the sampled times.
    pub flow: f64,
}

/// Modular operator and conjugation of a cyclic separating vector.
///
/// `S` is the antilinear closure of `m eta -> m^* eta`; writing its matrix
/// kernel as `S v = K conj(v)`, the modular operator is `nabla = K^T conj(K)`
/// (Hermitian by construction) and the conjugation kernel is
/// `K_J = K conj(nabla^{-1/2})` from the polar decomposition `S = J nabla^{1/2}`.
#[derive(Debug, Clone)]
pub struct ModularData {
    algebra: Arc<CStarAlgebra>,
    vector: CVector,
    nabla: CMatrix,
    nabla_eig: HermitianEig,
    conjugation_kernel: CMatrix,
    conjugation_real: RMatrix,
    residuals: ModularResiduals,
}

impl ModularData {
    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        &self.algebra
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn nabla(&self) -> &CMatrix {
        &self.nabla
    }

    /// Eigenvalues of the modular operator, descending.
    pub fn nabla_eigenvalues(&self) -> &[f64] {
        &self.nabla_eig.eigenvalues
    }

    /// The antilinear conjugation `J` as a real-linear matrix acting on
    /// coordinates `[re(v); im(v)]`.
    pub fn conjugation_realified(&self) -> &RMatrix {
        &self.conjugation_real
    }

    /// Applies the modular conjugation `J v = K_J conj(v)`.
    pub fn apply_conjugation(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.vector.len() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "vector has length {}, ambient dimension is {}",
                    v.len(),
                    self.vector.len()
                ),
            });
        }
        Ok(&self.conjugation_kernel * v.conjugate())
    }

    /// Conjugates an algebra element by `J`: the linear map
    /// `a -> J a J = K_J conj(a) conj(K_J)`, which lands in the commutant.
    pub fn conjugate_element(&self, a: &CMatrix) -> Result<CMatrix> {
        if !self.algebra.contains(a)? {
            return Err(Error::NotInAlgebra {
                residual: self.algebra.projection_residual(a)?,
            });
        }
        Ok(&self.conjugation_kernel * a.conjugate() * self.conjugation_kernel.conjugate())
    }

    /// Modular flow `nabla^{it} a nabla^{-it}` at a real time.
    pub fn modular_flow(&self, t: f64, a: &CMatrix) -> Result<CMatrix> {
        if !self.algebra.contains(a)? {
            return Err(Error::NotInAlgebra {
                residual: self.algebra.projection_residual(a)?,
            });
        }
        let unitary = spectral_apply(&self.nabla_eig, |e| Complex64::new(0.0, t * e.ln()).exp());
        Ok(&unitary * a * unitary.adjoint())
    }

    /// The state `a -> <a eta, eta>` as a functional on the algebra.
    pub fn vector_state(&self) -> Result<Plf> {
        let density = &self.vector * self.vector.adjoint();
        Plf::from_density(&self.algebra, &density)
    }

    pub fn residuals(&self) -> &ModularResiduals {
        &self.residuals
    }
}

/// Builds the modular operator and conjugation of `eta` for the given
/// algebra.
///
/// Fails with `NotCyclic` when the orbit `{b eta}` does not span the ambient
/// space and with `NotSeparating` when some nonzero element annihilates
/// `eta`. On success the three verification residuals (adjoint
/// reproduction, vector-state KMS at `beta = 1`, flow invariance of the
/// algebra) are enforced against a generous multiple of `eq_abs` and stored
/// for inspection.
pub fn modular_operator(algebra: &Arc<CStarAlgebra>, eta: &CVector) -> Result<ModularData> {
    let n = algebra.ambient_dim();
    let d = algebra.dim();
    let tol = algebra.tol();
    if eta.len() != n {
        return Err(Error::ShapeMismatch {
            context: format!("vector has length {}, ambient dimension is {n}", eta.len()),
        });
    }
    if eta.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) || eta.norm() == 0.0 {
        return Err(Error::IllDefined {
            reason: "cyclic vector must be nonzero with finite entries".into(),
        });
    }

    // Orbit matrix: column k is b_k eta. eta is cyclic iff the columns span
    // the ambient space, separating iff they are linearly independent; both
    // together force the matrix to be square and invertible.
    let mut orbit = CMatrix::zeros(n, d);
    for (k, b) in algebra.basis().iter().enumerate() {
        orbit.set_column(k, &(b * eta));
    }
    let orbit_gram = orbit.adjoint() * &orbit;
    let gram_eig = hermitian_eig(&orbit_gram, tol)?;
    let top = gram_eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let rank = gram_eig
        .eigenvalues
        .iter()
        .filter(|&&e| e > tol.rank_rel * top)
        .count();
    if rank < n {
        return Err(Error::NotCyclic { rank, needed: n });
    }
    if rank < d {
        return Err(Error::NotSeparating {
            kernel_dim: d - rank,
        });
    }

    let mut adjoint_orbit = CMatrix::zeros(n, d);
    for (k, b) in algebra.basis().iter().enumerate() {
        adjoint_orbit.set_column(k, &(b.adjoint() * eta));
    }
    let conj_orbit = orbit.conjugate();
    let Some(conj_inverse) = conj_orbit.clone().try_inverse() else {
        return Err(Error::SolveSingular {
            residual: gram_eig.eigenvalues.last().copied().unwrap_or(0.0),
        });
    };
    // S v = kernel * conj(v): antilinear, sends m eta to m^* eta.
    let kernel = &adjoint_orbit * conj_inverse;
    let mut conjugation_defect = 0.0f64;
    let reproduced = &kernel * &conj_orbit;
    for k in 0..d {
        let miss = (reproduced.column(k) - adjoint_orbit.column(k)).norm();
        conjugation_defect = conjugation_defect.max(miss);
    }

    let nabla_raw = kernel.transpose() * kernel.conjugate();
    let nabla = (&nabla_raw + nabla_raw.adjoint()).scale(0.5);
    let nabla_eig = hermitian_eig(&nabla, tol)?;
    let nabla_top = nabla_eig.eigenvalues.first().copied().unwrap_or(0.0);
    let nabla_bottom = nabla_eig.eigenvalues.last().copied().unwrap_or(0.0);
    if nabla_bottom <= tol.rank_rel * nabla_top.max(0.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: nabla_bottom,
            slack: tol.rank_rel * nabla_top.max(0.0),
        });
    }

    // Polar part: J = S nabla^{-1/2}, so its kernel is K conj(nabla^{-1/2}).
    let inv_sqrt = spectral_apply(&nabla_eig, |e| cr(1.0 / e.sqrt()));
    let conjugation_kernel = &kernel * inv_sqrt.conjugate();
    let eye = CMatrix::identity(n, n);
    let involution_defect = (&conjugation_kernel * conjugation_kernel.conjugate() - &eye).norm();
    let unitary_defect = (conjugation_kernel.adjoint() * &conjugation_kernel - &eye).norm();
    let conjugation = conjugation_defect
        .max(involution_defect)
        .max(unitary_defect);

    // The vector state must satisfy the KMS identity at beta = 1 for the
    // modular dynamics, with the analytic continuation
    // sigma_i(a) = nabla a nabla^{-1}.
    let inv_nabla = spectral_apply(&nabla_eig, |e| cr(1.0 / e));
    let mut kms = 0.0f64;
    for i in 0..d {
        let twisted_eta = (&nabla * &algebra.basis()[i] * &inv_nabla) * eta;
        let left_products = &algebra.basis()[i] * &orbit;
        for j in 0..d {
            let direct = eta.dotc(&left_products.column(j).into_owned());
            let swapped = adjoint_orbit.column(j).dotc(&twisted_eta);
            kms = kms.max((direct - swapped).norm());
        }
    }

    let mut flow = 0.0f64;
    for &t in FLOW_SAMPLES.iter() {
        let unitary = spectral_apply(&nabla_eig, |e| Complex64::new(0.0, t * e.ln()).exp());
        let inverse = unitary.adjoint();
        for b in algebra.basis() {
            let moved = &unitary * b * &inverse;
            flow = flow.max(algebra.projection_residual(&moved)?);
        }
    }

    // These identities are theorems in finite dimension, so a large residual
    // can only mean the orbit matrix was too ill-conditioned to invert
    // meaningfully; refuse rather than hand back junk.
    let eta_scale = eta.norm_squared().max(1.0);
    let budget = 1e3 * tol.eq_abs;
    let checks = [
        ("adjoint reproduction", conjugation, adjoint_orbit.norm().max(1.0)),
        ("vector-state KMS", kms, eta_scale * n as f64),
        ("flow invariance", flow, 1.0),
    ];
    for (name, residual, scale) in checks {
        if residual > budget * scale {
            return Err(Error::IllDefined {
                reason: format!(
                    "modular verification failed: {name} residual {residual:.3e} exceeds {:.3e}",
                    budget * scale
                ),
            });
        }
    }

    let mut conjugation_real = RMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for s in 0..n {
            let k = conjugation_kernel[(r, s)];
            conjugation_real[(r, s)] = k.re;
            conjugation_real[(r, s + n)] = k.im;
            conjugation_real[(r + n, s)] = k.im;
            conjugation_real[(r + n, s + n)] = -k.re;
        }
    }

    Ok(ModularData {
        algebra: Arc::clone(algebra),
        vector: eta.clone(),
        nabla,
        nabla_eig,
        conjugation_kernel,
        conjugation_real,
        residuals: ModularResiduals {
            conjugation,
            kms,
            flow,
        },
    })
}

fn same_algebra(a: &Arc<CStarAlgebra>, b: &Arc<CStarAlgebra>) -> bool {
    if Arc::ptr_eq(a, b) {
        return true;
    }
    a.ambient_dim() == b.ambient_dim()
        && a.dim() == b.dim()
        && a.basis()
            .iter()
            .zip(b.basis().iter())
            .all(|(x, y)| x == y)
}
