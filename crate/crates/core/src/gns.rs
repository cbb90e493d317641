//! The GNS construction and functionals transferred through it.
//!
//! For a positive functional `lambda` on an algebra with Gram matrix `G`,
//! the representation space is the non-null eigenspace of `G`: classes of
//! algebra elements embed as `x -> E^{1/2} U_r^H x` where `G = U E U^H` and
//! only eigenvalues above the rank cutoff are kept. Left multiplication
//! pushes through the quotient to give the representation matrices, and the
//! class of the unit is the cyclic vector. The eigenbasis is ordered
//! (descending eigenvalues, deterministic phase), so representation
//! matrices are reproducible across runs.

use std::sync::Arc;

use crate::algebra::CStarAlgebra;
use crate::error::{Error, Result};
use crate::functional::Plf;
use crate::numerics::{
    hermitian_eig, null_space, orthonormalize_with_floor, pseudo_inverse, psd_check, cr,
    CMatrix, CVector,
};
use num_complex::Complex64;

/// Numerical health of a constructed representation.
///
/// All four residuals vanish in exact arithmetic; they are stored so callers
/// can audit the construction instead of re-deriving it.
#[derive(Debug, Clone)]
pub struct GnsResiduals {
    /// max over basis pairs of the homomorphism defect
    /// `|pi(b_i) pi(b_j) - pi(b_i b_j)|`.
    pub homomorphism: f64,
    /// max over the basis of `|pi(b_i)^* - pi(b_i^*)|`.
    pub adjoint: f64,
    /// max over the basis of `|<pi(b_i) xi, xi> - lambda(b_i)|`.
    pub reconstruction: f64,
    /// Dimension of `span{pi(b_i) xi}`; equals the GNS dimension when the
    /// cyclic vector is genuinely cyclic.
    pub cyclic_rank: usize,
}

/// The GNS triple of a positive functional, realized concretely.
#[derive(Debug, Clone)]
pub struct GnsData {
    algebra: Arc<CStarAlgebra>,
    lambda: Plf,
    gns_dim: usize,
    /// `d x r` factor with `G = Q Q^*`; the class map is `x -> Q^H x`.
    quotient_map: CMatrix,
    rep: Vec<CMatrix>,
    cyclic_vector: CVector,
    /// The algebra spanned by the representation matrices inside `M_r`,
    /// verified equal to its own double commutant. `None` when `r = 0`.
    linf: Option<Arc<CStarAlgebra>>,
    residuals: GnsResiduals,
}

/// Builds the GNS representation of a positive functional.
pub fn gns(lambda: &Plf) -> Result<GnsData> {
    let algebra = Arc::clone(lambda.algebra());
    let tol = algebra.tol().clone();
    let report = psd_check(lambda.gram(), &tol)?;
    if !report.is_psd {
        return Err(Error::NotPositive {
            min_eigenvalue: report.min_eigenvalue,
        });
    }

    let d = algebra.dim();
    let eig = hermitian_eig(lambda.gram(), &tol)?;
    let e_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = tol.rank_rel * e_max;
    let kept: Vec<usize> = (0..d)
        .filter(|&k| eig.eigenvalues[k] > cutoff && eig.eigenvalues[k] > 0.0)
        .collect();
    let r = kept.len();

    if r == 0 {
        return Ok(GnsData {
            algebra,
            lambda: lambda.clone(),
            gns_dim: 0,
            quotient_map: CMatrix::zeros(d, 0),
            rep: Vec::new(),
            cyclic_vector: CVector::zeros(0),
            linf: None,
            residuals: GnsResiduals {
                homomorphism: 0.0,
                adjoint: 0.0,
                reconstruction: 0.0,
                cyclic_rank: 0,
            },
        });
    }

    let mut u_r = CMatrix::zeros(d, r);
    for (col, &k) in kept.iter().enumerate() {
        u_r.set_column(col, &eig.eigenvectors.column(k).into_owned());
    }
    let sqrt_e: Vec<f64> = kept.iter().map(|&k| eig.eigenvalues[k].sqrt()).collect();
    let d_sqrt = CMatrix::from_fn(r, r, |i, j| {
        if i == j {
            cr(sqrt_e[i])
        } else {
            cr(0.0)
        }
    });
    let d_isqrt = CMatrix::from_fn(r, r, |i, j| {
        if i == j {
            cr(1.0 / sqrt_e[i])
        } else {
            cr(0.0)
        }
    });
    let quotient_map = &u_r * &d_sqrt;

    let rep: Vec<CMatrix> = (0..d)
        .map(|i| &d_sqrt * (u_r.adjoint() * algebra.left_mult(i) * &u_r) * &d_isqrt)
        .collect();
    let cyclic_vector: CVector = quotient_map.adjoint() * algebra.unit_coords();

    // Residual audit against the structure data of the source algebra.
    let mut homomorphism: f64 = 0.0;
    let mut adjoint: f64 = 0.0;
    let mut reconstruction: f64 = 0.0;
    for i in 0..d {
        let mut image_adjoint = CMatrix::zeros(r, r);
        for k in 0..d {
            let coeff = algebra.adjoint_coords()[(k, i)];
            if coeff != Complex64::new(0.0, 0.0) {
                image_adjoint += rep[k].map(|e| e * coeff);
            }
        }
        adjoint = adjoint.max((rep[i].adjoint() - image_adjoint).norm());

        let value = (cyclic_vector.adjoint() * &rep[i] * &cyclic_vector)[(0, 0)];
        reconstruction = reconstruction.max((value - lambda.values()[i]).norm());

        for j in 0..d {
            let mut product_image = CMatrix::zeros(r, r);
            let target = algebra.left_mult(i).column(j);
            for k in 0..d {
                if target[k] != Complex64::new(0.0, 0.0) {
                    product_image += rep[k].map(|e| e * target[k]);
                }
            }
            homomorphism = homomorphism.max((&rep[i] * &rep[j] - product_image).norm());
        }
    }
    let orbit: Vec<CVector> = rep.iter().map(|m| m * &cyclic_vector).collect();
    let cyclic_rank = orthonormalize_with_floor(&orbit, tol.rank_rel, tol.rank_rel).len();

    let image = CStarAlgebra::from_spanning_set(&rep, r, tol.clone())?;
    // Finite dimension: the span of a *-closed unital family is already a
    // von Neumann algebra, so the double commutant must reproduce it. An
    // abelian image whose dimension fills the space is maximal abelian and
    // equals its own commutant, so the identity holds by proof and the
    // numerical check (the dominant cost on large supports) is skipped.
    if !(image.is_abelian() && image.dim() == r) {
        let bicommutant = image.double_commutant()?;
        debug_assert_eq!(bicommutant.dim(), image.dim());
    }

    Ok(GnsData {
        algebra,
        lambda: lambda.clone(),
        gns_dim: r,
        quotient_map,
        rep,
        cyclic_vector,
        linf: Some(Arc::new(image)),
        residuals: GnsResiduals {
            homomorphism,
            adjoint,
            reconstruction,
            cyclic_rank,
        },
    })
}

impl GnsData {
    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        &self.algebra
    }

    pub fn lambda(&self) -> &Plf {
        &self.lambda
    }

    /// Dimension of the representation space (rank of the Gram form).
    pub fn dim(&self) -> usize {
        self.gns_dim
    }

    /// True for the GNS data of the zero functional.
    pub fn is_degenerate(&self) -> bool {
        self.gns_dim == 0
    }

    /// `d x r` factor `Q` with `G = Q Q^*`; classes are `Q^H x`.
    pub fn quotient_map(&self) -> &CMatrix {
        &self.quotient_map
    }

    /// Representation matrices of the algebra basis.
    pub fn rep(&self) -> &[CMatrix] {
        &self.rep
    }

    /// Representation of the element with the given basis coordinates.
    pub fn represent(&self, coords: &CVector) -> Result<CMatrix> {
        if coords.len() != self.algebra.dim() {
            return Err(Error::ValuesLength {
                expected: self.algebra.dim(),
                got: coords.len(),
            });
        }
        let mut out = CMatrix::zeros(self.gns_dim, self.gns_dim);
        for (k, c_k) in coords.iter().enumerate() {
            if *c_k != Complex64::new(0.0, 0.0) {
                out += self.rep[k].map(|e| e * *c_k);
            }
        }
        Ok(out)
    }

    pub fn cyclic_vector(&self) -> &CVector {
        &self.cyclic_vector
    }

    /// `L^infinity(lambda)`: the von Neumann algebra generated by the image,
    /// which in finite dimension is the image span itself.
    pub fn linf(&self) -> Result<&Arc<CStarAlgebra>> {
        self.linf.as_ref().ok_or(Error::DegenerateGns)
    }

    pub fn residuals(&self) -> &GnsResiduals {
        &self.residuals
    }

    /// Transfers `mu` through the representation: `mu'(pi(a)) := mu(a)`.
    ///
    /// Well-definedness needs two kernel inclusions, both checked and
    /// reported separately on failure: the isotropic ideal of the reference
    /// functional must sit inside that of `mu`, and the kernel of the
    /// representation map must be annihilated by `mu`.
    pub fn transfer(&self, mu: &Plf) -> Result<Plf> {
        let linf = Arc::clone(self.linf()?);
        let tol = self.algebra.tol().clone();
        let d = self.algebra.dim();
        let r = self.gns_dim;

        if !self.lambda.ideal_contained(mu)? {
            return Err(Error::IllDefined {
                reason: "isotropic ideal of the reference functional is not contained in that of the transferred functional".into(),
            });
        }

        // Stack the representation as one linear map from coordinates to M_r.
        let mut stacked = CMatrix::zeros(r * r, d);
        for k in 0..d {
            let col = CVector::from_iterator(r * r, self.rep[k].iter().copied());
            stacked.set_column(k, &col);
        }
        let kernel = null_space(&(stacked.adjoint() * &stacked), &tol)?;
        let value_scale = mu.values().norm().max(1.0);
        for j in 0..kernel.dim() {
            let z: CVector = kernel.basis().column(j).into_owned();
            let leak = mu.evaluate_coords(&z)?.norm();
            if leak > tol.eq_abs * value_scale {
                return Err(Error::IllDefined {
                    reason: format!(
                        "kernel of the representation map is not annihilated by the transferred functional (leak {leak:.3e})"
                    ),
                });
            }
        }

        let pinv = pseudo_inverse(&stacked, &tol)?;
        let mut values = CVector::zeros(linf.dim());
        for m in 0..linf.dim() {
            let target = CVector::from_iterator(r * r, linf.basis()[m].iter().copied());
            let x = &pinv * &target;
            let solve_residual = (&stacked * &x - &target).norm();
            if solve_residual > 100.0 * tol.eq_abs * target.norm().max(1.0) {
                return Err(Error::SolveSingular {
                    residual: solve_residual,
                });
            }
            values[m] = mu.evaluate_coords(&x)?;
        }
        Plf::from_values(&linf, values)
    }

    /// Vectors `xi_k` with `mu_hat(x) = sum_k <x xi_k, xi_k>` on `linf`.
    ///
    /// Solves for the density `T` of `mu_hat` composed with the
    /// trace-preserving conditional expectation onto `linf`, then splits `T`
    /// spectrally. The vector count never exceeds the GNS dimension.
    pub fn normal_decomposition_basis(&self, mu_hat: &Plf) -> Result<Vec<CVector>> {
        let linf = self.linf()?;
        let tol = self.algebra.tol().clone();
        let r = self.gns_dim;
        if !same_algebra(mu_hat.algebra(), linf) {
            return Err(Error::ShapeMismatch {
                context: "functional does not live on the representation algebra".into(),
            });
        }

        // T = (1/r) sum_m mu_hat(B_m) B_m^H satisfies tr(T x) = mu_hat(x)
        // for x in the span, because the basis is trace-orthonormal.
        let mut density = CMatrix::zeros(r, r);
        for m in 0..linf.dim() {
            let weight = mu_hat.values()[m] / cr(r as f64);
            density += linf.basis()[m].adjoint().map(|e| e * weight);
        }
        let herm_defect = (&density - density.adjoint()).norm();
        if herm_defect > 100.0 * tol.eq_abs * density.norm().max(1.0) {
            return Err(Error::NotRepresentable {
                residual: herm_defect,
            });
        }
        let density = (&density + density.adjoint()).scale(0.5);
        let report = psd_check(&density, &tol)?;
        if !report.is_psd {
            return Err(Error::NotRepresentable {
                residual: -report.min_eigenvalue,
            });
        }

        let eig = hermitian_eig(&density, &tol)?;
        let t_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = tol.rank_rel * t_max;
        let mut vectors = Vec::new();
        for k in 0..r {
            let t = eig.eigenvalues[k];
            if t > cutoff && t > 0.0 {
                let v: CVector = eig.eigenvectors.column(k).into_owned();
                vectors.push(v.map(|e| e * cr(t.sqrt())));
            }
        }

        let mut residual: f64 = 0.0;
        for m in 0..linf.dim() {
            let mut total = Complex64::new(0.0, 0.0);
            for xi in &vectors {
                total += (xi.adjoint() * &linf.basis()[m] * xi)[(0, 0)];
            }
            residual = residual.max((total - mu_hat.values()[m]).norm());
        }
        if residual > 100.0 * tol.eq_abs * mu_hat.values().norm().max(1.0) {
            return Err(Error::NotRepresentable { residual });
        }
        Ok(vectors)
    }
}

fn same_algebra(a: &Arc<CStarAlgebra>, b: &Arc<CStarAlgebra>) -> bool {
    Arc::ptr_eq(a, b)
        || (a.ambient_dim() == b.ambient_dim()
            && a.dim() == b.dim()
            && a.basis().iter().zip(b.basis().iter()).all(|(x, y)| x == y))
}
