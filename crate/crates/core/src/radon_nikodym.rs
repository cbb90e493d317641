//! Radon-Nikodym derivatives of dominated functionals.
//!
//! When `mu` is absolutely continuous with respect to `lambda`, there is a
//! unique positive operator `D` in the commutant of the GNS image of
//! `lambda` with `mu(a) = <pi(a) D xi, xi>`. The derivative is found by a
//! certified linear solve over a basis of the commutant; membership in the
//! commutant is what makes `D` the noncommutative density `d mu / d lambda`.

use crate::error::{Error, Result};
use crate::functional::Plf;
use crate::gns::GnsData;
use crate::lebesgue;
use crate::numerics::{
    cr, hermitian_eig, pseudo_inverse, psd_check, spectral_apply, spectral_norm, CMatrix, CVector,
};

/// A Radon-Nikodym derivative `D = d mu / d lambda`, realized on the GNS
/// space of `lambda`.
#[derive(Debug, Clone)]
pub struct Derivative {
    gns: GnsData,
    matrix: CMatrix,
    sqrt: CMatrix,
    /// Coordinates of `D` in the commutant basis used by the solve.
    commutant_coords: CVector,
    /// Largest eigenvalue of `D`: the least uniform domination constant.
    norm_bound: f64,
    /// max over the algebra basis of `|D pi(b_i) - pi(b_i) D|`.
    commutation_residual: f64,
}

impl Derivative {
    pub fn gns(&self) -> &GnsData {
        &self.gns
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn sqrt(&self) -> &CMatrix {
        &self.sqrt
    }

    pub fn commutant_coords(&self) -> &CVector {
        &self.commutant_coords
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn commutation_residual(&self) -> f64 {
        self.commutation_residual
    }

    /// Rebuilds the functional as `a -> <pi(a) sqrt(D) xi, sqrt(D) xi>`.
    pub fn reconstruct(&self) -> Result<Plf> {
        let alg = self.gns.algebra();
        if self.gns.is_degenerate() {
            return Ok(Plf::zero(alg));
        }
        let eta = &self.sqrt * self.gns.cyclic_vector();
        let values = CVector::from_iterator(
            alg.dim(),
            (0..alg.dim()).map(|i| eta.dotc(&(&self.gns.rep()[i] * &eta))),
        );
        Plf::from_values(alg, values)
    }
}

/// Solves for the Radon-Nikodym derivative of `mu` with respect to the
/// functional underlying `gns_data`.
///
/// The unknown is expanded in a basis of the commutant of the GNS image;
/// cyclicity of the GNS vector makes it separating for the commutant, so the
/// linear system has exactly one solution, and the solve is rejected unless
/// the numerics certify that rank.
pub fn derivative(mu: &Plf, gns_data: &GnsData) -> Result<Derivative> {
    let lambda = gns_data.lambda();
    lebesgue::check_same_algebra(mu, lambda)?;
    let report = psd_check(mu.gram(), mu.algebra().tol())?;
    if !report.is_psd {
        return Err(Error::NotPositive {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let certificate = lebesgue::is_absolutely_continuous(mu, lambda)?;
    if !certificate.absolutely_continuous {
        return Err(Error::NotAbsolutelyContinuous {
            defect: lebesgue::containment_defect(lambda, mu)?,
        });
    }
    if gns_data.is_degenerate() {
        // lambda = 0 plus kernel inclusion forces mu = 0.
        return Ok(Derivative {
            gns: gns_data.clone(),
            matrix: CMatrix::zeros(0, 0),
            sqrt: CMatrix::zeros(0, 0),
            commutant_coords: CVector::zeros(0),
            norm_bound: 0.0,
            commutation_residual: 0.0,
        });
    }

    let alg = mu.algebra();
    let tol = alg.tol();
    let d = alg.dim();
    let xi = gns_data.cyclic_vector();
    let image = gns_data.linf()?;
    // An abelian algebra of dimension equal to the space it acts on is
    // maximal abelian, hence its own commutant; skip the solve then.
    let commutant = if image.is_abelian() && image.dim() == gns_data.dim() {
        (**image).clone()
    } else {
        image.commutant()?
    };
    let c_dim = commutant.dim();

    let mut system = CMatrix::zeros(d, c_dim);
    for m in 0..c_dim {
        let moved = &commutant.basis()[m] * xi;
        for i in 0..d {
            system[(i, m)] = xi.dotc(&(&gns_data.rep()[i] * &moved));
        }
    }
    let rhs = mu.values().clone();
    // The rows of the moment system inherit the grading of lambda: an atom
    // of weight 1e-4 contributes a 1e-4-sized row whose density value is of
    // size 1e4, and solving the raw system surrenders that atom's relative
    // accuracy to the global condition number. Equilibrating the rows by
    // powers of two (exact in binary floating point) lets the solve resolve
    // each row at its own scale; the system is consistent by construction,
    // so row scaling does not move the solution.
    let mut scaled = system.clone();
    let mut row_scale = vec![1.0f64; d];
    for i in 0..d {
        let norm = scaled.row(i).norm();
        if norm.is_normal() {
            let s = 2f64.powi((-norm.log2().round()) as i32);
            row_scale[i] = s;
            for j in 0..c_dim {
                scaled[(i, j)] *= s;
            }
        }
    }
    let scaled_rhs = CVector::from_iterator(
        d,
        rhs.iter().zip(&row_scale).map(|(v, s)| v * *s),
    );
    let pinv = pseudo_inverse(&scaled, tol)?;
    let coords = &pinv * &scaled_rhs;
    let solve_residual = (&system * &coords - &rhs).norm();
    if solve_residual > 100.0 * tol.eq_abs * rhs.norm().max(1.0) {
        return Err(Error::SolveSingular {
            residual: solve_residual,
        });
    }
    let rank_defect = (pinv * &scaled - CMatrix::identity(c_dim, c_dim)).norm();
    if rank_defect > 1e-6 {
        return Err(Error::SolveSingular {
            residual: rank_defect,
        });
    }

    let mut matrix = CMatrix::zeros(gns_data.dim(), gns_data.dim());
    for m in 0..c_dim {
        matrix += commutant.basis()[m].map(|e| e * coords[m]);
    }
    let report = psd_check(&matrix, tol)?;
    if !report.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: report.min_eigenvalue,
            slack: tol.psd_slack * report.norm.max(1.0),
        });
    }
    let matrix = (&matrix + matrix.adjoint()).scale(0.5);
    let eig = hermitian_eig(&matrix, tol)?;
    let norm_bound = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let sqrt = spectral_apply(&eig, |e| cr(e.max(0.0).sqrt()));

    let commutation_residual = gns_data
        .rep()
        .iter()
        .map(|r| (&matrix * r - r * &matrix).norm())
        .fold(0.0f64, f64::max);

    let result = Derivative {
        gns: gns_data.clone(),
        matrix,
        sqrt,
        commutant_coords: coords,
        norm_bound,
        commutation_residual,
    };
    let rebuilt = result.reconstruct()?;
    let reconstruction_gap = (rebuilt.values() - mu.values())
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.norm()));
    if reconstruction_gap > 100.0 * tol.eq_abs * mu.values().norm().max(1.0) {
        return Err(Error::RepresentabilityBreach {
            residual: reconstruction_gap,
        });
    }
    Ok(result)
}

/// Checks the equivalence between uniform domination `mu <= t lambda` and
/// the derivative norm bound.
///
/// Returns true when all three hold: the Gram comparison `mu <= t lambda`,
/// the spectral bound `|D| <= t` (within tolerance), and agreement of the
/// alternative linear form `a -> <pi(a) D xi, xi>` with `mu`. A failed Gram
/// comparison reports false rather than an error, so callers can probe
/// candidate constants.
pub fn bounded_domination_check(derivative: &Derivative, mu: &Plf, t: f64) -> Result<bool> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::IllDefined {
            reason: format!("domination constant must be finite and nonnegative, got {t}"),
        });
    }
    let lambda = derivative.gns.lambda();
    lebesgue::check_same_algebra(mu, lambda)?;
    let tol = mu.algebra().tol();
    if !mu.leq(&lambda.scale(t))? {
        return Ok(false);
    }
    if derivative.norm_bound > t + tol.eq_abs * t.max(1.0) {
        return Ok(false);
    }
    if derivative.gns.is_degenerate() {
        return Ok(true);
    }
    let xi = derivative.gns.cyclic_vector();
    let pushed = &derivative.matrix * xi;
    let alg = mu.algebra();
    let mut gap = 0.0f64;
    for i in 0..alg.dim() {
        let value = xi.dotc(&(&derivative.gns.rep()[i] * &pushed));
        gap = gap.max((value - mu.values()[i]).norm());
    }
    Ok(gap <= 100.0 * tol.eq_abs * mu.values().norm().max(1.0))
}

/// Strong-resolvent distance `|(1 + D_1)^{-1} - (1 + D_2)^{-1}|` between two
/// derivatives on the same GNS space.
pub fn resolvent_distance(a: &Derivative, b: &Derivative) -> Result<f64> {
    lebesgue::check_same_algebra(a.gns.lambda(), b.gns.lambda())?;
    if a.gns.dim() != b.gns.dim() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "derivatives live on GNS spaces of dimension {} and {}",
                a.gns.dim(),
                b.gns.dim()
            ),
        });
    }
    let reference_gap = (a.gns.lambda().values() - b.gns.lambda().values()).norm();
    let scale = a.gns.lambda().values().norm().max(1.0);
    if reference_gap > a.gns.algebra().tol().eq_abs * scale {
        return Err(Error::ShapeMismatch {
            context: "derivatives are taken against different reference functionals".into(),
        });
    }
    if a.gns.is_degenerate() {
        return Ok(0.0);
    }
    let tol = a.gns.algebra().tol();
    let resolvent = |d: &Derivative| -> Result<CMatrix> {
        let eig = hermitian_eig(&d.matrix, tol)?;
        Ok(spectral_apply(&eig, |e| cr(1.0 / (1.0 + e.max(0.0)))))
    };
    Ok(spectral_norm(&(resolvent(a)? - resolvent(b)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CStarAlgebra;
    use crate::gns::gns;
    use crate::numerics::{c, Tolerance};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn diagonal_algebra(m: usize) -> Arc<CStarAlgebra> {
        let scale = (m as f64).sqrt();
        let basis: Vec<CMatrix> = (0..m)
            .map(|k| {
                let mut e = CMatrix::zeros(m, m);
                e[(k, k)] = cr(scale);
                e
            })
            .collect();
        Arc::new(CStarAlgebra::from_orthonormal_basis(basis, m, tol()).unwrap())
    }

    fn atomic(alg: &Arc<CStarAlgebra>, weights: &[f64]) -> Plf {
        let m = weights.len();
        let mut rho = CMatrix::zeros(m, m);
        for (k, &w) in weights.iter().enumerate() {
            rho[(k, k)] = cr(w);
        }
        Plf::from_density(alg, &rho).unwrap()
    }

    fn full_m2() -> Arc<CStarAlgebra> {
        let x = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let z = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
        Arc::new(CStarAlgebra::generate(&[x, z], 2, tol()).unwrap())
    }

    fn value_gap(a: &Plf, b: &Plf) -> f64 {
        (a.values() - b.values())
            .iter()
            .fold(0.0f64, |acc, e| acc.max(e.norm()))
    }

    fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
        hermitian_eig(m, &tol()).unwrap().eigenvalues
    }

    #[test]
    fn derivative_of_the_reference_is_the_identity() {
        let alg = full_m2();
        let lambda = Plf::tracial(&alg);
        let data = gns(&lambda).unwrap();
        let deriv = derivative(&lambda, &data).unwrap();
        let r = data.dim();
        assert_eq!(r, 4);
        assert!((deriv.matrix() - CMatrix::identity(r, r)).norm() < 1e-9);
        assert_abs_diff_eq!(deriv.norm_bound(), 1.0, epsilon = 1e-9);
        assert!(value_gap(&deriv.reconstruct().unwrap(), &lambda) < 1e-9);
    }

    #[test]
    fn classical_derivative_is_the_density_ratio() {
        let alg = diagonal_algebra(2);
        let lambda = atomic(&alg, &[0.5, 0.5]);
        let mu = atomic(&alg, &[0.2, 0.8]);
        let deriv = derivative(&mu, &gns(&lambda).unwrap()).unwrap();
        let eigs = sorted_eigenvalues(deriv.matrix());
        assert_abs_diff_eq!(eigs[0], 1.6, epsilon = 1e-9);
        assert_abs_diff_eq!(eigs[1], 0.4, epsilon = 1e-9);
        assert_abs_diff_eq!(deriv.norm_bound(), 1.6, epsilon = 1e-9);
        assert!(value_gap(&deriv.reconstruct().unwrap(), &mu) < 1e-9);
    }

    #[test]
    fn scaling_the_functional_scales_the_derivative() {
        let alg = full_m2();
        let lambda = Plf::tracial(&alg);
        let data = gns(&lambda).unwrap();
        let deriv = derivative(&lambda.scale(2.0), &data).unwrap();
        let r = data.dim();
        assert!((deriv.matrix() - CMatrix::identity(r, r).scale(2.0)).norm() < 1e-9);
        assert_abs_diff_eq!(deriv.norm_bound(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn tracial_reference_gives_right_multiplication_spectrum() {
        // Against the trace, the derivative of tr(rho .) acts by right
        // multiplication with 2 rho, so each eigenvalue of rho shows up
        // twice, doubled.
        let alg = full_m2();
        let lambda = Plf::tracial(&alg);
        let rho = CMatrix::from_row_slice(2, 2, &[cr(0.7), cr(0.0), cr(0.0), cr(0.3)]);
        let mu = Plf::from_density(&alg, &rho).unwrap();
        let data = gns(&lambda).unwrap();
        let deriv = derivative(&mu, &data).unwrap();
        let eigs = sorted_eigenvalues(deriv.matrix());
        for (got, want) in eigs.iter().zip([1.4, 1.4, 0.6, 0.6]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        assert!(value_gap(&deriv.reconstruct().unwrap(), &mu) < 1e-9);
        assert!(deriv.commutation_residual() < 1e-9);
    }

    #[test]
    fn norm_bound_matches_the_least_domination_constant() {
        let alg = full_m2();
        let lambda = Plf::tracial(&alg);
        let rho = CMatrix::from_row_slice(
            2,
            2,
            &[cr(0.6), c(0.1, 0.2), c(0.1, -0.2), cr(0.4)],
        );
        let mu = Plf::from_density(&alg, &rho).unwrap();
        let deriv = derivative(&mu, &gns(&lambda).unwrap()).unwrap();
        let bound = lebesgue::is_absolutely_continuous(&mu, &lambda)
            .unwrap()
            .uniform_bound
            .unwrap();
        assert_abs_diff_eq!(deriv.norm_bound(), bound, epsilon = 1e-8);

        assert!(bounded_domination_check(&deriv, &mu, bound + 1e-6).unwrap());
        assert!(bounded_domination_check(&deriv, &mu, 100.0).unwrap());
        assert!(!bounded_domination_check(&deriv, &mu, bound * 0.9).unwrap());
    }

    #[test]
    fn derivative_is_affine_in_the_functional() {
        let alg = full_m2();
        let lambda = Plf::tracial(&alg);
        let data = gns(&lambda).unwrap();
        let mu1 = Plf::from_density(
            &alg,
            &CMatrix::from_row_slice(2, 2, &[cr(0.9), c(0.0, 0.1), c(0.0, -0.1), cr(0.1)]),
        )
        .unwrap();
        let mu2 = Plf::from_density(
            &alg,
            &CMatrix::from_row_slice(2, 2, &[cr(0.2), cr(0.1), cr(0.1), cr(0.8)]),
        )
        .unwrap();
        let blend = mu1.scale(0.3).add(&mu2.scale(0.7)).unwrap();
        let d1 = derivative(&mu1, &data).unwrap();
        let d2 = derivative(&mu2, &data).unwrap();
        let d_blend = derivative(&blend, &data).unwrap();
        let expected = d1.matrix().scale(0.3) + d2.matrix().scale(0.7);
        assert!((d_blend.matrix() - expected).norm() < 1e-8);
    }

    #[test]
    fn uniqueness_survives_basis_reordering() {
        let alg = diagonal_algebra(3);
        let lambda = atomic(&alg, &[0.5, 0.3, 0.2]);
        let mu = atomic(&alg, &[0.1, 0.6, 0.3]);
        let deriv = derivative(&mu, &gns(&lambda).unwrap()).unwrap();

        let reversed: Vec<CMatrix> = alg.basis().iter().rev().cloned().collect();
        let permuted = Arc::new(
            CStarAlgebra::from_orthonormal_basis(reversed, alg.ambient_dim(), tol()).unwrap(),
        );
        let flip = |plf: &Plf| {
            let values = CVector::from_iterator(3, plf.values().iter().rev().copied());
            Plf::from_values(&permuted, values).unwrap()
        };
        let deriv_flipped = derivative(&flip(&mu), &gns(&flip(&lambda)).unwrap()).unwrap();

        let mut eigs = sorted_eigenvalues(deriv.matrix());
        let mut flipped_eigs = sorted_eigenvalues(deriv_flipped.matrix());
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        flipped_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in eigs.iter().zip(flipped_eigs.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn resolvent_distance_between_zero_and_identity() {
        let alg = full_m2();
        let lambda = Plf::tracial(&alg);
        let data = gns(&lambda).unwrap();
        let zero_deriv = derivative(&Plf::zero(&alg), &data).unwrap();
        assert_abs_diff_eq!(zero_deriv.norm_bound(), 0.0, epsilon = 1e-10);
        let self_deriv = derivative(&lambda, &data).unwrap();
        let dist = resolvent_distance(&zero_deriv, &self_deriv).unwrap();
        assert_abs_diff_eq!(dist, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(
            resolvent_distance(&self_deriv, &self_deriv).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_functionals_outside_the_support() {
        let alg = diagonal_algebra(2);
        let lambda = atomic(&alg, &[1.0, 0.0]);
        let mu = atomic(&alg, &[0.0, 1.0]);
        let err = derivative(&mu, &gns(&lambda).unwrap()).unwrap_err();
        match err {
            Error::NotAbsolutelyContinuous { defect } => assert!(defect > 0.1),
            other => panic!("expected absolute-continuity failure, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_reference_forces_the_zero_derivative() {
        let alg = full_m2();
        let zero = Plf::zero(&alg);
        let data = gns(&zero).unwrap();
        let deriv = derivative(&zero, &data).unwrap();
        assert_eq!(deriv.matrix().nrows(), 0);
        assert_abs_diff_eq!(deriv.norm_bound(), 0.0, epsilon = 1e-15);
        assert!(value_gap(&deriv.reconstruct().unwrap(), &zero) < 1e-15);
        assert_abs_diff_eq!(
            resolvent_distance(&deriv, &deriv).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn rejects_mismatched_algebras() {
        let lambda = Plf::tracial(&full_m2());
        let mu = Plf::tracial(&diagonal_algebra(2));
        let data = gns(&lambda).unwrap();
        assert!(matches!(
            derivative(&mu, &data).unwrap_err(),
            Error::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn domination_check_rejects_bad_constants() {
        let alg = diagonal_algebra(2);
        let lambda = atomic(&alg, &[0.5, 0.5]);
        let mu = atomic(&alg, &[0.2, 0.8]);
        let deriv = derivative(&mu, &gns(&lambda).unwrap()).unwrap();
        assert!(bounded_domination_check(&deriv, &mu, 1.6001).unwrap());
        assert!(!bounded_domination_check(&deriv, &mu, 1.5).unwrap());
        assert!(matches!(
            bounded_domination_check(&deriv, &mu, -1.0).unwrap_err(),
            Error::IllDefined { .. }
        ));
    }
}
