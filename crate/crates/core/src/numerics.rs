//! Dense complex linear algebra kernel with a uniform tolerance policy.
//!
//! Every rank decision in the crate flows through [`Tolerance::rank_rel`], every
//! approximate-equality check through [`Tolerance::eq_abs`], and every positivity
//! check through [`Tolerance::psd_slack`]. Spectral routines are deterministic:
//! eigenvalues are returned in descending order and eigenvector phases are fixed
//! so repeated runs produce identical output.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Shorthand for a complex scalar.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Shorthand for a real scalar viewed as complex.
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Global tolerance knobs.
///
/// `rank_rel` is the relative cutoff below which singular values and eigenvalues
/// are treated as zero, `eq_abs` the absolute residual for equality checks, and
/// `psd_slack` the relative slack granted when deciding positive semidefiniteness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rank_rel: f64,
    pub eq_abs: f64,
    pub psd_slack: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rank_rel: 1e-9,
            eq_abs: 1e-8,
            psd_slack: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(rank_rel: f64, eq_abs: f64, psd_slack: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(rank_rel) || rank_rel >= 1.0 {
            return Err(Error::BadTolerance {
                reason: format!("rank_rel must lie in (0, 1), got {rank_rel}"),
            });
        }
        if !ok(eq_abs) || !ok(psd_slack) {
            return Err(Error::BadTolerance {
                reason: format!("eq_abs and psd_slack must be positive, got {eq_abs} and {psd_slack}"),
            });
        }
        Ok(Tolerance {
            rank_rel,
            eq_abs,
            psd_slack,
        })
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose k-th column is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Deterministic eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending; each eigenvector is rotated so its first
/// component of non-negligible modulus is real and positive.
pub fn hermitian_eig(m: &CMatrix, tol: &Tolerance) -> Result<HermitianEig> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let defect = hermitian_defect(m);
    let allowed = tol.eq_abs * (1.0 + m.norm());
    if defect > allowed {
        return Err(Error::NotHermitian {
            residual: defect,
            tol: allowed,
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: vec![],
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let se = sym.clone().symmetric_eigen();
    let converged = se.eigenvalues.iter().all(|e| e.is_finite())
        && se.eigenvectors.iter().all(|z| z.is_finite());
    // The shifted QL iteration occasionally fails to converge and emits NaN
    // (observed on block matrices of the form [[0, A], [A^H, 0]], whose
    // paired +/- spectrum can stall the shift strategy). Jacobi does not
    // share the failure mode.
    let (raw_values, raw_vectors) = if converged {
        (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
    } else {
        jacobi_hermitian_eigen(&sym)?
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        raw_values[b]
            .partial_cmp(&raw_values[a])
            .expect("eigenvalues are finite")
    });
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(raw_values[src]);
        let col = raw_vectors.column(src);
        let max_mod = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let phase = col
            .iter()
            .find(|z| z.norm() > 1e-12 * max_mod)
            .map(|z| z / z.norm())
            .unwrap_or_else(|| cr(1.0));
        for r in 0..n {
            eigenvectors[dst * n + r] = col[r] / phase;
        }
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Unconditionally convergent, unlike shifted QL, so it serves as the fallback
/// when the library path stalls. Each rotation diagonalizes one 2x2 principal
/// block: the off-diagonal entry is phased real, then annihilated by the
/// classical real rotation. The result is certified against the input before
/// it is returned.
fn jacobi_hermitian_eigen(sym: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = sym.nrows();
    let mut a = sym.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = sym.norm().max(1.0);
    let target = 1e-14 * scale;
    let mut converged = false;
    for _ in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).map(move |q| (p, q)))
            .filter(|&(p, q)| p != q)
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let absq = apq.norm();
                if absq <= 1e-300 {
                    a[(p, q)] = cr(0.0);
                    a[(q, p)] = cr(0.0);
                    continue;
                }
                let phase = apq / absq;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * absq);
                let t = tau.signum() / (tau.abs() + f64::hypot(1.0, tau));
                let cth = 1.0 / f64::hypot(1.0, t);
                let sth = t * cth;
                // Two-sided update by the unitary with columns
                // (cth, -sth conj(phase)) and (sth phase, cth).
                let u_pq = cr(sth) * phase;
                let u_qp = -cr(sth) * phase.conj();
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * cr(cth) + arq * u_qp;
                    a[(r, q)] = arp * u_pq + arq * cr(cth);
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = apr * cr(cth) + aqr * u_qp.conj();
                    a[(q, r)] = apr * u_pq.conj() + aqr * cr(cth);
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * cr(cth) + vrq * u_qp;
                    v[(r, q)] = vrp * u_pq + vrq * cr(cth);
                }
            }
        }
    }
    if !converged {
        return Err(Error::IllDefined {
            reason: "jacobi eigensolver did not converge".into(),
        });
    }
    let values: Vec<f64> = (0..n).map(|k| a[(k, k)].re).collect();
    let mut recon = sym * &v;
    for j in 0..n {
        for r in 0..n {
            recon[(r, j)] -= v[(r, j)] * cr(values[j]);
        }
    }
    let budget = 1e-8 * (1.0 + sym.norm()) * n as f64;
    if recon.norm() > budget {
        return Err(Error::IllDefined {
            reason: format!(
                "jacobi eigendecomposition residual {:.3e} exceeds {:.3e}",
                recon.norm(),
                budget
            ),
        });
    }
    Ok((values, v))
}

/// Largest singular value. Computed from the Gram square, which is adequate for
/// the scales handled here.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let g = m.adjoint() * m;
    let sym = (&g + g.adjoint()).scale(0.5);
    let se = sym.clone().symmetric_eigen();
    let top = if se.eigenvalues.iter().all(|e| e.is_finite()) {
        se.eigenvalues.iter().fold(0.0f64, |acc, &e| acc.max(e))
    } else {
        // Non-convergence of the shifted QL iteration; see hermitian_eig.
        let (values, _) = jacobi_hermitian_eigen(&sym)
            .expect("jacobi eigensolver converges on the Gram square");
        values.iter().fold(0.0f64, |acc, &e| acc.max(e))
    };
    top.max(0.0).sqrt()
}

/// Matrix exponential. (Skew-)Hermitian inputs take the exact spectral route;
/// everything else falls back to scaling-and-squaring.
pub fn matrix_exp(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let scale = 1.0 + m.norm();
    if hermitian_defect(m) <= tol.eq_abs * scale {
        let eig = hermitian_eig(m, tol)?;
        return Ok(spectral_apply(&eig, |e| cr(e.exp())));
    }
    let skew_defect = (m + m.adjoint()).norm();
    if skew_defect <= tol.eq_abs * scale {
        // m = -i h with h Hermitian, so exp(m) = U exp(-i diag) U*.
        let h = m.map(|z| z * c(0.0, 1.0));
        let eig = hermitian_eig(&h, tol)?;
        return Ok(spectral_apply(&eig, |e| c(0.0, -e).exp()));
    }
    Ok(m.exp())
}

/// Applies a scalar function to a Hermitian eigendecomposition.
pub fn spectral_apply(eig: &HermitianEig, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let n = eig.eigenvalues.len();
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&e| f(e)),
    ));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Moore-Penrose pseudo-inverse with the `rank_rel` cutoff on singular values.
///
/// Hermitian inputs are inverted on their spectrum; general inputs go through the
/// Hermitian embedding `[[0, m], [m*, 0]]` so all rank decisions share one
/// deterministic eigensolver.
pub fn pseudo_inverse(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let (p, q) = (m.nrows(), m.ncols());
    if p == 0 || q == 0 {
        return Ok(CMatrix::zeros(q, p));
    }
    if p == q && hermitian_defect(m) <= 1e-12 * (1.0 + m.norm()) {
        return pseudo_inverse_hermitian(m, tol);
    }
    let n = p + q;
    let mut h = CMatrix::zeros(n, n);
    h.view_mut((0, p), (p, q)).copy_from(m);
    h.view_mut((p, 0), (q, p)).copy_from(&m.adjoint());
    let eig = hermitian_eig(&h, tol)?;
    let sigma_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = tol.rank_rel * sigma_max;
    let mut pinv = CMatrix::zeros(q, p);
    for (k, &sigma) in eig.eigenvalues.iter().enumerate() {
        if sigma <= cutoff || sigma <= 0.0 {
            continue;
        }
        let w = eig.eigenvectors.column(k);
        let u = CVector::from_iterator(p, w.iter().take(p).copied());
        let v = CVector::from_iterator(q, w.iter().skip(p).copied());
        // Unit singular pair is (u, v) scaled by sqrt(2).
        pinv += (v * u.adjoint()).scale(2.0 / sigma);
    }
    Ok(pinv)
}

/// Spectral pseudo-inverse of a Hermitian matrix.
pub fn pseudo_inverse_hermitian(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let eig = hermitian_eig(m, tol)?;
    let e_max = eig.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    let cutoff = tol.rank_rel * e_max;
    Ok(spectral_apply(&eig, |e| {
        if e.abs() > cutoff {
            cr(1.0 / e)
        } else {
            cr(0.0)
        }
    }))
}

/// Outcome of a positivity check on a Hermitian matrix.
#[derive(Debug, Clone, Copy)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Spectral norm (largest eigenvalue modulus).
    pub norm: f64,
}

/// Checks `m` for positive semidefiniteness with relative slack
/// `psd_slack * norm`. Fails with `NotHermitian` on non-Hermitian input.
pub fn psd_check(m: &CMatrix, tol: &Tolerance) -> Result<PsdReport> {
    let eig = hermitian_eig(m, tol)?;
    let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let norm = eig.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    // The slack anchor is floored at unit scale: a matrix whose own norm is
    // pure roundoff (a vanishing difference of unit-scale quantities) must
    // read as PSD, since at the library's equality resolution it is
    // indistinguishable from zero.
    Ok(PsdReport {
        is_psd: min >= -(tol.psd_slack * norm.max(1.0)),
        min_eigenvalue: min,
        norm,
    })
}

/// A subspace of complex coordinate space, stored as orthonormal columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    /// Builds a subspace by orthonormalizing the given spanning columns.
    pub fn from_columns(ambient: usize, columns: &[CVector]) -> Self {
        let kept = orthonormalize(columns, 1e-10);
        let mut basis = CMatrix::zeros(ambient, kept.len());
        for (j, v) in kept.iter().enumerate() {
            basis.set_column(j, v);
        }
        Subspace { basis }
    }

    /// Wraps columns that are already orthonormal (debug-checked).
    pub fn from_orthonormal(basis: CMatrix) -> Self {
        debug_assert!(
            (basis.adjoint() * &basis - CMatrix::identity(basis.ncols(), basis.ncols())).norm()
                < 1e-8,
            "columns must be orthonormal"
        );
        Subspace { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim();
        let p = self.projector();
        let eig = hermitian_eig(&p, &Tolerance::default()).expect("projector is Hermitian");
        let cols: Vec<CVector> = (0..n)
            .filter(|&k| eig.eigenvalues[k] < 0.5)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        let mut basis = CMatrix::zeros(n, cols.len());
        for (j, v) in cols.iter().enumerate() {
            basis.set_column(j, v);
        }
        Subspace { basis }
    }

    /// Distance of `v` from the subspace, relative to `|v|`.
    pub fn distance(&self, v: &CVector) -> f64 {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        let proj = &self.basis * (self.basis.adjoint() * v);
        (v - proj).norm() / nv
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Vectors whose
/// residual drops below `drop_rel` times their original norm are discarded.
pub fn orthonormalize(vectors: &[CVector], drop_rel: f64) -> Vec<CVector> {
    orthonormalize_with_floor(vectors, drop_rel, 0.0)
}

/// [`orthonormalize`] with an absolute floor: candidates whose norm (before
/// or after projection) is at most `drop_abs` are treated as zero.
///
/// Span-closure loops need the floor. A product of span elements that
/// vanishes exactly in exact arithmetic arrives as a roundoff vector of norm
/// ~1e-16; a purely relative test keeps its direction and normalizes noise
/// into the basis.
pub fn orthonormalize_with_floor(
    vectors: &[CVector],
    drop_rel: f64,
    drop_abs: f64,
) -> Vec<CVector> {
    let mut kept: Vec<CVector> = Vec::new();
    for v in vectors {
        let original = v.norm();
        if original <= drop_abs {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &kept {
                let overlap = b.dotc(&w);
                w -= b.scale_complex(overlap);
            }
        }
        let n = w.norm();
        if n > (drop_rel * original).max(drop_abs) {
            kept.push(w.unscale(n));
        }
    }
    kept
}

trait ScaleComplex {
    fn scale_complex(&self, z: Complex64) -> Self;
}

impl ScaleComplex for CVector {
    fn scale_complex(&self, z: Complex64) -> Self {
        self.map(|x| x * z)
    }
}

/// Null space of a Hermitian PSD matrix at the `rank_rel` cutoff.
pub fn null_space(h: &CMatrix, tol: &Tolerance) -> Result<Subspace> {
    null_space_with_floor(h, 0.0, tol)
}

/// Null space with an absolute spectral floor.
///
/// Directions whose eigenvalue magnitude is at most
/// `rank_rel * max(e_max, floor)` count as null. The floor matters when the
/// operator can be globally tiny (a commutator Gram of a nearly-central
/// family is pure roundoff); a cutoff relative to `e_max` alone would then
/// split noise eigenvalues instead of accepting the whole space.
pub fn null_space_with_floor(h: &CMatrix, floor: f64, tol: &Tolerance) -> Result<Subspace> {
    let eig = hermitian_eig(h, tol)?;
    let e_max = eig.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    let cutoff = tol.rank_rel * e_max.max(floor);
    let n = h.nrows();
    let cols: Vec<CVector> = (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() <= cutoff)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    let mut basis = CMatrix::zeros(n, cols.len());
    for (j, v) in cols.iter().enumerate() {
        basis.set_column(j, v);
    }
    Ok(Subspace { basis })
}

/// Range of a Hermitian PSD matrix at the `rank_rel` cutoff.
pub fn range_space(h: &CMatrix, tol: &Tolerance) -> Result<Subspace> {
    let eig = hermitian_eig(h, tol)?;
    let e_max = eig.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    let cutoff = tol.rank_rel * e_max;
    let n = h.nrows();
    let cols: Vec<CVector> = (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() > cutoff)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    let mut basis = CMatrix::zeros(n, cols.len());
    for (j, v) in cols.iter().enumerate() {
        basis.set_column(j, v);
    }
    Ok(Subspace { basis })
}

/// Shorted operator: the maximal PSD minorant of `g` with range inside `s`.
///
/// In coordinates adapted to `s` this is the block Schur complement
/// `g11 - g12 g22^+ g21`, but that subtraction cancels catastrophically when
/// `g` carries a huge scale and the true short is small (the doubling limit
/// feeds in 2^60-scaled matrices whose short must come out near zero, not as
/// eps * 2^60 junk). Factoring `g = F F*` on its numerical range turns the
/// Schur complement into the residual Gram `A* (I - P) A` with `A = F* sb`
/// and `P` the projector onto `ran(F* cb)`; the subtraction then happens at
/// factor level, and the result is PSD by construction. Rank decisions match
/// the Gram-level `rank_rel` cutoff anchored at the global scale of `g`: a
/// direction of `ran(F* cb)` counts when its norm exceeds
/// `sqrt(rank_rel * e_max)`. The anchor must be global, not relative to the
/// block itself: when `ran(g)` lies inside `s` the whole block is roundoff,
/// and a block-relative cutoff would promote noise directions into the
/// projector and eat genuine content of `g`.
pub fn shorted_operator(g: &CMatrix, s: &Subspace, tol: &Tolerance) -> Result<CMatrix> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::NotSquare {
            rows: g.nrows(),
            cols: g.ncols(),
        });
    }
    if s.ambient_dim() != n {
        return Err(Error::ShapeMismatch {
            context: format!(
                "shorted_operator: matrix is {n}x{n} but subspace ambient dimension is {}",
                s.ambient_dim()
            ),
        });
    }
    let report = psd_check(g, tol)?;
    if !report.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: report.min_eigenvalue,
            slack: tol.psd_slack * report.norm.max(1.0),
        });
    }
    let k = s.dim();
    if k == 0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let sb = s.basis();
    if k == n {
        let w = sb * (sb.adjoint() * g * sb) * sb.adjoint();
        return Ok((&w + w.adjoint()).scale(0.5));
    }
    let eig = hermitian_eig(g, tol)?;
    let e_max = eig.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
    let cutoff = tol.rank_rel * e_max;
    let kept: Vec<usize> = (0..n).filter(|&j| eig.eigenvalues[j] > cutoff).collect();
    if kept.is_empty() {
        return Ok(CMatrix::zeros(n, n));
    }
    let mut factor = CMatrix::zeros(n, kept.len());
    for (col, &j) in kept.iter().enumerate() {
        factor.set_column(col, &eig.eigenvectors.column(j).scale(eig.eigenvalues[j].sqrt()));
    }
    let comp = s.complement();
    let a_blk = factor.adjoint() * sb;
    let b_blk = factor.adjoint() * comp.basis();
    let b_cols: Vec<CVector> = b_blk.column_iter().map(|c| c.into_owned()).collect();
    let range_b = orthonormalize_with_floor(&b_cols, 0.0, (tol.rank_rel * e_max).sqrt());
    let mut resid = a_blk;
    for _ in 0..2 {
        for q in &range_b {
            let overlap = q.adjoint() * &resid;
            resid -= q * overlap;
        }
    }
    let short11 = resid.adjoint() * &resid;
    let w = sb * short11 * sb.adjoint();
    Ok((&w + w.adjoint()).scale(0.5))
}

/// Parallel sum `a : b = a - a (a + b)^+ a` of two PSD matrices.
///
/// The textbook formula subtracts two comparable quantities and falls apart when
/// `a` and `b` live at very different scales (the doubling iterations toward the
/// shorted operator scale `b` by 2^60). Instead the sum is evaluated on the range
/// of `a`, where its compression `a1` is positive definite:
/// `a : b = V a1^(1/2) f(m) a1^(1/2) V*` with `m = a1^(-1/2) b1 a1^(-1/2)`,
/// `b1` the compression of `short(b, ran a)`, and `f(e) = e / (1 + e)` applied
/// on the spectrum. Rank decisions happen on the scale-normalized `m`, so the
/// result stays accurate for arbitrarily lopsided inputs.
pub fn parallel_sum(a: &CMatrix, b: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "parallel_sum: {}x{} vs {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            ),
        });
    }
    for m in [a, b] {
        let report = psd_check(m, tol)?;
        if !report.is_psd {
            return Err(Error::NotPsd {
                min_eigenvalue: report.min_eigenvalue,
                slack: tol.psd_slack * report.norm.max(1.0),
            });
        }
    }
    let n = a.nrows();
    let v = range_space(a, tol)?;
    let p = v.dim();
    if p == 0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let vb = v.basis();
    let b_short = shorted_operator(b, &v, tol)?;
    let a1 = vb.adjoint() * a * vb;
    let b1 = vb.adjoint() * b_short * vb;
    let a1_eig = hermitian_eig(&a1, tol)?;
    let a1_sqrt = spectral_apply(&a1_eig, |e| cr(e.max(0.0).sqrt()));
    let a1_isqrt = spectral_apply(&a1_eig, |e| cr(1.0 / e.max(1e-300).sqrt()));
    let m = &a1_isqrt * b1 * &a1_isqrt;
    let scale = m.norm();
    if scale == 0.0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let m_hat = (&m + m.adjoint()).scale(0.5 / scale);
    let eig = hermitian_eig(&m_hat, tol)?;
    let e_max = eig.eigenvalues.iter().fold(0.0f64, |x, &e| x.max(e.abs()));
    let cutoff = tol.rank_rel * e_max;
    let f = spectral_apply(&eig, |e| {
        if e <= cutoff {
            cr(0.0)
        } else {
            let s = scale * e;
            cr(s / (1.0 + s))
        }
    });
    let r1 = &a1_sqrt * f * &a1_sqrt;
    let r = vb * r1 * vb.adjoint();
    Ok((&r + r.adjoint()).scale(0.5))
}
