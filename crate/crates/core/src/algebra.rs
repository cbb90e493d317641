//! Finite-dimensional C*-algebras presented concretely inside `M_n`.
//!
//! An algebra is stored through an orthonormal basis under the normalized
//! trace inner product `<x, y> = tr(y* x) / n`, together with the coordinate
//! data that makes everything else linear algebra: structure constants,
//! left-multiplication matrices, and the coordinates of adjoints and of the
//! identity. All span and rank decisions go through the single
//! [`Tolerance`] fixed at construction time.

use crate::error::{Error, Result};
use crate::numerics::{
    cr, hermitian_eig, null_space_with_floor, orthonormalize_with_floor, CMatrix, CVector,
    Tolerance,
};
use num_complex::Complex64;

/// A unital self-adjoint subalgebra of the `n x n` complex matrices.
///
/// Immutable after construction; every query is read-only.
#[derive(Debug, Clone)]
pub struct CStarAlgebra {
    ambient_dim: usize,
    tol: Tolerance,
    basis: Vec<CMatrix>,
    /// `n^2 x d`; column `k` is `vec(b_k) / sqrt(n)`, so plain `l2` inner
    /// products of columns agree with the normalized trace inner product.
    basis_stack: CMatrix,
    unit_coords: CVector,
    /// Column `i` holds the coordinates of `b_i^*`.
    adjoint_coords: CMatrix,
    /// `left_mult[i][(k, j)] = <b_i b_j, b_k>`: the coordinate matrix of
    /// left multiplication by `b_i`.
    left_mult: Vec<CMatrix>,
    /// `structure[i][(j, k)] = c[i][j][k]` where `b_i^* b_j = sum_k c[i][j][k] b_k`.
    structure: Vec<CMatrix>,
}

fn vec_scaled(m: &CMatrix, n: usize) -> CVector {
    let scale = 1.0 / (n as f64).sqrt();
    CVector::from_iterator(m.len(), m.iter().map(|z| z * scale))
}

fn unvec_scaled(v: &CVector, n: usize) -> CMatrix {
    let scale = (n as f64).sqrt();
    CMatrix::from_iterator(n, n, v.iter().map(|z| z * scale))
}

impl CStarAlgebra {
    /// Smallest unital self-adjoint matrix algebra containing `generators`.
    ///
    /// Seeds the span with the identity, the generators, and their adjoints,
    /// then alternates pairwise products with re-orthonormalization until the
    /// dimension stabilizes.
    pub fn generate(generators: &[CMatrix], n: usize, tol: Tolerance) -> Result<Self> {
        if n == 0 {
            return Err(Error::ShapeMismatch {
                context: "ambient dimension must be positive".into(),
            });
        }
        for (index, g) in generators.iter().enumerate() {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::NonSquareGenerator {
                    index,
                    rows: g.nrows(),
                    cols: g.ncols(),
                });
            }
            if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::IllDefined {
                    reason: format!("generator {index} has non-finite entries"),
                });
            }
        }

        let mut seed: Vec<CVector> = vec![vec_scaled(&CMatrix::identity(n, n), n)];
        for g in generators {
            seed.push(vec_scaled(g, n));
            seed.push(vec_scaled(&g.adjoint(), n));
        }
        let mut span = orthonormalize_with_floor(&seed, tol.rank_rel, tol.rank_rel);
        loop {
            if span.len() > n * n {
                return Err(Error::ClosureOverflow { cap: n * n });
            }
            let mats: Vec<CMatrix> = span.iter().map(|v| unvec_scaled(v, n)).collect();
            let mut candidates = span.clone();
            for a in &mats {
                for b in &mats {
                    candidates.push(vec_scaled(&(a * b), n));
                }
            }
            let next = orthonormalize_with_floor(&candidates, tol.rank_rel, tol.rank_rel);
            let stable = next.len() == span.len();
            span = next;
            if stable {
                break;
            }
        }
        if span.len() > n * n {
            return Err(Error::ClosureOverflow { cap: n * n });
        }
        let basis = span.iter().map(|v| unvec_scaled(v, n)).collect();
        Self::finish(basis, n, tol)
    }

    /// Wraps a basis that is already orthonormal under `tr(y* x) / n`.
    ///
    /// Closure under products and adjoints and presence of the identity are
    /// still verified, so this is a fast path, not an unchecked one.
    pub fn from_orthonormal_basis(basis: Vec<CMatrix>, n: usize, tol: Tolerance) -> Result<Self> {
        for (i, b) in basis.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::NonSquareGenerator {
                    index: i,
                    rows: b.nrows(),
                    cols: b.ncols(),
                });
            }
        }
        for i in 0..basis.len() {
            for j in 0..=i {
                let overlap = (basis[j].adjoint() * &basis[i]).trace() / cr(n as f64);
                let target = if i == j { cr(1.0) } else { cr(0.0) };
                if (overlap - target).norm() > 1e-10 {
                    return Err(Error::ShapeMismatch {
                        context: format!(
                            "basis is not orthonormal: <b{j}, b{i}> = {overlap}"
                        ),
                    });
                }
            }
        }
        Self::finish(basis, n, tol)
    }

    /// Builds an algebra from matrices whose span is already closed under
    /// products and adjoints (for example a commutant's null-space basis).
    pub fn from_spanning_set(span: &[CMatrix], n: usize, tol: Tolerance) -> Result<Self> {
        let vecs: Vec<CVector> = span.iter().map(|m| vec_scaled(m, n)).collect();
        let onb = orthonormalize_with_floor(&vecs, tol.rank_rel, tol.rank_rel);
        let basis = onb.iter().map(|v| unvec_scaled(v, n)).collect();
        Self::finish(basis, n, tol)
    }

    /// Shared constructor tail: derives coordinates, validates the algebra
    /// invariants (unit in span, adjoint and product closure), and caches the
    /// structure tensor and left-multiplication matrices.
    fn finish(basis: Vec<CMatrix>, n: usize, tol: Tolerance) -> Result<Self> {
        let d = basis.len();
        if d == 0 {
            return Err(Error::ShapeMismatch {
                context: "empty basis".into(),
            });
        }
        let mut basis_stack = CMatrix::zeros(n * n, d);
        for (k, b) in basis.iter().enumerate() {
            basis_stack.set_column(k, &vec_scaled(b, n));
        }

        let coords_of = |m: &CMatrix| -> CVector { basis_stack.adjoint() * vec_scaled(m, n) };
        // Computed by explicit reconstruction: the norm-gap shortcut
        // sqrt(|v|^2 - |c|^2) loses half the mantissa to cancellation and
        // reports ~1e-8 for vectors that lie exactly in the span.
        let residual_of = |m: &CMatrix, coords: &CVector| -> f64 {
            (vec_scaled(m, n) - &basis_stack * coords).norm()
        };

        let identity = CMatrix::identity(n, n);
        let unit_coords = coords_of(&identity);
        let unit_residual = residual_of(&identity, &unit_coords);
        if unit_residual > tol.eq_abs {
            return Err(Error::NotInAlgebra {
                residual: unit_residual,
            });
        }

        let mut adjoint_coords = CMatrix::zeros(d, d);
        for i in 0..d {
            let adj = basis[i].adjoint();
            let coords = coords_of(&adj);
            let res = residual_of(&adj, &coords);
            if res > tol.eq_abs {
                return Err(Error::NotInAlgebra { residual: res });
            }
            adjoint_coords.set_column(i, &coords);
        }

        let mut left_mult = Vec::with_capacity(d);
        let mut structure = Vec::with_capacity(d);
        for i in 0..d {
            let mut l_i = CMatrix::zeros(d, d);
            let mut c_i = CMatrix::zeros(d, d);
            let adj_i = basis[i].adjoint();
            for j in 0..d {
                let prod = &basis[i] * &basis[j];
                let coords = coords_of(&prod);
                let res = residual_of(&prod, &coords);
                if res > tol.eq_abs {
                    return Err(Error::NotInAlgebra { residual: res });
                }
                l_i.set_column(j, &coords);

                let star_prod = &adj_i * &basis[j];
                let star_coords = coords_of(&star_prod);
                for k in 0..d {
                    c_i[(j, k)] = star_coords[k];
                }
            }
            left_mult.push(l_i);
            structure.push(c_i);
        }

        Ok(Self {
            ambient_dim: n,
            tol,
            basis,
            basis_stack,
            unit_coords,
            adjoint_coords,
            left_mult,
            structure,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Linear dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn unit_coords(&self) -> &CVector {
        &self.unit_coords
    }

    /// Column `i` holds the coordinates of `b_i^*`.
    pub fn adjoint_coords(&self) -> &CMatrix {
        &self.adjoint_coords
    }

    /// Coordinate matrix of left multiplication by `b_i`.
    pub fn left_mult(&self, i: usize) -> &CMatrix {
        &self.left_mult[i]
    }

    /// Structure slice: `structure(i)[(j, k)]` is the coefficient of `b_k`
    /// in `b_i^* b_j`.
    pub fn structure(&self, i: usize) -> &CMatrix {
        &self.structure[i]
    }

    /// Orthogonal projection of `a` onto the span, as coordinates.
    pub fn coords(&self, a: &CMatrix) -> Result<CVector> {
        self.check_ambient(a)?;
        Ok(self.basis_stack.adjoint() * vec_scaled(a, self.ambient_dim))
    }

    /// Distance (normalized trace norm) from `a` to the span.
    pub fn projection_residual(&self, a: &CMatrix) -> Result<f64> {
        let coords = self.coords(a)?;
        let rebuilt = &self.basis_stack * &coords;
        Ok((vec_scaled(a, self.ambient_dim) - rebuilt).norm())
    }

    /// Whether `a` lies in the span up to `tol.eq_abs` relative to its norm.
    pub fn contains(&self, a: &CMatrix) -> Result<bool> {
        let res = self.projection_residual(a)?;
        let norm = vec_scaled(a, self.ambient_dim).norm();
        Ok(res <= self.tol.eq_abs * norm.max(1.0))
    }

    /// The matrix `sum_k coords[k] b_k`.
    pub fn reconstruct(&self, coords: &CVector) -> Result<CMatrix> {
        if coords.len() != self.dim() {
            return Err(Error::ValuesLength {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        let stacked = &self.basis_stack * coords;
        Ok(unvec_scaled(&stacked, self.ambient_dim))
    }

    /// Coordinates of the product of two elements given by coordinates.
    pub fn product_coords(&self, x: &CVector, y: &CVector) -> Result<CVector> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::ValuesLength {
                expected: self.dim(),
                got: x.len().max(y.len()),
            });
        }
        let mut out = CVector::zeros(self.dim());
        for i in 0..self.dim() {
            if x[i] != Complex64::new(0.0, 0.0) {
                out += (&self.left_mult[i] * y) * x[i];
            }
        }
        Ok(out)
    }

    /// Coordinates of the adjoint of the element with coordinates `x`.
    pub fn adjoint_of_coords(&self, x: &CVector) -> Result<CVector> {
        if x.len() != self.dim() {
            return Err(Error::ValuesLength {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(&self.adjoint_coords * x.map(|z| z.conj()))
    }

    /// Gram matrix `G[(i, j)] = sum_k c[i][j][k] values[k]` of a linear
    /// functional given by its values on the basis.
    pub fn gram_from_values(&self, values: &CVector) -> Result<CMatrix> {
        if values.len() != self.dim() {
            return Err(Error::ValuesLength {
                expected: self.dim(),
                got: values.len(),
            });
        }
        let d = self.dim();
        let mut gram = CMatrix::zeros(d, d);
        for i in 0..d {
            let row = &self.structure[i] * values;
            for j in 0..d {
                gram[(i, j)] = row[j];
            }
        }
        Ok(gram)
    }

    /// `{x in M_n : x b_i = b_i x for all i}` as an algebra.
    ///
    /// Runs as a progressive intersection of commutator kernels instead of
    /// one `n^2 x n^2` eigenproblem. A fixed generic hermitian member of the
    /// span seeds the search: anything commuting with it is block diagonal
    /// across its eigenvalue clusters, which caps the candidate count far
    /// below `n^2`. Each basis element then prunes the candidates through a
    /// null-space solve no larger than the current count. True commutant
    /// elements pass every step exactly, so nothing is lost, and the
    /// surviving span is validated again when closed into an algebra.
    pub fn commutant(&self) -> Result<CStarAlgebra> {
        let n = self.ambient_dim;

        // Generic hermitian member of the span; fixed weights keep runs
        // deterministic. Commuting with every basis element implies
        // commuting with this combination, never the reverse.
        let mut s = CMatrix::zeros(n, n);
        for (i, b) in self.basis.iter().enumerate() {
            let t = (i + 1) as f64;
            s += (b + b.adjoint()).scale(0.5 * (1.9 * t).sin());
            s += (b - b.adjoint()).map(|z| z * Complex64::new(0.0, 0.5 * (2.7 * t).cos()));
        }
        let seed = hermitian_eig(&s, &self.tol)?;
        // Cluster boundaries err wide: merging distinct eigenvalues only
        // enlarges the candidate set (later constraints prune it back),
        // while splitting a true multiplet would lose commutant directions.
        let spread = seed.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
        let gap_cut = self.tol.eq_abs.sqrt() * spread.max(1.0);

        // Candidate basis vec(u_i u_j^*) over index pairs inside a cluster;
        // the columns are orthonormal because the eigenvectors are.
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut cluster_start = 0;
        for k in 0..n {
            let last = k + 1 == n || seed.eigenvalues[k] - seed.eigenvalues[k + 1] > gap_cut;
            if last {
                for i in cluster_start..=k {
                    for j in cluster_start..=k {
                        pairs.push((i, j));
                    }
                }
                cluster_start = k + 1;
            }
        }
        let mut candidates = CMatrix::zeros(n * n, pairs.len());
        for (col, &(i, j)) in pairs.iter().enumerate() {
            let u = seed.eigenvectors.column(i).into_owned();
            let v = seed.eigenvectors.column(j).into_owned();
            let outer = &u * v.adjoint();
            candidates.set_column(col, &CVector::from_iterator(n * n, outer.iter().copied()));
        }

        // Basis elements have squared Frobenius norm n under the normalized
        // trace convention, so n is the spectral scale of each constraint
        // Gram; a commutator block below the null cutoff at that scale makes
        // the solve a no-op.
        let scale = n as f64;
        for b in &self.basis {
            let width = candidates.ncols();
            if width == 0 {
                break;
            }
            let mut comms = CMatrix::zeros(n * n, width);
            for col in 0..width {
                let x = CMatrix::from_iterator(n, n, candidates.column(col).iter().copied());
                let bracket = b * &x - &x * b;
                comms.set_column(col, &CVector::from_iterator(n * n, bracket.iter().copied()));
            }
            if comms.norm_squared() <= self.tol.rank_rel * scale {
                continue;
            }
            let gram = comms.adjoint() * &comms;
            let null = null_space_with_floor(&gram, scale, &self.tol)?;
            candidates = &candidates * null.basis();
        }

        let mats: Vec<CMatrix> = (0..candidates.ncols())
            .map(|col| CMatrix::from_iterator(n, n, candidates.column(col).iter().copied()))
            .collect();
        CStarAlgebra::from_spanning_set(&mats, n, self.tol.clone())
    }

    /// Commutant applied twice; must reproduce the original span.
    pub fn double_commutant(&self) -> Result<CStarAlgebra> {
        let cc = self.commutant()?.commutant()?;
        if cc.dim() != self.dim() {
            return Err(Error::BicommutantMismatch {
                expected: self.dim(),
                got: cc.dim(),
            });
        }
        for b in &self.basis {
            let res = cc.projection_residual(b)?;
            if res > 10.0 * self.tol.eq_abs {
                return Err(Error::NotInAlgebra { residual: res });
            }
        }
        Ok(cc)
    }

    /// Intersection of the algebra with its commutant.
    pub fn center(&self) -> Result<CStarAlgebra> {
        let commutant = self.commutant()?;
        let n = self.ambient_dim;
        let p_self = &self.basis_stack * self.basis_stack.adjoint();
        let p_comm = &commutant.basis_stack * commutant.basis_stack.adjoint();
        let identity = CMatrix::identity(n * n, n * n);
        let h = (&identity - p_self) + (&identity - p_comm);
        // Projector-sum eigenvalues live in [0, 2]; floor at 1 so the rank
        // cut stays meaningful even when h is (near) zero.
        let null = null_space_with_floor(&h, 1.0, &self.tol)?;
        let mats: Vec<CMatrix> = (0..null.dim())
            .map(|j| {
                let col: CVector = null.basis().column(j).into_owned();
                unvec_scaled(&col, n)
            })
            .collect();
        CStarAlgebra::from_spanning_set(&mats, n, self.tol.clone())
    }

    /// True when all basis elements commute with each other.
    pub fn is_abelian(&self) -> bool {
        let d = self.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                let diff = self.left_mult[i].column(j) - self.left_mult[j].column(i);
                if diff.norm() > 10.0 * self.tol.eq_abs {
                    return false;
                }
            }
        }
        true
    }

    fn check_ambient(&self, a: &CMatrix) -> Result<()> {
        if a.nrows() != self.ambient_dim || a.ncols() != self.ambient_dim {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "expected a {n}x{n} matrix, got {r}x{c}",
                    n = self.ambient_dim,
                    r = a.nrows(),
                    c = a.ncols()
                ),
            });
        }
        Ok(())
    }
}

/// `a (x) b` on the tensor product, with the left factor varying slowest.
///
/// Thin wrapper so callers do not depend on the backing linear-algebra crate
/// for the one Kronecker product they need when assembling composite systems.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
