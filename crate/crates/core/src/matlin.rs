//! Dense complex matrix kernel shared by every other module.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Subspaces of
//! `M_n` are stored as trace-orthonormal bases, i.e. orthonormal for
//! `<A, B> = tr(A* B)`.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

/// Relative numerical-rank threshold against the largest Gram eigenvalue.
pub const DEFAULT_TOL_RANK: f64 = 1e-9;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Matrix unit `E_ij` in `M_n` (zero based).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Builds a complex matrix from real row-major entries.
pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| C64::new(entries[i * cols + j], 0.0))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Pauli matrices and the Hadamard gate, used all over the tests and examples.
pub mod pauli {
    use super::{c64, CMatrix};

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
    }
    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
    }
    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)])
    }
    pub fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c64(s, 0.), c64(s, 0.), c64(s, 0.), c64(-s, 0.)])
    }
}

/// Trace inner product `tr(a* b)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Re tr(a b)` for hermitian `a`, i.e. the real pairing used by the SDP layer.
pub fn real_pairing(a: &CMatrix, b: &CMatrix) -> f64 {
    // tr(a b) = sum_ij a_ij b_ji
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)];
            let y = b[(j, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

pub fn frob_norm(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// `(a - a*) / 2i`, so that `a = re + i·im` with both parts hermitian.
pub fn skew_part_as_hermitian(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()) * C64::new(0.0, -0.5)
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && max_abs(&(a - a.adjoint())) <= tol
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn conj(a: &CMatrix) -> CMatrix {
    a.map(|x| x.conj())
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if is_finite(a) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

fn max_singular(values: &DVector<f64>) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    check_finite(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(max_singular(&a.singular_values()))
}

/// Operator norm without the finiteness check, for inner loops on trusted data.
pub(crate) fn norm2(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    max_singular(&a.singular_values())
}

/// Top singular value together with the averaged subgradient `Σ u_i v_i* / t`
/// over the `t` singular pairs tied with the maximum (relative tolerance `tie`).
pub fn norm_subgradient(a: &CMatrix, tie: f64) -> (f64, CMatrix) {
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let smax = max_singular(&svd.singular_values);
    let mut grad = zeros(a.nrows(), a.ncols());
    let mut count = 0usize;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s >= smax * (1.0 - tie) {
            // a = Σ s u_i v_i*, v_t rows are v_i*
            grad += u.column(i) * v_t.row(i);
            count += 1;
        }
    }
    if count > 0 {
        grad /= C64::new(count as f64, 0.0);
    }
    (smax, grad)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: CMatrix,
}

pub fn herm_eigen(a: &CMatrix) -> HermEigen {
    let n = a.nrows();
    if n == 0 {
        return HermEigen {
            values: vec![],
            vectors: zeros(0, 0),
        };
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermEigen { values, vectors }
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    herm_eigen(a).values[0]
}

/// Applies a real function to the spectrum of a hermitian matrix.
pub fn herm_fn(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let e = herm_eigen(a);
    let n = a.nrows();
    let mut out = zeros(n, n);
    for (k, &l) in e.values.iter().enumerate() {
        let col = e.vectors.column(k);
        out += col * col.adjoint() * C64::new(f(l), 0.0);
    }
    out
}

/// `exp(i·t·h)` for hermitian `h`.
pub fn exp_i_herm(h: &CMatrix, t: f64) -> CMatrix {
    let e = herm_eigen(h);
    let n = h.nrows();
    let mut out = zeros(n, n);
    for (k, &l) in e.values.iter().enumerate() {
        let col = e.vectors.column(k);
        out += col * col.adjoint() * C64::from_polar(1.0, t * l);
    }
    out
}

/// Unitary polar factor of a square matrix.
pub fn polar_unitary(a: &CMatrix) -> CMatrix {
    let svd = SVD::new(a.clone(), true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Orthonormal basis of the kernel of a complex matrix; a singular value
/// counts as zero when `s² <= tol_rank · s_max²`.
pub fn complex_nullspace(m: &CMatrix, tol_rank: f64) -> Vec<CVector> {
    let cols = m.ncols();
    if cols == 0 {
        return vec![];
    }
    let padded = if m.nrows() < cols {
        let mut p = zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = max_singular(&svd.singular_values);
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax == 0.0 || s * s <= tol_rank * smax * smax {
            out.push(v_t.row(i).adjoint());
        }
    }
    out
}

/// Orthonormal basis (as columns) of the kernel of a real matrix.
pub fn real_nullspace(m: &RMatrix, tol_rank: f64) -> RMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return RMatrix::zeros(0, 0);
    }
    let padded = if m.nrows() < cols {
        let mut p = RMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = max_singular(&svd.singular_values);
    let idx: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s * s <= tol_rank * smax * smax)
        .map(|(i, _)| i)
        .collect();
    RMatrix::from_fn(cols, idx.len(), |r, c| v_t[(idx[c], r)])
}

/// Orthonormal basis (as columns) of the column space of a real matrix.
pub fn real_range(m: &RMatrix, tol_rank: f64) -> RMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return RMatrix::zeros(m.nrows(), 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("u requested");
    let smax = max_singular(&svd.singular_values);
    let idx: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax > 0.0 && s * s > tol_rank * smax * smax)
        .map(|(i, _)| i)
        .collect();
    RMatrix::from_fn(m.nrows(), idx.len(), |r, c| u[(r, idx[c])])
}

/// Assembles a `p×p` array of equally sized `m×m` cells into a `pm×pm` matrix.
pub fn assemble_block(cells: &[Vec<CMatrix>]) -> Result<CMatrix> {
    let p = cells.len();
    if p == 0 {
        return Err(Error::InvalidInput("empty cell array".into()));
    }
    let (r, c) = cells[0]
        .first()
        .map(|m| m.shape())
        .ok_or_else(|| Error::InvalidInput("empty cell row".into()))?;
    for row in cells {
        if row.len() != p {
            return Err(Error::InvalidInput("cell array is not square".into()));
        }
        if row.iter().any(|m| m.shape() != (r, c)) {
            return Err(Error::InvalidInput("ragged cells".into()));
        }
    }
    let mut out = zeros(p * r, p * c);
    for (i, row) in cells.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            out.view_mut((i * r, j * c), (r, c)).copy_from(m);
        }
    }
    Ok(out)
}

pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Diagonal block `k` of a block-diagonal matrix with the given block sizes.
pub fn diagonal_block(a: &CMatrix, sizes: &[usize], k: usize) -> CMatrix {
    let off: usize = sizes[..k].iter().sum();
    a.view((off, off), (sizes[k], sizes[k])).into_owned()
}

// Real coordinates of hermitian matrices: diagonal entries, then for each
// pair a < b the coordinates sqrt2·Re x_ab and sqrt2·Im x_ab. The map is an
// isometry from (Herm(m), Re tr(A B)) onto R^{m²}.

pub fn herm_to_vec(a: &CMatrix, out: &mut [f64]) {
    let m = a.nrows();
    debug_assert_eq!(out.len(), m * m);
    let s2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for i in 0..m {
        out[k] = a[(i, i)].re;
        k += 1;
    }
    for i in 0..m {
        for j in (i + 1)..m {
            // symmetrise on the fly so slightly non-hermitian inputs map to their hermitian part
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[k] = s2 * z.re;
            out[k + 1] = s2 * z.im;
            k += 2;
        }
    }
}

pub fn herm_from_vec(m: usize, v: &[f64]) -> CMatrix {
    debug_assert_eq!(v.len(), m * m);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        a[(i, i)] = C64::new(v[i], 0.0);
        k += 1;
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let z = C64::new(v[k] * s, v[k + 1] * s);
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
            k += 2;
        }
    }
    a
}

/// A linear subspace of `M_n` held as a trace-orthonormal basis.
#[derive(Debug, Clone)]
pub struct MatrixSubspace {
    n: usize,
    basis: Vec<CMatrix>,
}

impl MatrixSubspace {
    pub fn zero(n: usize) -> Self {
        MatrixSubspace { n, basis: vec![] }
    }

    /// All of `M_n`, spanned by the matrix units.
    pub fn full(n: usize) -> Self {
        let basis = (0..n)
            .flat_map(|i| (0..n).map(move |j| matrix_unit(n, i, j)))
            .collect();
        MatrixSubspace { n, basis }
    }

    /// Orthonormal basis of `span(spanning)`. The dimension is the numerical
    /// rank of the Gram matrix at relative threshold `tol_rank`.
    pub fn orthonormalize_span(n: usize, spanning: &[CMatrix], tol_rank: f64) -> Result<Self> {
        for m in spanning {
            if m.shape() != (n, n) {
                return Err(Error::InvalidInput(format!(
                    "expected {n}x{n} matrices, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_finite(m)?;
        }
        let k = spanning.len();
        if k == 0 {
            return Ok(Self::zero(n));
        }
        let gram = CMatrix::from_fn(k, k, |i, j| inner(&spanning[i], &spanning[j]));
        let eig = herm_eigen(&gram);
        let lmax = eig.values.last().copied().unwrap_or(0.0);
        if lmax <= 0.0 {
            return Ok(Self::zero(n));
        }
        let mut candidates = Vec::new();
        for idx in (0..k).rev() {
            let l = eig.values[idx];
            if l <= tol_rank * lmax {
                break;
            }
            let mut m = zeros(n, n);
            for (i, s) in spanning.iter().enumerate() {
                // ‖Σ v_i s_i‖² = v* G v = λ
                m += s * eig.vectors[(i, idx)];
            }
            candidates.push(m);
        }
        // Cleanup pass: the Gram route fixes the rank, Gram-Schmidt fixes orthonormality.
        let mut out = Self::zero(n);
        for c in candidates {
            out.push_residual(c, 0.0);
        }
        Ok(out)
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Coefficients of the orthogonal projection of `x` in this basis.
    pub fn coords(&self, x: &CMatrix) -> Vec<C64> {
        self.basis.iter().map(|b| inner(b, x)).collect()
    }

    pub fn project(&self, x: &CMatrix) -> CMatrix {
        let mut p = zeros(self.n, self.n);
        for b in &self.basis {
            p += b * inner(b, x);
        }
        p
    }

    /// Frobenius distance from `x` to the subspace.
    pub fn residual(&self, x: &CMatrix) -> f64 {
        frob_norm(&(x - self.project(x)))
    }

    /// `x` lies in the subspace up to a relative Frobenius residual `tol`.
    pub fn contains(&self, x: &CMatrix, tol: f64) -> bool {
        self.residual(x) <= tol * frob_norm(x).max(1.0)
    }

    /// Appends the component of `x` orthogonal to the current basis when its
    /// norm relative to `‖x‖` exceeds `rel_tol`. Returns whether it was added.
    pub fn push_residual(&mut self, x: CMatrix, rel_tol: f64) -> bool {
        let norm_x = frob_norm(&x);
        if norm_x == 0.0 {
            return false;
        }
        let mut r = x;
        for _ in 0..2 {
            for b in &self.basis {
                let c = inner(b, &r);
                r -= b * c;
            }
        }
        let nr = frob_norm(&r);
        if nr <= rel_tol * norm_x || nr == 0.0 {
            return false;
        }
        self.basis.push(r / C64::new(nr, 0.0));
        true
    }

    /// Largest residual of projecting either basis into the other span.
    pub fn mutual_projection_residual(&self, other: &MatrixSubspace) -> f64 {
        let a = self.basis.iter().map(|b| other.residual(b));
        let b = other.basis.iter().map(|b| self.residual(b));
        a.chain(b).fold(0.0, f64::max)
    }

    pub fn same_span(&self, other: &MatrixSubspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.mutual_projection_residual(other) <= tol
    }

    pub fn contains_identity(&self, tol: f64) -> bool {
        self.contains(&identity(self.n), tol)
    }

    pub fn is_star_closed(&self, tol: f64) -> bool {
        self.basis.iter().all(|b| self.contains(&b.adjoint(), tol))
    }

    /// Real orthonormal basis of the hermitian part, for `*`-closed subspaces
    /// (orthonormal for `Re tr(A B)`).
    pub fn hermitian_basis(&self, tol_rank: f64) -> Vec<CMatrix> {
        let mut herm = RealHermSpan::new(self.n);
        let floor = tol_rank.sqrt();
        for b in &self.basis {
            let nb = frob_norm(b);
            for part in [hermitian_part(b), skew_part_as_hermitian(b)] {
                // parts that are pure rounding noise must not seed new directions
                if frob_norm(&part) > floor * nb {
                    herm.push(part, tol_rank);
                }
            }
        }
        herm.basis
    }

    /// Image under `x ↦ f(x)` of the basis, re-orthonormalised.
    pub fn map(&self, n_out: usize, f: impl Fn(&CMatrix) -> CMatrix, tol_rank: f64) -> Result<Self> {
        let imgs: Vec<CMatrix> = self.basis.iter().map(f).collect();
        Self::orthonormalize_span(n_out, &imgs, tol_rank)
    }
}

/// Real span of hermitian matrices under `Re tr(A B)`, built by Gram-Schmidt.
#[derive(Debug, Clone)]
pub struct RealHermSpan {
    pub n: usize,
    pub basis: Vec<CMatrix>,
}

impl RealHermSpan {
    pub fn new(n: usize) -> Self {
        RealHermSpan { n, basis: vec![] }
    }

    /// Adds the orthogonal residual of hermitian `h` when its relative norm
    /// exceeds `sqrt(tol_rank)`.
    pub fn push(&mut self, h: CMatrix, tol_rank: f64) -> bool {
        let nh = frob_norm(&h);
        if nh == 0.0 {
            return false;
        }
        let mut r = h;
        for _ in 0..2 {
            for b in &self.basis {
                let c = real_pairing(b, &r);
                r -= b * C64::new(c, 0.0);
            }
        }
        let nr = frob_norm(&r);
        if nr <= tol_rank.sqrt() * nh {
            return false;
        }
        self.basis.push(r / C64::new(nr, 0.0));
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Kernel of a hermitian positive semidefinite matrix: eigenvectors whose
/// eigenvalue is at most `tol_rank · max(λ_max, scale)`, where `scale` is the
/// size `g` would have without cancellation (all of them when both vanish).
pub fn psd_kernel(g: &CMatrix, tol_rank: f64, scale: f64) -> Vec<CVector> {
    let e = herm_eigen(g);
    let lmax = e.values.last().copied().unwrap_or(0.0).max(scale);
    e.values
        .iter()
        .enumerate()
        .filter(|(_, &l)| lmax <= 0.0 || l <= tol_rank * lmax)
        .map(|(i, _)| e.vectors.column(i).into_owned())
        .collect()
}

/// Row-major vectorisation.
pub fn vec_rowmajor(x: &CMatrix) -> CVector {
    let (r, c) = x.shape();
    CVector::from_fn(r * c, |k, _| x[(k / c, k % c)])
}

pub fn unvec_rowmajor(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}
