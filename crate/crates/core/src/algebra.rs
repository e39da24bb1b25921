//! Generated C*-algebras, commutants, centres and the central decomposition
//! `C*(S) = A_1 ⊕ ... ⊕ A_N`, `A_k ≅ M_{n_k}`, with explicit irreducible
//! representations.

use crate::error::{Error, Result};
use crate::matlin::{
    frob_norm, herm_eigen, identity, inner, psd_kernel, unvec_rowmajor, zeros, CMatrix,
    MatrixSubspace, C64, DEFAULT_TOL_RANK,
};
use crate::rng;

/// A unital `*`-closed subalgebra of `M_n`.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    space: MatrixSubspace,
}

impl StarAlgebra {
    pub fn space(&self) -> &MatrixSubspace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    /// Relative membership test used for algebra elements.
    pub fn contains(&self, x: &CMatrix) -> bool {
        self.space.contains(x, MEMBERSHIP_TOL)
    }

    /// Largest residual of `b_i b_j`, `b_i*` and `1` against the span.
    pub fn closure_residual(&self) -> f64 {
        let b = self.space.basis();
        let mut worst = self.space.residual(&identity(self.ambient_dim()));
        for x in b {
            worst = worst.max(self.space.residual(&x.adjoint()));
            for y in b {
                worst = worst.max(self.space.residual(&(x * y)));
            }
        }
        worst
    }
}

/// Relative residual accepted when checking that a matrix lies in an algebra.
pub const MEMBERSHIP_TOL: f64 = 1e-7;

/// Unit/`*`-closure tolerance for inputs to [`generate_algebra`].
pub const STRUCTURE_TOL: f64 = 1e-8;

/// `{x : x b = b x for all basis elements b}`.
pub fn commutant(s: &MatrixSubspace, tol_rank: f64) -> Result<MatrixSubspace> {
    let n = s.ambient_dim();
    let nn = n * n;
    // Gram matrix of the stacked linear map x ↦ (x b_i - b_i x)_i on row-major vec(x).
    let mut gram = zeros(nn, nn);
    for b in s.basis() {
        let mut l = zeros(nn, nn);
        for i in 0..n {
            for j in 0..n {
                let row = i * n + j;
                for t in 0..n {
                    // (x b)_ij = Σ_t x_it b_tj
                    l[(row, i * n + t)] += b[(t, j)];
                    // (b x)_ij = Σ_t b_it x_tj
                    l[(row, t * n + j)] -= b[(i, t)];
                }
            }
        }
        gram += l.adjoint() * &l;
    }
    // ‖x b - b x‖ ≤ 2‖b‖‖x‖ bounds the gram matrix by 4 Σ‖b‖²
    let scale: f64 = s.basis().iter().map(|b| 4.0 * b.norm_squared()).sum();
    let kernel = psd_kernel(&gram, tol_rank, scale);
    let mats: Vec<CMatrix> = kernel.iter().map(|v| unvec_rowmajor(v, n, n)).collect();
    MatrixSubspace::orthonormalize_span(n, &mats, tol_rank)
}

/// The C*-algebra generated by a unital `*`-closed subspace: the span of all
/// words in its elements, grown until the dimension stops increasing.
pub fn generate_algebra(s: &MatrixSubspace, tol_rank: f64) -> Result<StarAlgebra> {
    let n = s.ambient_dim();
    if s.dim() == 0 || !s.contains_identity(STRUCTURE_TOL) {
        return Err(Error::InvalidInput(
            "generating subspace must contain the identity".into(),
        ));
    }
    if !s.is_star_closed(STRUCTURE_TOL) {
        return Err(Error::InvalidInput(
            "generating subspace must be closed under adjoints".into(),
        ));
    }
    let rel = tol_rank.sqrt();
    let mut space = MatrixSubspace::zero(n);
    let mut frontier = Vec::new();
    for b in s.basis() {
        if space.push_residual(b.clone(), rel) {
            frontier.push(space.basis().last().unwrap().clone());
        }
    }
    while !frontier.is_empty() && space.dim() < n * n {
        let mut next = Vec::new();
        for f in &frontier {
            for g in s.basis() {
                if space.push_residual(f * g, rel) {
                    next.push(space.basis().last().unwrap().clone());
                }
            }
        }
        frontier = next;
    }
    Ok(StarAlgebra { space })
}

/// Centre of the algebra: elements of `a` commuting with `a`.
pub fn center(a: &StarAlgebra, tol_rank: f64) -> Result<MatrixSubspace> {
    let basis = a.space().basis();
    let dim = basis.len();
    // commutators [a_l, a_i] for every pair; Gram over the coefficient vector c
    let comms: Vec<Vec<CMatrix>> = basis
        .iter()
        .map(|al| basis.iter().map(|ai| al * ai - ai * al).collect())
        .collect();
    let mut gram = zeros(dim, dim);
    for l in 0..dim {
        for m in l..dim {
            let g: C64 = (0..dim).map(|i| inner(&comms[l][i], &comms[m][i])).sum();
            gram[(l, m)] = g;
            gram[(m, l)] = g.conj();
        }
    }
    let scale: f64 = basis.iter().map(|b| 4.0 * b.norm_squared()).sum();
    let kernel = psd_kernel(&gram, tol_rank, scale);
    let n = a.ambient_dim();
    let mats: Vec<CMatrix> = kernel
        .iter()
        .map(|c| {
            let mut x = zeros(n, n);
            for (l, b) in basis.iter().enumerate() {
                x += b * c[l];
            }
            x
        })
        .collect();
    MatrixSubspace::orthonormalize_span(n, &mats, tol_rank)
}

/// One full matrix block `A_k ≅ M_{n_k}` acting with multiplicity `m_k`.
#[derive(Debug, Clone)]
pub struct IrrepBlock {
    pub dim: usize,
    pub multiplicity: usize,
    pub central_projection: CMatrix,
    /// Isometry `W: C^{n_k} ⊗ C^{m_k} → C^n` with `W* x W = π_k(x) ⊗ 1` for `x` in the algebra.
    /// Columns are ordered `i·m_k + l`.
    pub isometry: CMatrix,
    /// Smallest ambient index in the support of the central projection.
    pub anchor: usize,
}

impl IrrepBlock {
    /// `π_k(x)` for `x` in the algebra (averaged over the multiplicity copies).
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let (d, m) = (self.dim, self.multiplicity);
        let c = self.isometry.adjoint() * x * &self.isometry;
        let scale = C64::new(1.0 / m as f64, 0.0);
        CMatrix::from_fn(d, d, |i, j| {
            (0..m).map(|l| c[(i * m + l, j * m + l)]).sum::<C64>() * scale
        })
    }

    /// `W (y ⊗ 1_m) W*`.
    pub fn embed(&self, y: &CMatrix) -> CMatrix {
        let m = self.multiplicity;
        let big = y.kronecker(&identity(m));
        &self.isometry * big * self.isometry.adjoint()
    }
}

/// Central decomposition of a [`StarAlgebra`].
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub ambient_dim: usize,
    pub blocks: Vec<IrrepBlock>,
}

impl BlockDecomposition {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.multiplicity).collect()
    }

    pub fn central_projections(&self) -> Vec<&CMatrix> {
        self.blocks.iter().map(|b| &b.central_projection).collect()
    }

    /// `π_k(x)` without membership checks.
    pub fn pi(&self, k: usize, x: &CMatrix) -> CMatrix {
        self.blocks[k].apply(x)
    }

    /// `Σ_k W_k (π_k(x) ⊗ 1) W_k*`; equals `x` on the algebra.
    pub fn reconstruct(&self, images: &[CMatrix]) -> CMatrix {
        let mut out = zeros(self.ambient_dim, self.ambient_dim);
        for (b, y) in self.blocks.iter().zip(images) {
            out += b.embed(y);
        }
        out
    }

    /// Reorders blocks so that new block `i` is old block `order[i]`.
    pub fn reorder(&mut self, order: &[usize]) {
        let old = std::mem::take(&mut self.blocks);
        self.blocks = order.iter().map(|&i| old[i].clone()).collect();
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub tol_rank: f64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            tol_rank: DEFAULT_TOL_RANK,
            seed: 0,
            max_attempts: 5,
        }
    }
}

/// Spectral clusters of an ascending spectrum; `gap` is the absolute split threshold.
fn clusters(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Smallest gap between consecutive clusters relative to the spread.
fn relative_separation(values: &[f64], cl: &[std::ops::Range<usize>]) -> f64 {
    let spread = (values.last().unwrap() - values[0]).max(1e-300);
    cl.windows(2)
        .map(|w| (values[w[1].start] - values[w[0].end - 1]) / spread)
        .fold(f64::INFINITY, f64::min)
}

// Eigenvalue clusters closer than this (relative to the spread) are merged;
// separations below MIN_SEPARATION trigger a retry with fresh randomness.
const CLUSTER_REL: f64 = 1e-7;
const MIN_SEPARATION: f64 = 1e-4;

/// Splits the algebra into its central summands and builds matrix units for each.
pub fn block_decompose(a: &StarAlgebra, opts: DecomposeOptions) -> Result<BlockDecomposition> {
    let n = a.ambient_dim();
    let z = center(a, opts.tol_rank)?;
    let z_herm = z.hermitian_basis(opts.tol_rank);
    let want = z.dim();
    let mut last_detail = String::new();
    for attempt in 0..opts.max_attempts {
        let mut r = rng::derive(opts.seed, &[0xa1, attempt as u64]);
        let mut h = zeros(n, n);
        for b in &z_herm {
            h += b * C64::new(rng::gaussian(&mut r), 0.0);
        }
        let eig = herm_eigen(&h);
        let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cl = if want == 1 {
            std::iter::once(0..n).collect()
        } else {
            clusters(&eig.values, CLUSTER_REL * scale.max(1e-300))
        };
        if cl.len() != want {
            last_detail = format!("central element split into {} clusters, centre has dim {want}", cl.len());
            continue;
        }
        if cl.len() > 1 && relative_separation(&eig.values, &cl) < MIN_SEPARATION {
            last_detail = "central spectrum clustered".into();
            continue;
        }
        let mut blocks = Vec::with_capacity(cl.len());
        let mut failed = None;
        for (bi, range) in cl.iter().enumerate() {
            let v = eig.vectors.columns(range.start, range.len()).into_owned();
            let p = &v * v.adjoint();
            match build_block(a, &v, p, opts, attempt, bi) {
                Ok(b) => blocks.push(b),
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            last_detail = e.to_string();
            continue;
        }
        let total: usize = blocks.iter().map(|b| b.dim * b.dim).sum();
        if total != a.dim() {
            last_detail = format!("block dimensions account for {total} of {}", a.dim());
            continue;
        }
        blocks.sort_by_key(|b| (b.dim, b.anchor));
        return Ok(BlockDecomposition {
            ambient_dim: n,
            blocks,
        });
    }
    Err(Error::DegenerateSpectrum {
        attempts: opts.max_attempts,
        detail: last_detail,
    })
}

fn build_block(
    a: &StarAlgebra,
    range_basis: &CMatrix,
    p: CMatrix,
    opts: DecomposeOptions,
    attempt: usize,
    block_index: usize,
) -> Result<IrrepBlock> {
    let n = a.ambient_dim();
    let rank = range_basis.ncols();
    let compressed: Vec<CMatrix> = a.space().basis().iter().map(|b| b * &p).collect();
    let block_space = MatrixSubspace::orthonormalize_span(n, &compressed, opts.tol_rank)?;
    let bdim = block_space.dim();
    let nk = (bdim as f64).sqrt().round() as usize;
    if nk * nk != bdim || nk == 0 || !rank.is_multiple_of(nk) {
        return Err(Error::DegenerateSpectrum {
            attempts: attempt + 1,
            detail: format!("summand of dimension {bdim} on a rank-{rank} projection is not a full matrix block"),
        });
    }
    let mult = rank / nk;
    let anchor = (0..n).find(|&i| p[(i, i)].re > 1e-6).unwrap_or(0);
    if nk == 1 {
        return Ok(IrrepBlock {
            dim: 1,
            multiplicity: mult,
            central_projection: p,
            isometry: range_basis.clone(),
            anchor,
        });
    }
    let mut r = rng::derive(opts.seed, &[0xb2, attempt as u64, block_index as u64]);
    let herm = block_space.hermitian_basis(opts.tol_rank);
    let mut h = zeros(n, n);
    for b in &herm {
        h += b * C64::new(rng::gaussian(&mut r), 0.0);
    }
    // spectrum of h on the range of p
    let hc = range_basis.adjoint() * &h * range_basis;
    let eig = herm_eigen(&hc);
    let spread = eig.values.last().unwrap() - eig.values[0];
    let cl = clusters(&eig.values, CLUSTER_REL * spread.max(1e-12));
    if cl.len() != nk || cl.iter().any(|c| c.len() != mult) {
        return Err(Error::DegenerateSpectrum {
            attempts: attempt + 1,
            detail: "block element did not split into matrix units".into(),
        });
    }
    if relative_separation(&eig.values, &cl) < MIN_SEPARATION {
        return Err(Error::DegenerateSpectrum {
            attempts: attempt + 1,
            detail: "block spectrum clustered".into(),
        });
    }
    let frames: Vec<CMatrix> = cl
        .iter()
        .map(|c| range_basis * eig.vectors.columns(c.start, c.len()))
        .collect();
    let projs: Vec<CMatrix> = frames.iter().map(|f| f * f.adjoint()).collect();
    // generic element of the block to connect the minimal projections
    let mut x = zeros(n, n);
    for b in block_space.basis() {
        x += b * rng::complex_gaussian(&mut r);
    }
    let xi = &frames[0];
    let mut iso = zeros(n, nk * mult);
    for i in 0..nk {
        let v = &projs[i] * &x * &projs[0];
        let vv = v.adjoint() * &v;
        let c = inner(&projs[0], &vv).re / mult as f64;
        let resid = frob_norm(&(&vv - &projs[0] * C64::new(c, 0.0)));
        if c <= 1e-10 || resid > 1e-6 * c.max(1.0) {
            return Err(Error::DegenerateSpectrum {
                attempts: attempt + 1,
                detail: "partial isometry between matrix units degenerate".into(),
            });
        }
        let e_i1 = v / C64::new(c.sqrt(), 0.0);
        let cols = &e_i1 * xi;
        for l in 0..mult {
            iso.column_mut(i * mult + l).copy_from(&cols.column(l));
        }
    }
    Ok(IrrepBlock {
        dim: nk,
        multiplicity: mult,
        central_projection: p,
        isometry: iso,
        anchor,
    })
}

/// `π_k` applied entrywise to a `p×p` cell array, assembled into one matrix.
/// Cells must lie in the algebra.
pub fn apply_irrep(
    alg: &StarAlgebra,
    dec: &BlockDecomposition,
    k: usize,
    cells: &[Vec<CMatrix>],
) -> Result<CMatrix> {
    if k >= dec.num_blocks() {
        return Err(Error::InvalidInput(format!("block index {k} out of range")));
    }
    let mut imgs = Vec::with_capacity(cells.len());
    for row in cells {
        let mut out = Vec::with_capacity(row.len());
        for x in row {
            if x.shape() != (alg.ambient_dim(), alg.ambient_dim()) {
                return Err(Error::InvalidInput("cell has wrong size".into()));
            }
            if !alg.contains(x) {
                return Err(Error::InvalidInput("cell does not lie in the algebra".into()));
            }
            out.push(dec.pi(k, x));
        }
        imgs.push(out);
    }
    crate::matlin::assemble_block(&imgs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{diag_real, matrix_unit, pauli, DEFAULT_TOL_RANK as TOL};

    fn span(n: usize, m: &[CMatrix]) -> MatrixSubspace {
        MatrixSubspace::orthonormalize_span(n, m, TOL).unwrap()
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(commutant(&span(2, &[identity(2)]), TOL).unwrap().dim(), 4);
        assert_eq!(commutant(&MatrixSubspace::full(2), TOL).unwrap().dim(), 1);
        let diag = span(2, &[matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]);
        let c = commutant(&diag, TOL).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(c.same_span(&diag, 1e-10));
    }

    #[test]
    fn generate_examples() {
        let a = generate_algebra(&span(2, &[identity(2), pauli::x()]), TOL).unwrap();
        assert_eq!(a.dim(), 2);
        let a = generate_algebra(
            &span(2, &[identity(2), matrix_unit(2, 0, 1), matrix_unit(2, 1, 0)]),
            TOL,
        )
        .unwrap();
        assert_eq!(a.dim(), 4);
        let a = generate_algebra(&span(3, &[identity(3), diag_real(&[0., 1., 2.])]), TOL).unwrap();
        assert_eq!(a.dim(), 3);
        assert!(a.closure_residual() < 1e-10);
    }

    #[test]
    fn generate_rejects_non_unital_or_non_star() {
        assert!(generate_algebra(&span(2, &[pauli::x()]), TOL).is_err());
        assert!(generate_algebra(&span(2, &[identity(2), matrix_unit(2, 0, 1)]), TOL).is_err());
    }

    #[test]
    fn decompose_full_and_diagonal() {
        let full = generate_algebra(&MatrixSubspace::full(3), TOL).unwrap();
        let d = block_decompose(&full, DecomposeOptions::default()).unwrap();
        assert_eq!(d.block_dims(), vec![3]);
        assert_eq!(d.multiplicities(), vec![1]);

        let diag = generate_algebra(&span(3, &[identity(3), diag_real(&[0., 1., 2.])]), TOL).unwrap();
        let d = block_decompose(&diag, DecomposeOptions::default()).unwrap();
        assert_eq!(d.block_dims(), vec![1, 1, 1]);
        // blocks follow the diagonal order through the anchor tie-break
        let x = diag_real(&[0., 1., 2.]);
        for k in 0..3 {
            assert!((d.pi(k, &x)[(0, 0)].re - k as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn decompose_with_multiplicity() {
        // {a ⊕ a : a ∈ M_2}
        let gens: Vec<CMatrix> = (0..2)
            .flat_map(|i| (0..2).map(move |j| crate::matlin::direct_sum(&[matrix_unit(2, i, j), matrix_unit(2, i, j)])))
            .collect();
        let a = generate_algebra(&span(4, &gens), TOL).unwrap();
        assert_eq!(commutant(a.space(), TOL).unwrap().dim(), 4);
        assert_eq!(center(&a, TOL).unwrap().dim(), 1);
        let d = block_decompose(&a, DecomposeOptions::default()).unwrap();
        assert_eq!(d.block_dims(), vec![2]);
        assert_eq!(d.multiplicities(), vec![2]);
        // π(a ⊕ a) is unitarily equivalent to a
        let y = pauli::z() + pauli::x() * C64::new(0.3, 0.0);
        let img = d.pi(0, &crate::matlin::direct_sum(&[y.clone(), y.clone()]));
        let ev = herm_eigen(&img).values;
        let ey = herm_eigen(&y).values;
        assert!((ev[0] - ey[0]).abs() < 1e-9 && (ev[1] - ey[1]).abs() < 1e-9);
    }

    #[test]
    fn apply_irrep_checks_membership() {
        let diag = generate_algebra(&span(3, &[identity(3), diag_real(&[0., 1., 2.])]), TOL).unwrap();
        let d = block_decompose(&diag, DecomposeOptions::default()).unwrap();
        let x = diag_real(&[0., 1., 2.]);
        let one = apply_irrep(&diag, &d, 1, &[vec![x.clone()]]).unwrap();
        assert!((one[(0, 0)].re - 1.0).abs() < 1e-12);
        let id = apply_irrep(&diag, &d, 2, &[vec![identity(3)]]).unwrap();
        assert!((id[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(apply_irrep(&diag, &d, 0, &[vec![matrix_unit(3, 0, 1)]]).is_err());
        assert!(apply_irrep(&diag, &d, 7, &[vec![x]]).is_err());
    }

    #[test]
    fn rotated_commutative_algebra_is_its_own_centre() {
        let mut r = crate::rng::derive(0, &[1]);
        let w = crate::rng::unitary(2, &mut r);
        let x = &w * diag_real(&[0.3, -1.2]) * w.adjoint();
        let a = generate_algebra(&span(2, &[identity(2), x]), TOL).unwrap();
        assert_eq!(center(&a, TOL).unwrap().dim(), 2);
        assert_eq!(block_decompose(&a, DecomposeOptions::default()).unwrap().block_dims(), vec![1, 1]);
    }
}
