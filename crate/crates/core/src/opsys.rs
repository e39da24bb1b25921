//! Operator systems and parameterizing sequences.
//!
//! The parameter space is always `Z = C^d` with coordinatewise conjugation
//! and unit `(1, ..., 1)`. A [`ParamMap`] is stored through the hermitian
//! images `G_j = Γ(e_j)`, so `Γ(z) = Σ_j z_j G_j`.

use crate::algebra::{self, BlockDecomposition, DecomposeOptions, StarAlgebra};
use crate::choquet::{extension_problem, peak_search, PeakSearch, PeakingCertificate};
use crate::feastool::{find_feasible, Feasibility, DEFAULT_EPS};
use crate::classify::Fingerprint;
use crate::error::{Error, Result};
use crate::rng;
use crate::matlin::{
    assemble_block, direct_sum, frob_norm, hermitian_part, identity, is_finite, matrix_unit,
    max_abs, norm2, real_pairing, vec_rowmajor, zeros, CMatrix, MatrixSubspace, RealHermSpan,
    C64, DEFAULT_TOL_RANK,
};

/// Hermiticity and unitality tolerance for generator tuples.
pub const GENERATOR_TOL: f64 = 1e-10;

/// `Z = C^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarVectorSpace {
    dim: usize,
}

impl StarVectorSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("parameter space must have d ≥ 1".into()));
        }
        Ok(StarVectorSpace { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unit(&self) -> Vec<C64> {
        vec![C64::new(1.0, 0.0); self.dim]
    }

    pub fn conj(&self, z: &[C64]) -> Vec<C64> {
        z.iter().map(|x| x.conj()).collect()
    }

    pub fn basis_vector(&self, j: usize) -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); self.dim];
        e[j] = C64::new(1.0, 0.0);
        e
    }
}

/// A unit- and `*`-preserving linear map `Γ: C^d → M_n`.
#[derive(Debug, Clone)]
pub struct ParamMap {
    source: StarVectorSpace,
    target_dim: usize,
    generators: Vec<CMatrix>,
}

/// Checks hermiticity of every generator and `Σ_j G_j = 1`.
pub fn validate_param_map(generators: Vec<CMatrix>) -> Result<ParamMap> {
    let source = StarVectorSpace::new(generators.len())?;
    let n = generators[0].nrows();
    if n == 0 {
        return Err(Error::InvalidInput("generators must be nonempty matrices".into()));
    }
    let mut sum = zeros(n, n);
    for (j, g) in generators.iter().enumerate() {
        if g.shape() != (n, n) {
            return Err(Error::InvalidInput(format!("generator {j} is not {n}x{n}")));
        }
        if !is_finite(g) {
            return Err(Error::InvalidInput(format!("generator {j} has non-finite entries")));
        }
        let scale = max_abs(g).max(1.0);
        let asym = max_abs(&(g - g.adjoint()));
        if asym > GENERATOR_TOL * scale {
            return Err(Error::StarViolation(format!("generator {j}: ‖G - G*‖ = {asym:.3e}")));
        }
        sum += g;
    }
    let defect = max_abs(&(sum - identity(n)));
    let scale = generators.iter().map(max_abs).fold(1.0, f64::max);
    if defect > GENERATOR_TOL * scale {
        return Err(Error::UnitViolation(format!("‖Σ G_j - 1‖ = {defect:.3e}")));
    }
    Ok(ParamMap {
        source,
        target_dim: n,
        generators: generators.iter().map(hermitian_part).collect(),
    })
}

impl ParamMap {
    pub fn new(generators: Vec<CMatrix>) -> Result<Self> {
        validate_param_map(generators)
    }

    pub fn d(&self) -> usize {
        self.source.dim()
    }

    pub fn source(&self) -> StarVectorSpace {
        self.source
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn apply(&self, z: &[C64]) -> CMatrix {
        let mut out = zeros(self.target_dim, self.target_dim);
        for (g, &c) in self.generators.iter().zip(z) {
            out += g * c;
        }
        out
    }

    /// `(Γ(z_ij))` assembled into one `p·n` square matrix.
    pub fn apply_level(&self, cells: &[Vec<Vec<C64>>]) -> CMatrix {
        let imgs: Vec<Vec<CMatrix>> = cells
            .iter()
            .map(|row| row.iter().map(|z| self.apply(z)).collect())
            .collect();
        assemble_block(&imgs).expect("cell array is square by construction")
    }

    /// The operator system `Γ(Z)`.
    pub fn range(&self, tol_rank: f64) -> MatrixSubspace {
        MatrixSubspace::orthonormalize_span(self.target_dim, &self.generators, tol_rank)
            .expect("generators have a common size")
    }

    /// `U Γ(·) U*`.
    pub fn conjugate(&self, u: &CMatrix) -> ParamMap {
        ParamMap {
            source: self.source,
            target_dim: u.nrows(),
            generators: self
                .generators
                .iter()
                .map(|g| hermitian_part(&(u * g * u.adjoint())))
                .collect(),
        }
    }

    /// `Γ ∘ θ` for a real `d×d` matrix `θ` (columns are images of basis vectors).
    pub fn reparameterize(&self, theta: &nalgebra::DMatrix<f64>) -> ParamMap {
        let d = self.d();
        let generators = (0..d)
            .map(|j| {
                let mut g = zeros(self.target_dim, self.target_dim);
                for i in 0..d {
                    g += &self.generators[i] * C64::new(theta[(i, j)], 0.0);
                }
                g
            })
            .collect();
        ParamMap {
            source: self.source,
            target_dim: self.target_dim,
            generators,
        }
    }
}

/// Outcome of checking one of the properties (i)–(iii).
#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Verified,
    Unverified,
    Failed(String),
}

impl CheckStatus {
    pub fn is_verified(&self) -> bool {
        matches!(self, CheckStatus::Verified)
    }
}

/// A tuple `(Γ_1, ..., Γ_N)` over a common `Z = C^d`.
#[derive(Debug, Clone)]
pub struct ParamSequence {
    maps: Vec<ParamMap>,
    pub irreducible: CheckStatus,
    pub faithful: CheckStatus,
    pub strongly_separated: CheckStatus,
    /// Per-component strong separation certificates (when searched).
    pub separation_certificates: Vec<Option<PeakingCertificate>>,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub tol_rank: f64,
    /// Matrix level cap for the separation search; `None` means `(max n_k)²`.
    pub level_cap: Option<usize>,
    pub budget: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol_rank: DEFAULT_TOL_RANK,
            level_cap: None,
            budget: 200,
            seed: 0,
        }
    }
}

impl ParamSequence {
    pub fn new(maps: Vec<ParamMap>) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::InvalidInput("parameterizing sequence is empty".into()))?;
        let d = first.d();
        if maps.iter().any(|m| m.d() != d) {
            return Err(Error::InvalidInput("maps have different source dimensions".into()));
        }
        let n = maps.len();
        Ok(ParamSequence {
            maps,
            irreducible: CheckStatus::Unverified,
            faithful: CheckStatus::Unverified,
            strongly_separated: CheckStatus::Unverified,
            separation_certificates: vec![None; n],
        })
    }

    pub fn maps(&self) -> &[ParamMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn d(&self) -> usize {
        self.maps[0].d()
    }

    pub fn target_dims(&self) -> Vec<usize> {
        self.maps.iter().map(|m| m.target_dim()).collect()
    }

    /// `⊕_k Γ_k(z)`.
    pub fn apply(&self, z: &[C64]) -> CMatrix {
        direct_sum(&self.maps.iter().map(|m| m.apply(z)).collect::<Vec<_>>())
    }

    /// Rank of `z ↦ ⊕_k Γ_k(z)`.
    pub fn joint_rank(&self, tol_rank: f64) -> usize {
        let d = self.d();
        let rows: usize = self.maps.iter().map(|m| m.target_dim().pow(2)).sum();
        let mut stacked = zeros(rows, d);
        for j in 0..d {
            let mut r = 0;
            for m in &self.maps {
                let v = vec_rowmajor(&m.generators()[j]);
                stacked.view_mut((r, j), (v.len(), 1)).copy_from(&v);
                r += v.len();
            }
        }
        d - crate::matlin::complex_nullspace(&stacked, tol_rank).len()
    }

    /// Checks (i) irreducibility, (ii) faithfulness and (iii) strong separation.
    pub fn verify(&mut self, opts: VerifyOptions) {
        let mut irreducible = CheckStatus::Verified;
        for (k, m) in self.maps.iter().enumerate() {
            let r = m.range(opts.tol_rank);
            match algebra::commutant(&r, opts.tol_rank) {
                Ok(c) if c.dim() == 1 => {}
                Ok(c) => {
                    irreducible = CheckStatus::Failed(format!(
                        "component {k} has a commutant of dimension {}",
                        c.dim()
                    ));
                    break;
                }
                Err(e) => {
                    irreducible = CheckStatus::Failed(e.to_string());
                    break;
                }
            }
        }
        self.irreducible = irreducible;
        let rank = self.joint_rank(opts.tol_rank);
        self.faithful = if rank == self.d() {
            CheckStatus::Verified
        } else {
            CheckStatus::Failed(format!("joint kernel has dimension {}", self.d() - rank))
        };
        let maxn = self.target_dims().into_iter().max().unwrap_or(1);
        let cap = opts.level_cap.unwrap_or(maxn * maxn);
        let mut status = CheckStatus::Verified;
        for k in 0..self.len() {
            if self.len() > 1 {
                // a subordinate component can never peak
                let others: Vec<ParamMap> = (0..self.len()).filter(|&l| l != k).map(|l| self.maps[l].clone()).collect();
                let subordinate = extension_problem(&others, &self.maps[k])
                    .and_then(|sp| find_feasible(&sp, DEFAULT_EPS))
                    .map(|f| matches!(f, Feasibility::Feasible(_)));
                if let Ok(true) = subordinate {
                    status = CheckStatus::Failed(format!("component {k} is subordinate to the others"));
                    self.separation_certificates[k] = None;
                    continue;
                }
            }
            let search = PeakSearch {
                level_cap: cap,
                budget: opts.budget,
                seed: opts.seed,
                tag: k as u64,
                ..PeakSearch::default()
            };
            let cert = peak_search(&self.maps, k, &search);
            if cert.is_none() && status.is_verified() {
                status = CheckStatus::Unverified;
            }
            self.separation_certificates[k] = cert;
        }
        self.strongly_separated = status;
    }

    pub fn all_verified(&self) -> bool {
        self.irreducible.is_verified() && self.faithful.is_verified() && self.strongly_separated.is_verified()
    }
}

/// Selects a component norm or the ambient (direct-sum) norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormSelector {
    Block(usize),
    Ambient,
}

/// `‖(Γ_k(z_ij))‖`, or the ambient norm `max_k ‖(Γ_k(z_ij))‖`.
pub fn level_norm(seq: &ParamSequence, cells: &[Vec<Vec<C64>>], which: NormSelector) -> Result<f64> {
    let p = cells.len();
    if p == 0 || cells.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidInput("cell array must be square and nonempty".into()));
    }
    if cells.iter().flatten().any(|z| z.len() != seq.d()) {
        return Err(Error::InvalidInput(format!("cells must be vectors of length {}", seq.d())));
    }
    match which {
        NormSelector::Block(k) => {
            let m = seq
                .maps()
                .get(k)
                .ok_or_else(|| Error::InvalidInput(format!("block {k} out of range")))?;
            Ok(norm2(&m.apply_level(cells)))
        }
        NormSelector::Ambient => {
            let imgs: Vec<Vec<CMatrix>> = cells
                .iter()
                .map(|row| row.iter().map(|z| seq.apply(z)).collect())
                .collect();
            Ok(norm2(&assemble_block(&imgs)?))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SystemOptions {
    pub tol_rank: f64,
    pub seed: u64,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions {
            tol_rank: DEFAULT_TOL_RANK,
            seed: 0,
        }
    }
}

/// A unital `*`-closed subspace of `M_n` together with its generated
/// C*-algebra and central decomposition.
#[derive(Debug, Clone)]
pub struct OperatorSystem {
    space: MatrixSubspace,
    algebra: StarAlgebra,
    decomposition: BlockDecomposition,
    fingerprints: Vec<Fingerprint>,
    pub options: SystemOptions,
}

impl OperatorSystem {
    pub fn new(space: MatrixSubspace, options: SystemOptions) -> Result<Self> {
        let algebra = algebra::generate_algebra(&space, options.tol_rank)?;
        let mut decomposition = algebra::block_decompose(
            &algebra,
            DecomposeOptions {
                tol_rank: options.tol_rank,
                seed: options.seed,
                ..DecomposeOptions::default()
            },
        )?;
        let prelim: Vec<Fingerprint> = (0..decomposition.num_blocks())
            .map(|k| Fingerprint::of_subspace(&block_space(&space, &decomposition, k, options.tol_rank)))
            .collect();
        let mut order: Vec<usize> = (0..decomposition.num_blocks()).collect();
        order.sort_by(|&a, &b| {
            let (ba, bb) = (&decomposition.blocks[a], &decomposition.blocks[b]);
            ba.dim
                .cmp(&bb.dim)
                .then(prelim[a].canonical_cmp(&prelim[b]))
                .then(ba.anchor.cmp(&bb.anchor))
        });
        decomposition.reorder(&order);
        let fingerprints = order.iter().map(|&i| prelim[i].clone()).collect();
        Ok(OperatorSystem {
            space,
            algebra,
            decomposition,
            fingerprints,
            options,
        })
    }

    /// Builds the system spanned by `spanning` (which must contain the identity
    /// in its span and be closed under adjoints).
    pub fn from_spanning(n: usize, spanning: &[CMatrix], options: SystemOptions) -> Result<Self> {
        let space = MatrixSubspace::orthonormalize_span(n, spanning, options.tol_rank)?;
        Self::new(space, options)
    }

    pub fn space(&self) -> &MatrixSubspace {
        &self.space
    }

    pub fn algebra(&self) -> &StarAlgebra {
        &self.algebra
    }

    pub fn decomposition(&self) -> &BlockDecomposition {
        &self.decomposition
    }

    pub fn fingerprints(&self) -> &[Fingerprint] {
        &self.fingerprints
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn num_blocks(&self) -> usize {
        self.decomposition.num_blocks()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.decomposition.block_dims()
    }

    /// `π_k(S)`.
    pub fn block_space(&self, k: usize) -> MatrixSubspace {
        block_space(&self.space, &self.decomposition, k, self.options.tol_rank)
    }

    /// Hermitian basis of `S`, real-orthonormal under `Re tr(A B)`.
    pub fn hermitian_basis(&self) -> Vec<CMatrix> {
        self.space.hermitian_basis(self.options.tol_rank)
    }

    /// `(d, N, n_1..n_N)` together with the constraint checks.
    pub fn invariants(&self) -> Result<Invariants> {
        let dims = self.block_dims();
        let pi_dims: Vec<usize> = (0..self.num_blocks()).map(|k| self.block_space(k).dim()).collect();
        let bound: usize = dims.iter().map(|n| n * n).sum();
        let inv = Invariants {
            d: self.dim(),
            n_blocks: dims.len(),
            block_dims: dims.clone(),
            pi_dims: pi_dims.clone(),
            dim_bound: bound,
        };
        for (k, (&pd, &nk)) in pi_dims.iter().zip(&dims).enumerate() {
            if pd > nk * nk {
                return Err(Error::InternalConsistency(format!(
                    "dim π_{k}(S) = {pd} exceeds n_k² = {}",
                    nk * nk
                )));
            }
        }
        if inv.d > bound {
            return Err(Error::InternalConsistency(format!("d = {} exceeds Σ n_k² = {bound}", inv.d)));
        }
        Ok(inv)
    }
}

fn block_space(space: &MatrixSubspace, dec: &BlockDecomposition, k: usize, tol_rank: f64) -> MatrixSubspace {
    let imgs: Vec<CMatrix> = space.basis().iter().map(|b| dec.pi(k, b)).collect();
    MatrixSubspace::orthonormalize_span(dec.blocks[k].dim, &imgs, tol_rank).expect("uniform sizes")
}

/// Integer invariants `(d, N, n_1..n_N)` with `dim π_k(S)` for the constraint report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariants {
    pub d: usize,
    pub n_blocks: usize,
    pub block_dims: Vec<usize>,
    pub pi_dims: Vec<usize>,
    pub dim_bound: usize,
}

impl Invariants {
    pub fn constraint_holds(&self) -> bool {
        self.d <= self.dim_bound
            && self.pi_dims.iter().zip(&self.block_dims).all(|(&p, &n)| p <= n * n)
    }
}

/// Result of [`build_opsys`]: the system and non-fatal warnings.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub system: OperatorSystem,
    pub warnings: Vec<String>,
}

/// `S_Γ = {Γ_1(z) ⊕ ... ⊕ Γ_N(z)}`.
pub fn build_opsys(seq: &ParamSequence, options: SystemOptions) -> Result<BuiltSystem> {
    let n: usize = seq.target_dims().iter().sum();
    let spanning: Vec<CMatrix> = (0..seq.d())
        .map(|j| seq.apply(&StarVectorSpace { dim: seq.d() }.basis_vector(j)))
        .collect();
    let system = OperatorSystem::from_spanning(n, &spanning, options)?;
    let mut warnings = Vec::new();
    for (name, status) in [
        ("irreducibility", &seq.irreducible),
        ("faithfulness", &seq.faithful),
        ("strong separation", &seq.strongly_separated),
    ] {
        match status {
            CheckStatus::Verified => {}
            CheckStatus::Unverified => warnings.push(format!("{name} not verified")),
            CheckStatus::Failed(why) => warnings.push(format!("{name} failed: {why}")),
        }
    }
    if system.dim() != seq.d() {
        warnings.push(format!(
            "system has dimension {} but d = {} (parameterization not faithful)",
            system.dim(),
            seq.d()
        ));
    }
    Ok(BuiltSystem { system, warnings })
}

/// Hermitian matrix units in canonical order: off-diagonal symmetric and
/// antisymmetric pairs first, then the diagonal.
fn canonical_hermitian_units(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in (a + 1)..n {
            out.push(matrix_unit(n, a, b) + matrix_unit(n, b, a));
            out.push((matrix_unit(n, a, b) - matrix_unit(n, b, a)) * C64::new(0.0, 1.0));
        }
    }
    for a in 0..n {
        out.push(matrix_unit(n, a, a));
    }
    out
}

/// Parameterizing sequence of a system: a hermitian basis `s_1..s_d` with
/// `Σ s_j = 1`, and `Γ_k(z) = π_k(Σ z_j s_j)`.
///
/// `s_1..s_{d-1}` span the trace-orthogonal complement of `1` in the
/// hermitian part of `S`, obtained by Gram-Schmidt over the projections of
/// the canonical hermitian matrix units and normalised to `tr(s²)/n = 1`.
pub fn extract_params(s: &OperatorSystem) -> Result<ParamSequence> {
    let n = s.ambient_dim();
    let tol = s.options.tol_rank;
    let one = identity(n);
    let nf = n as f64;
    // real orthonormal basis of S_0 = herm(S) ⊖ 1
    let mut s0 = RealHermSpan::new(n);
    for h in s.hermitian_basis() {
        let tr = h.trace().re;
        s0.push(&h - &one * C64::new(tr / nf, 0.0), tol);
    }
    let want = s.dim() - 1;
    let mut basis = RealHermSpan::new(n);
    for u in canonical_hermitian_units(n) {
        if basis.dim() == want {
            break;
        }
        let mut proj = zeros(n, n);
        for b in &s0.basis {
            proj += b * C64::new(real_pairing(b, &u), 0.0);
        }
        if frob_norm(&proj) > 1e-8 {
            basis.push(proj, tol);
        }
    }
    if basis.dim() != want {
        return Err(Error::InternalConsistency(format!(
            "found {} of {want} hermitian directions orthogonal to the identity",
            basis.dim()
        )));
    }
    let mut elems: Vec<CMatrix> = basis
        .basis
        .iter()
        .map(|b| b * C64::new(nf.sqrt(), 0.0))
        .collect();
    let mut last = one.clone();
    for e in &elems {
        last -= e;
    }
    elems.push(last);
    let dec = s.decomposition();
    let mut maps = Vec::with_capacity(dec.num_blocks());
    for k in 0..dec.num_blocks() {
        let gens: Vec<CMatrix> = elems.iter().map(|e| hermitian_part(&dec.pi(k, e))).collect();
        // π_k is unital on the algebra; remove rounding from the unit constraint
        let mut gens = gens;
        let nk = dec.blocks[k].dim;
        let mut sum = zeros(nk, nk);
        for g in &gens {
            sum += g;
        }
        let last = gens.last_mut().unwrap();
        *last += identity(nk) - sum;
        maps.push(ParamMap::new(gens).map_err(|e| e.in_block(k))?);
    }
    let mut seq = ParamSequence::new(maps)?;
    seq.irreducible = CheckStatus::Verified;
    seq.faithful = if seq.joint_rank(tol) == seq.d() {
        CheckStatus::Verified
    } else {
        CheckStatus::Failed("extracted parameterization is not faithful".into())
    };
    Ok(seq)
}

/// Paulsen's device: `{[[λ1, s], [t*, μ1]] : s, t ∈ space}` in `M_{2n}`.
pub fn paulsen_device(n: usize, space_basis: &[CMatrix], options: SystemOptions) -> Result<OperatorSystem> {
    for b in space_basis {
        if b.shape() != (n, n) {
            return Err(Error::InvalidInput(format!("expected {n}x{n} matrices")));
        }
    }
    let one = identity(n);
    let zero = zeros(n, n);
    let corner = |a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix| {
        assemble_block(&[vec![a.clone(), b.clone()], vec![c.clone(), d.clone()]]).unwrap()
    };
    let mut spanning = vec![corner(&one, &zero, &zero, &zero), corner(&zero, &zero, &zero, &one)];
    for b in space_basis {
        spanning.push(corner(&zero, b, &zero, &zero));
        spanning.push(corner(&zero, &zero, &b.adjoint(), &zero));
    }
    OperatorSystem::from_spanning(2 * n, &spanning, options)
}

/// Random `Γ` with target dims `dims`: Gaussian hermitian generators with the last one
/// fixing unitality, resampled until (i)-(iii) verify.
pub fn random_param_sequence(d: usize, dims: &[usize], seed: u64, opts: &VerifyOptions) -> Result<ParamSequence> {
    if d == 0 || dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidInput("need d ≥ 1 and nonempty positive block sizes".into()));
    }
    let cap: usize = dims.iter().map(|n| n * n).sum();
    if d > cap {
        return Err(Error::InvalidInput(format!("d = {d} exceeds Σ n_k² = {cap}; no faithful sequence exists")));
    }
    if dims.iter().any(|&n| n > 1 && d < 3) {
        return Err(Error::InvalidInput("irreducible blocks of size > 1 need d ≥ 3".into()));
    }
    const ATTEMPTS: u64 = 40;
    for attempt in 0..ATTEMPTS {
        let mut maps = Vec::with_capacity(dims.len());
        for (k, &n) in dims.iter().enumerate() {
            let mut g = rng::derive(seed, &[0x4741_4d4d, k as u64, attempt]);
            let mut gens: Vec<CMatrix> = (0..d - 1).map(|_| rng::hermitian(n, &mut g)).collect();
            let mut last = identity(n);
            for x in &gens {
                last -= x;
            }
            gens.push(last);
            maps.push(ParamMap::new(gens)?);
        }
        let mut seq = ParamSequence::new(maps)?;
        seq.verify(VerifyOptions { seed: seed ^ attempt, ..*opts });
        if seq.all_verified() {
            return Ok(seq);
        }
    }
    Err(Error::InvalidInput(format!(
        "no verified sequence with d = {d} and dims {dims:?} after {ATTEMPTS} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{diag_real, pauli};

    fn scalar_map(values: &[f64]) -> ParamMap {
        ParamMap::new(values.iter().map(|&v| diag_real(&[v])).collect()).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(ParamMap::new(vec![identity(2)]).is_ok());
        let h = C64::new(0.5, 0.0);
        let g1 = (identity(2) + pauli::x()) * h;
        let g2 = (identity(2) - pauli::x()) * h;
        assert!(ParamMap::new(vec![g1, g2]).is_ok());
        let e12 = matrix_unit(2, 0, 1);
        let err = ParamMap::new(vec![e12.clone(), identity(2) - e12]).unwrap_err();
        assert!(matches!(err, Error::StarViolation(_)));
        let err = ParamMap::new(vec![identity(2), pauli::z()]).unwrap_err();
        assert!(matches!(err, Error::UnitViolation(_)));
    }

    #[test]
    fn build_examples() {
        let seq = ParamSequence::new(vec![ParamMap::new(vec![identity(2)]).unwrap()]).unwrap();
        let b = build_opsys(&seq, SystemOptions::default()).unwrap();
        assert_eq!(b.system.dim(), 1);

        let seq = ParamSequence::new(vec![scalar_map(&[1., 0.]), scalar_map(&[0., 1.])]).unwrap();
        let b = build_opsys(&seq, SystemOptions::default()).unwrap();
        assert_eq!(b.system.dim(), 2);
        assert_eq!(b.system.algebra().dim(), 2);
        assert_eq!(b.system.num_blocks(), 2);

        let seq = ParamSequence::new(vec![
            scalar_map(&[1., 0.]),
            scalar_map(&[0., 1.]),
            scalar_map(&[0.5, 0.5]),
        ])
        .unwrap();
        let b = build_opsys(&seq, SystemOptions::default()).unwrap();
        assert_eq!(b.system.dim(), 2);
        assert_eq!(b.system.ambient_dim(), 3);
        assert!(b.system.space().contains(&diag_real(&[0., 1., 0.5]), 1e-10));
    }

    #[test]
    fn extract_sigma_system() {
        let s = OperatorSystem::from_spanning(2, &[identity(2), pauli::x(), pauli::z()], SystemOptions::default())
            .unwrap();
        let seq = extract_params(&s).unwrap();
        assert_eq!(seq.d(), 3);
        assert_eq!(seq.len(), 1);
        let g = seq.maps()[0].generators();
        // the decomposition's irrep is only fixed up to a unitary; compare spectra and Gram data
        let expect = [pauli::x(), pauli::z(), identity(2) - pauli::x() - pauli::z()];
        for i in 0..3 {
            for j in 0..3 {
                let a = real_pairing(&g[i], &g[j]);
                let b = real_pairing(&expect[i], &expect[j]);
                assert!((a - b).abs() < 1e-9, "gram mismatch at {i},{j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn extract_scalars_and_diagonal() {
        let s = OperatorSystem::from_spanning(2, &[identity(2)], SystemOptions::default()).unwrap();
        let seq = extract_params(&s).unwrap();
        assert_eq!(seq.d(), 1);
        assert!((seq.maps()[0].generators()[0][(0, 0)].re - 1.0).abs() < 1e-12);

        let s = OperatorSystem::from_spanning(3, &[identity(3), diag_real(&[0., 1., 2.])], SystemOptions::default())
            .unwrap();
        let seq = extract_params(&s).unwrap();
        assert_eq!(seq.d(), 2);
        assert_eq!(seq.len(), 3);
        // Γ_k(e_1) is affine in the point k, with Γ_k(1) = 1
        let v: Vec<f64> = seq.maps().iter().map(|m| m.generators()[0][(0, 0)].re).collect();
        assert!(((v[1] - v[0]) - (v[2] - v[1])).abs() < 1e-10);
        assert!((v[1] - v[0]).abs() > 0.1);
    }

    #[test]
    fn level_norm_examples() {
        let seq = ParamSequence::new(vec![
            scalar_map(&[1., 0.]),
            scalar_map(&[0., 1.]),
            scalar_map(&[0.5, 0.5]),
        ])
        .unwrap();
        let unit = vec![vec![vec![C64::new(1., 0.); 2]]];
        for k in 0..3 {
            assert!((level_norm(&seq, &unit, NormSelector::Block(k)).unwrap() - 1.0).abs() < 1e-12);
        }
        let z = vec![vec![vec![C64::new(1., 0.), C64::new(0.2, 0.)]]];
        let norms: Vec<f64> = (0..3)
            .map(|k| level_norm(&seq, &z, NormSelector::Block(k)).unwrap())
            .collect();
        assert!((norms[0] - 1.0).abs() < 1e-12 && (norms[1] - 0.2).abs() < 1e-12 && (norms[2] - 0.6).abs() < 1e-12);
        let amb = level_norm(&seq, &z, NormSelector::Ambient).unwrap();
        assert!((amb - 1.0).abs() < 1e-12);
        assert!(level_norm(&seq, &[vec![vec![C64::new(1., 0.)]]], NormSelector::Ambient).is_err());
    }

    #[test]
    fn paulsen_examples() {
        let p = paulsen_device(2, &[], SystemOptions::default()).unwrap();
        assert_eq!(p.dim(), 2);
        let p = paulsen_device(2, &[matrix_unit(2, 0, 1)], SystemOptions::default()).unwrap();
        assert_eq!(p.dim(), 4);
        let full: Vec<CMatrix> = MatrixSubspace::full(2).basis().to_vec();
        let p = paulsen_device(2, &full, SystemOptions::default()).unwrap();
        assert_eq!(p.dim(), 10);
        assert!(p.space().contains_identity(1e-10) && p.space().is_star_closed(1e-10));
    }

    #[test]
    fn invariants_examples() {
        let s = OperatorSystem::from_spanning(2, &[identity(2), pauli::x(), pauli::z()], SystemOptions::default())
            .unwrap();
        let inv = s.invariants().unwrap();
        assert_eq!((inv.d, inv.n_blocks, inv.block_dims.clone()), (3, 1, vec![2]));
        assert!(inv.constraint_holds());

        let diag: Vec<CMatrix> = (0..3).map(|i| matrix_unit(3, i, i)).collect();
        let s = OperatorSystem::from_spanning(3, &diag, SystemOptions::default()).unwrap();
        let inv = s.invariants().unwrap();
        assert_eq!((inv.d, inv.n_blocks, inv.dim_bound), (3, 3, 3));

        let s = OperatorSystem::new(MatrixSubspace::full(2), SystemOptions::default()).unwrap();
        let inv = s.invariants().unwrap();
        assert_eq!((inv.d, inv.n_blocks, inv.dim_bound), (4, 1, 4));
    }

    #[test]
    fn random_sequences_are_seeded() {
        let opts = VerifyOptions::default();
        let a = random_param_sequence(3, &[2], 7, &opts).unwrap();
        let b = random_param_sequence(3, &[2], 7, &opts).unwrap();
        let c = random_param_sequence(3, &[2], 8, &opts).unwrap();
        assert_eq!(a.maps()[0].generators(), b.maps()[0].generators());
        assert_ne!(a.maps()[0].generators(), c.maps()[0].generators());
        assert!(a.all_verified());
        let sum = a.apply(&[C64::new(1.0, 0.0); 3]);
        assert!((sum - identity(2)).norm() < 1e-12);
    }

    #[test]
    fn random_sequence_rejects_impossible_shapes() {
        let opts = VerifyOptions::default();
        assert!(random_param_sequence(5, &[2], 0, &opts).is_err());
        assert!(random_param_sequence(2, &[2], 0, &opts).is_err());
        assert!(random_param_sequence(2, &[1, 1], 0, &opts).is_ok());
    }
}
