//! Equivalence of parameterizing sequences and isomorphism of reduced systems.
//!
//! `Γ ~ Γ̃` when there are a permutation `σ`, unitaries `U_k` and a
//! unit-preserving real automorphism `θ` of `C^d` with
//! `Γ̃_{σ(k)}(θ(z)) = U_k Γ_k(z) U_k*`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, SVD};

use crate::choquet::is_boundary;
use crate::error::{Error, Result};
use crate::feastool::DEFAULT_EPS;
use crate::matlin::{
    direct_sum, exp_i_herm, frob_norm, herm_eigen, hermitian_part, identity, inner, kron, max_abs, polar_unitary,
    vec_rowmajor, zeros, CMatrix, MatrixSubspace, RMatrix, C64, DEFAULT_TOL_RANK,
};
use crate::opsys::{extract_params, OperatorSystem, ParamMap, ParamSequence};
use crate::rng;

/// Residual threshold for the equivalence display.
pub const WITNESS_TOL: f64 = 1e-8;
pub const UNITARY_TOL: f64 = 1e-9;
pub const UNIT_FIX_TOL: f64 = 1e-10;
/// Fingerprints closer than this are treated as compatible.
pub const FINGERPRINT_TOL: f64 = 1e-6;

/// Spectrum of the frame operator `Σ_i B_i ⊗ conj(B_i)` of a `*`-closed block subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub block_dim: usize,
    /// Ascending eigenvalues.
    pub spectrum: Vec<f64>,
}

impl Fingerprint {
    pub fn of_subspace(s: &MatrixSubspace) -> Self {
        let n = s.ambient_dim();
        let mut f = zeros(n * n, n * n);
        for b in s.hermitian_basis(DEFAULT_TOL_RANK) {
            f += kron(&b, &crate::matlin::conj(&b));
        }
        Fingerprint {
            block_dim: n,
            spectrum: herm_eigen(&hermitian_part(&f)).values,
        }
    }

    pub fn of_map(m: &ParamMap) -> Self {
        Self::of_subspace(&m.range(DEFAULT_TOL_RANK))
    }

    /// `max_i |λ_i - μ_i|`, infinite for different block sizes.
    pub fn distance(&self, other: &Fingerprint) -> f64 {
        if self.block_dim != other.block_dim || self.spectrum.len() != other.spectrum.len() {
            return f64::INFINITY;
        }
        self.spectrum
            .iter()
            .zip(&other.spectrum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn matches(&self, other: &Fingerprint, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    fn key(&self) -> Vec<i64> {
        self.spectrum.iter().map(|v| (v * 1e6).round() as i64).collect()
    }

    /// Total order on rounded spectra, used only to make block orders reproducible.
    pub fn canonical_cmp(&self, other: &Fingerprint) -> Ordering {
        self.block_dim
            .cmp(&other.block_dim)
            .then_with(|| self.key().cmp(&other.key()))
    }
}

pub fn fingerprint(m: &ParamMap) -> Fingerprint {
    Fingerprint::of_map(m)
}

#[derive(Debug, Clone)]
pub struct EquivalenceWitness {
    /// `sigma[k] = σ(k)`.
    pub sigma: Vec<usize>,
    /// `U_k: H_k → H̃_{σ(k)}`.
    pub unitaries: Vec<CMatrix>,
    /// Column `j` is `θ(e_j)`.
    pub theta: RMatrix,
    pub residual: f64,
}

impl EquivalenceWitness {
    pub fn identity(g: &ParamSequence) -> Self {
        EquivalenceWitness {
            sigma: (0..g.len()).collect(),
            unitaries: g.target_dims().into_iter().map(identity).collect(),
            theta: RMatrix::identity(g.d(), g.d()),
            residual: 0.0,
        }
    }

    /// Witness for `h ~ k` from witnesses `self: g ~ h` and `next: h ~ k`.
    pub fn compose(&self, next: &EquivalenceWitness) -> EquivalenceWitness {
        EquivalenceWitness {
            sigma: self.sigma.iter().map(|&s| next.sigma[s]).collect(),
            unitaries: self
                .sigma
                .iter()
                .zip(&self.unitaries)
                .map(|(&s, u)| &next.unitaries[s] * u)
                .collect(),
            theta: &next.theta * &self.theta,
            residual: 0.0,
        }
    }
}

fn check_shapes(g: &ParamSequence, h: &ParamSequence, w: &EquivalenceWitness) -> Result<()> {
    if g.len() != h.len() || g.d() != h.d() {
        return Err(Error::InvalidInput("sequences differ in length or source dimension".into()));
    }
    let n = g.len();
    if w.sigma.len() != n || w.unitaries.len() != n || w.theta.shape() != (g.d(), g.d()) {
        return Err(Error::InvalidInput("witness shape does not match the sequences".into()));
    }
    let mut seen = vec![false; n];
    for &s in &w.sigma {
        if s >= n || seen[s] {
            return Err(Error::InvalidInput("sigma is not a permutation".into()));
        }
        seen[s] = true;
    }
    for (k, u) in w.unitaries.iter().enumerate() {
        let (nk, nt) = (g.maps()[k].target_dim(), h.maps()[w.sigma[k]].target_dim());
        if u.shape() != (nt, nk) {
            return Err(Error::InvalidInput(format!("U_{k} has the wrong shape")));
        }
    }
    Ok(())
}

/// `max_{k,j} |Γ̃_{σ(k)}(θ e_j) - U_k Γ_k(e_j) U_k*|`.
pub fn equivalence_residual(g: &ParamSequence, h: &ParamSequence, w: &EquivalenceWitness) -> Result<f64> {
    check_shapes(g, h, w)?;
    let d = g.d();
    let mut worst: f64 = 0.0;
    for (k, gm) in g.maps().iter().enumerate() {
        let hm = &h.maps()[w.sigma[k]];
        let u = &w.unitaries[k];
        for j in 0..d {
            let col: Vec<C64> = (0..d).map(|i| C64::new(w.theta[(i, j)], 0.0)).collect();
            let lhs = hm.apply(&col);
            let rhs = u * &gm.generators()[j] * u.adjoint();
            worst = worst.max(max_abs(&(lhs - rhs)));
        }
    }
    Ok(worst)
}

/// Witness invariants: unitarity, and `θ` real, invertible and unit-fixing.
pub fn witness_defects(w: &EquivalenceWitness) -> Option<String> {
    for (k, u) in w.unitaries.iter().enumerate() {
        if !u.is_square() {
            return Some(format!("U_{k} is not square"));
        }
        let e = max_abs(&(u.adjoint() * u - identity(u.ncols())));
        if e > UNITARY_TOL {
            return Some(format!("U_{k} is not unitary (defect {e:.3e})"));
        }
    }
    let d = w.theta.nrows();
    if w.theta.iter().any(|v| !v.is_finite()) {
        return Some("theta has non-finite entries".into());
    }
    let ones = nalgebra::DVector::from_element(d, 1.0);
    let fix = (&w.theta * &ones - &ones).amax();
    if fix > UNIT_FIX_TOL {
        return Some(format!("theta does not fix the unit (defect {fix:.3e})"));
    }
    let smin = w.theta.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    if smin < 1e-10 {
        return Some("theta is not invertible".into());
    }
    None
}

/// Exact check of the equivalence display together with the witness invariants.
pub fn verify_equivalence(g: &ParamSequence, h: &ParamSequence, w: &EquivalenceWitness) -> Result<bool> {
    let r = equivalence_residual(g, h, w)?;
    Ok(r < WITNESS_TOL && witness_defects(w).is_none())
}

/// Columnwise solve of `Γ̃_{σ(k)}(θ e_j) = U_k Γ_k(e_j) U_k*` for a real unit-fixing `θ`.
pub fn solve_theta(
    g: &ParamSequence,
    h: &ParamSequence,
    sigma: &[usize],
    unitaries: &[CMatrix],
) -> Result<Option<RMatrix>> {
    let w = EquivalenceWitness {
        sigma: sigma.to_vec(),
        unitaries: unitaries.to_vec(),
        theta: RMatrix::identity(g.d(), g.d()),
        residual: 0.0,
    };
    check_shapes(g, h, &w)?;
    let theta = match theta_least_squares(g, h, sigma, unitaries) {
        Some(t) => t,
        None => return Ok(None),
    };
    let w = EquivalenceWitness { theta, ..w };
    let r = equivalence_residual(g, h, &w)?;
    if r >= WITNESS_TOL {
        return Ok(None);
    }
    let smin = w.theta.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    if smin < 1e-10 {
        return Ok(None);
    }
    Ok(Some(w.theta))
}

/// Least-squares `θ` over complex coefficients; `None` if the imaginary part is not negligible.
fn theta_least_squares(g: &ParamSequence, h: &ParamSequence, sigma: &[usize], unitaries: &[CMatrix]) -> Option<RMatrix> {
    let d = g.d();
    let rows: usize = h.target_dims().iter().map(|n| n * n).sum();
    // columns: vec of ⊕ Γ̃_{σ(k)}(e_i), in g's block order
    let mut a = zeros(rows, d);
    let mut rhs = zeros(rows, d);
    let mut off = 0;
    for (k, gm) in g.maps().iter().enumerate() {
        let hm = &h.maps()[sigma[k]];
        let n = hm.target_dim();
        for i in 0..d {
            a.view_mut((off, i), (n * n, 1)).copy_from(&vec_rowmajor(&hm.generators()[i]));
            let t = &unitaries[k] * &gm.generators()[i] * unitaries[k].adjoint();
            rhs.view_mut((off, i), (n * n, 1)).copy_from(&vec_rowmajor(&t));
        }
        off += n * n;
    }
    let svd = SVD::new(a, true, true);
    let sol = svd.solve(&rhs, 1e-12).ok()?;
    let scale = sol.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if sol.iter().any(|z| z.im.abs() > 1e-8 * scale) {
        return None;
    }
    let mut theta = DMatrix::from_fn(d, d, |i, j| sol[(i, j)].re);
    // exact unit fixing: θ·1 = 1 up to rounding in the solve
    let ones = nalgebra::DVector::from_element(d, 1.0);
    let defect = &ones - &theta * &ones;
    if defect.amax() > 1e-7 {
        return None;
    }
    for i in 0..d {
        for j in 0..d {
            theta[(i, j)] += defect[i] / d as f64;
        }
    }
    Some(theta)
}

// ---------------------------------------------------------------------------
// Decision procedure

#[derive(Debug, Clone, PartialEq)]
pub enum NegativeReason {
    SourceDimension { left: usize, right: usize },
    BlockCount { left: usize, right: usize },
    /// Sorted `(n_k, fingerprint)` multisets differ.
    BlockInvariants,
}

#[derive(Debug, Clone)]
pub enum Decision {
    Witness(EquivalenceWitness),
    CertifiedNegative(NegativeReason),
    Inconclusive { permutations: usize, restarts: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Random restarts per candidate permutation.
    pub budget: usize,
    pub seed: u64,
    pub sdp_eps: f64,
    /// Skip the reducedness precondition (callers that already know).
    pub assume_reduced: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            budget: 200,
            seed: 0,
            sdp_eps: DEFAULT_EPS,
            assume_reduced: false,
        }
    }
}

fn permutations(n: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    fn rec(k: usize, n: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, allowed: &dyn Fn(usize, usize) -> bool, out: &mut Vec<Vec<usize>>) {
        if out.len() >= 40_320 {
            return;
        }
        if k == n {
            out.push(cur.clone());
            return;
        }
        for t in 0..n {
            if !used[t] && allowed(k, t) {
                used[t] = true;
                cur.push(t);
                rec(k + 1, n, used, cur, allowed, out);
                cur.pop();
                used[t] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n, &mut vec![false; n], &mut Vec::new(), allowed, &mut out);
    out
}

/// Unitary search for one permutation: minimises
/// `f(U) = Σ_i ‖(1 - P̃)(U B_i U*)‖²` over block unitaries, where `B_i` is an
/// orthonormal basis of `S_Γ` placed in the `σ`-order and `P̃` projects onto `S_Γ̃`.
struct UnitarySearch {
    sizes: Vec<usize>,
    basis: Vec<CMatrix>,
    target: MatrixSubspace,
}

impl UnitarySearch {
    fn new(g: &ParamSequence, h: &ParamSequence, sigma: &[usize]) -> Self {
        let n = g.len();
        let sizes = h.target_dims();
        let mut inv = vec![0; n];
        for (k, &s) in sigma.iter().enumerate() {
            inv[s] = k;
        }
        let placed: Vec<CMatrix> = (0..g.d())
            .map(|j| direct_sum(&(0..n).map(|p| g.maps()[inv[p]].generators()[j].clone()).collect::<Vec<_>>()))
            .collect();
        let total: usize = sizes.iter().sum();
        let src = MatrixSubspace::orthonormalize_span(total, &placed, DEFAULT_TOL_RANK).expect("uniform sizes");
        let tgt_span: Vec<CMatrix> = (0..h.d())
            .map(|j| direct_sum(&h.maps().iter().map(|m| m.generators()[j].clone()).collect::<Vec<_>>()))
            .collect();
        let target = MatrixSubspace::orthonormalize_span(total, &tgt_span, DEFAULT_TOL_RANK).expect("uniform sizes");
        UnitarySearch {
            sizes,
            basis: src.basis().to_vec(),
            target,
        }
    }

    fn residuals(&self, u: &CMatrix) -> (f64, Vec<CMatrix>) {
        let mut f = 0.0;
        let rs: Vec<CMatrix> = self
            .basis
            .iter()
            .map(|b| {
                let x = u * b * u.adjoint();
                let r = &x - self.target.project(&x);
                f += frob_norm(&r).powi(2);
                r
            })
            .collect();
        (f, rs)
    }

    fn mask(&self, m: &CMatrix) -> CMatrix {
        let mut out = zeros(m.nrows(), m.ncols());
        let mut off = 0;
        for &n in &self.sizes {
            out.view_mut((off, off), (n, n)).copy_from(&m.view((off, off), (n, n)));
            off += n;
        }
        out
    }

    /// Riemannian gradient `K + K*` (block diagonal) with `K = Σ_i i[B_i, U* R_i* U]`.
    fn gradient(&self, u: &CMatrix, rs: &[CMatrix]) -> CMatrix {
        let n = u.nrows();
        let mut k = zeros(n, n);
        for (b, r) in self.basis.iter().zip(rs) {
            let m = u.adjoint() * r.adjoint() * u;
            k += (b * &m - &m * b) * C64::new(0.0, 1.0);
        }
        self.mask(&(&k + k.adjoint()))
    }

    fn descend(&self, mut u: CMatrix, iterations: usize) -> (CMatrix, f64) {
        let (mut f, mut rs) = self.residuals(&u);
        let mut step = 0.5;
        for _ in 0..iterations {
            if f < 1e-22 {
                break;
            }
            let grad = self.gradient(&u, &rs);
            let gn = frob_norm(&grad).powi(2);
            if gn < 1e-26 {
                break;
            }
            let mut accepted = false;
            for _ in 0..30 {
                let cand = &u * exp_i_herm(&grad, -step);
                let (fc, rc) = self.residuals(&cand);
                if fc <= f - 1e-4 * step * gn {
                    u = cand;
                    f = fc;
                    rs = rc;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (u, f)
    }
}

fn split_blocks(u: &CMatrix, sizes: &[usize]) -> Vec<CMatrix> {
    let mut off = 0;
    sizes
        .iter()
        .map(|&n| {
            let b = u.view((off, off), (n, n)).into_owned();
            off += n;
            b
        })
        .collect()
}

/// Alternating refinement: least-squares `θ`, then each `U_k` from the
/// kernel of `X ↦ X G_j - T_j X` followed by a polar projection.
fn polish(g: &ParamSequence, h: &ParamSequence, sigma: &[usize], mut us: Vec<CMatrix>) -> Vec<CMatrix> {
    for _ in 0..4 {
        let theta = match theta_least_squares(g, h, sigma, &us) {
            Some(t) => t,
            None => return us,
        };
        let d = g.d();
        for (k, gm) in g.maps().iter().enumerate() {
            let hm = &h.maps()[sigma[k]];
            let n = gm.target_dim();
            let mut stack = zeros(d * n * n, n * n);
            for j in 0..d {
                let col: Vec<C64> = (0..d).map(|i| C64::new(theta[(i, j)], 0.0)).collect();
                let t = hm.apply(&col);
                // row-major vec: vec(X G) = (1 ⊗ G^T) vec X, vec(T X) = (T ⊗ 1) vec X
                let op = kron(&identity(n), &gm.generators()[j].transpose()) - kron(&t, &identity(n));
                stack.view_mut((j * n * n, 0), (n * n, n * n)).copy_from(&op);
            }
            // smallest right singular vector
            let svd = SVD::new(stack.clone(), false, true);
            let vt = svd.v_t.unwrap();
            let (imin, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            let v = vt.row(imin).adjoint();
            let x = crate::matlin::unvec_rowmajor(&v, n, n);
            let cand = polar_unitary(&x);
            // keep the phase of the previous iterate
            let ph = inner(&cand, &us[k]);
            let ph = if ph.norm() > 0.0 { ph / ph.norm() } else { C64::new(1.0, 0.0) };
            us[k] = cand * ph;
        }
    }
    us
}

/// Equivalence decision on parameterizing sequences.
pub fn decide_equivalence(g: &ParamSequence, h: &ParamSequence, opts: &ClassifyOptions) -> Result<Decision> {
    if g.d() != h.d() {
        return Ok(Decision::CertifiedNegative(NegativeReason::SourceDimension {
            left: g.d(),
            right: h.d(),
        }));
    }
    if g.len() != h.len() {
        return Ok(Decision::CertifiedNegative(NegativeReason::BlockCount {
            left: g.len(),
            right: h.len(),
        }));
    }
    let fg: Vec<Fingerprint> = g.maps().iter().map(fingerprint).collect();
    let fh: Vec<Fingerprint> = h.maps().iter().map(fingerprint).collect();
    // multiset comparison with tolerance: a compatible matching must exist
    let compatible = |k: usize, t: usize| fg[k].matches(&fh[t], FINGERPRINT_TOL);
    let perms = permutations(g.len(), &compatible);
    if perms.is_empty() {
        return Ok(Decision::CertifiedNegative(NegativeReason::BlockInvariants));
    }
    let mut restarts = 0;
    for (pi, sigma) in perms.iter().enumerate() {
        let search = UnitarySearch::new(g, h, sigma);
        for restart in 0..opts.budget.max(1) {
            restarts += 1;
            let start = if restart == 0 {
                identity(search.sizes.iter().sum())
            } else {
                let mut r = rng::derive(opts.seed, &[0x434c_5353, pi as u64, restart as u64]);
                direct_sum(&search.sizes.iter().map(|&n| rng::unitary(n, &mut r)).collect::<Vec<_>>())
            };
            let (u, f) = search.descend(start, 400);
            if f > 1e-6 {
                continue;
            }
            let blocks = split_blocks(&u, &search.sizes);
            // blocks are in h-order; U_k sits at position σ(k)
            let us: Vec<CMatrix> = sigma.iter().map(|&s| blocks[s].clone()).collect();
            let us: Vec<CMatrix> = polish(g, h, sigma, us).iter().map(polar_unitary).collect();
            if let Some(theta) = solve_theta(g, h, sigma, &us)? {
                let mut w = EquivalenceWitness {
                    sigma: sigma.clone(),
                    unitaries: us,
                    theta,
                    residual: 0.0,
                };
                w.residual = equivalence_residual(g, h, &w)?;
                if verify_equivalence(g, h, &w)? {
                    return Ok(Decision::Witness(w));
                }
            }
        }
    }
    Ok(Decision::Inconclusive {
        permutations: perms.len(),
        restarts,
    })
}

/// Outcome of [`decide_isomorphism`], with the extracted sequences the witness refers to.
#[derive(Debug, Clone)]
pub struct IsomorphismResult {
    pub decision: Decision,
    pub left: ParamSequence,
    pub right: ParamSequence,
}

fn require_reduced(s: &OperatorSystem, which: &str, eps: f64) -> Result<()> {
    for k in 0..s.num_blocks() {
        if !is_boundary(s, k, eps)?.is_boundary {
            return Err(Error::Precondition(format!(
                "{which} system is not reduced (block {k} is not a boundary representation); compare C*-envelopes instead"
            )));
        }
    }
    Ok(())
}

/// Isomorphism of reduced systems via equivalence of their parameterizing sequences.
pub fn decide_isomorphism(s: &OperatorSystem, t: &OperatorSystem, opts: &ClassifyOptions) -> Result<IsomorphismResult> {
    if !opts.assume_reduced {
        require_reduced(s, "first", opts.sdp_eps)?;
        require_reduced(t, "second", opts.sdp_eps)?;
    }
    let left = extract_params(s)?;
    let right = extract_params(t)?;
    let decision = decide_equivalence(&left, &right, opts)?;
    Ok(IsomorphismResult { decision, left, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::pauli;
    use crate::opsys::SystemOptions;

    fn half(a: CMatrix) -> CMatrix {
        a * C64::new(0.5, 0.0)
    }

    fn sx_seq() -> ParamSequence {
        ParamSequence::new(vec![ParamMap::new(vec![
            half(identity(2) + pauli::x()),
            half(identity(2) - pauli::x()),
        ])
        .unwrap()])
        .unwrap()
    }

    fn sz_seq() -> ParamSequence {
        ParamSequence::new(vec![ParamMap::new(vec![
            half(identity(2) + pauli::z()),
            half(identity(2) - pauli::z()),
        ])
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn fingerprint_of_scalars() {
        let f = Fingerprint::of_subspace(&MatrixSubspace::orthonormalize_span(2, &[identity(2)], 1e-9).unwrap());
        assert_eq!(f.spectrum.len(), 4);
        for v in f.spectrum {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_examples() {
        let g = sx_seq();
        let h = sz_seq();
        assert!(verify_equivalence(&g, &g, &EquivalenceWitness::identity(&g)).unwrap());
        let w = EquivalenceWitness {
            sigma: vec![0],
            unitaries: vec![pauli::hadamard()],
            theta: RMatrix::identity(2, 2),
            residual: 0.0,
        };
        assert!(verify_equivalence(&g, &h, &w).unwrap());
        let bad = EquivalenceWitness {
            unitaries: vec![identity(2)],
            ..w
        };
        assert!(!verify_equivalence(&g, &h, &bad).unwrap());
    }

    #[test]
    fn theta_examples() {
        let g = sx_seq();
        let t = solve_theta(&g, &g, &[0], &[identity(2)]).unwrap().unwrap();
        assert!((t - RMatrix::identity(2, 2)).amax() < 1e-12);
        let m = &g.maps()[0];
        let swapped =
            ParamSequence::new(vec![ParamMap::new(vec![m.generators()[1].clone(), m.generators()[0].clone()]).unwrap()])
                .unwrap();
        let t = solve_theta(&g, &swapped, &[0], &[identity(2)]).unwrap().unwrap();
        let p = RMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        assert!((t - p).amax() < 1e-12);
    }

    #[test]
    fn sigma_x_versus_sigma_z() {
        let g = sx_seq();
        let h = sz_seq();
        match decide_equivalence(&g, &h, &ClassifyOptions::default()).unwrap() {
            Decision::Witness(w) => {
                assert!(equivalence_residual(&g, &h, &w).unwrap() < 1e-10);
            }
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn identical_systems_give_identity_witness() {
        let s = OperatorSystem::from_spanning(2, &[identity(2), pauli::x(), pauli::z()], SystemOptions::default())
            .unwrap();
        let r = decide_isomorphism(&s, &s, &ClassifyOptions::default()).unwrap();
        match r.decision {
            Decision::Witness(w) => assert!(w.residual < 1e-8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn different_sizes_are_negative() {
        let s2 = OperatorSystem::from_spanning(2, &[identity(2), pauli::x(), pauli::z()], SystemOptions::default())
            .unwrap();
        let e = |i, j| crate::matlin::matrix_unit(3, i, j);
        let s3 = OperatorSystem::from_spanning(
            3,
            &[identity(3), e(0, 1) + e(1, 0), e(1, 2) + e(2, 1)],
            SystemOptions::default(),
        )
        .unwrap();
        let r = decide_isomorphism(&s2, &s3, &ClassifyOptions::default()).unwrap();
        assert!(matches!(r.decision, Decision::CertifiedNegative(_)));
    }
}
