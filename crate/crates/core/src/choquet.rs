//! Boundary representations, peaking certificates, the boundary ideal and
//! the C*-envelope of an operator system.
//!
//! A UCP map `φ: ⊕_j M_{n_j} → M_{n_k}` is encoded by Choi matrices
//! `C_j = Σ_ab E_ab ⊗ φ_j(E_ab)`; `tr(H φ_j(x)) = tr((x^T ⊗ H) C_j)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::feastool::{singleton_test, SingletonReport, SolveOptions, Spectrahedron, DEFAULT_EPS};
use crate::matlin::{
    assemble_block, conj, herm_from_vec, inner, kron, norm2, norm_subgradient, real_pairing, zeros,
    CMatrix, MatrixSubspace, C64,
};
use crate::opsys::{OperatorSystem, ParamMap};
use crate::rng;

/// Strictness margin for norm inequalities.
pub const DEFAULT_TOL_GAP: f64 = 1e-6;

/// Choi-form spectrahedron of UCP maps `C*(S) → M_{n_k}` agreeing with `π_k` on `S`.
#[derive(Debug, Clone)]
pub struct UcpExtensionSet {
    pub block: usize,
    pub block_dims: Vec<usize>,
    pub sp: Spectrahedron,
}

impl UcpExtensionSet {
    /// `φ_j(x) = Tr_1[(x^T ⊗ 1) C_j]` for the Choi data `c`.
    pub fn apply(&self, c: &[CMatrix], j: usize, x: &CMatrix) -> CMatrix {
        let nj = self.block_dims[j];
        let nk = self.block_dims[self.block];
        let mut out = zeros(nk, nk);
        for a in 0..nj {
            for b in 0..nj {
                let blk = c[j].view((a * nk, b * nk), (nk, nk));
                out += blk * x[(a, b)];
            }
        }
        out
    }
}

/// Maximally entangled (unnormalised) projection `Σ_ab E_ab ⊗ E_ab`.
pub fn identity_choi(n: usize) -> CMatrix {
    let mut c = zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            c[(a * n + a, b * n + b)] = C64::new(1.0, 0.0);
        }
    }
    c
}

pub fn ucp_extension_set(s: &OperatorSystem, k: usize) -> Result<UcpExtensionSet> {
    let dec = s.decomposition();
    if k >= dec.num_blocks() {
        return Err(Error::InvalidInput(format!("block {k} out of range")));
    }
    let dims = dec.block_dims();
    let nk = dims[k];
    let cone_dims: Vec<usize> = dims.iter().map(|&nj| nj * nk).collect();
    let mut sp = Spectrahedron::new(cone_dims.clone())?;
    let herm_k: Vec<CMatrix> = (0..nk * nk)
        .map(|i| {
            let mut v = vec![0.0; nk * nk];
            v[i] = 1.0;
            herm_from_vec(nk, &v)
        })
        .collect();
    for sb in s.hermitian_basis() {
        let images: Vec<CMatrix> = (0..dims.len()).map(|j| conj(&dec.pi(j, &sb))).collect();
        let target = dec.pi(k, &sb);
        for h in &herm_k {
            let coeffs: Vec<CMatrix> = images.iter().map(|im| kron(im, h)).collect();
            sp.add_constraint(&coeffs, real_pairing(h, &target))?;
        }
    }
    let known: Vec<CMatrix> = cone_dims
        .iter()
        .enumerate()
        .map(|(j, &m)| if j == k { identity_choi(nk) } else { zeros(m, m) })
        .collect();
    sp.set_known_point(known).map_err(|e| e.in_block(k))?;
    Ok(UcpExtensionSet {
        block: k,
        block_dims: dims,
        sp,
    })
}

/// Choi-form spectrahedron of UCP maps `⊕_l M_{n_l} → M_m` sending
/// `⊕_l sources_l(e_j)` to `target(e_j)` for every `j`.
///
/// Feasible exactly when `target` is subordinate to the sources:
/// `‖target^(p)(z)‖ ≤ max_l ‖sources_l^(p)(z)‖` for every level `p`.
pub fn extension_problem(sources: &[ParamMap], target: &ParamMap) -> Result<Spectrahedron> {
    if sources.is_empty() || sources.iter().any(|m| m.d() != target.d()) {
        return Err(Error::InvalidInput("sources must be nonempty with the target's source dimension".into()));
    }
    let m = target.target_dim();
    let cone_dims: Vec<usize> = sources.iter().map(|g| g.target_dim() * m).collect();
    let mut sp = Spectrahedron::new(cone_dims)?;
    let herm: Vec<CMatrix> = (0..m * m)
        .map(|i| {
            let mut v = vec![0.0; m * m];
            v[i] = 1.0;
            herm_from_vec(m, &v)
        })
        .collect();
    for j in 0..target.d() {
        let imgs: Vec<CMatrix> = sources.iter().map(|g| conj(&g.generators()[j])).collect();
        for h in &herm {
            let coeffs: Vec<CMatrix> = imgs.iter().map(|im| kron(im, h)).collect();
            sp.add_constraint(&coeffs, real_pairing(h, &target.generators()[j]))?;
        }
    }
    Ok(sp)
}

/// Result of the singleton test for one block.
#[derive(Debug, Clone)]
pub struct BoundaryCheck {
    pub block: usize,
    pub is_boundary: bool,
    pub singleton: SingletonReport,
}

pub fn is_boundary(s: &OperatorSystem, k: usize, eps: f64) -> Result<BoundaryCheck> {
    let set = ucp_extension_set(s, k)?;
    let rep = singleton_test(&set.sp, SolveOptions { eps }).map_err(|e| e.in_block(k))?;
    Ok(BoundaryCheck {
        block: k,
        is_boundary: rep.singleton,
        singleton: rep,
    })
}

// ---------------------------------------------------------------------------
// Peaking search

/// A `p×p` matrix of coefficient vectors whose image under component `k`
/// strictly dominates the images under all other components in norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakingCertificate {
    pub component: usize,
    pub level: usize,
    /// `cells[a][b]` is the coefficient vector of entry `(a, b)`.
    pub cells: Vec<Vec<Vec<C64>>>,
    pub target_norm: f64,
    pub other_norm: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PeakSearch {
    pub level_cap: usize,
    /// Random restarts per level.
    pub budget: usize,
    pub seed: u64,
    /// Extra seed component distinguishing searches.
    pub tag: u64,
    pub margin: f64,
    pub iterations: usize,
}

impl Default for PeakSearch {
    fn default() -> Self {
        PeakSearch {
            level_cap: 4,
            budget: 200,
            seed: 0,
            tag: 0,
            margin: DEFAULT_TOL_GAP,
            iterations: 80,
        }
    }
}

fn level_image(gens: &[CMatrix], cells: &[Vec<Vec<C64>>]) -> CMatrix {
    let n = gens[0].nrows();
    let imgs: Vec<Vec<CMatrix>> = cells
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    let mut m = zeros(n, n);
                    for (g, &x) in gens.iter().zip(c) {
                        m += g * x;
                    }
                    m
                })
                .collect()
        })
        .collect();
    assemble_block(&imgs).expect("square cell array")
}

/// Re-evaluates a candidate with exact norms; returns it when the gap exceeds the margin.
pub fn verify_peaking(
    components: &[Vec<CMatrix>],
    k: usize,
    cells: &[Vec<Vec<C64>>],
    margin: f64,
) -> Option<PeakingCertificate> {
    let norms: Vec<f64> = components.iter().map(|g| norm2(&level_image(g, cells))).collect();
    let other = norms
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    let gap = norms[k] - other;
    if gap.is_nan() || gap <= margin {
        return None;
    }
    Some(PeakingCertificate {
        component: k,
        level: cells.len(),
        cells: cells.to_vec(),
        target_norm: norms[k],
        other_norm: other,
        gap,
    })
}

type Cells = Vec<Vec<Vec<C64>>>;

fn cells_norm(c: &Cells) -> f64 {
    c.iter().flatten().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn cells_scale(c: &mut Cells, f: f64) {
    c.iter_mut().flatten().flatten().for_each(|z| *z *= f);
}

fn cells_axpy(c: &Cells, a: f64, g: &Cells) -> Cells {
    c.iter()
        .zip(g)
        .map(|(r, gr)| {
            r.iter()
                .zip(gr)
                .map(|(v, gv)| v.iter().zip(gv).map(|(x, y)| x + y * a).collect())
                .collect()
        })
        .collect()
}

fn cells_dot(a: &Cells, b: &Cells) -> f64 {
    a.iter()
        .flatten()
        .flatten()
        .zip(b.iter().flatten().flatten())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

/// Objective value and an ascent subgradient for `‖T_k‖ - max_{j≠k} ‖T_j‖`.
fn peak_objective(components: &[Vec<CMatrix>], k: usize, c: &Cells) -> (f64, Cells) {
    let p = c.len();
    let d = components[0].len();
    let mut grads = Vec::with_capacity(components.len());
    let mut norms = Vec::with_capacity(components.len());
    for g in components {
        let t = level_image(g, c);
        let (nrm, sub) = norm_subgradient(&t, 1e-9);
        norms.push(nrm);
        grads.push(sub);
    }
    let other = norms
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    let rivals: Vec<usize> = (0..components.len())
        .filter(|&j| j != k && norms[j] >= other - 1e-9 * other.max(1.0))
        .collect();
    let cell_grad = |j: usize| -> Cells {
        let n = components[j][0].nrows();
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        let blk = grads[j].view((a * n, b * n), (n, n)).into_owned();
                        (0..d).map(|l| inner(&blk, &components[j][l]).conj()).collect()
                    })
                    .collect()
            })
            .collect()
    };
    let mut g = cell_grad(k);
    for &j in &rivals {
        g = cells_axpy(&g, -1.0 / rivals.len() as f64, &cell_grad(j));
    }
    (norms[k] - other, g)
}

fn random_cells<R: Rng>(p: usize, d: usize, rng: &mut R) -> Cells {
    let mut c: Cells = (0..p)
        .map(|_| (0..p).map(|_| (0..d).map(|_| rng::complex_gaussian(rng)).collect()).collect())
        .collect();
    let nrm = cells_norm(&c);
    cells_scale(&mut c, 1.0 / nrm);
    c
}

/// Searches for a peaking cell matrix for component `k` of `components`
/// (component `j` is the generator tuple of a linear map `C^d → M_{n_j}`).
pub fn peak_search_generators(components: &[Vec<CMatrix>], k: usize, search: &PeakSearch) -> Option<PeakingCertificate> {
    let d = components.first()?.len();
    if d == 0 || k >= components.len() {
        return None;
    }
    if components.len() == 1 {
        // vacuous: any cell with a nonzero image
        let (l, _) = components[0]
            .iter()
            .enumerate()
            .map(|(l, g)| (l, norm2(g)))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        let mut z = vec![C64::new(0.0, 0.0); d];
        z[l] = C64::new(1.0, 0.0);
        return verify_peaking(components, 0, &[vec![z]], search.margin);
    }
    for p in 1..=search.level_cap.max(1) {
        for restart in 0..search.budget {
            let mut rng = rng::derive(search.seed, &[0x5045_414b, search.tag, k as u64, p as u64, restart as u64]);
            let mut c = random_cells(p, d, &mut rng);
            let (mut f, mut g) = peak_objective(components, k, &c);
            let mut step = 0.5;
            let mut stall = 0;
            for _ in 0..search.iterations {
                if f > search.margin * 4.0 {
                    break;
                }
                // project onto the tangent space of the unit sphere
                let radial = cells_dot(&c, &g);
                let tg = cells_axpy(&g, -radial, &c);
                if cells_norm(&tg) < 1e-12 {
                    break;
                }
                let mut accepted = false;
                for _ in 0..12 {
                    let mut cand = cells_axpy(&c, step, &tg);
                    let nrm = cells_norm(&cand);
                    cells_scale(&mut cand, 1.0 / nrm);
                    let (fc, gc) = peak_objective(components, k, &cand);
                    if fc > f {
                        if fc - f < 1e-10 {
                            stall += 1;
                        }
                        c = cand;
                        f = fc;
                        g = gc;
                        step = (step * 1.5).min(2.0);
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted || stall > 10 {
                    break;
                }
            }
            if let Some(cert) = verify_peaking(components, k, &c, search.margin) {
                return Some(cert);
            }
        }
    }
    None
}

/// Peaking search over the components of a parameterizing sequence.
pub fn peak_search(maps: &[ParamMap], k: usize, search: &PeakSearch) -> Option<PeakingCertificate> {
    let comps: Vec<Vec<CMatrix>> = maps.iter().map(|m| m.generators().to_vec()).collect();
    peak_search_generators(&comps, k, search)
}

/// Block images `π_j(b_l)` of a hermitian basis `b_l` of `S`.
pub fn block_generators(s: &OperatorSystem) -> (Vec<CMatrix>, Vec<Vec<CMatrix>>) {
    let basis = s.hermitian_basis();
    let dec = s.decomposition();
    let comps = (0..dec.num_blocks())
        .map(|j| basis.iter().map(|b| dec.pi(j, b)).collect())
        .collect();
    (basis, comps)
}

/// Peaking certificate for `π_k`; cells are coefficient vectors over
/// `s.hermitian_basis()`. `None` is not a disproof.
pub fn find_peaking(s: &OperatorSystem, k: usize, level_cap: usize, budget: usize, seed: u64) -> Option<PeakingCertificate> {
    let (_, comps) = block_generators(s);
    peak_search_generators(
        &comps,
        k,
        &PeakSearch {
            level_cap,
            budget,
            seed,
            ..PeakSearch::default()
        },
    )
}

// ---------------------------------------------------------------------------
// Boundary analysis

#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    pub tol_gap: f64,
    pub sdp_eps: f64,
    /// `None` means `(max n_k)²`.
    pub level_cap: Option<usize>,
    pub budget: usize,
    pub seed: u64,
    /// Restarts per level for the consistency search on non-boundary blocks.
    pub cross_check_budget: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            tol_gap: DEFAULT_TOL_GAP,
            sdp_eps: DEFAULT_EPS,
            level_cap: None,
            budget: 200,
            seed: 0,
            cross_check_budget: 8,
        }
    }
}

impl AnalyzeOptions {
    pub fn level_cap_for(&self, s: &OperatorSystem) -> usize {
        let maxn = s.block_dims().into_iter().max().unwrap_or(1);
        self.level_cap.unwrap_or(maxn * maxn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMethod {
    SingletonTest,
    SingletonAndPeaking,
}

#[derive(Debug, Clone)]
pub struct BlockBoundary {
    pub block: usize,
    pub is_boundary: bool,
    pub method: BoundaryMethod,
    pub singleton: SingletonReport,
    pub peaking: Option<PeakingCertificate>,
}

#[derive(Debug, Clone)]
pub struct BoundaryReport {
    pub blocks: Vec<BlockBoundary>,
    pub level_cap: usize,
}

impl BoundaryReport {
    pub fn boundary_blocks(&self) -> Vec<usize> {
        self.blocks.iter().filter(|b| b.is_boundary).map(|b| b.block).collect()
    }

    pub fn non_boundary_blocks(&self) -> Vec<usize> {
        self.blocks.iter().filter(|b| !b.is_boundary).map(|b| b.block).collect()
    }

    pub fn is_reduced(&self) -> bool {
        self.blocks.iter().all(|b| b.is_boundary)
    }
}

pub fn analyze_boundary(s: &OperatorSystem, opts: &AnalyzeOptions) -> Result<BoundaryReport> {
    let cap = opts.level_cap_for(s);
    let (_, comps) = block_generators(s);
    let mut blocks = Vec::with_capacity(s.num_blocks());
    for k in 0..s.num_blocks() {
        let check = is_boundary(s, k, opts.sdp_eps)?;
        let budget = if check.is_boundary {
            opts.budget
        } else {
            opts.cross_check_budget
        };
        let search = PeakSearch {
            level_cap: cap,
            budget,
            seed: opts.seed,
            tag: 0,
            margin: opts.tol_gap,
            ..PeakSearch::default()
        };
        let peaking = if budget > 0 {
            peak_search_generators(&comps, k, &search)
        } else {
            None
        };
        if peaking.is_some() && !check.is_boundary {
            return Err(Error::InternalConsistency(format!(
                "block {k} has a verified peaking certificate but a non-singleton extension set"
            )));
        }
        blocks.push(BlockBoundary {
            block: k,
            is_boundary: check.is_boundary,
            method: if peaking.is_some() {
                BoundaryMethod::SingletonAndPeaking
            } else {
                BoundaryMethod::SingletonTest
            },
            singleton: check.singleton,
            peaking,
        });
    }
    Ok(BoundaryReport { blocks, level_cap: cap })
}

// ---------------------------------------------------------------------------
// Envelope

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCheck {
    pub level: usize,
    pub samples: usize,
    /// Largest `|‖x‖ - ‖q(x)‖| / max(‖x‖, 1)` observed.
    pub max_defect: f64,
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub boundary_blocks: Vec<usize>,
    /// Blocks whose sum is the boundary ideal.
    pub ideal_blocks: Vec<usize>,
    /// Dimension of the boundary ideal, `Σ_{k∉B} n_k²`.
    pub ideal_dim: usize,
    /// `{⊕_{k∈B} π_k(s)}` inside `⊕_{k∈B} M_{n_k}`.
    pub envelope_system: MatrixSubspace,
    pub envelope_block_dims: Vec<usize>,
    pub is_reduced: bool,
    pub isometry_checks: Vec<LevelCheck>,
}

/// Compresses `S` to its boundary blocks and checks that the compression is
/// completely isometric on levels `1..=P`.
pub fn c_star_envelope(s: &OperatorSystem, report: &BoundaryReport, opts: &AnalyzeOptions) -> Result<EnvelopeResult> {
    let dec = s.decomposition();
    let dims = dec.block_dims();
    let boundary = report.boundary_blocks();
    if boundary.is_empty() {
        return Err(Error::InternalConsistency("no boundary blocks found".into()));
    }
    let ideal_blocks = report.non_boundary_blocks();
    let env_dims: Vec<usize> = boundary.iter().map(|&k| dims[k]).collect();
    let env_n: usize = env_dims.iter().sum();
    let compress = |x: &CMatrix| -> CMatrix {
        crate::matlin::direct_sum(&boundary.iter().map(|&k| dec.pi(k, x)).collect::<Vec<_>>())
    };
    let envelope_system = s.space().map(env_n, compress, s.options.tol_rank)?;
    let (basis, comps) = block_generators(s);
    let env_comps: Vec<Vec<CMatrix>> = boundary.iter().map(|&k| comps[k].clone()).collect();
    let d = basis.len();
    let mut checks = Vec::new();
    for p in 1..=report.level_cap.max(1) {
        let mut rng = rng::derive(opts.seed, &[0x0045_4e56, p as u64]);
        let mut samples: Vec<Cells> = (0..24).map(|_| random_cells(p, d, &mut rng)).collect();
        for l in 0..d {
            // structured: one basis element on the diagonal, then on the corner
            let mut c: Cells = vec![vec![vec![C64::new(0.0, 0.0); d]; p]; p];
            c[0][0][l] = C64::new(1.0, 0.0);
            c[p - 1][0][l] = C64::new(0.5, 0.5);
            samples.push(c);
        }
        let mut worst: f64 = 0.0;
        for c in &samples {
            let amb = level_image(&basis, c);
            let amb_norm = norm2(&amb);
            let env_norm = env_comps.iter().map(|g| norm2(&level_image(g, c))).fold(0.0, f64::max);
            worst = worst.max((amb_norm - env_norm).abs() / amb_norm.max(1.0));
        }
        checks.push(LevelCheck {
            level: p,
            samples: samples.len(),
            max_defect: worst,
        });
        if worst > opts.tol_gap {
            return Err(Error::InternalConsistency(format!(
                "compression to the boundary blocks is not isometric at level {p} (defect {worst:.3e})"
            )));
        }
    }
    Ok(EnvelopeResult {
        ideal_dim: ideal_blocks.iter().map(|&k| dims[k] * dims[k]).sum(),
        boundary_blocks: boundary,
        ideal_blocks: ideal_blocks.clone(),
        envelope_system,
        envelope_block_dims: env_dims,
        is_reduced: ideal_blocks.is_empty(),
        isometry_checks: checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{diag_real, identity, pauli};
    use crate::opsys::SystemOptions;

    fn three_points() -> OperatorSystem {
        OperatorSystem::from_spanning(3, &[identity(3), diag_real(&[0., 1., 2.])], SystemOptions::default()).unwrap()
    }

    fn block_of_point(s: &OperatorSystem, point: usize) -> usize {
        let dec = s.decomposition();
        (0..3)
            .find(|&k| dec.blocks[k].central_projection[(point, point)].re > 0.5)
            .unwrap()
    }

    #[test]
    fn middle_point_extension_set_is_a_segment() {
        let s = three_points();
        let k = block_of_point(&s, 1);
        let set = ucp_extension_set(&s, k).unwrap();
        let order: Vec<usize> = (0..3).map(|p| block_of_point(&s, p)).collect();
        for t in [0.0, 0.2, 0.5] {
            let mut x = vec![zeros(1, 1); 3];
            x[order[0]][(0, 0)] = C64::new(t, 0.0);
            x[order[1]][(0, 0)] = C64::new(1.0 - 2.0 * t, 0.0);
            x[order[2]][(0, 0)] = C64::new(t, 0.0);
            assert!(set.sp.is_feasible(&x, 1e-9), "t = {t}");
        }
        let mut x = vec![zeros(1, 1); 3];
        x[order[0]][(0, 0)] = C64::new(0.6, 0.0);
        x[order[1]][(0, 0)] = C64::new(-0.2, 0.0);
        x[order[2]][(0, 0)] = C64::new(0.6, 0.0);
        assert!(!set.sp.is_feasible(&x, 1e-9));
        assert!(!is_boundary(&s, k, DEFAULT_EPS).unwrap().is_boundary);
    }

    #[test]
    fn end_points_are_boundary() {
        let s = three_points();
        for p in [0, 2] {
            let k = block_of_point(&s, p);
            assert!(is_boundary(&s, k, DEFAULT_EPS).unwrap().is_boundary);
        }
    }

    #[test]
    fn identity_representation_is_boundary() {
        let s = OperatorSystem::from_spanning(2, &[identity(2), pauli::x(), pauli::z()], SystemOptions::default())
            .unwrap();
        assert!(is_boundary(&s, 0, DEFAULT_EPS).unwrap().is_boundary);
    }

    #[test]
    fn peaking_examples() {
        let s = three_points();
        let k0 = block_of_point(&s, 0);
        let k1 = block_of_point(&s, 1);
        let cert = find_peaking(&s, k0, 1, 50, 0).unwrap();
        assert!(cert.gap > 1e-6);
        assert!(find_peaking(&s, k1, 2, 10, 0).is_none());

        let single = OperatorSystem::from_spanning(2, &[identity(2), pauli::x(), pauli::z()], SystemOptions::default())
            .unwrap();
        let cert = find_peaking(&single, 0, 4, 10, 0).unwrap();
        assert_eq!(cert.level, 1);
    }

    #[test]
    fn explicit_scalar_certificate() {
        let comps = vec![
            vec![diag_real(&[1.0]), diag_real(&[0.0])],
            vec![diag_real(&[0.0]), diag_real(&[1.0])],
            vec![diag_real(&[0.5]), diag_real(&[0.5])],
        ];
        // z = (1, 0.2): values 1, 0.2, 0.6
        let z = vec![vec![vec![C64::new(1.0, 0.0), C64::new(0.2, 0.0)]]];
        let cert = verify_peaking(&comps, 0, &z, 1e-6).unwrap();
        assert!((cert.gap - 0.4).abs() < 1e-12);
        assert!(verify_peaking(&comps, 2, &z, 1e-6).is_none());
    }

    #[test]
    fn analyze_and_envelope() {
        let s = three_points();
        let rep = analyze_boundary(&s, &AnalyzeOptions::default()).unwrap();
        let mut b = rep.boundary_blocks();
        b.sort();
        let mut expect = vec![block_of_point(&s, 0), block_of_point(&s, 2)];
        expect.sort();
        assert_eq!(b, expect);
        assert!(!rep.is_reduced());
        let env = c_star_envelope(&s, &rep, &AnalyzeOptions::default()).unwrap();
        assert_eq!(env.envelope_block_dims, vec![1, 1]);
        assert_eq!(env.ideal_blocks, vec![block_of_point(&s, 1)]);
        assert!(!env.is_reduced);

        let c3 = OperatorSystem::from_spanning(
            3,
            &(0..3).map(|i| crate::matlin::matrix_unit(3, i, i)).collect::<Vec<_>>(),
            SystemOptions::default(),
        )
        .unwrap();
        assert!(analyze_boundary(&c3, &AnalyzeOptions::default()).unwrap().is_reduced());

        let c2 = OperatorSystem::from_spanning(2, &[identity(2), diag_real(&[0., 1.])], SystemOptions::default())
            .unwrap();
        let rep = analyze_boundary(&c2, &AnalyzeOptions::default()).unwrap();
        assert!(rep.is_reduced());
        assert!(c_star_envelope(&c2, &rep, &AnalyzeOptions::default()).unwrap().is_reduced);
    }
}
