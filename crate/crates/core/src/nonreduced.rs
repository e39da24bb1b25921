//! Nonreduced systems `S_{Γ,Ω} = {Γ_1(z) ⊕ ... ⊕ Γ_N(z) ⊕ Ω_1(z) ⊕ ... ⊕ Ω_M(z)}`.
//!
//! When `Ω` is subordinate to `Γ`, `Γ` is strongly separated and all
//! components are weakly separated, the generated algebra is the full direct
//! sum, the `Ω` blocks form the boundary ideal and the `Γ` part is the
//! C*-envelope.

use crate::algebra::{self, DecomposeOptions};
use crate::choquet::{
    analyze_boundary, c_star_envelope, extension_problem, peak_search_generators, AnalyzeOptions, BoundaryReport, EnvelopeResult,
    PeakSearch, PeakingCertificate,
};
use crate::error::{Error, Result};
use crate::feastool::{find_feasible, BlockPoint, Feasibility};
use crate::matlin::{direct_sum, hermitian_part, CMatrix, MatrixSubspace};
use crate::opsys::{build_opsys, CheckStatus, OperatorSystem, ParamMap, ParamSequence, SystemOptions};
use crate::rng;

#[derive(Debug, Clone)]
pub struct NonreducedSpec {
    pub gamma: ParamSequence,
    pub omega: Vec<ParamMap>,
}

impl NonreducedSpec {
    pub fn new(gamma: ParamSequence, omega: Vec<ParamMap>) -> Result<Self> {
        if omega.iter().any(|m| m.d() != gamma.d()) {
            return Err(Error::InvalidInput("Γ and Ω have different source dimensions".into()));
        }
        Ok(NonreducedSpec { gamma, omega })
    }

    pub fn d(&self) -> usize {
        self.gamma.d()
    }

    pub fn n_gamma(&self) -> usize {
        self.gamma.len()
    }

    pub fn n_omega(&self) -> usize {
        self.omega.len()
    }

    /// `Γ_1, ..., Γ_N, Ω_1, ..., Ω_M` as one sequence.
    pub fn combined(&self) -> Result<ParamSequence> {
        let mut maps = self.gamma.maps().to_vec();
        maps.extend(self.omega.iter().cloned());
        ParamSequence::new(maps)
    }

    fn component(&self, c: Component) -> &ParamMap {
        match c {
            Component::Gamma(k) => &self.gamma.maps()[k],
            Component::Omega(r) => &self.omega[r],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Gamma(usize),
    Omega(usize),
}

// ---------------------------------------------------------------------------
// Subordination

#[derive(Debug, Clone)]
pub struct SubordinationCheck {
    pub omega: usize,
    pub holds: bool,
    /// Choi matrices of a UCP map `⊕_k M_{n_k} → M_{m_r}` extending `⊕Γ_k(z) ↦ Ω_r(z)`.
    pub ucp_witness: Option<BlockPoint>,
    /// Farkas multipliers when the extension problem is infeasible.
    pub farkas: Option<(Vec<f64>, f64)>,
    /// A cell matrix with `‖Ω_r‖ > max_k ‖Γ_k‖`, when one was found.
    pub violation: Option<PeakingCertificate>,
}

/// Property (a) for each `Ω_r`, decided by UCP-extension feasibility.
pub fn check_subordination(spec: &NonreducedSpec, eps: f64, search: &PeakSearch) -> Result<Vec<SubordinationCheck>> {
    let mut out = Vec::with_capacity(spec.n_omega());
    for (r, om) in spec.omega.iter().enumerate() {
        let sp = extension_problem(spec.gamma.maps(), om).map_err(|e| e.in_block(r))?;
        match find_feasible(&sp, eps).map_err(|e| e.in_block(r))? {
            Feasibility::Feasible(x) => out.push(SubordinationCheck {
                omega: r,
                holds: true,
                ucp_witness: Some(x),
                farkas: None,
                violation: None,
            }),
            Feasibility::Infeasible { certificate, margin } => {
                let mut comps = vec![om.generators().to_vec()];
                comps.extend(spec.gamma.maps().iter().map(|g| g.generators().to_vec()));
                let violation = peak_search_generators(&comps, 0, &PeakSearch { tag: 0xa0 + r as u64, ..*search });
                out.push(SubordinationCheck {
                    omega: r,
                    holds: false,
                    ucp_witness: None,
                    farkas: Some((certificate, margin)),
                    violation,
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Separation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationMethod {
    /// A cell matrix whose norms differ by more than the margin.
    NormCertificate,
    /// The pair generates two inequivalent irreducible representations.
    Inequivalence,
    /// The pair generates a single irreducible representation.
    Equivalence,
}

#[derive(Debug, Clone)]
pub struct PairSeparation {
    pub left: Component,
    pub right: Component,
    pub separated: bool,
    pub method: SeparationMethod,
    pub certificate: Option<PeakingCertificate>,
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub strong: CheckStatus,
    pub strong_certificates: Vec<Option<PeakingCertificate>>,
    pub weak: CheckStatus,
    pub pairs: Vec<PairSeparation>,
}

/// `true` when `a ⊕ b` generates two inequivalent summands.
fn inequivalent(a: &ParamMap, b: &ParamMap, seed: u64) -> Result<bool> {
    let n = a.target_dim() + b.target_dim();
    let span: Vec<CMatrix> = (0..a.d())
        .map(|j| direct_sum(&[a.generators()[j].clone(), b.generators()[j].clone()]))
        .collect();
    let space = MatrixSubspace::orthonormalize_span(n, &span, crate::matlin::DEFAULT_TOL_RANK)?;
    let alg = algebra::generate_algebra(&space, crate::matlin::DEFAULT_TOL_RANK)?;
    let dec = algebra::block_decompose(
        &alg,
        DecomposeOptions {
            seed,
            ..DecomposeOptions::default()
        },
    )?;
    Ok(dec.num_blocks() >= 2)
}

/// Properties (b) and (c).
pub fn check_separations(spec: &NonreducedSpec, search: &PeakSearch) -> Result<SeparationReport> {
    let gamma_comps: Vec<Vec<CMatrix>> = spec.gamma.maps().iter().map(|g| g.generators().to_vec()).collect();
    let mut strong = CheckStatus::Verified;
    let mut strong_certificates = Vec::with_capacity(spec.n_gamma());
    for k in 0..spec.n_gamma() {
        let cert = peak_search_generators(&gamma_comps, k, &PeakSearch { tag: 0xb0 + k as u64, ..*search });
        if cert.is_none() && strong.is_verified() {
            strong = CheckStatus::Unverified;
        }
        strong_certificates.push(cert);
    }
    let mut pairs = Vec::new();
    let omegas: Vec<Component> = (0..spec.n_omega()).map(Component::Omega).collect();
    let mut candidates = Vec::new();
    for (i, &a) in omegas.iter().enumerate() {
        for &b in &omegas[i + 1..] {
            candidates.push((a, b));
        }
        for k in 0..spec.n_gamma() {
            candidates.push((a, Component::Gamma(k)));
        }
    }
    let mut weak = CheckStatus::Verified;
    for (idx, (a, b)) in candidates.into_iter().enumerate() {
        let (ma, mb) = (spec.component(a), spec.component(b));
        let comps = vec![ma.generators().to_vec(), mb.generators().to_vec()];
        let small = PeakSearch {
            tag: 0xc000 + idx as u64,
            budget: search.budget.clamp(1, 20),
            ..*search
        };
        let cert = peak_search_generators(&comps, 0, &small).or_else(|| peak_search_generators(&comps, 1, &small));
        let entry = if let Some(c) = cert {
            PairSeparation {
                left: a,
                right: b,
                separated: true,
                method: SeparationMethod::NormCertificate,
                certificate: Some(c),
            }
        } else {
            let ineq = inequivalent(ma, mb, search.seed)?;
            PairSeparation {
                left: a,
                right: b,
                separated: ineq,
                method: if ineq {
                    SeparationMethod::Inequivalence
                } else {
                    SeparationMethod::Equivalence
                },
                certificate: None,
            }
        };
        if !entry.separated {
            weak = CheckStatus::Failed(format!("{:?} and {:?} are not weakly separated", a, b));
        }
        pairs.push(entry);
    }
    Ok(SeparationReport {
        strong,
        strong_certificates,
        weak,
        pairs,
    })
}

// ---------------------------------------------------------------------------
// Construction and verification

#[derive(Debug, Clone)]
pub struct NonreducedReport {
    pub system: OperatorSystem,
    /// `summand[k]` is the index (Γ first, then Ω) of the summand carrying block `k`.
    pub summand_of_block: Vec<usize>,
    pub boundary: BoundaryReport,
    pub envelope: EnvelopeResult,
    /// Summand indices of the boundary blocks.
    pub boundary_summands: Vec<usize>,
    /// Summand indices of the ideal blocks.
    pub ideal_summands: Vec<usize>,
    pub gamma_part_reduced: bool,
    pub violations: Vec<String>,
}

impl NonreducedReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn build_and_verify(spec: &NonreducedSpec, opts: &AnalyzeOptions, sys: SystemOptions) -> Result<NonreducedReport> {
    let all = spec.combined()?;
    let built = build_opsys(&all, sys)?;
    let system = built.system;
    let dims = all.target_dims();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n;
            Some(o)
        })
        .collect();
    let dec = system.decomposition();
    let mut violations = Vec::new();
    let mut summand_of_block = Vec::with_capacity(dec.num_blocks());
    for (k, blk) in dec.blocks.iter().enumerate() {
        let weights: Vec<f64> = offsets
            .iter()
            .zip(&dims)
            .map(|(&o, &n)| (o..o + n).map(|i| blk.central_projection[(i, i)].re).sum())
            .collect();
        let (best, w) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &w)| (i, w))
            .unwrap();
        if (w - dims[best] as f64).abs() > 1e-6 || blk.dim != dims[best] {
            violations.push(format!("block {k} is not a full summand"));
        }
        summand_of_block.push(best);
    }
    let mut seen = summand_of_block.clone();
    seen.sort();
    seen.dedup();
    if dec.num_blocks() != dims.len() || seen.len() != dims.len() {
        violations.push(format!(
            "generated algebra has {} blocks, expected {}",
            dec.num_blocks(),
            dims.len()
        ));
    }
    let boundary = analyze_boundary(&system, opts)?;
    let envelope = c_star_envelope(&system, &boundary, opts)?;
    let mut boundary_summands: Vec<usize> = boundary.boundary_blocks().iter().map(|&k| summand_of_block[k]).collect();
    let mut ideal_summands: Vec<usize> = boundary.non_boundary_blocks().iter().map(|&k| summand_of_block[k]).collect();
    boundary_summands.sort();
    ideal_summands.sort();
    let n = spec.n_gamma();
    if boundary_summands != (0..n).collect::<Vec<_>>() {
        violations.push(format!("boundary summands {boundary_summands:?}, expected the Γ part 0..{n}"));
    }
    if ideal_summands != (n..dims.len()).collect::<Vec<_>>() {
        violations.push(format!("ideal summands {ideal_summands:?}, expected the Ω part"));
    }
    let gamma_sys = build_opsys(&spec.gamma, sys)?.system;
    let gamma_part_reduced = analyze_boundary(
        &gamma_sys,
        &AnalyzeOptions {
            budget: 0,
            cross_check_budget: 0,
            ..*opts
        },
    )?
    .is_reduced();
    if !gamma_part_reduced {
        violations.push("the Γ part alone is not reduced".into());
    }
    Ok(NonreducedReport {
        system,
        summand_of_block,
        boundary,
        envelope,
        boundary_summands,
        ideal_summands,
        gamma_part_reduced,
        violations,
    })
}

// ---------------------------------------------------------------------------
// Random instances

/// `V* (⊕_k Γ_k(·)) V` for an isometry `V: C^m → ⊕ H_k`; always subordinate to `Γ`.
pub fn compress(gamma: &ParamSequence, v: &CMatrix) -> Result<ParamMap> {
    let gens: Vec<CMatrix> = (0..gamma.d())
        .map(|j| {
            let e = crate::opsys::StarVectorSpace::new(gamma.d()).unwrap().basis_vector(j);
            hermitian_part(&(v.adjoint() * gamma.apply(&e) * v))
        })
        .collect();
    ParamMap::new(gens)
}

/// Random `Γ` with dims `n` and `Ω` with dims `m`, each `Ω_r` a random compression.
pub fn random_spec(d: usize, n: &[usize], m: &[usize], seed: u64, verify: &crate::opsys::VerifyOptions) -> Result<NonreducedSpec> {
    let gamma = crate::opsys::random_param_sequence(d, n, seed, verify)?;
    let total: usize = n.iter().sum();
    let mut omega = Vec::with_capacity(m.len());
    for (r, &mr) in m.iter().enumerate() {
        if mr > total {
            return Err(Error::InvalidInput(format!("Ω_{r} has size {mr} > Σ n_k = {total}")));
        }
        let mut found = None;
        for attempt in 0..50u64 {
            let mut g = rng::derive(seed, &[0x4f4d, r as u64, attempt]);
            let v = rng::isometry(total, mr, &mut g);
            let om = compress(&gamma, &v)?;
            // keep compressions whose range is irreducible
            let range = om.range(verify.tol_rank);
            if algebra::commutant(&range, verify.tol_rank)?.dim() == 1 {
                found = Some(om);
                break;
            }
        }
        omega.push(found.ok_or_else(|| {
            Error::InvalidInput(format!("no irreducible compression of size {mr} found"))
        })?);
    }
    NonreducedSpec::new(gamma, omega)
}
