//! Subcommand implementations; each returns an output document and an exit code.

use ncb_core::choquet::{
    analyze_boundary, c_star_envelope, AnalyzeOptions, BoundaryMethod, BoundaryReport, EnvelopeResult, PeakSearch,
    PeakingCertificate,
};
use ncb_core::classify::{decide_isomorphism, ClassifyOptions, Decision, NegativeReason};
use ncb_core::nonreduced::{
    build_and_verify, check_separations, check_subordination, random_spec, Component, SeparationMethod,
};
use ncb_core::opsys::{
    build_opsys, paulsen_device, random_param_sequence, CheckStatus, OperatorSystem, SystemOptions, VerifyOptions,
};
use ncb_core::Error;
use serde_json::{json, Value};

use crate::document::{DocError, Document, Kind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;
pub const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tol_rank: f64,
    pub tol_gap: f64,
    pub sdp_eps: f64,
    pub level_cap: Option<usize>,
    pub budget: usize,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_rank: ncb_core::matlin::DEFAULT_TOL_RANK,
            tol_gap: ncb_core::choquet::DEFAULT_TOL_GAP,
            sdp_eps: ncb_core::feastool::DEFAULT_EPS,
            level_cap: None,
            budget: 200,
            seed: 0,
        }
    }
}

impl Tolerances {
    pub fn system(&self) -> SystemOptions {
        SystemOptions {
            tol_rank: self.tol_rank,
            seed: self.seed,
        }
    }

    pub fn analyze(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            tol_gap: self.tol_gap,
            sdp_eps: self.sdp_eps,
            level_cap: self.level_cap,
            budget: self.budget,
            seed: self.seed,
            ..AnalyzeOptions::default()
        }
    }

    pub fn verify(&self) -> VerifyOptions {
        VerifyOptions {
            tol_rank: self.tol_rank,
            level_cap: self.level_cap,
            budget: self.budget,
            seed: self.seed,
        }
    }

    pub fn classify(&self) -> ClassifyOptions {
        ClassifyOptions {
            budget: self.budget,
            seed: self.seed,
            sdp_eps: self.sdp_eps,
            ..ClassifyOptions::default()
        }
    }

    pub fn peak_search(&self, level_cap: usize) -> PeakSearch {
        PeakSearch {
            level_cap,
            budget: self.budget,
            seed: self.seed,
            margin: self.tol_gap,
            ..PeakSearch::default()
        }
    }

    fn echo(&self) -> Value {
        json!({
            "tol_rank": self.tol_rank,
            "tol_gap": self.tol_gap,
            "sdp_eps": self.sdp_eps,
            "level_cap": self.level_cap,
            "budget": self.budget,
            "seed": self.seed,
        })
    }
}

/// Result of one command invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub document: Document,
    pub exit: u8,
}

impl Outcome {
    fn new(document: Document, exit: u8) -> Self {
        Outcome { document, exit }
    }
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e.root() {
        Error::InternalConsistency(_) => EXIT_INTERNAL,
        Error::Solver(_) | Error::DegenerateSpectrum { .. } | Error::Unbounded | Error::Infeasible { .. } => {
            EXIT_INTERNAL
        }
        _ => EXIT_INVALID,
    }
}

/// An error report; the `errors` array is machine-readable.
pub fn error_outcome(message: String, exit: u8, tol: &Tolerances) -> Outcome {
    Outcome::new(
        Document::report(json!({
            "command_status": "error",
            "errors": [{ "exit_code": exit, "message": message }],
            "tolerances": tol.echo(),
        })),
        exit,
    )
}

fn doc_error(e: DocError, tol: &Tolerances) -> Outcome {
    let exit = match &e {
        DocError::Core(c) => exit_code_for(c),
        _ => EXIT_INVALID,
    };
    error_outcome(e.to_string(), exit, tol)
}

fn core_error(e: Error, tol: &Tolerances) -> Outcome {
    let exit = exit_code_for(&e);
    error_outcome(e.to_string(), exit, tol)
}

macro_rules! tri {
    ($e:expr, $tol:expr, doc) => {
        match $e {
            Ok(v) => v,
            Err(e) => return doc_error(e, $tol),
        }
    };
    ($e:expr, $tol:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return core_error(e, $tol),
        }
    };
}

/// An opsys document, or a params document built through `build_opsys`.
fn load_system(doc: &Document, tol: &Tolerances) -> Result<(OperatorSystem, Vec<String>), DocError> {
    match doc.kind {
        Kind::Params => {
            let seq = doc.to_params()?;
            let built = build_opsys(&seq, tol.system())?;
            Ok((built.system, built.warnings))
        }
        _ => Ok((doc.to_opsys(tol.system())?, vec![])),
    }
}

fn certificate_json(c: &PeakingCertificate) -> Value {
    json!({
        "component": c.component,
        "level": c.level,
        "target_norm": c.target_norm,
        "other_norm": c.other_norm,
        "gap": c.gap,
        "cells": c.cells.iter().map(|row| row.iter().map(|z| z.iter().map(|x| [x.re, x.im]).collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn envelope_json(env: &EnvelopeResult) -> Value {
    json!({
        "boundary_blocks": env.boundary_blocks,
        "block_dims": env.envelope_block_dims,
        "system_dim": env.envelope_system.dim(),
        "isometry_checks": env.isometry_checks.iter().map(|c| json!({
            "level": c.level,
            "samples": c.samples,
            "max_defect": c.max_defect,
        })).collect::<Vec<_>>(),
    })
}

fn boundary_json(rep: &BoundaryReport) -> Vec<Value> {
    rep.blocks
        .iter()
        .map(|b| {
            json!({
                "block": b.block,
                "boundary": b.is_boundary,
                "method": match b.method {
                    BoundaryMethod::SingletonTest => "singleton-test",
                    BoundaryMethod::SingletonAndPeaking => "singleton-test+peaking",
                },
                "extension_set": {
                    "singleton": b.singleton.singleton,
                    "direction_dim": b.singleton.direction_dim,
                    "face_dims": b.singleton.face_dims,
                    "max_movement": b.singleton.max_movement,
                    "witness_distance": b.singleton.witness.as_ref().map(|w| w.distance),
                },
                "peaking_certificate": b.peaking.as_ref().map(certificate_json),
            })
        })
        .collect()
}

fn analysis(s: &OperatorSystem, tol: &Tolerances) -> Result<(BoundaryReport, EnvelopeResult), Error> {
    let opts = tol.analyze();
    let rep = analyze_boundary(s, &opts)?;
    let env = c_star_envelope(s, &rep, &opts)?;
    Ok((rep, env))
}

/// Decomposition, invariants, boundary status, boundary ideal, envelope and reducedness.
pub fn cmd_analyze(input: &str, tol: &Tolerances) -> Outcome {
    let doc = tri!(Document::parse(input), tol, doc);
    let (s, warnings) = tri!(load_system(&doc, tol), tol, doc);
    let inv = tri!(s.invariants(), tol);
    let (rep, env) = tri!(analysis(&s, tol), tol);
    let dec = s.decomposition();
    Outcome::new(
        Document::report(json!({
            "command": "analyze",
            "decomposition": {
                "num_blocks": s.num_blocks(),
                "block_dims": dec.block_dims(),
                "multiplicities": dec.multiplicities(),
                "algebra_dim": s.algebra().dim(),
            },
            "invariants": {
                "d": inv.d,
                "pi_dims": inv.pi_dims,
                "dim_bound": inv.dim_bound,
                "constraint_holds": inv.constraint_holds(),
            },
            "blocks": boundary_json(&rep),
            "level_cap": rep.level_cap,
            "boundary_ideal": { "blocks": env.ideal_blocks, "dim": env.ideal_dim },
            "envelope": envelope_json(&env),
            "reduced": env.is_reduced,
            "warnings": warnings,
            "errors": [],
            "tolerances": tol.echo(),
        })),
        EXIT_OK,
    )
}

/// Envelope-only view of [`cmd_analyze`].
pub fn cmd_envelope(input: &str, tol: &Tolerances) -> Outcome {
    let doc = tri!(Document::parse(input), tol, doc);
    let (s, warnings) = tri!(load_system(&doc, tol), tol, doc);
    let (_, env) = tri!(analysis(&s, tol), tol);
    Outcome::new(
        Document::report(json!({
            "command": "envelope",
            "boundary_ideal": { "blocks": env.ideal_blocks, "dim": env.ideal_dim },
            "envelope": envelope_json(&env),
            "reduced": env.is_reduced,
            "warnings": warnings,
            "errors": [],
            "tolerances": tol.echo(),
        })),
        EXIT_OK,
    )
}

pub fn cmd_equiv(a: &str, b: &str, tol: &Tolerances) -> Outcome {
    let da = tri!(Document::parse(a), tol, doc);
    let db = tri!(Document::parse(b), tol, doc);
    let (s, _) = tri!(load_system(&da, tol), tol, doc);
    let (t, _) = tri!(load_system(&db, tol), tol, doc);
    let res = match decide_isomorphism(&s, &t, &tol.classify()) {
        Ok(r) => r,
        Err(e) if matches!(e.root(), Error::Precondition(_)) => {
            return error_outcome(
                format!("{e}; run `ncb analyze` and compare the envelopes instead"),
                EXIT_INVALID,
                tol,
            )
        }
        Err(e) => return core_error(e, tol),
    };
    match res.decision {
        Decision::Witness(w) => Outcome::new(Document::from_witness(&w), EXIT_OK),
        Decision::CertifiedNegative(reason) => {
            let (why, detail) = match reason {
                NegativeReason::SourceDimension { left, right } => {
                    ("source-dimension", json!({ "left": left, "right": right }))
                }
                NegativeReason::BlockCount { left, right } => ("block-count", json!({ "left": left, "right": right })),
                NegativeReason::BlockInvariants => (
                    "block-invariants",
                    json!({
                        "left": s.fingerprints().iter().map(|f| json!({"n": f.block_dim, "spectrum": f.spectrum})).collect::<Vec<_>>(),
                        "right": t.fingerprints().iter().map(|f| json!({"n": f.block_dim, "spectrum": f.spectrum})).collect::<Vec<_>>(),
                    }),
                ),
            };
            Outcome::new(
                Document::report(json!({
                    "command": "equiv",
                    "decision": "certified-negative",
                    "reason": why,
                    "detail": detail,
                    "errors": [],
                    "tolerances": tol.echo(),
                })),
                EXIT_NEGATIVE,
            )
        }
        Decision::Inconclusive { permutations, restarts } => Outcome::new(
            Document::report(json!({
                "command": "equiv",
                "decision": "inconclusive",
                "permutations_tried": permutations,
                "restarts": restarts,
                "errors": [],
                "tolerances": tol.echo(),
            })),
            EXIT_INCONCLUSIVE,
        ),
    }
}

/// `params → opsys`.
pub fn cmd_build(input: &str, tol: &Tolerances) -> Outcome {
    let doc = tri!(Document::parse(input), tol, doc);
    let mut seq = tri!(doc.to_params(), tol, doc);
    seq.verify(tol.verify());
    let built = tri!(build_opsys(&seq, tol.system()), tol);
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    Outcome::new(Document::from_opsys(&built.system), EXIT_OK)
}

fn status_json(s: &CheckStatus) -> Value {
    match s {
        CheckStatus::Verified => json!("verified"),
        CheckStatus::Unverified => json!("inconclusive"),
        CheckStatus::Failed(why) => json!({ "failed": why }),
    }
}

fn component_json(c: Component) -> Value {
    match c {
        Component::Gamma(k) => json!({ "gamma": k }),
        Component::Omega(r) => json!({ "omega": r }),
    }
}

pub fn cmd_nonreduced(input: &str, tol: &Tolerances) -> Outcome {
    let doc = tri!(Document::parse(input), tol, doc);
    let spec = tri!(doc.to_nonreduced(), tol, doc);
    let maxn = spec
        .gamma
        .target_dims()
        .into_iter()
        .chain(spec.omega.iter().map(|m| m.target_dim()))
        .max()
        .unwrap_or(1);
    let search = tol.peak_search(tol.level_cap.unwrap_or(maxn * maxn));
    let sub = tri!(check_subordination(&spec, tol.sdp_eps, &search), tol);
    let sep = tri!(check_separations(&spec, &search), tol);
    let subordinate = sub.iter().all(|c| c.holds);
    let checks = json!({
        "subordination": sub.iter().map(|c| json!({
            "omega": c.omega,
            "holds": c.holds,
            "farkas_margin": c.farkas.as_ref().map(|f| f.1),
            "violation": c.violation.as_ref().map(certificate_json),
        })).collect::<Vec<_>>(),
        "strong_separation": status_json(&sep.strong),
        "weak_separation": status_json(&sep.weak),
        "pairs": sep.pairs.iter().map(|p| json!({
            "left": component_json(p.left),
            "right": component_json(p.right),
            "separated": p.separated,
            "method": match p.method {
                SeparationMethod::NormCertificate => "norm-certificate",
                SeparationMethod::Inequivalence => "inequivalent-representations",
                SeparationMethod::Equivalence => "equivalent-representations",
            },
        })).collect::<Vec<_>>(),
    });
    if !subordinate || !sep.weak.is_verified() || matches!(sep.strong, CheckStatus::Failed(_)) {
        return Outcome::new(
            Document::report(json!({
                "command": "nonreduced",
                "checks": checks,
                "errors": [{ "exit_code": EXIT_INVALID, "message": "the specification fails subordination or separation; see checks" }],
                "tolerances": tol.echo(),
            })),
            EXIT_INVALID,
        );
    }
    let rep = tri!(build_and_verify(&spec, &tol.analyze(), tol.system()), tol);
    let exit = if rep.ok() { EXIT_OK } else { EXIT_INTERNAL };
    Outcome::new(
        Document::report(json!({
            "command": "nonreduced",
            "checks": checks,
            "num_blocks": rep.system.num_blocks(),
            "algebra_dim": rep.system.algebra().dim(),
            "summand_of_block": rep.summand_of_block,
            "boundary_summands": rep.boundary_summands,
            "ideal_summands": rep.ideal_summands,
            "envelope": envelope_json(&rep.envelope),
            "gamma_part_reduced": rep.gamma_part_reduced,
            "violations": rep.violations,
            "errors": if rep.ok() { json!([]) } else {
                json!([{ "exit_code": EXIT_INTERNAL, "message": "structure violation" }])
            },
            "tolerances": tol.echo(),
        })),
        exit,
    )
}

/// Paulsen's device of the operator space spanned by an `opsys`-kind document.
pub fn cmd_paulsen(input: &str, tol: &Tolerances) -> Outcome {
    let doc = tri!(Document::parse(input), tol, doc);
    let (n, span) = tri!(doc.opsys_span(), tol, doc);
    let s = tri!(paulsen_device(n, &span, tol.system()), tol);
    Outcome::new(Document::from_opsys(&s), EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomKind {
    Reduced,
    Nonreduced,
}

/// Default source dimension: `min(Σ n_k², 3)`.
pub fn default_d(n: &[usize]) -> usize {
    n.iter().map(|x| x * x).sum::<usize>().min(3)
}

pub fn cmd_random(kind: RandomKind, d: Option<usize>, n: &[usize], m: &[usize], tol: &Tolerances) -> Outcome {
    let d = d.unwrap_or_else(|| default_d(n));
    match kind {
        RandomKind::Reduced => {
            if !m.is_empty() {
                return error_outcome("--m applies to the nonreduced kind only".into(), EXIT_INVALID, tol);
            }
            let seq = tri!(random_param_sequence(d, n, tol.seed, &tol.verify()), tol);
            Outcome::new(Document::from_params(&seq), EXIT_OK)
        }
        RandomKind::Nonreduced => {
            let spec = tri!(random_spec(d, n, m, tol.seed, &tol.verify()), tol);
            Outcome::new(Document::from_nonreduced(&spec), EXIT_OK)
        }
    }
}
