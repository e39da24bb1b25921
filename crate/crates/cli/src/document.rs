//! The `ncb-1` JSON interchange format.
//!
//! Every file is `{"version": "ncb-1", "kind": ..., "payload": ...}`. Complex
//! numbers are `[re, im]`; matrices are row-major nested arrays.

use ncb_core::classify::EquivalenceWitness;
use ncb_core::matlin::{CMatrix, RMatrix};
use ncb_core::nonreduced::NonreducedSpec;
use ncb_core::opsys::{OperatorSystem, ParamMap, ParamSequence, SystemOptions};
use ncb_core::C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = "ncb-1";

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported version {0:?}, expected \"ncb-1\"")]
    Version(String),
    #[error("expected kind {expected:?}, found {found:?}")]
    Kind { expected: String, found: String },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Core(#[from] ncb_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Opsys,
    Params,
    NonreducedSpec,
    Witness,
    Report,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Opsys => "opsys",
            Kind::Params => "params",
            Kind::NonreducedSpec => "nonreduced-spec",
            Kind::Witness => "witness",
            Kind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub version: String,
    pub kind: Kind,
    pub payload: Value,
}

/// `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx(pub f64, pub f64);

pub type MatrixJson = Vec<Vec<Cx>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpsysPayload {
    /// Ambient matrix size.
    pub n: usize,
    /// Spanning set of the system (need not be a basis).
    pub span: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapPayload {
    /// `generators[j] = Γ(e_j)`.
    pub generators: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPayload {
    pub d: usize,
    pub maps: Vec<MapPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonreducedPayload {
    pub d: usize,
    pub gamma: Vec<MapPayload>,
    #[serde(default)]
    pub omega: Vec<MapPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessPayload {
    pub sigma: Vec<usize>,
    pub unitaries: Vec<MatrixJson>,
    /// Row-major real `d×d` matrix; column `j` is `θ(e_j)`.
    pub theta: Vec<Vec<f64>>,
    pub residual: f64,
}

// ---------------------------------------------------------------------------

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Cx(m[(i, j)].re, m[(i, j)].im)).collect())
        .collect()
}

pub fn matrix_from_json(m: &MatrixJson, what: &str) -> Result<CMatrix, DocError> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(DocError::Shape(format!("{what}: ragged or empty matrix")));
    }
    if m.iter().flatten().any(|c| !c.0.is_finite() || !c.1.is_finite()) {
        return Err(DocError::Shape(format!("{what}: non-finite entry")));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| C64::new(m[i][j].0, m[i][j].1)))
}

fn square(m: &MatrixJson, n: usize, what: &str) -> Result<CMatrix, DocError> {
    let x = matrix_from_json(m, what)?;
    if x.shape() != (n, n) {
        return Err(DocError::Shape(format!("{what}: expected {n}x{n}, found {}x{}", x.nrows(), x.ncols())));
    }
    Ok(x)
}

fn real_to_json(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl Document {
    pub fn new(kind: Kind, payload: impl Serialize) -> Self {
        Document {
            version: VERSION.into(),
            kind,
            payload: serde_json::to_value(payload).expect("payload serializes"),
        }
    }

    pub fn parse(text: &str) -> Result<Self, DocError> {
        let doc: Document = serde_json::from_str(text)?;
        if doc.version != VERSION {
            return Err(DocError::Version(doc.version));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    fn expect(&self, kind: Kind) -> Result<(), DocError> {
        if self.kind != kind {
            return Err(DocError::Kind {
                expected: kind.name().into(),
                found: self.kind.name().into(),
            });
        }
        Ok(())
    }

    fn payload_as<T: for<'de> Deserialize<'de>>(&self, kind: Kind) -> Result<T, DocError> {
        self.expect(kind)?;
        Ok(serde_json::from_value(self.payload.clone())?)
    }

    // --- opsys

    pub fn from_opsys(s: &OperatorSystem) -> Self {
        Document::new(
            Kind::Opsys,
            OpsysPayload {
                n: s.ambient_dim(),
                span: s.space().basis().iter().map(matrix_to_json).collect(),
            },
        )
    }

    /// The spanning matrices of an `opsys` document, shape-checked.
    pub fn opsys_span(&self) -> Result<(usize, Vec<CMatrix>), DocError> {
        let p: OpsysPayload = self.payload_as(Kind::Opsys)?;
        if p.n == 0 {
            return Err(DocError::Shape("n must be positive".into()));
        }
        let span = p
            .span
            .iter()
            .enumerate()
            .map(|(i, m)| square(m, p.n, &format!("span[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((p.n, span))
    }

    pub fn to_opsys(&self, options: SystemOptions) -> Result<OperatorSystem, DocError> {
        let (n, span) = self.opsys_span()?;
        Ok(OperatorSystem::from_spanning(n, &span, options)?)
    }

    // --- params

    pub fn from_params(seq: &ParamSequence) -> Self {
        Document::new(Kind::Params, params_payload(seq.d(), seq.maps()))
    }

    pub fn to_params(&self) -> Result<ParamSequence, DocError> {
        let p: ParamsPayload = self.payload_as(Kind::Params)?;
        let maps = maps_from_payload(p.d, &p.maps, "maps")?;
        Ok(ParamSequence::new(maps)?)
    }

    // --- nonreduced spec

    pub fn from_nonreduced(spec: &NonreducedSpec) -> Self {
        Document::new(
            Kind::NonreducedSpec,
            NonreducedPayload {
                d: spec.d(),
                gamma: spec.gamma.maps().iter().map(map_payload).collect(),
                omega: spec.omega.iter().map(map_payload).collect(),
            },
        )
    }

    pub fn to_nonreduced(&self) -> Result<NonreducedSpec, DocError> {
        let p: NonreducedPayload = self.payload_as(Kind::NonreducedSpec)?;
        let gamma = ParamSequence::new(maps_from_payload(p.d, &p.gamma, "gamma")?)?;
        let omega = maps_from_payload(p.d, &p.omega, "omega")?;
        Ok(NonreducedSpec::new(gamma, omega)?)
    }

    // --- witness

    pub fn from_witness(w: &EquivalenceWitness) -> Self {
        Document::new(
            Kind::Witness,
            WitnessPayload {
                sigma: w.sigma.clone(),
                unitaries: w.unitaries.iter().map(matrix_to_json).collect(),
                theta: real_to_json(&w.theta),
                residual: w.residual,
            },
        )
    }

    pub fn to_witness(&self) -> Result<EquivalenceWitness, DocError> {
        let p: WitnessPayload = self.payload_as(Kind::Witness)?;
        let d = p.theta.len();
        if d == 0 || p.theta.iter().any(|r| r.len() != d) {
            return Err(DocError::Shape("theta must be a nonempty square matrix".into()));
        }
        if p.unitaries.len() != p.sigma.len() {
            return Err(DocError::Shape("sigma and unitaries differ in length".into()));
        }
        let unitaries = p
            .unitaries
            .iter()
            .enumerate()
            .map(|(k, u)| matrix_from_json(u, &format!("unitaries[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EquivalenceWitness {
            sigma: p.sigma,
            unitaries,
            theta: RMatrix::from_fn(d, d, |i, j| p.theta[i][j]),
            residual: p.residual,
        })
    }

    // --- report

    pub fn report(payload: Value) -> Self {
        Document::new(Kind::Report, payload)
    }
}

fn map_payload(m: &ParamMap) -> MapPayload {
    MapPayload {
        generators: m.generators().iter().map(matrix_to_json).collect(),
    }
}

fn params_payload(d: usize, maps: &[ParamMap]) -> ParamsPayload {
    ParamsPayload {
        d,
        maps: maps.iter().map(map_payload).collect(),
    }
}

fn maps_from_payload(d: usize, maps: &[MapPayload], what: &str) -> Result<Vec<ParamMap>, DocError> {
    maps.iter()
        .enumerate()
        .map(|(k, m)| {
            if m.generators.len() != d {
                return Err(DocError::Shape(format!(
                    "{what}[{k}] has {} generators, expected d = {d}",
                    m.generators.len()
                )));
            }
            let first = matrix_from_json(&m.generators[0], &format!("{what}[{k}].generators[0]"))?;
            let n = first.nrows();
            let gens = m
                .generators
                .iter()
                .enumerate()
                .map(|(j, g)| square(g, n, &format!("{what}[{k}].generators[{j}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ParamMap::new(gens)?)
        })
        .collect()
}
