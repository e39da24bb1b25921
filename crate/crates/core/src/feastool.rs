//! Semidefinite feasibility engine.
//!
//! A [`Spectrahedron`] is `{X = (X_1..X_q) : X_j ⪰ 0, ⟨A_i, X⟩ = b_i}` with
//! hermitian block variables and `⟨A, X⟩ = Σ_j Re tr(A_j X_j)`. Problems are
//! solved by an infeasible-start primal-dual interior point method (HKM
//! direction with Mehrotra predictor-corrector). When a feasible point is
//! known, the problem is first restricted to the minimal face containing the
//! feasible set, so that the interior point method always runs on a
//! strictly feasible problem.

use nalgebra::{Cholesky, DVector, SVD};

use crate::error::{Error, Result};
use crate::matlin::{
    herm_eigen, herm_from_vec, herm_to_vec, hermitian_part, identity, real_nullspace, zeros, CMatrix, RMatrix,
    C64,
};

pub type RVector = DVector<f64>;

/// A point of a block spectrahedron: one hermitian matrix per cone.
pub type BlockPoint = Vec<CMatrix>;

/// Default accuracy for optimal values and movement tests.
pub const DEFAULT_EPS: f64 = 1e-7;
/// Feasibility tolerance for known points.
pub const KNOWN_POINT_TOL: f64 = 1e-9;
/// Feasibility tolerance for returned points.
pub const POINT_TOL: f64 = 1e-8;

const IPM_TOL: f64 = 1e-11;
const IPM_MAX_ITER: usize = 120;
const DIVERGENCE: f64 = 1e12;
const IPM_ACCEPT: f64 = 1e-9;
const IPM_STALL: usize = 6;
const NULL_TOL: f64 = 1e-18;
const RANGE_TOL: f64 = 1e-8;
const AUX_POSITIVE: f64 = 1e-7;
const AUX_KERNEL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Spectrahedron {
    cone_dims: Vec<usize>,
    rows: Vec<RVector>,
    rhs: Vec<f64>,
    known_point: Option<BlockPoint>,
}

impl Spectrahedron {
    pub fn new(cone_dims: Vec<usize>) -> Result<Self> {
        if cone_dims.is_empty() || cone_dims.contains(&0) {
            return Err(Error::InvalidInput("cone dimensions must be positive".into()));
        }
        Ok(Spectrahedron {
            cone_dims,
            rows: Vec::new(),
            rhs: Vec::new(),
            known_point: None,
        })
    }

    /// Nonnegative orthant `R^n_+` as `n` one-dimensional cones.
    pub fn orthant(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn cone_dims(&self) -> &[usize] {
        &self.cone_dims
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Real dimension of the ambient space of block variables.
    pub fn var_dim(&self) -> usize {
        self.cone_dims.iter().map(|m| m * m).sum()
    }

    pub fn known_point(&self) -> Option<&BlockPoint> {
        self.known_point.as_ref()
    }

    /// Adds `Σ_j Re tr(A_j X_j) = rhs`; the hermitian part of each `A_j` is used.
    pub fn add_constraint(&mut self, coeffs: &[CMatrix], rhs: f64) -> Result<()> {
        self.check_shape(coeffs)?;
        if !rhs.is_finite() || coeffs.iter().any(|c| !crate::matlin::is_finite(c)) {
            return Err(Error::InvalidInput("constraint data must be finite".into()));
        }
        self.rows.push(to_vec(&self.cone_dims, coeffs));
        self.rhs.push(rhs);
        Ok(())
    }

    /// Adds `Σ_j c_j x_j = rhs` on an orthant.
    pub fn add_linear(&mut self, coeffs: &[f64], rhs: f64) -> Result<()> {
        let blocks: Vec<CMatrix> = coeffs.iter().map(|&c| CMatrix::from_element(1, 1, C64::new(c, 0.0))).collect();
        self.add_constraint(&blocks, rhs)
    }

    /// Records a feasible point, checked to [`KNOWN_POINT_TOL`].
    pub fn set_known_point(&mut self, x0: BlockPoint) -> Result<()> {
        self.check_shape(&x0)?;
        let res = self.residual(&x0);
        let eig = self.min_eigenvalue(&x0);
        if res > KNOWN_POINT_TOL || eig < -KNOWN_POINT_TOL {
            return Err(Error::InternalConsistency(format!(
                "known point is not feasible (residual {res:.3e}, min eigenvalue {eig:.3e})"
            )));
        }
        self.known_point = Some(x0.iter().map(hermitian_part).collect());
        Ok(())
    }

    fn check_shape(&self, x: &[CMatrix]) -> Result<()> {
        if x.len() != self.cone_dims.len() || x.iter().zip(&self.cone_dims).any(|(a, &m)| a.shape() != (m, m)) {
            return Err(Error::InvalidInput(format!(
                "expected blocks of sizes {:?}",
                self.cone_dims
            )));
        }
        Ok(())
    }

    /// `max_i |⟨A_i, X⟩ - b_i|`.
    pub fn residual(&self, x: &[CMatrix]) -> f64 {
        let v = to_vec(&self.cone_dims, x);
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| (r.dot(&v) - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self, x: &[CMatrix]) -> f64 {
        x.iter()
            .map(crate::matlin::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self, x: &[CMatrix], tol: f64) -> bool {
        self.check_shape(x).is_ok() && self.residual(x) <= tol && self.min_eigenvalue(x) >= -tol
    }

    /// Real constraint matrix (rows are the vectorised `A_i`).
    pub fn constraint_matrix(&self) -> RMatrix {
        let mut a = RMatrix::zeros(self.rows.len(), self.var_dim());
        for (i, r) in self.rows.iter().enumerate() {
            a.row_mut(i).copy_from(&r.transpose());
        }
        a
    }

    /// Kernel of the constraint map, as block points orthonormal under `Re tr`.
    pub fn direction_space(&self) -> Vec<BlockPoint> {
        let k = real_nullspace(&self.constraint_matrix(), NULL_TOL);
        (0..k.ncols())
            .map(|c| from_vec(&self.cone_dims, k.column(c).as_slice()))
            .collect()
    }

    pub fn pairing(&self, a: &[CMatrix], x: &[CMatrix]) -> f64 {
        a.iter().zip(x).map(|(a, x)| crate::matlin::real_pairing(a, x)).sum()
    }
}

fn to_vec(dims: &[usize], x: &[CMatrix]) -> RVector {
    let total: usize = dims.iter().map(|m| m * m).sum();
    let mut v = RVector::zeros(total);
    let mut off = 0;
    for (blk, &m) in x.iter().zip(dims) {
        herm_to_vec(blk, &mut v.as_mut_slice()[off..off + m * m]);
        off += m * m;
    }
    v
}

fn from_vec(dims: &[usize], v: &[f64]) -> BlockPoint {
    let mut off = 0;
    dims.iter()
        .map(|&m| {
            let b = herm_from_vec(m, &v[off..off + m * m]);
            off += m * m;
            b
        })
        .collect()
}

fn block_dist(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Row reduction

/// Orthonormal rows spanning the row space of `a`, with the transformed
/// right-hand side. `map` sends reduced multipliers back to original ones.
struct ReducedRows {
    a: RMatrix,
    b: RVector,
    map: RMatrix,
}

fn reduce_rows(a: &RMatrix, b: &RVector) -> Result<ReducedRows> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        if b.iter().any(|v| v.abs() > KNOWN_POINT_TOL) {
            return Err(Error::Infeasible {
                certificate: b.iter().copied().collect(),
                margin: b.norm_squared(),
            });
        }
        return Ok(ReducedRows {
            a: RMatrix::zeros(0, n),
            b: RVector::zeros(0),
            map: RMatrix::zeros(m, 0),
        });
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i].powi(2) > NULL_TOL * smax * smax)
        .collect();
    let r = keep.len();
    let mut ra = RMatrix::zeros(r, n);
    let mut rb = RVector::zeros(r);
    let mut map = RMatrix::zeros(m, r);
    let mut proj = RVector::zeros(m);
    for (k, &i) in keep.iter().enumerate() {
        let s = svd.singular_values[i];
        ra.row_mut(k).copy_from(&vt.row(i));
        let ub = u.column(i).dot(b);
        rb[k] = ub / s;
        proj += u.column(i) * ub;
        map.column_mut(k).copy_from(&(u.column(i) / s));
    }
    let resid = b - proj;
    if resid.norm() > 1e-9 * (1.0 + b.norm()) {
        // resid is orthogonal to the column space: A^T resid = 0, b·resid > 0
        return Err(Error::Infeasible {
            margin: resid.norm_squared(),
            certificate: resid.iter().copied().collect(),
        });
    }
    Ok(ReducedRows { a: ra, b: rb, map })
}

// ---------------------------------------------------------------------------
// Interior point method

/// `min ⟨C, X⟩ s.t. A·vec(X) = b, X ⪰ 0` with orthonormal constraint rows.
struct Sdp {
    dims: Vec<usize>,
    a: RMatrix,
    b: RVector,
    c: BlockPoint,
}

#[derive(Debug, Clone)]
struct SdpSolution {
    x: BlockPoint,
    y: RVector,
    primal: f64,
    dual: f64,
    pinf: f64,
    dinf: f64,
}

impl SdpSolution {
    fn gap(&self) -> f64 {
        (self.primal - self.dual).abs()
    }
}

enum SdpOutcome {
    Solved(SdpSolution),
    PrimalUnbounded,
    DualUnbounded,
}

fn pd_inverse(x: &CMatrix) -> CMatrix {
    match Cholesky::new(x.clone()) {
        Some(ch) => hermitian_part(&ch.inverse()),
        None => crate::matlin::herm_fn(x, |l| 1.0 / l.max(1e-300)),
    }
}

/// Largest `α` with `x + α·dx ⪰ 0` (infinite when `dx ⪰ 0`).
fn max_step(x: &CMatrix, dx: &CMatrix) -> f64 {
    if x.nrows() == 0 {
        return f64::INFINITY;
    }
    let w = match Cholesky::new(x.clone()) {
        Some(ch) => {
            let l = ch.l();
            let t = l.solve_lower_triangular(dx).unwrap_or_else(|| dx.clone());
            l.solve_lower_triangular(&t.adjoint()).unwrap_or(t)
        }
        None => {
            let isq = crate::matlin::herm_fn(x, |l| 1.0 / l.max(1e-300).sqrt());
            &isq * dx * &isq
        }
    };
    let lmin = herm_eigen(&hermitian_part(&w)).values[0];
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

impl Sdp {
    fn nn(&self) -> f64 {
        self.dims.iter().sum::<usize>() as f64
    }

    fn vec(&self, x: &[CMatrix]) -> RVector {
        to_vec(&self.dims, x)
    }

    fn adjoint(&self, y: &RVector) -> BlockPoint {
        from_vec(&self.dims, (self.a.transpose() * y).as_slice())
    }

    fn dot(&self, x: &[CMatrix], s: &[CMatrix]) -> f64 {
        x.iter().zip(s).map(|(a, b)| crate::matlin::real_pairing(a, b)).sum()
    }

    fn solve(&self) -> Result<SdpOutcome> {
        let m = self.a.nrows();
        let q = self.dims.len();
        let nn = self.nn();
        let cnorm = self.c.iter().map(crate::matlin::frob_norm).fold(0.0, f64::max);
        let bnorm = self.b.norm();
        let xi = (10f64).max(nn.sqrt()).max(nn * self.b.iter().map(|v| (1.0 + v.abs()) / 2.0).fold(0.0, f64::max));
        let eta = (10f64).max(nn.sqrt()).max(1.0 + cnorm);
        let mut x: BlockPoint = self.dims.iter().map(|&d| identity(d) * C64::new(xi, 0.0)).collect();
        let mut s: BlockPoint = self.dims.iter().map(|&d| identity(d) * C64::new(eta, 0.0)).collect();
        let mut y = RVector::zeros(m);
        let mut best: Option<(f64, SdpSolution)> = None;
        let mut stalled = 0;
        let rows: Vec<BlockPoint> = (0..m)
            .map(|i| from_vec(&self.dims, self.a.row(i).transpose().as_slice()))
            .collect();

        for _ in 0..IPM_MAX_ITER {
            let ax = &self.a * self.vec(&x);
            let rp = &self.b - ax;
            let aty = self.adjoint(&y);
            let rd: BlockPoint = (0..q).map(|k| &self.c[k] - &aty[k] - &s[k]).collect();
            let pinf = rp.norm() / (1.0 + bnorm);
            let dinf = rd.iter().map(crate::matlin::frob_norm).fold(0.0, f64::max) / (1.0 + cnorm);
            let primal = self.dot(&self.c, &x);
            let dual = self.b.dot(&y);
            let relgap = (primal - dual).abs() / (1.0 + primal.abs() + dual.abs());
            let mu = self.dot(&x, &s) / nn;
            let sol = SdpSolution {
                x: x.clone(),
                y: y.clone(),
                primal,
                dual,
                pinf,
                dinf,
            };
            let merit = pinf.max(dinf).max(relgap);
            if best.as_ref().is_none_or(|(bm, _)| merit < *bm) {
                best = Some((merit, sol.clone()));
                stalled = 0;
            } else {
                stalled += 1;
            }
            if pinf < IPM_TOL && dinf < IPM_TOL && relgap < IPM_TOL {
                return Ok(SdpOutcome::Solved(sol));
            }
            let accurate = best.as_ref().is_some_and(|(bm, _)| *bm < IPM_ACCEPT);
            if stalled >= IPM_STALL && accurate {
                break;
            }
            let xmax = x.iter().map(crate::matlin::frob_norm).fold(0.0, f64::max);
            if xmax > DIVERGENCE && !accurate {
                return Ok(SdpOutcome::PrimalUnbounded);
            }
            if y.norm() > DIVERGENCE && !accurate {
                return Ok(SdpOutcome::DualUnbounded);
            }
            if xmax > DIVERGENCE || y.norm() > DIVERGENCE {
                break;
            }

            let sinv: BlockPoint = s.iter().map(pd_inverse).collect();
            let mut schur = RMatrix::zeros(m, m);
            for (j, row) in rows.iter().enumerate() {
                let g: BlockPoint = (0..q).map(|k| &x[k] * &row[k] * &sinv[k]).collect();
                let col = &self.a * self.vec(&g);
                schur.column_mut(j).copy_from(&col);
            }
            let schur = (&schur + schur.transpose()) * 0.5;
            let chol = match Cholesky::new(schur.clone()) {
                Some(c) => c,
                None => {
                    let reg = 1e-14 * schur.diagonal().iter().copied().fold(1.0, f64::max);
                    let mut r = schur.clone();
                    for i in 0..m {
                        r[(i, i)] += reg;
                    }
                    match Cholesky::new(r) {
                        Some(c) => c,
                        None => break,
                    }
                }
            };
            let xrs: BlockPoint = (0..q).map(|k| &x[k] * &rd[k] * &sinv[k]).collect();
            let a_xrs = &self.a * self.vec(&xrs);
            let direction = |rc: &BlockPoint| {
                let rhs = &rp - &self.a * self.vec(rc) + &a_xrs;
                let dy = chol.solve(&rhs);
                let atdy = self.adjoint(&dy);
                let ds: BlockPoint = (0..q).map(|k| &rd[k] - &atdy[k]).collect();
                let dx: BlockPoint = (0..q)
                    .map(|k| hermitian_part(&(&rc[k] - hermitian_part(&(&x[k] * &ds[k] * &sinv[k])))))
                    .collect();
                (dx, dy, ds)
            };
            let steps = |dx: &BlockPoint, ds: &BlockPoint| {
                let ap = (0..q).map(|k| max_step(&x[k], &dx[k])).fold(f64::INFINITY, f64::min);
                let ad = (0..q).map(|k| max_step(&s[k], &ds[k])).fold(f64::INFINITY, f64::min);
                (ap, ad)
            };
            // predictor
            let rc0: BlockPoint = x.iter().map(|v| -v).collect();
            let (dxa, _dya, dsa) = direction(&rc0);
            let (ap, ad) = steps(&dxa, &dsa);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let xa: BlockPoint = (0..q).map(|k| &x[k] + &dxa[k] * C64::new(ap, 0.0)).collect();
            let sa: BlockPoint = (0..q).map(|k| &s[k] + &dsa[k] * C64::new(ad, 0.0)).collect();
            let mu_aff = self.dot(&xa, &sa) / nn;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            // corrector
            let rc: BlockPoint = (0..q)
                .map(|k| {
                    &sinv[k] * C64::new(sigma * mu, 0.0)
                        - &x[k]
                        - hermitian_part(&(&dxa[k] * &dsa[k] * &sinv[k]))
                })
                .collect();
            let (dx, dy, ds) = direction(&rc);
            let (ap, ad) = steps(&dx, &ds);
            let gamma = if mu < 1e-6 { 0.99 } else { 0.95 };
            let ap = (gamma * ap).min(1.0);
            let ad = (gamma * ad).min(1.0);
            for k in 0..q {
                x[k] = hermitian_part(&(&x[k] + &dx[k] * C64::new(ap, 0.0)));
                s[k] = hermitian_part(&(&s[k] + &ds[k] * C64::new(ad, 0.0)));
            }
            y += dy * ad;
            if ap < 1e-12 && ad < 1e-12 {
                break;
            }
        }
        let (_, sol) = best.expect("at least one iterate");
        Ok(SdpOutcome::Solved(sol))
    }
}

// ---------------------------------------------------------------------------
// Phase 1

/// Result of a feasibility search.
#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(BlockPoint),
    /// Multipliers `y` with `b·y > 0` and `Σ y_i A_i ⪯ 0`.
    Infeasible { certificate: Vec<f64>, margin: f64 },
}

/// Decides feasibility by `min s s.t. A(X) + s·r = b, X ⪰ 0, s ≥ 0` with
/// `r = b - A(1)`.
pub fn find_feasible(sp: &Spectrahedron, eps: f64) -> Result<Feasibility> {
    if let Some(x0) = &sp.known_point {
        return Ok(Feasibility::Feasible(x0.clone()));
    }
    let a = sp.constraint_matrix();
    let b = RVector::from_vec(sp.rhs.clone());
    let red = match reduce_rows(&a, &b) {
        Ok(r) => r,
        Err(Error::Infeasible { certificate, margin }) => {
            return Ok(Feasibility::Infeasible { certificate, margin })
        }
        Err(e) => return Err(e),
    };
    let dims = sp.cone_dims.clone();
    if red.a.nrows() == 0 {
        return Ok(Feasibility::Feasible(dims.iter().map(|&m| identity(m)).collect()));
    }
    let ones: BlockPoint = dims.iter().map(|&m| identity(m)).collect();
    let r = &red.b - &red.a * to_vec(&dims, &ones);
    let mut pdims = dims.clone();
    pdims.push(1);
    let d = red.a.ncols();
    let mut pa = RMatrix::zeros(red.a.nrows(), d + 1);
    pa.view_mut((0, 0), (red.a.nrows(), d)).copy_from(&red.a);
    pa.column_mut(d).copy_from(&r);
    let mut c: BlockPoint = dims.iter().map(|&m| zeros(m, m)).collect();
    c.push(identity(1));
    // rows are no longer orthonormal; re-reduce while tracking the map
    let red2 = reduce_rows(&pa, &red.b)?;
    let sdp = Sdp {
        dims: pdims,
        a: red2.a.clone(),
        b: red2.b.clone(),
        c,
    };
    let sol = match sdp.solve()? {
        SdpOutcome::Solved(s) => s,
        _ => return Err(Error::Solver("phase-1 problem diverged".into())),
    };
    let slack = sol.x[dims.len()][(0, 0)].re;
    let threshold = eps * (1.0 + red.b.norm());
    if slack <= threshold && sol.pinf < 1e-8 {
        let mut x = sol.x;
        x.pop();
        return Ok(Feasibility::Feasible(x));
    }
    let y_red1 = &red2.map * &sol.y;
    let y = &red.map * y_red1;
    let margin = b.dot(&y);
    Ok(Feasibility::Infeasible {
        certificate: y.iter().copied().collect(),
        margin,
    })
}

// ---------------------------------------------------------------------------
// Facial reduction

/// The minimal face of the PSD cone product containing a spectrahedron,
/// as column-orthonormal `Q_j` with `X_j = Q_j Y_j Q_j*`.
#[derive(Debug, Clone)]
struct Face {
    q: Vec<CMatrix>,
    /// Reduced constraints in face coordinates.
    a: RMatrix,
    b: RVector,
    /// Direction space of the face problem (columns in face coordinates).
    kernel: RMatrix,
    y0: BlockPoint,
    reductions: usize,
}

impl Face {
    fn dims(&self) -> Vec<usize> {
        self.q.iter().map(|q| q.ncols()).collect()
    }

    fn lift(&self, y: &[CMatrix]) -> BlockPoint {
        self.q
            .iter()
            .zip(y)
            .map(|(q, y)| hermitian_part(&(q * y * q.adjoint())))
            .collect()
    }

    fn compress(&self, x: &[CMatrix]) -> BlockPoint {
        self.q.iter().zip(x).map(|(q, x)| hermitian_part(&(q.adjoint() * x * q))).collect()
    }
}

fn compress_rows(sp: &Spectrahedron, q: &[CMatrix]) -> RMatrix {
    let fdims: Vec<usize> = q.iter().map(|q| q.ncols()).collect();
    let fd: usize = fdims.iter().map(|m| m * m).sum();
    let mut out = RMatrix::zeros(sp.rows.len(), fd);
    for (i, row) in sp.rows.iter().enumerate() {
        let blocks = from_vec(&sp.cone_dims, row.as_slice());
        let comp: BlockPoint = q.iter().zip(&blocks).map(|(q, a)| q.adjoint() * a * q).collect();
        out.row_mut(i).copy_from(&to_vec(&fdims, &comp).transpose());
    }
    out
}

fn orthonormal_columns(cols: &[CMatrix], rows: usize) -> CMatrix {
    let total: usize = cols.iter().map(|c| c.ncols()).sum();
    let mut m = zeros(rows, total);
    let mut off = 0;
    for c in cols {
        m.view_mut((0, off), (rows, c.ncols())).copy_from(c);
        off += c.ncols();
    }
    if total == 0 {
        return m;
    }
    // already orthonormal by construction; one QR pass removes drift
    m.qr().q().columns(0, total).into_owned()
}

fn facial_reduction(sp: &Spectrahedron, x0: &[CMatrix], eps: f64) -> Result<Face> {
    let mut q: Vec<CMatrix> = sp.cone_dims.iter().map(|&m| identity(m)).collect();
    let b = RVector::from_vec(sp.rhs.clone());
    let mut reductions = 0;
    loop {
        let fdims: Vec<usize> = q.iter().map(|q| q.ncols()).collect();
        let y0: BlockPoint = q.iter().zip(x0).map(|(q, x)| hermitian_part(&(q.adjoint() * x * q))).collect();
        let ar = compress_rows(sp, &q);
        let kernel = real_nullspace(&ar, NULL_TOL);
        let red = reduce_rows(&ar, &b).or_else(|_| {
            let by0 = &ar * to_vec(&fdims, &y0);
            reduce_rows(&ar, &by0)
        })?;
        // y0 is feasible for the face; dividing by small singular values would amplify rounding in b
        let done = |kernel: RMatrix, red: ReducedRows, q: Vec<CMatrix>, y0: BlockPoint| Face {
            b: &red.a * to_vec(&fdims, &y0),
            q,
            a: red.a,
            kernel,
            y0,
            reductions,
        };
        if kernel.ncols() == 0 {
            return Ok(done(kernel, red, q, y0));
        }
        // range of y0 and its complement inside the face
        let lmax = y0
            .iter()
            .map(|y| herm_eigen(y).values.last().copied().unwrap_or(0.0))
            .fold(0.0, f64::max);
        let mut range: Vec<CMatrix> = Vec::new();
        let mut comp: Vec<CMatrix> = Vec::new();
        for y in &y0 {
            let e = herm_eigen(y);
            let m = y.nrows();
            let ri: Vec<usize> = (0..m).filter(|&i| e.values[i] > RANGE_TOL * lmax.max(1.0)).collect();
            let ci: Vec<usize> = (0..m).filter(|&i| e.values[i] <= RANGE_TOL * lmax.max(1.0)).collect();
            range.push(CMatrix::from_fn(m, ri.len(), |r, c| e.vectors[(r, ri[c])]));
            comp.push(CMatrix::from_fn(m, ci.len(), |r, c| e.vectors[(r, ci[c])]));
        }
        let cdims: Vec<usize> = comp.iter().map(|c| c.ncols()).collect();
        if cdims.iter().all(|&c| c == 0) {
            return Ok(done(kernel, red, q, y0));
        }
        // L = compression of the direction space to the complement
        let cd: usize = cdims.iter().map(|m| m * m).sum();
        let mut cm = RMatrix::zeros(cd, kernel.ncols());
        for col in 0..kernel.ncols() {
            let dir = from_vec(&fdims, kernel.column(col).as_slice());
            let c: BlockPoint = comp.iter().zip(&dir).map(|(p, d)| p.adjoint() * d * p).collect();
            cm.column_mut(col).copy_from(&to_vec(&cdims, &c));
        }
        let lbasis = crate::matlin::real_range(&cm, 1e-18);
        let trace_of = |v: &[f64]| {
            let mut off = 0;
            let mut t = 0.0;
            for &m in &cdims {
                t += v[off..off + m].iter().sum::<f64>();
                off += m * m;
            }
            t
        };
        let traces = RVector::from_fn(lbasis.ncols(), |i, _| trace_of(lbasis.column(i).as_slice()));
        let keep_kernel: Vec<CMatrix> = if traces.norm() < 1e-9 {
            // L is traceless: the identity is orthogonal to L
            cdims.iter().map(|&m| zeros(m, 0)).collect()
        } else {
            let w0 = &lbasis * (&traces / traces.norm_squared());
            let tr_row = RMatrix::from_row_slice(1, traces.len(), traces.as_slice());
            let l0 = &lbasis * real_nullspace(&tr_row, 1e-18);
            let mut arows = RMatrix::zeros(1 + l0.ncols(), cd);
            let ones: BlockPoint = cdims.iter().map(|&m| identity(m)).collect();
            arows.row_mut(0).copy_from(&to_vec(&cdims, &ones).transpose());
            for j in 0..l0.ncols() {
                arows.row_mut(j + 1).copy_from(&l0.column(j).transpose());
            }
            let mut rhs = RVector::zeros(arows.nrows());
            rhs[0] = 1.0;
            let ared = reduce_rows(&arows, &rhs)?;
            let aux = Sdp {
                dims: cdims.clone(),
                a: ared.a,
                b: ared.b,
                c: from_vec(&cdims, w0.as_slice()),
            };
            let sol = match aux.solve()? {
                SdpOutcome::Solved(s) => s,
                _ => return Err(Error::Solver("facial reduction subproblem diverged".into())),
            };
            let tstar = 0.5 * (sol.primal + sol.dual);
            if tstar > AUX_POSITIVE * (1.0 + eps) {
                // a positive definite element of L exists: the face is minimal
                return Ok(done(kernel, red, q, y0));
            }
            if tstar < -AUX_POSITIVE {
                cdims.iter().map(|&m| zeros(m, 0)).collect()
            } else {
                let ymax = sol
                    .x
                    .iter()
                    .map(|y| herm_eigen(y).values.last().copied().unwrap_or(0.0))
                    .fold(0.0, f64::max);
                sol.x
                    .iter()
                    .map(|y| {
                        let e = herm_eigen(y);
                        let ki: Vec<usize> =
                            (0..y.nrows()).filter(|&i| e.values[i] <= AUX_KERNEL * ymax).collect();
                        CMatrix::from_fn(y.nrows(), ki.len(), |r, c| e.vectors[(r, ki[c])])
                    })
                    .collect()
            }
        };
        let old: usize = fdims.iter().sum();
        let mut next = Vec::with_capacity(q.len());
        for j in 0..q.len() {
            let kept = &comp[j] * &keep_kernel[j];
            let cols = orthonormal_columns(&[range[j].clone(), kept], fdims[j]);
            next.push(&q[j] * cols);
        }
        let new: usize = next.iter().map(|q: &CMatrix| q.ncols()).sum();
        if new >= old {
            return Err(Error::Solver("facial reduction made no progress".into()));
        }
        q = next;
        reductions += 1;
    }
}

// ---------------------------------------------------------------------------
// Public optimisation entry points

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Target accuracy of optimal values.
    pub eps: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { eps: DEFAULT_EPS }
    }
}

/// An ε-optimal point with its dual certificate.
#[derive(Debug, Clone)]
pub struct LinearOptimum {
    pub value: f64,
    pub point: BlockPoint,
    /// Multipliers of the (reduced) equality constraints of the solved problem.
    pub dual: Vec<f64>,
    /// `|primal - dual|` of the solved problem.
    pub gap: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
}

fn solve_on_face(face: &Face, objective: &[CMatrix], trust: Option<f64>) -> Result<SdpSolution> {
    let fdims = face.dims();
    let fd: usize = fdims.iter().map(|m| m * m).sum();
    let c = face.compress(objective);
    let neg: BlockPoint = c.iter().map(|m| -m).collect();
    let (dims, a, b, cobj) = match trust {
        None => (fdims.clone(), face.a.clone(), face.b.clone(), neg),
        Some(cap) => {
            let mut dims = fdims.clone();
            dims.push(1);
            let m = face.a.nrows();
            let mut a = RMatrix::zeros(m + 1, fd + 1);
            a.view_mut((0, 0), (m, fd)).copy_from(&face.a);
            let ones: BlockPoint = fdims.iter().map(|&m| identity(m)).collect();
            let tv = to_vec(&fdims, &ones);
            a.view_mut((m, 0), (1, fd)).copy_from(&tv.transpose());
            a[(m, fd)] = 1.0;
            let mut b = RVector::zeros(m + 1);
            b.rows_mut(0, m).copy_from(&face.b);
            b[m] = cap;
            let red = reduce_rows(&a, &b)?;
            let mut c = neg;
            c.push(zeros(1, 1));
            (dims, red.a, red.b, c)
        }
    };
    let sdp = Sdp { dims, a, b, c: cobj };
    match sdp.solve()? {
        SdpOutcome::Solved(mut s) => {
            if trust.is_some() {
                s.x.pop();
            }
            Ok(s)
        }
        SdpOutcome::PrimalUnbounded => Err(Error::Unbounded),
        SdpOutcome::DualUnbounded => Err(Error::Solver("dual iterates diverged".into())),
    }
}

/// `max ⟨G, X⟩` over the spectrahedron.
pub fn maximize_linear(sp: &Spectrahedron, objective: &[CMatrix], opts: SolveOptions) -> Result<LinearOptimum> {
    sp.check_shape(objective)?;
    let x0 = match find_feasible(sp, opts.eps)? {
        Feasibility::Feasible(x) => x,
        Feasibility::Infeasible { certificate, margin } => return Err(Error::Infeasible { certificate, margin }),
    };
    let face = facial_reduction(sp, &x0, opts.eps)?;
    let obj: BlockPoint = objective.iter().map(hermitian_part).collect();
    if face.kernel.ncols() == 0 {
        let point = face.lift(&face.y0);
        return Ok(optimum(sp, &obj, point, vec![], 0.0));
    }
    let sol = solve_on_face(&face, &obj, None)?;
    if sol.gap() > opts.eps || sol.pinf > 1e-9 || sol.dinf > opts.eps {
        return Err(Error::Solver(format!(
            "no ε-certificate (gap {:.3e}, primal infeasibility {:.3e}, dual infeasibility {:.3e})",
            sol.gap(),
            sol.pinf,
            sol.dinf
        )));
    }
    let point = face.lift(&sol.x);
    Ok(optimum(sp, &obj, point, sol.y.iter().copied().collect(), sol.gap()))
}

fn optimum(sp: &Spectrahedron, obj: &[CMatrix], point: BlockPoint, dual: Vec<f64>, gap: f64) -> LinearOptimum {
    LinearOptimum {
        value: sp.pairing(obj, &point),
        residual: sp.residual(&point),
        min_eigenvalue: sp.min_eigenvalue(&point),
        point,
        dual,
        gap,
    }
}

/// A feasible point away from the known point, re-verified in original coordinates.
#[derive(Debug, Clone)]
pub struct MovementWitness {
    pub point: BlockPoint,
    pub distance: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct SingletonReport {
    pub singleton: bool,
    /// Dimension of the direction space of the minimal face.
    pub direction_dim: usize,
    /// Sizes of the face blocks.
    pub face_dims: Vec<usize>,
    pub reductions: usize,
    /// Largest movement `⟨G, X - x0⟩` observed.
    pub max_movement: f64,
    pub solves: usize,
    pub witness: Option<MovementWitness>,
}

/// Decides whether the spectrahedron is `{x0}` for its known point, to accuracy `eps`.
pub fn singleton_test(sp: &Spectrahedron, opts: SolveOptions) -> Result<SingletonReport> {
    let x0 = sp
        .known_point
        .clone()
        .ok_or_else(|| Error::Precondition("singleton test needs a known feasible point".into()))?;
    let face = facial_reduction(sp, &x0, opts.eps)?;
    let mut report = SingletonReport {
        singleton: true,
        direction_dim: face.kernel.ncols(),
        face_dims: face.dims(),
        reductions: face.reductions,
        max_movement: 0.0,
        solves: 0,
        witness: None,
    };
    if face.kernel.ncols() == 0 {
        return Ok(report);
    }
    let fdims = face.dims();
    let cap = face.y0.iter().map(|y| y.trace().re).sum::<f64>() + 1.0;
    for col in 0..face.kernel.ncols() {
        let dir = from_vec(&fdims, face.kernel.column(col).as_slice());
        let full = face.lift(&dir);
        for sign in [1.0, -1.0] {
            let obj: BlockPoint = full.iter().map(|d| d * C64::new(sign, 0.0)).collect();
            let sol = solve_on_face(&face, &obj, Some(cap))?;
            report.solves += 1;
            let point = face.lift(&sol.x);
            let movement = sp.pairing(&obj, &point) - sp.pairing(&obj, &x0);
            report.max_movement = report.max_movement.max(movement);
            if movement > opts.eps {
                let w = MovementWitness {
                    distance: block_dist(&point, &x0),
                    residual: sp.residual(&point),
                    min_eigenvalue: sp.min_eigenvalue(&point),
                    point,
                };
                if w.residual < POINT_TOL && w.min_eigenvalue >= -POINT_TOL && w.distance > opts.eps {
                    report.singleton = false;
                    report.witness = Some(w);
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{c64, pauli};

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c64(v, 0.0))
    }

    #[test]
    fn one_by_one_cone() {
        let mut sp = Spectrahedron::orthant(1).unwrap();
        sp.add_linear(&[1.0], 1.0).unwrap();
        let opt = maximize_linear(&sp, &[scalar(1.0)], SolveOptions::default()).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn density_matrices() {
        let mut sp = Spectrahedron::new(vec![2]).unwrap();
        sp.add_constraint(&[identity(2)], 1.0).unwrap();
        let opt = maximize_linear(&sp, &[pauli::z()], SolveOptions::default()).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-7, "{}", opt.value);
        assert!(opt.gap <= 1e-7);
        assert!(opt.residual < 1e-8 && opt.min_eigenvalue > -1e-8);
    }

    #[test]
    fn small_lp() {
        let mut sp = Spectrahedron::orthant(3).unwrap();
        sp.add_linear(&[1.0, 1.0, 1.0], 1.0).unwrap();
        sp.add_linear(&[0.0, 1.0, 2.0], 1.0).unwrap();
        let opt = maximize_linear(&sp, &[scalar(1.0), scalar(0.0), scalar(0.0)], SolveOptions::default()).unwrap();
        assert!((opt.value - 0.5).abs() < 1e-7);
        let p: Vec<f64> = opt.point.iter().map(|b| b[(0, 0)].re).collect();
        assert!((p[0] - 0.5).abs() < 1e-6 && p[1].abs() < 1e-6 && (p[2] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn unbounded_is_flagged() {
        let mut sp = Spectrahedron::new(vec![2]).unwrap();
        sp.add_constraint(&[crate::matlin::matrix_unit(2, 0, 0)], 1.0).unwrap();
        let err = maximize_linear(&sp, &[crate::matlin::matrix_unit(2, 1, 1)], SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Unbounded));
    }

    #[test]
    fn infeasible_has_certificate() {
        let mut sp = Spectrahedron::orthant(2).unwrap();
        sp.add_linear(&[1.0, 1.0], -1.0).unwrap();
        match find_feasible(&sp, DEFAULT_EPS).unwrap() {
            Feasibility::Infeasible { certificate, margin } => {
                assert!(margin > 0.0);
                // b·y > 0 and A*y ⪯ 0
                assert!(-certificate[0] > 0.0);
                assert!(certificate[0] <= 1e-9);
            }
            Feasibility::Feasible(_) => panic!("expected infeasible"),
        }
    }

    #[test]
    fn singleton_rank_one_completion() {
        let mut sp = Spectrahedron::new(vec![2]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = crate::matlin::matrix_unit(2, i, j);
                sp.add_constraint(&[hermitian_part(&e)], 1.0).unwrap();
                sp.add_constraint(&[crate::matlin::skew_part_as_hermitian(&e)], 0.0).unwrap();
            }
        }
        sp.set_known_point(vec![CMatrix::from_element(2, 2, c64(1.0, 0.0))]).unwrap();
        assert!(singleton_test(&sp, SolveOptions::default()).unwrap().singleton);
    }

    #[test]
    fn free_corner_is_not_singleton() {
        let mut sp = Spectrahedron::new(vec![2]).unwrap();
        sp.add_constraint(&[crate::matlin::matrix_unit(2, 0, 0)], 1.0).unwrap();
        sp.set_known_point(vec![crate::matlin::matrix_unit(2, 0, 0)]).unwrap();
        let rep = singleton_test(&sp, SolveOptions::default()).unwrap();
        assert!(!rep.singleton);
        let w = rep.witness.unwrap();
        assert!(w.distance > 1e-7 && w.residual < 1e-8 && w.min_eigenvalue >= -1e-8);
    }

    #[test]
    fn forced_vertex_is_singleton() {
        let mut sp = Spectrahedron::orthant(3).unwrap();
        sp.add_linear(&[1.0, 1.0, 1.0], 1.0).unwrap();
        sp.add_linear(&[0.0, 1.0, 2.0], 0.0).unwrap();
        sp.set_known_point(vec![scalar(1.0), scalar(0.0), scalar(0.0)]).unwrap();
        let rep = singleton_test(&sp, SolveOptions::default()).unwrap();
        assert!(rep.singleton);
        assert!(rep.reductions >= 1);
    }

    #[test]
    fn segment_is_not_singleton() {
        let mut sp = Spectrahedron::orthant(3).unwrap();
        sp.add_linear(&[1.0, 1.0, 1.0], 1.0).unwrap();
        sp.add_linear(&[0.0, 1.0, 2.0], 1.0).unwrap();
        sp.set_known_point(vec![scalar(0.0), scalar(1.0), scalar(0.0)]).unwrap();
        let rep = singleton_test(&sp, SolveOptions::default()).unwrap();
        assert!(!rep.singleton);
    }

    #[test]
    fn known_point_must_be_feasible() {
        let mut sp = Spectrahedron::orthant(1).unwrap();
        sp.add_linear(&[1.0], 1.0).unwrap();
        assert!(sp.set_known_point(vec![scalar(2.0)]).is_err());
    }
}
