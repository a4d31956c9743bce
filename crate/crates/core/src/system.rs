//! Descriptor systems, the tridiagonal reduced parameterization, and
//! transfer-function evaluation.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MorError, Result};
use crate::linalg::{
    cplx, shifted, shifted_triangular_solve, shifted_triangular_solve_adjoint, top_singular, CMat,
    ComplexLu, Qz, RMat, ZERO,
};

/// `E x' = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug)]
pub struct DescriptorSystem {
    pub e: RMat,
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    pub d: RMat,
}

impl DescriptorSystem {
    pub fn new(e: RMat, a: RMat, b: RMat, c: RMat, d: RMat) -> Result<Self> {
        let n = a.nrows();
        let dim = |what: &str, got: (usize, usize), want: (usize, usize)| -> Result<()> {
            if got != want {
                return Err(MorError::DimensionMismatch(format!(
                    "{what} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
            Ok(())
        };
        dim("A", (a.nrows(), a.ncols()), (n, n))?;
        dim("E", (e.nrows(), e.ncols()), (n, n))?;
        let m = b.ncols();
        let p = c.nrows();
        dim("B", (b.nrows(), b.ncols()), (n, m))?;
        dim("C", (c.nrows(), c.ncols()), (p, n))?;
        dim("D", (d.nrows(), d.ncols()), (p, m))?;
        if n == 0 || m == 0 || p == 0 {
            return Err(MorError::DimensionMismatch("empty system".into()));
        }
        Ok(Self { e, a, b, c, d })
    }

    /// System with `E = I`.
    pub fn standard(a: RMat, b: RMat, c: RMat, d: RMat) -> Result<Self> {
        let n = a.nrows();
        Self::new(RMat::identity(n, n), a, b, c, d)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Checks that `det(sE - A)` does not vanish at a few random points.
    pub fn is_regular(&self, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 + crate::linalg::max_abs(&self.a);
        (0..3).any(|_| {
            let s = c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            ComplexLu::new(&shifted(s, &self.e, &self.a), s).is_ok()
        })
    }

    pub fn schur(&self) -> Result<SchurSystem> {
        SchurSystem::new(self)
    }
}

/// Evaluates `H(s) = C (sE - A)^{-1} B + D` by one LU solve.
pub fn transfer_eval(sys: &DescriptorSystem, s: c64) -> Result<CMat> {
    let lu = ComplexLu::new(&shifted(s, &sys.e, &sys.a), s)?;
    let x = lu.solve(&cplx(&sys.b));
    Ok(cplx(&sys.c) * x + cplx(&sys.d))
}

/// `k`-th derivative of the transfer function,
/// `(-1)^k k! C [(sE - A)^{-1} E]^k (sE - A)^{-1} B` (plus `D` for `k = 0`).
pub fn transfer_derivative(sys: &DescriptorSystem, s: c64, k: usize) -> Result<CMat> {
    let lu = ComplexLu::new(&shifted(s, &sys.e, &sys.a), s)?;
    let ec = cplx(&sys.e);
    let mut x = lu.solve(&cplx(&sys.b));
    let mut fact = 1.0;
    for j in 1..=k {
        x = lu.solve(&(&ec * &x));
        fact *= -(j as f64);
    }
    let mut h = cplx(&sys.c) * x;
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            h[(i, j)] *= fact;
        }
    }
    if k == 0 {
        h = h + cplx(&sys.d);
    }
    Ok(h)
}

/// Generalized eigenvalues of `(A, E)`; infinite eigenvalues are dropped.
pub fn poles(sys: &DescriptorSystem) -> Result<Vec<c64>> {
    if sys.n() > 2000 {
        log::warn!("dense pole computation for n = {}", sys.n());
    }
    let qz = Qz::new(&cplx(&sys.a), &cplx(&sys.e))?;
    Ok(qz.finite_eigenvalues(crate::linalg::max_abs(&sys.e)))
}

/// Dense system pre-factored into complex generalized Schur form, so every
/// frequency sample costs only a triangular solve.
pub struct SchurSystem {
    s: CMat,
    t: CMat,
    cz: CMat,
    qb: CMat,
    d: CMat,
    poles: Vec<c64>,
}

impl SchurSystem {
    pub fn new(sys: &DescriptorSystem) -> Result<Self> {
        if sys.n() > 2000 {
            log::warn!("dense generalized Schur form for n = {}", sys.n());
        }
        let qz = Qz::new(&cplx(&sys.a), &cplx(&sys.e))?;
        let poles = qz.finite_eigenvalues(crate::linalg::max_abs(&sys.e));
        Ok(Self {
            cz: cplx(&sys.c) * &qz.z,
            qb: qz.q.adjoint() * cplx(&sys.b),
            d: cplx(&sys.d),
            s: qz.s,
            t: qz.t,
            poles,
        })
    }

    pub fn poles(&self) -> &[c64] {
        &self.poles
    }

    pub fn order(&self) -> usize {
        self.s.nrows()
    }
}

/// Anything whose transfer matrix can be sampled.
pub trait FrequencyResponse: Sync {
    /// `(p, m)`.
    fn dims(&self) -> (usize, usize);
    fn eval(&self, s: c64) -> Result<CMat>;
}

impl FrequencyResponse for DescriptorSystem {
    fn dims(&self) -> (usize, usize) {
        (self.p(), self.m())
    }
    fn eval(&self, s: c64) -> Result<CMat> {
        transfer_eval(self, s)
    }
}

impl FrequencyResponse for SchurSystem {
    fn dims(&self) -> (usize, usize) {
        (self.cz.nrows(), self.qb.ncols())
    }
    fn eval(&self, s: c64) -> Result<CMat> {
        let mut x = self.qb.clone();
        shifted_triangular_solve(s, &self.t, &self.s, &mut x)?;
        Ok(&self.cz * x + &self.d)
    }
}

impl SchurSystem {
    /// Row vector `u^* C (sE - A)^{-1}` for each column `u` of `left`,
    /// returned as columns of the transposed result (n x k).
    pub fn left_solve(&self, s: c64, rhs: &CMat) -> Result<CMat> {
        // (sT - S)^{-*} (CZ)^* u
        let mut y = self.cz.adjoint() * rhs;
        shifted_triangular_solve_adjoint(s, &self.t, &self.s, &mut y)?;
        Ok(y)
    }
}

/// Reduced model with tridiagonal `A`, diagonal `E` and dense `B`, `C`, `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem {
    pub a_diag: Vec<f64>,
    /// `A[i+1][i]`
    pub a_sub: Vec<f64>,
    /// `A[i][i+1]`
    pub a_sup: Vec<f64>,
    pub e_diag: Vec<f64>,
    /// r x m
    pub b: RMat,
    /// p x r
    pub c: RMat,
    /// p x m
    pub d: RMat,
}

pub fn param_len(r: usize, m: usize, p: usize) -> usize {
    4 * r - 2 + r * m + p * r + p * m
}

impl ReducedSystem {
    pub fn r(&self) -> usize {
        self.a_diag.len()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn a_dense(&self) -> RMat {
        let r = self.r();
        Mat::from_fn(r, r, |i, j| {
            if i == j {
                self.a_diag[i]
            } else if i == j + 1 {
                self.a_sub[j]
            } else if j == i + 1 {
                self.a_sup[i]
            } else {
                0.0
            }
        })
    }

    pub fn e_dense(&self) -> RMat {
        let r = self.r();
        Mat::from_fn(r, r, |i, j| if i == j { self.e_diag[i] } else { 0.0 })
    }

    pub fn to_descriptor(&self) -> DescriptorSystem {
        DescriptorSystem {
            e: self.e_dense(),
            a: self.a_dense(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }

    /// Checks structural consistency of the parameter fields.
    pub fn validate(&self) -> Result<()> {
        let r = self.r();
        if r == 0 {
            return Err(MorError::DimensionMismatch("reduced order must be >= 1".into()));
        }
        if self.a_sub.len() != r - 1 || self.a_sup.len() != r - 1 || self.e_diag.len() != r {
            return Err(MorError::DimensionMismatch("tridiagonal band lengths".into()));
        }
        if self.b.nrows() != r || self.c.ncols() != r {
            return Err(MorError::DimensionMismatch("reduced B/C".into()));
        }
        if self.d.nrows() != self.p() || self.d.ncols() != self.m() {
            return Err(MorError::DimensionMismatch("reduced D".into()));
        }
        Ok(())
    }

    /// Solves `(sE - A) X = rhs` (or the transposed system) in O(r) per
    /// right-hand side.
    pub fn resolvent_solve(&self, s: c64, rhs: &CMat, transpose: bool) -> Result<CMat> {
        let r = self.r();
        let mut d: Vec<c64> = (0..r).map(|i| s * self.e_diag[i] - self.a_diag[i]).collect();
        let (lo, up) = if transpose {
            (&self.a_sup, &self.a_sub)
        } else {
            (&self.a_sub, &self.a_sup)
        };
        let mut dl: Vec<c64> = lo.iter().map(|&x| c64::new(-x, 0.0)).collect();
        let mut du: Vec<c64> = up.iter().map(|&x| c64::new(-x, 0.0)).collect();
        let mut x = rhs.clone();
        gtsv(&mut dl, &mut d, &mut du, &mut x).map_err(|_| MorError::SingularPencil {
            re: s.re,
            im: s.im,
        })?;
        Ok(x)
    }
}

/// Tridiagonal solve with partial pivoting; on return `b` holds the solution.
fn gtsv(dl: &mut [c64], d: &mut [c64], du: &mut [c64], b: &mut CMat) -> std::result::Result<(), ()> {
    let n = d.len();
    let k = b.ncols();
    let scale = d
        .iter()
        .chain(dl.iter())
        .chain(du.iter())
        .fold(0.0f64, |acc, x| acc.max(x.norm()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(());
    }
    let tiny = scale * f64::EPSILON;
    // dl[i] is reused to hold the second superdiagonal after elimination.
    for i in 0..n.saturating_sub(1) {
        if d[i].norm() >= dl[i].norm() {
            if d[i].norm() <= tiny {
                return Err(());
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            for c in 0..k {
                let bi = b[(i, c)];
                b[(i + 1, c)] -= fact * bi;
            }
            dl[i] = ZERO;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = ZERO;
            }
            du[i] = temp;
            for c in 0..k {
                let t = b[(i, c)];
                b[(i, c)] = b[(i + 1, c)];
                b[(i + 1, c)] = t - fact * b[(i + 1, c)];
            }
        }
    }
    if d[n - 1].norm() <= tiny {
        return Err(());
    }
    for c in 0..k {
        b[(n - 1, c)] = b[(n - 1, c)] / d[n - 1];
        if n > 1 {
            b[(n - 2, c)] = (b[(n - 2, c)] - du[n - 2] * b[(n - 1, c)]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[(i, c)] = (b[(i, c)] - du[i] * b[(i + 1, c)] - dl[i] * b[(i + 2, c)]) / d[i];
        }
    }
    Ok(())
}

/// `H_red(s)` through the tridiagonal resolvent.
pub fn reduced_transfer_eval(red: &ReducedSystem, s: c64) -> Result<CMat> {
    let x = red.resolvent_solve(s, &cplx(&red.b), false)?;
    let (p, m, r) = (red.p(), red.m(), red.r());
    Ok(Mat::from_fn(p, m, |i, j| {
        let mut acc = c64::new(red.d[(i, j)], 0.0);
        for k in 0..r {
            acc += red.c[(i, k)] * x[(k, j)];
        }
        acc
    }))
}

impl FrequencyResponse for ReducedSystem {
    fn dims(&self) -> (usize, usize) {
        (self.p(), self.m())
    }
    fn eval(&self, s: c64) -> Result<CMat> {
        reduced_transfer_eval(self, s)
    }
}

/// Leading singular triplet of the error at a frequency.
#[derive(Clone, Debug)]
pub struct ErrorSample {
    pub sigma: f64,
    pub u: Vec<c64>,
    pub v: Vec<c64>,
    pub degenerate: bool,
}

/// Largest singular value of `H(iω) - H_red(iω)` with its singular vectors.
pub fn error_sigma(
    full: &dyn FrequencyResponse,
    red: &dyn FrequencyResponse,
    omega: f64,
) -> Result<ErrorSample> {
    if full.dims() != red.dims() {
        return Err(MorError::DimensionMismatch("input/output counts differ".into()));
    }
    let s = c64::new(0.0, omega);
    let diff = full.eval(s)? - red.eval(s)?;
    let t = top_singular(&diff)?;
    Ok(ErrorSample {
        sigma: t.sigma,
        u: t.u,
        v: t.v,
        degenerate: t.degenerate,
    })
}

/// Flat parameter vector `[a_diag | a_sub | a_sup | e_diag | vec B | vec C | vec D]`,
/// matrices stacked column by column.
pub fn pack(red: &ReducedSystem) -> Vec<f64> {
    let (r, m, p) = (red.r(), red.m(), red.p());
    let mut x = Vec::with_capacity(param_len(r, m, p));
    x.extend_from_slice(&red.a_diag);
    x.extend_from_slice(&red.a_sub);
    x.extend_from_slice(&red.a_sup);
    x.extend_from_slice(&red.e_diag);
    for mat in [&red.b, &red.c, &red.d] {
        for j in 0..mat.ncols() {
            for i in 0..mat.nrows() {
                x.push(mat[(i, j)]);
            }
        }
    }
    x
}

pub fn unpack(x: &[f64], r: usize, m: usize, p: usize) -> Result<ReducedSystem> {
    if r == 0 || x.len() != param_len(r, m, p) {
        return Err(MorError::DimensionMismatch(format!(
            "parameter vector has length {}, expected {}",
            x.len(),
            if r == 0 { 0 } else { param_len(r, m, p) }
        )));
    }
    let mut off = 0;
    let mut take = |k: usize| {
        let s = &x[off..off + k];
        off += k;
        s
    };
    let a_diag = take(r).to_vec();
    let a_sub = take(r - 1).to_vec();
    let a_sup = take(r - 1).to_vec();
    let e_diag = take(r).to_vec();
    let bs = take(r * m);
    let b = Mat::from_fn(r, m, |i, j| bs[i + j * r]);
    let cs = take(p * r);
    let c = Mat::from_fn(p, r, |i, j| cs[i + j * p]);
    let ds = take(p * m);
    let d = Mat::from_fn(p, m, |i, j| ds[i + j * p]);
    Ok(ReducedSystem {
        a_diag,
        a_sub,
        a_sup,
        e_diag,
        b,
        c,
        d,
    })
}

/// Offsets of the blocks inside the packed vector.
#[derive(Clone, Copy, Debug)]
pub struct Layout {
    pub r: usize,
    pub m: usize,
    pub p: usize,
}

impl Layout {
    pub fn a_diag(&self) -> usize {
        0
    }
    pub fn a_sub(&self) -> usize {
        self.r
    }
    pub fn a_sup(&self) -> usize {
        2 * self.r - 1
    }
    pub fn e_diag(&self) -> usize {
        3 * self.r - 2
    }
    pub fn b(&self) -> usize {
        4 * self.r - 2
    }
    pub fn c(&self) -> usize {
        self.b() + self.r * self.m
    }
    pub fn d(&self) -> usize {
        self.c() + self.p * self.r
    }
    pub fn len(&self) -> usize {
        param_len(self.r, self.m, self.p)
    }
}

/// Scalar multiple helper used by several callers.
#[cfg(test)]
pub(crate) fn scale_c(m: &CMat, k: c64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * k)
}
