//! Dense linear-algebra helpers on top of faer.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::ComputeEigenvectors;
use faer::linalg::gevd::{self, GevdParams};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Auto, Conj, Mat, Par};

use crate::error::{MorError, Result};

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn cplx(m: &RMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

pub fn re(m: &CMat) -> RMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub fn im(m: &CMat) -> RMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].im)
}

pub fn conj(m: &CMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())
}

/// `s * e - a` as a complex matrix.
pub fn shifted(s: c64, e: &RMat, a: &RMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| s * e[(i, j)] - a[(i, j)])
}

/// Largest absolute entry.
pub fn max_abs(m: &RMat) -> f64 {
    let mut v = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v = v.max(m[(i, j)].abs());
        }
    }
    v
}

pub fn is_finite(m: &RMat) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite()))
}

/// Stack `[a, b]` horizontally.
pub fn hcat(a: &RMat, b: &RMat) -> RMat {
    assert_eq!(a.nrows(), b.nrows());
    let k = a.ncols();
    Mat::from_fn(a.nrows(), k + b.ncols(), |i, j| {
        if j < k {
            a[(i, j)]
        } else {
            b[(i, j - k)]
        }
    })
}

/// Partial-pivot LU of a complex square matrix that refuses numerically
/// singular inputs.
pub struct ComplexLu {
    lu: PartialPivLu<c64>,
}

impl ComplexLu {
    pub fn new(m: &CMat, s: c64) -> Result<Self> {
        let n = m.nrows();
        let lu = m.partial_piv_lu();
        let u = lu.U();
        let mut dmax = 0.0f64;
        let mut dmin = f64::INFINITY;
        for i in 0..n {
            let d = u[(i, i)].norm();
            dmax = dmax.max(d);
            dmin = dmin.min(d);
        }
        if n > 0 && (!dmin.is_finite() || dmin <= dmax * f64::EPSILON || dmax == 0.0) {
            return Err(MorError::SingularPencil { re: s.re, im: s.im });
        }
        Ok(Self { lu })
    }

    pub fn solve(&self, rhs: &CMat) -> CMat {
        self.lu.solve(rhs)
    }

    /// Solves `M^* x = rhs`.
    pub fn solve_adjoint(&self, rhs: &CMat) -> CMat {
        self.lu.solve_adjoint(rhs)
    }

    /// Solves `M^T x = rhs`.
    pub fn solve_transpose(&self, rhs: &CMat) -> CMat {
        self.lu.solve_transpose(rhs)
    }
}

/// Leading singular triplet of a complex matrix.
pub struct TopSingular {
    pub sigma: f64,
    pub u: Vec<c64>,
    pub v: Vec<c64>,
    pub degenerate: bool,
}

pub fn top_singular(m: &CMat) -> Result<TopSingular> {
    let (p, q) = (m.nrows(), m.ncols());
    if p == 1 || q == 1 {
        // Rank one: closed form.
        let norm = (0..p)
            .flat_map(|i| (0..q).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !norm.is_finite() {
            return Err(MorError::DecompositionFailure("non-finite matrix in SVD".into()));
        }
        let (u, v) = if norm == 0.0 {
            let mut u = vec![ZERO; p];
            let mut v = vec![ZERO; q];
            u[0] = ONE;
            v[0] = ONE;
            (u, v)
        } else if q == 1 {
            let u = (0..p).map(|i| m[(i, 0)] / norm).collect();
            (u, vec![ONE])
        } else {
            let v = (0..q).map(|j| m[(0, j)].conj() / norm).collect();
            (vec![ONE], v)
        };
        return Ok(TopSingular {
            sigma: norm,
            u,
            v,
            degenerate: false,
        });
    }
    let svd = m
        .svd()
        .map_err(|e| MorError::DecompositionFailure(format!("SVD: {e:?}")))?;
    let s = svd.S().column_vector();
    let sigma = s[0].re;
    if !sigma.is_finite() {
        return Err(MorError::DecompositionFailure("non-finite singular value".into()));
    }
    let degenerate = s.nrows() > 1 && sigma > 0.0 && s[1].re >= sigma * (1.0 - 1e-12);
    Ok(TopSingular {
        sigma,
        u: (0..p).map(|i| svd.U()[(i, 0)]).collect(),
        v: (0..q).map(|i| svd.V()[(i, 0)]).collect(),
        degenerate,
    })
}

pub fn sigma_max(m: &CMat) -> Result<f64> {
    if m.nrows() == 1 || m.ncols() == 1 {
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                acc += m[(i, j)].norm_sqr();
            }
        }
        let norm = acc.sqrt();
        if !norm.is_finite() {
            return Err(MorError::DecompositionFailure("non-finite matrix in SVD".into()));
        }
        return Ok(norm);
    }
    if m.nrows() == 2 && m.ncols() == 2 {
        // Largest eigenvalue of the 2x2 Gram matrix, written without
        // cancellation.
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let g11 = a.norm_sqr() + c.norm_sqr();
        let g22 = b.norm_sqr() + d.norm_sqr();
        let g12 = a.conj() * b + c.conj() * d;
        let half = 0.5 * (g11 - g22);
        let s = (0.5 * (g11 + g22) + half.hypot(g12.norm())).sqrt();
        if !s.is_finite() {
            return Err(MorError::DecompositionFailure("non-finite matrix in SVD".into()));
        }
        return Ok(s);
    }
    let s = m
        .singular_values()
        .map_err(|e| MorError::DecompositionFailure(format!("SVD: {e:?}")))?;
    Ok(s[0])
}

/// Complex generalized Schur form `A = Q S Z^*`, `E = Q T Z^*` with `S`,
/// `T` upper triangular and `Q`, `Z` unitary.
pub struct Qz {
    pub q: CMat,
    pub s: CMat,
    pub t: CMat,
    pub z: CMat,
}

impl Qz {
    pub fn new(a: &CMat, e: &CMat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || e.nrows() != n || e.ncols() != n {
            return Err(MorError::DimensionMismatch("QZ expects square pencils".into()));
        }
        let finite = |m: &CMat| {
            (0..n).all(|j| (0..n).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
        };
        if !finite(a) || !finite(e) {
            return Err(MorError::DecompositionFailure("non-finite pencil".into()));
        }
        let mut s = a.clone();
        let mut t = e.clone();
        let mut q = CMat::identity(n, n);
        let mut z = CMat::identity(n, n);
        if n == 0 {
            return Ok(Self { q, s, t, z });
        }
        let par = Par::Seq;
        let params = <GevdParams as Auto<c64>>::auto();
        let req = gevd::gevd_scratch::<c64>(
            n,
            ComputeEigenvectors::Yes,
            ComputeEigenvectors::Yes,
            par,
            Default::default(),
        );
        let mut buf = MemBuffer::new(req);
        let stack = MemStack::new(&mut buf);
        let bs = faer::linalg::qr::no_pivoting::factor::recommended_block_size::<c64>(n, n);
        let mut hh = CMat::zeros(bs, n);
        faer::linalg::qr::no_pivoting::factor::qr_in_place(
            t.as_mut(),
            hh.as_mut(),
            par,
            stack,
            Default::default(),
        );
        faer::linalg::householder::apply_block_householder_sequence_transpose_on_the_left_in_place_with_conj(
            t.as_ref(),
            hh.as_ref(),
            Conj::Yes,
            s.as_mut(),
            par,
            stack,
        );
        faer::linalg::householder::apply_block_householder_sequence_on_the_left_in_place_with_conj(
            t.as_ref(),
            hh.as_ref(),
            Conj::No,
            q.as_mut(),
            par,
            stack,
        );
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = ZERO;
            }
        }
        gevd::gen_hessenberg::generalized_hessenberg(
            s.as_mut(),
            t.as_mut(),
            Some(q.as_mut()),
            Some(z.as_mut()),
            par,
            stack,
            params.hessenberg,
        );
        let mut alpha = CMat::zeros(n, 1);
        let mut beta = CMat::zeros(n, 1);
        gevd::qz_cplx::hessenberg_to_qz(
            s.as_mut(),
            t.as_mut(),
            Some(q.as_mut()),
            Some(z.as_mut()),
            alpha.col_mut(0),
            beta.col_mut(0),
            ComputeEigenvectors::Yes,
            par,
            params.schur,
            stack,
        );
        for j in 0..n {
            for i in j + 1..n {
                s[(i, j)] = ZERO;
                t[(i, j)] = ZERO;
            }
        }
        if !finite(&s) || !finite(&t) {
            return Err(MorError::DecompositionFailure("QZ did not converge".into()));
        }
        Ok(Self { q, s, t, z })
    }

    /// Diagonal pairs `(alpha_i, beta_i)`; eigenvalues are `alpha / beta`.
    pub fn pairs(&self) -> Vec<(c64, c64)> {
        (0..self.s.nrows())
            .map(|i| (self.s[(i, i)], self.t[(i, i)]))
            .collect()
    }

    /// Finite generalized eigenvalues; pairs with `|beta|` at rounding level
    /// relative to `‖E‖` are treated as infinite.
    pub fn finite_eigenvalues(&self, e_scale: f64) -> Vec<c64> {
        let n = self.s.nrows().max(1) as f64;
        let thresh = 100.0 * n * f64::EPSILON * e_scale.max(f64::MIN_POSITIVE);
        self.pairs()
            .into_iter()
            .filter(|(_, b)| b.norm() > thresh)
            .map(|(a, b)| a / b)
            .collect()
    }
}

/// Solves `(sT - S) X = R` in place for upper-triangular `S`, `T`.
pub fn shifted_triangular_solve(s: c64, tt: &CMat, ss: &CMat, rhs: &mut CMat) -> Result<()> {
    let n = ss.nrows();
    let k = rhs.ncols();
    let mut dmax = 0.0f64;
    for i in 0..n {
        dmax = dmax.max((s * tt[(i, i)] - ss[(i, i)]).norm());
    }
    for i in (0..n).rev() {
        let d = s * tt[(i, i)] - ss[(i, i)];
        if d.norm() <= dmax * f64::EPSILON || dmax == 0.0 {
            return Err(MorError::SingularPencil { re: s.re, im: s.im });
        }
        let dinv = ONE / d;
        for c in 0..k {
            let mut acc = rhs[(i, c)];
            for j in i + 1..n {
                acc -= (s * tt[(i, j)] - ss[(i, j)]) * rhs[(j, c)];
            }
            rhs[(i, c)] = acc * dinv;
        }
    }
    Ok(())
}

/// Solves `(sT - S)^* X = R` in place for upper-triangular `S`, `T`.
pub fn shifted_triangular_solve_adjoint(
    s: c64,
    tt: &CMat,
    ss: &CMat,
    rhs: &mut CMat,
) -> Result<()> {
    let n = ss.nrows();
    let k = rhs.ncols();
    let mut dmax = 0.0f64;
    for i in 0..n {
        dmax = dmax.max((s * tt[(i, i)] - ss[(i, i)]).norm());
    }
    // The adjoint is lower triangular: forward substitution.
    for i in 0..n {
        let d = (s * tt[(i, i)] - ss[(i, i)]).conj();
        if d.norm() <= dmax * f64::EPSILON || dmax == 0.0 {
            return Err(MorError::SingularPencil { re: s.re, im: s.im });
        }
        let dinv = ONE / d;
        for c in 0..k {
            let mut acc = rhs[(i, c)];
            for j in 0..i {
                acc -= (s * tt[(j, i)] - ss[(j, i)]).conj() * rhs[(j, c)];
            }
            rhs[(i, c)] = acc * dinv;
        }
    }
    Ok(())
}

/// Generalized eigen-decomposition of `(A, E)` with left and right
/// eigenvectors: `A x = λ E x`, `y^* A = λ y^* E`. Returns `(alpha, beta,
/// left, right)` with `λ = alpha / beta`.
pub fn gevd_lr(a: &CMat, e: &CMat) -> Result<(Vec<c64>, Vec<c64>, CMat, CMat)> {
    let n = a.nrows();
    let mut aa = a.clone();
    let mut ee = e.clone();
    let mut s = faer::diag::Diag::<c64>::zeros(n);
    let mut beta = faer::diag::Diag::<c64>::zeros(n);
    let mut ul = CMat::zeros(n, n);
    let mut ur = CMat::zeros(n, n);
    let par = Par::Seq;
    let req = gevd::gevd_scratch::<c64>(
        n,
        ComputeEigenvectors::Yes,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    let mut buf = MemBuffer::new(req);
    gevd::gevd_cplx(
        aa.as_mut(),
        ee.as_mut(),
        s.as_mut(),
        beta.as_mut(),
        Some(ul.as_mut()),
        Some(ur.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| MorError::DecompositionFailure(format!("generalized eigen: {e:?}")))?;
    let alpha = (0..n).map(|i| s[i]).collect();
    let beta = (0..n).map(|i| beta[i]).collect();
    Ok((alpha, beta, ul, ur))
}

/// Eigen-decomposition of a general real matrix with right eigenvectors.
pub fn eigen_real(m: &RMat) -> Result<(Vec<c64>, CMat)> {
    let ev = m
        .eigen()
        .map_err(|e| MorError::DecompositionFailure(format!("eigen: {e:?}")))?;
    let n = m.nrows();
    let vals = (0..n).map(|i| ev.S()[i]).collect();
    Ok((vals, ev.U().to_owned()))
}

/// Eigen-decomposition of a general complex matrix with right eigenvectors.
pub fn eigen_cplx(m: &CMat) -> Result<(Vec<c64>, CMat)> {
    let ev = m
        .eigen()
        .map_err(|e| MorError::DecompositionFailure(format!("eigen: {e:?}")))?;
    let n = m.nrows();
    let vals = (0..n).map(|i| ev.S()[i]).collect();
    Ok((vals, ev.U().to_owned()))
}

/// 2-norm condition number through the singular values.
pub fn cond2_cplx(m: &CMat) -> f64 {
    match m.singular_values() {
        Ok(s) if !s.is_empty() => {
            let lo = *s.last().unwrap();
            if lo == 0.0 {
                f64::INFINITY
            } else {
                s[0] / lo
            }
        }
        _ => f64::INFINITY,
    }
}

pub fn cond2_real(m: &RMat) -> f64 {
    match m.singular_values() {
        Ok(s) if !s.is_empty() => {
            let lo = *s.last().unwrap();
            if lo == 0.0 {
                f64::INFINITY
            } else {
                s[0] / lo
            }
        }
        _ => f64::INFINITY,
    }
}
