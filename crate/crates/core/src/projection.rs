//! Two-sided Petrov-Galerkin projection with Hermite-interpolatory bases.

use faer::{c64, Mat};

use crate::error::{MorError, Result};
use crate::linalg::{cplx, hcat, im, re, shifted, ComplexLu, RMat};
use crate::system::DescriptorSystem;

/// Orthonormal right (`v`) and left (`w`) projection bases.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    pub v: RMat,
    pub w: RMat,
}

impl SubspaceBasis {
    pub fn empty(n: usize) -> Self {
        Self {
            v: RMat::zeros(n, 0),
            w: RMat::zeros(n, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.ncols()
    }
}

fn split(x: &Mat<c64>, y: &Mat<c64>) -> RMat {
    hcat(&hcat(&re(x), &re(y)), &hcat(&im(x), &im(y)))
}

fn raw_directions(sys: &DescriptorSystem, omega: f64) -> Result<(RMat, RMat)> {
    let s = c64::new(0.0, omega);
    let lu = ComplexLu::new(&shifted(s, &sys.e, &sys.a), s)?;
    let e = cplx(&sys.e);
    let x1 = lu.solve(&cplx(&sys.b));
    let x2 = lu.solve(&(&e * &x1));
    let y1 = lu.solve_adjoint(&cplx(&sys.c.transpose().to_owned()));
    let y2 = lu.solve_adjoint(&(e.transpose() * &y1));
    Ok((split(&x1, &x2), split(&y1, &y2)))
}

/// Real directions whose spans give Hermite interpolation of order two at
/// `±iω` from each side. When `m != p` the shorter side is padded with
/// directions taken at nearby frequencies so both sides have equal size.
pub fn expansion_directions(sys: &DescriptorSystem, omega: f64) -> Result<(RMat, RMat)> {
    let (mut vt, mut wt) = raw_directions(sys, omega)?;
    let target = vt.ncols().max(wt.ncols());
    let mut k = 1;
    while vt.ncols() < target || wt.ncols() < target {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let delta = 1e-3 * ((k + 1) / 2) as f64;
        let w2 = if omega > 0.0 {
            omega * (1.0 + sign * delta)
        } else {
            delta * k as f64
        };
        let (pv, pw) = raw_directions(sys, w2)?;
        if vt.ncols() < target {
            vt = hcat(&vt, &pv);
        }
        if wt.ncols() < target {
            wt = hcat(&wt, &pw);
        }
        k += 1;
        if k > 64 {
            return Err(MorError::DimensionMismatch("cannot balance basis sizes".into()));
        }
    }
    let trim = |m: &RMat| Mat::from_fn(m.nrows(), target, |i, j| m[(i, j)]);
    Ok((trim(&vt), trim(&wt)))
}

/// Repeated Gram-Schmidt of `x` against the columns of `basis` and the
/// vectors in `extra`. Returns the normalized remainder if its norm exceeds
/// `drop_tol` times the original norm.
fn orthogonalize(basis: &RMat, extra: &[Vec<f64>], mut x: Vec<f64>, drop_tol: f64, passes: usize) -> Option<Vec<f64>> {
    let n = basis.nrows();
    let orig = x.iter().map(|z| z * z).sum::<f64>().sqrt();
    if orig == 0.0 || !orig.is_finite() {
        return None;
    }
    for _ in 0..passes.max(1) {
        for c in 0..basis.ncols() {
            let mut d = 0.0;
            for i in 0..n {
                d += basis[(i, c)] * x[i];
            }
            for i in 0..n {
                x[i] -= d * basis[(i, c)];
            }
        }
        for q in extra {
            let d: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
            for i in 0..n {
                x[i] -= d * q[i];
            }
        }
    }
    let nx = x.iter().map(|z| z * z).sum::<f64>().sqrt();
    (nx > drop_tol * orig).then(|| x.iter().map(|z| z / nx).collect())
}

fn accept_columns(basis: &RMat, new: &RMat, drop_tol: f64, passes: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for j in 0..new.ncols() {
        let x = (0..new.nrows()).map(|i| new[(i, j)]).collect();
        if let Some(q) = orthogonalize(basis, &out, x, drop_tol, passes) {
            out.push(q);
        }
    }
    out
}

/// Adds directions to `cols` until it has `target` entries, drawing first
/// from `donors` and then from coordinate vectors.
fn pad(basis: &RMat, cols: &mut Vec<Vec<f64>>, donors: &[Vec<f64>], target: usize, passes: usize) {
    let n = basis.nrows();
    let unit = (0..n).map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>());
    for x in donors.iter().cloned().chain(unit) {
        if cols.len() >= target {
            break;
        }
        // A loose threshold keeps the padded basis well conditioned.
        if let Some(q) = orthogonalize(basis, cols, x, 1e-3, passes) {
            cols.push(q);
        }
    }
}

fn append_cols(basis: &RMat, cols: &[Vec<f64>]) -> RMat {
    let n = basis.nrows();
    let k = basis.ncols();
    Mat::from_fn(n, k + cols.len(), |i, j| if j < k { basis[(i, j)] } else { cols[j - k][i] })
}

/// Orthonormalizes `vt` against `basis.v` and `wt` against `basis.w` and
/// appends what survives. When one side keeps more directions than the
/// other, the shorter side is padded so both bases keep the same number of
/// columns; every surviving direction stays in its basis.
pub fn orthonormalize_append(
    basis: &SubspaceBasis,
    vt: &RMat,
    wt: &RMat,
    drop_tol: f64,
    passes: usize,
) -> Result<(SubspaceBasis, usize)> {
    if vt.ncols() != wt.ncols() || vt.nrows() != basis.v.nrows() || wt.nrows() != basis.w.nrows() {
        return Err(MorError::DimensionMismatch("expansion blocks do not match the basis".into()));
    }
    let mut cv = accept_columns(&basis.v, vt, drop_tol, passes);
    let mut cw = accept_columns(&basis.w, wt, drop_tol, passes);
    let target = cv.len().max(cw.len());
    if cv.len() < target {
        let donors = cw.clone();
        pad(&basis.v, &mut cv, &donors, target, passes);
    } else if cw.len() < target {
        let donors = cv.clone();
        pad(&basis.w, &mut cw, &donors, target, passes);
    }
    let added = cv.len().min(cw.len());
    cv.truncate(added);
    cw.truncate(added);
    Ok((
        SubspaceBasis {
            v: append_cols(&basis.v, &cv),
            w: append_cols(&basis.w, &cw),
        },
        added,
    ))
}

/// `(WᵀEV, WᵀAV, WᵀB, CV, D)`.
pub fn project(sys: &DescriptorSystem, basis: &SubspaceBasis) -> Result<DescriptorSystem> {
    let (v, w) = (&basis.v, &basis.w);
    if v.ncols() == 0 {
        return Err(MorError::DimensionMismatch("empty projection basis".into()));
    }
    let wt = w.transpose();
    DescriptorSystem::new(
        wt * &sys.e * v,
        wt * &sys.a * v,
        wt * &sys.b,
        &sys.c * v,
        sys.d.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_stable, random_stable_descriptor};
    use crate::system::transfer_derivative;

    #[test]
    fn bases_stay_orthonormal_and_balanced() {
        let sys = random_stable(1, 30, 1, 2);
        let mut basis = SubspaceBasis::empty(30);
        for &w in &[0.5, 1.3, 2.0] {
            let (vt, wt) = expansion_directions(&sys, w).unwrap();
            assert_eq!(vt.ncols(), 8);
            assert_eq!(wt.ncols(), 8);
            let (nb, added) = orthonormalize_append(&basis, &vt, &wt, 1e-12, 2).unwrap();
            assert!(added <= 8);
            basis = nb;
        }
        assert_eq!(basis.v.ncols(), basis.w.ncols());
        for m in [&basis.v, &basis.w] {
            let g = m.transpose() * m - RMat::identity(m.ncols(), m.ncols());
            assert!(g.norm_max() < 1e-12);
        }
    }

    #[test]
    fn expansion_at_zero_drops_imaginary_parts() {
        let sys = random_stable(2, 10, 1, 1);
        let (vt, wt) = expansion_directions(&sys, 0.0).unwrap();
        let (b, added) = orthonormalize_append(&SubspaceBasis::empty(10), &vt, &wt, 1e-12, 2).unwrap();
        assert_eq!(added, 2);
        assert_eq!(b.dim(), 2);
    }

    #[test]
    fn projection_is_hermite_interpolatory() {
        for seed in 0..5 {
            let sys = random_stable_descriptor(seed, 20, 2, 2);
            let w = 0.7 + seed as f64 * 0.3;
            let (vt, wt) = expansion_directions(&sys, w).unwrap();
            let (basis, _) = orthonormalize_append(&SubspaceBasis::empty(20), &vt, &wt, 1e-12, 2).unwrap();
            let small = project(&sys, &basis).unwrap();
            let s = c64::new(0.0, w);
            for k in 0..4 {
                let hf = transfer_derivative(&sys, s, k).unwrap();
                let hs = transfer_derivative(&small, s, k).unwrap();
                let err = (&hf - &hs).norm_l2();
                let tol = if k == 0 { 1e-8 } else { 1e-6 } * (1.0 + hf.norm_l2());
                assert!(err < tol, "seed {seed} order {k}: {err:e}");
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn appends_keep_bases_orthonormal_and_grow_by_4m(
            seed in 0u64..1000,
            m in 1usize..3,
            ws in proptest::collection::vec(0.1f64..5.0, 1..4),
        ) {
            let n = 40;
            let sys = random_stable(seed, n, m, m);
            let mut basis = SubspaceBasis::empty(n);
            for &w in &ws {
                proptest::prop_assume!(ws.iter().filter(|&&o| (o - w).abs() < 1e-3).count() == 1);
                let (vt, wt) = expansion_directions(&sys, w).unwrap();
                let (nb, added) = orthonormalize_append(&basis, &vt, &wt, 1e-10, 2).unwrap();
                proptest::prop_assert_eq!(added, 4 * m);
                basis = nb;
                proptest::prop_assert_eq!(basis.v.ncols(), basis.w.ncols());
                for q in [&basis.v, &basis.w] {
                    let g = q.transpose() * q - RMat::identity(q.ncols(), q.ncols());
                    proptest::prop_assert!(g.norm_max() <= 1e-10);
                }
            }
        }
    }
}
