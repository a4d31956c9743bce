//! Initial reduced models and initial interpolation data: dominant poles,
//! balanced truncation and the real block-diagonal canonical form.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::linalg::{cond2_real, cplx, eigen_real, gevd_lr, hcat, is_finite, max_abs, CMat, ComplexLu, Qz, RMat, ZERO};
use crate::projection::{expansion_directions, orthonormalize_append, project, SubspaceBasis};
use crate::system::{DescriptorSystem, ReducedSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Bt,
    Dominant,
}

#[derive(Clone, Copy, Debug)]
pub struct DominantPole {
    pub lambda: c64,
    pub residue_norm: f64,
    pub metric: f64,
}

/// The `count` poles with the largest `‖R_j‖ / |Re λ_j|`, one per conjugate
/// pair (the member with nonnegative imaginary part).
pub fn dominant_poles(sys: &DescriptorSystem, count: usize) -> Result<Vec<DominantPole>> {
    let a = cplx(&sys.a);
    let e = cplx(&sys.e);
    let (alpha, beta, ul, ur) = gevd_lr(&a, &e)?;
    let n = sys.n();
    let escale = max_abs(&sys.e).max(f64::MIN_POSITIVE);
    let bc = cplx(&sys.b);
    let cc = cplx(&sys.c);
    let mut out = Vec::new();
    for j in 0..n {
        if beta[j].norm() <= 100.0 * n as f64 * f64::EPSILON * escale {
            continue;
        }
        let lambda = alpha[j] / beta[j];
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            continue;
        }
        if lambda.im < -1e-12 * (1.0 + lambda.norm()) {
            continue;
        }
        if lambda.re >= 0.0 {
            log::warn!("excluding pole {lambda} with nonnegative real part from dominance ranking");
            continue;
        }
        let x = ur.col(j).to_owned();
        let y = ul.col(j).to_owned();
        let yex: c64 = y.adjoint() * &e * &x;
        if yex.norm() == 0.0 {
            continue;
        }
        // R = (C x)(y^* B) / (y^* E x) is rank one.
        let cx = (&cc * &x).norm_l2();
        let yb = (y.adjoint() * &bc).norm_l2();
        let residue_norm = cx * yb / yex.norm();
        let metric = residue_norm / -lambda.re;
        out.push(DominantPole {
            lambda: c64::new(lambda.re, lambda.im.max(0.0)),
            residue_norm,
            metric,
        });
    }
    out.sort_by(|a, b| b.metric.partial_cmp(&a.metric).unwrap_or(std::cmp::Ordering::Equal));
    out.truncate(count);
    Ok(out)
}

/// Number of dominant poles used to build the first interpolation basis.
pub fn initial_pole_count(m: usize, p: usize, r: usize) -> usize {
    let base = if m == 1 && p == 1 { 7 } else { 3 };
    let k = m.max(p);
    let mut l = base;
    while 4 * k * l <= r {
        l += 1;
    }
    l
}

/// Frequency hints: the pole frequencies and 15 equispaced points on
/// `[-0.1, 2M]`, `M` the largest of them, keeping only `ω ≥ 0`.
pub fn frequency_hints(poles: &[DominantPole]) -> Vec<f64> {
    let mut h: Vec<f64> = poles.iter().map(|p| p.lambda.im.abs()).collect();
    let big = h.iter().fold(0.0f64, |a, &b| a.max(b));
    for k in 0..15 {
        let w = -0.1 + (2.0 * big + 0.1) * k as f64 / 14.0;
        if w >= 0.0 {
            h.push(w);
        }
    }
    h
}

/// Expands an empty basis at the pole frequencies in order.
pub fn interpolation_basis(sys: &DescriptorSystem, freqs: &[f64]) -> Result<SubspaceBasis> {
    let mut basis = SubspaceBasis::empty(sys.n());
    for &w in freqs {
        let (vt, wt) = expansion_directions(sys, w)?;
        basis = orthonormalize_append(&basis, &vt, &wt, 1e-10, 2)?.0;
    }
    if basis.dim() == 0 {
        return Err(MorError::InitFailure("interpolation basis is empty".into()));
    }
    Ok(basis)
}

fn standard_form(sys: &DescriptorSystem) -> Result<(RMat, RMat)> {
    let lu = ComplexLu::new(&cplx(&sys.e), ZERO).map_err(|_| MorError::SingularE)?;
    let a = crate::linalg::re(&lu.solve(&cplx(&sys.a)));
    let b = crate::linalg::re(&lu.solve(&cplx(&sys.b)));
    Ok((a, b))
}

/// Complex Schur form `M = U R U^*` obtained from the QZ form of `(M, I)`.
fn complex_schur(m: &RMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    let qz = Qz::new(&cplx(m), &CMat::identity(n, n))?;
    // T = Q^* Z is unitary and triangular, hence diagonal: Z = Q T.
    let r = Mat::from_fn(n, n, |i, j| {
        if i <= j {
            qz.s[(i, j)] * qz.t[(j, j)].conj()
        } else {
            ZERO
        }
    });
    Ok((qz.q, r))
}

/// Solves `R X + X R^* = G` for upper-triangular `R` (column by column,
/// last first).
fn lyap_triangular(r: &CMat, g: &CMat) -> Result<CMat> {
    let n = r.nrows();
    let mut x = CMat::zeros(n, n);
    for j in (0..n).rev() {
        let mut rhs: Vec<c64> = (0..n).map(|i| g[(i, j)]).collect();
        for k in j + 1..n {
            let c = r[(j, k)].conj();
            for i in 0..n {
                rhs[i] -= c * x[(i, k)];
            }
        }
        let shift = r[(j, j)].conj();
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in i + 1..n {
                acc -= r[(i, k)] * x[(k, j)];
            }
            let d = r[(i, i)] + shift;
            if d.norm() == 0.0 {
                return Err(MorError::UnstableSystem(0.0));
            }
            x[(i, j)] = acc / d;
        }
    }
    Ok(x)
}

/// Controllability and observability Gramians of a stable standard-form
/// system: `A P + P Aᵀ + B Bᵀ = 0`, `Aᵀ Q + Q A + Cᵀ C = 0`.
pub fn gramians(a: &RMat, b: &RMat, c: &RMat) -> Result<(RMat, RMat)> {
    let n = a.nrows();
    let (u, r) = complex_schur(a)?;
    let alpha = (0..n).fold(f64::NEG_INFINITY, |acc, i| acc.max(r[(i, i)].re));
    if alpha >= 0.0 {
        return Err(MorError::UnstableSystem(alpha));
    }
    let bb = cplx(&(b * b.transpose()));
    let g = -(u.adjoint() * &bb * &u);
    let xp = lyap_triangular(&r, &g)?;
    let p = &u * xp * u.adjoint();
    // Rᴴ Y + Y R = F becomes triangular again after reversing the index order.
    let rev = |m: &CMat| Mat::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let cc = cplx(&(c.transpose() * c));
    let f = -(u.adjoint() * &cc * &u);
    let rr = rev(&r.adjoint().to_owned());
    let y = rev(&lyap_triangular(&rr, &rev(&f))?);
    let q = &u * y * u.adjoint();
    let sym = |m: &CMat| Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
    Ok((sym(&p), sym(&q)))
}

fn psd_factor(m: &RMat) -> Result<RMat> {
    let n = m.nrows();
    let ev = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| MorError::DecompositionFailure(format!("symmetric eigen: {e:?}")))?;
    let s = ev.S().column_vector();
    let u = ev.U();
    Ok(Mat::from_fn(n, n, |i, j| u[(i, j)] * s[j].max(0.0).sqrt()))
}

struct Balanced {
    a: RMat,
    b: RMat,
    c: RMat,
    lc: RMat,
    lo: RMat,
    hsv: Vec<f64>,
    u: RMat,
    v: RMat,
}

fn balance(sys: &DescriptorSystem) -> Result<Balanced> {
    let (a, b) = standard_form(sys)?;
    let c = sys.c.clone();
    let (p, q) = gramians(&a, &b, &c)?;
    let lc = psd_factor(&p)?;
    let lo = psd_factor(&q)?;
    let svd = (lo.transpose() * &lc)
        .svd()
        .map_err(|e| MorError::DecompositionFailure(format!("SVD: {e:?}")))?;
    let hsv: Vec<f64> = (0..sys.n()).map(|i| svd.S().column_vector()[i]).collect();
    Ok(Balanced {
        a,
        b,
        c,
        lc,
        lo,
        hsv,
        u: svd.U().to_owned(),
        v: svd.V().to_owned(),
    })
}

/// Hankel singular values in nonincreasing order.
pub fn hankel_singular_values(sys: &DescriptorSystem) -> Result<Vec<f64>> {
    Ok(balance(sys)?.hsv)
}

/// Square-root balanced truncation to order `r`; returns the standard-form
/// reduced model and the Hankel singular values.
pub fn balanced_truncation(sys: &DescriptorSystem, r: usize) -> Result<(DescriptorSystem, Vec<f64>)> {
    let bal = balance(sys)?;
    let n = sys.n();
    if r == 0 || r > n {
        return Err(MorError::DimensionMismatch(format!("cannot truncate order {n} to {r}")));
    }
    if bal.hsv[r - 1] <= 0.0 {
        return Err(MorError::InitFailure("reduced order exceeds the numerical rank of the Gramians".into()));
    }
    let scale: Vec<f64> = (0..r).map(|k| 1.0 / bal.hsv[k].sqrt()).collect();
    let tr = &bal.lc * Mat::from_fn(n, r, |i, j| bal.v[(i, j)] * scale[j]);
    let tl = &bal.lo * Mat::from_fn(n, r, |i, j| bal.u[(i, j)] * scale[j]);
    let ar = tl.transpose() * &bal.a * &tr;
    let br = tl.transpose() * &bal.b;
    let cr = &bal.c * &tr;
    let red = DescriptorSystem::standard(ar, br, cr, sys.d.clone())?;
    Ok((red, bal.hsv))
}

/// Converts `(Ê, Â, B̂, Ĉ, D)` into the tridiagonal parameterization with
/// `E = I` and `A` made of 1x1 blocks `λ` and 2x2 blocks
/// `[[α, β], [-β, α]]`, ordered by `(Re λ, Im λ)`.
pub fn to_canonical(small: &DescriptorSystem) -> Result<ReducedSystem> {
    let r = small.n();
    let lu = ComplexLu::new(&cplx(&small.e), ZERO).map_err(|_| MorError::SingularE)?;
    let m = crate::linalg::re(&lu.solve(&cplx(&small.a)));
    let bh = crate::linalg::re(&lu.solve(&cplx(&small.b)));
    if !is_finite(&m) {
        return Err(MorError::SingularE);
    }
    let (vals, vecs) = eigen_real(&m)?;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        (vals[i].re, vals[i].im)
            .partial_cmp(&(vals[j].re, vals[j].im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let is_real = |z: c64| z.im.abs() <= 1e-12 * (1.0 + z.norm());
    let mut x = RMat::zeros(r, 0);
    let mut blocks: Vec<(f64, Option<f64>)> = Vec::new();
    let mut used = vec![false; r];
    for &i in &order {
        if used[i] {
            continue;
        }
        let z = vals[i];
        let col: Vec<c64> = (0..r).map(|k| vecs[(k, i)]).collect();
        if is_real(z) {
            used[i] = true;
            // Rotate the eigenvector to be real before dropping the imaginary part.
            let piv = col.iter().copied().fold(ZERO, |a, b| if b.norm() > a.norm() { b } else { a });
            let ph = if piv.norm() > 0.0 { piv.conj() / piv.norm() } else { c64::new(1.0, 0.0) };
            x = hcat(&x, &Mat::from_fn(r, 1, |k, _| (col[k] * ph).re));
            blocks.push((z.re, None));
        } else {
            // Pair with the nearest unused conjugate.
            let partner = (0..r)
                .filter(|&j| j != i && !used[j])
                .min_by(|&a, &b| {
                    (vals[a] - z.conj())
                        .norm()
                        .partial_cmp(&(vals[b] - z.conj()).norm())
                        .unwrap()
                })
                .ok_or(MorError::DefectiveEigenstructure(f64::INFINITY))?;
            used[i] = true;
            used[partner] = true;
            let (zp, cp) = if z.im > 0.0 {
                (z, col)
            } else {
                (vals[partner], (0..r).map(|k| vecs[(k, partner)]).collect())
            };
            x = hcat(&x, &Mat::from_fn(r, 2, |k, j| if j == 0 { cp[k].re } else { cp[k].im }));
            blocks.push((zp.re, Some(zp.im.abs())));
        }
    }
    let cond = cond2_real(&x);
    if !(cond <= 1e10) {
        return Err(MorError::DefectiveEigenstructure(cond));
    }
    let xlu = ComplexLu::new(&cplx(&x), ZERO).map_err(|_| MorError::DefectiveEigenstructure(cond))?;
    let mut b = crate::linalg::re(&xlu.solve(&cplx(&bh)));
    let mut c = &small.c * &x;
    let mut a_diag = vec![0.0; r];
    let mut a_sub = vec![0.0; r.saturating_sub(1)];
    let mut a_sup = vec![0.0; r.saturating_sub(1)];
    let mut k = 0;
    for (alpha, beta) in blocks {
        let width = if beta.is_some() { 2 } else { 1 };
        // Scale each block so its input and output couplings have equal norm.
        let nb: f64 = (k..k + width)
            .map(|i| (0..b.ncols()).map(|j| b[(i, j)] * b[(i, j)]).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let nc: f64 = (k..k + width)
            .map(|i| (0..c.nrows()).map(|j| c[(j, i)] * c[(j, i)]).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if nb > 0.0 && nc > 0.0 && nb.is_finite() && nc.is_finite() {
            let s = (nb / nc).sqrt();
            for i in k..k + width {
                for j in 0..b.ncols() {
                    b[(i, j)] /= s;
                }
                for j in 0..c.nrows() {
                    c[(j, i)] *= s;
                }
            }
        }
        a_diag[k] = alpha;
        if let Some(beta) = beta {
            a_diag[k + 1] = alpha;
            a_sup[k] = beta;
            a_sub[k] = -beta;
        }
        k += width;
    }
    Ok(ReducedSystem {
        a_diag,
        a_sub,
        a_sup,
        e_diag: vec![1.0; r],
        b,
        c,
        d: small.d.clone(),
    })
}

/// Everything the outer iteration needs to start.
#[derive(Clone, Debug)]
pub struct Initialization {
    pub red: ReducedSystem,
    pub mode: InitMode,
    pub dominant: Vec<DominantPole>,
    pub basis: SubspaceBasis,
    pub hints: Vec<f64>,
    pub hankel: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

/// Interpolatory initial model: expand at the first `⌈r / 4k⌉` dominant
/// pole frequencies (`k = max(m, p)`) and keep the first `r` directions of
/// each side.
fn interpolatory_init(sys: &DescriptorSystem, r: usize, poles: &[DominantPole]) -> Result<ReducedSystem> {
    let k = sys.m().max(sys.p());
    let count = r.div_ceil(4 * k).max(1);
    let mut freqs: Vec<f64> = poles.iter().take(count).map(|p| p.lambda.im).collect();
    let mut basis = interpolation_basis(sys, &freqs)?;
    // Top up with the remaining dominant poles if directions were dropped.
    let mut next = count;
    while basis.dim() < r && next < poles.len() {
        freqs.push(poles[next].lambda.im);
        let (vt, wt) = expansion_directions(sys, poles[next].lambda.im)?;
        basis = orthonormalize_append(&basis, &vt, &wt, 1e-10, 2)?.0;
        next += 1;
    }
    if basis.dim() < r {
        return Err(MorError::InitFailure(format!(
            "interpolation basis has dimension {} < r = {r}",
            basis.dim()
        )));
    }
    let trunc = SubspaceBasis {
        v: Mat::from_fn(sys.n(), r, |i, j| basis.v[(i, j)]),
        w: Mat::from_fn(sys.n(), r, |i, j| basis.w[(i, j)]),
    };
    to_canonical(&project(sys, &trunc)?).map_err(|e| MorError::InitFailure(format!("canonical form: {e}")))
}

/// Builds the initial reduced model, the first subspace and the frequency
/// hints. BT falls back to the interpolatory start if it fails.
pub fn initialize(sys: &DescriptorSystem, r: usize, mode: InitMode) -> Result<Initialization> {
    if r == 0 || r >= sys.n() {
        return Err(MorError::DimensionMismatch(format!(
            "reduced order {r} must satisfy 1 <= r < n = {}",
            sys.n()
        )));
    }
    let ell = initial_pole_count(sys.m(), sys.p(), r);
    let want = ell.max(r.div_ceil(4 * sys.m().max(sys.p()))) + ell;
    let poles = dominant_poles(sys, want)?;
    if poles.is_empty() {
        return Err(MorError::InitFailure("system has no finite poles".into()));
    }
    let used: Vec<DominantPole> = poles.iter().take(ell).copied().collect();
    let freqs: Vec<f64> = used.iter().map(|p| p.lambda.im).collect();
    let basis = interpolation_basis(sys, &freqs)?;
    let hints = frequency_hints(&used);
    let mut notes = Vec::new();
    let (red, mode, hankel) = match mode {
        InitMode::Bt => match balanced_truncation(sys, r).and_then(|(bt, hsv)| Ok((to_canonical(&bt)?, hsv))) {
            Ok((red, hsv)) => (red, InitMode::Bt, Some(hsv)),
            Err(e) => {
                log::warn!("balanced truncation failed ({e}); using dominant-pole initialization");
                notes.push(format!("balanced truncation failed ({e}); fell back to dominant-pole initialization"));
                (interpolatory_init(sys, r, &poles)?, InitMode::Dominant, None)
            }
        },
        InitMode::Dominant => (interpolatory_init(sys, r, &poles)?, InitMode::Dominant, None),
    };
    Ok(Initialization {
        red,
        mode,
        dominant: used,
        basis,
        hints,
        hankel,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_stable, random_stable_descriptor};
    use crate::system::{poles, transfer_eval};

    #[test]
    fn gramians_solve_lyapunov_equations() {
        let sys = random_stable(7, 15, 2, 3);
        let (p, q) = gramians(&sys.a, &sys.b, &sys.c).unwrap();
        let rp = &sys.a * &p + &p * sys.a.transpose() + &sys.b * sys.b.transpose();
        let rq = sys.a.transpose() * &q + &q * &sys.a + sys.c.transpose() * &sys.c;
        assert!(rp.norm_max() < 1e-10 * (&sys.b * sys.b.transpose()).norm_max());
        assert!(rq.norm_max() < 1e-10 * (sys.c.transpose() * &sys.c).norm_max());
    }

    #[test]
    fn hankel_values_of_one_pole() {
        // k/(s+a): P = 1/(2a), Q = k²/(2a), σ = |k|/(2a)
        let hsv = hankel_singular_values(&crate::fixtures::one_pole(3.0, 2.0)).unwrap();
        assert!((hsv[0] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn bt_error_is_between_bounds() {
        let sys = random_stable_descriptor(3, 20, 1, 1);
        let (bt, hsv) = balanced_truncation(&sys, 4).unwrap();
        let mut all = poles(&sys).unwrap();
        all.extend(poles(&bt).unwrap());
        let err = crate::linf::linf_norm(
            |w| {
                let s = c64::new(0.0, w);
                crate::linalg::sigma_max(&(transfer_eval(&sys, s)? - transfer_eval(&bt, s)?))
            },
            &[],
            &all,
            &Default::default(),
        )
        .unwrap()
        .value;
        let tail: f64 = hsv[4..].iter().sum();
        assert!(err >= hsv[4] * (1.0 - 1e-8), "{err} < {}", hsv[4]);
        assert!(err <= 2.0 * tail * (1.0 + 1e-8));
    }

    #[test]
    fn canonical_form_preserves_transfer_function() {
        for seed in 0..6 {
            let sys = random_stable_descriptor(seed, 7, 2, 1);
            let red = to_canonical(&sys).unwrap();
            assert!(red.e_diag.iter().all(|&e| e == 1.0));
            for &w in &[0.0, 0.4, 2.5] {
                let s = c64::new(0.0, w);
                let d = transfer_eval(&sys, s).unwrap() - crate::system::reduced_transfer_eval(&red, s).unwrap();
                assert!(d.norm_l2() < 1e-9, "seed {seed}");
            }
            // Block structure: sub = -sup on each 2x2 block, zero between blocks.
            for i in 0..red.a_sub.len() {
                assert!((red.a_sub[i] + red.a_sup[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn canonical_form_rejects_defective_matrix() {
        let a = Mat::from_fn(2, 2, |i, j| [[-1.0, 1.0], [0.0, -1.0]][i][j]);
        let sys = DescriptorSystem::standard(a, Mat::from_fn(2, 1, |_, _| 1.0), Mat::from_fn(1, 2, |_, _| 1.0), Mat::zeros(1, 1)).unwrap();
        assert!(matches!(to_canonical(&sys), Err(MorError::DefectiveEigenstructure(_))));
    }

    #[test]
    fn dominant_poles_of_modal_system() {
        // Diagonal system: residues are b_i c_i, poles -a_i.
        let a = Mat::from_fn(3, 3, |i, j| if i == j { [-1.0, -0.1, -5.0][i] } else { 0.0 });
        let b = Mat::from_fn(3, 1, |i, _| [1.0, 0.2, 3.0][i]);
        let c = Mat::from_fn(1, 3, |_, j| [1.0, 1.0, 1.0][j]);
        let sys = DescriptorSystem::standard(a, b, c, Mat::zeros(1, 1)).unwrap();
        let dp = dominant_poles(&sys, 3).unwrap();
        // metrics: 1/1 = 1, 0.2/0.1 = 2, 3/5 = 0.6
        let got: Vec<f64> = dp.iter().map(|p| p.lambda.re).collect();
        assert!((got[0] + 0.1).abs() < 1e-12 && (got[1] + 1.0).abs() < 1e-12 && (got[2] + 5.0).abs() < 1e-12);
        assert!((dp[0].metric - 2.0).abs() < 1e-10);
    }

    #[test]
    fn pole_count_rule() {
        assert_eq!(initial_pole_count(1, 1, 8), 7);
        assert_eq!(initial_pole_count(3, 3, 12), 3);
        assert_eq!(initial_pole_count(1, 1, 40), 11);
        let h = frequency_hints(&[DominantPole { lambda: c64::new(-1.0, 2.0), residue_norm: 1.0, metric: 1.0 }]);
        assert_eq!(h.len(), 1 + 14);
        assert!(h.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn both_initializations_run() {
        let sys = random_stable(5, 24, 1, 1);
        for mode in [InitMode::Bt, InitMode::Dominant] {
            let init = initialize(&sys, 4, mode).unwrap();
            assert_eq!(init.red.r(), 4);
            assert_eq!(init.mode, mode);
            assert!(init.basis.dim() > 0);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn hankel_values_sorted_and_poles_one_per_pair(seed in 0u64..1000, n in 2usize..16) {
            let sys = random_stable(seed, n, 1 + (seed % 2) as usize, 1);
            let hsv = hankel_singular_values(&sys).unwrap();
            proptest::prop_assert_eq!(hsv.len(), n);
            proptest::prop_assert!(hsv.iter().all(|&v| v >= 0.0));
            proptest::prop_assert!(hsv.windows(2).all(|w| w[0] >= w[1]));
            let dom = dominant_poles(&sys, n).unwrap();
            proptest::prop_assert!(dom.iter().all(|d| d.lambda.im >= 0.0));
            proptest::prop_assert!(dom.windows(2).all(|w| w[0].metric >= w[1].metric));
            let all = poles(&sys).unwrap();
            let upper = all.iter().filter(|z| z.im >= -1e-12 * (1.0 + z.norm())).count();
            proptest::prop_assert!(dom.len() <= upper);
        }
    }
}
