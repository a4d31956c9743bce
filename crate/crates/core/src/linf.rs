//! Global maximization of `σ(ω)` over `ω ≥ 0`: dense sampling followed by
//! Brent refinement of every competitive discrete peak.

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinfOptions {
    pub grid_points: usize,
    /// Relative bracket width at which peak refinement stops.
    pub refine_tol: f64,
    /// Peaks within this relative distance of the best value are reported.
    pub cluster_rel: f64,
    pub max_refine_iters: usize,
    /// Upper end of the sampled band; `None` derives it from the pole data.
    pub omega_cap: Option<f64>,
    /// At most this many discrete peaks are refined.
    pub max_candidates: usize,
    /// Discrete peaks below this fraction of the best sample are skipped.
    pub candidate_fraction: f64,
}

impl Default for LinfOptions {
    fn default() -> Self {
        Self {
            grid_points: 2048,
            refine_tol: 1e-10,
            cluster_rel: 1e-4,
            max_refine_iters: 100,
            omega_cap: None,
            max_candidates: 16,
            candidate_fraction: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Maximizer {
    pub omega: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct LinfResult {
    pub value: f64,
    pub omega: f64,
    /// Near-global maximizers sorted by decreasing value; the first entry is
    /// `(omega, value)`.
    pub maximizers: Vec<Maximizer>,
    /// More than one near-global maximizer was found.
    pub degenerate: bool,
    /// Samples of `σ` taken on the grid, in increasing `ω`.
    pub samples: Vec<(f64, f64)>,
}

/// Decades sampled beyond the upper frequency.
const TAIL_DECADES: f64 = 6.0;

/// Default upper frequency: `10 * max(1, max |λ|)`.
pub fn auto_cap(poles: &[c64]) -> f64 {
    let m = poles
        .iter()
        .filter(|p| p.re.is_finite() && p.im.is_finite())
        .fold(0.0f64, |acc, p| acc.max(p.norm()));
    10.0 * m.max(1.0)
}

/// Sorted, de-duplicated sampling frequencies: a log-spaced sweep up to the
/// cap plus a sparse tail beyond it, a uniform sweep over the band spanned by
/// pole imaginary parts, zero, the pole frequencies and any caller hints.
pub fn frequency_grid(hints: &[f64], poles: &[c64], opts: &LinfOptions) -> Vec<f64> {
    let finite: Vec<c64> = poles
        .iter()
        .copied()
        .filter(|p| p.re.is_finite() && p.im.is_finite())
        .collect();
    let cap = opts.omega_cap.unwrap_or_else(|| auto_cap(&finite));
    let mut lo = cap * 1e-7;
    for p in &finite {
        let a = p.norm();
        if a > 0.0 {
            lo = lo.min(1e-2 * a);
        }
    }
    let npts = opts.grid_points.max(2);
    let mut grid = Vec::with_capacity(2 * npts + hints.len() + finite.len() + 1);
    grid.push(0.0);
    let (l0, l1) = (lo.ln(), cap.ln());
    for k in 0..npts {
        grid.push((l0 + (l1 - l0) * k as f64 / (npts - 1) as f64).exp());
    }
    // Sparse tail past the cap: the supremum may only be approached as ω grows.
    let nt = (npts / 16).max(64);
    for k in 1..=nt {
        grid.push(cap * 10f64.powf(TAIL_DECADES * k as f64 / nt as f64));
    }
    let im_max = finite.iter().fold(0.0f64, |acc, p| acc.max(p.im.abs()));
    if im_max > 0.0 {
        let nl = (npts / 2).max(2);
        for k in 0..nl {
            grid.push(2.0 * im_max * k as f64 / (nl - 1) as f64);
        }
    }
    for p in &finite {
        grid.push(p.im.abs());
    }
    for &h in hints {
        if h.is_finite() {
            grid.push(h.abs());
        }
    }
    normalize_grid(grid)
}

pub(crate) fn normalize_grid(mut grid: Vec<f64>) -> Vec<f64> {
    grid.retain(|w| w.is_finite() && *w >= 0.0);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    grid
}

/// Samples `sigma` on `grid` in parallel; failed evaluations become NaN.
pub fn sample<F>(sigma: &F, grid: &[f64]) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    grid.par_iter()
        .map(|&w| (w, sigma(w).unwrap_or(f64::NAN)))
        .collect()
}

/// `sup_{ω ≥ 0} sigma(ω)`.
pub fn linf_norm<F>(sigma: F, hints: &[f64], poles: &[c64], opts: &LinfOptions) -> Result<LinfResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let grid = frequency_grid(hints, poles, opts);
    let samples = sample(&sigma, &grid);
    maximize_sampled(&sigma, samples, opts)
}

/// Refines the discrete peaks of already-computed samples.
pub fn maximize_sampled<F>(sigma: &F, mut samples: Vec<(f64, f64)>, opts: &LinfOptions) -> Result<LinfResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut finite: Vec<f64> = samples.iter().map(|s| s.1).filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(MorError::NoFinite);
    }
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = finite[finite.len() / 2];
    let limit = if median > 0.0 { median / f64::EPSILON } else { f64::INFINITY };
    for &(w, v) in &samples {
        if v.is_infinite() || (v.is_finite() && v > limit) {
            return Err(MorError::Unbounded { omega: w, value: v });
        }
    }
    // Drop failed samples; the peaks are located on the remaining ones.
    let pts: Vec<(f64, f64)> = samples.iter().copied().filter(|s| s.1.is_finite()).collect();
    let best = pts.iter().fold(f64::NEG_INFINITY, |acc, s| acc.max(s.1));
    let n = pts.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || pts[i].1 >= pts[i - 1].1;
            let right = i + 1 == n || pts[i].1 >= pts[i + 1].1;
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| pts[b].1.partial_cmp(&pts[a].1).unwrap());
    // Plateaus yield runs of equal neighbours; keep only one index per run.
    let mut chosen: Vec<usize> = Vec::new();
    for i in peaks {
        if pts[i].1 < opts.candidate_fraction * best && !chosen.is_empty() {
            break;
        }
        if chosen.iter().any(|&j| (j as isize - i as isize).abs() <= 1) {
            continue;
        }
        chosen.push(i);
        if chosen.len() >= opts.max_candidates.max(1) {
            break;
        }
    }
    let refined: Vec<Maximizer> = chosen
        .par_iter()
        .map(|&i| {
            let lo = if i == 0 { pts[0].0 } else { pts[i - 1].0 };
            let hi = if i + 1 == n { pts[i].0 } else { pts[i + 1].0 };
            refine_peak(sigma, lo, hi, pts[i], opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<Maximizer> = refined;
    all.sort_by(|a, b| b.sigma.partial_cmp(&a.sigma).unwrap());
    let top = all[0];
    if !top.sigma.is_finite() || top.sigma > limit {
        return Err(MorError::Unbounded {
            omega: top.omega,
            value: top.sigma,
        });
    }
    let mut maximizers: Vec<Maximizer> = Vec::new();
    for mx in all {
        if mx.sigma < top.sigma * (1.0 - opts.cluster_rel) {
            break;
        }
        let dup = maximizers
            .iter()
            .any(|o| (o.omega - mx.omega).abs() <= 1e-8 * o.omega.abs().max(1e-12));
        if !dup {
            maximizers.push(mx);
        }
    }
    Ok(LinfResult {
        value: top.sigma,
        omega: top.omega,
        degenerate: maximizers.len() > 1,
        maximizers,
        samples,
    })
}

/// Brent's method (parabolic steps with golden-section fallback) maximizing
/// `sigma` on `[lo, hi]`, started from the sampled point `start`.
pub fn refine_peak<F>(sigma: &F, lo: f64, hi: f64, start: (f64, f64), opts: &LinfOptions) -> Result<Maximizer>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(lo <= start.0 && start.0 <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(MorError::BracketInvalid { lo, hi });
    }
    let f = |w: f64| -> f64 {
        match sigma(w) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = start.0;
    let mut fx = -start.1;
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let abs_tol = 1e-14 * hi.max(1e-300);
    for _ in 0..opts.max_refine_iters {
        let xm = 0.5 * (a + b);
        let tol1 = opts.refine_tol * x.abs() + abs_tol;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let mut r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = d;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let u = u.clamp(lo, hi);
        let fu = f(u);
        // Strict improvement only, so flat stretches keep the sampled point.
        if fu < fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    // Endpoint maxima (e.g. at ω = 0) are approached but never sampled by
    // the interior iteration.
    for end in [lo, hi] {
        let fe = f(end);
        if fe < fx {
            x = end;
            fx = fe;
        }
    }
    // Brent's location is only good to about sqrt(eps) near a flat maximum;
    // a symmetric three-point vertex step pins it down further, which the
    // objective gradient depends on.
    if x > lo && x < hi {
        for _ in 0..2 {
            let h = 1e-5 * x.abs().max(abs_tol);
            if x - h < lo || x + h > hi {
                break;
            }
            let (fl, fr) = (f(x - h), f(x + h));
            let curv = fl - 2.0 * fx + fr;
            if !(curv > 0.0) {
                break;
            }
            let step = 0.5 * h * (fl - fr) / curv;
            if step.abs() > h || step == 0.0 {
                break;
            }
            let u = x + step;
            let fu = f(u);
            if fu > fx + 4.0 * f64::EPSILON * fx.abs() {
                break;
            }
            x = u;
            fx = fu;
        }
    }
    Ok(Maximizer { omega: x, sigma: -fx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{error_sigma, ReducedSystem};
    use faer::Mat;
    use proptest::prelude::*;

    fn zero_model(p: usize, m: usize) -> ReducedSystem {
        ReducedSystem {
            a_diag: vec![-1.0],
            a_sub: vec![],
            a_sup: vec![],
            e_diag: vec![1.0],
            b: Mat::zeros(1, m),
            c: Mat::zeros(p, 1),
            d: Mat::zeros(p, m),
        }
    }

    #[test]
    fn one_pole_norm_is_dc_gain() {
        for &(k, a) in &[(1.0, 1.0), (3.0, 0.5), (0.2, 40.0)] {
            let sys = crate::fixtures::one_pole(k, a);
            let zero = zero_model(1, 1);
            let sig = |w: f64| error_sigma(&sys, &zero, w).map(|s| s.sigma);
            let res = linf_norm(sig, &[], &[c64::new(-a, 0.0)], &LinfOptions::default()).unwrap();
            assert!((res.value - k / a).abs() < 1e-8 * (k / a));
            assert!(res.omega.abs() < 1e-6);
        }
    }

    #[test]
    fn oscillator_peak_matches_closed_form() {
        let (w0, zeta) = (2.0f64, 0.05f64);
        let sys = crate::fixtures::oscillator(w0, zeta);
        let zero = zero_model(1, 1);
        let sig = |w: f64| error_sigma(&sys, &zero, w).map(|s| s.sigma);
        let poles = crate::system::poles(&sys).unwrap();
        let res = linf_norm(sig, &[], &poles, &LinfOptions::default()).unwrap();
        let peak = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        let wpk = w0 * (1.0 - 2.0 * zeta * zeta).sqrt();
        assert!((res.value - peak).abs() < 1e-10 * peak);
        assert!((res.omega - wpk).abs() < 1e-6 * wpk);
    }

    #[test]
    fn unbounded_is_detected() {
        let sig = |w: f64| Ok(if (w - 1.0).abs() < 1e-12 { 1e300 } else { 1.0 });
        let r = linf_norm(sig, &[1.0], &[], &LinfOptions::default());
        assert!(matches!(r, Err(MorError::Unbounded { .. })));
    }

    #[test]
    fn all_failures_is_no_finite() {
        let sig = |_: f64| -> Result<f64> { Ok(f64::NAN) };
        let r = linf_norm(sig, &[], &[], &LinfOptions::default());
        assert!(matches!(r, Err(MorError::NoFinite)));
    }

    #[test]
    fn twin_peaks_reported_as_cluster() {
        // Two equal bumps at 1 and 3.
        let g = |w: f64, c: f64| 1.0 / (1.0 + 100.0 * (w - c) * (w - c));
        let sig = |w: f64| Ok(g(w, 1.0) + g(w, 3.0));
        let res = linf_norm(sig, &[], &[c64::new(-0.1, 1.0), c64::new(-0.1, 3.0)], &LinfOptions::default()).unwrap();
        assert_eq!(res.maximizers.len(), 2);
        let mut ws: Vec<f64> = res.maximizers.iter().map(|m| m.omega).collect();
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ws[0] - 1.0).abs() < 1e-3 && (ws[1] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn constant_function_is_degenerate_at_zero() {
        let sig = |_: f64| Ok(0.75);
        let res = linf_norm(sig, &[], &[], &LinfOptions::default()).unwrap();
        assert_eq!(res.value, 0.75);
        assert_eq!(res.omega, 0.0);
        assert!(res.degenerate);
    }

    #[test]
    fn parabola_and_cosine_brackets() {
        let opts = LinfOptions::default();
        let q = |w: f64| Ok(1.0 - (w - 2.0) * (w - 2.0));
        let m = refine_peak(&q, 1.0, 3.0, (1.5, 0.75), &opts).unwrap();
        assert!((m.omega - 2.0).abs() < 1e-8);
        let c = |w: f64| Ok(w.cos());
        let m = refine_peak(&c, -1.0, 1.0, (0.1, 0.1f64.cos()), &opts).unwrap();
        assert!(m.omega.abs() < 1e-7);
    }

    #[test]
    fn invalid_bracket_rejected() {
        let sig = |_: f64| Ok(1.0);
        let r = refine_peak(&sig, 2.0, 1.0, (1.5, 1.0), &LinfOptions::default());
        assert!(matches!(r, Err(MorError::BracketInvalid { .. })));
    }

    #[test]
    fn grid_contains_hints_and_zero() {
        let g = frequency_grid(&[0.37, -2.0], &[c64::new(-1.0, 4.0)], &LinfOptions::default());
        assert_eq!(g[0], 0.0);
        assert!(g.contains(&0.37) && g.contains(&2.0) && g.contains(&4.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    fn lorentz(peaks: &[(f64, f64, f64)], w: f64) -> f64 {
        peaks.iter().map(|(a, c, h)| a / (1.0 + ((w - c) / h).powi(2))).sum::<f64>() + 0.01
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn sample_bound_cluster_and_determinism(
            peaks in prop::collection::vec((0.1f64..2.0, 0.0f64..15.0, 0.01f64..1.0), 1..5)
        ) {
            let opts = LinfOptions { grid_points: 256, omega_cap: Some(20.0), ..Default::default() };
            let f = |w: f64| Ok(lorentz(&peaks, w));
            let res = linf_norm(f, &[], &[], &opts).unwrap();
            let top = res.samples.iter().fold(f64::NEG_INFINITY, |a, s| a.max(s.1));
            prop_assert!(res.value >= top);
            prop_assert!((lorentz(&peaks, res.omega) - res.value).abs() <= 1e-14 * res.value);
            prop_assert_eq!(res.maximizers[0], Maximizer { omega: res.omega, sigma: res.value });
            for mx in &res.maximizers {
                prop_assert!(mx.sigma >= (1.0 - opts.cluster_rel) * res.value);
            }
            let again = linf_norm(f, &[], &[], &opts).unwrap();
            prop_assert_eq!(again.value.to_bits(), res.value.to_bits());
            prop_assert_eq!(again.omega.to_bits(), res.omega.to_bits());
        }

        #[test]
        fn refinement_never_lowers_the_start(c in 0.5f64..5.0, h in 0.05f64..1.0, off in -0.5f64..0.5) {
            let f = |w: f64| Ok(1.0 / (1.0 + ((w - c) / h).powi(2)));
            let x0 = c + off * h;
            let s0 = f(x0).unwrap();
            let mx = refine_peak(&f, c - 2.0 * h, c + 2.0 * h, (x0, s0), &LinfOptions::default()).unwrap();
            prop_assert!(mx.sigma >= s0);
            prop_assert!((mx.omega - c).abs() <= 1e-9 * c);
        }
    }
}
