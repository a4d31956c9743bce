//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Benchmark criteria read Matrix Market files from `$LINF_MOR_BENCH_DIR/iss`
//! and `$LINF_MOR_BENCH_DIR/cdplayer` (`A.mtx`, `B.mtx`, `C.mtx`, optional
//! `E.mtx`, `D.mtx`) and are skipped when those are absent.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use linf_mor::fixtures::{one_pole, oscillator, random_modal, random_stable, ModalSpec};
use linf_mor::framework::{reduce, refine, FrameworkOptions, FrameworkReport};
use linf_mor::init::{hankel_singular_values, initialize, InitMode};
use linf_mor::linalg::{eigen_real, CMat, RMat};
use linf_mor::linf::{linf_norm, LinfOptions};
use linf_mor::mtx::read_mtx;
use linf_mor::objective::{full_error, spectral_abscissa, ReducedObjective};
use linf_mor::projection::{expansion_directions, orthonormalize_append, project, SubspaceBasis};
use linf_mor::system::{pack, poles, transfer_derivative, DescriptorSystem, FrequencyResponse, ReducedSystem, SchurSystem};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

// ---------------------------------------------------------------------------
// Independent helpers

/// `σ_max` of a matrix with at most two rows or columns, in closed form.
fn sigma_small(h: &CMat) -> f64 {
    let (p, m) = (h.nrows(), h.ncols());
    let fro2: f64 = (0..p).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| h[(i, j)].norm_sqr()).sum();
    if p == 1 || m == 1 {
        return fro2.sqrt();
    }
    assert!(p == 2 && m == 2);
    let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
    let disc = (fro2 * fro2 - 4.0 * det.norm_sqr()).max(0.0);
    ((fro2 + disc.sqrt()) / 2.0).sqrt()
}

/// Pole-residue form of a standard-form system.
struct Modal {
    lambda: Vec<c64>,
    cv: CMat,
    wb: CMat,
    d: RMat,
}

impl Modal {
    fn new(sys: &DescriptorSystem) -> Modal {
        let (lambda, v) = eigen_real(&sys.a).unwrap();
        let vinv = v.partial_piv_lu().solve(CMat::identity(v.nrows(), v.nrows()));
        let cc = Mat::from_fn(sys.p(), sys.n(), |i, j| c64::new(sys.c[(i, j)], 0.0));
        let bc = Mat::from_fn(sys.n(), sys.m(), |i, j| c64::new(sys.b[(i, j)], 0.0));
        Modal {
            lambda,
            cv: &cc * &v,
            wb: &vinv * &bc,
            d: sys.d.clone(),
        }
    }

    fn sigma(&self, w: f64) -> f64 {
        let (p, m) = (self.cv.nrows(), self.wb.ncols());
        let s = c64::new(0.0, w);
        let h = Mat::from_fn(p, m, |i, j| {
            let mut acc = c64::new(self.d[(i, j)], 0.0);
            for (k, l) in self.lambda.iter().enumerate() {
                acc += self.cv[(i, k)] * self.wb[(k, j)] / (s - l);
            }
            acc
        });
        sigma_small(&h)
    }
}

/// Golden-section maximization on `[a, b]`.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-14 * b.abs().max(1e-12) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(x1, f1), (x2, f2), (a, fa), (b, fb)]
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |acc, z| if z.1 > acc.1 { z } else { acc })
}

/// Brute-force sup of `f` over a dense uniform scan plus a log tail,
/// polished by golden section around the best few scan points.
fn brute_force_max(f: &dyn Fn(f64) -> f64, w_max: f64, npts: usize) -> f64 {
    let mut pts: Vec<(f64, f64)> = (0..npts)
        .map(|k| {
            let w = w_max * k as f64 / (npts - 1) as f64;
            (w, f(w))
        })
        .collect();
    for k in 1..=200 {
        let w = w_max * 10f64.powf(6.0 * k as f64 / 200.0);
        pts.push((w, f(w)));
    }
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[b].1.partial_cmp(&pts[a].1).unwrap());
    let mut best = pts[idx[0]].1;
    for &i in idx.iter().take(5) {
        let lo = if i == 0 { pts[0].0 } else { pts[i - 1].0 };
        let hi = if i + 1 == pts.len() { pts[i].0 } else { pts[i + 1].0 };
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        best = best.max(golden_max(f, lo, hi).1);
    }
    best
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_reduced(rng: &mut ChaCha8Rng, r: usize, m: usize, p: usize) -> ReducedSystem {
    let mut n = || -> f64 { rng.random_range(-1.0..1.0) };
    let a_sub: Vec<f64> = (0..r - 1).map(|_| n()).collect();
    let a_sup: Vec<f64> = (0..r - 1).map(|_| n()).collect();
    let b = Mat::from_fn(r, m, |_, _| n());
    let c = Mat::from_fn(p, r, |_, _| n());
    let d = Mat::from_fn(p, m, |_, _| 0.1 * n());
    let a_diag: Vec<f64> = (0..r).map(|_| -rng.random_range(0.3..2.0)).collect();
    let e_diag: Vec<f64> = (0..r).map(|_| rng.random_range(0.5..1.5)).collect();
    ReducedSystem { a_diag, a_sub, a_sup, e_diag, b, c, d }
}

// ---------------------------------------------------------------------------
// Criteria

fn gradient_correctness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut attempts = 0;
    let mut failures = Vec::new();
    while done < 50 && attempts < 500 {
        attempts += 1;
        let n = rng.random_range(4..=12);
        let m = rng.random_range(1..=2);
        let r = rng.random_range(1..=4.min(n - 1));
        let sys = random_stable(rng.random(), n, m, m);
        let schur = SchurSystem::new(&sys).unwrap();
        let red = random_reduced(&mut rng, r, m, m);
        let opts = LinfOptions {
            cluster_rel: 1e-3,
            ..Default::default()
        };
        let obj = ReducedObjective::new(&schur, schur.poles(), &[], r, opts).unwrap();
        let x = pack(&red);
        let ev = match obj.eval(&x) {
            Ok(e) => e,
            Err(_) => continue,
        };
        // Smooth points only: one peak clear of the others and a simple
        // top singular value there.
        if ev.degenerate || ev.maximizers.len() != 1 {
            continue;
        }
        let h = schur.eval(c64::new(0.0, ev.omega)).unwrap() - red.eval(c64::new(0.0, ev.omega)).unwrap();
        if m == 2 {
            let sv = h.singular_values().unwrap();
            if sv[1] > (1.0 - 1e-3) * sv[0] {
                continue;
            }
        }
        let gnorm = ev.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut bad = false;
        for i in 0..x.len() {
            // Fourth-order central stencil; a larger step keeps rounding in
            // the O(1e1) objective values well below the tolerance.
            let h = 1e-4 * x[i].abs().max(1.0);
            let f = |t: f64| {
                let mut y = x.clone();
                y[i] += t;
                obj.value(&y).unwrap()
            };
            let fd = (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
            let e = (fd - ev.grad[i]).abs() / ev.grad[i].abs().max(1e-3 * gnorm);
            worst = worst.max(e);
            if e > 1e-6 {
                bad = true;
            }
        }
        if bad {
            failures.push(done);
        }
        done += 1;
    }
    let secs = t0.elapsed().as_secs_f64();
    let msg = format!("{done} smooth instances, worst relative error {worst:.2e}, {secs:.1} s");
    if done == 50 && failures.is_empty() && secs <= 30.0 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(format!("{msg}, failing instances {failures:?}"))
    }
}

fn hermite_interpolation() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst0, mut worst_d) = (0.0f64, 0.0f64);
    let mut fails = 0;
    for _ in 0..100 {
        let n = rng.random_range(10..=40);
        let m = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let mut spec = ModalSpec::new(n, m, p);
        spec.descriptor = rng.random::<bool>();
        spec.with_d = rng.random::<bool>();
        let sys = random_modal(&spec, rng.random());
        let w = rng.random_range(0.0..6.0);
        let (vt, wt) = expansion_directions(&sys, w).unwrap();
        let (basis, _) = orthonormalize_append(&SubspaceBasis::empty(n), &vt, &wt, 1e-10, 3).unwrap();
        let small = project(&sys, &basis).unwrap();
        let s = c64::new(0.0, w);
        for k in 0..4 {
            let hf = transfer_derivative(&sys, s, k).unwrap();
            let hs = transfer_derivative(&small, s, k).unwrap();
            let err = (&hf - &hs).norm_l2();
            let ok = if k == 0 {
                let e = err / (1.0 + hf.norm_l2());
                worst0 = worst0.max(e);
                e <= 1e-8
            } else {
                let e = err / hf.norm_l2().max(f64::MIN_POSITIVE);
                worst_d = worst_d.max(e);
                e <= 1e-6
            };
            if !ok {
                fails += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let msg = format!("100 trials, worst value error {worst0:.2e}, worst derivative error {worst_d:.2e}, {secs:.1} s");
    if fails == 0 && secs <= 30.0 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(format!("{msg}, {fails} failed checks"))
    }
}

/// Framework runs shared by several criteria.
struct Run {
    sys: DescriptorSystem,
    report: FrameworkReport,
    opts: FrameworkOptions,
}

fn synthetic_runs() -> Vec<Run> {
    (0..20u64)
        .map(|seed| {
            let sys = random_stable(seed, 40, 1, 1);
            let mut opts = FrameworkOptions::new(4);
            opts.tol = 1e-8;
            let report = reduce(&sys, &opts).unwrap();
            Run { sys, report, opts }
        })
        .collect()
}

fn objective_interpolation(runs: &[Run]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for run in runs {
        for row in &run.report.rows {
            if let Some(g) = row.interp_gap {
                worst = worst.max(g);
                rows += 1;
            }
        }
    }
    // Second route: refine by hand and evaluate the small-system error with
    // the cached-grid objective rather than the refinement's own oracle.
    let mut worst2: f64 = 0.0;
    for seed in 0..5u64 {
        let sys = random_stable(500 + seed, 30, 1, 2);
        let opts = FrameworkOptions::new(3);
        let init = initialize(&sys, 3, InitMode::Bt).unwrap();
        let full_poles = poles(&sys).unwrap();
        let res = full_error(&sys, &full_poles, &init.red, &init.hints, &opts.linf).unwrap();
        let mut basis = init.basis.clone();
        let (vt, wt) = expansion_directions(&sys, res.omega).unwrap();
        basis = orthonormalize_append(&basis, &vt, &wt, opts.drop_tol, opts.passes).unwrap().0;
        let mut hints = init.hints.clone();
        hints.push(res.omega);
        let rf = refine(&sys, &mut basis, &init.red, res.omega, res.value, &hints, &opts).unwrap();
        hints.extend(&rf.omegas);
        let obj = ReducedObjective::new(&rf.small.schur, rf.small.schur.poles(), &hints, 3, LinfOptions::default()).unwrap();
        let f_small = obj.value(&pack(&init.red)).unwrap();
        worst2 = worst2.max(rel(f_small, res.value));
    }
    let msg = format!("{rows} refined iterations, worst gap {worst:.2e}; direct check worst {worst2:.2e}");
    if rows > 0 && worst <= 1e-6 && worst2 <= 1e-6 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn linf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    let opts = LinfOptions::default();
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let mut spec = ModalSpec::new(n, rng.random_range(1..=2), rng.random_range(1..=2));
        spec.with_d = rng.random::<bool>();
        let sys = random_modal(&spec, rng.random());
        let pl = poles(&sys).unwrap();
        let schur = SchurSystem::new(&sys).unwrap();
        let ours = linf_norm(
            |w| linf_mor::linalg::sigma_max(&schur.eval(c64::new(0.0, w))?),
            &[],
            &pl,
            &opts,
        )
        .unwrap();
        let modal = Modal::new(&sys);
        let w_max = 10.0 * pl.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        let brute = brute_force_max(&|w| modal.sigma(w), w_max, 1_000_000);
        worst = worst.max(rel(ours.value, brute));
        if rel(ours.value, brute) > 1e-6 {
        }
    }
    let mut exact: f64 = 0.0;
    for &(k, a) in &[(1.0, 1.0), (3.0, 2.0), (0.5, 1e-2), (7.0, 40.0)] {
        let sys = one_pole(k, a);
        let res = linf_norm(
            |w| linf_mor::linalg::sigma_max(&sys.eval(c64::new(0.0, w))?),
            &[],
            &poles(&sys).unwrap(),
            &opts,
        )
        .unwrap();
        exact = exact.max(rel(res.value, k / a)).max(res.omega.abs());
    }
    for &(w0, z) in &[(1.0, 0.1), (3.0, 0.05), (0.5, 0.3)] {
        let sys = oscillator(w0, z);
        let res = linf_norm(
            |w| linf_mor::linalg::sigma_max(&sys.eval(c64::new(0.0, w))?),
            &[],
            &poles(&sys).unwrap(),
            &opts,
        )
        .unwrap();
        let peak = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        exact = exact.max(rel(res.value, peak));
    }
    let msg = format!("100 systems, worst relative gap to brute force {worst:.2e}; closed-form fixtures {exact:.2e}");
    if worst <= 1e-6 && exact <= 1e-8 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn bench_dir(name: &str) -> Option<PathBuf> {
    let root = std::env::var_os("LINF_MOR_BENCH_DIR")?;
    let dir = Path::new(&root).join(name);
    ["A.mtx", "B.mtx", "C.mtx"].iter().all(|f| dir.join(f).exists()).then_some(dir)
}

fn load_bench(dir: &Path) -> DescriptorSystem {
    let a = read_mtx(&dir.join("A.mtx")).unwrap();
    let b = read_mtx(&dir.join("B.mtx")).unwrap();
    let c = read_mtx(&dir.join("C.mtx")).unwrap();
    let n = a.nrows();
    let e = if dir.join("E.mtx").exists() {
        read_mtx(&dir.join("E.mtx")).unwrap()
    } else {
        RMat::identity(n, n)
    };
    let d = if dir.join("D.mtx").exists() {
        read_mtx(&dir.join("D.mtx")).unwrap()
    } else {
        RMat::zeros(c.nrows(), b.ncols())
    };
    DescriptorSystem::new(e, a, b, c, d).unwrap()
}

fn iss_reproduction() -> Outcome {
    let Some(dir) = bench_dir("iss") else {
        return Outcome::Skip("ISS files not found under $LINF_MOR_BENCH_DIR/iss".into());
    };
    let t0 = Instant::now();
    let sys = load_bench(&dir);
    let mut opts = FrameworkOptions::new(12);
    opts.tol = 1e-8;
    opts.init = InitMode::Bt;
    let rep = match reduce(&sys, &opts) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("reduce failed: {e}")),
    };
    let secs = t0.elapsed().as_secs_f64();
    let reference = 0.0022516;
    let hankel13 = rep.hankel.as_ref().and_then(|h| h.get(12).copied()).unwrap_or(f64::NAN);
    let outer = rep.rows.len() - 1;
    let monotone = rep.rows.windows(2).all(|w| w[1].error <= w[0].error * (1.0 + 1e-10));
    let msg = format!(
        "error {:.7e} (reference {reference}), {outer} outer iterations, monotone {monotone}, sigma_13 {hankel13:.7e}, {secs:.0} s",
        rep.error
    );
    let ok = rel(rep.error, reference) <= 0.05 && outer <= 10 && monotone && hankel13 <= rep.error && secs <= 300.0;
    if ok {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn cd_player_reproduction() -> Outcome {
    let Some(dir) = bench_dir("cdplayer") else {
        return Outcome::Skip("CD player files not found under $LINF_MOR_BENCH_DIR/cdplayer".into());
    };
    let full = load_bench(&dir);
    // Second input, first output.
    let sys = DescriptorSystem::new(
        full.e.clone(),
        full.a.clone(),
        Mat::from_fn(full.n(), 1, |i, _| full.b[(i, 1)]),
        Mat::from_fn(1, full.n(), |_, j| full.c[(0, j)]),
        Mat::from_fn(1, 1, |_, _| full.d[(0, 1)]),
    )
    .unwrap();
    let pl = poles(&sys).unwrap();
    let hnorm = linf_norm(
        |w| linf_mor::linalg::sigma_max(&sys.eval(c64::new(0.0, w))?),
        &[],
        &pl,
        &LinfOptions::default(),
    )
    .unwrap()
    .value;
    // (r, upper = BT relative error, lower = Hankel bound, target)
    let table = [(2, 3.69e-1, 1.95e-1, None), (4, 2.25e-2, 1.13e-2, None), (8, 6.41e-3, 3.20e-3, Some(4.18e-3))];
    let mut parts = Vec::new();
    let mut ok = true;
    for (r, upper, lower, target) in table {
        let mut opts = FrameworkOptions::new(r);
        opts.tol = 1e-8;
        let rep = match reduce(&sys, &opts) {
            Ok(rep) => rep,
            Err(e) => return Outcome::Fail(format!("r = {r}: {e}")),
        };
        let relerr = rep.error / hnorm;
        let mut good = relerr <= upper && relerr >= lower;
        if let Some(t) = target {
            good &= rel(relerr, t) <= 0.10;
        }
        ok &= good;
        parts.push(format!("r={r}: {relerr:.3e}"));
    }
    let msg = parts.join(", ");
    if ok {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn synthetic_properties(runs: &[Run]) -> Outcome {
    let mut problems = Vec::new();
    let mut worst_probe: f64 = 0.0;
    for (seed, run) in runs.iter().enumerate() {
        let rep = &run.report;
        let bt = rep.rows[0].error;
        let hsv = hankel_singular_values(&run.sys).unwrap();
        let lower = hsv[run.opts.r];
        if rep.error > bt {
            problems.push(format!("seed {seed}: {:.6e} above BT {bt:.6e}", rep.error));
        }
        if rep.error < lower {
            problems.push(format!("seed {seed}: {:.6e} below sigma_r+1 {lower:.6e}", rep.error));
        }
        let schur = SchurSystem::new(&run.sys).unwrap();
        let obj = ReducedObjective::new(&schur, schur.poles(), &[rep.omega], run.opts.r, run.opts.linf.clone()).unwrap();
        let x = pack(&rep.reduced);
        let f0 = obj.value(&x).unwrap();
        for i in 0..x.len() {
            for d in [-0.1, -0.05, 0.05, 0.1] {
                let mut y = x.clone();
                y[i] += d;
                if let Ok(f) = obj.value(&y) {
                    let dec = (f0 - f) / f0;
                    worst_probe = worst_probe.max(dec);
                    if dec > run.opts.tol {
                        problems.push(format!("seed {seed}: parameter {i} by {d} decreases F by {dec:.2e}"));
                    }
                }
            }
        }
    }
    let msg = format!("20 seeds, largest probe decrease {worst_probe:.2e}");
    if problems.is_empty() {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(format!("{msg}; {}", problems.join("; ")))
    }
}

fn stability_constrained() -> Outcome {
    let beta = -1e-3;
    let mut parts = Vec::new();
    let mut ok = true;
    let mut active = 0;
    for seed in 0..5u64 {
        let mut spec = ModalSpec::new(20, 1, 1);
        spec.damping = (1e-4, 0.5);
        let mut sys = random_modal(&spec, 900 + seed);
        // One lightly damped dominant mode close to the axis.
        let n = sys.n();
        let extra = oscillator(1.0 + seed as f64 * 0.3, 5e-5);
        let a = Mat::from_fn(n + 2, n + 2, |i, j| match (i < n, j < n) {
            (true, true) => sys.a[(i, j)],
            (false, false) => extra.a[(i - n, j - n)],
            _ => 0.0,
        });
        let b = Mat::from_fn(n + 2, 1, |i, _| if i < n { sys.b[(i, 0)] } else { extra.b[(i - n, 0)] * 1e-2 });
        let c = Mat::from_fn(1, n + 2, |_, j| if j < n { sys.c[(0, j)] } else { extra.c[(0, j - n)] });
        sys = DescriptorSystem::standard(a, b, c, sys.d.clone()).unwrap();
        let mut opts = FrameworkOptions::new(4);
        opts.beta = Some(beta);
        opts.max_outer = 10;
        let rep = match reduce(&sys, &opts) {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                parts.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let alpha = spectral_abscissa(&rep.reduced).unwrap().alpha;
        let unconstrained = {
            let mut o = opts.clone();
            o.beta = None;
            reduce(&sys, &o).ok().and_then(|r| spectral_abscissa(&r.reduced).ok()).map(|a| a.alpha)
        };
        if unconstrained.is_some_and(|a| a > beta) {
            active += 1;
        }
        let good = alpha <= beta && rep.inner_feasible == Some(true);
        ok &= good;
        parts.push(format!("alpha {alpha:.3e}"));
    }
    let msg = format!("beta {beta}, {} (constraint active without bound in {active}/5)", parts.join(", "));
    if ok {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn convergence_decay(runs: &[Run]) -> Outcome {
    let mut good = 0;
    let mut bad = Vec::new();
    for (seed, run) in runs.iter().enumerate() {
        let errs: Vec<f64> = run.report.rows.iter().map(|r| r.error).collect();
        let gaps: Vec<f64> = errs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let tail = &gaps[gaps.len().saturating_sub(3)..];
        if tail.len() >= 2 && tail.windows(2).all(|w| w[1] <= w[0] / 5.0) {
            good += 1;
        } else {
            bad.push(seed);
        }
    }
    // The decay rate argument assumes a smooth limit point; count how many
    // returned models actually have a single active peak.
    let smooth = runs
        .iter()
        .filter(|run| {
            let schur = SchurSystem::new(&run.sys).unwrap();
            let obj = ReducedObjective::new(&schur, schur.poles(), &[run.report.omega], run.opts.r, run.opts.linf.clone()).unwrap();
            obj.eval(&pack(&run.report.reduced)).map(|e| !e.degenerate).unwrap_or(false)
        })
        .count();
    let msg = format!(
        "{good}/20 seeds decay by 5x over the last three gaps (failing seeds {bad:?}); {smooth}/20 returned models have a unique maximizer"
    );
    if good * 5 >= 20 * 4 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn main() -> ExitCode {
    let mut failed = false;
    let mut report = |id: usize, name: &str, o: Outcome| {
        let (tag, msg) = match o {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Fail(m) => {
                failed = true;
                ("FAIL", m)
            }
            Outcome::Skip(m) => ("SKIP", m),
        };
        println!("criterion {id} [{tag}] {name}: {msg}");
    };
    report(1, "gradient correctness", gradient_correctness());
    report(2, "Hermite interpolation", hermite_interpolation());
    let runs = synthetic_runs();
    report(3, "objective interpolation after refinement", objective_interpolation(&runs));
    report(4, "L-infinity oracle", linf_oracle());
    report(5, "ISS reproduction", iss_reproduction());
    report(6, "CD player reproduction", cd_player_reproduction());
    report(7, "synthetic optimality properties", synthetic_properties(&runs));
    report(8, "stability-constrained mode", stability_constrained());
    report(9, "convergence decay", convergence_decay(&runs));
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
