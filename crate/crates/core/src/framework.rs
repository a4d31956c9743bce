//! Outer subspace iteration: minimize the error against a small projection,
//! locate the worst frequency of the full error, expand the projection
//! there, and refine until the small and full errors agree at the incumbent.

use std::time::Instant;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::init::{initialize, InitMode};
use crate::linf::{LinfOptions, LinfResult};
use crate::objective::{barrier_objective, full_error, spectral_abscissa, ReducedObjective};
use crate::optimize::{bfgs_bundle, minimize_barrier, BfgsOptions, Termination};
use crate::projection::{expansion_directions, orthonormalize_append, project, SubspaceBasis};
use crate::system::{pack, DescriptorSystem, ReducedSystem, SchurSystem};

/// Lower limit of the frequency scale in the refinement stop test.
pub const OMEGA_FLOOR: f64 = 1e-8;

/// Cap on BFGS restarts after a stop at a kink of the inner objective.
const BUNDLE_RESTARTS: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameworkOptions {
    pub r: usize,
    pub tol: f64,
    pub max_outer: usize,
    pub max_refine: usize,
    pub init: InitMode,
    /// Upper bound on the spectral abscissa of the reduced model.
    pub beta: Option<f64>,
    /// Inner BFGS stops when a step gains less than `eps * tol` relative.
    pub eps: f64,
    /// Barrier weights, as multiples of the objective at the warm start.
    pub barrier_mus: Vec<f64>,
    pub drop_tol: f64,
    pub passes: usize,
    pub linf: LinfOptions,
    pub bfgs: BfgsOptions,
}

impl FrameworkOptions {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            tol: 1e-6,
            max_outer: 30,
            max_refine: 10,
            init: InitMode::Bt,
            beta: None,
            eps: 0.1,
            barrier_mus: vec![1e-2, 1e-3, 1e-4],
            drop_tol: 1e-10,
            passes: 3,
            linf: LinfOptions::default(),
            bfgs: BfgsOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(MorError::DimensionMismatch("r must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(MorError::DimensionMismatch(format!("tol must be positive, got {}", self.tol)));
        }
        if let Some(b) = self.beta {
            if !(b < 0.0) {
                return Err(MorError::DimensionMismatch(format!("beta must be negative, got {b}")));
            }
        }
        Ok(())
    }
}

/// One outer iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRow {
    pub iter: usize,
    /// Full L∞ error of the reduced model after this iteration.
    pub error: f64,
    pub omega: f64,
    /// Order of the small projected system the model was optimized against.
    pub small_order: usize,
    pub bfgs_iters: usize,
    pub fevals: usize,
    pub bfgs_termination: Option<Termination>,
    /// Refinement rounds after the expansion at `omega`; `None` on the last row.
    pub refine_count: Option<usize>,
    pub refine_capped: bool,
    /// `|F_small - error| / error` after refinement.
    pub interp_gap: Option<f64>,
    /// Spectral abscissa of the reduced model.
    pub alpha: Option<f64>,
    pub columns_added: usize,
    /// An expansion frequency was moved off a singular point.
    pub perturbed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameworkTermination {
    Converged,
    Stagnated,
    MaxOuter,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub init: f64,
    pub minimize: f64,
    pub full_error: f64,
    pub expand: f64,
    pub refine: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameworkReport {
    pub rows: Vec<IterationRow>,
    pub error: f64,
    pub omega: f64,
    /// Row whose model is returned.
    pub best_iter: usize,
    pub termination: FrameworkTermination,
    pub init_mode: InitMode,
    pub hankel: Option<Vec<f64>>,
    pub notes: Vec<String>,
    pub timings: Timings,
    #[serde(skip)]
    pub reduced: ReducedSystem,
    /// Every inner iterate stayed strictly inside the constraint (constrained
    /// mode only).
    pub inner_feasible: Option<bool>,
}

/// Small projected system together with its fast evaluator.
pub struct SmallSystem {
    pub sys: DescriptorSystem,
    pub schur: SchurSystem,
}

impl SmallSystem {
    fn new(full: &DescriptorSystem, basis: &SubspaceBasis) -> Result<Self> {
        let sys = project(full, basis)?;
        let schur = SchurSystem::new(&sys)?;
        Ok(Self { sys, schur })
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct ExpandInfo {
    added: usize,
    perturbed: bool,
}

fn expand(full: &DescriptorSystem, basis: &mut SubspaceBasis, omega: f64, opts: &FrameworkOptions) -> Result<ExpandInfo> {
    let (vt, wt, perturbed) = match expansion_directions(full, omega) {
        Ok((vt, wt)) => (vt, wt, false),
        Err(MorError::SingularPencil { .. }) => {
            let w = if omega > 0.0 { omega * (1.0 + 1e-6) } else { 1e-6 };
            log::warn!("singular pencil at ω = {omega}; expanding at {w} instead");
            let (vt, wt) = expansion_directions(full, w)?;
            (vt, wt, true)
        }
        Err(e) => return Err(e),
    };
    let (nb, added) = orthonormalize_append(basis, &vt, &wt, opts.drop_tol, opts.passes)?;
    *basis = nb;
    Ok(ExpandInfo { added, perturbed })
}

/// Outcome of refining the projection around one reduced model.
pub struct Refinement {
    pub small: SmallSystem,
    pub count: usize,
    pub capped: bool,
    /// Error of the model against the refined small system.
    pub small_error: LinfResult,
    pub omegas: Vec<f64>,
    pub perturbed: bool,
    pub added: usize,
}

/// Expands `basis` at maximizers of the error against the small system
/// until that maximizer agrees with `omega_r` or the two L∞ errors agree.
#[allow(clippy::too_many_arguments)]
pub fn refine(
    full: &DescriptorSystem,
    basis: &mut SubspaceBasis,
    red: &ReducedSystem,
    omega_r: f64,
    err_r: f64,
    hints: &[f64],
    opts: &FrameworkOptions,
) -> Result<Refinement> {
    let mut small = SmallSystem::new(full, basis)?;
    let mut count = 0;
    let mut omegas = Vec::new();
    let mut perturbed = false;
    let mut added = 0;
    loop {
        let mut h = hints.to_vec();
        h.push(omega_r);
        h.extend(&omegas);
        let res = full_error(&small.schur, small.schur.poles(), red, &h, &opts.linf)?;
        let freq_ok = (res.omega - omega_r).abs() <= opts.tol * omega_r.abs().max(OMEGA_FLOOR);
        let value_ok = res.value <= err_r * (1.0 + opts.tol);
        log::debug!("refine round {count}: small-error max {:.12e} at {:.9e} (target {err_r:.12e} at {omega_r:.9e})", res.value, res.omega);
        if freq_ok || value_ok || count >= opts.max_refine {
            let capped = !(freq_ok || value_ok);
            if capped {
                log::warn!("refinement stopped after {count} rounds");
            }
            return Ok(Refinement {
                small,
                count,
                capped,
                small_error: res,
                omegas,
                perturbed,
                added,
            });
        }
        let info = expand(full, basis, res.omega, opts)?;
        perturbed |= info.perturbed;
        added += info.added;
        omegas.push(res.omega);
        count += 1;
        if info.added > 0 {
            small = SmallSystem::new(full, basis)?;
        } else {
            // Nothing new to interpolate; further rounds would repeat this one.
            return Ok(Refinement {
                small,
                count,
                capped: false,
                small_error: res,
                omegas,
                perturbed,
                added,
            });
        }
    }
}

/// Shifts all poles left by the same amount so that `α < β`.
fn restore_feasibility(red: &mut ReducedSystem, beta: f64) -> Result<Option<f64>> {
    let alpha = spectral_abscissa(red)?.alpha;
    if alpha < beta {
        return Ok(None);
    }
    let shift = alpha - beta + 0.1 * beta.abs();
    for (a, e) in red.a_diag.iter_mut().zip(&red.e_diag) {
        *a -= shift * e;
    }
    Ok(Some(shift))
}

struct InnerOutcome {
    red: ReducedSystem,
    iters: usize,
    fevals: usize,
    termination: Termination,
    feasible: bool,
}

fn minimize_inner(
    small: &SmallSystem,
    red: &ReducedSystem,
    hints: &[f64],
    opts: &FrameworkOptions,
) -> Result<InnerOutcome> {
    let mut obj = ReducedObjective::new(&small.schur, small.schur.poles(), hints, opts.r, opts.linf.clone())?;
    obj.set_extra_hints(hints.to_vec());
    let layout = obj.layout();
    let bopts = BfgsOptions {
        rel_decrease_tol: opts.eps * opts.tol,
        ..opts.bfgs.clone()
    };
    let x0 = pack(red);
    let f = |x: &[f64]| obj.eval(x).map(|e| (e.value, e.grad));
    let active = |x: &[f64]| obj.active_gradients(x);
    match opts.beta {
        None => {
            let res = bfgs_bundle(f, active, &x0, &bopts, BUNDLE_RESTARTS)?;
            Ok(InnerOutcome {
                red: obj.unpack(&res.x)?,
                iters: res.iters,
                fevals: res.fevals,
                termination: res.termination,
                feasible: true,
            })
        }
        Some(beta) => {
            let f0 = obj.value(&x0)?;
            let mus: Vec<f64> = opts.barrier_mus.iter().map(|c| c * f0).collect();
            let barrier = |x: &[f64], fx: f64, g: &[f64], mu: f64| barrier_objective(x, fx, g, layout, beta, mu);
            let res = minimize_barrier(f, active, barrier, &x0, &mus, &bopts, BUNDLE_RESTARTS)?;
            let mut feasible = true;
            for st in &res.stages {
                for it in &st.iterates {
                    let r = obj.unpack(it)?;
                    if spectral_abscissa(&r)?.alpha >= beta {
                        feasible = false;
                    }
                }
            }
            let termination = res.stages.last().map(|s| s.termination).unwrap_or(Termination::MaxIters);
            Ok(InnerOutcome {
                red: obj.unpack(&res.x)?,
                iters: res.iters,
                fevals: res.fevals,
                termination,
                feasible,
            })
        }
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Computes a reduced model of order `opts.r` with locally minimal L∞ error.
pub fn reduce(full: &DescriptorSystem, opts: &FrameworkOptions) -> Result<FrameworkReport> {
    opts.validate()?;
    let t_total = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let full_schur = SchurSystem::new(full)?;
    let full_poles: Vec<c64> = full_schur.poles().to_vec();
    let init = initialize(full, opts.r, opts.init)?;
    let mut notes = init.notes.clone();
    let mut red = init.red.clone();
    if let Some(beta) = opts.beta {
        if let Some(shift) = restore_feasibility(&mut red, beta)? {
            notes.push(format!("initial model shifted left by {shift:e} to satisfy the abscissa bound"));
        }
    }
    let mut basis = init.basis.clone();
    let mut small = SmallSystem::new(full, &basis)?;
    let mut hints = init.hints.clone();
    timings.init = secs(t);

    let mut rows: Vec<IterationRow> = Vec::new();
    let mut best: Option<(f64, f64, usize, ReducedSystem)> = None;
    let mut inner_feasible = opts.beta.map(|_| true);
    let mut zero_streak = 0;
    let mut termination = FrameworkTermination::MaxOuter;

    for it in 0..opts.max_outer.max(1) {
        let small_order = small.sys.n();
        let (mut bfgs_iters, mut fevals, mut bfgs_term) = (0, 0, None);
        if it >= 1 {
            let t = Instant::now();
            let out = minimize_inner(&small, &red, &hints, opts)?;
            timings.minimize += secs(t);
            bfgs_iters = out.iters;
            fevals = out.fevals;
            bfgs_term = Some(out.termination);
            if let Some(f) = inner_feasible.as_mut() {
                *f &= out.feasible;
            }
            red = out.red;
        }

        let t = Instant::now();
        let res = full_error(&full_schur, &full_poles, &red, &hints, &opts.linf)?;
        timings.full_error += secs(t);
        let (err, omega) = (res.value, res.omega);
        let alpha = spectral_abscissa(&red).ok().map(|a| a.alpha);
        let admissible = match (opts.beta, alpha) {
            (Some(b), Some(a)) => a < b,
            (Some(_), None) => false,
            (None, _) => true,
        };
        if admissible && best.as_ref().is_none_or(|b| err < b.0) {
            best = Some((err, omega, it, red.clone()));
        }
        log::info!("iteration {it}: error {err:.12e} at ω = {omega:.6e}, small order {small_order}");
        rows.push(IterationRow {
            iter: it,
            error: err,
            omega,
            small_order,
            bfgs_iters,
            fevals,
            bfgs_termination: bfgs_term,
            refine_count: None,
            refine_capped: false,
            interp_gap: None,
            alpha,
            columns_added: 0,
            perturbed: false,
        });

        if it >= 1 {
            let prev = rows[it - 1].error;
            if (err - prev).abs() <= opts.tol * err {
                termination = FrameworkTermination::Converged;
                break;
            }
        }
        if it + 1 == opts.max_outer.max(1) {
            break;
        }

        let t = Instant::now();
        let info = expand(full, &mut basis, omega, opts)?;
        timings.expand += secs(t);
        hints.push(omega);

        let t = Instant::now();
        let rf = refine(full, &mut basis, &red, omega, err, &hints, opts)?;
        timings.refine += secs(t);
        hints.extend(&rf.omegas);
        let added = info.added + rf.added;
        let row = rows.last_mut().expect("row pushed above");
        row.refine_count = Some(rf.count);
        row.refine_capped = rf.capped;
        row.interp_gap = Some((rf.small_error.value - err).abs() / err.max(f64::MIN_POSITIVE));
        row.columns_added = added;
        row.perturbed = info.perturbed || rf.perturbed;
        if row.perturbed {
            notes.push(format!("iteration {it}: expansion frequency perturbed off a singular point"));
        }
        small = rf.small;

        zero_streak = if added == 0 { zero_streak + 1 } else { 0 };
        if zero_streak >= 2 {
            termination = FrameworkTermination::Stagnated;
            break;
        }
    }

    let (error, omega, best_iter, reduced) = match best {
        Some(b) => b,
        None => {
            return Err(MorError::Infeasible {
                alpha: rows.last().and_then(|r| r.alpha).unwrap_or(f64::NAN),
                beta: opts.beta.unwrap_or(f64::NAN),
            })
        }
    };
    if termination == FrameworkTermination::MaxOuter {
        log::warn!("{}", MorError::MaxOuterExceeded(opts.max_outer));
        notes.push(format!("stopped after {} outer iterations", opts.max_outer));
    }
    timings.total = secs(t_total);
    Ok(FrameworkReport {
        rows,
        error,
        omega,
        best_iter,
        termination,
        init_mode: init.mode,
        hankel: init.hankel,
        notes,
        timings,
        reduced,
        inner_feasible,
    })
}
