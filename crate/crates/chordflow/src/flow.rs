//! The normalized Gauss curvature flow for the support function:
//! dh/dt = -theta(t) f h K / (V~_{q-1} phi(h)) + h,
//! with adaptive explicit midpoint time stepping, a convexity guard, and
//! monitors for every conserved / monotone / bounded quantity.

use std::sync::Arc;

use crate::body::{ConvexBody, DEFAULT_EPS_CONVEX};
use crate::chord::{boundary_quermass, chord_integral_fixed, quermass_from_profile};
use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::orlicz::OrliczPhi;
use crate::util::{kahan_sum, par_map};

/// Flow problem and solver settings. `f` is sampled on the body grid.
pub struct FlowConfig {
    pub q: f64,
    pub phi: OrliczPhi,
    pub f: Vec<f64>,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// dt multiplier after an accepted step
    pub growth: f64,
    /// stop when sup|rhs| <= tol_rhs * max h ...
    pub tol_rhs: f64,
    /// ... and the Monge-Ampere residual sup is <= tol_res
    pub tol_res: f64,
    /// local time-error target, relative to max(1, max h)
    pub tol_step: f64,
    pub max_steps: usize,
    /// diagnostics row every this many accepted steps
    pub stride: usize,
    pub project_on_reject: bool,
    pub eps_convex: f64,
    pub h_min_guard: f64,
    pub h_max_guard: f64,
    /// resolution of the direction grid used by the I_q monitor
    pub monitor_dirs: usize,
    /// Gauss-Legendre points per direction in the I_q monitor
    pub monitor_gl: usize,
}

impl FlowConfig {
    pub fn new(q: f64, phi: OrliczPhi, f: Vec<f64>) -> Result<Self> {
        if !(q > 1.0) {
            // the boundary quermassintegral V~_{q-1} needs q - 1 > 0
            return Err(Error::InvalidExponent { q });
        }
        if f.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::NotPositive { min: 0.0 });
        }
        // Keep dt strictly below the explicit stability limit ~ 8/N^2 of the
        // highest grid mode (N/2 on the circle). If dt is allowed to ride the
        // limit itself, grid-scale roundoff noise saturates at an amplitude
        // set by tol_step and sup|rhs| floors out around tol_step/dt instead
        // of decaying to rounding level, which blocks tight stopping
        // tolerances near the stationary body.
        let n = f.len() as f64;
        let dt_max = (0.8 * 8.0 / (n * n)).min(1e-1);
        Ok(FlowConfig {
            q,
            phi,
            f,
            dt0: 1e-3f64.min(dt_max),
            dt_min: 1e-7,
            dt_max,
            growth: 1.2,
            tol_rhs: 1e-6,
            tol_res: 1e-4,
            tol_step: 1e-7,
            max_steps: 200_000,
            stride: 50,
            project_on_reject: false,
            eps_convex: DEFAULT_EPS_CONVEX,
            h_min_guard: 1e-6,
            h_max_guard: 1e6,
            monitor_dirs: 128,
            monitor_gl: 12,
        })
    }

    /// Non-fatal notes about the configuration, e.g. the curvature-estimate
    /// gap for q <= 2.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.q <= 2.0 {
            w.push(format!(
                "q = {} <= 2: the a priori curvature estimate behind long-time \
                 existence is only proved for q > 2; the flow may still converge \
                 but is outside the guaranteed regime",
                self.q
            ));
        }
        w
    }
}

/// One right-hand-side evaluation, with the reusable per-node pieces.
pub struct RhsEval {
    pub rhs: Vec<f64>,
    /// V~_{q-1} about each boundary point X(x_i)
    pub v_boundary: Vec<f64>,
    pub theta: f64,
}

impl RhsEval {
    pub fn rhs_sup(&self) -> f64 {
        self.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Normalization theta(t) = (integral of V~_{q-1} rho^n over directions) /
/// (integral of h f / phi(h) over the sphere).
///
/// The numerator is evaluated in its change-of-variables form
/// rho^n K dxi = h dx, i.e. as the x-space integral of V~_{q-1}(X(x)) h det b,
/// reusing the same boundary quermass values as the rhs. This makes the
/// discrete flow cancel the chord-measure pairing exactly, so the conserved
/// quantity drifts only through the time discretization.
pub fn theta(body: &ConvexBody, cfg: &FlowConfig, dirs: &DirectionGrid) -> Result<f64> {
    let v = boundary_quermass(body, dirs, cfg.q - 1.0);
    theta_with_quermass(body, cfg, &v)
}

fn theta_with_quermass(body: &ConvexBody, cfg: &FlowConfig, v: &[f64]) -> Result<f64> {
    let grid = body.grid();
    let det = body.det_b();
    let num_field: Vec<f64> = (0..v.len()).map(|i| v[i] * body.h()[i] * det[i]).collect();
    let den_field: Vec<f64> = body
        .h()
        .iter()
        .zip(&cfg.f)
        .map(|(&h, &fv)| h * fv / cfg.phi.eval(h))
        .collect();
    let num = grid.integrate(&num_field)?;
    let den = grid.integrate(&den_field)?;
    let th = num / den;
    if !th.is_finite() || th <= 0.0 {
        return Err(Error::NumericalFailure {
            context: format!("theta = {th} (num {num}, den {den})"),
        });
    }
    Ok(th)
}

/// Theta with the numerator in its original xi-space form,
/// integral of V~_{q-1}(rho(xi) xi) rho(xi)^n d xi. Kept as a cross-check
/// against the change-of-variables form used by [`theta`].
pub fn theta_xi(body: &ConvexBody, cfg: &FlowConfig, dirs: &DirectionGrid) -> Result<f64> {
    let n = body.grid().dim();
    let rho = body.radial_about_all([0.0; 3], dirs);
    let per_dir = par_map(dirs.len(), |k| {
        let xi = dirs.nodes()[k];
        let r = rho[k];
        let z = [r * xi[0], r * xi[1], r * xi[2]];
        let profile = body.radial_about_all(z, dirs);
        let v = quermass_from_profile(&profile, dirs.weights(), cfg.q - 1.0, n);
        dirs.weights()[k] * v * r.powi(n as i32)
    });
    let num = kahan_sum(per_dir);
    let den_field: Vec<f64> = body
        .h()
        .iter()
        .zip(&cfg.f)
        .map(|(&h, &fv)| h * fv / cfg.phi.eval(h))
        .collect();
    let den = body.grid().integrate(&den_field)?;
    Ok(num / den)
}

/// Full right-hand side of the flow at `body`:
/// rhs_i = -theta f_i h_i K_i / (V~_{q-1}(X_i) phi(h_i)) + h_i.
pub fn rhs(body: &ConvexBody, cfg: &FlowConfig, dirs: &DirectionGrid) -> Result<RhsEval> {
    if cfg.f.len() != body.h().len() {
        return Err(Error::ShapeMismatch {
            expected: body.h().len(),
            got: cfg.f.len(),
        });
    }
    body.assert_strictly_convex(cfg.eps_convex)?;
    let v = boundary_quermass(body, dirs, cfg.q - 1.0);
    let th = theta_with_quermass(body, cfg, &v)?;
    let det = body.det_b();
    let rhs = par_map(body.h().len(), |i| {
        let h = body.h()[i];
        // h K = h / det b
        -th * cfg.f[i] * h / (det[i] * v[i] * cfg.phi.eval(h)) + h
    });
    if rhs.iter().any(|r| !r.is_finite()) {
        return Err(Error::NumericalFailure {
            context: "nonfinite rhs".into(),
        });
    }
    Ok(RhsEval {
        rhs,
        v_boundary: v,
        theta: th,
    })
}

/// Orlicz energy Phi = integral of f psi(h) over the sphere (the quantity
/// that is non-increasing along the flow).
pub fn phi_functional(body: &ConvexBody, f: &[f64], phi: &OrliczPhi) -> Result<f64> {
    let field = body
        .h()
        .iter()
        .zip(f)
        .map(|(&h, &fv)| Ok(fv * phi.psi(h)?))
        .collect::<Result<Vec<f64>>>()?;
    body.grid().integrate(&field)
}

/// Coarse fixed-rule chord integral used to monitor I_q along the flow.
pub fn chord_integral_monitor(
    body: &ConvexBody,
    q: f64,
    monitor: &DirectionGrid,
    gl_points: usize,
) -> Result<f64> {
    chord_integral_fixed(body, monitor, q, gl_points)
}

/// One diagnostics record, written on the configured stride.
#[derive(Clone, Debug)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub theta: f64,
    pub i_q: f64,
    pub phi_val: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub grad_h_max: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub rhs_sup: f64,
    pub ma_residual_sup: f64,
}

impl DiagnosticsRow {
    pub const CSV_HEADER: &'static str =
        "step,t,dt,theta,I_q,Phi,h_min,h_max,grad_h_max,kappa_min,kappa_max,rhs_sup,ma_residual_sup";

    pub fn to_csv(&self) -> String {
        use crate::util::fmt17 as f;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            f(self.t),
            f(self.dt),
            f(self.theta),
            f(self.i_q),
            f(self.phi_val),
            f(self.h_min),
            f(self.h_max),
            f(self.grad_h_max),
            f(self.kappa_min),
            f(self.kappa_max),
            f(self.rhs_sup),
            f(self.ma_residual_sup)
        )
    }

    pub fn all_finite(&self) -> bool {
        [
            self.t,
            self.dt,
            self.theta,
            self.i_q,
            self.phi_val,
            self.h_min,
            self.h_max,
            self.grad_h_max,
            self.kappa_min,
            self.kappa_max,
            self.rhs_sup,
            self.ma_residual_sup,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Flow state between steps. `eval` is the rhs at `body`, reused as the
/// first Runge-Kutta stage of the next step.
pub struct FlowState {
    pub t: f64,
    pub body: ConvexBody,
    pub dt: f64,
    pub step_count: usize,
    pub eval: RhsEval,
}

impl FlowState {
    pub fn new(body: ConvexBody, cfg: &FlowConfig, dirs: &DirectionGrid) -> Result<Self> {
        let eval = rhs(&body, cfg, dirs)?;
        Ok(FlowState {
            t: 0.0,
            body,
            dt: cfg.dt0,
            step_count: 0,
            eval,
        })
    }

    pub fn theta(&self) -> f64 {
        self.eval.theta
    }

    /// Monge-Ampere residual sup with c = 1/theta:
    /// r_i = phi(h) V~_{q-1} det b / theta - f.
    pub fn ma_residual_sup(&self, cfg: &FlowConfig) -> f64 {
        let det = self.body.det_b();
        let mut sup = 0.0f64;
        for i in 0..self.body.h().len() {
            let r = cfg.phi.eval(self.body.h()[i]) * self.eval.v_boundary[i] * det[i]
                / self.eval.theta
                - cfg.f[i];
            sup = sup.max(r.abs());
        }
        sup
    }

    pub fn diagnostics(
        &self,
        cfg: &FlowConfig,
        monitor: &DirectionGrid,
    ) -> Result<DiagnosticsRow> {
        let body = &self.body;
        let h_min = body.h().iter().cloned().fold(f64::INFINITY, f64::min);
        let h_max = body.h().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let grad_h_max = body
            .gradient()
            .iter()
            .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
            .fold(0.0f64, f64::max);
        let (mut kappa_min, mut kappa_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &d in body.det_b() {
            let k = 1.0 / d;
            kappa_min = kappa_min.min(k);
            kappa_max = kappa_max.max(k);
        }
        let row = DiagnosticsRow {
            step: self.step_count,
            t: self.t,
            dt: self.dt,
            theta: self.eval.theta,
            i_q: chord_integral_monitor(body, cfg.q, monitor, cfg.monitor_gl)?,
            phi_val: phi_functional(body, &cfg.f, &cfg.phi)?,
            h_min,
            h_max,
            grad_h_max,
            kappa_min,
            kappa_max,
            rhs_sup: self.eval.rhs_sup(),
            ma_residual_sup: self.ma_residual_sup(cfg),
        };
        if !row.all_finite() {
            return Err(Error::NumericalFailure {
                context: format!("nonfinite diagnostics at step {}", self.step_count),
            });
        }
        Ok(row)
    }
}

fn guard_ok(h: &[f64], cfg: &FlowConfig) -> bool {
    h.iter().all(|&v| v > cfg.h_min_guard && v < cfg.h_max_guard)
}

/// One adaptive explicit-midpoint step. Theta is recomputed at both stages.
/// A trial step is rejected (and dt halved) when the embedded Euler error
/// estimate exceeds the tolerance, when strict convexity fails, or when h
/// leaves the guard window.
pub fn step(state: FlowState, cfg: &FlowConfig, dirs: &DirectionGrid) -> Result<FlowState> {
    let grid = Arc::clone(state.body.grid());
    let mut current = state;
    let scale = current.body.h().iter().cloned().fold(1.0f64, f64::max);
    let mut dt = current.dt;
    let mut projections = 0usize;
    loop {
        let trial = (|| -> Result<(ConvexBody, RhsEval, f64)> {
            let h0 = current.body.h();
            let k1 = &current.eval.rhs;
            let h_mid: Vec<f64> = (0..h0.len()).map(|i| h0[i] + 0.5 * dt * k1[i]).collect();
            if !guard_ok(&h_mid, cfg) {
                return Err(Error::DivergedBounds {
                    t: current.t,
                    lo: cfg.h_min_guard,
                    hi: cfg.h_max_guard,
                });
            }
            let mid = ConvexBody::new(Arc::clone(&grid), h_mid)?;
            let k2 = rhs(&mid, cfg, dirs)?;
            let err = (0..h0.len())
                .map(|i| (k2.rhs[i] - k1[i]).abs())
                .fold(0.0f64, f64::max)
                * dt;
            let h_new: Vec<f64> = (0..h0.len()).map(|i| h0[i] + dt * k2.rhs[i]).collect();
            if !guard_ok(&h_new, cfg) {
                return Err(Error::DivergedBounds {
                    t: current.t,
                    lo: cfg.h_min_guard,
                    hi: cfg.h_max_guard,
                });
            }
            let new_body = ConvexBody::new(Arc::clone(&grid), h_new)?;
            new_body.assert_strictly_convex(cfg.eps_convex)?;
            let eval = rhs(&new_body, cfg, dirs)?;
            Ok((new_body, eval, err))
        })();
        match trial {
            Ok((body, eval, err)) if err <= cfg.tol_step * scale => {
                return Ok(FlowState {
                    t: current.t + dt,
                    body,
                    dt: (dt * cfg.growth).min(cfg.dt_max),
                    step_count: current.step_count + 1,
                    eval,
                });
            }
            Ok(_) => {
                // accuracy rejection: fall through to the dt halving below
            }
            Err(e @ Error::DivergedBounds { .. }) => {
                if dt * 0.5 < cfg.dt_min {
                    return Err(e);
                }
            }
            Err(Error::ConvexityLoss { .. }) | Err(Error::NotPositive { .. }) => {
                // convexity rejection; possibly recoverable by projecting the
                // pre-step state back onto the convex cone
                if dt * 0.5 < cfg.dt_min && cfg.project_on_reject && projections < 16 {
                    let projected = current.body.wulff_project()?;
                    let eval = rhs(&projected, cfg, dirs)?;
                    projections += 1;
                    dt = cfg.dt0;
                    current = FlowState {
                        t: current.t,
                        body: projected,
                        dt,
                        step_count: current.step_count,
                        eval,
                    };
                    continue;
                }
            }
            Err(e) => return Err(e),
        }
        dt *= 0.5;
        if dt < cfg.dt_min {
            return Err(Error::StepCollapse {
                t: current.t,
                dt_min: cfg.dt_min,
            });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxSteps,
}

pub struct RunResult {
    pub status: RunStatus,
    pub trajectory: Vec<DiagnosticsRow>,
    pub state: FlowState,
    /// recovered constant of the Monge-Ampere equation, c = 1/theta_final
    pub c: f64,
    pub warnings: Vec<String>,
}

/// Run the flow from `initial` until both stopping criteria hold
/// (sup|rhs| <= tol_rhs * max h and Monge-Ampere residual <= tol_res),
/// or until max_steps.
pub fn run(initial: ConvexBody, cfg: &FlowConfig) -> Result<RunResult> {
    let dirs = DirectionGrid::from_grid(initial.grid());
    let monitor = DirectionGrid::new(initial.grid().dim(), cfg.monitor_dirs)?;
    let mut state = FlowState::new(initial, cfg, &dirs)?;
    let mut trajectory = vec![state.diagnostics(cfg, &monitor)?];
    let status = loop {
        let h_max = state.body.h().iter().cloned().fold(0.0f64, f64::max);
        let stationary = state.eval.rhs_sup() <= cfg.tol_rhs * h_max;
        let solved = state.ma_residual_sup(cfg) <= cfg.tol_res;
        if stationary && solved {
            break RunStatus::Converged;
        }
        if state.step_count >= cfg.max_steps {
            break RunStatus::MaxSteps;
        }
        state = step(state, cfg, &dirs)?;
        if state.step_count % cfg.stride == 0 {
            trajectory.push(state.diagnostics(cfg, &monitor)?);
        }
    };
    if trajectory.last().map(|r| r.step) != Some(state.step_count) {
        trajectory.push(state.diagnostics(cfg, &monitor)?);
    }
    let c = 1.0 / state.theta();
    Ok(RunResult {
        status,
        trajectory,
        state,
        c,
        warnings: cfg.warnings(),
    })
}
