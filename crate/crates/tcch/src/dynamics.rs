//! Pseudospectral time evolution of the coupled system
//!
//!   u_t   = -(1/2) dx(u^2) - (1 - dxx)^{-1} dx(u^2 + u_x^2/2 + eta + eta^2/2),
//!   eta_t = -dx(u + u eta),
//!
//! with classical RK4 stepping. The smoothing inverse makes the nonlocal flux
//! order zero, so the only stiffness is advective and an explicit scheme with
//! a CFL guard suffices. Quadratic products are dealiased by the 2/3 rule;
//! evolution is monitored for breakdown (min(1 + eta) reaching zero or any
//! non-finite value) and truncates cleanly instead of crashing.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, State};
use num_complex::Complex;

/// Floor for min(1 + eta) below which the run is declared broken down.
const BREAKDOWN_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Maximum allowed max|u| dt / spacing.
    pub cfl_guard: f64,
    /// Steps between observer callbacks.
    pub checkpoint_stride: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> StepperConfig {
        StepperConfig {
            dt,
            t_end,
            dealias: true,
            cfl_guard: 0.5,
            checkpoint_stride: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.cfl_guard > 0.0 && self.cfl_guard < 1.0) {
            return Err(Error::Config(format!(
                "cfl_guard must lie in (0, 1), got {}",
                self.cfl_guard
            )));
        }
        if self.checkpoint_stride == 0 {
            return Err(Error::Config("checkpoint_stride must be positive".into()));
        }
        Ok(())
    }
}

/// States stored at checkpoint times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Set when the validity monitor stopped the run early.
    pub breakdown: bool,
}

fn dealias_mask(grid: &Grid, j: usize) -> bool {
    let n = grid.n();
    let m = if j <= n / 2 { j } else { n - j };
    m > n / 3
}

/// Right-hand side of the evolution equations.
pub fn rhs(s: &State, dealias: bool) -> State {
    let grid = s.grid().clone();
    let n = grid.n();
    let u = s.u();
    let eta = s.eta();

    let spec_u = grid.forward(u.values());
    let mut spec_ux = spec_u.clone();
    for (j, c) in spec_ux.iter_mut().enumerate() {
        *c *= grid.deriv_multiplier(j);
    }
    let ux = grid.inverse(spec_ux);

    let mut u2 = Vec::with_capacity(n);
    let mut rest = Vec::with_capacity(n); // u_x^2/2 + eta^2/2
    let mut ueta = Vec::with_capacity(n);
    for j in 0..n {
        let uv = u.values()[j];
        let ev = eta.values()[j];
        u2.push(uv * uv);
        rest.push(0.5 * ux[j] * ux[j] + 0.5 * ev * ev);
        ueta.push(uv * ev);
    }
    let spec_u2 = grid.forward(&u2);
    let spec_rest = grid.forward(&rest);
    let spec_ueta = grid.forward(&ueta);
    let spec_eta = grid.forward(eta.values());

    let mut spec_ut = Vec::with_capacity(n);
    let mut spec_etat = Vec::with_capacity(n);
    for j in 0..n {
        let ik = grid.deriv_multiplier(j);
        let k = grid.wavenumbers()[j];
        let smooth = 1.0 / (1.0 + k * k);
        let masked = |c: Complex<f64>| {
            if dealias && dealias_mask(&grid, j) {
                Complex::new(0.0, 0.0)
            } else {
                c
            }
        };
        let q = masked(spec_u2[j] + spec_rest[j]) + spec_eta[j];
        spec_ut.push(-0.5 * ik * masked(spec_u2[j]) - ik * smooth * q);
        spec_etat.push(-ik * (spec_u[j] + masked(spec_ueta[j])));
    }
    State::new(
        Field::from_values(&grid, grid.inverse(spec_ut)),
        Field::from_values(&grid, grid.inverse(spec_etat)),
    )
}

/// One classical RK4 step of signed size `dt`. Fails (without stepping) if the
/// CFL guard is violated.
pub fn step_rk4(s: &State, dt: f64, cfg: &StepperConfig) -> Result<State> {
    let dx = s.grid().spacing();
    let umax = s.u().max_abs();
    let ratio = umax * dt.abs() / dx;
    if ratio > cfg.cfl_guard {
        return Err(Error::CflViolation {
            ratio,
            guard: cfg.cfl_guard,
            suggested_dt: cfg.cfl_guard * dx / umax,
        });
    }
    let k1 = rhs(s, cfg.dealias);
    let k2 = rhs(&s.add(&k1.scale(0.5 * dt)), cfg.dealias);
    let k3 = rhs(&s.add(&k2.scale(0.5 * dt)), cfg.dealias);
    let k4 = rhs(&s.add(&k3.scale(dt)), cfg.dealias);
    let incr = k1
        .add(&k2.scale(2.0))
        .add(&k3.scale(2.0))
        .add(&k4)
        .scale(dt / 6.0);
    Ok(s.add(&incr))
}

/// Integrate from `s0` to `t_end` (or until breakdown), invoking `observer`
/// at t = 0, every `checkpoint_stride` steps, and at the final time.
pub fn evolve(
    s0: &State,
    cfg: &StepperConfig,
    mut observer: impl FnMut(f64, &State),
) -> Result<Trajectory> {
    cfg.validate()?;
    if s0.min_one_plus_eta() <= BREAKDOWN_FLOOR || !s0.is_finite() {
        return Err(Error::Breakdown("invalid initial state".into()));
    }
    let n_steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut s = s0.clone();
    observer(0.0, &s);
    times.push(0.0);
    states.push(s.clone());
    let mut breakdown = false;
    for step in 1..=n_steps {
        match step_rk4(&s, cfg.dt, cfg) {
            Ok(next) => s = next,
            Err(e @ Error::CflViolation { .. }) => return Err(e),
            Err(_) => {
                breakdown = true;
                break;
            }
        }
        if !s.is_finite() || s.min_one_plus_eta() <= BREAKDOWN_FLOOR {
            breakdown = true;
            break;
        }
        if step % cfg.checkpoint_stride == 0 || step == n_steps {
            let t = step as f64 * cfg.dt;
            observer(t, &s);
            times.push(t);
            states.push(s.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        breakdown,
    })
}
