//! Configuration-driven experiment drivers and their text outputs.
//!
//! Each driver composes the library modules into one headline experiment:
//! single-wave propagation fidelity, monotonicity of the localized energies
//! along a train, the stability scaling of the modulated distance against the
//! perturbation size, and coercivity certification. Drivers write diagnostics
//! CSVs and field dumps under an output directory and return structured
//! reports; all randomness is drawn from a seeded generator so that reruns
//! are bitwise identical.

use crate::config::{PerturbKind, RunConfig};
use crate::dynamics::{evolve, StepperConfig, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::{energy_e, energy_f, localized_energies, Partition, Psi};
use crate::grid::{x_norm, Field, Grid, State};
use crate::modulation::{crest_guesses, track, ModulationTrack};
use crate::util::linear_fit;
use crate::wave::{profile_from_shape, train, WaveShape};
use crate::coercivity::{constrained_spectrum, CoercivityReport};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// Fixed 17-significant-digit decimal, the format of every emitted number.
fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a field dump: header `# t=<value> n=<n> length=<L>`, then rows
/// `x u eta`.
pub fn write_field_dump(path: &Path, t: f64, s: &State) -> Result<()> {
    let grid = s.grid();
    let mut out = String::new();
    writeln!(out, "# t={} n={} length={}", fmt_f(t), grid.n(), grid.length()).unwrap();
    for j in 0..grid.n() {
        writeln!(
            out,
            "{} {} {}",
            fmt_f(grid.point(j)),
            fmt_f(s.u().values()[j]),
            fmt_f(s.eta().values()[j])
        )
        .unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Band-limited noise with unit-scale coefficients on modes 1..=10.
fn random_smooth_field(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let length = grid.length();
    let mut coeffs = Vec::new();
    for m in 1..=10u32 {
        let a: f64 = rng.random_range(-1.0..1.0);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        coeffs.push((m as f64, a, phase));
    }
    grid.field_from_fn(|x| {
        coeffs
            .iter()
            .map(|&(m, a, p)| a * (std::f64::consts::TAU * m * x / length + p).cos())
            .sum()
    })
}

/// Build the perturbed initial state. The perturbation has energy-norm
/// distance exactly `cfg.eps` from the unperturbed train.
pub fn perturbed_initial_state(cfg: &RunConfig, base: &State, centers: &[f64]) -> Result<State> {
    if cfg.eps == 0.0 {
        return Ok(base.clone());
    }
    let grid = base.grid();
    let raw = match cfg.kind {
        PerturbKind::ScaledProfile => base.clone(),
        PerturbKind::LocalizedBump => {
            // Gaussian in u placed between the first two crests, or a quarter
            // domain ahead of a single crest.
            let y = if centers.len() >= 2 {
                0.5 * (centers[0] + centers[1])
            } else {
                centers[0] + 0.25 * grid.length()
            };
            let bump = grid.field_from_fn(|x| {
                let d = grid.wrapped_distance(x, y);
                (-d * d / 8.0).exp()
            });
            State::new(bump, grid.zero_field())
        }
        PerturbKind::RandomSmooth => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let u = random_smooth_field(grid, &mut rng);
            let eta = random_smooth_field(grid, &mut rng);
            State::new(u, eta)
        }
    };
    let norm = x_norm(&raw);
    if !(norm > 0.0) {
        return Err(Error::Config("degenerate perturbation of zero norm".into()));
    }
    Ok(base.add(&raw.scale(cfg.eps / norm)))
}

/// Cumulative unwrap of a periodic position series.
fn unwrap_series(vals: &[f64], length: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(vals.len());
    let mut offset = 0.0;
    for (i, &v) in vals.iter().enumerate() {
        if i > 0 {
            let prev: f64 = out[i - 1];
            let mut cand = v + offset;
            while cand - prev > 0.5 * length {
                cand -= length;
                offset -= length;
            }
            while prev - cand > 0.5 * length {
                cand += length;
                offset += length;
            }
            out.push(cand);
        } else {
            out.push(v);
        }
    }
    out
}

/// Per-checkpoint speeds: centered differences inside, one-sided at the ends.
fn speed_series(times: &[f64], centers: &[Vec<f64>], length: f64) -> Vec<Vec<f64>> {
    let m = times.len();
    let n = if m > 0 { centers[0].len() } else { 0 };
    let mut unwrapped: Vec<Vec<f64>> = Vec::with_capacity(n);
    for w in 0..n {
        let series: Vec<f64> = centers.iter().map(|c| c[w]).collect();
        unwrapped.push(unwrap_series(&series, length));
    }
    (0..m)
        .map(|i| {
            (0..n)
                .map(|w| {
                    let (lo, hi) = if m == 1 {
                        return f64::NAN;
                    } else if i == 0 {
                        (0, 1)
                    } else if i + 1 == m {
                        (m - 2, m - 1)
                    } else {
                        (i - 1, i + 1)
                    };
                    (unwrapped[w][hi] - unwrapped[w][lo]) / (times[hi] - times[lo])
                })
                .collect()
        })
        .collect()
}

/// Diagnostics of one evolution run, aligned with the modulation track.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub times: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub min_one_plus_eta: Vec<f64>,
    pub d_x: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub speeds: Vec<Vec<f64>>,
    pub separations: Vec<Vec<f64>>,
    /// I_{j,K} per checkpoint, j = 2..N.
    pub i_loc: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    /// Set when the modulation track ended before the trajectory.
    pub flagged: bool,
}

impl Diagnostics {
    /// Assemble from a trajectory and its modulation track, recomputing the
    /// partition and localized energies at each tracked checkpoint.
    pub fn new(
        traj: &Trajectory,
        tr: &ModulationTrack,
        psi: &Psi,
        k: f64,
    ) -> Result<Diagnostics> {
        let m = tr.times.len();
        let grid = traj.states[0].grid().clone();
        let mut d = Diagnostics {
            times: tr.times.clone(),
            e: Vec::with_capacity(m),
            f: Vec::with_capacity(m),
            min_one_plus_eta: Vec::with_capacity(m),
            d_x: tr.remainder_norms.clone(),
            centers: tr.centers.clone(),
            speeds: speed_series(&tr.times, &tr.centers, grid.length()),
            separations: tr.separations.clone(),
            i_loc: Vec::with_capacity(m),
            a: tr.a.clone(),
            flagged: tr.truncated || traj.breakdown,
        };
        for idx in 0..m {
            let s = &traj.states[idx];
            d.e.push(energy_e(s));
            d.f.push(energy_f(s));
            d.min_one_plus_eta.push(s.min_one_plus_eta());
            let part = Partition::new(psi, &tr.centers[idx], k, &grid)?;
            d.i_loc.push(localized_energies(s, &part).i);
        }
        Ok(d)
    }

    /// CSV text with the canonical column set.
    pub fn to_csv(&self) -> String {
        let n = self.centers.first().map_or(0, Vec::len);
        let mut out = String::from("t,E,F,min_one_plus_eta,d_X");
        for i in 1..=n {
            write!(out, ",x_{i}").unwrap();
        }
        for i in 1..=n {
            write!(out, ",xdot_{i}").unwrap();
        }
        for j in 2..=n {
            write!(out, ",sep_{j}").unwrap();
        }
        for j in 2..=n {
            write!(out, ",I_{j}").unwrap();
        }
        for i in 1..=n {
            write!(out, ",a_{i}").unwrap();
        }
        out.push('\n');
        for r in 0..self.times.len() {
            write!(
                out,
                "{},{},{},{},{}",
                fmt_f(self.times[r]),
                fmt_f(self.e[r]),
                fmt_f(self.f[r]),
                fmt_f(self.min_one_plus_eta[r]),
                fmt_f(self.d_x[r])
            )
            .unwrap();
            let groups: [&[f64]; 5] = [
                &self.centers[r],
                &self.speeds[r],
                &self.separations[r],
                &self.i_loc[r],
                &self.a[r],
            ];
            for g in groups {
                for &v in g {
                    write!(out, ",{}", fmt_f(v)).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv * (b - a);
    let mut d = a + inv * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv * (b - a);
            fd = f(d);
        }
        if b - a < 1e-11 {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimum over translates of the relative energy-norm distance between a
/// state and the solitary wave of `shape`; returns (error, best center).
pub fn shape_error(s: &State, shape: &Arc<WaveShape>) -> Result<(f64, f64)> {
    let grid = s.grid();
    let guess = crest_guesses(s.u(), 1, 0.0)?[0];
    let dist = |center: f64| -> f64 {
        let w = profile_from_shape(shape, center, grid).expect("edge tail already checked");
        x_norm(&s.sub(&w.state()))
    };
    // the crest guess is grid-accurate; bracket by one spacing on each side
    let h = grid.spacing();
    let (best, err) = golden_min(guess - h, guess + h, dist);
    let wnorm = x_norm(&profile_from_shape(shape, 0.0, grid)?.state());
    Ok((err / wnorm, best))
}

/// Report of a single-wave propagation run.
#[derive(Debug, Clone)]
pub struct PropagationReport {
    pub c: f64,
    /// Min-over-translates relative energy-norm error at the final time.
    pub shape_error: f64,
    pub measured_speed: f64,
    pub speed_error: f64,
    pub e_drift: f64,
    pub f_drift: f64,
    pub breakdown: bool,
}

impl PropagationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "c: {}", fmt_f(self.c)).unwrap();
        writeln!(out, "shape_error: {}", fmt_f(self.shape_error)).unwrap();
        writeln!(out, "measured_speed: {}", fmt_f(self.measured_speed)).unwrap();
        writeln!(out, "speed_error: {}", fmt_f(self.speed_error)).unwrap();
        writeln!(out, "e_drift: {}", fmt_f(self.e_drift)).unwrap();
        writeln!(out, "f_drift: {}", fmt_f(self.f_drift)).unwrap();
        writeln!(out, "breakdown: {}", self.breakdown).unwrap();
        out
    }
}

fn relative_drift(series: &[f64]) -> f64 {
    let first = series[0];
    series
        .iter()
        .map(|v| (v - first).abs())
        .fold(0.0, f64::max)
        / first.abs().max(f64::MIN_POSITIVE)
}

fn stepper(cfg: &RunConfig) -> StepperConfig {
    let mut sc = StepperConfig::new(cfg.dt, cfg.t_end);
    sc.checkpoint_stride = cfg.stride;
    sc
}

/// Evolve a single perturbed wave and measure how well its shape and speed
/// are preserved.
pub fn run_propagation(cfg: &RunConfig, out: &Path) -> Result<PropagationReport> {
    if cfg.speeds.len() != 1 {
        return Err(Error::Config(format!(
            "propagation runs a single wave, got {} speeds",
            cfg.speeds.len()
        )));
    }
    let grid = Grid::new(cfg.n, cfg.length)?;
    let spec = cfg.train_spec()?;
    let tr = train(&spec, &grid)?;
    let s0 = perturbed_initial_state(cfg, &tr.state, spec.centers())?;
    write_field_dump(&out.join("state_initial.txt"), 0.0, &s0)?;
    let traj = evolve(&s0, &stepper(cfg), |_, _| {})?;
    let final_state = traj.states.last().unwrap();
    write_field_dump(
        &out.join("state_final.txt"),
        *traj.times.last().unwrap(),
        final_state,
    )?;

    let psi = Psi::new()?;
    let mtrack = track(&traj, &spec, &psi, cfg.weight_k())?;
    let diag = Diagnostics::new(&traj, &mtrack, &psi, cfg.weight_k())?;
    write_text(&out.join("diagnostics.csv"), &diag.to_csv())?;

    let c = cfg.speeds[0];
    let (err, _) = shape_error(final_state, tr.waves[0].shape())?;
    let series: Vec<f64> = mtrack.centers.iter().map(|cs| cs[0]).collect();
    let unwrapped = unwrap_series(&series, cfg.length);
    let (speed, _) = linear_fit(&mtrack.times, &unwrapped);
    let report = PropagationReport {
        c,
        shape_error: err,
        measured_speed: speed,
        speed_error: (speed - c).abs() / c,
        e_drift: relative_drift(&diag.e),
        f_drift: relative_drift(&diag.f),
        breakdown: traj.breakdown,
    };
    write_text(&out.join("report.txt"), &report.to_text())?;
    Ok(report)
}

/// One train evolution: trajectory plus aligned diagnostics.
pub fn evolve_train(cfg: &RunConfig) -> Result<(Trajectory, Diagnostics)> {
    let grid = Grid::new(cfg.n, cfg.length)?;
    let spec = cfg.train_spec()?;
    let tr = train(&spec, &grid)?;
    let s0 = perturbed_initial_state(cfg, &tr.state, spec.centers())?;
    let traj = evolve(&s0, &stepper(cfg), |_, _| {})?;
    let psi = Psi::new()?;
    let mtrack = track(&traj, &spec, &psi, cfg.weight_k())?;
    let diag = Diagnostics::new(&traj, &mtrack, &psi, cfg.weight_k())?;
    Ok((traj, diag))
}

/// One member of a monotonicity sweep.
#[derive(Debug, Clone)]
pub struct MonotonicityRun {
    pub separation: f64,
    /// Initial total energy.
    pub e0: f64,
    /// max_t (I_{j,K}(t) - I_{j,K}(0)), j = 2..N.
    pub excess: Vec<f64>,
    pub flagged: bool,
}

/// Result of the monotonicity experiment across a separation sweep.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub runs: Vec<MonotonicityRun>,
    /// Slope of log(max excess) against separation, when fittable.
    pub slope: Option<f64>,
}

impl MonotonicityReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.runs {
            write!(out, "separation: {}", fmt_f(r.separation)).unwrap();
            write!(out, " e0: {}", fmt_f(r.e0)).unwrap();
            for (j, x) in r.excess.iter().enumerate() {
                write!(out, " excess_{}: {}", j + 2, fmt_f(*x)).unwrap();
            }
            writeln!(out, " flagged: {}", r.flagged).unwrap();
        }
        match self.slope {
            Some(s) => writeln!(out, "log_excess_slope: {}", fmt_f(s)).unwrap(),
            None => writeln!(out, "log_excess_slope: none").unwrap(),
        }
        out
    }
}

fn centers_for_separation(cfg: &RunConfig, sep: f64) -> Vec<f64> {
    let n_waves = cfg.speeds.len();
    let base = (0..n_waves)
        .map(|i| (i as f64 - 0.5 * (n_waves - 1) as f64) * sep)
        .collect();
    crate::config::place_centers(&cfg.speeds, base, cfg.length, cfg.t_end)
}

/// Evolve perturbed trains over the configured separation sweep and measure
/// how far each localized energy ever rises above its initial value.
pub fn run_monotonicity(cfg: &RunConfig, out: &Path) -> Result<MonotonicityReport> {
    if cfg.speeds.len() < 2 {
        return Err(Error::Config("monotonicity needs at least two waves".into()));
    }
    let seps = cfg.sweep_lengths.clone();
    let results: Vec<Result<(f64, Diagnostics)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seps
            .iter()
            .map(|&sep| {
                let mut member = cfg.clone();
                member.centers = Some(centers_for_separation(cfg, sep));
                if cfg.k.is_none() {
                    member.k = Some(member.weight_k());
                }
                scope.spawn(move || {
                    let (_, diag) = evolve_train(&member)?;
                    Ok((sep, diag))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut runs = Vec::new();
    for res in results {
        let (sep, diag) = res?;
        write_text(
            &out.join(format!("monotonicity_sep{sep}.csv")),
            &diag.to_csv(),
        )?;
        let n_i = diag.i_loc[0].len();
        let excess: Vec<f64> = (0..n_i)
            .map(|j| {
                diag.i_loc
                    .iter()
                    .map(|row| row[j] - diag.i_loc[0][j])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        runs.push(MonotonicityRun {
            separation: sep,
            e0: diag.e[0],
            excess,
            flagged: diag.flagged,
        });
    }
    let fit_pts: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| !r.flagged)
        .filter_map(|r| {
            let m = r.excess.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (m > 0.0).then(|| (r.separation, m.ln()))
        })
        .collect();
    let slope = (fit_pts.len() >= 2).then(|| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fit_pts.into_iter().unzip();
        linear_fit(&xs, &ys).0
    });
    let report = MonotonicityReport { runs, slope };
    write_text(&out.join("report.txt"), &report.to_text())?;
    Ok(report)
}

/// One member of the stability sweep.
#[derive(Debug, Clone)]
pub struct StabilityRun {
    pub eps: f64,
    pub times: Vec<f64>,
    /// Modulated distance d(t) at each checkpoint.
    pub d: Vec<f64>,
    /// Running sup of d up to each checkpoint.
    pub sup_to_date: Vec<f64>,
    pub sup: f64,
    /// max_t (I_{j,K}(t) - I_{j,K}(0)), j = 2..N.
    pub excess: Vec<f64>,
    pub flagged: bool,
}

/// Result of the stability scaling experiment.
#[derive(Debug, Clone)]
pub struct StabilityResult {
    pub runs: Vec<StabilityRun>,
    /// sup_t d of the unperturbed run: the interaction floor.
    pub floor: f64,
    /// Fitted exponent of sup_t d against eps.
    pub exponent: Option<f64>,
    /// Prefactor estimate from the same regression.
    pub a0: Option<f64>,
    /// Sweep members excluded because their run broke down.
    pub excluded: Vec<f64>,
}

impl StabilityResult {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "floor: {}", fmt_f(self.floor)).unwrap();
        for r in &self.runs {
            writeln!(
                out,
                "eps: {} sup_d: {} flagged: {}",
                fmt_f(r.eps),
                fmt_f(r.sup),
                r.flagged
            )
            .unwrap();
        }
        match self.exponent {
            Some(p) => writeln!(out, "exponent: {}", fmt_f(p)).unwrap(),
            None => writeln!(out, "exponent: none").unwrap(),
        }
        match self.a0 {
            Some(a) => writeln!(out, "a0: {}", fmt_f(a)).unwrap(),
            None => writeln!(out, "a0: none").unwrap(),
        }
        for e in &self.excluded {
            writeln!(out, "excluded_eps: {}", fmt_f(*e)).unwrap();
        }
        out
    }
}

fn stability_member(cfg: &RunConfig, eps: f64) -> Result<StabilityRun> {
    let mut member = cfg.clone();
    member.eps = eps;
    let (_, diag) = evolve_train(&member)?;
    let mut sup_to_date = Vec::with_capacity(diag.d_x.len());
    let mut sup = 0.0f64;
    for &v in &diag.d_x {
        sup = sup.max(v);
        sup_to_date.push(sup);
    }
    let n_i = diag.i_loc[0].len();
    let excess: Vec<f64> = (0..n_i)
        .map(|j| {
            diag.i_loc
                .iter()
                .map(|row| row[j] - diag.i_loc[0][j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(StabilityRun {
        eps,
        times: diag.times.clone(),
        d: diag.d_x.clone(),
        sup_to_date,
        sup,
        excess,
        flagged: diag.flagged,
    })
}

/// Evolve the train across the eps sweep (plus the unperturbed floor run) and
/// fit the scaling exponent of sup_t d against eps.
pub fn run_stability(cfg: &RunConfig, out: &Path) -> Result<StabilityResult> {
    if cfg.speeds.len() < 2 {
        return Err(Error::Config("stability needs at least two waves".into()));
    }
    if cfg.sweep_eps.len() < 3 {
        return Err(Error::Config(format!(
            "stability needs at least 3 sweep eps values, got {}",
            cfg.sweep_eps.len()
        )));
    }
    let mut members = vec![0.0];
    members.extend(cfg.sweep_eps.iter().copied());
    let results: Vec<(f64, Result<StabilityRun>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = members
            .iter()
            .map(|&eps| scope.spawn(move || (eps, stability_member(cfg, eps))))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut runs = Vec::new();
    let mut excluded = Vec::new();
    let mut floor = f64::NAN;
    for (eps, res) in results {
        match res {
            Ok(run) => {
                if eps == 0.0 {
                    floor = run.sup;
                }
                let mut csv = String::from("t,d,sup_to_date\n");
                for r in 0..run.times.len() {
                    writeln!(
                        csv,
                        "{},{},{}",
                        fmt_f(run.times[r]),
                        fmt_f(run.d[r]),
                        fmt_f(run.sup_to_date[r])
                    )
                    .unwrap();
                }
                write_text(&out.join(format!("stability_eps{eps}.csv")), &csv)?;
                runs.push(run);
            }
            Err(Error::Breakdown(_)) if eps > 0.0 => excluded.push(eps),
            Err(e) => return Err(e),
        }
    }
    if !floor.is_finite() {
        return Err(Error::Breakdown("unperturbed floor run broke down".into()));
    }

    let pts: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| r.eps > 0.0 && !r.flagged && r.sup > floor)
        .map(|r| (r.eps.ln(), (r.sup - floor).ln()))
        .collect();
    let (exponent, a0) = if pts.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let (slope, intercept) = linear_fit(&xs, &ys);
        (Some(slope), Some(intercept.exp()))
    } else {
        (None, None)
    };
    let report = StabilityResult {
        runs,
        floor,
        exponent,
        a0,
        excluded,
    };
    write_text(&out.join("report.txt"), &report.to_text())?;
    Ok(report)
}

fn coercivity_text(reports: &[CoercivityReport]) -> String {
    let mut out = String::new();
    for r in reports {
        writeln!(out, "c: {}", fmt_f(r.c)).unwrap();
        writeln!(out, "n: {}", r.n).unwrap();
        writeln!(out, "length: {}", fmt_f(r.length)).unwrap();
        writeln!(out, "lambda_min: {}", fmt_f(r.lambda_min)).unwrap();
        writeln!(out, "zero_mode_ratio: {}", fmt_f(r.zero_mode_ratio)).unwrap();
        writeln!(out, "zero_mode_residual: {}", fmt_f(r.zero_mode_residual)).unwrap();
        for &(delta, lam) in &r.relaxed {
            writeln!(out, "relaxed_{delta}: {}", fmt_f(lam)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Certify coercivity at every configured speed.
pub fn run_coercivity(cfg: &RunConfig, out: &Path) -> Result<Vec<CoercivityReport>> {
    if cfg.coercivity_speeds.iter().any(|&c| !(c > 1.0)) {
        return Err(Error::Config("coercivity speeds must exceed 1".into()));
    }
    let grid = Grid::new(cfg.coercivity_n, cfg.length)?;
    let speeds = cfg.coercivity_speeds.clone();
    let results: Vec<Result<CoercivityReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = speeds
            .iter()
            .map(|&c| {
                let g = grid.clone();
                scope.spawn(move || {
                    let w = crate::wave::profile(c, 0.0, &g)?;
                    constrained_spectrum(&w)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let reports: Vec<CoercivityReport> = results.into_iter().collect::<Result<_>>()?;
    write_text(&out.join("report.txt"), &coercivity_text(&reports))?;
    Ok(reports)
}

/// Dump the exact initial train (no perturbation, no evolution).
pub fn run_profile_dump(cfg: &RunConfig, out: &Path) -> Result<()> {
    let grid = Grid::new(cfg.n, cfg.length)?;
    let spec = cfg.train_spec()?;
    let tr = train(&spec, &grid)?;
    write_field_dump(&out.join("profile.txt"), 0.0, &tr.state)
}
