//! Modulation fitting and tracking: solve the orthogonality system that pins
//! the time-dependent centers x_i(t) of an N-wave train, decompose a state
//! into train plus remainder, and compute the per-bump scalar coefficients
//! a_i of the constrained decomposition u = (1 + a_i) R_X + psi_i.
//!
//! The residual functions are
//!
//!   Y^i = int (u - sum_j phi_j)(1 - dxx) dx phi_i + int (eta - sum_j xi_j) dx xi_i,
//!
//! with phi_j = phi_{c_j}(. - x_j), xi_j likewise. Newton iteration uses the
//! analytic Jacobian (all entries are integrals of known profile derivatives)
//! and is warm-started along a trajectory from the previous checkpoint.

use crate::error::{Error, Result};
use crate::functionals::{Partition, Psi};
use crate::grid::{x_norm, Field, Grid, State};
use crate::wave::{profile_from_shape, ProfileFields, TrainSpec, WaveShape};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// The wave shapes of a train, reusable across resampling at moving centers.
#[derive(Debug, Clone)]
pub struct WaveFamily {
    shapes: Vec<Arc<WaveShape>>,
}

impl WaveFamily {
    pub fn from_spec(spec: &TrainSpec) -> Result<WaveFamily> {
        let shapes = spec
            .speeds()
            .iter()
            .map(|&c| WaveShape::build(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(WaveFamily { shapes })
    }

    pub fn n_waves(&self) -> usize {
        self.shapes.len()
    }

    pub fn shapes(&self) -> &[Arc<WaveShape>] {
        &self.shapes
    }

    /// Sample every wave at the given centers.
    pub fn sample(&self, grid: &Grid, centers: &[f64]) -> Vec<ProfileFields> {
        assert_eq!(centers.len(), self.shapes.len());
        self.shapes
            .iter()
            .zip(centers)
            .map(|(s, &x)| s.sample(grid, x))
            .collect()
    }

    /// The superposed train R_X at the given centers.
    pub fn superpose(&self, grid: &Grid, centers: &[f64]) -> State {
        let fields = self.sample(grid, centers);
        let mut u = grid.zero_field();
        let mut eta = grid.zero_field();
        for f in &fields {
            u = &u + &f.phi;
            eta = &eta + &f.xi;
        }
        State::new(u, eta)
    }
}

fn residual_and_profiles(
    s: &State,
    fam: &WaveFamily,
    centers: &[f64],
) -> (Vec<f64>, Vec<ProfileFields>, State) {
    let grid = s.grid();
    let profiles = fam.sample(grid, centers);
    let mut ru = s.u().clone();
    let mut reta = s.eta().clone();
    for p in &profiles {
        ru = &ru - &p.phi;
        reta = &reta - &p.xi;
    }
    let y = profiles
        .iter()
        .map(|p| {
            let a = p.dphi.helmholtz(); // (1 - dxx) dx phi_i
            ru.inner(&a) + reta.inner(&p.dxi)
        })
        .collect();
    (y, profiles, State::new(ru, reta))
}

/// The residual vector Y at the queried centers.
pub fn orthogonality_residual(s: &State, fam: &WaveFamily, centers: &[f64]) -> Vec<f64> {
    residual_and_profiles(s, fam, centers).0
}

/// Converged modulation decomposition of a state.
#[derive(Debug, Clone)]
pub struct ModulationFit {
    pub centers: Vec<f64>,
    /// max |Y^i| at the returned centers.
    pub residual: f64,
    pub iterations: usize,
    /// (v, zeta) = (u, eta) - train at the fitted centers.
    pub remainder: State,
    pub remainder_norm: f64,
}

const FIT_TOL: f64 = 1e-10;
const FIT_MAX_ITER: usize = 50;

/// Newton-solve Y(centers) = 0 from `guess`.
pub fn fit_modulation(s: &State, fam: &WaveFamily, guess: &[f64]) -> Result<ModulationFit> {
    let n = fam.n_waves();
    if guess.len() != n {
        return Err(Error::FitFailed(format!(
            "guess has {} centers for {} waves",
            guess.len(),
            n
        )));
    }
    if guess.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::FitFailed("guess centers are not increasing".into()));
    }
    let grid = s.grid();
    let mut centers = guess.to_vec();
    for iter in 0..=FIT_MAX_ITER {
        let (y, profiles, remainder) = residual_and_profiles(s, fam, &centers);
        let res = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res < FIT_TOL {
            let remainder_norm = x_norm(&remainder);
            return Ok(ModulationFit {
                centers,
                residual: res,
                iterations: iter,
                remainder,
                remainder_norm,
            });
        }
        if iter == FIT_MAX_ITER {
            return Err(Error::FitFailed(format!(
                "no convergence in {FIT_MAX_ITER} iterations; best residual {res:.3e} at centers {centers:?}"
            )));
        }
        // analytic Jacobian: dY^i/dx_j = int dx phi_j A_i + int dx xi_j B_i,
        // plus for j = i the dependence of A_i, B_i on x_i against the
        // remainder
        let a: Vec<Field> = profiles.iter().map(|p| p.dphi.helmholtz()).collect();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut v = profiles[j].dphi.inner(&a[i]) + profiles[j].dxi.inner(&profiles[i].dxi);
                if i == j {
                    let da = profiles[i].dphi.deriv().helmholtz();
                    let db = profiles[i].dxi.deriv();
                    v -= remainder.u().inner(&da) + remainder.eta().inner(&db);
                }
                jac[(i, j)] = v;
            }
        }
        let rhs = DVector::from_iterator(n, y.iter().map(|&v| -v));
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::FitFailed("singular Jacobian".into()))?;
        for i in 0..n {
            centers[i] += delta[i];
        }
        if centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::FitFailed("bump ordering lost".into()));
        }
        let half = 0.5 * grid.length();
        if centers.iter().any(|x| !x.is_finite() || x.abs() > 100.0 * half) {
            return Err(Error::FitFailed("centers diverged".into()));
        }
    }
    unreachable!()
}

/// Initial center guesses from the N largest well-separated local maxima.
pub fn crest_guesses(u: &Field, n_waves: usize, min_sep: f64) -> Result<Vec<f64>> {
    let grid = u.grid();
    let n = grid.n();
    let umax = u.max();
    if !(umax > 0.0) {
        return Err(Error::FitFailed("no crest found in a non-positive field".into()));
    }
    let mut crests: Vec<(f64, f64)> = Vec::new(); // (height, position)
    for j in 0..n {
        let prev = u.values()[(j + n - 1) % n];
        let here = u.values()[j];
        let next = u.values()[(j + 1) % n];
        if here > prev && here >= next && here > 0.05 * umax {
            crests.push((here, grid.point(j)));
        }
    }
    crests.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut picked: Vec<(f64, f64)> = Vec::new();
    for c in crests {
        if picked
            .iter()
            .all(|p| grid.wrapped_distance(c.1, p.1).abs() >= min_sep)
        {
            picked.push(c);
            if picked.len() == n_waves {
                break;
            }
        }
    }
    if picked.len() < n_waves {
        return Err(Error::FitFailed(format!(
            "found only {} of {} separated crests",
            picked.len(),
            n_waves
        )));
    }
    let mut xs: Vec<f64> = picked.iter().map(|p| p.1).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(xs)
}

/// Time series of fits along a trajectory.
#[derive(Debug, Clone)]
pub struct ModulationTrack {
    pub times: Vec<f64>,
    /// Fitted centers per checkpoint.
    pub centers: Vec<Vec<f64>>,
    /// Centered-difference speed estimates; `None` at the end points.
    pub speeds: Vec<Option<Vec<f64>>>,
    /// Separations x_i - x_{i-1} per checkpoint (empty for N = 1).
    pub separations: Vec<Vec<f64>>,
    pub remainder_norms: Vec<f64>,
    /// Coefficients a_i per checkpoint.
    pub a: Vec<Vec<f64>>,
    /// Set when a fit failed and the track was truncated.
    pub truncated: bool,
}

/// Fit every checkpoint of `traj`, warm-starting from the previous one.
/// `psi`/`k` build the partition used for the a_i coefficients.
pub fn track(
    traj: &crate::dynamics::Trajectory,
    spec: &TrainSpec,
    psi: &Psi,
    k: f64,
) -> Result<ModulationTrack> {
    let fam = WaveFamily::from_spec(spec)?;
    let n = fam.n_waves();
    let mut out = ModulationTrack {
        times: Vec::new(),
        centers: Vec::new(),
        speeds: Vec::new(),
        separations: Vec::new(),
        remainder_norms: Vec::new(),
        a: Vec::new(),
        truncated: false,
    };
    let mut guess: Option<Vec<f64>> = None;
    for (idx, s) in traj.states.iter().enumerate() {
        let g = match &guess {
            Some(g) => g.clone(),
            None => crest_guesses(s.u(), n, 0.25 * spec.min_separation())?,
        };
        let fit = match fit_modulation(s, &fam, &g) {
            Ok(f) => f,
            Err(_) if idx > 0 => {
                out.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let part = Partition::new(psi, &fit.centers, k, s.grid())?;
        let dec = decompose_a(s, &fam, &fit, &part)?;
        out.times.push(traj.times[idx]);
        out.separations
            .push(fit.centers.windows(2).map(|w| w[1] - w[0]).collect());
        out.remainder_norms.push(fit.remainder_norm);
        out.a.push(dec.a);
        guess = Some(fit.centers.clone());
        out.centers.push(fit.centers);
    }
    // centered differences on the (possibly uneven) checkpoint times
    for i in 0..out.times.len() {
        if i == 0 || i + 1 == out.times.len() {
            out.speeds.push(None);
        } else {
            let dt = out.times[i + 1] - out.times[i - 1];
            out.speeds.push(Some(
                (0..n)
                    .map(|w| (out.centers[i + 1][w] - out.centers[i - 1][w]) / dt)
                    .collect(),
            ));
        }
    }
    Ok(out)
}

/// The constrained per-bump decomposition u = (1 + a_i) R_X + psi_i.
#[derive(Debug, Clone)]
pub struct DecompositionA {
    pub a: Vec<f64>,
    /// psi_i states, one per bump.
    pub psi: Vec<State>,
}

/// Compute a_i = <(E_i)'(R_X), u - R_X> / <(E_i)'(R_X), R_X> in the L^2 x L^2
/// pairing; the denominator must stay above half the single-wave energy.
pub fn decompose_a(
    s: &State,
    fam: &WaveFamily,
    fit: &ModulationFit,
    part: &Partition,
) -> Result<DecompositionA> {
    let grid = s.grid();
    let r = fam.superpose(grid, &fit.centers);
    let rux = r.u().deriv();
    let diff = s.sub(&r);
    let mut a = Vec::with_capacity(fam.n_waves());
    let mut psi_states = Vec::with_capacity(fam.n_waves());
    for i in 1..=fam.n_waves() {
        let phi_i = part.phi(i);
        // (E_i)'_u = Phi_i u - dx(Phi_i u_x), (E_i)'_eta = Phi_i eta, at R_X
        let g_u = &(phi_i * r.u()) - &(phi_i * &rux).deriv();
        let g_eta = phi_i * r.eta();
        let den = g_u.inner(r.u()) + g_eta.inner(r.eta());
        let single = profile_from_shape(&fam.shapes()[i - 1], 0.0, grid)?.state();
        let floor = 0.5 * x_norm(&single).powi(2);
        if den < floor {
            return Err(Error::DegenerateTrain { denom: den, floor });
        }
        let ai = (g_u.inner(diff.u()) + g_eta.inner(diff.eta())) / den;
        a.push(ai);
        psi_states.push(s.sub(&r.scale(1.0 + ai)));
    }
    Ok(DecompositionA { a, psi: psi_states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, StepperConfig};
    use crate::functionals::Psi;
    use crate::grid::x_inner;
    use crate::wave::train;

    fn setup() -> (Grid, TrainSpec, WaveFamily) {
        let g = Grid::new(2048, 240.0).unwrap();
        let spec = TrainSpec::new(vec![2.0, 3.0], vec![-20.0, 20.0]).unwrap();
        let fam = WaveFamily::from_spec(&spec).unwrap();
        (g, spec, fam)
    }

    #[test]
    fn residual_vanishes_on_exact_train() {
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        let y = orthogonality_residual(&t.state, &fam, spec.centers());
        for v in y {
            assert!(v.abs() < 1e-10, "residual {v}");
        }
    }

    #[test]
    fn residual_linearizes_in_center_shift() {
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        let delta = 0.1;
        let shifted: Vec<f64> = spec.centers().iter().map(|x| x + delta).collect();
        let y = orthogonality_residual(&t.state, &fam, &shifted);
        let profiles = fam.sample(&g, spec.centers());
        for (i, p) in profiles.iter().enumerate() {
            // diagonal constant by quadrature: |dx phi|_{H^1}^2 + |dx xi|_{L^2}^2
            let c = p.dphi.inner(&p.dphi.helmholtz()) + p.dxi.inner(&p.dxi);
            let rel = (y[i] - delta * c).abs() / (delta * c);
            assert!(rel < 0.05, "wave {i}: Y = {} vs delta*c = {}", y[i], delta * c);
        }
    }

    #[test]
    fn residual_is_linear_in_perturbation() {
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        let eps = 1e-3;
        let bump = g.field_from_fn(|x| (-x * x / 8.0).exp());
        let bump_state = State::new(bump.clone(), g.zero_field());
        let scale = eps / x_norm(&bump_state);
        let s = State::new(
            t.state.u() + &bump.scale(scale),
            t.state.eta().clone(),
        );
        let y = orthogonality_residual(&s, &fam, spec.centers());
        for v in y {
            assert!(v.abs() < 10.0 * eps, "residual {v} not O(eps)");
        }
    }

    #[test]
    fn fit_recovers_exact_centers() {
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        let guess: Vec<f64> = spec.centers().iter().map(|x| x + 0.3).collect();
        let fit = fit_modulation(&t.state, &fam, &guess).unwrap();
        assert!(fit.iterations <= 6, "took {} iterations", fit.iterations);
        for (a, b) in fit.centers.iter().zip(spec.centers()) {
            assert!((a - b).abs() < 1e-9, "center {a} vs {b}");
        }
        assert!(fit.remainder_norm < 1e-8);
    }

    #[test]
    fn fit_rejects_swapped_guess() {
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        assert!(matches!(
            fit_modulation(&t.state, &fam, &[20.0, -20.0]),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn perturbed_fit_has_small_remainder() {
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        let eps = 1e-3;
        let bump = g.field_from_fn(|x| (-(x) * (x) / 8.0).exp());
        let nb = x_norm(&State::new(bump.clone(), g.zero_field()));
        let s = State::new(t.state.u() + &bump.scale(eps / nb), t.state.eta().clone());
        let fit = fit_modulation(&s, &fam, spec.centers()).unwrap();
        assert!(
            fit.remainder_norm < 5.0 * eps,
            "remainder {} not O(eps)",
            fit.remainder_norm
        );
        // remainder norm recomputed independently
        let r = fam.superpose(&g, &fit.centers);
        let indep = x_norm(&s.sub(&r));
        assert!((fit.remainder_norm - indep).abs() < 1e-12);
    }

    #[test]
    fn jacobian_is_diagonally_dominant_at_fit() {
        let (g, spec, fam) = setup();
        let profiles = fam.sample(&g, spec.centers());
        let n = fam.n_waves();
        let a: Vec<Field> = profiles.iter().map(|p| p.dphi.helmholtz()).collect();
        for i in 0..n {
            let diag = profiles[i].dphi.inner(&a[i]) + profiles[i].dxi.inner(&profiles[i].dxi);
            let off: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    (profiles[j].dphi.inner(&a[i]) + profiles[j].dxi.inner(&profiles[i].dxi)).abs()
                })
                .sum();
            assert!(diag.abs() > off, "row {i}: diag {diag} vs off {off}");
        }
    }

    #[test]
    fn fit_is_translation_equivariant() {
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        let shift = 7.0 * g.spacing(); // grid-commensurate shift, exact samples
        let shifted_spec = TrainSpec::new(
            spec.speeds().to_vec(),
            spec.centers().iter().map(|x| x + shift).collect(),
        )
        .unwrap();
        let ts = train(&shifted_spec, &g).unwrap();
        let f0 = fit_modulation(&t.state, &fam, &[-20.5, 19.7]).unwrap();
        let f1 = fit_modulation(
            &ts.state,
            &fam,
            &[-20.5 + shift, 19.7 + shift],
        )
        .unwrap();
        for (a, b) in f0.centers.iter().zip(&f1.centers) {
            assert!((a + shift - b).abs() < 1e-9, "{a} + {shift} vs {b}");
        }
    }

    #[test]
    fn crest_guesses_find_train_bumps() {
        let (g, spec, _) = setup();
        let t = train(&spec, &g).unwrap();
        let xs = crest_guesses(t.state.u(), 2, 10.0).unwrap();
        assert!((xs[0] - -20.0).abs() < 0.5);
        assert!((xs[1] - 20.0).abs() < 0.5);
        assert!(crest_guesses(&g.zero_field(), 1, 10.0).is_err());
    }

    #[test]
    fn decompose_a_on_exact_and_scaled_train() {
        let (g, spec, fam) = setup();
        let psi = Psi::new().unwrap();
        let t = train(&spec, &g).unwrap();
        let fit = fit_modulation(&t.state, &fam, spec.centers()).unwrap();
        let part = Partition::new(&psi, &fit.centers, 6.0, &g).unwrap();
        let dec = decompose_a(&t.state, &fam, &fit, &part).unwrap();
        for v in &dec.a {
            assert!(v.abs() < 1e-10, "a = {v} on exact train");
        }
        // s = (1 + a) R_X: every a_i = a exactly by linearity
        let a0 = 0.01;
        let s = t.state.scale(1.0 + a0);
        let fit2 = ModulationFit {
            remainder: s.sub(&t.state),
            remainder_norm: a0 * x_norm(&t.state),
            ..fit.clone()
        };
        let dec = decompose_a(&s, &fam, &fit2, &part).unwrap();
        for v in &dec.a {
            assert!((v - a0).abs() < 1e-10, "a = {v} vs {a0}");
        }
        // constraint residual: <(E_i)'(R_X), psi_i> = 0
        let r = fam.superpose(&g, &fit.centers);
        let rux = r.u().deriv();
        for i in 1..=2usize {
            let phi_i = part.phi(i);
            let g_u = &(phi_i * r.u()) - &(phi_i * &rux).deriv();
            let g_eta = phi_i * r.eta();
            let resid = g_u.inner(dec.psi[i - 1].u()) + g_eta.inner(dec.psi[i - 1].eta());
            let scale = g_u.inner(r.u()) + g_eta.inner(r.eta());
            assert!(resid.abs() / scale < 1e-10, "constraint residual {resid}");
        }
    }

    #[test]
    fn track_single_wave_speed() {
        let g = Grid::new(1024, 200.0).unwrap();
        let spec = TrainSpec::new(vec![2.0], vec![0.0]).unwrap();
        let t = train(&spec, &g).unwrap();
        let cfg = StepperConfig {
            checkpoint_stride: 200,
            ..StepperConfig::new(1e-3, 2.0)
        };
        let traj = evolve(&t.state, &cfg, |_, _| {}).unwrap();
        let psi = Psi::new().unwrap();
        let tr = track(&traj, &spec, &psi, 6.0).unwrap();
        assert!(!tr.truncated);
        for sp in tr.speeds.iter().flatten() {
            assert!((sp[0] - 2.0).abs() < 0.01, "speed {}", sp[0]);
        }
        // orthogonality residuals hold at every checkpoint
        let fam = WaveFamily::from_spec(&spec).unwrap();
        for (s, c) in traj.states.iter().zip(&tr.centers) {
            let y = orthogonality_residual(s, &fam, c);
            assert!(y[0].abs() < 1e-10);
        }
    }

    #[test]
    fn track_zero_state_fails_cleanly() {
        let g = Grid::new(256, 100.0).unwrap();
        let spec = TrainSpec::new(vec![2.0], vec![0.0]).unwrap();
        let cfg = StepperConfig::new(1e-2, 0.1);
        let traj = evolve(&State::zero(&g), &cfg, |_, _| {}).unwrap();
        let psi = Psi::new().unwrap();
        assert!(matches!(
            track(&traj, &spec, &psi, 6.0),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn remainder_is_x_orthogonal_in_pairing_sense() {
        // sanity: the fitted remainder is small and x_inner with the train
        // translation directions is tiny
        let (g, spec, fam) = setup();
        let t = train(&spec, &g).unwrap();
        let fit = fit_modulation(&t.state, &fam, &[-19.8, 20.2]).unwrap();
        let profiles = fam.sample(&g, &fit.centers);
        for p in &profiles {
            let pair = x_inner(
                &State::new(p.dphi.clone(), g.zero_field()),
                &State::new(fit.remainder.u().clone(), g.zero_field()),
            ) + fit.remainder.eta().inner(&p.dxi);
            assert!(pair.abs() < 1e-9, "pairing {pair}");
        }
    }
}
