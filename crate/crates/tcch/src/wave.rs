//! Solitary-wave profile construction and N-wave train superposition.
//!
//! A right-moving solitary wave with speed c > 1 has velocity profile phi and
//! density profile xi = phi/(c - phi). Two integrations of the traveling-wave
//! system under decay conditions give the first-order reduction
//!
//!   (phi')^2 = phi^2 ((c - phi)^2 - 1) / (c - phi)^2,
//!
//! with amplitude c - 1 (the root of the right-hand side) and far-field decay
//! rate kappa = sqrt(c^2 - 1)/c. The profile is obtained by quadrature of
//! x(phi) = int (c - s) / (s sqrt((c - s)^2 - 1)) ds from the crest down,
//! with substitutions that remove the square-root singularity at the crest
//! (phi = a - tau^2) and the logarithmic stretching of the tail
//! (q = ln(a/phi)); grid samples come from safeguarded Newton inversion of the
//! accumulated x(parameter) table, so sampling is accurate to rounding. The
//! reduction itself is validated against [`stationary_residual`], which
//! evaluates the once-integrated second-order traveling equation directly.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, State};
use crate::util::gauss10;
use std::sync::Arc;

/// Relative tail level below which the profile is set exactly to zero.
const TAIL_ZERO: f64 = 1e-14;
/// Relative tail level allowed at the domain edge.
const TAIL_EDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
struct Node {
    /// Distance from the crest.
    x: f64,
    /// Patch parameter (tau near the crest, q in the tail).
    p: f64,
}

/// Translation-invariant half-profile of a solitary wave with speed c,
/// evaluable at any signed distance from the crest.
#[derive(Debug)]
pub struct WaveShape {
    c: f64,
    amplitude: f64,
    decay_rate: f64,
    /// Nodes of the crest patch, phi = a - tau^2, tau in [0, sqrt(a/2)].
    crest: Vec<Node>,
    /// Nodes of the tail patch, phi = a e^{-q}, q in [ln 2, ln(1/TAIL_ZERO)].
    tail: Vec<Node>,
    /// x at the patch boundary phi = a/2.
    crest_end: f64,
    /// x beyond which the profile is exactly zero.
    support: f64,
}

impl WaveShape {
    pub fn build(c: f64) -> Result<Arc<WaveShape>> {
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::NoSolitaryWave(c));
        }
        let a = c - 1.0;
        // dx/dtau for phi = a - tau^2
        let crest_integrand =
            move |t: f64| 2.0 * (1.0 + t * t) / ((a - t * t) * (t * t + 2.0).sqrt());
        // dx/dq for phi = a e^{-q}
        let tail_integrand = move |q: f64| {
            let y = c - a * (-q).exp();
            y / (y * y - 1.0).sqrt()
        };

        let tau_end = (0.5 * a).sqrt();
        let mut crest = Vec::with_capacity(257);
        let mut x = 0.0;
        crest.push(Node { x: 0.0, p: 0.0 });
        let steps = 256;
        for i in 0..steps {
            let p0 = tau_end * i as f64 / steps as f64;
            let p1 = tau_end * (i + 1) as f64 / steps as f64;
            x += gauss10(crest_integrand, p0, p1);
            crest.push(Node { x, p: p1 });
        }
        let crest_end = x;

        let q_start = std::f64::consts::LN_2;
        let q_end = -TAIL_ZERO.ln();
        let steps = ((q_end - q_start) / 0.04).ceil() as usize;
        let mut tail = Vec::with_capacity(steps + 1);
        tail.push(Node { x, p: q_start });
        for i in 0..steps {
            let p0 = q_start + (q_end - q_start) * i as f64 / steps as f64;
            let p1 = q_start + (q_end - q_start) * (i + 1) as f64 / steps as f64;
            x += gauss10(tail_integrand, p0, p1);
            tail.push(Node { x, p: p1 });
        }

        Ok(Arc::new(WaveShape {
            c,
            amplitude: a,
            decay_rate: (c * c - 1.0).sqrt() / c,
            crest,
            tail,
            crest_end,
            support: x,
        }))
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    /// Distance from the crest beyond which the profile is exactly zero.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// (phi, phi') at signed distance `d` from the crest.
    pub fn value(&self, d: f64) -> (f64, f64) {
        let s = d.abs();
        if s >= self.support {
            return (0.0, 0.0);
        }
        let (phi, dphi_right) = if s <= self.crest_end {
            let a = self.amplitude;
            let t = self.invert(&self.crest, s, |t| {
                2.0 * (1.0 + t * t) / ((a - t * t) * (t * t + 2.0).sqrt())
            });
            let phi = a - t * t;
            // phi' = -phi tau sqrt(tau^2 + 2) / (1 + tau^2), cancellation-free
            let dphi = -phi * t * (t * t + 2.0).sqrt() / (1.0 + t * t);
            (phi, dphi)
        } else {
            let a = self.amplitude;
            let c = self.c;
            let q = self.invert(&self.tail, s, |q| {
                let y = c - a * (-q).exp();
                y / (y * y - 1.0).sqrt()
            });
            let phi = a * (-q).exp();
            let y = c - phi;
            (phi, -phi * (y * y - 1.0).sqrt() / y)
        };
        if d >= 0.0 {
            (phi, dphi_right)
        } else {
            (phi, -dphi_right)
        }
    }

    /// Solve x(p) = s on a patch by safeguarded Newton between table nodes;
    /// `speed` is dx/dp.
    fn invert(&self, nodes: &[Node], s: f64, speed: impl Fn(f64) -> f64) -> f64 {
        let idx = match nodes.binary_search_by(|n| n.x.partial_cmp(&s).unwrap()) {
            Ok(i) => return nodes[i].p,
            Err(i) => i,
        };
        // s lies strictly between nodes idx-1 and idx (s < support guarantees
        // idx is in range)
        let lo = nodes[idx - 1];
        let hi = nodes[idx];
        let mut p = lo.p + (hi.p - lo.p) * (s - lo.x) / (hi.x - lo.x);
        let (mut bl, mut bh) = (lo.p, hi.p);
        for _ in 0..40 {
            let x = lo.x + gauss10(&speed, lo.p, p);
            let err = x - s;
            if err.abs() <= 1e-13 * (1.0 + s) {
                return p;
            }
            if err > 0.0 {
                bh = p;
            } else {
                bl = p;
            }
            let step = err / speed(p);
            p -= step;
            if !(bl..=bh).contains(&p) {
                p = 0.5 * (bl + bh);
            }
        }
        p
    }

    /// xi and xi' from phi and phi'.
    pub fn xi_from_phi(&self, phi: f64, dphi: f64) -> (f64, f64) {
        let y = self.c - phi;
        (phi / y, self.c * dphi / (y * y))
    }

    /// Sample the wave centered at `center` onto `grid` (minimal-image
    /// distances, so the profile wraps periodically).
    pub fn sample(&self, grid: &Grid, center: f64) -> ProfileFields {
        let n = grid.n();
        let mut phi = Vec::with_capacity(n);
        let mut dphi = Vec::with_capacity(n);
        let mut xi = Vec::with_capacity(n);
        let mut dxi = Vec::with_capacity(n);
        for x in grid.points() {
            let d = grid.wrapped_distance(x, center);
            let (p, dp) = self.value(d);
            let (xv, dxv) = self.xi_from_phi(p, dp);
            phi.push(p);
            dphi.push(dp);
            xi.push(xv);
            dxi.push(dxv);
        }
        ProfileFields {
            phi: Field::from_values(grid, phi),
            dphi: Field::from_values(grid, dphi),
            xi: Field::from_values(grid, xi),
            dxi: Field::from_values(grid, dxi),
        }
    }
}

/// Grid samples of a shifted profile and its analytic first derivatives.
#[derive(Debug, Clone)]
pub struct ProfileFields {
    pub phi: Field,
    pub dphi: Field,
    pub xi: Field,
    pub dxi: Field,
}

/// A solitary wave sampled on a grid.
#[derive(Debug, Clone)]
pub struct SolitaryWave {
    c: f64,
    center: f64,
    amplitude: f64,
    decay_rate: f64,
    phi: Field,
    xi: Field,
    shape: Arc<WaveShape>,
}

impl SolitaryWave {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn phi(&self) -> &Field {
        &self.phi
    }

    pub fn xi(&self) -> &Field {
        &self.xi
    }

    pub fn shape(&self) -> &Arc<WaveShape> {
        &self.shape
    }

    pub fn state(&self) -> State {
        State::new(self.phi.clone(), self.xi.clone())
    }
}

/// Construct the solitary wave with speed `c` centered at `center`.
pub fn profile(c: f64, center: f64, grid: &Grid) -> Result<SolitaryWave> {
    let shape = WaveShape::build(c)?;
    profile_from_shape(&shape, center, grid)
}

/// Like [`profile`] but reusing an already built shape.
pub fn profile_from_shape(shape: &Arc<WaveShape>, center: f64, grid: &Grid) -> Result<SolitaryWave> {
    let edge = shape.value(0.5 * grid.length()).0 / shape.amplitude();
    if edge > TAIL_EDGE {
        return Err(Error::TailTruncation {
            tail: edge,
            limit: TAIL_EDGE,
        });
    }
    let fields = shape.sample(grid, center);
    Ok(SolitaryWave {
        c: shape.c(),
        center,
        amplitude: shape.amplitude(),
        decay_rate: shape.decay_rate(),
        phi: fields.phi,
        xi: fields.xi,
        shape: shape.clone(),
    })
}

/// Max-norm residual of the once-integrated traveling-wave equation
///
///   -c phi + c phi'' + (3/2) phi^2 - (1/2)(phi')^2 - phi phi'' + xi + xi^2/2 = 0,
///
/// normalized by c^2. Derivatives are spectral, independent of the quadrature
/// construction.
pub fn stationary_residual(w: &SolitaryWave) -> f64 {
    let c = w.c;
    let phi = &w.phi;
    let dphi = phi.deriv();
    let ddphi = dphi.deriv();
    let xi = &w.xi;
    let n = phi.grid().n();
    let mut worst = 0.0f64;
    for j in 0..n {
        let p = phi.values()[j];
        let dp = dphi.values()[j];
        let pp = ddphi.values()[j];
        let x = xi.values()[j];
        let r = -c * p + c * pp + 1.5 * p * p - 0.5 * dp * dp - p * pp + x + 0.5 * x * x;
        worst = worst.max(r.abs());
    }
    worst / (c * c)
}

/// Specification of an ordered train of solitary waves.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    speeds: Vec<f64>,
    centers: Vec<f64>,
}

impl TrainSpec {
    pub fn new(speeds: Vec<f64>, centers: Vec<f64>) -> Result<TrainSpec> {
        if speeds.is_empty() || speeds.len() != centers.len() {
            return Err(Error::InvalidTrain(format!(
                "need equally many speeds and centers, got {} and {}",
                speeds.len(),
                centers.len()
            )));
        }
        if speeds.iter().any(|&c| !(c > 1.0) || !c.is_finite()) {
            return Err(Error::InvalidTrain("every speed must exceed 1".into()));
        }
        if speeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTrain("speeds must be strictly increasing".into()));
        }
        if centers.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidTrain("centers must be finite".into()));
        }
        if centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTrain("centers must be strictly increasing".into()));
        }
        Ok(TrainSpec { speeds, centers })
    }

    pub fn n_waves(&self) -> usize {
        self.speeds.len()
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Minimum pairwise separation; infinity for a single wave.
    pub fn min_separation(&self) -> f64 {
        self.centers
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// sigma_0 = (1/4) min(c_1, c_2 - c_1, ..., c_N - c_{N-1}).
    pub fn sigma0(&self) -> f64 {
        let mut m = self.speeds[0];
        for w in self.speeds.windows(2) {
            m = m.min(w[1] - w[0]);
        }
        0.25 * m
    }
}

/// Superposed train with per-wave profiles retained.
#[derive(Debug, Clone)]
pub struct Train {
    pub state: State,
    pub waves: Vec<SolitaryWave>,
    /// Set when neighboring waves overlap enough to perturb each other by more
    /// than about 1e-3 of an amplitude at the midpoint between crests.
    pub overlap_warning: bool,
}

/// Superpose the waves of `spec` on `grid`.
pub fn train(spec: &TrainSpec, grid: &Grid) -> Result<Train> {
    let half = 0.5 * grid.length();
    for &x in spec.centers() {
        if x < -half || x >= half {
            return Err(Error::InvalidTrain(format!("center {x} outside the grid")));
        }
    }
    let mut waves = Vec::with_capacity(spec.n_waves());
    for (&c, &x) in spec.speeds().iter().zip(spec.centers()) {
        waves.push(profile(c, x, grid)?);
    }
    let mut state = State::zero(grid);
    for w in &waves {
        state = state.add(&w.state());
    }
    let mut overlap_warning = false;
    for pair in waves.windows(2) {
        let sep = pair[1].center() - pair[0].center();
        let kappa = pair[0].decay_rate().min(pair[1].decay_rate());
        if (-kappa * 0.5 * sep).exp() > 1e-3 {
            overlap_warning = true;
        }
    }
    Ok(Train {
        state,
        waves,
        overlap_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{x_norm, State};
    use crate::util::linear_fit;
    use approx::assert_relative_eq;

    // The c = 5 crest needs spacing around 0.03 to push the spectral residual
    // below 1e-8.
    fn grid() -> Grid {
        Grid::new(4096, 120.0).unwrap()
    }

    const SPEEDS: [f64; 5] = [1.2, 1.5, 2.0, 3.0, 5.0];

    #[test]
    fn rejects_subcritical_speed() {
        let g = grid();
        assert!(matches!(profile(1.0, 0.0, &g), Err(Error::NoSolitaryWave(_))));
        assert!(matches!(profile(0.5, 0.0, &g), Err(Error::NoSolitaryWave(_))));
    }

    #[test]
    fn rejects_too_short_grid() {
        let g = Grid::new(64, 20.0).unwrap();
        assert!(matches!(
            profile(1.2, 0.0, &g),
            Err(Error::TailTruncation { .. })
        ));
    }

    #[test]
    fn amplitude_xi_relation_and_residual() {
        let g = grid();
        for c in SPEEDS {
            let w = profile(c, 0.0, &g).unwrap();
            let a = c - 1.0;
            // crest sits on a grid point, so max phi hits the amplitude
            assert!(
                (w.phi().max() - a).abs() < 1e-8 * a,
                "c={c}: amplitude {} vs {a}",
                w.phi().max()
            );
            // xi (c - phi) = phi pointwise
            let worst = (0..g.n())
                .map(|j| (w.xi().values()[j] * (c - w.phi().values()[j]) - w.phi().values()[j]).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-10, "c={c}: xi relation residual {worst}");
            let r = stationary_residual(&w);
            assert!(r < 1e-8, "c={c}: stationary residual {r}");
        }
    }

    #[test]
    fn xi_at_crest_c2() {
        let g = grid();
        let w = profile(2.0, 0.0, &g).unwrap();
        let jmax = (0..g.n())
            .max_by(|&a, &b| w.phi().values()[a].partial_cmp(&w.phi().values()[b]).unwrap())
            .unwrap();
        assert_relative_eq!(w.xi().values()[jmax], 1.0, max_relative = 1e-8);
    }

    #[test]
    fn tail_decay_rate_matches_fit() {
        let g = grid();
        for c in [2.0, 3.0] {
            let w = profile(c, 0.0, &g).unwrap();
            let a = c - 1.0;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (j, x) in g.points().enumerate() {
                let p = w.phi().values()[j];
                if x > 0.0 && p > 1e-8 * a && p < 1e-3 * a {
                    xs.push(x);
                    ys.push(p.ln());
                }
            }
            let (slope, _) = linear_fit(&xs, &ys);
            let kappa = (c * c - 1.0).sqrt() / c;
            assert!(
                (slope + kappa).abs() < 0.01 * kappa,
                "c={c}: fitted slope {slope} vs -{kappa}"
            );
        }
    }

    #[test]
    fn profile_is_even() {
        let g = grid();
        let w = profile(2.0, 0.0, &g).unwrap();
        let jc = g.n() / 2; // x = 0
        for s in 1..g.n() / 2 {
            let d = (w.phi().values()[jc + s] - w.phi().values()[jc - s]).abs();
            assert!(d < 1e-10, "asymmetry {d} at offset {s}");
        }
    }

    #[test]
    fn amplitude_and_norm_increase_with_c() {
        let g = grid();
        let mut last_amp = 0.0;
        let mut last_norm = 0.0;
        for c in SPEEDS {
            let w = profile(c, 0.0, &g).unwrap();
            let norm = x_norm(&w.state());
            assert!(w.phi().max() > last_amp);
            assert!(norm > last_norm);
            last_amp = w.phi().max();
            last_norm = norm;
        }
    }

    #[test]
    fn impostor_profiles_have_large_residual() {
        let g = grid();
        let w = profile(2.0, 0.0, &g).unwrap();
        // sech^2 impostor of equal amplitude and comparable width
        let kappa = w.decay_rate();
        let fake_phi = g.field_from_fn(|x| 1.0 / (0.5 * kappa * x).cosh().powi(2));
        let fake_xi = fake_phi.map(|p| p / (2.0 - p));
        let fake = SolitaryWave {
            phi: fake_phi,
            xi: fake_xi,
            ..w.clone()
        };
        assert!(stationary_residual(&fake) > 1e-3);

        let scaled = SolitaryWave {
            phi: w.phi().scale(1.05),
            xi: w.xi().scale(1.05),
            ..w.clone()
        };
        assert!(stationary_residual(&scaled) > 1e-3);
    }

    #[test]
    fn x_norm_agrees_with_refined_grid() {
        let coarse = Grid::new(512, 120.0).unwrap();
        let fine = Grid::new(2048, 120.0).unwrap();
        let a = x_norm(&profile(2.0, 0.0, &coarse).unwrap().state());
        let b = x_norm(&profile(2.0, 0.0, &fine).unwrap().state());
        assert_relative_eq!(a, b, max_relative = 1e-8);
    }

    #[test]
    fn train_spec_validation() {
        assert!(TrainSpec::new(vec![2.0, 1.5], vec![-10.0, 10.0]).is_err());
        assert!(TrainSpec::new(vec![0.9, 2.0], vec![-10.0, 10.0]).is_err());
        assert!(TrainSpec::new(vec![2.0, 3.0], vec![10.0, -10.0]).is_err());
        assert!(TrainSpec::new(vec![2.0, 3.0], vec![-10.0]).is_err());
        let s = TrainSpec::new(vec![2.0, 3.0], vec![-20.0, 20.0]).unwrap();
        assert_relative_eq!(s.sigma0(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(s.min_separation(), 40.0, max_relative = 1e-15);
    }

    #[test]
    fn single_wave_train_matches_profile() {
        let g = grid();
        let spec = TrainSpec::new(vec![2.0], vec![5.0]).unwrap();
        let t = train(&spec, &g).unwrap();
        let w = profile(2.0, 5.0, &g).unwrap();
        assert_eq!(t.state.u(), w.phi());
        assert_eq!(t.state.eta(), w.xi());
        assert!(!t.overlap_warning);
    }

    #[test]
    fn well_separated_train_energy_is_additive() {
        let g = Grid::new(2048, 240.0).unwrap();
        let spec = TrainSpec::new(vec![2.0, 3.0], vec![-20.0, 20.0]).unwrap();
        let t = train(&spec, &g).unwrap();
        assert!(!t.overlap_warning);
        let e = |s: &State| 0.5 * x_norm(s) * x_norm(s);
        let e_train = e(&t.state);
        let e_sum = e(&t.waves[0].state()) + e(&t.waves[1].state());
        let sigma0 = spec.sigma0();
        let bound = (-sigma0 * 40.0).exp() * e_sum;
        assert!(
            (e_train - e_sum).abs() <= bound,
            "defect {} vs bound {bound}",
            (e_train - e_sum).abs()
        );
    }

    #[test]
    fn overlapping_train_energy_is_not_additive() {
        let g = Grid::new(2048, 240.0).unwrap();
        let spec = TrainSpec::new(vec![2.0, 3.0], vec![-1.0, 1.0]).unwrap();
        let t = train(&spec, &g).unwrap();
        assert!(t.overlap_warning);
        let e = |s: &State| 0.5 * x_norm(s) * x_norm(s);
        let e_train = e(&t.state);
        let e_sum = e(&t.waves[0].state()) + e(&t.waves[1].state());
        let rel = (e_train - e_sum).abs() / e_sum;
        assert!(rel > 1e-2, "relative cross term {rel}");
        // cross term by bilinearity from the individual profiles
        let w0 = t.waves[0].state();
        let w1 = t.waves[1].state();
        let cross = 2.0 * 0.5
            * (w0.u().inner(w1.u())
                + w0.u().deriv().inner(&w1.u().deriv())
                + w0.eta().inner(w1.eta()));
        assert_relative_eq!(e_train - e_sum, cross, max_relative = 1e-9);
    }

    #[test]
    fn analytic_derivative_matches_spectral() {
        let g = grid();
        let shape = WaveShape::build(2.0).unwrap();
        let f = shape.sample(&g, 3.0);
        let rel = (&f.phi.deriv() - &f.dphi).max_abs() / f.dphi.max_abs();
        assert!(rel < 1e-8, "phi' mismatch {rel}");
        let rel = (&f.xi.deriv() - &f.dxi).max_abs() / f.dxi.max_abs();
        assert!(rel < 1e-8, "xi' mismatch {rel}");
    }
}
