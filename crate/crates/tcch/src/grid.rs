//! Periodic spatial discretization with spectral differentiation and the
//! smoothing inverse (1 - dxx)^{-1}, plus the norms and inner products of the
//! energy space X = H^1 x L^2.
//!
//! The real line is approximated by a periodic interval [-length/2, length/2);
//! all integrals use the periodic trapezoid rule, which is spectrally accurate
//! for smooth periodic integrands.

use crate::error::{Error, Result};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

struct GridInner {
    n: usize,
    length: f64,
    /// Angular wavenumbers in FFT ordering: k_m = 2 pi m / length,
    /// m = 0, 1, ..., n/2-1, -n/2, ..., -1.
    wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Periodic 1-D computational grid. Cheap to clone and share.
#[derive(Clone)]
pub struct Grid(Arc<GridInner>);

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.0.n)
            .field("length", &self.0.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n && self.0.length == other.0.length
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Grid> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 16, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut wavenumbers = Vec::with_capacity(n);
        for j in 0..n {
            let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            wavenumbers.push(2.0 * std::f64::consts::PI * m / length);
        }
        Ok(Grid(Arc::new(GridInner { n, length, wavenumbers, fwd, inv })))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn length(&self) -> f64 {
        self.0.length
    }

    pub fn spacing(&self) -> f64 {
        self.0.length / self.0.n as f64
    }

    /// Sample point x_j = -length/2 + j * spacing.
    pub fn point(&self, j: usize) -> f64 {
        -0.5 * self.0.length + j as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.0.n).map(move |j| self.point(j))
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.0.wavenumbers
    }

    /// Signed distance from `x` to `center` on the circle (minimal image).
    pub fn wrapped_distance(&self, x: f64, center: f64) -> f64 {
        let l = self.0.length;
        let mut d = (x - center) % l;
        if d < -0.5 * l {
            d += l;
        } else if d >= 0.5 * l {
            d -= l;
        }
        d
    }

    /// Build a field by evaluating `f` at every sample point.
    pub fn field_from_fn(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.clone(),
            values: self.points().map(f).collect(),
        }
    }

    pub fn zero_field(&self) -> Field {
        Field {
            grid: self.clone(),
            values: vec![0.0; self.0.n],
        }
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.0.fwd.process(&mut buf);
        buf
    }

    pub(crate) fn inverse(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        self.0.inv.process(&mut spec);
        let scale = 1.0 / self.0.n as f64;
        spec.into_iter().map(|c| c.re * scale).collect()
    }

    /// Multiplier for d/dx in FFT ordering; the Nyquist mode is zeroed, the
    /// standard convention for differentiating real data.
    pub(crate) fn deriv_multiplier(&self, j: usize) -> Complex<f64> {
        if j == self.0.n / 2 {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, self.0.wavenumbers[j])
        }
    }
}

/// Real scalar field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

fn assert_same_grid(a: &Grid, b: &Grid) {
    assert!(a == b, "fields live on different grids");
}

impl Field {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Field {
        assert_eq!(values.len(), grid.n(), "value count must match the grid");
        Field { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Spectral derivative: i k_m per Fourier mode; exact for band-limited data.
    pub fn deriv(&self) -> Field {
        let mut spec = self.grid.forward(&self.values);
        for (j, c) in spec.iter_mut().enumerate() {
            *c *= self.grid.deriv_multiplier(j);
        }
        Field {
            grid: self.grid.clone(),
            values: self.grid.inverse(spec),
        }
    }

    /// (1 - dxx)^{-1} via the Fourier multiplier 1/(1 + k_m^2); equals periodic
    /// convolution with the periodized kernel p(x) = e^{-|x|}/2.
    pub fn helmholtz_inverse(&self) -> Field {
        self.fourier_multiplier(|k| 1.0 / (1.0 + k * k))
    }

    /// (1 - dxx), the inverse of [`Field::helmholtz_inverse`].
    pub fn helmholtz(&self) -> Field {
        self.fourier_multiplier(|k| 1.0 + k * k)
    }

    /// (1 - dxx)^{-1/2} with dxx realized as the square of the discrete
    /// derivative (Nyquist mode zeroed), so it is the exact inverse square
    /// root of the H^1-part Gram operator used by the X-norm.
    pub fn helmholtz_inverse_sqrt(&self) -> Field {
        let mut spec = self.grid.forward(&self.values);
        for (j, c) in spec.iter_mut().enumerate() {
            let k = self.grid.deriv_multiplier(j).im;
            *c *= 1.0 / (1.0 + k * k).sqrt();
        }
        Field {
            grid: self.grid.clone(),
            values: self.grid.inverse(spec),
        }
    }

    pub fn fourier_multiplier(&self, m: impl Fn(f64) -> f64) -> Field {
        let mut spec = self.grid.forward(&self.values);
        for (j, c) in spec.iter_mut().enumerate() {
            *c *= m(self.grid.wavenumbers()[j]);
        }
        Field {
            grid: self.grid.clone(),
            values: self.grid.inverse(spec),
        }
    }

    /// Zero every mode with |m| > n/3 (the 2/3 dealiasing rule).
    pub fn dealias(&self) -> Field {
        let n = self.grid.n();
        let cutoff = n / 3;
        let mut spec = self.grid.forward(&self.values);
        for (j, c) in spec.iter_mut().enumerate() {
            let m = if j <= n / 2 { j } else { n - j };
            if m > cutoff {
                *c = Complex::new(0.0, 0.0);
            }
        }
        Field {
            grid: self.grid.clone(),
            values: self.grid.inverse(spec),
        }
    }

    /// Periodic trapezoid quadrature of this field.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    /// Quadrature of the pointwise product of two fields.
    pub fn inner(&self, other: &Field) -> f64 {
        assert_same_grid(&self.grid, &other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.spacing()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn binary(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_same_grid(&self.grid, &other.grid);
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl std::ops::Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.binary(rhs, |a, b| a + b)
    }
}

impl std::ops::Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.binary(rhs, |a, b| a - b)
    }
}

impl std::ops::Mul<&Field> for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        self.binary(rhs, |a, b| a * b)
    }
}

/// The pair (u, eta): horizontal velocity and surface deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    u: Field,
    eta: Field,
}

impl State {
    pub fn new(u: Field, eta: Field) -> State {
        assert_same_grid(u.grid(), eta.grid());
        State { u, eta }
    }

    pub fn zero(grid: &Grid) -> State {
        State {
            u: grid.zero_field(),
            eta: grid.zero_field(),
        }
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn eta(&self) -> &Field {
        &self.eta
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.eta.is_finite()
    }

    /// min over the grid of 1 + eta; evolution is physically valid while this
    /// stays positive.
    pub fn min_one_plus_eta(&self) -> f64 {
        1.0 + self.eta.min()
    }

    pub fn add(&self, other: &State) -> State {
        State::new(&self.u + &other.u, &self.eta + &other.eta)
    }

    pub fn sub(&self, other: &State) -> State {
        State::new(&self.u - &other.u, &self.eta - &other.eta)
    }

    pub fn scale(&self, s: f64) -> State {
        State::new(self.u.scale(s), self.eta.scale(s))
    }
}

/// X = H^1 x L^2 inner product: int (u_a u_b + u_a' u_b' + eta_a eta_b) dx.
pub fn x_inner(a: &State, b: &State) -> f64 {
    assert_same_grid(a.grid(), b.grid());
    a.u().inner(b.u()) + a.u().deriv().inner(&b.u().deriv()) + a.eta().inner(b.eta())
}

pub fn x_norm(s: &State) -> f64 {
    x_inner(s, s).sqrt()
}

/// L^2 x L^2 pairing: int (u_a u_b + eta_a eta_b) dx.
pub fn l2_pair(a: &State, b: &State) -> f64 {
    assert_same_grid(a.grid(), b.grid());
    a.u().inner(b.u()) + a.eta().inner(b.eta())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(128, 50.0).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(8, 10.0).is_err());
        assert!(Grid::new(100, 10.0).is_err()); // not a power of two
        assert!(Grid::new(64, -1.0).is_err());
        assert!(Grid::new(64, f64::NAN).is_err());
    }

    #[test]
    fn deriv_single_mode_is_exact() {
        let g = grid();
        let k = 2.0 * PI / g.length();
        let f = g.field_from_fn(|x| (k * x).sin());
        let expect = g.field_from_fn(|x| k * (k * x).cos());
        let d = f.deriv();
        let err = (&d - &expect).max_abs();
        assert!(err < 1e-12, "max abs error {err}");
    }

    #[test]
    fn deriv_of_constant_is_zero() {
        let g = grid();
        let f = g.field_from_fn(|_| 3.25);
        assert!(f.deriv().max_abs() < 1e-13);
    }

    #[test]
    fn deriv_matches_finite_difference_oracle() {
        // f = exp(cos(2 pi x / L)); Richardson-extrapolated centered differences
        // bound the truncation error of the h-difference; the spectral result
        // must land within that band around the h/2 estimate.
        let g = Grid::new(256, 50.0).unwrap();
        let k = 2.0 * PI / g.length();
        let f = |x: f64| (k * x).cos().exp();
        let d = g.field_from_fn(f).deriv();
        let h = g.spacing();
        for (j, x) in g.points().enumerate() {
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            let d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
            // error of d2 is ~ (d1 - d2)/3 by 2nd-order Richardson
            let band = (d1 - d2).abs() / 3.0 * 1.5 + 1e-11;
            assert!(
                (d.values()[j] - d2).abs() <= band,
                "x={x}: spectral {} vs fd {} band {band}",
                d.values()[j],
                d2
            );
        }
    }

    #[test]
    fn helmholtz_inverse_eigenfunction() {
        let g = grid();
        let k = 2.0 * PI * 4.0 / g.length();
        let f = g.field_from_fn(|x| (k * x).cos());
        let expect = f.scale(1.0 / (1.0 + k * k));
        assert!((&f.helmholtz_inverse() - &expect).max_abs() < 1e-13);
    }

    #[test]
    fn helmholtz_inverse_of_one_is_one() {
        let g = grid();
        let f = g.field_from_fn(|_| 1.0);
        assert!((&f.helmholtz_inverse() - &f).max_abs() < 1e-13);
    }

    /// Composite 10-point Gauss-Legendre quadrature of `f` over [a, b].
    fn gauss_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        const NODE: [f64; 5] = [
            0.148874338981631211,
            0.433395394129247191,
            0.679409568299024406,
            0.865063366688984511,
            0.973906528517171720,
        ];
        const WEIGHT: [f64; 5] = [
            0.295524224714752870,
            0.269266719309996355,
            0.219086362515982044,
            0.149451349150580593,
            0.066671344308688138,
        ];
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for i in 0..5 {
                let d = 0.5 * h * NODE[i];
                acc += WEIGHT[i] * (f(mid + d) + f(mid - d));
            }
        }
        acc * 0.5 * h
    }

    #[test]
    fn helmholtz_inverse_matches_kernel_convolution() {
        // Oracle: continuous convolution with the periodized kernel e^{-|x|}/2,
        // quadrature split at the kernel kink so each piece is smooth. The test
        // field is band-limited, so grid sampling loses nothing.
        let g = Grid::new(256, 100.0).unwrap();
        let l = g.length();
        let f = |x: f64| (2.0 * PI * x / l).sin() + 0.5 * (2.0 * PI * 3.0 * x / l).cos();
        let hi = g.field_from_fn(f).helmholtz_inverse();
        // periodized kernel: sum_m e^{-|d + m L|}/2 = cosh(L/2 - |d|)/(2 sinh(L/2))
        let kernel = |d: f64| 0.5 * (0.5 * l - d.abs()).cosh() / (0.5 * l).sinh();
        for (j, x) in g.points().enumerate().step_by(17) {
            let integrand = |y: f64| kernel(g.wrapped_distance(x, y)) * f(y);
            let acc = gauss_integrate(integrand, x - 0.5 * l, x, 200)
                + gauss_integrate(integrand, x, x + 0.5 * l, 200);
            let rel = (acc - hi.values()[j]).abs() / hi.values()[j].abs().max(1e-3);
            assert!(rel < 1e-8, "x={x}: conv {acc} vs spectral {}", hi.values()[j]);
        }
    }

    #[test]
    fn multipliers_commute() {
        let g = grid();
        let f = g.field_from_fn(|x| (2.0 * PI * 3.0 * x / g.length()).sin() + 0.3);
        let a = f.helmholtz_inverse().deriv();
        let b = f.deriv().helmholtz_inverse();
        let rel = (&a - &b).max_abs() / a.max_abs().max(1e-30);
        assert!(rel < 1e-12);
    }

    #[test]
    fn helmholtz_inverse_preserves_positivity() {
        let g = Grid::new(256, 100.0).unwrap();
        for shift in [0.0, 1.3, 2.7] {
            let f = g.field_from_fn(|x| (-(x - shift) * (x - shift) / 4.0).exp());
            let hi = f.helmholtz_inverse();
            assert!(hi.min() > -1e-10, "min {}", hi.min());
        }
    }

    #[test]
    fn convolution_square_inequality() {
        // (p * eta)^2 <= p * eta^2 pointwise, Cauchy-Schwarz against the unit-mass
        // kernel p = e^{-|x|}/2; sharp for constant eta.
        let g = Grid::new(256, 100.0).unwrap();
        let fields = [
            g.field_from_fn(|x| {
                (2.0 * PI * x / g.length()).sin() - 0.4 * (2.0 * PI * 5.0 * x / g.length()).cos()
            }),
            g.field_from_fn(|_| 1.0),
            g.field_from_fn(|x| (-x * x / 8.0).exp() - 0.3),
        ];
        for eta in &fields {
            let lhs = eta.helmholtz_inverse();
            let rhs = (eta * eta).helmholtz_inverse();
            for j in 0..g.n() {
                assert!(
                    lhs.values()[j] * lhs.values()[j] <= rhs.values()[j] + 1e-10,
                    "violation at index {j}"
                );
            }
        }
    }

    #[test]
    fn x_norm_one_mode_parseval() {
        let g = grid();
        let k = 2.0 * PI / g.length();
        let s = State::new(g.field_from_fn(|x| (k * x).sin()), g.zero_field());
        let expect = 0.5 * g.length() * (1.0 + k * k);
        assert_relative_eq!(x_inner(&s, &s), expect, max_relative = 1e-12);
    }

    #[test]
    fn x_norm_zero_state() {
        let g = grid();
        assert_eq!(x_norm(&State::zero(&g)), 0.0);
    }

    #[test]
    #[should_panic(expected = "different grids")]
    fn grid_mismatch_rejected() {
        let a = Grid::new(64, 10.0).unwrap().zero_field();
        let b = Grid::new(64, 20.0).unwrap().zero_field();
        let _ = &a + &b;
    }
}
