//! Hessian of cE - F at a solitary wave and certification of its coercivity
//! on the subspace orthogonal to the wave and its translation direction.
//!
//! The operator acts on pairs (psi, omega) as
//!
//!   H (psi, omega) = (L_c psi - (c/(c - phi)) omega,
//!                     -(c/(c - phi)) psi + (c - phi) omega),
//!   L_c = -dx((c - phi) dx) - 3 phi + phi'' + c.
//!
//! The constrained minimum eigenvalue is computed relative to the X-norm: with
//! G the X Gram operator and S = G^{-1/2} (a Fourier multiplier), the pencil
//! reduces to the symmetric matrix S M S, projected onto the complement of the
//! transformed constraint vectors and shifted on the constraint span so the
//! smallest eigenvalue of the projected matrix is the constrained minimum.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::wave::SolitaryWave;
use nalgebra::{DMatrix, DVector};

/// Dense-free representation of the Hessian at a wave.
#[derive(Debug, Clone)]
pub struct HessianOperator {
    c: f64,
    /// c - phi (strictly positive).
    gap: Field,
    /// -3 phi + phi'' + c.
    diag: Field,
    /// c / (c - phi).
    off: Field,
}

impl HessianOperator {
    pub fn new(w: &SolitaryWave) -> HessianOperator {
        let c = w.c();
        let phi = w.phi();
        let ddphi = phi.deriv().deriv();
        HessianOperator {
            c,
            gap: phi.map(|p| c - p),
            diag: phi.binary(&ddphi, |p, pp| -3.0 * p + pp + c),
            off: phi.map(|p| c / (c - p)),
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn grid(&self) -> &Grid {
        self.gap.grid()
    }

    /// Apply the operator to a pair of fields.
    pub fn apply(&self, psi: &Field, omega: &Field) -> (Field, Field) {
        let flux = (&self.gap * &psi.deriv()).deriv().scale(-1.0);
        let top = &(&flux + &(&self.diag * psi)) - &(&self.off * omega);
        let bottom = &(&self.gap * omega) - &(&self.off * psi);
        (top, bottom)
    }

    /// <H a, b> in the L^2 x L^2 pairing.
    pub fn inner(&self, a: (&Field, &Field), b: (&Field, &Field)) -> f64 {
        let (ha, hb) = self.apply(a.0, a.1);
        ha.inner(b.0) + hb.inner(b.1)
    }
}

/// The weighted quadratic form
///
///   Lambda = int Theta((c - phi)(dx psi)^2 + (-3 phi + phi'' + c) psi^2)
///          + dx phi Theta' psi^2 - 2 Theta (c/(c - phi)) psi omega
///          + Theta (c - phi) omega^2 dx.
///
/// `dtheta` is the analytic derivative of the weight (weights built from the
/// step function are not periodic, so spectral differentiation of Theta is
/// not an option). Fails on a non-positive weight.
pub fn quadratic_form_lambda(
    h: &HessianOperator,
    theta: &Field,
    dtheta: &Field,
    psi: &Field,
    omega: &Field,
) -> Result<f64> {
    if theta.min() <= 0.0 {
        return Err(Error::NonPositiveWeight);
    }
    let grid = theta.grid();
    let dpsi = psi.deriv();
    let dphi = h.gap.deriv().scale(-1.0); // gap = c - phi
    let mut acc = 0.0;
    for j in 0..grid.n() {
        let th = theta.values()[j];
        let p = psi.values()[j];
        let dp = dpsi.values()[j];
        let om = omega.values()[j];
        acc += th
            * (self_gap(h, j) * dp * dp + h.diag.values()[j] * p * p
                - 2.0 * h.off.values()[j] * p * om
                + self_gap(h, j) * om * om)
            + dphi.values()[j] * dtheta.values()[j] * p * p;
    }
    Ok(acc * grid.spacing())
}

fn self_gap(h: &HessianOperator, j: usize) -> f64 {
    h.gap.values()[j]
}

/// Result of checking the weight admissibility inequality
/// |Theta'^2/(4 Theta)| + c |Theta'| + |Theta''/2| <= min{1/4, C_delta/(4c)} Theta.
#[derive(Debug, Clone)]
pub struct WeightConditionReport {
    /// max over the grid of lhs / (min{1/4, C_delta/(4c)} Theta).
    pub max_ratio: f64,
    pub satisfied: bool,
}

pub fn weight_condition_check(
    theta: &Field,
    dtheta: &Field,
    ddtheta: &Field,
    c: f64,
    c_delta: f64,
) -> WeightConditionReport {
    let cap = 0.25f64.min(c_delta / (4.0 * c));
    let mut max_ratio = 0.0f64;
    for j in 0..theta.grid().n() {
        let th = theta.values()[j];
        let d1 = dtheta.values()[j];
        let d2 = ddtheta.values()[j];
        let lhs = (d1 * d1 / (4.0 * th)).abs() + c * d1.abs() + (0.5 * d2).abs();
        max_ratio = max_ratio.max(lhs / (cap * th));
    }
    WeightConditionReport {
        max_ratio,
        satisfied: max_ratio <= 1.0,
    }
}

/// Certified spectral data of the Hessian at one wave and grid.
#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub c: f64,
    pub n: usize,
    pub length: f64,
    /// Smallest eigenvalue of the Hessian relative to the X-norm on the
    /// subspace orthogonal to both constraint vectors; the empirical C_delta.
    pub lambda_min: f64,
    /// Smallest |eigenvalue| / largest |eigenvalue| of the unconstrained
    /// pencil (the translation mode should make this nearly zero).
    pub zero_mode_ratio: f64,
    /// |H (dx phi, dx xi)|_{L^2} / (spectral scale * |(dx phi, dx xi)|_{L^2}).
    pub zero_mode_residual: f64,
    /// lambda_min estimates when the orthogonality is relaxed to
    /// |<q_i, psi>| <= delta |psi|_X, at the sampled deltas.
    pub relaxed: Vec<(f64, f64)>,
}

/// Dense matrix of a linear field operator, built column by column.
fn operator_matrix(grid: &Grid, op: impl Fn(&Field) -> Field) -> DMatrix<f64> {
    let n = grid.n();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = op(&Field::from_values(grid, e));
        for i in 0..n {
            m[(i, j)] = col.values()[i];
        }
    }
    m
}

/// Compute the constrained spectrum report for one wave.
pub fn constrained_spectrum(w: &SolitaryWave) -> Result<CoercivityReport> {
    let grid = w.phi().grid().clone();
    let n = grid.n();
    let h = HessianOperator::new(w);

    let d = operator_matrix(&grid, |f| f.deriv());
    let su = operator_matrix(&grid, |f| f.helmholtz_inverse_sqrt());

    // M11 = D^T diag(c - phi) D + diag(-3 phi + phi'' + c); D^T = -D
    let mut wd = d.clone();
    for i in 0..n {
        let g = h.gap.values()[i];
        for j in 0..n {
            wd[(i, j)] *= g;
        }
    }
    let mut m11 = -(&d * &wd);
    for i in 0..n {
        m11[(i, i)] += h.diag.values()[i];
    }

    // Btilde = S M S with S = blockdiag(Su, I)
    let b11 = &su * &(&m11 * &su);
    let mut b12 = DMatrix::zeros(n, n); // Su * diag(-off)
    for i in 0..n {
        for j in 0..n {
            b12[(i, j)] = -su[(i, j)] * h.off.values()[j];
        }
    }
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    b.view_mut((0, 0), (n, n)).copy_from(&b11);
    b.view_mut((0, n), (n, n)).copy_from(&b12);
    b.view_mut((n, 0), (n, n)).copy_from(&b12.transpose());
    for i in 0..n {
        b[(n + i, n + i)] = h.gap.values()[i];
    }
    // clean rounding asymmetry
    let b = (&b + &b.transpose()).scale(0.5);

    // transformed constraint vectors q = S ((1 - dxx) phi, xi) and its
    // x-derivative counterpart
    let make_q = |fu: &Field, fe: &Field| {
        let tu = fu.helmholtz_inverse_sqrt();
        let mut v = DVector::zeros(2 * n);
        for i in 0..n {
            v[i] = tu.values()[i];
            v[n + i] = fe.values()[i];
        }
        v
    };
    let q1 = make_q(&w.phi().helmholtz(), w.xi());
    let q2 = make_q(&w.phi().deriv().helmholtz(), &w.xi().deriv());
    // orthonormalize
    let e1 = q1.normalize();
    let mut e2 = &q2 - &e1.scale(e1.dot(&q2));
    e2 = e2.normalize();

    let unconstrained =
        nalgebra::SymmetricEigen::new(b.clone());
    let mut abs_min = f64::INFINITY;
    let mut abs_max = 0.0f64;
    for &l in unconstrained.eigenvalues.iter() {
        abs_min = abs_min.min(l.abs());
        abs_max = abs_max.max(l.abs());
    }
    if !abs_max.is_finite() || abs_max == 0.0 {
        return Err(Error::EigenFailure("degenerate unconstrained spectrum".into()));
    }

    // project out the constraint span and park it at a large positive shift
    let mu = 2.0 * abs_max;
    let b_orig = b.clone();
    let mut pbp = b;
    for q in [&e1, &e2] {
        // P A P with P = I - q q^T, then + mu q q^T, done incrementally:
        // A <- A - q (q^T A) - (A q) q^T + (q^T A q) q q^T + mu q q^T
        let aq = &pbp * q;
        let qaq = q.dot(&aq);
        let qt = q.transpose();
        pbp -= &aq * &qt;
        pbp -= q * aq.transpose();
        pbp += (q * &qt).scale(qaq + mu);
    }
    let pbp = (&pbp + &pbp.transpose()).scale(0.5);
    let constrained = nalgebra::SymmetricEigen::new(pbp.clone());
    let mut lambda_min = f64::INFINITY;
    let mut v_min = DVector::zeros(2 * n);
    for (i, &l) in constrained.eigenvalues.iter().enumerate() {
        if l < lambda_min {
            lambda_min = l;
            v_min = constrained.eigenvectors.column(i).into_owned();
        }
    }
    if !lambda_min.is_finite() {
        return Err(Error::EigenFailure("non-finite constrained eigenvalue".into()));
    }

    // translation zero mode applied through the field operator
    let tphi = w.phi().deriv();
    let txi = w.xi().deriv();
    let (hu, he) = h.apply(&tphi, &txi);
    let tn = (tphi.inner(&tphi) + txi.inner(&txi)).sqrt();
    let hn = (hu.inner(&hu) + he.inner(&he)).sqrt();
    let zero_mode_residual = hn / (abs_max * tn);

    // continuity of lambda_min under relaxed orthogonality: sweep mixtures of
    // the constrained minimizer with the constraint directions, with the
    // Rayleigh quotient taken in the original (unprojected) form
    let mut relaxed = Vec::new();
    for delta in [1e-3, 1e-2] {
        let mut best = f64::INFINITY;
        for step in 0..32 {
            let ang = std::f64::consts::PI * step as f64 / 16.0;
            let v = &v_min + &(e1.scale(ang.cos() * delta) + e2.scale(ang.sin() * delta));
            let r = v.dot(&(&b_orig * &v)) / v.dot(&v);
            best = best.min(r);
        }
        relaxed.push((delta, best));
    }

    Ok(CoercivityReport {
        c: w.c(),
        n,
        length: grid.length(),
        lambda_min,
        zero_mode_ratio: abs_min / abs_max,
        zero_mode_residual,
        relaxed,
    })
}
