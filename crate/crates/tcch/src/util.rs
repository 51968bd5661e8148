//! Small numerical helpers: Gauss-Legendre panel quadrature and least-squares
//! line fitting.

/// Abscissae of the 10-point Gauss-Legendre rule on [-1, 1] (positive half).
const GL10_NODE: [f64; 5] = [
    0.148874338981631211,
    0.433395394129247191,
    0.679409568299024406,
    0.865063366688984511,
    0.973906528517171720,
];
const GL10_WEIGHT: [f64; 5] = [
    0.295524224714752870,
    0.269266719309996355,
    0.219086362515982044,
    0.149451349150580593,
    0.066671344308688138,
];

/// 10-point Gauss-Legendre quadrature of `f` over a single panel [a, b].
pub fn gauss10(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..5 {
        let d = half * GL10_NODE[i];
        acc += GL10_WEIGHT[i] * (f(mid + d) + f(mid - d));
    }
    acc * half
}

/// Composite Gauss-Legendre quadrature over `panels` equal panels.
pub fn gauss10_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| gauss10(&f, a + p as f64 * h, a + (p + 1) as f64 * h))
        .sum()
}

/// Least-squares line y = slope x + intercept through the given points.
/// Panics on fewer than two points.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
