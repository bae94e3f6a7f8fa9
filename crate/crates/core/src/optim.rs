//! Scalar maximization used by the likelihood estimators: coarse grid scan
//! followed by golden-section refinement, plus a five-point stencil for
//! curvature at the maximum.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on [a, b].
/// Returns (argmax, max). Stops when the bracket is narrower than `tol`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

/// Maximize `f` over [lo, hi): evaluate on a uniform grid of `grid_points`,
/// then refine around the best grid point with golden-section search down
/// to `tol`. Handles multimodal f as long as the global maximum's basin is
/// wider than one grid cell.
pub fn grid_then_golden_max<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tol: f64,
) -> (f64, f64) {
    assert!(grid_points >= 2 && hi > lo);
    let step = (hi - lo) / grid_points as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..grid_points {
        let x = lo + i as f64 * step;
        let v = f(x);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let center = lo + best_i as f64 * step;
    // Bracket one cell on each side, clipped to the domain.
    let a = (center - step).max(lo);
    let b = (center + step).min(hi - step * 1e-12);
    let (x, v) = golden_section_max(&f, a, b, tol);
    if v >= best {
        (x, v)
    } else {
        (center, best)
    }
}

/// Five-point central second derivative of `f` at `x` with stencil width
/// `h`; error O(h^4) for smooth f.
pub fn second_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}
