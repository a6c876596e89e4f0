//! One-dimensional minimization helpers shared by the schedulers.
//!
//! The objectives minimized here are not unimodal over their whole domain,
//! so the primitive is an exhaustive grid scan; a golden-section pass then
//! polishes the best grid point within one step of its neighbors.

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Exhaustive scan of `f` over `[lo, hi)` with the given step, followed by a
/// golden-section refinement around the best grid point. Returns `(x, f(x))`.
/// Ties on the grid go to the smallest argument. Returns `None` when the
/// interval is empty.
pub(crate) fn grid_min<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, step: f64) -> Option<(f64, f64)> {
    if !(hi > lo) || step <= 0.0 {
        return None;
    }
    let mut best_x = lo;
    let mut best_v = f(lo);
    let mut k = 1usize;
    loop {
        let x = lo + step * k as f64;
        if x >= hi {
            break;
        }
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
        k += 1;
    }
    // Polish inside one grid step of the winner, staying inside [lo, hi).
    let a = (best_x - step).max(lo);
    let b = (best_x + step).min(hi - f64::EPSILON * hi.abs().max(1.0));
    if b > a {
        let (x, v) = golden_section(f, a, b);
        if v < best_v {
            return Some((x, v));
        }
    }
    Some((best_x, best_v))
}

/// Golden-section search for a local minimum of `f` on `[a, b]`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if b - a < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
