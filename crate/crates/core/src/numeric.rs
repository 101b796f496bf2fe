//! Small scalar routines shared by the gauge and operator modules.

/// Solves `f(t) = s` for a nondecreasing `f` with `f(0) = 0`.
///
/// The bracket starts at `[0, 1]` and doubles until `f(hi) >= s`; bisection then runs
/// until the bracket collapses to adjacent floats. Returns the bracket end with the
/// smaller residual, or `+inf` when no finite bracket exists.
pub(crate) fn invert_increasing<F: Fn(f64) -> f64>(f: F, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < s {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (f(lo) - s).abs() <= (f(hi) - s).abs() {
        lo
    } else {
        hi
    }
}

/// Ternary search for the maximiser of a unimodal `g` on `[lo, hi]`.
pub(crate) fn ternary_max<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    for _ in 0..iters {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if m1 <= lo || m2 >= hi || m1 >= m2 {
            break;
        }
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let s = 0.5 * (lo + hi);
    (s, g(s))
}

/// `n` logarithmically spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2, "log_grid needs 0 < a < b and n >= 2");
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Relative difference `|x - y| / max(|x|, |y|, floor)`.
pub fn rel_diff(x: f64, y: f64, floor: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(floor)
}

/// Conjugate exponent `p' = p / (p - 1)`.
pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Index of the maximum of `values`; ties keep the first occurrence.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(j) if *v > values[j] => best = Some(i),
            _ => {}
        }
    }
    best
}
