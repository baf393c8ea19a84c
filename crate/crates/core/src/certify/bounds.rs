//! Exact one-sided Clopper–Pearson bounds on binomial proportions.

use statrs::function::beta::beta_reg;

const BISECTION_STEPS: usize = 200;

/// Largest `p` with `P[Bin(n, p) >= k] <= alpha`: a one-sided lower
/// confidence bound at level `1 − alpha` for `k` successes in `n` trials.
pub fn clopper_pearson_lower(k: u64, n: u64, alpha: f64) -> f64 {
    assert!(k <= n && n > 0, "need 0 <= k <= n, n > 0");
    if k == 0 {
        return 0.0;
    }
    if k == n {
        return alpha.powf(1.0 / n as f64);
    }
    // P[Bin(n, p) >= k] = I_p(k, n − k + 1), increasing in p
    let tail = |p: f64| beta_reg(k as f64, (n - k + 1) as f64, p);
    bisect(|p| tail(p) <= alpha, true)
}

/// Smallest `p` with `P[Bin(n, p) <= k] <= alpha`: a one-sided upper
/// confidence bound at level `1 − alpha`.
pub fn clopper_pearson_upper(k: u64, n: u64, alpha: f64) -> f64 {
    assert!(k <= n && n > 0, "need 0 <= k <= n, n > 0");
    if k == n {
        return 1.0;
    }
    if k == 0 {
        return 1.0 - alpha.powf(1.0 / n as f64);
    }
    // P[Bin(n, p) <= k] = 1 − I_p(k + 1, n − k), decreasing in p
    let cdf = |p: f64| 1.0 - beta_reg((k + 1) as f64, (n - k) as f64, p);
    bisect(|p| cdf(p) > alpha, false)
}

/// Bisection for the boundary of a predicate that is true on `[0, t)` and
/// false on `(t, 1]`. Returns the last point known true when `want_low`,
/// else the first point known false, so the answer errs conservatively.
fn bisect(pred: impl Fn(f64) -> bool, want_low: bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if want_low {
        lo
    } else {
        hi
    }
}
