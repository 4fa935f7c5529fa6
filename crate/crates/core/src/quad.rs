//! Composite trapezoid helpers on uniform grids.

use crate::scalar::Scalar;

/// Composite trapezoid rule for samples spaced `h` apart.
pub fn trapezoid_uniform<S: Scalar>(values: &[S], h: S) -> S {
    match values.len() {
        0 | 1 => S::zero(),
        n => {
            let half = S::lit(0.5);
            let inner = values[1..n - 1].iter().fold(S::zero(), |acc, &v| acc + v);
            h * (half * (values[0] + values[n - 1]) + inner)
        }
    }
}

/// Running trapezoid integral where each segment may use distinct one-sided
/// endpoint values: `right[k]` is the integrand leaving node `k`, `left[k]`
/// the integrand arriving at node `k`. Returns `I` with `I[0] = 0`.
pub fn cumulative_one_sided<S: Scalar>(right: &[S], left: &[S], h: S) -> Vec<S> {
    debug_assert_eq!(right.len(), left.len());
    let half = S::lit(0.5) * h;
    let mut out = Vec::with_capacity(right.len());
    let mut acc = S::zero();
    out.push(acc);
    for k in 1..right.len() {
        acc = acc + half * (right[k - 1] + left[k]);
        out.push(acc);
    }
    out
}
