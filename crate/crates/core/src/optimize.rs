//! One-dimensional minimization helpers.

/// Result of a scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub argmin: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search on `[lo, hi]` for a unimodal `f`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> ScalarMin {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut evals = 2;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > tol * (1.0 + x1.abs().max(x2.abs())) && evals < 500 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 <= f2 {
        ScalarMin { argmin: x1, value: f1, evaluations: evals }
    } else {
        ScalarMin { argmin: x2, value: f2, evaluations: evals }
    }
}

/// Minimizes `f` over `x > 0` by golden-section search in `ln x`, starting from `guess`.
///
/// A bracket is found by stepping downhill in `ln x` with growing steps, so `f` must be
/// unimodal in `ln x`. Returns `None` if the walk leaves a window of 200 e-folds around
/// the guess (the infimum sits at `0` or `∞`).
pub fn minimize_positive<F: FnMut(f64) -> f64>(mut f: F, guess: f64) -> Option<ScalarMin> {
    let mut g = |u: f64| f(u.exp());
    let start = guess.max(f64::MIN_POSITIVE).ln();
    let mut evals = 3;
    let (fm, fl, fr) = (g(start), g(start - 1.0), g(start + 1.0));
    let (lo, hi) = if fl >= fm && fr >= fm {
        (start - 1.0, start + 1.0)
    } else {
        let dir = if fl < fr { -1.0 } else { 1.0 };
        let (mut prev, mut cur, mut f_cur) = (start, start + dir, fl.min(fr));
        let mut step = 1.0;
        loop {
            step *= 1.6;
            let next = cur + dir * step;
            let f_next = g(next);
            evals += 1;
            if f_next >= f_cur {
                break (prev.min(next), prev.max(next));
            }
            if (next - start).abs() > 200.0 {
                return None;
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
        }
    };
    let mut m = golden_section(&mut g, lo, hi, 1e-13);
    m.argmin = m.argmin.exp();
    m.evaluations += evals;
    Some(m)
}
