//! Reference computations shared by the integration tests. None of these go
//! through the library's numeric code.

#![allow(dead_code)]

/// Pearson r of small-integer series from exact integer moments.
pub fn exact_pearson(x: &[u8], y: &[u8]) -> f64 {
    let n = x.len() as i64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i64, 0i64, 0i64, 0i64, 0i64);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as i64, b as i64);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let cov = n * sxy - sx * sy;
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0 || vy == 0 {
        return 0.0;
    }
    // vx * vy can exceed 2^53 only for series far longer than the tests use.
    cov as f64 / ((vx as f64) * (vy as f64)).sqrt()
}

/// Textbook two-pass Pearson r.
pub fn two_pass_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Paired t statistic `mean(d) / (sd(d) / sqrt(n))` with `d = xs - ys`.
pub fn textbook_paired_t(xs: &[f64], ys: &[f64]) -> f64 {
    let d: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    mean / (var.sqrt() / n.sqrt())
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson over `[a, b]` with a tolerance relative to a coarse
/// estimate of the integral.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    // Coarse 64-panel estimate to scale the tolerance.
    let panels = 64;
    let h = (b - a) / panels as f64;
    let coarse: f64 = (0..panels)
        .map(|i| {
            let x0 = a + i as f64 * h;
            h / 6.0 * (f(x0) + 4.0 * f(x0 + h / 2.0) + f(x0 + h))
        })
        .sum();
    let tol = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    adaptive(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

/// `\int_a^\infty f` through `x = a + u / (1 - u)`. `at_infinity` is the
/// limit of the transformed integrand as `u -> 1`.
fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, at_infinity: f64, rel_tol: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            at_infinity
        } else {
            let w = 1.0 - u;
            f(a + u / w) / (w * w)
        }
    };
    integrate(&g, 0.0, 1.0, rel_tol)
}

/// Two-sided Student-t tail `P(|T| > |t|)` by quadrature of the
/// unnormalized density, normalized by its own integral. No gamma or beta
/// functions involved.
pub fn t_two_sided_quadrature(t: f64, df: u64) -> f64 {
    let nu = df as f64;
    let a = t.abs();
    // ln k(x) - ln k(a), written so it does not cancel.
    let log_ratio = |x: f64| -(nu + 1.0) / 2.0 * ((x - a) * (x + a) / (nu + a * a)).ln_1p();
    let log_at_a = -(nu + 1.0) / 2.0 * (a * a / nu).ln_1p();
    // The transformed integrand tends to nu^((nu+1)/2) x^(1-nu) / k(a), nonzero only for nu = 1.
    let tail_limit = if df == 1 { 1.0 + a * a } else { 0.0 };
    let half_limit = if df == 1 { 1.0 } else { 0.0 };
    let tail = integrate_to_infinity(&|x| log_ratio(x).exp(), a, tail_limit, 1e-13);
    let half = integrate_to_infinity(&|x| (-(nu + 1.0) / 2.0 * (x * x / nu).ln_1p()).exp(), 0.0, half_limit, 1e-13);
    log_at_a.exp() * tail / half
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Smallest and largest counts `k` with the binomial(n, p) probability
/// below `k` and above `k` each at most `alpha / 2`.
pub fn binomial_acceptance_region(n: u64, p: f64, alpha: f64) -> (u64, u64) {
    // pmf by the recurrence pmf(k+1) = pmf(k) (n-k)/(k+1) p/(1-p).
    let mut pmf = vec![(1.0 - p).powi(n as i32)];
    for k in 0..n {
        let next = pmf[k as usize] * (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
        pmf.push(next);
    }
    let mut lo = 0;
    let mut below = 0.0;
    while below + pmf[lo as usize] <= alpha / 2.0 {
        below += pmf[lo as usize];
        lo += 1;
    }
    let mut hi = n;
    let mut above = 0.0;
    while above + pmf[hi as usize] <= alpha / 2.0 {
        above += pmf[hi as usize];
        hi -= 1;
    }
    (lo, hi)
}
