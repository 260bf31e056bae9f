//! Numerical kernel: compensated reductions, Pearson's r and the two-sided
//! Student-t tail probability.
//!
//! Everything here is implemented in-crate so p-values are bit-reproducible
//! across platforms and dependency upgrades.

use serde::Serialize;

use crate::error::{Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Arithmetic mean. `NaN` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().copied().collect::<CompensatedSum>().value() / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator, computed in two
/// passes over compensated sums. Returns 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = xs.iter().map(|x| (x - m) * (x - m)).collect::<CompensatedSum>().value();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Pearson product-moment correlation.
///
/// Returns 0 when either input has zero variance: the coefficient is
/// undefined there and 0 stands for "no estimable linear relationship".
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { have: x.len(), need: 2 });
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = CompensatedSum::new();
    let mut sxx = CompensatedSum::new();
    let mut syy = CompensatedSum::new();
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let (sxx, syy) = (sxx.value(), syy.value());
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(0.0);
    }
    Ok((sxy.value() / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// A probability produced by [`t_sf`]; always within `[0, 1]` for finite or
/// infinite `t`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct TailProbability(f64);

impl TailProbability {
    /// Evaluation method, echoed in reports.
    pub const METHOD: &'static str = "regularized incomplete beta, modified Lentz continued fraction";

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<TailProbability> for f64 {
    fn from(p: TailProbability) -> f64 {
        p.0
    }
}

/// Two-sided tail probability `P(|T| >= |t|)` for Student's t with `df`
/// degrees of freedom, via `I_{df/(df+t^2)}(df/2, 1/2)`.
///
/// # Panics
///
/// Panics if `df == 0`.
pub fn t_sf(t: f64, df: u64) -> TailProbability {
    assert!(df >= 1, "t distribution needs at least one degree of freedom");
    if t.is_nan() {
        return TailProbability(f64::NAN);
    }
    if t == 0.0 {
        return TailProbability(1.0);
    }
    if t.is_infinite() {
        return TailProbability(0.0);
    }
    let nu = df as f64;
    let t2 = t * t;
    // x = nu / (nu + t^2) and its complement, both formed without cancellation.
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    let p = inc_beta_pair(x, y, 0.5 * nu, 0.5);
    TailProbability(p.clamp(0.0, 1.0))
}

/// Regularized incomplete beta `I_x(a, b)` for `0 <= x <= 1`, `a, b > 0`.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || a <= 0.0 || b <= 0.0 {
        return f64::NAN;
    }
    inc_beta_pair(x, 1.0 - x, a, b)
}

/// `I_x(a, b)` with `y = 1 - x` supplied by the caller so that values of `x`
/// close to 1 keep full precision in the complement.
fn inc_beta_pair(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(y, b, a) / b
    }
}

const LENTZ_MAX_ITER: usize = 10_000;
const LENTZ_EPS: f64 = 1e-16;
const LENTZ_TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta function, evaluated with the
/// modified Lentz method. Converges quickly for `x < (a+1)/(a+b+2)`.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < LENTZ_TINY { LENTZ_TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=LENTZ_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= LENTZ_EPS {
            break;
        }
    }
    h
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Tail of Stirling's series for `ln Γ(x)`, valid for `x >= 10`.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        - r2 * (1.0 / 360.0
            - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360_360.0 - r2 / 156.0))))))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NAN;
    }
    if x < 10.0 {
        // Shift up into the Stirling range: Γ(x) = Γ(x + k) / (x (x+1) ... (x+k-1)).
        let mut shift = 1.0;
        let mut z = x;
        while z < 10.0 {
            shift *= z;
            z += 1.0;
        }
        return ln_gamma(z) - shift.ln();
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_correction(x)
}

/// `ln B(a, b)`, with the large-argument difference `ln Γ(big) - ln Γ(big + small)`
/// evaluated directly so it does not cancel for large degrees of freedom.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, big) = if a < b { (a, b) } else { (b, a) };
    if big < 10.0 {
        return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    }
    let sum = big + small;
    let diff = -(big - 0.5) * (small / big).ln_1p() - small * sum.ln() + small + stirling_correction(big)
        - stirling_correction(sum);
    ln_gamma(small) + diff
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0_f64;
        for n in 1..30u32 {
            // Γ(n+1) = n!
            fact *= n as f64;
            let (got, want) = (ln_gamma(n as f64 + 1.0), fact.ln());
            assert!(close(got, want, 1e-14), "n = {n}: {got} vs {want}");
        }
        assert!(close(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), 1e-14));
    }

    #[test]
    fn ln_beta_large_argument_path_agrees_with_gamma_path() {
        for &(a, b) in &[(12.0, 0.5), (50.0, 3.0), (400.5, 0.5)] {
            let direct = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
            assert!((ln_beta(a, b) - direct).abs() < 1e-11, "a={a} b={b}");
        }
    }

    #[test]
    fn inc_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1-x)^b
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            assert!(close(inc_beta(x, 1.0, 1.0), x, 1e-14));
            assert!(close(inc_beta(x, 3.0, 1.0), x.powi(3), 1e-14));
            assert!(close(inc_beta(x, 1.0, 4.0), 1.0 - (1.0 - x).powi(4), 1e-14));
        }
        assert!(inc_beta(-0.1, 1.0, 1.0).is_nan());
    }

    #[test]
    fn t_sf_edge_values() {
        assert_eq!(t_sf(0.0, 7).value(), 1.0);
        assert_eq!(t_sf(f64::INFINITY, 7).value(), 0.0);
        assert_eq!(t_sf(f64::NEG_INFINITY, 7).value(), 0.0);
        // df = 1 is Cauchy: P(|T| > 1) = 1/2.
        assert!(close(t_sf(1.0, 1).value(), 0.5, 1e-14));
        // df = 2 has a closed form: p = 1 - t / sqrt(2 + t^2).
        for &t in &[0.3f64, 1.0, 2.5, 10.0] {
            let expected = 1.0 - t / (2.0 + t * t).sqrt();
            assert!(close(t_sf(t, 2).value(), expected, 1e-13), "t = {t}");
        }
    }

    #[test]
    fn t_sf_normal_limit() {
        let p = t_sf(1.96, 10_000).value();
        assert!((p - 0.05).abs() <= 0.0003, "p = {p}");
    }

    #[test]
    #[should_panic]
    fn t_sf_rejects_zero_df() {
        t_sf(1.0, 0);
    }

    #[test]
    fn mean_and_std_basics() {
        assert!(mean(&[]).is_nan());
        assert_eq!(mean(&[2.0, 4.0]), 3.0);
        assert_eq!(sample_std(&[5.0]), 0.0);
        assert!(close(sample_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), (32.0f64 / 7.0).sqrt(), 1e-15));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 10.0);
    }

    #[test]
    fn pearson_r_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(close(pearson_r(&x, &x).unwrap(), 1.0, 1e-15));
        assert!(close(pearson_r(&x, &neg).unwrap(), -1.0, 1e-15));
        assert_eq!(pearson_r(&x, &[2.0; 5]).unwrap(), 0.0);
        assert!(matches!(pearson_r(&x, &[1.0, 2.0]), Err(Error::LengthMismatch { left: 5, right: 2 })));
        assert!(matches!(pearson_r(&[1.0], &[1.0]), Err(Error::InsufficientData { .. })));
    }
}
