//! Scalar special functions used by the closed-form solutions.
//!
//! Everything here is a pure function of real arguments. Factorial-like
//! quantities switch to log-space once the integer argument exceeds
//! [`LOG_SPACE_THRESHOLD`]; hypergeometric series are accumulated with
//! compensated summation.

use crate::error::{Error, Result};

/// Integer arguments above this are handled through `ln Γ`.
pub const LOG_SPACE_THRESHOLD: u32 = 30;

const SERIES_MAX_TERMS: usize = 10_000;
const SERIES_RTOL: f64 = 1e-15;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(f64::from(n) + 1.0)
    }
}

pub fn factorial(n: u32) -> f64 {
    if n <= LOG_SPACE_THRESHOLD {
        (2..=n).map(f64::from).product()
    } else {
        ln_factorial(n).exp()
    }
}

/// Rising factorial `x (x+1) ... (x+l-1)`; 1 for `l = 0`.
pub fn pochhammer(x: f64, l: u32) -> f64 {
    if l <= LOG_SPACE_THRESHOLD || x <= 0.0 {
        (0..l).map(|k| x + f64::from(k)).product()
    } else {
        ln_pochhammer(x, l).exp()
    }
}

/// `ln (x)_l` for `x > 0`.
pub fn ln_pochhammer(x: f64, l: u32) -> f64 {
    debug_assert!(x > 0.0);
    if l == 0 {
        0.0
    } else if l <= LOG_SPACE_THRESHOLD {
        (0..l).map(|k| (x + f64::from(k)).ln()).sum()
    } else {
        ln_gamma(x + f64::from(l)) - ln_gamma(x)
    }
}

/// `(2n-1)!! = 1·3·5···(2n-1)`, with `(-1)!! = 1`.
pub fn odd_double_factorial(n: u32) -> f64 {
    if n <= LOG_SPACE_THRESHOLD {
        (1..=n).map(|k| f64::from(2 * k - 1)).product()
    } else {
        ln_odd_double_factorial(n).exp()
    }
}

pub fn ln_odd_double_factorial(n: u32) -> f64 {
    // (2n-1)!! = (2n)! / (2^n n!)
    ln_factorial(2 * n) - f64::from(n) * std::f64::consts::LN_2 - ln_factorial(n)
}

/// Complete Beta function `B(a, b)`.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Incomplete Beta function `B(a, b; z) = ∫₀^z x^(a-1) (1-x)^(b-1) dx`
/// (not regularized).
///
/// The power series around 0 is used up to `z = 0.7`. Above that the value
/// comes from the complement `B(a,b) - B(b,a;1-z)` once `z` is past the
/// continued-fraction sweet spot `(a+1)/(a+b+2)`, and from the continued
/// fraction in between (only reachable for large `a`).
pub fn incomplete_beta(a: f64, b: f64, z: f64) -> Result<f64> {
    incomplete_beta_split(a, b, z, 1.0 - z)
}

/// [`incomplete_beta`] with `1 - z` supplied by the caller, for arguments
/// like `z = 1 - e^{-s}` whose complement is known more accurately than
/// `1.0 - z` can recover.
pub fn incomplete_beta_split(a: f64, b: f64, z: f64, one_minus_z: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete_beta requires a > 0 and b > 0, got a = {a}, b = {b}"
        )));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!(
            "incomplete_beta requires 0 <= z <= 1, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if one_minus_z <= 0.0 {
        return Ok(beta(a, b));
    }
    if z <= 0.7 {
        beta_series(a, b, z)
    } else if z < (a + 1.0) / (a + b + 2.0) {
        beta_continued_fraction(a, b, z)
    } else {
        let tail = beta_series(b, a, one_minus_z)?;
        Ok((beta(a, b) - tail).max(0.0))
    }
}

/// `z^a Σ (1-b)_n z^n / (n! (a+n))`.
fn beta_series(a: f64, b: f64, z: f64) -> Result<f64> {
    let mut sum = CompensatedSum::new();
    let mut term = 1.0; // (1-b)_n z^n / n!
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        let contrib = term / (a + nf);
        sum.add(contrib);
        if term == 0.0 || (n > 0 && contrib.abs() <= 1e-17 * sum.value().abs()) {
            return Ok(z.powf(a) * sum.value());
        }
        term *= (nf + 1.0 - b) / (nf + 1.0) * z;
    }
    Err(Error::NoConvergence {
        iterations: SERIES_MAX_TERMS,
    })
}

/// Modified Lentz evaluation of the standard continued fraction for the
/// incomplete Beta function.
fn beta_continued_fraction(a: f64, b: f64, z: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * z / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..SERIES_MAX_TERMS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * z / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            let front = (a * z.ln() + b * (1.0 - z).ln()).exp() / a;
            return Ok(front * h);
        }
    }
    Err(Error::NoConvergence {
        iterations: SERIES_MAX_TERMS,
    })
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Confluent hypergeometric function `₁F₁(a; b; z)`.
///
/// Negative `z` goes through Kummer's transformation so the summed series
/// never alternates for positive parameters.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    if is_nonpositive_integer(b) {
        return Err(Error::Domain(format!(
            "hyp1f1 undefined for nonpositive integer b = {b}"
        )));
    }
    if z < 0.0 && !is_nonpositive_integer(a) {
        return Ok(z.exp() * hyp1f1_series(b - a, b, -z)?);
    }
    hyp1f1_series(a, b, z)
}

fn hyp1f1_series(a: f64, b: f64, z: f64) -> Result<f64> {
    let mut sum = CompensatedSum::new();
    let mut term = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        sum.add(term);
        let nf = n as f64;
        let ratio = (a + nf) / (b + nf) * z / (nf + 1.0);
        let next = term * ratio;
        if next == 0.0 {
            return Ok(sum.value());
        }
        // Only stop once terms are shrinking, otherwise a small leading
        // term can masquerade as convergence.
        if ratio.abs() < 1.0 && next.abs() <= SERIES_RTOL * sum.value().abs() {
            sum.add(next);
            return Ok(sum.value());
        }
        term = next;
    }
    Err(Error::NoConvergence {
        iterations: SERIES_MAX_TERMS,
    })
}

/// Terminating Gauss hypergeometric function `₂F₁(a, -m; c; z)`, an exact
/// sum of `m + 1` terms.
pub fn hyp2f1_terminating(a: f64, m: u32, c: f64, z: f64) -> Result<f64> {
    if is_nonpositive_integer(c) && c >= -f64::from(m) {
        return Err(Error::Domain(format!(
            "hyp2f1_terminating: c = {c} is a nonpositive integer >= -{m}"
        )));
    }
    let b = -f64::from(m);
    let mut sum = CompensatedSum::new();
    let mut term = 1.0;
    sum.add(term);
    for k in 0..m {
        let kf = f64::from(k);
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum.add(term);
    }
    Ok(sum.value())
}
