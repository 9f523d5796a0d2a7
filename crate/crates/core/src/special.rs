//! Special functions: the thermal factor `x coth x`, exact Bernoulli numbers,
//! and a few helpers used by the spectral routines.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::scalar::Real;

/// Exact Bernoulli numbers `B_0..=B_n` (with `B_1 = +1/2`), by the
/// Akiyama–Tanigawa algorithm.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(n + 1);
    let mut a: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        a.push(BigRational::new(BigInt::one(), BigInt::from(m as u64 + 1)));
        for j in (1..=m).rev() {
            let d = &a[j - 1] - &a[j];
            a[j - 1] = d * BigRational::from_integer(BigInt::from(j as u64));
        }
        out.push(a[0].clone());
    }
    out
}

/// Exact coefficients `c_n = 2^{2n} B_{2n} / (2n)!` of
/// `x coth x = Σ_{n≥0} c_n x^{2n}`, for `n = 0..=n_max`.
pub fn xcothx_coefficients(n_max: usize) -> Vec<BigRational> {
    let b = bernoulli_numbers(2 * n_max);
    let mut fact = BigInt::one();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            fact *= BigInt::from((2 * n - 1) as u64) * BigInt::from((2 * n) as u64);
        }
        let pow = BigInt::one() << (2 * n);
        let c = &b[2 * n] * BigRational::from_integer(pow) / BigRational::from_integer(fact.clone());
        out.push(c);
    }
    out
}

const SERIES_TERMS: usize = 14;

fn xcothx_series_f64() -> &'static [f64] {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    CACHE.get_or_init(|| {
        xcothx_coefficients(SERIES_TERMS)
            .iter()
            .map(|c| c.to_f64().unwrap_or(0.0))
            .collect()
    })
}

/// `x coth x - 1` without cancellation near zero. Even in `x`.
pub fn xcothx_minus_one<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < T::lit(0.5) {
        let x2 = ax * ax;
        let c = xcothx_series_f64();
        // Horner over c_1..c_N
        let mut acc = T::zero();
        for k in (1..=SERIES_TERMS).rev() {
            acc = acc * x2 + T::lit(c[k]);
        }
        acc * x2
    } else if ax > T::lit(20.0) {
        // coth x = 1 + 2e^{-2x}/(1 - e^{-2x})
        let e = (-(ax + ax)).exp();
        ax - T::one() + ax * (e + e) / (T::one() - e)
    } else {
        ax / ax.tanh() - T::one()
    }
}

/// `x coth x` (equal to 1 at `x = 0`).
pub fn xcothx<T: Real>(x: T) -> T {
    T::one() + xcothx_minus_one(x)
}

/// Thermal weight `q(ω) = ħω coth(βħω/2)`; the classical limit `ħ → 0`
/// gives `2/β`.
#[inline]
pub fn thermal_q<T: Real>(omega: T, beta: T, hbar: T) -> T {
    let two_over_beta = T::lit(2.0) / beta;
    two_over_beta * xcothx(beta * hbar * omega * T::lit(0.5))
}

/// Quantum excess `q(ω) - 2/β`, which vanishes identically at `ħ = 0`.
#[inline]
pub fn thermal_q_excess<T: Real>(omega: T, beta: T, hbar: T) -> T {
    let two_over_beta = T::lit(2.0) / beta;
    two_over_beta * xcothx_minus_one(beta * hbar * omega * T::lit(0.5))
}

/// Error function through `libm` (evaluated in double precision).
pub fn erf<T: Real>(x: T) -> T {
    T::lit(libm::erf(x.f64()))
}

/// `sin(a t)/a`, continuous through `a = 0`.
pub fn sinc_t<T: Real>(a: T, t: T) -> T {
    let x = a * t;
    if x.abs() < T::lit(1e-3) {
        let x2 = x * x;
        t * (T::one() - x2 / T::lit(6.0) * (T::one() - x2 / T::lit(20.0)))
    } else {
        x.sin() / a
    }
}

/// `sinh(a t)/a`, continuous through `a = 0`.
pub fn sinhc_t<T: Real>(a: T, t: T) -> T {
    let x = a * t;
    if x.abs() < T::lit(1e-3) {
        let x2 = x * x;
        t * (T::one() + x2 / T::lit(6.0) * (T::one() + x2 / T::lit(20.0)))
    } else {
        x.sinh() / a
    }
}

/// Exact rational as `f64` (nearest representable).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or(f64::NAN)
}
