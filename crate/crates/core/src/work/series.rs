//! High- and low-temperature expansions of the work variance.
//!
//! With `x = βħω/2`, `ħω coth(βħω/2) = (2/β) x coth x` and
//! `x coth x = Σ_{n≥0} c_n x^{2n}`, `c_n = 2^{2n} B_{2n}/(2n)!`. Each power of
//! `ω²` moves one derivative onto each force factor, so the correction to the
//! classical variance is
//!
//! ```text
//! σ_W² − ḟ·h_e·ḟ/(βMΩ²) = (1/βMΩ²) Σ_{n≥1} c_n (βħ/2)^{2n} f^{(n+1)}·h_e·f^{(n+1)}
//! ```
//!
//! which starts at order `ħ²`. Terms are computed from spectral moments
//! `∫ |F|² ω^{2n} h̃_e` and, for protocols whose derivatives vanish at both
//! ends, cross-checked against the time-domain quadratic forms.

use serde::{Deserialize, Serialize};

use super::{quadratic_form, spectral_integral, spectral_scale, Protocol};
use crate::bath::SpectralDensity;
use crate::error::{Error, Result};
use crate::greens::GreensSolutions;
use crate::scalar::Real;
use crate::special::{rational_to_f64, thermal_q_excess, xcothx_coefficients};
use crate::thermal::h_even_ft;

/// Largest supported series order.
pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighTempSeries<T> {
    /// `c_n` for `n = 1..=n_max`.
    pub coefficients: Vec<f64>,
    /// Series terms `n = 1..=n_max` from spectral moments.
    pub terms: Vec<T>,
    pub partial_sum: T,
    /// Classical variance `ḟ·h_e·ḟ/(βMΩ²)`.
    pub classical: T,
    /// Exact `σ_W² − classical` with the full `coth`.
    pub exact_correction: T,
    /// The same terms from time-domain quadratic forms of `f^{(n+1)}`, when
    /// the protocol is smooth at both ends and Green's functions are given.
    pub terms_time: Option<Vec<T>>,
}

impl<T: Real> HighTempSeries<T> {
    /// `|exact − partial sum|`.
    pub fn remainder(&self) -> T {
        (self.exact_correction - self.partial_sum).abs()
    }

    /// Largest relative disagreement of the two term evaluations.
    pub fn form_disagreement(&self) -> Option<T> {
        self.terms_time.as_ref().map(|tt| {
            tt.iter()
                .zip(&self.terms)
                .map(|(a, b)| (*a - *b).abs() / b.abs().max(T::min_positive_value()))
                .fold(T::zero(), T::max)
        })
    }
}

pub fn hightemp_correction<T: Real>(
    protocol: &Protocol<T>,
    sd: &SpectralDensity<T>,
    omega: T,
    gs: Option<&GreensSolutions<T>>,
    beta: T,
    hbar: T,
    n_max: usize,
) -> Result<HighTempSeries<T>> {
    crate::bath::check_thermal(beta, hbar)?;
    if n_max == 0 || n_max > MAX_ORDER {
        return Err(Error::Unsupported {
            module: "work",
            message: format!("series order must be in 1..={MAX_ORDER}, got {n_max}"),
        });
    }
    let coefficients: Vec<f64> = xcothx_coefficients(n_max).iter().skip(1).map(rational_to_f64).collect();
    let m_w2 = sd.mass * omega * omega;
    let scale = spectral_scale(sd, omega);
    let he = |w: T| h_even_ft(sd, omega, w);
    let classical = T::lit(2.0) / beta * spectral_integral(protocol, scale, he)? / m_w2;
    if hbar == T::zero() {
        return Ok(HighTempSeries {
            terms: vec![T::zero(); n_max],
            coefficients,
            partial_sum: T::zero(),
            classical,
            exact_correction: T::zero(),
            terms_time: None,
        });
    }
    let exact_correction = spectral_integral(protocol, scale, |w| thermal_q_excess(w, beta, hbar) * he(w))? / m_w2;
    let half = beta * hbar * T::lit(0.5);
    let mut terms = Vec::with_capacity(n_max);
    for (k, c) in coefficients.iter().enumerate() {
        let n = k + 1;
        let moment = spectral_integral(protocol, scale, |w| w.powi(2 * n as i32) * he(w))?;
        terms.push(T::lit(2.0) / beta * T::lit(*c) * half.powi(2 * n as i32) * moment / m_w2);
    }
    let terms_time = match gs {
        Some(gs) if protocol.is_smooth_at_ends() => {
            let table = protocol.tabulate(&gs.grid)?;
            let n_pts = table.f.len();
            let dt = table.dt;
            let mut tt = Vec::with_capacity(n_max);
            for (k, c) in coefficients.iter().enumerate() {
                let n = k + 1;
                let d: Vec<T> = (0..n_pts)
                    .map(|j| protocol.fdot_derivative(n, dt * T::from_usize_lossy(j)))
                    .collect();
                let q = quadratic_form(dt, &d, &gs.h[..n_pts]);
                tt.push(T::lit(*c) * half.powi(2 * n as i32) * q / (beta * m_w2));
            }
            Some(tt)
        }
        _ => None,
    };
    Ok(HighTempSeries {
        partial_sum: terms.iter().copied().sum(),
        coefficients,
        terms,
        classical,
        exact_correction,
        terms_time,
    })
}

/// One point of the low-temperature spectrum expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowTempPoint<T> {
    pub omega: T,
    /// `(ħ|ω|/2MΩ²) h̃_e (1 + 2Σ_{k≤K} e^{−kβħ|ω|})`.
    pub value: T,
    /// Same with the exact `coth`.
    pub exact: T,
    /// Relative truncation bound `2e^{−(K+1)x}/(1 − e^{−x})`, `x = βħ|ω|`.
    pub bound: T,
}

/// Stationary position spectrum from the exponential expansion of `coth`.
pub fn lowtemp_sigma_ft<T: Real>(
    omegas: &[T],
    sd: &SpectralDensity<T>,
    omega_sys: T,
    beta: T,
    hbar: T,
    k_max: usize,
) -> Result<Vec<LowTempPoint<T>>> {
    crate::bath::check_thermal(beta, hbar)?;
    if k_max == 0 {
        return Err(Error::domain("work", "k_max must be at least 1"));
    }
    if hbar == T::zero() {
        return Err(Error::domain("work", "the low-temperature expansion needs hbar > 0"));
    }
    let two = T::lit(2.0);
    Ok(omegas
        .iter()
        .map(|&om| {
            let w = om.abs();
            let x = beta * hbar * w;
            let zero_t = hbar * w * h_even_ft(sd, omega_sys, w) / (two * sd.mass * omega_sys * omega_sys);
            let q = (-x).exp();
            let mut sum = T::zero();
            let mut p = T::one();
            for _ in 0..k_max {
                p *= q;
                sum += p;
            }
            let coth = T::one() / (x * T::lit(0.5)).tanh();
            LowTempPoint {
                omega: om,
                value: zero_t * (T::one() + two * sum),
                exact: zero_t * coth,
                bound: two * (-(T::from_usize_lossy(k_max + 1)) * x).exp() / (-(-x).exp_m1()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::work::Shape;

    #[test]
    fn lowtemp_matches_exact() {
        let sd = SpectralDensity::drude(0.5, 5.0, 1.0).unwrap();
        let omegas: Vec<f64> = (1..200).map(|k| 0.05 * k as f64).collect();
        let pts = lowtemp_sigma_ft(&omegas, &sd, 1.0, 10.0, 1.0, 50).unwrap();
        for p in pts.iter().filter(|p| 10.0 * p.omega >= 3.0) {
            assert!((p.value - p.exact).abs() <= 1e-12 * p.exact, "{p:?}");
        }
        let mirrored = lowtemp_sigma_ft(&[-1.3, 1.3], &sd, 1.0, 10.0, 1.0, 5).unwrap();
        assert_eq!(mirrored[0].value, mirrored[1].value);
    }

    #[test]
    fn order_limits() {
        let sd = SpectralDensity::drude(0.5, 5.0, 1.0).unwrap();
        let p = Protocol::ramp(0.0, 1.0, 2.0).unwrap();
        assert!(matches!(hightemp_correction(&p, &sd, 1.0, None, 1.0, 0.1, 11), Err(Error::Unsupported { .. })));
        let s = hightemp_correction(&p, &sd, 1.0, None, 1.0, 0.0, 3).unwrap();
        assert!(s.terms.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn series_tracks_exact_correction() {
        let sd = SpectralDensity::<f64>::drude(0.5, 5.0, 1.0).unwrap();
        let p = Protocol::new(Shape::Gaussian { width: 1.0 }, 0.0, 1.0, 12.0).unwrap();
        let s = hightemp_correction(&p, &sd, 1.0, None, 1.0, 0.02, 3).unwrap();
        assert!(s.terms[0] > 0.0 && s.terms[1] < 0.0);
        assert!(s.remainder() < 1e-8 * s.exact_correction.abs(), "{s:?}");
    }
}
