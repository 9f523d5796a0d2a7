//! Spectral content of the drive and the high/low-temperature classification.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::ProtocolTable;
use crate::error::{Error, Result};
use crate::quad::Gregory;
use crate::scalar::Real;

/// `|f̃_d(ω_k)|` on `ω_k = k Δω` up to the Nyquist frequency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdotSpectrum<T> {
    pub d_omega: T,
    pub magnitude: Vec<T>,
}

/// Zero-padded FFT of the sampled `ḟ` (fourth-order end weights), scaled to
/// `f̃_d(ω) = (1/2π)∫ ḟ e^{−iωt} dt`. `padding` is clamped to at least 8.
pub fn fdot_spectrum<T: Real>(table: &ProtocolTable<T>, padding: usize) -> FdotSpectrum<T> {
    let n = table.intervals();
    let len = ((n + 1) * padding.max(8)).next_power_of_two();
    let greg = Gregory::<T>::new();
    let mut buf: Vec<Complex<T>> = (0..len)
        .map(|j| {
            if j <= n {
                Complex::new(greg.weight(n, j) * table.fdot[j], T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let s = table.dt / T::TAU();
    FdotSpectrum {
        d_omega: T::TAU() / (T::from_usize_lossy(len) * table.dt),
        magnitude: buf[..=len / 2].iter().map(|c| c.norm() * s).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    High,
    Low,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport<T> {
    pub regime: Regime,
    /// Frequency above which `|f̃_d|` stays below the spectral floor.
    pub omega_h: T,
    /// Frequency below which `|f̃_d|` stays below the spectral floor.
    pub omega_l: T,
    pub beta_hbar_omega_h: T,
    pub beta_hbar_omega_l: T,
}

/// Relative spectral floor defining the drive bandwidth.
pub const SPECTRAL_FLOOR: f64 = 1e-3;
pub const HIGH_THRESHOLD: f64 = 0.1;
pub const LOW_THRESHOLD: f64 = 10.0;

/// High when `βħω_h < 0.1`, low when `βħω_l > 10`, otherwise intermediate.
pub fn regime_classifier<T: Real>(spectrum: &FdotSpectrum<T>, beta: T, hbar: T) -> Result<RegimeReport<T>> {
    crate::bath::check_thermal(beta, hbar)?;
    let mag = &spectrum.magnitude;
    let peak = mag.iter().copied().fold(T::zero(), T::max);
    if peak == T::zero() {
        return Err(Error::domain("work", "the drive has no spectral content (ḟ ≡ 0)"));
    }
    let floor = peak * T::lit(SPECTRAL_FLOOR);
    let above = |m: &T| *m >= floor;
    let last = mag.iter().rposition(above).unwrap_or(0);
    let first = mag.iter().position(above).unwrap_or(0);
    let omega_h = spectrum.d_omega * T::from_usize_lossy((last + 1).min(mag.len() - 1));
    let omega_l = spectrum.d_omega * T::from_usize_lossy(first);
    let bh = beta * hbar;
    let regime = if bh * omega_h < T::lit(HIGH_THRESHOLD) {
        Regime::High
    } else if bh * omega_l > T::lit(LOW_THRESHOLD) {
        Regime::Low
    } else {
        Regime::Intermediate
    };
    Ok(RegimeReport {
        regime,
        omega_h,
        omega_l,
        beta_hbar_omega_h: bh * omega_h,
        beta_hbar_omega_l: bh * omega_l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::work::{Protocol, Shape};

    #[test]
    fn spectrum_matches_closed_form() {
        let p = Protocol::new(Shape::Smoothstep, 0.0, 1.0, 4.0).unwrap();
        let table = p.tabulate(&TimeGrid::new(0.01, 500).unwrap()).unwrap();
        let s = fdot_spectrum(&table, 8);
        // sampled transform is accurate while ω dt ≪ 1
        for k in [0usize, 3, 20, 40] {
            let w = s.d_omega * k as f64;
            let exact = p.fdot_transform(w).norm() / std::f64::consts::TAU;
            assert!((s.magnitude[k] - exact).abs() < 1e-7 * s.magnitude[0], "k={k}");
        }
    }

    #[test]
    fn classifies_slow_and_fast_drives() {
        let slow = Protocol::new(Shape::Gaussian { width: 4.0 }, 0.0, 1.0, 40.0).unwrap();
        let table = slow.tabulate(&TimeGrid::new(0.05, 801).unwrap()).unwrap();
        let r = regime_classifier(&fdot_spectrum(&table, 8), 0.1, 0.1).unwrap();
        assert_eq!(r.regime, Regime::High);

        let fast = Protocol::new(Shape::Sinusoid { cycles: 40 }, 0.0, 1.0, 2.0).unwrap();
        let table = fast.tabulate(&TimeGrid::new(0.001, 2001).unwrap()).unwrap();
        let r = regime_classifier(&fdot_spectrum(&table, 8), 50.0, 1.0).unwrap();
        assert!(r.omega_l > 0.0);
        assert_eq!(r.regime, Regime::Low, "{r:?}");

        let r = regime_classifier(&fdot_spectrum(&table, 8), 1.0, 1.0).unwrap();
        assert_eq!(r.regime, Regime::Intermediate);
        assert!(r.beta_hbar_omega_h >= 0.1 && r.beta_hbar_omega_l <= 10.0);
    }
}
