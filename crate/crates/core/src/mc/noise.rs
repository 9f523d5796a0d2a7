//! Stationary Gaussian noise with covariance `ħν` by FFT spectral synthesis.
//!
//! The samples are cell averages `ξ̄_k = (1/dt)∫_{cell k} ξ`, which stay
//! finite even where the point covariance diverges at zero lag. Their
//! discrete-time spectrum is the aliased, `sinc²`-filtered continuum one,
//!
//! ```text
//! λ(ω) = sin²(ω dt/2) Σ_p ħν̃(ω + 2πp/dt) / (ω dt/2 + πp)²,
//! ```
//!
//! and drawing independent complex Gaussian amplitudes `√(λ_j Δω)` on the
//! circle of `m` frequencies gives an exact Gaussian sample of the periodic
//! (period `m dt`) version of that covariance. Real and imaginary parts of one
//! transform are two independent realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bath::{KernelTable, SpectralDensity};
use crate::error::{Error, Result};
use crate::quad::{integrate_to_inf, QuadTol};
use crate::scalar::Real;

/// Explicit alias terms on each side before the integral tail takes over.
const ALIASES: usize = 512;

/// Precomputed amplitudes for one bath, temperature and grid.
#[derive(Clone)]
pub struct NoiseSynthesizer<T> {
    pub dt: T,
    /// Samples per realization.
    pub len: usize,
    /// Circulant period in samples (`≥ 2 len`, a power of two).
    pub period: usize,
    pub seed: u64,
    amplitudes: Vec<T>,
    covariance: Vec<T>,
    fft: Arc<dyn Fft<T>>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for NoiseSynthesizer<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynthesizer")
            .field("dt", &self.dt)
            .field("len", &self.len)
            .field("period", &self.period)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

/// Cell-averaged noise spectrum `λ(ω)` on `[0, π/dt]`.
fn aliased_spectrum<T: Real>(sd: &SpectralDensity<T>, beta: T, hbar: T, dt: T, omegas: &[T]) -> Vec<T> {
    let s = |w: T| sd.noise_ft(w, beta, hbar);
    if sd.is_local() {
        // white: Σ_p 1/(x + πp)² = 1/sin²x
        return omegas.iter().map(|&w| s(w)).collect();
    }
    let pi = T::PI();
    let period = T::TAU() / dt;
    // tail beyond the explicit aliases, nearly independent of ω on [0, π/dt]
    let p0 = T::from_usize_lossy(ALIASES) + T::lit(0.5);
    let tail = T::lit(2.0)
        * integrate_to_inf(|p: T| s(p * period) / (pi * pi * p * p), p0, QuadTol::new(T::zero(), T::lit(1e-10))).value;
    omegas
        .par_iter()
        .map(|&w| {
            let x = w * dt * T::lit(0.5);
            if x == T::zero() {
                return s(T::zero());
            }
            let sx = x.sin();
            let mut acc = s(w) / (x * x);
            for p in 1..=ALIASES {
                let pp = T::from_usize_lossy(p);
                let a = x + pi * pp;
                let b = x - pi * pp;
                acc += s(w + pp * period) / (a * a) + s(w - pp * period) / (b * b);
            }
            sx * sx * (acc + tail)
        })
        .collect()
}

impl<T: Real> NoiseSynthesizer<T> {
    pub fn new(sd: &SpectralDensity<T>, beta: T, hbar: T, dt: T, len: usize, seed: u64) -> Result<Self> {
        crate::bath::check_thermal(beta, hbar)?;
        if sd.is_local() && hbar > T::zero() {
            return Err(Error::UvDivergence {
                module: "mc",
                message: "quantum noise of the Ohmic bath without cutoff has no finite samples".into(),
            });
        }
        if len == 0 || !(dt > T::zero()) {
            return Err(Error::domain("mc", "noise grid needs dt > 0 and at least one sample"));
        }
        let period = (2 * len).next_power_of_two().max(64);
        let d_omega = T::TAU() / (T::from_usize_lossy(period) * dt);
        let half = period / 2;
        let omegas: Vec<T> = (0..=half).map(|j| d_omega * T::from_usize_lossy(j)).collect();
        let lambda = aliased_spectrum(sd, beta, hbar, dt, &omegas);
        let peak = lambda.iter().copied().fold(T::zero(), T::max);
        if let Some(bad) = lambda.iter().find(|&&l| l < -T::lit(1e-12) * peak || !l.is_finite()) {
            return Err(Error::domain("mc", format!("noise spectrum is negative or non-finite ({bad})")));
        }
        let mut amplitudes = vec![T::zero(); period];
        for j in 0..period {
            let l = lambda[if j <= half { j } else { period - j }].max(T::zero());
            amplitudes[j] = (l * d_omega).sqrt();
        }
        // circulant covariance c_k = Σ_j λ_j Δω e^{2πijk/m}
        let mut buf: Vec<Complex<T>> = amplitudes.iter().map(|a| Complex::new(*a * *a, T::zero())).collect();
        let fft = FftPlanner::new().plan_fft_inverse(period);
        fft.process(&mut buf);
        let covariance = buf[..len].iter().map(|c| c.re).collect();
        Ok(Self {
            dt,
            len,
            period,
            seed,
            amplitudes,
            covariance,
            fft,
        })
    }

    pub fn from_kernels(kernels: &KernelTable<T>, len: usize, seed: u64) -> Result<Self> {
        Self::new(&kernels.bath, kernels.beta, kernels.hbar, kernels.grid.dt, len, seed)
    }

    /// Covariance of the generated samples at lags `0..len` (cell-averaged
    /// `ħν`, periodised over the circulant period).
    pub fn covariance(&self) -> &[T] {
        &self.covariance
    }

    /// Two independent realizations from stream `index` of the seeded
    /// generator; the same index always gives the same pair.
    pub fn pair(&self, index: u64) -> (Vec<T>, Vec<T>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let mut buf: Vec<Complex<T>> = self
            .amplitudes
            .iter()
            .map(|&a| Complex::new(a * T::standard_normal(&mut rng), a * T::standard_normal(&mut rng)))
            .collect();
        self.fft.process(&mut buf);
        let re = buf[..self.len].iter().map(|c| c.re).collect();
        let im = buf[..self.len].iter().map(|c| c.im).collect();
        (re, im)
    }

    /// Realization `i`: half of pair `i/2`.
    pub fn realization(&self, i: u64) -> Vec<T> {
        let (a, b) = self.pair(i / 2);
        if i % 2 == 0 {
            a
        } else {
            b
        }
    }

    /// Applies `f` to realizations `0..n` in parallel; results are in index
    /// order and independent of the thread count.
    pub fn map_realizations<R: Send, F: Fn(&[T]) -> R + Sync>(&self, n: usize, f: F) -> Vec<R> {
        let pairs = n.div_ceil(2);
        let mut out: Vec<R> = (0..pairs as u64)
            .into_par_iter()
            .flat_map_iter(|k| {
                let (a, b) = self.pair(k);
                [f(&a), f(&b)]
            })
            .collect();
        out.truncate(n);
        out
    }
}

/// A stored batch of noise realizations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseEnsemble<T> {
    pub dt: T,
    pub seed: u64,
    pub realizations: Vec<Vec<T>>,
    /// Target covariance at lags `0..len` (cell-averaged `ħν`).
    pub covariance: Vec<T>,
    pub method: String,
}

/// `n` realizations of `len` samples on the kernel table's step.
pub fn synthesize_noise<T: Real>(kernels: &KernelTable<T>, len: usize, n: usize, seed: u64) -> Result<NoiseEnsemble<T>> {
    let synth = NoiseSynthesizer::from_kernels(kernels, len, seed)?;
    Ok(NoiseEnsemble {
        dt: synth.dt,
        seed,
        realizations: synth.map_realizations(n, |x| x.to_vec()),
        covariance: synth.covariance().to_vec(),
        method: "fft-circulant".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_limit() {
        let sd = SpectralDensity::ohmic(0.3, 1.5).unwrap();
        let s = NoiseSynthesizer::<f64>::new(&sd, 2.0, 0.0, 0.01, 100, 1).unwrap();
        let c0: f64 = 2.0 * 1.5 / 2.0 * 2.0 * 0.3 / 0.01;
        assert!((s.covariance()[0] - c0).abs() < 1e-10 * c0);
        assert!(s.covariance()[1..].iter().all(|c| c.abs() < 1e-10 * c0));
    }

    #[test]
    fn seeded_streams_are_deterministic() {
        let sd = SpectralDensity::drude(0.5, 4.0, 1.0).unwrap();
        let s = NoiseSynthesizer::new(&sd, 1.0, 1.0, 0.02, 50, 7).unwrap();
        assert_eq!(s.pair(3), s.pair(3));
        assert_ne!(s.pair(3).0, s.pair(4).0);
        let all = s.map_realizations(5, |x| x.to_vec());
        assert_eq!(all[3], s.realization(3));
        assert_eq!(all.len(), 5);
    }

    #[test]
    fn covariance_matches_kernel_away_from_zero() {
        // classical Drude: ν(t) = (2M/β) γ₀Λ e^{−Λt}; cell averaging changes
        // lag k ≥ 1 by a factor sinh²(Λdt/2)/(Λdt/2)²
        let (g0, l, m, beta, dt) = (0.5, 4.0, 1.0, 1.3, 0.02);
        let sd = SpectralDensity::drude(g0, l, m).unwrap();
        let s = NoiseSynthesizer::new(&sd, beta, 0.0, dt, 200, 0).unwrap();
        let x: f64 = l * dt / 2.0;
        let f = x.sinh().powi(2) / (x * x);
        for k in 1..20 {
            let exact = 2.0 * m / beta * g0 * l * (-l * dt * k as f64).exp() * f;
            assert!((s.covariance()[k] - exact).abs() < 1e-8 * exact, "k={k}");
        }
        // lag 0: ∫∫ over one cell of e^{−Λ|t−s|}
        let exact0 = 2.0 * m / beta * g0 * l * 2.0 * (x - (1.0 - (-2.0 * x).exp()) / 2.0) / (2.0 * x * x);
        assert!((s.covariance()[0] - exact0).abs() < 1e-8 * exact0);
    }

    #[test]
    fn rejects_quantum_local_bath() {
        let sd = SpectralDensity::ohmic(0.3, 1.0).unwrap();
        assert!(matches!(NoiseSynthesizer::new(&sd, 1.0, 1.0, 0.01, 10, 0), Err(Error::UvDivergence { .. })));
    }
}
