//! Langevin trajectories and work samples from the closed-form stationary
//! solution `X = g_ret·f + g_ret·ξ`.
//!
//! Noise lives on cells centred at `s_j = (j − L)dt`, `j = 0..`, where `L + 1`
//! is the Green's-function table length, so every noise sample that can reach
//! `t ≥ 0` through the tabulated `g` is represented. Work is linear in the
//! noise: `W = −ḟ·g_ret·f − dt Σ_j r_j ξ̄_j` with the response vector
//! `r(s) = ∫_{max(s,0)}^τ ḟ(t) g(t − s) dt`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{NoiseEnsemble, NoiseSynthesizer};
use crate::bath::SpectralDensity;
use crate::error::{Error, Result};
use crate::greens::GreensSolutions;
use crate::quad::Gregory;
use crate::scalar::Real;
use crate::work::{forced_response, mean_work, Protocol};

/// Index of `s = 0` on the noise grid.
pub fn noise_offset<T: Real>(gs: &GreensSolutions<T>) -> usize {
    gs.grid.len - 1
}

/// Noise samples needed to cover `[−L dt, τ]`.
pub fn noise_len_for_work<T: Real>(protocol: &Protocol<T>, gs: &GreensSolutions<T>) -> Result<usize> {
    let n = protocol.tabulate(&gs.grid)?.intervals();
    Ok(noise_offset(gs) + n + 1)
}

/// `r_j` on the noise grid for a protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseVector<T> {
    pub dt: T,
    /// Index of `s = 0`.
    pub offset: usize,
    pub values: Vec<T>,
}

impl<T: Real> ResponseVector<T> {
    pub fn new(protocol: &Protocol<T>, gs: &GreensSolutions<T>) -> Result<Self> {
        let table = protocol.tabulate(&gs.grid)?;
        let n = table.intervals();
        if n + 1 > gs.grid.len {
            return Err(Error::grid("mc", "Green's-function horizon shorter than the protocol"));
        }
        let dt = table.dt;
        let offset = noise_offset(gs);
        let g = &gs.g;
        let greg = Gregory::<T>::new();
        let g_at = |k: usize| if k < g.len() { g[k] } else { T::zero() };
        let values = (0..offset + n + 1)
            .into_par_iter()
            .map(|j| {
                if j <= offset {
                    // s = −p dt ≤ 0: ∫₀^τ ḟ(t) g(t + p dt) dt
                    let p = offset - j;
                    let y: Vec<T> = (0..=n).map(|i| table.fdot[i] * g_at(p + i)).collect();
                    greg.integrate(n, dt, &y)
                } else {
                    // s = q dt > 0: ∫₀^{τ−s} g(u) ḟ(u + s) du
                    let q = j - offset;
                    let m = n - q;
                    if m == 0 {
                        return T::zero();
                    }
                    let len = (m + 1).max(5);
                    let y: Vec<T> = (0..len)
                        .map(|i| {
                            let fd = if q + i <= n {
                                table.fdot[q + i]
                            } else {
                                protocol.fdot_derivative(0, dt * T::from_usize_lossy(q + i))
                            };
                            g_at(i) * fd
                        })
                        .collect();
                    greg.integrate(m, dt, &y)
                }
            })
            .collect();
        Ok(Self { dt, offset, values })
    }

    /// `dt Σ_j r_j ξ̄_j`.
    pub fn apply(&self, noise: &[T]) -> T {
        let s: T = self.values.iter().zip(noise).map(|(r, x)| *r * *x).sum();
        s * self.dt
    }

    /// Exact variance of [`apply`](Self::apply) under a stationary noise
    /// covariance `c[k]` (lags beyond the slice count as zero).
    pub fn variance(&self, covariance: &[T]) -> T {
        let r = &self.values;
        let s: T = (0..r.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = T::zero();
                for (j, &rj) in r.iter().enumerate() {
                    if let Some(c) = covariance.get(i.abs_diff(j)) {
                        acc += *c * rj;
                    }
                }
                acc * r[i]
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        s * self.dt * self.dt
    }
}

/// Work samples with the exact moments of the discretized problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkSamples<T> {
    pub samples: Vec<T>,
    pub seed: u64,
    /// `−ḟ·g_ret·f`, the mean of every sample.
    pub mean: T,
    /// Variance implied by the synthesized noise covariance.
    pub variance: T,
}

/// Streams work samples without storing noise.
#[derive(Debug, Clone)]
pub struct ContinuumSampler<T> {
    pub synth: NoiseSynthesizer<T>,
    pub response: ResponseVector<T>,
    pub mean: T,
}

impl<T: Real> ContinuumSampler<T> {
    pub fn new(
        sd: &SpectralDensity<T>,
        beta: T,
        hbar: T,
        protocol: &Protocol<T>,
        gs: &GreensSolutions<T>,
        seed: u64,
    ) -> Result<Self> {
        let response = ResponseVector::new(protocol, gs)?;
        let synth = NoiseSynthesizer::new(sd, beta, hbar, gs.grid.dt, response.values.len(), seed)?;
        let mean = mean_work(protocol, gs)?.via_response;
        Ok(Self { synth, response, mean })
    }

    /// Samples `0..n`; identical for any thread count.
    pub fn sample(&self, n: usize) -> WorkSamples<T> {
        let samples = self.synth.map_realizations(n, |xi| self.mean - self.response.apply(xi));
        WorkSamples {
            samples,
            seed: self.synth.seed,
            mean: self.mean,
            variance: self.response.variance(self.synth.covariance()),
        }
    }
}

fn check_ensemble<T: Real>(ens: &NoiseEnsemble<T>, gs: &GreensSolutions<T>, need: usize) -> Result<()> {
    if (ens.dt - gs.grid.dt).abs() > T::epsilon() * T::lit(16.0) * gs.grid.dt {
        return Err(Error::grid("mc", "noise and Green's-function steps differ"));
    }
    if ens.realizations.iter().any(|r| r.len() < need) {
        return Err(Error::grid("mc", format!("noise realizations need at least {need} samples")));
    }
    Ok(())
}

/// Work for each stored noise realization.
pub fn sample_work<T: Real>(ens: &NoiseEnsemble<T>, protocol: &Protocol<T>, gs: &GreensSolutions<T>) -> Result<Vec<T>> {
    let response = ResponseVector::new(protocol, gs)?;
    check_ensemble(ens, gs, response.values.len())?;
    let mean = mean_work(protocol, gs)?.via_response;
    Ok(ens.realizations.par_iter().map(|xi| mean - response.apply(xi)).collect())
}

/// Position paths on `t_k = k dt`, `k = 0..len`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryEnsemble<T> {
    pub dt: T,
    /// `[g_ret·f](t_k)`.
    pub mean: Vec<T>,
    pub paths: Vec<Vec<T>>,
}

/// `X(t_k) = [g_ret·f](t_k) + dt Σ_j g(t_k − s_j) ξ̄_j` for every realization.
/// The number of output times is the realization length past `s = 0`, capped
/// at the Green's-function table length.
pub fn sample_trajectories<T: Real>(
    ens: &NoiseEnsemble<T>,
    protocol: &Protocol<T>,
    gs: &GreensSolutions<T>,
) -> Result<TrajectoryEnsemble<T>> {
    let offset = noise_offset(gs);
    check_ensemble(ens, gs, offset + 1)?;
    let len = ens.realizations.iter().map(Vec::len).min().unwrap_or(offset + 1) - offset;
    let len = len.min(gs.grid.len);
    let mean = forced_response(protocol, gs, len)?;
    let dt = gs.grid.dt;
    let g = &gs.g;
    let paths = ens
        .realizations
        .par_iter()
        .map(|xi| {
            (0..len)
                .map(|k| {
                    let top = k + offset;
                    let s: T = g.iter().zip(xi[..=top].iter().rev()).map(|(a, b)| *a * *b).sum();
                    mean[k] + s * dt
                })
                .collect()
        })
        .collect();
    Ok(TrajectoryEnsemble { dt, mean, paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::work::Shape;

    fn setup() -> (SpectralDensity<f64>, GreensSolutions<f64>) {
        let sd = SpectralDensity::ohmic(0.3, 1.0).unwrap();
        let gs = GreensSolutions::markovian(0.3, 1.0, 1.0, TimeGrid::new(0.02, 1501).unwrap());
        (sd, gs)
    }

    #[test]
    fn held_force_does_no_work() {
        let (sd, gs) = setup();
        let p = Protocol::new(Shape::Ramp, 0.4, 0.0, 2.0).unwrap();
        let s = ContinuumSampler::new(&sd, 1.0, 0.0, &p, &gs, 3).unwrap();
        assert!(s.sample(6).samples.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn discrete_variance_matches_analytic() {
        // white noise: σ_W² = (2/β)·ḟ·h·ḟ/(2MΩ²) in the classical limit
        let (sd, gs) = setup();
        let p = Protocol::new(Shape::Smoothstep, 0.0, 1.0, 3.0).unwrap();
        let s = ContinuumSampler::new(&sd, 2.0, 0.0, &p, &gs, 0).unwrap();
        let exact = crate::work::work_variance_frequency(&p, &sd, 1.0, 2.0, 0.0).unwrap();
        let v = s.response.variance(s.synth.covariance());
        assert!((v - exact).abs() < 1e-4 * exact, "{v} vs {exact}");
    }

    #[test]
    fn noiseless_trajectory_is_forced_response() {
        let (_, gs) = setup();
        let p = Protocol::ramp(0.0, 1.0, 2.0).unwrap();
        let ens = NoiseEnsemble {
            dt: 0.02,
            seed: 0,
            realizations: vec![vec![0.0; 1700]],
            covariance: vec![],
            method: "zero".into(),
        };
        let t = sample_trajectories(&ens, &p, &gs).unwrap();
        assert_eq!(t.paths[0], t.mean);
        assert_eq!(t.mean.len(), 200, "{}", t.mean.len());
        // the force starts at zero, so does the stationary response
        assert!(t.mean[0].abs() < 1e-12);
        assert!(t.mean[199] > 0.5);
    }
}
