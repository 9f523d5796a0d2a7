//! Classical closed-system oracle: the oscillator coupled to a finite set of
//! bath oscillators,
//!
//! ```text
//! H = P²/2M + ½MΩ²X² − f(t)X + Σ_n [p_n²/2m_n + ½m_nω_n²(x_n − c_nX/(m_nω_n²))²],
//! ```
//!
//! which keeps the observed frequency at `Ω`. The combined system starts in
//! its thermal state at `f(0)` and evolves under the full Hamiltonian, so the
//! Jarzynski equality holds exactly for any number of modes.
//!
//! In mass-weighted coordinates the system is linear with a constant
//! stiffness matrix; its normal modes `Q_k` (frequencies `ϖ_k`) see the drive
//! through `e_k = U_{0k}/√M`, and the work is exactly
//!
//! ```text
//! W = ΔF + ½Σ(e_k/ϖ_k)²|F(ϖ_k)|² − Σ e_k[Q̃_k(0) Re F(ϖ_k) − P_k(0) Im F(ϖ_k)/ϖ_k]
//! ```
//!
//! with `F(ω) = ∫ḟ e^{−iωt} dt` and `Q̃_k` the displacement from the initial
//! equilibrium. A leapfrog integrator is available as an independent check.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::SpectralDensity;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::thermal::delta_f;
use crate::work::Protocol;

/// How bath frequencies are placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discretization<T> {
    /// Midpoints `ω_n = (n − ½)Δω` on `(0, ω_max]`.
    Uniform { omega_max: T },
    /// `ω_n = Λ tan θ_n` with midpoints `θ_n` on `(0, π/2)`; for the Drude
    /// bath every mode then carries the same share of `γ(0)`.
    Tangent,
}

/// A finite bath discretizing a continuous spectral density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteBath<T> {
    pub mass: T,
    pub omega: T,
    pub beta: T,
    pub frequencies: Vec<T>,
    pub masses: Vec<T>,
    pub couplings: Vec<T>,
    pub discretization: Discretization<T>,
    /// `2π` over the mode spacing at the system frequency.
    pub recurrence_time: T,
}

impl<T: Real> DiscreteBath<T> {
    /// Unit bath masses and `c_n² = 2 m_n ω_n J(ω_n) Δω_n`, so that
    /// `Σ c_n²/(m_nω_n²) cos ω_nt → 2Mγ(t)`.
    pub fn new(sd: &SpectralDensity<T>, omega: T, beta: T, n_modes: usize, disc: Discretization<T>) -> Result<Self> {
        crate::bath::check_thermal(beta, T::zero())?;
        if !(beta > T::zero()) || !(omega > T::zero()) || n_modes == 0 {
            return Err(Error::domain("mc", "discrete bath needs beta > 0, Omega > 0 and at least one mode"));
        }
        let nf = T::from_usize_lossy(n_modes);
        let half = T::lit(0.5);
        let (frequencies, widths, recurrence_time): (Vec<T>, Vec<T>, T) = match disc {
            Discretization::Uniform { omega_max } => {
                if !(omega_max > T::zero()) {
                    return Err(Error::domain("mc", "omega_max must be positive"));
                }
                let dw = omega_max / nf;
                (
                    (0..n_modes).map(|n| (T::from_usize_lossy(n) + half) * dw).collect(),
                    vec![dw; n_modes],
                    T::TAU() / dw,
                )
            }
            Discretization::Tangent => {
                if sd.is_local() {
                    return Err(Error::domain("mc", "the tangent map needs a bath cutoff"));
                }
                let l = sd.scale();
                let dth = T::FRAC_PI_2() / nf;
                let (w, d): (Vec<T>, Vec<T>) = (0..n_modes)
                    .map(|n| {
                        let th = (T::from_usize_lossy(n) + half) * dth;
                        let c = th.cos();
                        (l * th.tan(), l * dth / (c * c))
                    })
                    .unzip();
                let local = l * dth * (T::one() + omega * omega / (l * l));
                (w, d, T::TAU() / local)
            }
        };
        let masses = vec![T::one(); n_modes];
        let couplings = frequencies
            .iter()
            .zip(&widths)
            .map(|(&w, &dw)| Ok((T::lit(2.0) * w * sd.spectral_density(w)? * dw).sqrt()))
            .collect::<Result<Vec<T>>>()?;
        Ok(Self {
            mass: sd.mass,
            omega,
            beta,
            frequencies,
            masses,
            couplings,
            discretization: disc,
            recurrence_time,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// `Σ c_n²/(2m_nω_n²)`, the frequency-renormalization term.
    pub fn counterterm(&self) -> T {
        self.modes().map(|(w, m, c)| c * c / (T::lit(2.0) * m * w * w)).sum()
    }

    /// Discrete damping kernel `(1/2M)Σ c_n²/(m_nω_n²) cos ω_nt`.
    pub fn damping_kernel(&self, t: T) -> T {
        self.modes().map(|(w, m, c)| c * c / (m * w * w) * (w * t).cos()).sum::<T>() / (T::lit(2.0) * self.mass)
    }

    fn modes(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.frequencies
            .iter()
            .zip(&self.masses)
            .zip(&self.couplings)
            .map(|((&w, &m), &c)| (w, m, c))
    }

    /// Mass-weighted stiffness `K`: row 0 is the system.
    fn stiffness(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        let mut k = DMatrix::<f64>::zeros(n + 1, n + 1);
        let mf = self.mass.f64();
        k[(0, 0)] = self.omega.f64().powi(2) + 2.0 * self.counterterm().f64() / mf;
        for (i, (w, m, c)) in self.modes().enumerate() {
            let v = -c.f64() / (mf * m.f64()).sqrt();
            k[(0, i + 1)] = v;
            k[(i + 1, 0)] = v;
            k[(i + 1, i + 1)] = w.f64().powi(2);
        }
        k
    }
}

/// Phase-space state in mass-weighted coordinates `q_i = √m_i x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<T> {
    pub q: Vec<T>,
    pub v: Vec<T>,
}

/// Normal-mode decomposition of a discrete bath plus its oscillator.
#[derive(Debug, Clone)]
pub struct NormalModes<T> {
    pub bath: DiscreteBath<T>,
    /// `ϖ_k`.
    pub frequencies: Vec<T>,
    /// `e_k = U_{0k}/√M`.
    pub drive: Vec<T>,
    /// Eigenvectors, column `k` is mode `k`; row-major `(n+1)²`.
    u: Vec<T>,
}

impl<T: Real> NormalModes<T> {
    pub fn new(bath: DiscreteBath<T>) -> Result<Self> {
        let k = bath.stiffness();
        let dim = k.nrows();
        let eig = SymmetricEigen::new(k);
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite {
                module: "mc",
                message: "discrete-bath stiffness matrix has a non-positive eigenvalue".into(),
            });
        }
        let sm = bath.mass.f64().sqrt();
        let frequencies = eig.eigenvalues.iter().map(|&l| T::lit(l.sqrt())).collect();
        let drive = (0..dim).map(|c| T::lit(eig.eigenvectors[(0, c)] / sm)).collect();
        let u = (0..dim * dim).map(|i| T::lit(eig.eigenvectors[(i / dim, i % dim)])).collect();
        Ok(Self {
            bath,
            frequencies,
            drive,
            u,
        })
    }

    fn dim(&self) -> usize {
        self.frequencies.len()
    }

    fn u(&self, i: usize, k: usize) -> T {
        self.u[i * self.dim() + k]
    }

    /// Minimum of the potential at force `f`.
    pub fn equilibrium(&self, f: T) -> Vec<T> {
        let b = &self.bath;
        let x = f / (b.mass * b.omega * b.omega);
        let mut q = vec![b.mass.sqrt() * x];
        q.extend(b.modes().map(|(w, m, c)| m.sqrt() * c * x / (m * w * w)));
        q
    }

    /// `H` at constant force `f`.
    pub fn energy(&self, s: &PhaseState<T>, f: T) -> T {
        let b = &self.bath;
        let half = T::lit(0.5);
        let kin: T = s.v.iter().map(|v| *v * *v).sum::<T>() * half;
        let x = s.q[0] / b.mass.sqrt();
        let mut pot = half * b.mass * b.omega * b.omega * x * x - f * x;
        for (i, (w, m, c)) in b.modes().enumerate() {
            let y = s.q[i + 1] / m.sqrt() - c * x / (m * w * w);
            pot += half * m * w * w * y * y;
        }
        kin + pot
    }

    /// Exact evolution for time `t` at constant force `f`.
    pub fn propagate(&self, s: &PhaseState<T>, f: T, t: T) -> PhaseState<T> {
        let n = self.dim();
        let eq = self.equilibrium(f);
        let mut q = vec![eq[0] * T::zero(); n];
        let mut v = vec![T::zero(); n];
        for k in 0..n {
            let (mut a, mut p) = (T::zero(), T::zero());
            for i in 0..n {
                a += self.u(i, k) * (s.q[i] - eq[i]);
                p += self.u(i, k) * s.v[i];
            }
            let w = self.frequencies[k];
            let (sn, cs) = (w * t).sin_cos();
            let a1 = a * cs + p * sn / w;
            let p1 = p * cs - a * w * sn;
            for i in 0..n {
                q[i] += self.u(i, k) * a1;
                v[i] += self.u(i, k) * p1;
            }
        }
        for i in 0..n {
            q[i] += eq[i];
        }
        PhaseState { q, v }
    }

    /// Draws the thermal state at force `f` in the original coordinates:
    /// `X`, the shifted bath coordinates and all momenta are independent.
    pub fn sample_thermal<R: rand::Rng>(&self, f: T, rng: &mut R) -> PhaseState<T> {
        let b = &self.bath;
        let m_w2 = b.mass * b.omega * b.omega;
        let x = f / m_w2 + T::standard_normal(rng) / (b.beta * m_w2).sqrt();
        let mut q = vec![b.mass.sqrt() * x];
        for (w, m, c) in b.modes() {
            let y = T::standard_normal(rng) / (b.beta * m * w * w).sqrt();
            q.push(m.sqrt() * (y + c * x / (m * w * w)));
        }
        let sd = T::one() / b.beta.sqrt();
        let v = (0..q.len()).map(|_| sd * T::standard_normal(rng)).collect();
        PhaseState { q, v }
    }
}

/// How each sample is propagated through the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Propagation<T> {
    /// Closed-form normal-mode solution.
    Exact,
    /// Kick-drift-kick leapfrog with step at most `dt`; work by the
    /// trapezoid rule.
    Leapfrog { dt: T },
}

/// Work samples from the discrete bath.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteRun<T> {
    pub samples: Vec<T>,
    pub seed: u64,
    pub delta_f: T,
    /// Exact mean and variance of the discrete model.
    pub mean: T,
    pub variance: T,
    pub recurrence_time: T,
    /// The horizon reaches past the recurrence time.
    pub recurrence_warning: bool,
}

struct WorkForm<T> {
    mean: T,
    variance: T,
    /// `W = mean − (q − q_eq)·alpha + v·gamma`.
    alpha: Vec<T>,
    gamma: Vec<T>,
}

fn work_form<T: Real>(nm: &NormalModes<T>, protocol: &Protocol<T>) -> Result<WorkForm<T>> {
    let b = &nm.bath;
    let df = delta_f(protocol.f_start(), protocol.f_end(), b.mass, b.omega)?;
    let n = nm.dim();
    let (mut diss, mut a, mut g) = (T::zero(), vec![T::zero(); n], vec![T::zero(); n]);
    for k in 0..n {
        let w = nm.frequencies[k];
        let e = nm.drive[k];
        let ft = protocol.fdot_transform(w);
        diss += e * e / (w * w) * ft.norm_sqr();
        a[k] = e * ft.re;
        g[k] = e * ft.im / w;
    }
    // back to mass-weighted coordinates: α = U a, γ = U g
    let alpha = (0..n).map(|i| (0..n).map(|k| nm.u(i, k) * a[k]).sum()).collect();
    let gamma = (0..n).map(|i| (0..n).map(|k| nm.u(i, k) * g[k]).sum()).collect();
    Ok(WorkForm {
        mean: df + T::lit(0.5) * diss,
        variance: diss / b.beta,
        alpha,
        gamma,
    })
}

fn leapfrog_work<T: Real>(nm: &NormalModes<T>, protocol: &Protocol<T>, s: &PhaseState<T>, dt_max: T) -> T {
    let b = &nm.bath;
    let tau = protocol.tau;
    let steps = (tau / dt_max).ceil().to_usize().unwrap_or(1).max(1);
    let dt = tau / T::from_usize_lossy(steps);
    let sm = b.mass.sqrt();
    let k00 = b.omega * b.omega + T::lit(2.0) * b.counterterm() / b.mass;
    let k0: Vec<T> = b.modes().map(|(_, m, c)| -c / (b.mass * m).sqrt()).collect();
    let w2: Vec<T> = b.frequencies.iter().map(|w| *w * *w).collect();
    let accel = |q: &[T], f: T, out: &mut [T]| {
        let mut a0 = -k00 * q[0] + f / sm;
        for n in 0..k0.len() {
            a0 -= k0[n] * q[n + 1];
            out[n + 1] = -k0[n] * q[0] - w2[n] * q[n + 1];
        }
        out[0] = a0;
    };
    let (mut q, mut v) = (s.q.clone(), s.v.clone());
    let mut a = vec![T::zero(); q.len()];
    accel(&q, protocol.value(T::zero()), &mut a);
    let half = T::lit(0.5);
    let mut w = -half * dt * protocol.fdot(T::zero()) * q[0] / sm;
    for step in 1..=steps {
        let t = dt * T::from_usize_lossy(step);
        for i in 0..q.len() {
            v[i] += half * dt * a[i];
            q[i] += dt * v[i];
        }
        accel(&q, protocol.value(t), &mut a);
        for i in 0..q.len() {
            v[i] += half * dt * a[i];
        }
        let wt = if step == steps { half } else { T::one() };
        w -= wt * dt * protocol.fdot(t) * q[0] / sm;
    }
    w
}

/// Work samples of the closed system started in its thermal state.
/// `horizon` is the time span the run is meant to represent (at least `τ`);
/// it is compared with the recurrence time.
pub fn discrete_bath_oracle<T: Real>(
    db: &DiscreteBath<T>,
    protocol: &Protocol<T>,
    n_samples: usize,
    seed: u64,
    horizon: T,
    propagation: Propagation<T>,
) -> Result<DiscreteRun<T>> {
    if horizon < protocol.tau {
        return Err(Error::domain("mc", "horizon is shorter than the protocol"));
    }
    let recurrence_warning = horizon > db.recurrence_time;
    if recurrence_warning {
        log::warn!(
            "horizon {} exceeds the discrete-bath recurrence time {}",
            horizon,
            db.recurrence_time
        );
    }
    let nm = NormalModes::new(db.clone())?;
    let form = work_form(&nm, protocol)?;
    let f0 = protocol.f_start();
    let eq = nm.equilibrium(f0);
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let s = nm.sample_thermal(f0, &mut rng);
            match propagation {
                Propagation::Exact => {
                    let mut w = form.mean;
                    for j in 0..s.q.len() {
                        w += s.v[j] * form.gamma[j] - (s.q[j] - eq[j]) * form.alpha[j];
                    }
                    w
                }
                Propagation::Leapfrog { dt } => leapfrog_work(&nm, protocol, &s, dt),
            }
        })
        .collect();
    Ok(DiscreteRun {
        samples,
        seed,
        delta_f: delta_f(f0, protocol.f_end(), db.mass, db.omega)?,
        mean: form.mean,
        variance: form.variance,
        recurrence_time: db.recurrence_time,
        recurrence_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::work::Shape;

    fn bath(n: usize) -> DiscreteBath<f64> {
        let sd = SpectralDensity::drude(0.4, 5.0, 1.0).unwrap();
        DiscreteBath::new(&sd, 1.0, 1.5, n, Discretization::Tangent).unwrap()
    }

    #[test]
    fn couplings_reproduce_spectral_density() {
        let sd = SpectralDensity::drude(0.4, 5.0, 1.0).unwrap();
        let db = DiscreteBath::new(&sd, 1.0, 1.0, 4000, Discretization::Uniform { omega_max: 40.0 }).unwrap();
        // Σ c²/(2mω) over a bin ≈ ∫ J over the bin
        for (a, b) in [(0.0, 2.0), (2.0, 6.0), (10.0, 20.0)] {
            let binned: f64 = db
                .modes()
                .filter(|(w, _, _)| *w > a && *w <= b)
                .map(|(w, m, c)| c * c / (2.0 * m * w))
                .sum();
            let exact = crate::quad::integrate(|w| sd.spectral_density(w).unwrap(), a, b, crate::quad::QuadTol::tight()).value;
            assert!((binned - exact).abs() < 1e-5 * exact, "[{a},{b}]: {binned} vs {exact}");
        }
    }

    #[test]
    fn discrete_kernel_approaches_continuum() {
        let sd = SpectralDensity::drude(0.4, 5.0, 1.0).unwrap();
        let db = bath(2000);
        for t in [0.0, 0.1, 0.5, 1.0] {
            let exact = sd.damping_kernel(t).unwrap();
            assert!((db.damping_kernel(t) - exact).abs() < 5e-3 * sd.damping_kernel(0.0).unwrap(), "t={t}: {} vs {exact}", db.damping_kernel(t));
        }
    }

    #[test]
    fn observed_frequency_is_preserved() {
        // static response to a force is 1/MΩ²: Σ e_k²/ϖ_k² = 1/MΩ²
        let nm = NormalModes::new(bath(50)).unwrap();
        let s: f64 = nm.drive.iter().zip(&nm.frequencies).map(|(e, w)| e * e / (w * w)).sum();
        assert!((s - 1.0).abs() < 1e-8, "{s}");
    }

    #[test]
    fn exact_propagation_conserves_energy() {
        let nm = NormalModes::new(bath(40)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s0 = nm.sample_thermal(0.3, &mut rng);
        let e0 = nm.energy(&s0, 0.3);
        let mut s = s0.clone();
        for _ in 0..100 {
            s = nm.propagate(&s, 0.3, 0.7);
        }
        assert!((nm.energy(&s, 0.3) - e0).abs() < 1e-8 * e0.abs());
    }

    #[test]
    fn leapfrog_agrees_with_exact_work() {
        let db = bath(12);
        let p = Protocol::new(Shape::Smoothstep, 0.0, 1.0, 3.0).unwrap();
        let wmax = db.frequencies.iter().copied().fold(0.0, f64::max);
        let exact = discrete_bath_oracle(&db, &p, 8, 1, 3.0, Propagation::Exact).unwrap();
        let lf = discrete_bath_oracle(&db, &p, 8, 1, 3.0, Propagation::Leapfrog { dt: 0.002 / wmax }).unwrap();
        for (a, b) in exact.samples.iter().zip(&lf.samples) {
            assert!((a - b).abs() < 1e-4 * exact.variance.sqrt(), "{a} vs {b}");
        }
    }

    #[test]
    fn analytic_moments_satisfy_jarzynski() {
        let db = bath(30);
        let p = Protocol::ramp(0.0, 1.0, 2.0).unwrap();
        let run = discrete_bath_oracle(&db, &p, 4, 0, 2.0, Propagation::Exact).unwrap();
        let imbalance = db.beta * run.variance / 2.0 - (run.mean - run.delta_f);
        assert!(imbalance.abs() < 1e-14);
        assert!(!run.recurrence_warning);
    }
}
