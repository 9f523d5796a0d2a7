//! Bath models: spectral densities and the damping / noise kernels they
//! generate, in time, frequency and Laplace representations.
//!
//! Conventions: `k_B = 1`; the noise covariance is stored as `ħν` so that the
//! classical limit `ħ → 0` is a plain parameter value. Fourier transforms use
//! `f̃(ω) = (1/2π)∫ f(t) e^{-iωt} dt`, hence
//! `γ̃(ω) = J(ω)/(2Mω)` and `ħν̃(ω) = M ħω coth(βħω/2) γ̃(ω)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::{fourier_integral, integrate, integrate_to_inf, QuadTol, Trig};
use crate::scalar::Real;
use crate::special::{thermal_q, thermal_q_excess};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    /// `J = (2Mγ₀/π) ω`; the damping kernel is `2γ₀δ(t)`.
    OhmicNoCutoff,
    /// `J = (2Mγ₀/π) ω Λ²/(ω²+Λ²)`.
    OhmicDrude,
    /// `J = (2Mγ₀/π) Λ^{1-s} ω^s Λ²/(ω²+Λ²)`, `0 < s < 2`.
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity<T> {
    pub kind: BathKind,
    pub gamma0: T,
    pub cutoff: Option<T>,
    pub exponent: Option<T>,
    pub mass: T,
}

impl<T: Real> SpectralDensity<T> {
    pub fn ohmic(gamma0: T, mass: T) -> Result<Self> {
        Self {
            kind: BathKind::OhmicNoCutoff,
            gamma0,
            cutoff: None,
            exponent: None,
            mass,
        }
        .validated()
    }

    pub fn drude(gamma0: T, cutoff: T, mass: T) -> Result<Self> {
        Self {
            kind: BathKind::OhmicDrude,
            gamma0,
            cutoff: Some(cutoff),
            exponent: None,
            mass,
        }
        .validated()
    }

    pub fn power_law(gamma0: T, cutoff: T, exponent: T, mass: T) -> Result<Self> {
        Self {
            kind: BathKind::PowerLaw,
            gamma0,
            cutoff: Some(cutoff),
            exponent: Some(exponent),
            mass,
        }
        .validated()
    }

    /// Checks parameter ranges; used by the constructors and by callers that
    /// build the struct literally (e.g. from a config file).
    pub fn validated(self) -> Result<Self> {
        let bad = |m: String| Err(Error::domain("bath", m));
        if !(self.gamma0 > T::zero()) || !self.gamma0.is_finite() {
            return bad(format!("gamma0 must be positive, got {}", self.gamma0));
        }
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        match self.kind {
            BathKind::OhmicNoCutoff => {
                if self.cutoff.is_some() {
                    return bad("ohmic_no_cutoff takes no cutoff".into());
                }
            }
            BathKind::OhmicDrude | BathKind::PowerLaw => match self.cutoff {
                Some(c) if c > T::zero() && c.is_finite() => {}
                other => return bad(format!("cutoff must be positive, got {other:?}")),
            },
        }
        if self.kind == BathKind::PowerLaw {
            match self.exponent {
                Some(s) if s > T::zero() && s < T::lit(2.0) => {}
                other => return bad(format!("power-law exponent must lie in (0, 2), got {other:?}")),
            }
        }
        Ok(self)
    }

    pub fn is_local(&self) -> bool {
        self.kind == BathKind::OhmicNoCutoff
    }

    fn lambda(&self) -> T {
        self.cutoff.unwrap_or_else(T::infinity)
    }

    /// Characteristic frequency of the bath (cutoff, or `γ₀` without one).
    pub fn scale(&self) -> T {
        self.cutoff.unwrap_or(self.gamma0)
    }

    fn prefactor(&self) -> T {
        T::lit(2.0) * self.mass * self.gamma0 / T::PI()
    }

    /// `J(ω)/ω`, finite at `ω = 0` except for sub-Ohmic power laws.
    pub fn j_over_omega(&self, omega: T) -> T {
        let w = omega.abs();
        let p = self.prefactor();
        match self.kind {
            BathKind::OhmicNoCutoff => p,
            BathKind::OhmicDrude => {
                let l = self.lambda();
                p * l * l / (w * w + l * l)
            }
            BathKind::PowerLaw => {
                let l = self.lambda();
                let s = self.exponent.unwrap_or(T::one());
                p * (w / l).powf(s - T::one()) * l * l / (w * w + l * l)
            }
        }
    }

    /// Spectral density `J(ω)`.
    pub fn spectral_density(&self, omega: T) -> Result<T> {
        if omega < T::zero() || omega.is_nan() {
            return Err(Error::domain("bath", format!("J(omega) needs omega >= 0, got {omega}")));
        }
        if omega == T::zero() {
            return Ok(T::zero());
        }
        Ok(omega * self.j_over_omega(omega))
    }

    /// `γ̃(ω) = J(|ω|)/(2M|ω|)`.
    pub fn gamma_ft(&self, omega: T) -> T {
        self.j_over_omega(omega) / (T::lit(2.0) * self.mass)
    }

    /// `ħν̃(ω) = ħω coth(βħω/2) J(|ω|)/(2|ω|)`; classical value at `ħ = 0`.
    pub fn noise_ft(&self, omega: T, beta: T, hbar: T) -> T {
        thermal_q(omega.abs(), beta, hbar) * self.j_over_omega(omega) * T::lit(0.5)
    }

    /// Damping kernel `γ(t) = (1/M)∫₀^∞ (J/ω) cos ωt dω`.
    pub fn damping_kernel(&self, t: T) -> Result<T> {
        let t = t.abs();
        match self.kind {
            BathKind::OhmicNoCutoff => Err(Error::LocalKernel),
            BathKind::OhmicDrude => {
                let l = self.lambda();
                Ok(self.gamma0 * l * (-l * t).exp())
            }
            BathKind::PowerLaw => self.damping_kernel_by_quadrature(t),
        }
    }

    /// Damping kernel from its frequency-integral definition, for any kernel
    /// with a cutoff. Slower than the closed forms; used for cross-checks and
    /// for the power-law bath.
    pub fn damping_kernel_by_quadrature(&self, t: T) -> Result<T> {
        if self.is_local() {
            return Err(Error::LocalKernel);
        }
        let m = self.mass;
        let q = fourier_integral(|w| self.j_over_omega(w) / m, t, Trig::Cos, self.scale(), QuadTol::tight());
        Ok(q.value)
    }

    /// `Γ₁(τ) = ∫₀^τ γ`.
    pub fn gamma_integral(&self, tau: T) -> Result<T> {
        match self.kind {
            BathKind::OhmicNoCutoff => Err(Error::LocalKernel),
            BathKind::OhmicDrude => {
                let l = self.lambda();
                Ok(-self.gamma0 * (-l * tau).exp_m1())
            }
            BathKind::PowerLaw => {
                // (1/M)∫ (J/ω) sin(ωτ)/ω dω
                let m = self.mass;
                let q = fourier_integral(
                    |w| {
                        if w == T::zero() {
                            T::zero()
                        } else {
                            self.j_over_omega(w) / (m * w)
                        }
                    },
                    tau,
                    Trig::Sin,
                    self.scale(),
                    QuadTol::tight(),
                );
                Ok(q.value)
            }
        }
    }

    /// Laplace transform `γ̂(s)` for `Re s > 0`.
    pub fn damping_laplace(&self, s: Complex<T>) -> Result<Complex<T>> {
        if !(s.re > T::zero()) {
            return Err(Error::domain("bath", format!("Laplace transform needs Re(s) > 0, got {s}")));
        }
        Ok(match self.kind {
            BathKind::OhmicNoCutoff => Complex::new(self.gamma0, T::zero()),
            BathKind::OhmicDrude => {
                let l = self.lambda();
                Complex::new(self.gamma0 * l, T::zero()) / (s + l)
            }
            BathKind::PowerLaw => {
                // (1/M)∫ (J/ω) s/(s²+ω²) dω
                let m = self.mass;
                let s2 = s * s;
                let tol = QuadTol::tight();
                let re = integrate_to_inf(|w| (s / (s2 + w * w)).re * self.j_over_omega(w) / m, T::zero(), tol);
                let im = integrate_to_inf(|w| (s / (s2 + w * w)).im * self.j_over_omega(w) / m, T::zero(), tol);
                Complex::new(re.value, im.value)
            }
        })
    }

    /// Boundary value `γ̂(iω) = ∫₀^∞ γ(t) e^{-iωt} dt` on the imaginary axis.
    pub fn damping_laplace_imag_axis(&self, omega: T) -> Complex<T> {
        let m = self.mass;
        match self.kind {
            BathKind::OhmicNoCutoff => Complex::new(self.gamma0, T::zero()),
            BathKind::OhmicDrude => {
                let l = self.lambda();
                Complex::new(self.gamma0 * l, T::zero()) / Complex::new(l, omega)
            }
            BathKind::PowerLaw => {
                let re = T::PI() * self.j_over_omega(omega) / (T::lit(2.0) * m);
                let w = omega.abs();
                if w == T::zero() {
                    return Complex::new(re, T::zero());
                }
                // principal value by subtraction: ∫ (φ(x) − φ(w))/(x² − w²) dx
                let phi_w = self.j_over_omega(w);
                let tol = QuadTol::tight();
                let kern = |x: T| (self.j_over_omega(x) - phi_w) / (x * x - w * w);
                let a = integrate(kern, T::zero(), w, tol).value;
                let b = integrate(kern, w, w + w, tol).value;
                let c = integrate_to_inf(kern, w + w, tol).value;
                let im = omega / m * (a + b + c);
                Complex::new(re, im)
            }
        }
    }

    /// Noise covariance `ħν(t) = ∫₀^∞ (J/ω) ħω coth(βħω/2) cos ωt dω`.
    ///
    /// At `ħ = 0` this is `(2M/β)γ(t)`. For the Drude bath at `ħ > 0` the
    /// equal-time value diverges logarithmically (the integrand decays like
    /// `1/ω`), and `t = 0` is reported as an ultraviolet divergence.
    pub fn noise_kernel(&self, t: T, beta: T, hbar: T) -> Result<T> {
        check_thermal(beta, hbar)?;
        let t = t.abs();
        let classical = T::lit(2.0) * self.mass / beta * self.damping_kernel(t)?;
        if hbar == T::zero() {
            return Ok(classical);
        }
        if t == T::zero() && self.equal_time_noise_diverges() {
            return Err(Error::UvDivergence {
                module: "bath",
                message: "equal-time quantum noise kernel diverges logarithmically for this bath".into(),
            });
        }
        Ok(classical + self.noise_excess(t, beta, hbar))
    }

    fn equal_time_noise_diverges(&self) -> bool {
        match self.kind {
            BathKind::OhmicNoCutoff | BathKind::OhmicDrude => true,
            BathKind::PowerLaw => self.exponent.unwrap_or(T::one()) >= T::one(),
        }
    }

    /// Quantum part `∫ (J/ω)(q(ω) − 2/β) cos ωt dω` of the noise covariance.
    fn noise_excess(&self, t: T, beta: T, hbar: T) -> T {
        let scale = self.scale().max(T::one() / (beta * hbar));
        fourier_integral(
            |w| self.j_over_omega(w) * thermal_q_excess(w, beta, hbar),
            t,
            Trig::Cos,
            scale,
            QuadTol::tight(),
        )
        .value
    }

    /// Average of `ħν` over the cell `[-dt/2, dt/2]`; finite even when the
    /// equal-time value is not.
    pub fn noise_kernel_cell_average(&self, dt: T, beta: T, hbar: T) -> Result<T> {
        check_thermal(beta, hbar)?;
        let half = dt * T::lit(0.5);
        if self.is_local() {
            if hbar > T::zero() {
                return Err(uv_local());
            }
            // 2γ₀δ(t) averaged over one cell
            return Ok(T::lit(2.0) * self.mass / beta * T::lit(2.0) * self.gamma0 / dt);
        }
        let scale = self.scale().max(if hbar > T::zero() { T::one() / (beta * hbar) } else { T::zero() });
        // ∫ φ q sin(ω dt/2)/(ω dt/2) dω
        let q = fourier_integral(
            |w| self.j_over_omega(w) * thermal_q(w, beta, hbar) / (w * half),
            half,
            Trig::Sin,
            scale,
            QuadTol::tight(),
        );
        Ok(q.value)
    }
}

fn uv_local() -> Error {
    Error::UvDivergence {
        module: "bath",
        message: "quantum noise of the Ohmic bath without cutoff is not integrable".into(),
    }
}

pub(crate) fn check_thermal<T: Real>(beta: T, hbar: T) -> Result<()> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::domain("bath", format!("beta must be positive and finite, got {beta}")));
    }
    if !(hbar >= T::zero()) || !hbar.is_finite() {
        return Err(Error::domain("bath", format!("hbar must be >= 0, got {hbar}")));
    }
    Ok(())
}

/// Uniform frequency grid `ω_j = j Δω`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid<T> {
    pub d_omega: T,
    pub len: usize,
}

impl<T: Real> FrequencyGrid<T> {
    /// Grid up to `ω_max = 50·max(Λ, Ω, 1/βħ)` with `len` points.
    pub fn for_bath(sd: &SpectralDensity<T>, omega_sys: T, beta: T, hbar: T, len: usize) -> Self {
        let mut top = sd.scale().max(omega_sys);
        if hbar > T::zero() {
            top = top.max(T::one() / (beta * hbar));
        }
        let omega_max = T::lit(50.0) * top;
        Self {
            d_omega: omega_max / T::from_usize_lossy(len.max(2) - 1),
            len: len.max(2),
        }
    }

    pub fn omega(&self, j: usize) -> T {
        self.d_omega * T::from_usize_lossy(j)
    }
}

/// Tabulated kernels on a time grid (lags `t_k ≥ 0`) and a frequency grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTable<T> {
    pub bath: SpectralDensity<T>,
    pub grid: TimeGrid<T>,
    pub beta: T,
    pub hbar: T,
    /// `γ(t_k)`. For the local Ohmic kernel lag 0 holds the cell average
    /// `2γ₀/dt` and every other lag is zero.
    pub gamma: Vec<T>,
    /// `ħν(t_k)`.
    pub hbar_nu: Vec<T>,
    /// Lag 0 of `hbar_nu` is a cell average rather than a point value
    /// (the point value diverges).
    pub lag0_cell_averaged: bool,
    pub local: bool,
    pub freq: FrequencyGrid<T>,
    pub gamma_ft: Vec<T>,
    pub hbar_nu_ft: Vec<T>,
}

impl<T: Real> KernelTable<T> {
    pub fn build(sd: &SpectralDensity<T>, beta: T, hbar: T, grid: TimeGrid<T>, freq: FrequencyGrid<T>) -> Result<Self> {
        check_thermal(beta, hbar)?;
        let local = sd.is_local();
        if local && hbar > T::zero() {
            return Err(uv_local());
        }
        let two_m_beta = T::lit(2.0) * sd.mass / beta;
        let mut lag0_cell_averaged = false;
        let (gamma, hbar_nu) = if local {
            let mut g = vec![T::zero(); grid.len];
            g[0] = T::lit(2.0) * sd.gamma0 / grid.dt;
            let n: Vec<T> = g.iter().map(|&x| two_m_beta * x).collect();
            lag0_cell_averaged = true;
            (g, n)
        } else {
            let gamma: Vec<T> = (0..grid.len)
                .into_par_iter()
                .map(|k| sd.damping_kernel(grid.t(k)))
                .collect::<Result<_>>()?;
            let hbar_nu: Vec<T> = (0..grid.len)
                .into_par_iter()
                .map(|k| {
                    if k == 0 && hbar > T::zero() && sd.equal_time_noise_diverges() {
                        sd.noise_kernel_cell_average(grid.dt, beta, hbar)
                    } else {
                        sd.noise_kernel(grid.t(k), beta, hbar)
                    }
                })
                .collect::<Result<_>>()?;
            if hbar > T::zero() && sd.equal_time_noise_diverges() {
                lag0_cell_averaged = true;
            }
            (gamma, hbar_nu)
        };
        let gamma_ft = (0..freq.len).map(|j| sd.gamma_ft(freq.omega(j))).collect();
        let hbar_nu_ft = (0..freq.len).map(|j| sd.noise_ft(freq.omega(j), beta, hbar)).collect();
        Ok(Self {
            bath: *sd,
            grid,
            beta,
            hbar,
            gamma,
            hbar_nu,
            lag0_cell_averaged,
            local,
            freq,
            gamma_ft,
            hbar_nu_ft,
        })
    }

    /// `γ` at an integer lag (negative lags reflect).
    pub fn gamma_at(&self, lag: isize) -> T {
        self.gamma[lag.unsigned_abs()]
    }

    pub fn hbar_nu_at(&self, lag: isize) -> T {
        self.hbar_nu[lag.unsigned_abs()]
    }

    /// Largest relative violation of `ħν̃ = M ħω coth(βħω/2) γ̃` on the
    /// frequency grid, with the right-hand side evaluated through `coth`
    /// directly (an independent path from the table).
    pub fn fdr_violation(&self) -> T {
        let m = self.bath.mass;
        let max_nu = self.hbar_nu_ft.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        let mut worst = T::zero();
        for j in 0..self.freq.len {
            let w = self.freq.omega(j);
            let rhs = if self.hbar == T::zero() || w == T::zero() {
                T::lit(2.0) * m / self.beta * self.gamma_ft[j]
            } else {
                let x = self.beta * self.hbar * w * T::lit(0.5);
                m * self.hbar * w / x.tanh() * self.gamma_ft[j]
            };
            worst = worst.max((self.hbar_nu_ft[j] - rhs).abs());
        }
        if max_nu > T::zero() {
            worst / max_nu
        } else {
            worst
        }
    }
}
