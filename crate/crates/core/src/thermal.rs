//! Equilibrium properties of the damped oscillator: Matsubara variances,
//! the stationary position correlation, and free energies.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{check_thermal, SpectralDensity};
use crate::error::{Error, Result};
use crate::greens::GreensSolutions;
use crate::quad::{fourier_integral, integrate_to_inf, QuadTol, Trig};
use crate::scalar::Real;
use crate::special::{thermal_q, thermal_q_excess};

/// Result of a truncated Matsubara sum `Σ_{r≥1} a(ν_r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatsubaraSum<T> {
    pub value: T,
    /// Number of explicitly summed terms.
    pub terms: usize,
    /// Magnitude of the integral tail estimate beyond the last explicit term.
    pub tail: T,
    /// Change of the total on the last doubling of the truncation.
    pub change: T,
}

/// `Σ_{r≥1} a(r ν₁)` as explicit terms up to `R` plus `∫_{R+½}^∞ a(r ν₁) dr`,
/// doubling `R` until the total moves by less than `tol` (relative).
pub fn matsubara_sum<T: Real, F: Fn(T) -> T + Sync>(a: F, nu1: T, tol: T) -> Result<MatsubaraSum<T>> {
    let qt = QuadTol::new(T::zero(), tol.min(T::lit(1e-12)).max(T::epsilon() * T::lit(100.0)));
    let tail_from = |r: usize| {
        let r0 = T::from_usize_lossy(r) + T::lit(0.5);
        integrate_to_inf(|x| a(x * nu1), r0, qt)
    };
    let mut r = 64usize;
    let mut explicit: T = (1..=r).map(|k| a(T::from_usize_lossy(k) * nu1)).sum();
    let mut tail = tail_from(r);
    let mut total = explicit + tail.value;
    let max_r = 1usize << 22;
    loop {
        let next_r = 2 * r;
        explicit += (r + 1..=next_r).map(|k| a(T::from_usize_lossy(k) * nu1)).sum();
        let next_tail = tail_from(next_r);
        let next_total = explicit + next_tail.value;
        let change = (next_total - total).abs();
        r = next_r;
        tail = next_tail;
        total = next_total;
        if !total.is_finite() || !tail.converged && next_r >= max_r {
            return Err(Error::Divergent {
                module: "thermal",
                message: "Matsubara sum does not converge (no high-frequency cutoff?)".into(),
            });
        }
        if change <= tol * total.abs() && tail.converged {
            return Ok(MatsubaraSum {
                value: total,
                terms: r,
                tail: tail.value.abs(),
                change,
            });
        }
        if r >= max_r {
            return Err(Error::Divergent {
                module: "thermal",
                message: format!("Matsubara sum not converged after {r} terms (last change {change})"),
            });
        }
    }
}

fn nu_gamma_hat<T: Real>(sd: &SpectralDensity<T>, nu: T) -> T {
    // ν γ̂(ν) for real ν > 0
    if nu == T::zero() {
        return T::zero();
    }
    nu * sd
        .damping_laplace(Complex::new(nu, T::zero()))
        .map(|c| c.re)
        .unwrap_or(T::zero())
}

fn matsubara_spacing<T: Real>(beta: T, hbar: T) -> T {
    T::TAU() / (beta * hbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState<T> {
    pub beta: T,
    pub hbar: T,
    pub mass: T,
    pub omega: T,
    pub sigma_xx0: T,
    pub sigma_pp0: T,
    /// Explicit Matsubara terms used (0 in the classical limit).
    pub matsubara_cutoff: usize,
    pub tail_xx: T,
    pub tail_pp: T,
}

/// `σ_xx = (1/Mβ) Σ_{r∈ℤ} 1/(Ω² + ν_r² + 2|ν_r|γ̂(|ν_r|))`.
pub fn sigma_xx_matsubara<T: Real>(sd: &SpectralDensity<T>, beta: T, hbar: T, omega: T, tol: T) -> Result<(T, MatsubaraSum<T>)> {
    check_thermal(beta, hbar)?;
    let m = sd.mass;
    let w2 = omega * omega;
    let base = T::one() / (m * beta * w2);
    if hbar == T::zero() {
        return Ok((base, empty_sum()));
    }
    let s = matsubara_sum(|nu| T::one() / (w2 + nu * nu + T::lit(2.0) * nu_gamma_hat(sd, nu)), matsubara_spacing(beta, hbar), tol)?;
    Ok((base + T::lit(2.0) * s.value / (m * beta), s))
}

/// `σ_pp = (M/β) Σ_{r∈ℤ} (Ω² + 2|ν_r|γ̂)/(Ω² + ν_r² + 2|ν_r|γ̂)`; needs a cutoff.
pub fn sigma_pp_matsubara<T: Real>(sd: &SpectralDensity<T>, beta: T, hbar: T, omega: T, tol: T) -> Result<(T, MatsubaraSum<T>)> {
    check_thermal(beta, hbar)?;
    let m = sd.mass;
    let w2 = omega * omega;
    if hbar == T::zero() {
        return Ok((m / beta, empty_sum()));
    }
    if sd.is_local() {
        return Err(Error::Divergent {
            module: "thermal",
            message: "momentum variance diverges for the Ohmic bath without cutoff".into(),
        });
    }
    let s = matsubara_sum(
        |nu| {
            let d = T::lit(2.0) * nu_gamma_hat(sd, nu);
            (w2 + d) / (w2 + nu * nu + d)
        },
        matsubara_spacing(beta, hbar),
        tol,
    )?;
    Ok((m / beta * (T::one() + T::lit(2.0) * s.value), s))
}

fn empty_sum<T: Real>() -> MatsubaraSum<T> {
    MatsubaraSum {
        value: T::zero(),
        terms: 0,
        tail: T::zero(),
        change: T::zero(),
    }
}

/// Equal-time variances of the thermally prepared open oscillator.
pub fn equilibrium_variances<T: Real>(sd: &SpectralDensity<T>, beta: T, hbar: T, omega: T, tol: T) -> Result<ThermalState<T>> {
    if !(omega > T::zero()) {
        return Err(Error::domain("thermal", format!("Omega must be positive, got {omega}")));
    }
    let (xx, sx) = sigma_xx_matsubara(sd, beta, hbar, omega, tol)?;
    let (pp, sp) = sigma_pp_matsubara(sd, beta, hbar, omega, tol)?;
    Ok(ThermalState {
        beta,
        hbar,
        mass: sd.mass,
        omega,
        sigma_xx0: xx,
        sigma_pp0: pp,
        matsubara_cutoff: sx.terms.max(sp.terms),
        tail_xx: sx.tail,
        tail_pp: sp.tail,
    })
}

/// Spectral weight `h̃_e(ω) = Ω² J(ω) / (M ω |D(iω)|²)` of the even
/// extension `h(|t|)`, with `D(iω) = Ω² − ω² + 2iωγ̂(iω)`.
pub fn h_even_ft<T: Real>(sd: &SpectralDensity<T>, omega_sys: T, omega: T) -> T {
    let w = omega.abs();
    let gh = sd.damping_laplace_imag_axis(w);
    let two = T::lit(2.0);
    let d = Complex::new(omega_sys * omega_sys - w * w, T::zero()) + Complex::new(T::zero(), two * w) * gh;
    omega_sys * omega_sys * sd.j_over_omega(w) / (sd.mass * d.norm_sqr())
}

/// Stationary spectrum `σ̃_xx(ω) = ħω coth(βħω/2) h̃_e(ω) / (2MΩ²)`.
pub fn sigma_xx_ft<T: Real>(sd: &SpectralDensity<T>, omega_sys: T, beta: T, hbar: T, omega: T) -> T {
    thermal_q(omega.abs(), beta, hbar) * h_even_ft(sd, omega_sys, omega) / (T::lit(2.0) * sd.mass * omega_sys * omega_sys)
}

fn spectral_scale<T: Real>(sd: &SpectralDensity<T>, omega_sys: T, beta: T, hbar: T) -> T {
    let mut s = sd.scale().max(omega_sys);
    if hbar > T::zero() {
        s = s.max(T::one() / (beta * hbar));
    }
    s
}

/// Quantum part of the stationary correlation,
/// `C(τ) = (1/MΩ²) ∫₀^∞ (ħω coth(βħω/2) − 2/β) h̃_e(ω) cos ωτ dω`
/// (identically zero at `ħ = 0`).
pub fn sigma_xx_quantum_part<T: Real>(sd: &SpectralDensity<T>, omega_sys: T, beta: T, hbar: T, tau: T) -> T {
    if hbar == T::zero() {
        return T::zero();
    }
    let scale = spectral_scale(sd, omega_sys, beta, hbar);
    let q = fourier_integral(
        |w| thermal_q_excess(w, beta, hbar) * h_even_ft(sd, omega_sys, w),
        tau,
        Trig::Cos,
        scale,
        QuadTol::tight(),
    );
    q.value / (sd.mass * omega_sys * omega_sys)
}

/// Equal-time variance from the frequency integral (independent of the
/// Matsubara route): `σ_xx(0) = ∫ σ̃_xx(ω) dω`.
pub fn sigma_xx0_frequency<T: Real>(sd: &SpectralDensity<T>, omega_sys: T, beta: T, hbar: T) -> Result<T> {
    check_thermal(beta, hbar)?;
    let classical = T::one() / (beta * sd.mass * omega_sys * omega_sys);
    Ok(classical + sigma_xx_quantum_part(sd, omega_sys, beta, hbar, T::zero()))
}

/// Stationary correlation `σ_xx(τ) = h(|τ|)/(βMΩ²) + C(τ)` on the lags of a
/// Green's-function grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryCorrelation<T> {
    pub dt: T,
    /// `σ_xx(k dt)`, `k = 0..len`.
    pub values: Vec<T>,
    /// The classical part alone, `h(k dt)/(βMΩ²)`.
    pub classical: Vec<T>,
    /// `|h|/(βMΩ²)` at the last lag: memory not yet decayed at the horizon.
    pub truncation_estimate: T,
}

impl<T: Real> StationaryCorrelation<T> {
    /// Builds the table for lags `0..lags` (at most the grid length).
    pub fn build(gs: &GreensSolutions<T>, sd: &SpectralDensity<T>, beta: T, hbar: T, lags: usize) -> Result<Self> {
        check_thermal(beta, hbar)?;
        if lags > gs.grid.len {
            return Err(Error::grid(
                "thermal",
                format!("requested {lags} lags but the Green's function table has {}", gs.grid.len),
            ));
        }
        if (gs.mass - sd.mass).abs() > T::epsilon() * gs.mass * T::lit(4.0) {
            return Err(Error::domain("thermal", "bath and Green's-function masses differ"));
        }
        let om = gs.omega;
        let c0 = T::one() / (beta * gs.mass * om * om);
        let classical: Vec<T> = gs.h[..lags].iter().map(|&h| h * c0).collect();
        let quantum: Vec<T> = (0..lags)
            .into_par_iter()
            .map(|k| sigma_xx_quantum_part(sd, om, beta, hbar, gs.grid.t(k)))
            .collect();
        let values = classical.iter().zip(&quantum).map(|(a, b)| *a + *b).collect();
        Ok(Self {
            dt: gs.grid.dt,
            values,
            truncation_estimate: gs.h[lags.max(1) - 1].abs() * c0,
            classical,
        })
    }

    pub fn at(&self, lag: isize) -> T {
        self.values[lag.unsigned_abs()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergies<T> {
    pub delta_f: T,
    pub f_offset: T,
}

/// `ΔF = −(f(τ)² − f(0)²)/(2MΩ²)`.
pub fn delta_f<T: Real>(f0: T, ftau: T, mass: T, omega: T) -> Result<T> {
    if !(omega > T::zero()) || !(mass > T::zero()) {
        return Err(Error::domain("thermal", "delta_F needs positive mass and Omega"));
    }
    Ok(-(ftau * ftau - f0 * f0) / (T::lit(2.0) * mass * omega * omega))
}

/// Free energy of the dressed oscillator relative to the bare bath,
/// `(1/β)[log(βħΩ) + Σ_{r≥1} log(1 + (Ω² + 2ν_rγ̂(ν_r))/ν_r²)]`.
pub fn dressed_free_energy<T: Real>(sd: &SpectralDensity<T>, beta: T, hbar: T, omega: T, tol: T) -> Result<(T, MatsubaraSum<T>)> {
    check_thermal(beta, hbar)?;
    if hbar == T::zero() {
        return Err(Error::domain(
            "thermal",
            "the dressed free energy needs hbar > 0 (it sets the phase-space unit)",
        ));
    }
    if sd.is_local() {
        return Err(Error::Divergent {
            module: "thermal",
            message: "the Matsubara product diverges for the Ohmic bath without cutoff".into(),
        });
    }
    let w2 = omega * omega;
    let s = matsubara_sum(
        |nu| ((w2 + T::lit(2.0) * nu_gamma_hat(sd, nu)) / (nu * nu)).ln_1p(),
        matsubara_spacing(beta, hbar),
        tol,
    )?;
    Ok((((beta * hbar * omega).ln() + s.value) / beta, s))
}

/// Free energy of a bare quantum oscillator, `(1/β) log(2 sinh(βħΩ/2))`.
pub fn free_oscillator_free_energy<T: Real>(beta: T, hbar: T, omega: T) -> T {
    let x = beta * hbar * omega * T::lit(0.5);
    // log(2 sinh x) = x + log(1 − e^{−2x})
    (x + (-(-(x + x)).exp()).ln_1p()) / beta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_oscillator_variance() {
        // γ̂ → 0: σ_xx = (ħ/2MΩ) coth(βħΩ/2)
        let sd = SpectralDensity::drude(1e-300, 1.0, 1.3).unwrap();
        for &(beta, hbar, om) in &[(1.0, 1.0, 1.0), (3.0, 0.5, 2.0), (0.2, 1.0, 0.7)] {
            let (v, _) = sigma_xx_matsubara(&sd, beta, hbar, om, 1e-10).unwrap();
            let exact = hbar / (2.0 * 1.3 * om) / (beta * hbar * om / 2.0f64).tanh();
            assert!((v - exact).abs() < 1e-9 * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn classical_limits() {
        let sd = SpectralDensity::drude(0.5, 3.0, 2.0).unwrap();
        let st = equilibrium_variances(&sd, 1.5, 0.0, 1.2, 1e-8).unwrap();
        assert_eq!(st.sigma_xx0, 1.0 / (1.5 * 2.0 * 1.44));
        assert_eq!(st.sigma_pp0, 2.0 / 1.5);
        let st = equilibrium_variances(&sd, 1.5, 1e-4, 1.2, 1e-10).unwrap();
        assert!((st.sigma_xx0 as f64 / (1.0 / (1.5 * 2.0 * 1.44)) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn ohmic_momentum_diverges() {
        let sd = SpectralDensity::ohmic(0.5, 1.0).unwrap();
        assert!(matches!(sigma_pp_matsubara(&sd, 1.0, 1.0, 1.0, 1e-8), Err(Error::Divergent { .. })));
        assert!(sigma_xx_matsubara(&sd, 1.0, 1.0, 1.0, 1e-8).is_ok());
    }

    #[test]
    fn free_energy_of_uncoupled_oscillator() {
        let sd = SpectralDensity::drude(1e-300, 1.0, 1.0).unwrap();
        for &(beta, om) in &[(1.0, 1.0), (5.0, 2.0), (0.05, 1.0)] {
            let (f, _) = dressed_free_energy(&sd, beta, 1.0, om, 1e-12).unwrap();
            let exact: f64 = free_oscillator_free_energy(beta, 1.0, om);
            assert!((f - exact).abs() < 1e-9 * exact.abs().max(1.0), "{f} vs {exact}");
        }
        // high temperature: (1/β) log(βħΩ)
        let f = free_oscillator_free_energy(1e-3, 1.0, 1.0);
        assert!((f - 1e3 * (1e-3f64).ln()).abs() < 1e-3);
    }

    #[test]
    fn delta_f_values() {
        assert_eq!(delta_f(1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(delta_f(0.0, 1.0, 1.0, 1.0).unwrap(), -0.5);
        assert_eq!(delta_f(0.3, 1.7, 2.0, 0.5).unwrap(), -delta_f(1.7, 0.3, 2.0, 0.5).unwrap());
        assert!(delta_f(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn markovian_spectral_weight_integrates_to_one() {
        // h_e(0) = 2∫₀^∞ h̃_e = 1
        let sd = SpectralDensity::<f64>::ohmic(0.3, 1.0).unwrap();
        let q = integrate_to_inf(|w: f64| h_even_ft(&sd, 1.0, w), 0.0, QuadTol::tight());
        assert!((2.0 * q.value - 1.0).abs() < 1e-10);
    }
}
