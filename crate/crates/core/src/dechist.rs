//! Gaussian-window decoherence functional and the resolvability of
//! trajectories.
//!
//! For two coarse-grained histories with mean `U` and separation `u`,
//! resolved with Gaussian windows of width `σ(t)`, the magnitude of the
//! decoherence functional is
//!
//! ```text
//! |D| ≈ exp{−½ a·(ν + (2σ²)⁻¹)⁻¹·a − ½ u·(ν⁻¹ + 2σ²)⁻¹·u},   a = (L·U − f)/ħ,
//! ```
//!
//! with `L` the Langevin operator and `ν = ħν/ħ²` the noise kernel. On a grid
//! of bins of width `dt`, `ν` becomes the matrix of bin-pair double
//! integrals `dt² ħν(t_j − t_k)/ħ²` (cell-averaged on the diagonal) and `a` is
//! weighted by `dt`. Both forms reduce to one Cholesky factorisation of
//! `B = ν + (2σ²)⁻¹`, since `(ν⁻¹ + 2σ²)⁻¹ = D − D B⁻¹ D` with `D = (2σ²)⁻¹`.
//!
//! A single bin of one system period is the scalar model: the separation is
//! suppressed beyond `u* = √(ν₀⁻¹ + 2σ²)`, where `ν₀` is the double integral
//! of `ν` over one period.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bath::{KernelTable, SpectralDensity};
use crate::error::{Error, Result};
use crate::greens::{differentiate, memory_integral};
use crate::quad::{integrate, integrate_to_inf, QuadTol};
use crate::scalar::Real;

/// Largest history length accepted by the dense solve.
pub const MAX_GRID: usize = 2048;

/// Two histories in mean/separation form on the kernel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPair<T> {
    /// `U = (χ′ + χ)/2`.
    pub mean: Vec<T>,
    /// `u = χ′ − χ`.
    pub separation: Vec<T>,
    /// Resolution width per bin (position units).
    pub sigma: Vec<T>,
}

impl<T: Real> HistoryPair<T> {
    pub fn new(mean: Vec<T>, separation: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        let n = mean.len();
        if separation.len() != n || sigma.len() != n {
            return Err(Error::grid("dechist", "history components have different lengths"));
        }
        if sigma.iter().any(|s| !(*s > T::zero())) {
            return Err(Error::domain("dechist", "resolution width must be positive"));
        }
        Ok(Self { mean, separation, sigma })
    }

    /// From two histories `χ`, `χ′` and a constant width.
    pub fn from_histories(chi: &[T], chi_prime: &[T], sigma: T) -> Result<Self> {
        if chi.len() != chi_prime.len() {
            return Err(Error::grid("dechist", "histories have different lengths"));
        }
        let half = T::lit(0.5);
        Self::new(
            chi.iter().zip(chi_prime).map(|(a, b)| (*a + *b) * half).collect(),
            chi.iter().zip(chi_prime).map(|(a, b)| *b - *a).collect(),
            vec![sigma; chi.len()],
        )
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Logarithms of the two decoherence-functional factors (both `≤ 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceExponents<T> {
    /// `−½ a·(ν + (2σ²)⁻¹)⁻¹·a`.
    pub diag_exponent: T,
    /// `−½ u·(ν⁻¹ + 2σ²)⁻¹·u`.
    pub offdiag_exponent: T,
}

/// Langevin operator `M Ü + 2M∫₀^t γ U̇ + MΩ² U` on the grid.
pub fn langevin_operator<T: Real>(sd: &SpectralDensity<T>, omega: T, dt: T, u: &[T]) -> Result<Vec<T>> {
    let n = u.len();
    if n < 5 {
        return Err(Error::grid("dechist", "the Langevin operator needs at least five grid points"));
    }
    let grid = crate::grid::TimeGrid::new(dt, n)?;
    let ud = differentiate(dt, u);
    let udd = differentiate(dt, &ud);
    let mem = memory_integral(sd, grid, &ud)?;
    let m = sd.mass;
    let two = T::lit(2.0);
    Ok((0..n).map(|k| m * udd[k] + two * m * mem[k] + m * omega * omega * u[k]).collect())
}

/// Bin-pair matrix `dt² ħν(t_j − t_k)/ħ²`, row-major.
pub fn noise_matrix<T: Real>(kernels: &KernelTable<T>, n: usize) -> Vec<T> {
    let c = kernels.grid.dt * kernels.grid.dt / (kernels.hbar * kernels.hbar);
    (0..n * n).map(|i| c * kernels.hbar_nu[(i / n).abs_diff(i % n)]).collect()
}

fn cholesky(b: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = b.nrows();
    let (min_d, max_d) = b.diagonal().iter().fold((f64::INFINITY, 0.0f64), |(a, c), &d| (a.min(d), c.max(d)));
    b.cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        module: "dechist",
        message: format!("regularized noise matrix ({n}×{n}, diagonal in [{min_d:e}, {max_d:e}]) has no Cholesky factor"),
    })
}

/// Both exponents for a history pair; `force` is the external force on the
/// grid (zero when absent).
pub fn decoherence_exponent<T: Real>(
    hp: &HistoryPair<T>,
    kernels: &KernelTable<T>,
    omega: T,
    force: Option<&[T]>,
) -> Result<DecoherenceExponents<T>> {
    let n = hp.len();
    if n > MAX_GRID {
        return Err(Error::Unsupported {
            module: "dechist",
            message: format!("history length {n} exceeds the dense-solve cap {MAX_GRID}"),
        });
    }
    if n > kernels.grid.len {
        return Err(Error::grid("dechist", "kernel table shorter than the histories"));
    }
    if !(kernels.hbar > T::zero()) {
        return Err(Error::domain("dechist", "classical histories decohere at any resolution (hbar = 0)"));
    }
    if let Some(f) = force {
        if f.len() != n {
            return Err(Error::grid("dechist", "force and histories have different lengths"));
        }
    }
    let dt = kernels.grid.dt;
    let lu = langevin_operator(&kernels.bath, omega, dt, &hp.mean)?;
    let scale = dt / kernels.hbar;
    let a: Vec<T> = (0..n).map(|k| (lu[k] - force.map_or(T::zero(), |f| f[k])) * scale).collect();
    let nu = noise_matrix(kernels, n);
    gaussian_window_exponents(&nu, &a, &hp.separation, &hp.sigma)
}

/// The two quadratic forms for an explicit noise matrix `nu` (row-major
/// `n×n`, symmetric), drive residual `a`, separation `u` and widths `σ`.
pub fn gaussian_window_exponents<T: Real>(nu: &[T], a: &[T], u: &[T], sigma: &[T]) -> Result<DecoherenceExponents<T>> {
    let n = a.len();
    if nu.len() != n * n || u.len() != n || sigma.len() != n {
        return Err(Error::grid("dechist", "inconsistent matrix and vector sizes"));
    }
    let d = DVector::from_fn(n, |k, _| 1.0 / (2.0 * sigma[k].f64().powi(2)));
    let mut b = DMatrix::from_fn(n, n, |j, k| nu[j * n + k].f64());
    for k in 0..n {
        b[(k, k)] += d[k];
    }
    let chol = cholesky(b)?;
    let a = DVector::from_fn(n, |k, _| a[k].f64());
    let diag = a.dot(&chol.solve(&a));
    let u = DVector::from_fn(n, |k, _| u[k].f64());
    let du = d.component_mul(&u);
    // uᵀDu − (Du)ᵀB⁻¹Du = (Du)ᵀB⁻¹νu, free of cancellation when ν ≪ D
    let nu_u = DMatrix::from_fn(n, n, |j, k| nu[j * n + k].f64()) * &u;
    let off = du.dot(&chol.solve(&nu_u));
    Ok(DecoherenceExponents {
        diag_exponent: T::lit(-0.5 * diag),
        offdiag_exponent: T::lit(-0.5 * off.max(0.0)),
    })
}

/// Off-diagonal exponent of the one-bin model, `−½u²/(ν₀⁻¹ + 2σ²)`.
pub fn scalar_offdiag_exponent<T: Real>(nu0: T, sigma: T, u: T) -> T {
    -T::lit(0.5) * u * u / (T::one() / nu0 + T::lit(2.0) * sigma * sigma)
}

/// `ν₀ = (1/ħ²)∫∫ ħν(t − t′) dt dt′` over `[0, 2π/Ω]²`, from the spectrum:
/// `(2/ħ²)∫₀^∞ ħν̃(ω) 2(1 − cos ωT)/ω² dω`. Infinite at `ħ = 0`.
pub fn noise_strength<T: Real>(sd: &SpectralDensity<T>, omega: T, beta: T, hbar: T) -> Result<T> {
    crate::bath::check_thermal(beta, hbar)?;
    if hbar == T::zero() {
        return Ok(T::infinity());
    }
    if sd.is_local() {
        return Err(Error::UvDivergence {
            module: "dechist",
            message: "quantum noise of the Ohmic bath without cutoff".into(),
        });
    }
    let period = T::TAU() / omega;
    let two = T::lit(2.0);
    let f = |w: T| {
        let x = w * period * T::lit(0.5);
        // 2(1 − cos ωT)/ω² = T² sinc²(ωT/2)
        let s = if x.abs() < T::lit(1e-4) { T::one() - x * x / T::lit(3.0) } else { (x.sin() / x).powi(2) };
        two * sd.noise_ft(w, beta, hbar) * period * period * s
    };
    let cut = T::lit(60.0) * sd.scale().max(omega).max(T::one() / (beta * hbar));
    let panel = T::PI() / period;
    let panels = (cut / panel).ceil().to_usize().unwrap_or(1).max(1);
    let tol = QuadTol::new(T::zero(), T::lit(1e-11));
    let mut total = T::zero();
    for k in 0..panels {
        let a = panel * T::from_usize_lossy(k);
        total += integrate(f, a, a + panel, tol).value;
    }
    // beyond the cut the oscillating part averages out: ⟨1 − cos⟩ = 1
    let end = panel * T::from_usize_lossy(panels);
    total += integrate_to_inf(|w: T| two * two * sd.noise_ft(w, beta, hbar) / (w * w), end, tol).value;
    Ok(total / (hbar * hbar))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResolvabilityFlag {
    /// `σ²ν₀ ≥ 1`: histories decohere at their own accuracy.
    TrajectoriesValid,
    /// `σ²ν₀ < 0.01`: individual trajectories do not decohere.
    QuantumDominated,
    Intermediate,
}

/// Below this `σ²ν₀` the regime counts as quantum-dominated.
pub const QUANTUM_DOMINATED_BELOW: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvabilityReport<T> {
    pub nu0: T,
    pub sigma: T,
    /// `√(ν₀⁻¹ + 2σ²)`.
    pub min_separation: T,
    pub flag: ResolvabilityFlag,
    /// `ν₀^{−1/2}`.
    pub recommended_sigma: T,
}

pub fn resolvability_report<T: Real>(kernels: &KernelTable<T>, omega: T, sigma: T) -> Result<ResolvabilityReport<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::domain("dechist", "sigma must be positive"));
    }
    let nu0 = noise_strength(&kernels.bath, omega, kernels.beta, kernels.hbar)?;
    Ok(report_from_strength(nu0, sigma))
}

/// Report for a known `ν₀`.
pub fn report_from_strength<T: Real>(nu0: T, sigma: T) -> ResolvabilityReport<T> {
    let x = sigma * sigma * nu0;
    let flag = if x >= T::one() {
        ResolvabilityFlag::TrajectoriesValid
    } else if x < T::lit(QUANTUM_DOMINATED_BELOW) {
        ResolvabilityFlag::QuantumDominated
    } else {
        ResolvabilityFlag::Intermediate
    };
    ResolvabilityReport {
        nu0,
        sigma,
        min_separation: (T::one() / nu0 + T::lit(2.0) * sigma * sigma).sqrt(),
        flag,
        recommended_sigma: T::one() / nu0.sqrt(),
    }
}

/// Total diagonal weight of a position partition into Gaussian windows
/// `e^{−(x−kσ)²/2σ²}/√(2π)` spaced by `σ`, for a centred Gaussian state of
/// variance `var_x`. The windows overlap, so the sum differs from one by the
/// overlap error.
pub fn partition_sum<T: Real>(var_x: T, sigma: T) -> T {
    let s2 = var_x + sigma * sigma;
    let reach = (T::lit(40.0) * s2.sqrt() / sigma).ceil().to_i64().unwrap_or(0);
    let norm = sigma / (T::TAU() * s2).sqrt();
    (-reach..=reach)
        .map(|k| {
            let x = sigma * T::lit(k as f64);
            norm * (-x * x / (T::lit(2.0) * s2)).exp()
        })
        .sum()
}
