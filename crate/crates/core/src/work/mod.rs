//! Gaussian work statistics for a driven oscillator in a stationary thermal
//! state, the two fluctuation theorems, and their temperature expansions.
//!
//! Work is `W = −∫ ḟ(t) X(t) dt`, with `X` the stationary response to the
//! force (held at `f(0)` in the past) plus thermal noise. Being linear in the
//! noise, `W` is Gaussian and fixed by its mean and variance.

mod protocol;
mod regime;
mod series;

pub use protocol::{Protocol, ProtocolTable, Shape};
pub use regime::{fdot_spectrum, regime_classifier, FdotSpectrum, Regime, RegimeReport};
pub use series::{hightemp_correction, lowtemp_sigma_ft, HighTempSeries, LowTempPoint, MAX_ORDER};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::SpectralDensity;
use crate::error::{Error, Result};
use crate::greens::GreensSolutions;
use crate::quad::{cumulative_integral, integrate, integrate_to_inf, Gregory, QuadTol};
use crate::scalar::Real;
use crate::thermal::{delta_f, h_even_ft, StationaryCorrelation};
use crate::special::thermal_q;

/// `∫∫ a(t) K(|t−s|) a(s) dt ds` over `[0, n dt]²` with fourth-order weights
/// in each variable. `kernel[k]` is `K(k dt)`.
pub fn quadratic_form<T: Real>(dt: T, a: &[T], kernel: &[T]) -> T {
    let n = a.len() - 1;
    assert!(n >= 5 && kernel.len() > n, "quadratic form needs at least five intervals");
    let greg = Gregory::<T>::new();
    let wa: Vec<T> = a.iter().enumerate().map(|(j, &v)| greg.weight(n, j) * v).collect();
    let s: T = (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut acc = T::zero();
            for (j, &w) in wa.iter().enumerate() {
                acc += kernel[i.abs_diff(j)] * w;
            }
            acc * wa[i]
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    s * dt * dt
}

/// Two evaluations of the mean work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWork<T> {
    /// `ΔF + ḟ·h_e·ḟ/(2MΩ²)` (returned as the mean).
    pub via_homogeneous: T,
    /// `−ḟ·g_ret·f`, from the response to the force.
    pub via_response: T,
    pub delta_f: T,
}

impl<T: Real> MeanWork<T> {
    pub fn value(&self) -> T {
        self.via_homogeneous
    }

    /// Disagreement of the two routes.
    pub fn discrepancy(&self) -> T {
        (self.via_homogeneous - self.via_response).abs()
    }
}

fn check_greens<T: Real>(gs: &GreensSolutions<T>, table: &ProtocolTable<T>) -> Result<()> {
    if (gs.grid.dt - table.dt).abs() > T::epsilon() * T::lit(16.0) * gs.grid.dt {
        return Err(Error::grid("work", "protocol and Green's-function steps differ"));
    }
    if table.f.len() > gs.grid.len {
        return Err(Error::grid("work", "Green's-function horizon shorter than the protocol"));
    }
    Ok(())
}

/// Mean response `X̄(t_i) = [g_ret·f](t_i)`, `i = 0..points`, to the force held
/// at `f(0)` in the past:
/// `X̄(t) = f(0)[1/MΩ² − ∫₀^t g] + ∫₀^t g(u) f(t−u) du`.
pub fn forced_response<T: Real>(protocol: &Protocol<T>, gs: &GreensSolutions<T>, points: usize) -> Result<Vec<T>> {
    if points > gs.grid.len || gs.grid.len < 5 {
        return Err(Error::grid("work", "Green's-function table shorter than the requested response"));
    }
    let dt = gs.grid.dt;
    let m_w2 = gs.mass * gs.omega * gs.omega;
    let greg = Gregory::<T>::new();
    let g = &gs.g;
    let g_cum = cumulative_integral(dt, &g[..points.max(5)]);
    let f0 = protocol.f_start();
    Ok((0..points)
        .into_par_iter()
        .map(|i| {
            let ti = dt * T::from_usize_lossy(i);
            let m = if i < 5 { 5 } else { i + 1 };
            let y: Vec<T> = (0..m)
                .map(|j| {
                    let tj = dt * T::from_usize_lossy(j);
                    g[j] * if j <= i { protocol.value(ti - tj) } else { protocol.value_unclamped(ti - tj) }
                })
                .collect();
            f0 * (T::one() / m_w2 - g_cum[i]) + greg.integrate(i, dt, &y)
        })
        .collect())
}

/// Mean work by both formulas; they differ by an integration by parts only.
pub fn mean_work<T: Real>(protocol: &Protocol<T>, gs: &GreensSolutions<T>) -> Result<MeanWork<T>> {
    let table = protocol.tabulate(&gs.grid)?;
    check_greens(gs, &table)?;
    let n = table.intervals();
    let dt = table.dt;
    let m_w2 = gs.mass * gs.omega * gs.omega;
    let df = delta_f(protocol.f_start(), protocol.f_end(), gs.mass, gs.omega)?;
    let q = quadratic_form(dt, &table.fdot, &gs.h[..=n]);
    let via_homogeneous = df + q / (T::lit(2.0) * m_w2);

    let xbar = forced_response(protocol, gs, n + 1)?;
    let prod: Vec<T> = table.fdot.iter().zip(&xbar).map(|(a, b)| *a * *b).collect();
    let via_response = -Gregory::<T>::new().integrate(n, dt, &prod);
    Ok(MeanWork {
        via_homogeneous,
        via_response,
        delta_f: df,
    })
}

/// Work variance by the two independent quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkVariance<T> {
    /// `ḟ·σ_xx·ḟ` in the time domain (returned as the variance).
    pub time_domain: T,
    /// `2∫₀^∞ |F(ω)|² σ̃_xx(ω) dω`.
    pub frequency_domain: T,
}

impl<T: Real> WorkVariance<T> {
    pub fn value(&self) -> T {
        self.time_domain
    }

    pub fn relative_discrepancy(&self) -> T {
        (self.time_domain - self.frequency_domain).abs() / self.time_domain.abs().max(T::min_positive_value())
    }
}

/// Time-domain variance `ḟ·σ_xx·ḟ` alone.
pub fn work_variance_time<T: Real>(protocol: &Protocol<T>, corr: &StationaryCorrelation<T>) -> Result<T> {
    let grid = crate::grid::TimeGrid::new(corr.dt, corr.values.len())?;
    let table = protocol.tabulate(&grid)?;
    let v = quadratic_form(table.dt, &table.fdot, &corr.values[..table.f.len()]);
    let scale = quadratic_form(table.dt, &table.fdot.iter().map(|x| x.abs()).collect::<Vec<_>>(), &corr.values.iter().map(|x| x.abs()).collect::<Vec<_>>());
    if v < -T::lit(1e-10) * scale {
        return Err(Error::NotPositiveDefinite {
            module: "work",
            message: format!("work variance came out negative ({v}); refine the grid or extend the horizon"),
        });
    }
    Ok(v.max(T::zero()))
}

/// `∫₀^∞ |F(ω)|² w(ω) dω` for the force-derivative transform `F`.
pub fn spectral_integral<T: Real, W: Fn(T) -> T>(protocol: &Protocol<T>, scale: T, weight: W) -> Result<T> {
    let band = match protocol.shape {
        Shape::Gaussian { width } => T::one() / width,
        Shape::Sinusoid { cycles } => T::TAU() * T::from_u32(cycles).unwrap() / protocol.tau,
        _ => T::one() / protocol.tau,
    };
    let cut = T::lit(60.0) * scale.max(band);
    // panels shorter than half an oscillation of |F|²
    let width = (T::PI() / protocol.tau).min(cut / T::lit(64.0));
    let panels = (cut / width).ceil().to_usize().unwrap_or(1).max(1);
    let width = cut / T::from_usize_lossy(panels);
    let tol = QuadTol::new(T::zero(), T::lit(1e-12).max(T::epsilon() * T::lit(100.0)));
    let integrand = |w: T| protocol.fdot_transform(w).norm_sqr() * weight(w);
    let body: Vec<crate::quad::Quad<T>> = (0..panels)
        .map(|k| {
            let a = width * T::from_usize_lossy(k);
            integrate(integrand, a, a + width, tol)
        })
        .collect();
    let tail = integrate_to_inf(integrand, cut, tol);
    let total: T = body.iter().map(|q| q.value).sum::<T>() + tail.value;
    let err: T = body.iter().map(|q| q.abs_err).sum::<T>() + tail.abs_err;
    if !total.is_finite() || !tail.converged && err > T::lit(1e-6) * total.abs() {
        return Err(Error::Divergent {
            module: "work",
            message: "spectral integral over the protocol transform does not converge".into(),
        });
    }
    Ok(total)
}

/// Frequency scale setting the explicit-panel range of spectral integrals.
/// The thermal scale `1/βħ` is left out: above the bath and system scales the
/// `coth` weight only bends smoothly and the tail quadrature covers it, while
/// including it would put ~10⁵ panels under a drive that has long decayed.
pub(crate) fn spectral_scale<T: Real>(sd: &SpectralDensity<T>, omega: T) -> T {
    sd.scale().max(omega)
}

/// Frequency-domain variance `(1/MΩ²) ∫₀^∞ |F|² ħω coth(βħω/2) h̃_e dω`.
pub fn work_variance_frequency<T: Real>(protocol: &Protocol<T>, sd: &SpectralDensity<T>, omega: T, beta: T, hbar: T) -> Result<T> {
    let m_w2 = sd.mass * omega * omega;
    let v = spectral_integral(protocol, spectral_scale(sd, omega), |w| {
        thermal_q(w, beta, hbar) * h_even_ft(sd, omega, w)
    })?;
    Ok(v / m_w2)
}

/// Both variance routes.
pub fn work_variance<T: Real>(
    protocol: &Protocol<T>,
    corr: &StationaryCorrelation<T>,
    sd: &SpectralDensity<T>,
    omega: T,
    beta: T,
    hbar: T,
) -> Result<WorkVariance<T>> {
    Ok(WorkVariance {
        time_domain: work_variance_time(protocol, corr)?,
        frequency_domain: work_variance_frequency(protocol, sd, omega, beta, hbar)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

/// Gaussian work law, fixed by its first two moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkDistribution<T> {
    pub mean_w: T,
    pub var_w: T,
    pub delta_f: T,
    pub beta: T,
    pub direction: Direction,
}

impl<T: Real> WorkDistribution<T> {
    pub fn new(mean_w: T, var_w: T, delta_f: T, beta: T, direction: Direction) -> Result<Self> {
        if !(var_w >= T::zero()) {
            return Err(Error::domain("work", format!("work variance must be non-negative, got {var_w}")));
        }
        if !(beta > T::zero()) {
            return Err(Error::domain("work", "beta must be positive"));
        }
        Ok(Self {
            mean_w,
            var_w,
            delta_f,
            beta,
            direction,
        })
    }

    /// `log P(W)`; a point mass when the variance vanishes.
    pub fn log_density(&self, w: T) -> T {
        if self.var_w == T::zero() {
            return if w == self.mean_w { T::infinity() } else { T::neg_infinity() };
        }
        let d = w - self.mean_w;
        -d * d / (T::lit(2.0) * self.var_w) - T::lit(0.5) * (T::TAU() * self.var_w).ln()
    }

    /// `β σ_W²/2 − (⟨W⟩ − ΔF)`: zero exactly when both theorems hold.
    pub fn imbalance(&self) -> T {
        self.beta * self.var_w * T::lit(0.5) - (self.mean_w - self.delta_f)
    }
}

/// Work statistics of one protocol direction, with the cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkAnalysis<T> {
    pub distribution: WorkDistribution<T>,
    pub mean: MeanWork<T>,
    pub variance: WorkVariance<T>,
}

/// Mean and variance (both routes each) for `protocol`.
pub fn analyze<T: Real>(
    protocol: &Protocol<T>,
    gs: &GreensSolutions<T>,
    corr: &StationaryCorrelation<T>,
    sd: &SpectralDensity<T>,
    beta: T,
    hbar: T,
) -> Result<WorkAnalysis<T>> {
    let mean = mean_work(protocol, gs)?;
    let variance = work_variance(protocol, corr, sd, gs.omega, beta, hbar)?;
    let direction = if protocol.reversed { Direction::Reverse } else { Direction::Forward };
    Ok(WorkAnalysis {
        distribution: WorkDistribution::new(mean.value(), variance.value(), mean.delta_f, beta, direction)?,
        mean,
        variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiReport<T> {
    /// `⟨e^{−βW}⟩ = exp(−β⟨W⟩ + β²σ_W²/2)`.
    pub lhs: T,
    /// `e^{−βΔF}`.
    pub rhs: T,
    /// `lhs/rhs − 1`, evaluated without cancellation.
    pub residual: T,
}

pub fn jarzynski_check<T: Real>(wd: &WorkDistribution<T>) -> JarzynskiReport<T> {
    let b = wd.beta;
    JarzynskiReport {
        lhs: (-b * wd.mean_w + b * b * wd.var_w * T::lit(0.5)).exp(),
        rhs: (-b * wd.delta_f).exp(),
        residual: (b * wd.imbalance()).exp_m1(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrooksReport<T> {
    /// Least-squares slope of `log P_F(W)/P_R(−W)` against `W`.
    pub slope: T,
    pub intercept: T,
    /// `(⟨W⟩ − ΔF)/(βσ_W²/2)`; the slope is this times `β`.
    pub prefactor: T,
    /// Fit residuals on the supplied grid.
    pub residuals: Vec<T>,
    /// Log-ratio at `W = ΔF` (zero when the theorem holds).
    pub log_ratio_at_delta_f: T,
}

/// Evaluates the forward/reverse log-ratio on `w_grid` and fits a line.
pub fn crooks_check<T: Real>(fwd: &WorkDistribution<T>, rev: &WorkDistribution<T>, w_grid: &[T]) -> Result<CrooksReport<T>> {
    let scale = fwd.var_w.abs().max(rev.var_w.abs()).max(T::min_positive_value());
    if (fwd.var_w - rev.var_w).abs() > T::lit(1e-6) * scale {
        return Err(Error::Statistics {
            module: "work",
            message: format!("forward and reverse variances differ: {} vs {}", fwd.var_w, rev.var_w),
        });
    }
    let df_scale = fwd.delta_f.abs().max(T::one());
    if (fwd.delta_f + rev.delta_f).abs() > T::lit(1e-9) * df_scale || (fwd.beta - rev.beta).abs() > T::epsilon() * fwd.beta {
        return Err(Error::domain("work", "reverse process must have ΔF_R = −ΔF and the same beta"));
    }
    if w_grid.len() < 2 || fwd.var_w == T::zero() {
        return Err(Error::domain("work", "Crooks fit needs at least two grid points and non-zero variance"));
    }
    let ratio = |w: T| fwd.log_density(w) - rev.log_density(-w);
    let ys: Vec<T> = w_grid.iter().map(|&w| ratio(w)).collect();
    let n = T::from_usize_lossy(w_grid.len());
    let mx = w_grid.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in w_grid.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(CrooksReport {
        slope,
        intercept,
        prefactor: (fwd.mean_w - fwd.delta_f) / (fwd.beta * fwd.var_w * T::lit(0.5)),
        residuals: w_grid.iter().zip(&ys).map(|(&x, &y)| y - (intercept + slope * x)).collect(),
        log_ratio_at_delta_f: ratio(fwd.delta_f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn quadratic_form_of_constant_kernel() {
        // ∫∫ a a = (∫a)²
        let dt = 0.005;
        let a: Vec<f64> = (0..=600).map(|k| (k as f64 * dt).sin()).collect();
        let k = vec![1.0; 601];
        let exact = (1.0 - 3.0f64.cos()).powi(2);
        assert!((quadratic_form(dt, &a, &k) - exact).abs() < 5e-10);
    }

    #[test]
    fn quadratic_form_with_cosine_kernel() {
        // ∫∫ cos(t−s) over [0,T]² = 2(1 − cos T)
        let dt = 0.005;
        let n = 800;
        let a = vec![1.0; n + 1];
        let k: Vec<f64> = (0..=n).map(|j| (j as f64 * dt).cos()).collect();
        let t = n as f64 * dt;
        assert!((quadratic_form(dt, &a, &k) - 2.0 * (1.0 - t.cos())).abs() < 1e-9);
    }

    #[test]
    fn constant_force_does_no_work() {
        let gs = GreensSolutions::<f64>::markovian(0.3, 1.0, 1.0, TimeGrid::new(0.01, 400).unwrap());
        let p = Protocol::new(Shape::Ramp, 0.5, 0.0, 2.0).unwrap();
        let m = mean_work(&p, &gs).unwrap();
        assert_eq!(m.via_homogeneous, 0.0);
        assert!(m.via_response.abs() < 1e-15);
    }

    #[test]
    fn mean_work_routes_agree() {
        let gs = GreensSolutions::<f64>::markovian(0.4, 1.3, 0.9, TimeGrid::new(0.005, 2001).unwrap());
        for p in [
            Protocol::ramp(0.2, 1.1, 4.0).unwrap(),
            Protocol::new(Shape::Smoothstep, 0.0, 1.0, 3.0).unwrap(),
            Protocol::new(Shape::Sinusoid { cycles: 1 }, 0.3, 1.0, 5.0).unwrap(),
        ] {
            let m = mean_work(&p, &gs).unwrap();
            let scale = m.via_homogeneous.abs().max(1.0 / (2.0 * 1.3 * 0.81));
            assert!(m.discrepancy() < 1e-8 * scale, "{p:?}: {m:?}");
        }
    }

    #[test]
    fn sudden_quench_limit() {
        // free oscillator, τ → 0: ⟨W⟩ → ΔF + f₁²/2MΩ² = 0
        let gs = GreensSolutions::<f64>::markovian(0.0, 1.0, 1.0, TimeGrid::new(1e-4, 200).unwrap());
        let p = Protocol::ramp(0.0, 1.0, 0.01).unwrap();
        let m = mean_work(&p, &gs).unwrap();
        assert!(m.value().abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn jarzynski_and_crooks_in_balance() {
        let b: f64 = 2.0;
        let fwd = WorkDistribution::new(0.7, 2.0 * (0.7 - 0.3) / b, 0.3, b, Direction::Forward).unwrap();
        let rev = WorkDistribution::new(0.7 - 0.6, fwd.var_w, -0.3, b, Direction::Reverse).unwrap();
        let j = jarzynski_check(&fwd);
        assert!(j.residual.abs() < 1e-15);
        let grid: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
        let c = crooks_check(&fwd, &rev, &grid).unwrap();
        assert!((c.slope - b).abs() < 1e-12 && (c.prefactor - 1.0).abs() < 1e-12);
        assert!(c.log_ratio_at_delta_f.abs() < 1e-12);
    }

    #[test]
    fn crooks_rejects_variance_mismatch() {
        let fwd = WorkDistribution::new(0.7, 0.4, 0.3, 1.0, Direction::Forward).unwrap();
        let rev = WorkDistribution::new(0.1, 0.5, -0.3, 1.0, Direction::Reverse).unwrap();
        assert!(crooks_check(&fwd, &rev, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_drive_is_trivial() {
        let wd = WorkDistribution::<f64>::new(0.0, 0.0, 0.0, 1.0, Direction::Forward).unwrap();
        let j = jarzynski_check(&wd);
        assert_eq!((j.lhs, j.rhs, j.residual), (1.0, 1.0, 0.0));
    }
}
