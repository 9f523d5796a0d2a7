//! Homogeneous solutions `h`, `g` of the generalized Langevin equation
//! `Mẍ + 2M∫₀^t γ(t−s)ẋ(s)ds + MΩ²x = 0` with `h(0)=1, ḣ(0)=0` and
//! `g(0)=0, ġ(0)=1/M`.

mod bromwich;
mod markov;
mod volterra;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub use bromwich::bromwich_g;
pub use markov::{markovian_closed_form, HomogeneousPoint};

use crate::bath::{KernelTable, SpectralDensity};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::Gregory;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreensMethod {
    /// Closed form of the memoryless equation (cutoff-free Ohmic bath).
    Markovian,
    /// Fourth-order product quadrature, Richardson-extrapolated.
    Volterra,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreensSolutions<T> {
    pub grid: TimeGrid<T>,
    pub h: Vec<T>,
    pub g: Vec<T>,
    pub hdot: Vec<T>,
    pub gdot: Vec<T>,
    pub mass: T,
    pub omega: T,
    pub method: GreensMethod,
}

/// Checks the step-size requirement `dt ≤ min(2π/Ω, 1/Λ)/40`.
pub fn max_step<T: Real>(sd: &SpectralDensity<T>, omega: T) -> T {
    let mut lim = T::TAU() / omega;
    if let Some(l) = sd.cutoff {
        lim = lim.min(T::one() / l);
    }
    lim / T::lit(40.0)
}

impl<T: Real> GreensSolutions<T> {
    /// Solves on `grid` for the bath `sd` (whose mass is the system mass).
    pub fn solve(sd: &SpectralDensity<T>, omega: T, grid: TimeGrid<T>) -> Result<Self> {
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::domain("greens", format!("Omega must be positive, got {omega}")));
        }
        let mass = sd.mass;
        if sd.is_local() {
            return Ok(Self::markovian(sd.gamma0, mass, omega, grid));
        }
        let lim = max_step(sd, omega);
        if grid.dt > lim * (T::one() + T::lit(1e-9)) {
            return Err(Error::domain(
                "greens",
                format!("dt = {} does not resolve the dynamics; need dt <= {}", grid.dt, lim),
            ));
        }
        let n = grid.len.max(5);
        let coarse = {
            let ks = volterra::KernelSamples::new(sd, grid.dt, n)?;
            volterra::solve(&ks, omega, grid.dt, n)
        };
        let nf = 2 * (n - 1) + 1;
        let half = grid.dt * T::lit(0.5);
        let fine = {
            let ks = volterra::KernelSamples::new(sd, half, nf)?;
            volterra::solve(&ks, omega, half, nf)
        };
        // the scheme is fourth order; eliminate the leading error term
        let r = |c: &[T], f: &[T]| -> Vec<T> {
            (0..grid.len)
                .map(|k| (T::lit(16.0) * f[2 * k] - c[k]) / T::lit(15.0))
                .collect()
        };
        let inv_m = T::one() / mass;
        let g: Vec<T> = r(&coarse.g, &fine.g).into_iter().map(|v| v * inv_m).collect();
        let gdot: Vec<T> = r(&coarse.gdot, &fine.gdot).into_iter().map(|v| v * inv_m).collect();
        Ok(Self {
            grid,
            h: r(&coarse.h, &fine.h),
            hdot: r(&coarse.hdot, &fine.hdot),
            g,
            gdot,
            mass,
            omega,
            method: GreensMethod::Volterra,
        })
    }

    /// Same as [`GreensSolutions::solve`], on the grid of a kernel table.
    pub fn from_kernels(kernels: &KernelTable<T>, omega: T) -> Result<Self> {
        Self::solve(&kernels.bath, omega, kernels.grid)
    }

    /// Closed-form solutions of the memoryless equation on a grid.
    pub fn markovian(gamma0: T, mass: T, omega: T, grid: TimeGrid<T>) -> Self {
        let pts: Vec<HomogeneousPoint<T>> = (0..grid.len)
            .map(|k| markovian_closed_form(gamma0, mass, omega, grid.t(k)))
            .collect();
        Self {
            grid,
            h: pts.iter().map(|p| p.h).collect(),
            g: pts.iter().map(|p| p.g).collect(),
            hdot: pts.iter().map(|p| p.hdot).collect(),
            gdot: pts.iter().map(|p| p.gdot).collect(),
            mass,
            omega,
            method: GreensMethod::Markovian,
        }
    }

    pub fn retarded(&self) -> RetardedGreens<T> {
        RetardedGreens {
            dt: self.grid.dt,
            values: self.g.clone(),
        }
    }

    /// Sup norms of `ḣ + MΩ²g` and `Mġ − h + 2M∫₀^t γ(t−s)g(s)ds` over the
    /// grid. For the Markovian route the memory integral is `γ₀ g(t)`.
    pub fn identity_residuals(&self, sd: &SpectralDensity<T>) -> Result<(T, T)> {
        let m = self.mass;
        let mw2 = m * self.omega * self.omega;
        let r1 = (0..self.grid.len)
            .map(|k| (self.hdot[k] + mw2 * self.g[k]).abs())
            .fold(T::zero(), T::max);
        let mem = self.memory_integral(sd, &self.g)?;
        let r2 = (0..self.grid.len)
            .map(|k| (m * self.gdot[k] - self.h[k] + T::lit(2.0) * m * mem[k]).abs())
            .fold(T::zero(), T::max);
        Ok((r1, r2))
    }

    /// Sup norm of `Mẍ + 2M∫γẋ + MΩ²x` for both solutions.
    ///
    /// The operator is evaluated with step `dt` and `2dt` (central differences
    /// of the derivative table, fourth-order memory quadrature) and the two are
    /// extrapolated, so the measurement error stays below the solver error. It
    /// is therefore reported on even interior grid points.
    pub fn equation_residual(&self, sd: &SpectralDensity<T>) -> Result<T> {
        let n = self.grid.len;
        if n < 21 {
            return Err(Error::grid("greens", "equation residual needs at least 21 grid points"));
        }
        let m = self.mass;
        let w2 = self.omega * self.omega;
        let dt = self.grid.dt;
        let coarse = Self {
            grid: TimeGrid { dt: dt + dt, len: (n + 1) / 2 },
            ..self.clone()
        };
        let sixteen = T::lit(16.0);
        let fifteen = T::lit(15.0);
        let mut worst = T::zero();
        for (x, xd) in [(&self.h, &self.hdot), (&self.g, &self.gdot)] {
            let xd2: Vec<T> = xd.iter().step_by(2).copied().collect();
            let mem = self.memory_integral(sd, xd)?;
            let mem2 = coarse.memory_integral(sd, &xd2)?;
            let d1 = differentiate(dt, xd);
            let d2 = differentiate(dt + dt, &xd2);
            for k in (4..n - 4).step_by(2) {
                let xdd = (sixteen * d1[k] - d2[k / 2]) / fifteen;
                let mi = (sixteen * mem[k] - mem2[k / 2]) / fifteen;
                let r = m * xdd + T::lit(2.0) * m * mi + m * w2 * x[k];
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }

    /// `∫₀^{t_k} γ(t_k − s) y(s) ds` on the grid (fourth order).
    pub fn memory_integral(&self, sd: &SpectralDensity<T>, y: &[T]) -> Result<Vec<T>> {
        memory_integral(sd, self.grid, y)
    }
}

/// `∫₀^{t_k} γ(t_k − s) y(s) ds` for `k < grid.len` (fourth order); `y` must
/// cover the grid.
pub fn memory_integral<T: Real>(sd: &SpectralDensity<T>, grid: TimeGrid<T>, y: &[T]) -> Result<Vec<T>> {
    let n = grid.len;
    let dt = grid.dt;
    if y.len() < n {
        return Err(Error::grid("greens", "memory integrand shorter than the grid"));
    }
    if sd.is_local() {
        // ∫₀^t 2γ₀δ(t−s)y(s)ds = γ₀ y(t)
        return Ok(y[..n].iter().map(|&v| sd.gamma0 * v).collect());
    }
    if n < 5 {
        return Err(Error::grid("greens", "memory integral needs at least five grid points"));
    }
    let ks = volterra::KernelSamples::new(sd, dt, n)?;
    let greg = Gregory::<T>::new();
    let gam = |j: isize| ks.gamma[(j + volterra::PAD as isize) as usize];
    let mut out = vec![T::zero(); n];
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        let mut s = T::zero();
        let top = if k < 5 { 4 } else { k };
        for (j, &v) in y.iter().enumerate().take(top + 1) {
            s += greg.weight(k, j) * gam(k as isize - j as isize) * v;
        }
        *o = s * dt;
    }
    Ok(out)
}

/// Five-point differences (one-sided near the ends), fourth order.
pub(crate) fn differentiate<T: Real>(dt: T, y: &[T]) -> Vec<T> {
    let n = y.len();
    let c = |v: f64| T::lit(v);
    let inv = T::one() / (c(12.0) * dt);
    (0..n)
        .map(|k| {
            if k >= 2 && k + 2 < n {
                (y[k - 2] - c(8.0) * y[k - 1] + c(8.0) * y[k + 1] - y[k + 2]) * inv
            } else if k < 2 {
                let b = k;
                let p = |i: usize| y[b + i];
                if k == 0 {
                    (c(-25.0) * p(0) + c(48.0) * p(1) - c(36.0) * p(2) + c(16.0) * p(3) - c(3.0) * p(4)) * inv
                } else {
                    (c(-3.0) * y[0] - c(10.0) * y[1] + c(18.0) * y[2] - c(6.0) * y[3] + y[4]) * inv
                }
            } else if k + 1 == n {
                (c(25.0) * y[k] - c(48.0) * y[k - 1] + c(36.0) * y[k - 2] - c(16.0) * y[k - 3] + c(3.0) * y[k - 4]) * inv
            } else {
                (c(3.0) * y[k + 1] + c(10.0) * y[k] - c(18.0) * y[k - 1] + c(6.0) * y[k - 2] - y[k - 3]) * inv
            }
        })
        .collect()
}

/// `(ĥ(s), ĝ(s))` with `ĥ = (2γ̂+s)/D`, `ĝ = (1/M)/D`, `D = s² + 2sγ̂ + Ω²`.
pub fn greens_laplace<T: Real>(sd: &SpectralDensity<T>, omega: T, s: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
    let gh = sd.damping_laplace(s)?;
    let two = T::lit(2.0);
    let d = s * s + s * gh * two + Complex::new(omega * omega, T::zero());
    let scale = s.norm_sqr() + omega * omega;
    if d.norm() <= T::epsilon() * T::lit(16.0) * scale {
        return Err(Error::Pole {
            re: s.re.f64(),
            im: s.im.f64(),
        });
    }
    let h = (gh * two + s) / d;
    let g = Complex::new(T::one() / sd.mass, T::zero()) / d;
    Ok((h, g))
}

/// Causal response kernel `g_ret(t) = g(t)θ(t)` on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetardedGreens<T> {
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Real> RetardedGreens<T> {
    /// Value at integer lag; zero for negative lags and beyond the table.
    pub fn at(&self, lag: isize) -> T {
        if lag < 0 {
            return T::zero();
        }
        self.values.get(lag as usize).copied().unwrap_or(T::zero())
    }

    /// Causal discrete convolution `Σ_{j≤k} g_ret(k−j) u_j` (no `dt` factor).
    pub fn convolve(&self, u: &[T]) -> Vec<T> {
        (0..u.len())
            .map(|k| (0..=k).map(|j| self.at((k - j) as isize) * u[j]).sum())
            .collect()
    }
}
