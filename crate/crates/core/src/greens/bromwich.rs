//! Numerical inverse Laplace transform of `ĝ(s)` along `Re s = ε`, used as an
//! independent cross-check of the time-domain solver.
//!
//! The leading large-`s` behaviour `ĝ ≈ (1/M)/(s² + a²)`, `a² = Ω² + 2γ(0)`,
//! is subtracted and inverted exactly (`sin(at)/(Ma)`); the remainder falls
//! off like `s⁻⁵`, so the truncated Fourier series converges fast.

use num_complex::Complex;
use rustfft::FftPlanner;

use super::greens_laplace;
use crate::bath::SpectralDensity;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::sinc_t;

/// `g(t_k)` for `t_k = k dt`, `k = 0..n`, by Bromwich inversion with
/// `ε = 4/T` (T the horizon) and period `4T`.
pub fn bromwich_g<T: Real>(sd: &SpectralDensity<T>, omega: T, dt: T, n: usize) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::domain("greens", "Bromwich inversion needs at least two points"));
    }
    let horizon = dt * T::from_usize_lossy(n - 1);
    let eps = T::lit(4.0) / horizon;
    let n_fft = 4 * (n - 1);
    let period = dt * T::from_usize_lossy(n_fft);
    let d_omega = T::TAU() / period;
    let mass = sd.mass;
    let gamma_zero = if sd.is_local() { T::zero() } else { sd.damping_kernel(T::zero())? };
    let a = (omega * omega + T::lit(2.0) * gamma_zero).sqrt();
    let a2 = Complex::new(a * a, T::zero());
    let inv_m = Complex::new(T::one() / mass, T::zero());

    let mut buf: Vec<Complex<T>> = Vec::with_capacity(n_fft);
    for j in 0..n_fft {
        let jj = if j <= n_fft / 2 { j as isize } else { j as isize - n_fft as isize };
        let w = d_omega * T::from_isize(jj).unwrap();
        let s = Complex::new(eps, w);
        let (_, g_hat) = greens_laplace(sd, omega, s)?;
        let approx = inv_m / (s * s + a2);
        buf.push(g_hat - approx);
    }
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_inverse(n_fft).process(&mut buf);
    let out = (0..n)
        .map(|k| {
            let t = dt * T::from_usize_lossy(k);
            (eps * t).exp() / period * buf[k].re + sinc_t(a, t) / mass
        })
        .collect();
    Ok(out)
}
