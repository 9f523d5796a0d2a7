//! External force protocols `f(t)`, constant outside `[0, τ]`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::{integrate, QuadTol};
use crate::scalar::Real;
use crate::special::{erf, sinc_t};

/// Built-in protocol shapes; all have closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape<T> {
    /// `f = f₀ + A t/τ`.
    Ramp,
    /// `f = f₀ + A(3x² − 2x³)`, `x = t/τ`.
    Smoothstep,
    /// `ḟ` a Gaussian of the given width centred at `τ/2`, truncated to
    /// `[0, τ]` and normalised so that `f(τ) − f(0) = A`.
    Gaussian { width: T },
    /// `f = f₀ + A sin(2π n t/τ)` with `n` whole cycles, so `f(τ) = f(0)`.
    Sinusoid { cycles: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol<T> {
    pub shape: Shape<T>,
    pub f0: T,
    pub amplitude: T,
    pub tau: T,
    /// Runs the protocol backwards: `f_R(t) = f(τ − t)`.
    #[serde(default)]
    pub reversed: bool,
}

impl<T: Real> Protocol<T> {
    pub fn new(shape: Shape<T>, f0: T, amplitude: T, tau: T) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::domain("work", format!("protocol duration must be positive, got {tau}")));
        }
        if !f0.is_finite() || !amplitude.is_finite() {
            return Err(Error::domain("work", "protocol amplitude and offset must be finite"));
        }
        match shape {
            Shape::Gaussian { width } if !(width > T::zero()) => {
                return Err(Error::domain("work", "Gaussian width must be positive"));
            }
            Shape::Sinusoid { cycles: 0 } => {
                return Err(Error::domain("work", "sinusoid needs at least one cycle"));
            }
            _ => {}
        }
        Ok(Self {
            shape,
            f0,
            amplitude,
            tau,
            reversed: false,
        })
    }

    pub fn ramp(f0: T, f1: T, tau: T) -> Result<Self> {
        Self::new(Shape::Ramp, f0, f1 - f0, tau)
    }

    /// The time-reversed protocol `f(τ − t)`.
    pub fn reverse(&self) -> Self {
        Self {
            reversed: !self.reversed,
            ..*self
        }
    }

    /// True when the force derivatives vanish (to truncation accuracy) at
    /// both ends, so that integrating by parts leaves no boundary terms.
    pub fn is_smooth_at_ends(&self) -> bool {
        matches!(self.shape, Shape::Gaussian { width } if self.tau >= T::lit(10.0) * width)
    }

    fn gauss_norm(&self, width: T) -> T {
        erf(self.tau / (T::lit(2.0) * T::SQRT_2() * width))
    }

    /// Forward-protocol value with each shape's analytic continuation
    /// beyond `[0, τ]`.
    fn base_smooth(&self, t: T) -> T {
        let a = self.amplitude;
        let x = t / self.tau;
        match self.shape {
            Shape::Ramp => self.f0 + a * x,
            Shape::Smoothstep => self.f0 + a * x * x * (T::lit(3.0) - T::lit(2.0) * x),
            Shape::Gaussian { width } => {
                let z = (t - self.tau * T::lit(0.5)) / (T::SQRT_2() * width);
                self.f0 + a * T::lit(0.5) * (T::one() + erf(z) / self.gauss_norm(width))
            }
            Shape::Sinusoid { cycles } => self.f0 + a * (self.wavenumber(cycles) * t).sin(),
        }
    }

    fn wavenumber(&self, cycles: u32) -> T {
        T::TAU() * T::from_u32(cycles).unwrap() / self.tau
    }

    /// `m`-th derivative of the forward `ḟ` at `t` (analytic continuation).
    fn base_fdot_derivative(&self, m: usize, t: T) -> T {
        let a = self.amplitude;
        let tau = self.tau;
        let x = t / tau;
        match self.shape {
            Shape::Ramp => {
                if m == 0 {
                    a / tau
                } else {
                    T::zero()
                }
            }
            Shape::Smoothstep => {
                let s = T::lit(6.0) * a / tau;
                match m {
                    0 => s * x * (T::one() - x),
                    1 => s * (T::one() - T::lit(2.0) * x) / tau,
                    2 => -T::lit(2.0) * s / (tau * tau),
                    _ => T::zero(),
                }
            }
            Shape::Gaussian { width } => {
                // d^m/dt^m e^{-u²/2w²} = (−1/w)^m He_m(u/w) e^{-u²/2w²}
                let u = (t - tau * T::lit(0.5)) / width;
                let (mut he0, mut he1) = (T::one(), u);
                let he = if m == 0 {
                    he0
                } else {
                    for k in 1..m {
                        let next = u * he1 - T::from_usize_lossy(k) * he0;
                        he0 = he1;
                        he1 = next;
                    }
                    he1
                };
                let z = width * (T::TAU()).sqrt() * self.gauss_norm(width);
                let sign = if m % 2 == 0 { T::one() } else { -T::one() };
                a / z * sign * he * (-(u * u) * T::lit(0.5)).exp() / width.powi(m as i32)
            }
            Shape::Sinusoid { cycles } => {
                let k = self.wavenumber(cycles);
                let phase = k * t + T::FRAC_PI_2() * T::from_usize_lossy(m);
                a * k.powi(m as i32 + 1) * phase.cos()
            }
        }
    }

    /// `f(t)`, held constant outside `[0, τ]`.
    pub fn value(&self, t: T) -> T {
        self.value_unclamped(t.max(T::zero()).min(self.tau))
    }

    /// `f(t)` continued analytically past the ends (used by start rules that
    /// sample just outside the integration interval).
    pub fn value_unclamped(&self, t: T) -> T {
        if self.reversed {
            self.base_smooth(self.tau - t)
        } else {
            self.base_smooth(t)
        }
    }

    /// `ḟ` on `[0, τ]` (one-sided limits at the ends), zero outside.
    pub fn fdot(&self, t: T) -> T {
        if t < T::zero() || t > self.tau {
            return T::zero();
        }
        self.fdot_derivative(0, t)
    }

    /// `d^m ḟ/dt^m` inside `[0, τ]`.
    pub fn fdot_derivative(&self, m: usize, t: T) -> T {
        if self.reversed {
            let sign = if m % 2 == 0 { -T::one() } else { T::one() };
            sign * self.base_fdot_derivative(m, self.tau - t)
        } else {
            self.base_fdot_derivative(m, t)
        }
    }

    pub fn f_start(&self) -> T {
        self.value(T::zero())
    }

    pub fn f_end(&self) -> T {
        self.value(self.tau)
    }

    /// `F(ω) = ∫₀^τ ḟ(t) e^{−iωt} dt` (so `f̃_d = F/2π`).
    pub fn fdot_transform(&self, omega: T) -> Complex<T> {
        let tau = self.tau;
        let a = self.amplitude;
        let half = T::lit(0.5);
        let centre = Complex::from_polar(T::one(), -omega * tau * half);
        let fwd = match self.shape {
            Shape::Ramp => centre * (a * sinc_t(omega * half, tau) / tau),
            Shape::Smoothstep => {
                // 6A e^{−iθ/2} ∫_{−½}^{½} (¼ − y²) cos θy dy, θ = ωτ
                let c = omega * tau * half;
                let i = if c.abs() < T::lit(1e-2) {
                    let c2 = c * c;
                    T::one() / T::lit(6.0) * (T::one() - c2 / T::lit(10.0) * (T::one() - c2 / T::lit(28.0)))
                } else {
                    (c.sin() - c * c.cos()) / (T::lit(2.0) * c * c * c)
                };
                centre * (T::lit(6.0) * a * i)
            }
            Shape::Gaussian { width } => {
                // symmetric about τ/2: the transform is real up to the phase
                let z = width * T::TAU().sqrt() * self.gauss_norm(width);
                centre * (a * truncated_gaussian_cos(width, tau * half, omega) / z)
            }
            Shape::Sinusoid { cycles } => {
                // A k ∫ cos kt e^{−iωt} = (Ak/2)[E(k−ω) + E(−k−ω)], E(a) = ∫₀^τ e^{iat}
                let k = self.wavenumber(cycles);
                let e = |x: T| Complex::from_polar(T::one(), x * tau * half) * sinc_t(x * half, tau);
                (e(k - omega) + e(-k - omega)) * (a * k * half)
            }
        };
        if self.reversed {
            // ∫ −ḟ(τ−t) e^{−iωt} dt = −e^{−iωτ} conj(F(ω))
            -Complex::from_polar(T::one(), -omega * tau) * fwd.conj()
        } else {
            fwd
        }
    }

    /// Samples on `grid` covering `[0, τ]`; `τ` must be a grid point.
    pub fn tabulate(&self, grid: &TimeGrid<T>) -> Result<ProtocolTable<T>> {
        let steps = (self.tau / grid.dt).round();
        let n = steps.to_usize().unwrap_or(0);
        if n < 8 || (steps * grid.dt - self.tau).abs() > T::lit(1e-9) * self.tau {
            return Err(Error::grid(
                "work",
                format!("tau = {} is not a multiple (>= 8) of dt = {}", self.tau, grid.dt),
            ));
        }
        if n >= grid.len {
            return Err(Error::grid(
                "work",
                format!("protocol needs {} points but the grid has {}", n + 1, grid.len),
            ));
        }
        let t = |k: usize| grid.dt * T::from_usize_lossy(k);
        Ok(ProtocolTable {
            dt: grid.dt,
            f: (0..=n).map(|k| self.value(t(k))).collect(),
            fdot: (0..=n).map(|k| self.fdot_derivative(0, t(k))).collect(),
        })
    }
}

/// `∫_{−a}^{a} e^{−u²/2w²} cos ωu du`: the full Gaussian transform minus the
/// two tails, each `Re[e^{iωa} e^{−a²/2w²} w√(π/2) erfcx((a/w − iωw)/√2)]`. Falls back to
/// quadrature when the cut is too close to the centre for the continued
/// fraction.
fn truncated_gaussian_cos<T: Real>(w: T, a: T, omega: T) -> T {
    let half = T::lit(0.5);
    let x = a / (w * T::SQRT_2());
    if x < T::one() {
        let q = integrate(
            |u: T| (-(u * u) / (T::lit(2.0) * w * w)).exp() * (omega * u).cos(),
            T::zero(),
            a,
            QuadTol::tight(),
        );
        return T::lit(2.0) * q.value;
    }
    let full = w * T::TAU().sqrt() * (-(omega * w) * (omega * w) * half).exp();
    let z = Complex::new(x, -omega * w / T::SQRT_2());
    let tail = (Complex::from_polar(T::one(), omega * a) * erfcx_cf(z)).re * w * (T::PI() * half).sqrt() * (-x * x).exp();
    full - T::lit(2.0) * tail
}

/// Scaled complementary error function `e^{z²} erfc(z)` by its continued
/// fraction; accurate to rounding for `Re z ≥ 1`.
fn erfcx_cf<T: Real>(z: Complex<T>) -> Complex<T> {
    let mut d = z;
    for k in (1..=240).rev() {
        d = z + Complex::new(T::from_usize_lossy(k) * T::lit(0.5), T::zero()) / d;
    }
    Complex::new(T::one() / T::PI().sqrt(), T::zero()) / d
}

/// `f` and `ḟ` sampled at `t_k = k dt`, `k = 0..=n`, with `n dt = τ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolTable<T> {
    pub dt: T,
    pub f: Vec<T>,
    pub fdot: Vec<T>,
}

impl<T: Real> ProtocolTable<T> {
    pub fn intervals(&self) -> usize {
        self.f.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes() -> Vec<Protocol<f64>> {
        vec![
            Protocol::new(Shape::Ramp, 0.3, 1.2, 2.0).unwrap(),
            Protocol::new(Shape::Smoothstep, -0.5, 2.0, 3.0).unwrap(),
            Protocol::new(Shape::Gaussian { width: 0.4 }, 0.0, 1.5, 4.0).unwrap(),
            Protocol::new(Shape::Sinusoid { cycles: 2 }, 1.0, 0.7, 5.0).unwrap(),
        ]
    }

    #[test]
    fn derivative_integrates_to_increment() {
        for p in shapes().into_iter().flat_map(|p| [p, p.reverse()]) {
            let q = integrate(|t| p.fdot(t), 0.0, p.tau, QuadTol::tight());
            assert!((q.value - (p.f_end() - p.f_start())).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in shapes().into_iter().flat_map(|p| [p, p.reverse()]) {
            let h = 1e-5;
            for &t in &[0.37, 0.5 * p.tau, 0.81 * p.tau] {
                let fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
                assert!((fd - p.fdot(t)).abs() < 1e-8 * (1.0 + fd.abs()), "{p:?} t={t}");
                for m in 0..3 {
                    let fd = (p.fdot_derivative(m, t + h) - p.fdot_derivative(m, t - h)) / (2.0 * h);
                    let an = p.fdot_derivative(m + 1, t);
                    assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "{p:?} m={m}");
                }
            }
        }
    }

    #[test]
    fn transform_matches_quadrature() {
        for p in shapes().into_iter().flat_map(|p| [p, p.reverse()]) {
            for &w in &[0.0, 1e-4, 0.3, 2.0, 17.0] {
                let re = integrate(|t| p.fdot(t) * (w * t).cos(), 0.0, p.tau, QuadTol::tight()).value;
                let im = -integrate(|t| p.fdot(t) * (w * t).sin(), 0.0, p.tau, QuadTol::tight()).value;
                let f = p.fdot_transform(w);
                assert!((f.re - re).abs() < 1e-11 && (f.im - im).abs() < 1e-11, "{p:?} ω={w}: {f} vs {re}+{im}i");
            }
        }
    }

    #[test]
    fn erfcx_continued_fraction() {
        // real axis: e^{x²} erfc(x) against libm
        for &x in &[3.0f64, 4.5, 8.0] {
            let exact = (x * x).exp() * libm::erfc(x);
            assert!((erfcx_cf(Complex::new(x, 0.0)).re - exact).abs() < 1e-14 * exact);
        }
        // complex argument against direct quadrature of the tail
        for &(w, a, om) in &[(0.5f64, 2.5, 0.0), (0.5, 2.5, 1.0), (0.5, 2.5, 7.5), (0.5, 2.5, 40.0), (1.0, 1.5, 0.3), (1.0, 1.5, 4.0)] {
            let direct = integrate(|u| (-(u * u) / (2.0 * w * w)).exp() * (om * u).cos(), a, a + 20.0 * w, QuadTol::new(1e-20, 1e-12)).value;
            let x = a / (w * std::f64::consts::SQRT_2);
            let cf = (Complex::from_polar(1.0, om * a) * erfcx_cf(Complex::new(x, -om * w / std::f64::consts::SQRT_2))).re * w * (std::f64::consts::PI / 2.0).sqrt() * (-x * x).exp();
            assert!((cf - direct).abs() < 1e-15 * w, "ω={om}: {cf} vs {direct}");
        }
    }

    #[test]
    fn held_constant_outside() {
        let p = Protocol::ramp(1.0, 3.0, 2.0).unwrap();
        assert_eq!(p.value(-1.0), 1.0);
        assert_eq!(p.value(5.0), 3.0);
        assert_eq!(p.fdot(2.5), 0.0);
        assert_eq!(p.reverse().f_start(), 3.0);
        assert_eq!(p.value_unclamped(-1.0), 0.0);
    }

    #[test]
    fn tabulation_requires_aligned_tau() {
        let p = Protocol::ramp(0.0, 1.0, 1.0).unwrap();
        assert!(p.tabulate(&TimeGrid::new(0.3, 100).unwrap()).is_err());
        assert!(p.tabulate(&TimeGrid::new(0.01, 50).unwrap()).is_err());
        let t = p.tabulate(&TimeGrid::new(0.01, 200).unwrap()).unwrap();
        assert_eq!(t.intervals(), 100);
    }
}
