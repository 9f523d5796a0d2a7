//! Closed-form solutions of `ẍ + 2γ₀ẋ + Ω²x = 0`.

use crate::scalar::Real;
use crate::special::{sinc_t, sinhc_t};

/// Values of the two homogeneous solutions and their derivatives at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPoint<T> {
    pub h: T,
    pub g: T,
    pub hdot: T,
    pub gdot: T,
}

/// Damped oscillator with `h(0)=1, ḣ(0)=0` and `g(0)=0, ġ(0)=1/M`.
///
/// Underdamped, critical (`|γ₀−Ω| < 1e-6 Ω`) and overdamped branches are
/// written separately; the overdamped branch is arranged so that no growing
/// exponential is ever formed.
pub fn markovian_closed_form<T: Real>(gamma0: T, mass: T, omega: T, t: T) -> HomogeneousPoint<T> {
    let one = T::one();
    let inv_m = one / mass;
    let w2 = omega * omega;
    let decay = (-gamma0 * t).exp();
    let z = (gamma0 * gamma0 - w2) * t * t;
    if (gamma0 - omega).abs() < T::lit(1e-6) * omega && z.abs() < T::lit(50.0) {
        // near-critical: with z = (γ₀² − Ω²)t², the solutions are
        // e^{-γ₀t}[C(z) + γ₀t S(z)] etc. with C = Σ zᵏ/(2k)!, S = Σ zᵏ/(2k+1)!;
        // at z = 0 this is the critical form g = t e^{-γ₀t}/M
        let (c, s) = cosh_sinh_series(z);
        let s = s * t;
        let g = decay * s * inv_m;
        return HomogeneousPoint {
            h: decay * (c + gamma0 * s),
            g,
            hdot: -mass * w2 * g,
            gdot: decay * (c - gamma0 * s) * inv_m,
        };
    }
    if gamma0 < omega {
        let w1 = (w2 - gamma0 * gamma0).sqrt();
        let c = (w1 * t).cos();
        let s = sinc_t(w1, t); // sin(ω₁t)/ω₁
        let g = decay * s * inv_m;
        let h = decay * (c + gamma0 * s);
        let gdot = decay * (c - gamma0 * s) * inv_m;
        HomogeneousPoint {
            h,
            g,
            hdot: -mass * w2 * g,
            gdot,
        }
    } else {
        let k = (gamma0 * gamma0 - w2).sqrt();
        // e^{-γt}cosh(κt) and e^{-γt}sinh(κt)/κ without overflow
        let ep = ((k - gamma0) * t).exp();
        let em = (-(k + gamma0) * t).exp();
        let ch = (ep + em) * T::lit(0.5);
        let sh = if k * t > T::lit(1e-3) {
            (ep - em) * T::lit(0.5) / k
        } else {
            decay * sinhc_t(k, t)
        };
        let g = sh * inv_m;
        let h = ch + gamma0 * sh;
        let gdot = (ch - gamma0 * sh) * inv_m;
        HomogeneousPoint {
            h,
            g,
            hdot: -mass * w2 * g,
            gdot,
        }
    }
}

/// `(cosh √z, sinh √z / √z)` as power series in `z` (any sign).
fn cosh_sinh_series<T: Real>(z: T) -> (T, T) {
    let mut c = T::one();
    let mut s = T::one();
    let mut tc = T::one();
    let mut ts = T::one();
    for k in 1..80 {
        let kk = T::from_usize_lossy(2 * k);
        tc = tc * z / ((kk - T::one()) * kk);
        ts = ts * z / (kk * (kk + T::one()));
        c += tc;
        s += ts;
        if tc.abs() < T::epsilon() * c.abs() * T::lit(0.1) && ts.abs() < T::epsilon() * s.abs() * T::lit(0.1) {
            break;
        }
    }
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference: classic RK4 on the first-order system with a tiny step.
    fn rk4(gamma0: f64, omega: f64, x0: f64, v0: f64, t: f64) -> (f64, f64) {
        let n = 200_000;
        let dt = t / n as f64;
        let f = |x: f64, v: f64| (v, -2.0 * gamma0 * v - omega * omega * x);
        let (mut x, mut v) = (x0, v0);
        for _ in 0..n {
            let (a1, b1) = f(x, v);
            let (a2, b2) = f(x + 0.5 * dt * a1, v + 0.5 * dt * b1);
            let (a3, b3) = f(x + 0.5 * dt * a2, v + 0.5 * dt * b2);
            let (a4, b4) = f(x + dt * a3, v + dt * b3);
            x += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            v += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        (x, v)
    }

    #[test]
    fn free_oscillator() {
        let p = markovian_closed_form(0.0, 1.0, 1.0, std::f64::consts::FRAC_PI_2);
        assert!(p.h.abs() < 1e-15);
        assert!((p.g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_branches_match_ode() {
        let mass = 2.0;
        for &(g0, om) in &[(0.3, 1.0), (1.0, 1.0), (1.0 + 1e-8, 1.0), (3.0, 1.0), (40.0, 2.0)] {
            for &t in &[0.1, 1.0, 5.0] {
                let p = markovian_closed_form(g0, mass, om, t);
                let (h, hd) = rk4(g0, om, 1.0, 0.0, t);
                let (g, gd) = rk4(g0, om, 0.0, 1.0 / mass, t);
                for (a, b) in [(p.h, h), (p.hdot, hd), (p.g, g), (p.gdot, gd)] {
                    assert!((a - b).abs() < 1e-10, "γ₀={g0} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn critical_branch_form() {
        let p = markovian_closed_form(1.0, 1.0, 1.0, 2.0);
        assert!((p.g - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn underdamped_envelope() {
        for k in 0..200 {
            let t = k as f64 * 0.25;
            let p = markovian_closed_form(0.2, 1.0, 1.0, t);
            // |h| ≤ e^{-γt}(1 + γ/ω₁)
            let w1 = (1.0f64 - 0.04).sqrt();
            assert!(p.h.abs() <= (-0.2 * t).exp() * (1.0 + 0.2 / w1) + 1e-15);
        }
    }
}
