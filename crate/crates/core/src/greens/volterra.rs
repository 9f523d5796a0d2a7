//! Fourth-order product-quadrature solver for the homogeneous generalized
//! Langevin equation `ẍ + 2∫₀^t γ(t−s)ẋ(s)ds + Ω²x = 0`.
//!
//! Integrating twice gives the second-kind Volterra equation
//!
//! ```text
//! x(t) = x₀ + v₀t + 2x₀Γ₂(t) − ∫₀^t K(t−s) x(s) ds,   K(τ) = Ω²τ + 2Γ₁(τ)
//! ```
//!
//! with `Γ₁ = ∫γ`, `Γ₂ = ∫Γ₁`. Because `K(0) = 0` each step is explicit once
//! the first four values are known; those come from a 4×4 block solve with
//! the start rules of [`crate::quad::gregory_weights`]. The derivative follows
//! from `ẋ(t) = v₀ + 2x₀Γ₁(t) − ∫₀^t (Ω² + 2γ(t−s)) x(s) ds`.

use crate::bath::{BathKind, SpectralDensity};
use crate::error::Result;
use crate::quad::{cumulative_integral, Gregory};
use crate::scalar::Real;

/// Samples of `γ`, `Γ₁` and `Γ₂` on `t_j = j dt`. The `γ` and `Γ₁` arrays
/// also hold `j = -4..0` (offset [`PAD`]) so the start rules can reach past
/// the upper limit of integration.
pub(crate) struct KernelSamples<T> {
    pub gamma: Vec<T>,
    pub g1: Vec<T>,
    pub g2: Vec<T>,
}

pub(crate) const PAD: usize = 4;

impl<T: Real> KernelSamples<T> {
    pub fn new(sd: &SpectralDensity<T>, dt: T, n: usize) -> Result<Self> {
        let idx = |j: usize| dt * (T::from_usize_lossy(j) - T::from_usize_lossy(PAD));
        match sd.kind {
            BathKind::OhmicDrude => {
                // closed forms, analytic in t, so negative lags are the smooth
                // continuation the start rules need
                let g0 = sd.gamma0;
                let l = sd.cutoff.unwrap_or(T::one());
                let gamma = (0..n + PAD).map(|j| g0 * l * (-l * idx(j)).exp()).collect();
                let g1 = (0..n + PAD).map(|j| -g0 * (-l * idx(j)).exp_m1()).collect();
                let g2 = (0..n)
                    .map(|j| {
                        let t = dt * T::from_usize_lossy(j);
                        g0 * (t + (-l * t).exp_m1() / l)
                    })
                    .collect();
                Ok(Self { gamma, g1, g2 })
            }
            _ => {
                // tabulate γ by quadrature, integrate on the grid; negative
                // lags by reflection (γ even, Γ₁ odd)
                let m = n.max(5);
                let pos: Vec<T> = (0..m).map(|j| sd.damping_kernel(dt * T::from_usize_lossy(j))).collect::<Result<_>>()?;
                let g1p = cumulative_integral(dt, &pos);
                let g2p = cumulative_integral(dt, &g1p);
                let mut gamma = Vec::with_capacity(n + PAD);
                let mut g1 = Vec::with_capacity(n + PAD);
                for k in (1..=PAD).rev() {
                    gamma.push(pos[k]);
                    g1.push(-g1p[k]);
                }
                gamma.extend_from_slice(&pos[..n]);
                g1.extend_from_slice(&g1p[..n]);
                Ok(Self {
                    gamma,
                    g1,
                    g2: g2p[..n].to_vec(),
                })
            }
        }
    }

    #[inline]
    fn gamma_at(&self, j: isize) -> T {
        self.gamma[(j + PAD as isize) as usize]
    }

    #[inline]
    fn g1_at(&self, j: isize) -> T {
        self.g1[(j + PAD as isize) as usize]
    }
}

/// Raw output of one solve: `(h, ḣ, G, Ġ)` with `G` the solution for unit
/// initial velocity (so `g = G/M`).
pub(crate) struct Solution<T> {
    pub h: Vec<T>,
    pub hdot: Vec<T>,
    pub g: Vec<T>,
    pub gdot: Vec<T>,
}

fn solve4<T: Real>(mut a: [[T; 4]; 4], mut b: [[T; 2]; 4]) -> [[T; 2]; 4] {
    for c in 0..4 {
        let p = (c..4)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap_or(c);
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            for k in c..4 {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
            for k in 0..2 {
                let v = b[c][k];
                b[r][k] -= f * v;
            }
        }
    }
    let mut x = [[T::zero(); 2]; 4];
    for r in (0..4).rev() {
        for k in 0..2 {
            let mut s = b[r][k];
            for c in r + 1..4 {
                s -= a[r][c] * x[c][k];
            }
            x[r][k] = s / a[r][r];
        }
    }
    x
}

/// Solves for `h` (x₀=1, v₀=0) and `G` (x₀=0, v₀=1) on `n` points.
pub(crate) fn solve<T: Real>(ks: &KernelSamples<T>, omega: T, dt: T, n: usize) -> Solution<T> {
    let w2 = omega * omega;
    let greg = Gregory::<T>::new();
    let big_k = |j: isize| w2 * dt * T::from_isize(j).unwrap() + T::lit(2.0) * ks.g1_at(j);
    // K on lags 0..n (and -4..-1 for the start block)
    let kpos: Vec<T> = (0..n).map(|j| big_k(j as isize)).collect();
    let two = T::lit(2.0);
    let fh = |j: usize| T::one() + two * ks.g2[j];
    let fg = |j: usize| dt * T::from_usize_lossy(j);

    let mut h = vec![T::zero(); n];
    let mut g = vec![T::zero(); n];
    h[0] = T::one();
    // start block for n = 1..4 (needs n ≥ 5 overall)
    let ns = 4.min(n - 1);
    if ns > 0 {
        let mut a = [[T::zero(); 4]; 4];
        let mut b = [[T::zero(); 2]; 4];
        for (r, row) in a.iter_mut().enumerate().take(4) {
            let m = r + 1;
            row[r] = T::one();
            for (c, entry) in row.iter_mut().enumerate() {
                let j = c + 1;
                *entry += dt * greg.weight(m, j) * big_k(m as isize - j as isize);
            }
            b[r][0] = fh(m) - dt * greg.weight(m, 0) * big_k(m as isize);
            b[r][1] = fg(m);
        }
        let x = solve4(a, b);
        for m in 1..=ns {
            h[m] = x[m - 1][0];
            g[m] = x[m - 1][1];
        }
    }
    let c0 = T::lit(3.0 / 8.0) - T::one();
    let c1 = T::lit(7.0 / 6.0) - T::one();
    let c2 = T::lit(23.0 / 24.0) - T::one();
    for m in 5..n {
        let mut sh = T::zero();
        let mut sg = T::zero();
        // Σ_{j<m} K[m-j] x[j]
        for j in 0..m {
            let k = kpos[m - j];
            sh += k * h[j];
            sg += k * g[j];
        }
        // end corrections (j = m contributes K(0) = 0)
        let corr = |x: &[T]| c0 * kpos[m] * x[0] + c1 * kpos[m - 1] * x[1] + c2 * kpos[m - 2] * x[2] + c2 * kpos[2] * x[m - 2] + c1 * kpos[1] * x[m - 1];
        sh += corr(&h);
        sg += corr(&g);
        h[m] = fh(m) - dt * sh;
        g[m] = fg(m) - dt * sg;
    }

    // derivatives
    let kd = |j: isize| w2 + two * ks.gamma_at(j);
    let kdpos: Vec<T> = (0..n).map(|j| kd(j as isize)).collect();
    let mut hdot = vec![T::zero(); n];
    let mut gdot = vec![T::zero(); n];
    gdot[0] = T::one();
    for m in 1..n {
        let (mut sh, mut sg) = (T::zero(), T::zero());
        if m < 5 {
            for j in 0..5 {
                let w = greg.weight(m, j);
                let k = kd(m as isize - j as isize);
                sh += w * k * h[j];
                sg += w * k * g[j];
            }
        } else {
            for j in 0..=m {
                let k = kdpos[m - j];
                sh += k * h[j];
                sg += k * g[j];
            }
            let corr = |x: &[T]| {
                c0 * (kdpos[m] * x[0] + kdpos[0] * x[m])
                    + c1 * (kdpos[m - 1] * x[1] + kdpos[1] * x[m - 1])
                    + c2 * (kdpos[m - 2] * x[2] + kdpos[2] * x[m - 2])
            };
            sh += corr(&h);
            sg += corr(&g);
        }
        hdot[m] = two * ks.g1_at(m as isize) - dt * sh;
        gdot[m] = T::one() - dt * sg;
    }
    Solution { h, hdot, g, gdot }
}
