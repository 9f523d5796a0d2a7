//! Numerical quadrature: adaptive Gauss–Kronrod on finite and semi-infinite
//! ranges, oscillatory Fourier integrals with Wynn-epsilon acceleration, and
//! fourth-order weights for equispaced samples.

use crate::scalar::Real;

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK QK21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_932_913_598,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad<T> {
    pub value: T,
    pub abs_err: T,
    pub converged: bool,
}

/// Tolerances for the adaptive routines.
#[derive(Debug, Clone, Copy)]
pub struct QuadTol<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

impl<T: Real> QuadTol<T> {
    pub fn new(abs: T, rel: T) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    /// Tight default: about 1e-13 relative in f64, 1e-6 in f32.
    pub fn tight() -> Self {
        let eps = T::epsilon();
        let rel = (eps * T::lit(500.0)).max(T::lit(1e-13));
        Self::new(T::lit(1e-300).max(T::min_positive_value()), rel)
    }
}

/// One Gauss–Kronrod panel on `[a, b]`: (Kronrod estimate, error estimate).
pub fn gk21<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let c = (a + b) * T::lit(0.5);
    let h = (b - a) * T::lit(0.5);
    let fc = f(c);
    let mut rk = fc * T::lit(WGK[10]);
    let mut rg = T::zero();
    for j in 0..10 {
        let x = h * T::lit(XGK[j]);
        let f1 = f(c - x);
        let f2 = f(c + x);
        rk += T::lit(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            rg += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let est = rk * h;
    let err = ((rk - rg) * h).abs();
    (est, err)
}

/// Adaptive Gauss–Kronrod integration over a finite interval.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: QuadTol<T>) -> Quad<T> {
    if a == b {
        return Quad {
            value: T::zero(),
            abs_err: T::zero(),
            converged: true,
        };
    }
    let (v, e) = gk21(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    let floor = T::epsilon() * T::lit(50.0);
    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if err <= target {
            return Quad {
                value: total,
                abs_err: err,
                converged: true,
            };
        }
        if panels.len() >= tol.max_intervals {
            break;
        }
        // bisect the panel with the largest error
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, pv, pe) = panels.swap_remove(idx);
        let pm = (pa + pb) * T::lit(0.5);
        if (pb - pa).abs() <= floor * (pa.abs() + pb.abs()) {
            // cannot refine further; keep the panel and stop
            panels.push((pa, pb, pv, pe));
            break;
        }
        let (v1, e1) = gk21(&mut f, pa, pm);
        let (v2, e2) = gk21(&mut f, pm, pb);
        total = total - pv + v1 + v2;
        err = err - pe + e1 + e2;
        panels.push((pa, pm, v1, e1));
        panels.push((pm, pb, v2, e2));
    }
    // recompute sums to shed accumulated rounding
    let total: T = panels.iter().map(|p| p.2).sum();
    let err: T = panels.iter().map(|p| p.3).sum();
    let target = tol.abs.max(tol.rel * total.abs());
    Quad {
        value: total,
        abs_err: err,
        converged: err <= target * T::lit(10.0),
    }
}

/// Adaptive integration over `[a, inf)` via `x = a + u/(1-u)`.
pub fn integrate_to_inf<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, tol: QuadTol<T>) -> Quad<T> {
    let one = T::one();
    integrate(
        |u: T| {
            let w = one - u;
            let x = a + u / w;
            let v = f(x) / (w * w);
            if v.is_finite() {
                v
            } else {
                T::zero()
            }
        },
        T::zero(),
        one,
        tol,
    )
}

/// Which trigonometric kernel to use in [`fourier_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// `∫_0^∞ f(ω) cos(ωt) dω` or the sine analogue, for `f` that decays (possibly
/// slowly) at large `ω`.
///
/// `scale` is a characteristic frequency of `f`; the region `[0, ~scale*40]`
/// is integrated directly and the remaining tail is split into half periods
/// whose partial sums are extrapolated with the epsilon algorithm.
pub fn fourier_integral<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    t: T,
    kind: Trig,
    scale: T,
    tol: QuadTol<T>,
) -> Quad<T> {
    let t_abs = t.abs();
    let sign = if kind == Trig::Sin && t < T::zero() { -one::<T>() } else { one::<T>() };
    if t_abs == T::zero() {
        return match kind {
            Trig::Cos => integrate_to_inf(f, T::zero(), tol),
            Trig::Sin => Quad {
                value: T::zero(),
                abs_err: T::zero(),
                converged: true,
            },
        };
    }
    let trig = |w: T| match kind {
        Trig::Cos => (w * t_abs).cos(),
        Trig::Sin => (w * t_abs).sin(),
    };
    let half = T::PI() / t_abs;
    // direct region, aligned to whole half periods
    let a0 = (scale * T::lit(40.0)).max(half * T::lit(4.0));
    let n0 = (a0 / half).ceil();
    let a = n0 * half;
    let mut g = |w: T| f(w) * trig(w);
    let direct = integrate(&mut g, T::zero(), a, tol);
    let mut err = direct.abs_err;
    let mut converged = direct.converged;

    // tail: half-period chunks give an alternating series
    let chunk = half;
    let tail_tol = QuadTol {
        abs: tol.abs,
        rel: tol.rel,
        max_intervals: 200,
    };
    let mut s = T::zero();
    let mut wynn = Wynn::new();
    let mut last = T::nan();
    let mut tail_val = T::zero();
    let mut tail_ok = false;
    for k in 0..400usize {
        let lo = a + chunk * T::from_usize_lossy(k);
        let piece = integrate(&mut g, lo, lo + chunk, tail_tol);
        err += piece.abs_err;
        s += piece.value;
        let ext = wynn.push(s);
        let target = tol.abs.max(tol.rel * (direct.value + ext).abs());
        if piece.value.abs() <= target * T::lit(1e-2) {
            // tail has died out on its own
            tail_val = s;
            tail_ok = true;
            break;
        }
        if k >= 3 && (ext - last).abs() <= target {
            tail_val = ext;
            err += (ext - last).abs();
            tail_ok = true;
            break;
        }
        last = ext;
        tail_val = ext;
    }
    converged &= tail_ok;
    Quad {
        value: sign * (direct.value + tail_val),
        abs_err: err,
        converged,
    }
}

#[inline]
fn one<T: Real>() -> T {
    T::one()
}

/// Wynn's epsilon algorithm for accelerating a sequence of partial sums.
#[derive(Debug, Default)]
pub struct Wynn<T> {
    // the current anti-diagonal of the epsilon table
    diag: Vec<T>,
    best: T,
}

impl<T: Real> Wynn<T> {
    pub fn new() -> Self {
        Self {
            diag: Vec::new(),
            best: T::zero(),
        }
    }

    /// Adds the next partial sum and returns the current best estimate.
    pub fn push(&mut self, s: T) -> T {
        let mut prev_col = T::zero(); // eps_{-1} = 0
        let mut cur = s;
        let mut new_diag = Vec::with_capacity(self.diag.len() + 1);
        new_diag.push(cur);
        for &old in self.diag.iter() {
            let d = cur - old;
            let next = if d == T::zero() || !d.is_finite() {
                // table breaks down; keep the last finite even entry
                T::infinity()
            } else {
                prev_col + T::one() / d
            };
            prev_col = old;
            cur = next;
            if !cur.is_finite() {
                break;
            }
            new_diag.push(cur);
        }
        self.diag = new_diag;
        // even columns hold estimates: indices 0, 2, 4, ...
        let n = self.diag.len();
        let top_even = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
        let est = self.diag[top_even];
        self.best = if est.is_finite() { est } else { s };
        self.best
    }

    pub fn estimate(&self) -> T {
        self.best
    }
}

/// Fourth-order weights (in units of `dt`) for integrating samples
/// `y_0..y_n` over `[0, n dt]`.
///
/// For `n >= 4` the returned vector has `n + 1` entries. For `n < 4` it has
/// five entries: the rule then uses the samples `y_0..y_4` (beyond the upper
/// limit) to stay fourth-order. `n == 0` returns an empty vector.
pub fn gregory_weights(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => [251.0, 646.0, -264.0, 106.0, -19.0].iter().map(|w| w / 720.0).collect(),
        2 => [29.0, 124.0, 24.0, 4.0, -1.0].iter().map(|w| w / 90.0).collect(),
        3 => [27.0, 102.0, 72.0, 42.0, -3.0].iter().map(|w| w / 80.0).collect(),
        4 => [14.0, 64.0, 24.0, 64.0, 14.0].iter().map(|w| w / 45.0).collect(),
        _ => {
            let mut w = vec![1.0; n + 1];
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (i, &e) in ends.iter().enumerate() {
                w[i] = e;
                w[n - i] = e;
            }
            w
        }
    }
}

/// Cached fourth-order weights for every `n` up to a maximum: only the
/// boundary entries differ, so lookup is O(1).
#[derive(Debug, Clone)]
pub struct Gregory<T> {
    start: [[T; 5]; 5],
}

impl<T: Real> Default for Gregory<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Gregory<T> {
    pub fn new() -> Self {
        let mut start = [[T::zero(); 5]; 5];
        for (n, row) in start.iter_mut().enumerate().skip(1) {
            for (j, w) in gregory_weights(n).into_iter().enumerate() {
                row[j] = T::lit(w);
            }
        }
        Self { start }
    }

    /// Weight of sample `j` in the rule over `n` intervals. For `n < 4`,
    /// `j` ranges over `0..5`.
    #[inline]
    pub fn weight(&self, n: usize, j: usize) -> T {
        if n < 5 {
            return if j < 5 { self.start[n][j] } else { T::zero() };
        }
        let k = j.min(n - j);
        match k {
            0 => T::lit(3.0 / 8.0),
            1 => T::lit(7.0 / 6.0),
            2 => T::lit(23.0 / 24.0),
            _ => T::one(),
        }
    }

    /// `dt * Σ w_j y_j` over `n` intervals. For `n < 4` the slice must hold at
    /// least five samples.
    pub fn integrate(&self, n: usize, dt: T, y: &[T]) -> T {
        if n == 0 {
            return T::zero();
        }
        let m = if n < 5 { 5 } else { n + 1 };
        let mut s = T::zero();
        for (j, &v) in y[..m].iter().enumerate() {
            s += self.weight(n, j) * v;
        }
        s * dt
    }
}

/// Running integrals `I_k = ∫_0^{t_k} y` for every `k`, fourth order, in
/// linear time. Needs at least five samples.
pub fn cumulative_integral<T: Real>(dt: T, y: &[T]) -> Vec<T> {
    let n = y.len();
    assert!(n >= 5, "cumulative_integral needs at least five samples");
    let g = Gregory::<T>::new();
    let mut out = vec![T::zero(); n];
    for (k, o) in out.iter_mut().enumerate().take(n.min(11)).skip(1) {
        *o = g.integrate(k, dt, y);
    }
    if n <= 11 {
        return out;
    }
    // for k >= 6 the weights are: ends (3 each side) plus ones in between.
    // prefix sums give the interior part in O(1).
    let mut prefix = vec![T::zero(); n + 1];
    for j in 0..n {
        prefix[j + 1] = prefix[j] + y[j];
    }
    let c0 = T::lit(3.0 / 8.0);
    let c1 = T::lit(7.0 / 6.0);
    let c2 = T::lit(23.0 / 24.0);
    for (k, o) in out.iter_mut().enumerate().skip(11) {
        let interior = prefix[k - 2] - prefix[3];
        let s = c0 * (y[0] + y[k]) + c1 * (y[1] + y[k - 1]) + c2 * (y[2] + y[k - 2]) + interior;
        *o = s * dt;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk21_exact_for_polynomials() {
        for deg in 0..=20 {
            let (v, _) = gk21(&mut |x: f64| x.powi(deg), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {deg}: {v} vs {exact}");
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let q = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadTol::tight());
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(q.converged);
        assert!((q.value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn semi_infinite() {
        let q = integrate_to_inf(|x: f64| 1.0 / (1.0 + x * x), 0.0, QuadTol::tight());
        assert!((q.value - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let q = integrate_to_inf(|x: f64| (-x).exp(), 2.0, QuadTol::tight());
        assert!((q.value - (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn fourier_slow_decay() {
        // ∫ cos(ωt)/(1+ω²) = (π/2) e^{-t}
        for &t in &[0.1, 1.0, 3.0, 10.0] {
            let q = fourier_integral(|w: f64| 1.0 / (1.0 + w * w), t, Trig::Cos, 1.0, QuadTol::tight());
            let exact = std::f64::consts::FRAC_PI_2 * (-t as f64).exp();
            assert!((q.value - exact).abs() < 1e-10, "t={t}: {} vs {exact}", q.value);
        }
        // ∫ ω sin(ωt)/(1+ω²) = (π/2) e^{-t}: decays like 1/ω only
        for &t in &[0.5, 2.0] {
            let q = fourier_integral(|w: f64| w / (1.0 + w * w), t, Trig::Sin, 1.0, QuadTol::tight());
            let exact = std::f64::consts::FRAC_PI_2 * (-t as f64).exp();
            assert!((q.value - exact).abs() < 1e-8, "t={t}: {} vs {exact}", q.value);
        }
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // log 2 = 1 - 1/2 + 1/3 - ...
        let mut w = Wynn::new();
        let mut s = 0.0;
        let mut est = 0.0;
        for k in 1..=20 {
            s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            est = w.push(s);
        }
        assert!((est - 2f64.ln()).abs() < 1e-12, "{est}");
    }

    #[test]
    fn gregory_is_fourth_order_exact() {
        // exact for polynomials of degree <= 3 for every n, and degree 4 on the
        // start rules
        for n in 1..30usize {
            let w = gregory_weights(n);
            let m = w.len();
            let top = if n <= 4 { 4 } else { 3 };
            for deg in 0..=top {
                let s: f64 = (0..m).map(|j| w[j] * (j as f64).powi(deg)).sum();
                let exact = (n as f64).powi(deg + 1) / (deg as f64 + 1.0);
                assert!((s - exact).abs() < 1e-10 * exact.max(1.0), "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn cumulative_matches_direct() {
        let dt = 0.01;
        let y: Vec<f64> = (0..200).map(|k| (k as f64 * dt).sin()).collect();
        let c = cumulative_integral(dt, &y);
        let g = Gregory::<f64>::new();
        for k in 0..200 {
            let direct = g.integrate(k, dt, &y);
            assert!((c[k] - direct).abs() < 1e-13);
            let exact = 1.0 - (k as f64 * dt).cos();
            assert!((c[k] - exact).abs() < 1e-9, "k={k}");
        }
    }
}
