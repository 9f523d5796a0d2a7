//! Empirical moments and fluctuation-theorem estimators from work samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sample moments with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments<T> {
    pub n: usize,
    pub mean: T,
    /// Unbiased sample variance.
    pub variance: T,
    pub stderr_mean: T,
    /// `√((m₄ − m₂²)/n)`.
    pub stderr_variance: T,
    pub skewness: T,
    /// `√(6/n)`, valid for Gaussian samples.
    pub stderr_skewness: T,
}

fn empty() -> Error {
    Error::Statistics {
        module: "mc",
        message: "at least two samples are needed".into(),
    }
}

pub fn moments<T: Real>(xs: &[T]) -> Result<Moments<T>> {
    let n = xs.len();
    if n < 2 {
        return Err(empty());
    }
    let nf = T::from_usize_lossy(n);
    let mean = xs.iter().copied().sum::<T>() / nf;
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let variance = m2 * nf / (nf - T::one());
    let skewness = if m2 > T::zero() { m3 / m2.powf(T::lit(1.5)) } else { T::zero() };
    Ok(Moments {
        n,
        mean,
        variance,
        stderr_mean: (variance / nf).sqrt(),
        stderr_variance: ((m4 - m2 * m2).max(T::zero()) / nf).sqrt(),
        skewness,
        stderr_skewness: (T::lit(6.0) / nf).sqrt(),
    })
}

/// Exponential-average estimate of `⟨e^{−βW}⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarzynskiEstimate<T> {
    pub n: usize,
    /// `⟨e^{−βW}⟩`.
    pub estimate: T,
    /// Jackknife standard error of `estimate`.
    pub stderr: T,
    /// `−ln⟨e^{−βW}⟩/β`.
    pub delta_f_estimate: T,
    /// `estimate·e^{βΔF} − 1` for the reference `ΔF`.
    pub ratio_minus_one: T,
    pub ratio_stderr: T,
    /// `(Σw)²/Σw²` with `w = e^{−βW}`.
    pub n_eff: T,
    /// `β σ_W > 3`: the average is dominated by rare low-work samples.
    pub heavy_tail: bool,
}

/// Plain exponential average with leave-one-out jackknife error.
pub fn jarzynski_estimate<T: Real>(samples: &[T], beta: T, delta_f: T) -> Result<JarzynskiEstimate<T>> {
    let m = moments(samples)?;
    let n = samples.len();
    let nf = T::from_usize_lossy(n);
    // weights relative to the smallest work keep the sum finite
    let w_min = samples.iter().copied().fold(T::infinity(), T::min);
    let w: Vec<T> = samples.iter().map(|&x| (-beta * (x - w_min)).exp()).collect();
    let s: T = w.iter().copied().sum();
    let s2: T = w.iter().map(|&x| x * x).sum();
    let mean_rel = s / nf;
    let loo_mean = w.iter().map(|&x| (s - x) / (nf - T::one())).sum::<T>() / nf;
    let jk_var = w
        .iter()
        .map(|&x| {
            let d = (s - x) / (nf - T::one()) - loo_mean;
            d * d
        })
        .sum::<T>()
        * (nf - T::one())
        / nf;
    let shift = (-beta * w_min).exp();
    let estimate = mean_rel * shift;
    let stderr = jk_var.sqrt() * shift;
    // ratio in log space so that large βΔF does not overflow
    let log_ratio = mean_rel.ln() - beta * w_min + beta * delta_f;
    let ratio = log_ratio.exp();
    Ok(JarzynskiEstimate {
        n,
        estimate,
        stderr,
        delta_f_estimate: -(mean_rel.ln() - beta * w_min) / beta,
        ratio_minus_one: log_ratio.exp_m1(),
        ratio_stderr: ratio * jk_var.sqrt() / mean_rel,
        n_eff: s * s / s2,
        heavy_tail: beta * m.variance.sqrt() > T::lit(3.0),
    })
}

/// Weighted linear fit of `ln P_F(W) − ln P_R(−W)` over histogram bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrooksFit<T> {
    pub slope: T,
    pub slope_stderr: T,
    pub intercept: T,
    pub intercept_stderr: T,
    /// `−intercept/slope`.
    pub delta_f_estimate: T,
    /// Bin centres used in the fit.
    pub centres: Vec<T>,
    pub log_ratio: Vec<T>,
    /// Reduced χ² of the fit.
    pub chi2_per_dof: T,
}

/// Minimum count per bin in each direction for a bin to enter the fit.
pub const MIN_BIN_COUNT: usize = 10;

/// Histograms forward work and negated reverse work on a common grid over
/// their overlap, then fits the log-ratio with weights `1/(1/n_F + 1/n_R)`.
pub fn crooks_histogram_fit<T: Real>(forward: &[T], reverse: &[T], bins: usize) -> Result<CrooksFit<T>> {
    if forward.is_empty() || reverse.is_empty() {
        return Err(empty());
    }
    let neg: Vec<T> = reverse.iter().map(|&w| -w).collect();
    let (fmin, fmax) = min_max(forward);
    let (rmin, rmax) = min_max(&neg);
    let lo = fmin.max(rmin);
    let hi = fmax.min(rmax);
    if !(hi > lo) || bins < 3 {
        return Err(Error::Statistics {
            module: "mc",
            message: "forward and reverse work distributions do not overlap".into(),
        });
    }
    let width = (hi - lo) / T::from_usize_lossy(bins);
    let count = |xs: &[T]| {
        let mut c = vec![0usize; bins];
        for &x in xs {
            if x >= lo && x <= hi {
                let k = ((x - lo) / width).to_usize().unwrap_or(0).min(bins - 1);
                c[k] += 1;
            }
        }
        c
    };
    let cf = count(forward);
    let cr = count(&neg);
    let norm = (T::from_usize_lossy(reverse.len()) / T::from_usize_lossy(forward.len())).ln();
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..bins {
        if cf[k] >= MIN_BIN_COUNT && cr[k] >= MIN_BIN_COUNT {
            let (a, b) = (T::from_usize_lossy(cf[k]), T::from_usize_lossy(cr[k]));
            xs.push(lo + width * (T::from_usize_lossy(k) + T::lit(0.5)));
            ys.push((a / b).ln() + norm);
            ws.push(T::one() / (T::one() / a + T::one() / b));
        }
    }
    if xs.len() < 3 {
        return Err(Error::Statistics {
            module: "mc",
            message: format!("only {} bins have {MIN_BIN_COUNT}+ counts in both directions", xs.len()),
        });
    }
    let sw: T = ws.iter().copied().sum();
    let sx: T = ws.iter().zip(&xs).map(|(w, x)| *w * *x).sum();
    let sy: T = ws.iter().zip(&ys).map(|(w, y)| *w * *y).sum();
    let xm = sx / sw;
    let ym = sy / sw;
    let sxx: T = ws.iter().zip(&xs).map(|(w, x)| *w * (*x - xm) * (*x - xm)).sum();
    let sxy: T = ws.iter().zip(xs.iter().zip(&ys)).map(|(w, (x, y))| *w * (*x - xm) * (*y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: T = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| {
            let r = *y - intercept - slope * *x;
            *w * r * r
        })
        .sum();
    let dof = T::from_usize_lossy(xs.len() - 2);
    Ok(CrooksFit {
        slope,
        slope_stderr: (T::one() / sxx).sqrt(),
        intercept,
        intercept_stderr: (T::one() / sw + xm * xm / sxx).sqrt(),
        delta_f_estimate: -intercept / slope,
        centres: xs,
        log_ratio: ys,
        chi2_per_dof: chi2 / dof,
    })
}

fn min_max<T: Real>(xs: &[T]) -> (T, T) {
    xs.iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Both estimators for a forward/reverse pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtEstimates<T> {
    pub forward: Moments<T>,
    pub reverse: Moments<T>,
    pub jarzynski_forward: JarzynskiEstimate<T>,
    pub jarzynski_reverse: JarzynskiEstimate<T>,
    /// `None` when the two histograms have too little overlap.
    pub crooks: Option<CrooksFit<T>>,
}

/// Histogram bin count used by [`empirical_ft_estimators`].
pub const CROOKS_BINS: usize = 60;

pub fn empirical_ft_estimators<T: Real>(forward: &[T], reverse: &[T], beta: T, delta_f: T) -> Result<FtEstimates<T>> {
    if forward.len() < 1000 || reverse.len() < 1000 {
        log::warn!("fewer than 1000 work samples; estimator errors are unreliable");
    }
    Ok(FtEstimates {
        forward: moments(forward)?,
        reverse: moments(reverse)?,
        jarzynski_forward: jarzynski_estimate(forward, beta, delta_f)?,
        jarzynski_reverse: jarzynski_estimate(reverse, beta, -delta_f)?,
        crooks: crooks_histogram_fit(forward, reverse, CROOKS_BINS).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| mean + sd * f64::standard_normal(&mut rng)).collect()
    }

    #[test]
    fn moments_of_known_sample() {
        let m = moments::<f64>(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.skewness, 0.0);
        assert!(moments::<f64>(&[1.0]).is_err());
    }

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let xs = gaussian(500, 0.3, 0.5, 1);
        let j = jarzynski_estimate(&xs, 1.0, 0.0).unwrap();
        let w: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        let m = moments(&w).unwrap();
        assert!((j.estimate - m.mean).abs() < 1e-12 * m.mean);
        assert!((j.stderr - m.stderr_mean).abs() < 1e-10 * m.stderr_mean);
    }

    #[test]
    fn gaussian_work_satisfies_estimators() {
        // Gaussian with βσ²/2 = ⟨W⟩ − ΔF satisfies both theorems
        let (beta, df, var): (f64, f64, f64) = (1.0, 0.2, 0.8);
        let mean_f = df + beta * var / 2.0;
        let mean_r = -df + beta * var / 2.0;
        let f = gaussian(100_000, mean_f, var.sqrt(), 2);
        let r = gaussian(100_000, mean_r, var.sqrt(), 3);
        let est = empirical_ft_estimators(&f, &r, beta, df).unwrap();
        let j = est.jarzynski_forward;
        assert!(j.ratio_minus_one.abs() < 4.0 * j.ratio_stderr, "{j:?}");
        assert!(!j.heavy_tail && j.n_eff > 1e4);
        let c = est.crooks.unwrap();
        assert!((c.slope - beta).abs() < 4.0 * c.slope_stderr, "{c:?}");
        assert!((c.delta_f_estimate - df).abs() < 0.05);
    }
}
