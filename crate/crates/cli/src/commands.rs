//! Subcommand pipelines. Each returns the files to write; nothing here
//! touches the filesystem.

use qbm_core::bath::FrequencyGrid;
use qbm_core::dechist::{noise_strength, partition_sum, report_from_strength, scalar_offdiag_exponent, ResolvabilityFlag};
use qbm_core::mc::{discrete_bath_oracle, empirical_ft_estimators, ContinuumSampler, FtEstimates, Propagation};
use qbm_core::thermal::{delta_f, dressed_free_energy, equilibrium_variances};
use qbm_core::work::{
    analyze, crooks_check, fdot_spectrum, hightemp_correction, jarzynski_check, lowtemp_sigma_ft, regime_classifier, Regime,
    RegimeReport, WorkAnalysis,
};
use qbm_core::{
    DiscreteBath, GreensMethod, GreensSolutions, KernelTable, Protocol, SpectralDensity, StationaryCorrelation, TimeGrid,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode, Needs, Oracle, PropagationKind, SweepParameter};
use crate::error::CliError;
use crate::output::{fmt_f64, Outputs};

type Result<T> = std::result::Result<T, CliError>;

/// Zero-padding factor of the drive spectrum used for regime classification.
const SPECTRUM_PADDING: usize = 16;
/// Points of the plot-ready work density table.
const DENSITY_POINTS: usize = 201;

/// Bath, temperature and time step shared by every pipeline.
struct Model {
    sd: SpectralDensity<f64>,
    beta: f64,
    hbar: f64,
    omega: f64,
    dt: f64,
}

impl Model {
    fn new(cfg: &ExperimentConfig, hbar: f64) -> Result<Self> {
        let sd = cfg.spectral_density()?;
        Ok(Self {
            dt: cfg.time_step(&sd),
            sd,
            beta: cfg.bath.beta,
            hbar,
            omega: cfg.system.omega,
        })
    }

    fn greens(&self, horizon: f64) -> Result<GreensSolutions<f64>> {
        Ok(GreensSolutions::solve(&self.sd, self.omega, TimeGrid::with_horizon(self.dt, horizon)?)?)
    }

    fn delta_f(&self, p: &Protocol<f64>) -> Result<f64> {
        Ok(delta_f(p.f_start(), p.f_end(), self.sd.mass, self.omega)?)
    }
}

/// Which blocks each subcommand reads.
pub fn needs(subcommand: &str) -> Needs {
    Needs {
        protocol: matches!(subcommand, "work" | "expand" | "mc" | "verify-ft" | "sweep"),
        sweep: subcommand == "sweep",
    }
}

/// Whether the subcommand draws random numbers (and so records a seed).
pub fn uses_seed(subcommand: &str) -> bool {
    matches!(subcommand, "mc" | "verify-ft")
}

pub fn run(subcommand: &str, cfg: &ExperimentConfig) -> Result<Outputs> {
    match subcommand {
        "kernels" => kernels(cfg),
        "greens" => greens(cfg),
        "thermal" => thermal(cfg),
        "work" => work(cfg),
        "expand" => expand(cfg),
        "mc" => mc(cfg),
        "dechist" => dechist(cfg),
        "verify-ft" => verify_ft(cfg),
        "sweep" => sweep(cfg),
        other => Err(CliError::Config(format!("unknown subcommand `{other}`"))),
    }
}

fn kernels(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.bath.hbar)?;
    let grid = TimeGrid::new(m.dt, cfg.numerics.kernel_lags)?;
    let freq = FrequencyGrid::for_bath(&m.sd, m.omega, m.beta, m.hbar, cfg.numerics.freq_points);
    let k = KernelTable::build(&m.sd, m.beta, m.hbar, grid, freq)?;

    #[derive(Serialize)]
    struct Report {
        bath: SpectralDensity<f64>,
        beta: f64,
        hbar: f64,
        dt: f64,
        lags: usize,
        d_omega: f64,
        local: bool,
        lag0_cell_averaged: bool,
        fdr_violation: f64,
    }
    let mut out = Outputs::default();
    out.csv("kernels.csv", &["t", "gamma", "hbar_nu"], (0..grid.len).map(|j| vec![grid.t(j), k.gamma[j], k.hbar_nu[j]]));
    out.csv(
        "kernels_ft.csv",
        &["omega", "gamma_ft", "hbar_nu_ft"],
        (0..freq.len).map(|j| vec![freq.omega(j), k.gamma_ft[j], k.hbar_nu_ft[j]]),
    );
    out.json(
        "kernels.json",
        &Report {
            bath: m.sd,
            beta: m.beta,
            hbar: m.hbar,
            dt: m.dt,
            lags: grid.len,
            d_omega: freq.d_omega,
            local: k.local,
            lag0_cell_averaged: k.lag0_cell_averaged,
            fdr_violation: k.fdr_violation(),
        },
    );
    Ok(out)
}

fn greens(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.bath.hbar)?;
    let gs = m.greens(cfg.numerics.horizon)?;
    let (res_h, res_g) = gs.identity_residuals(&m.sd)?;
    let equation_residual = if m.sd.is_local() { None } else { Some(gs.equation_residual(&m.sd)?) };

    #[derive(Serialize)]
    struct Report {
        method: GreensMethod,
        dt: f64,
        len: usize,
        horizon: f64,
        identity_residual_h: f64,
        identity_residual_g: f64,
        /// Not defined pointwise for the local kernel.
        equation_residual: Option<f64>,
    }
    let mut out = Outputs::default();
    out.csv(
        "greens.csv",
        &["t", "h", "hdot", "g", "gdot"],
        (0..gs.grid.len).map(|k| vec![gs.grid.t(k), gs.h[k], gs.hdot[k], gs.g[k], gs.gdot[k]]),
    );
    out.json(
        "greens.json",
        &Report {
            method: gs.method,
            dt: gs.grid.dt,
            len: gs.grid.len,
            horizon: gs.grid.horizon(),
            identity_residual_h: res_h,
            identity_residual_g: res_g,
            equation_residual,
        },
    );
    Ok(out)
}

fn thermal(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.bath.hbar)?;
    let tol = cfg.numerics.tolerance;
    let st = equilibrium_variances(&m.sd, m.beta, m.hbar, m.omega, tol)?;
    // the dressed free energy needs ħ as the phase-space unit and a cutoff
    let f_offset = if m.hbar > 0.0 && !m.sd.is_local() {
        Some(dressed_free_energy(&m.sd, m.beta, m.hbar, m.omega, tol)?.0)
    } else {
        None
    };
    let delta_f = match &cfg.protocol {
        Some(_) => Some(m.delta_f(&cfg.protocol()?)?),
        None => None,
    };

    #[derive(Serialize)]
    struct Report {
        beta: f64,
        hbar: f64,
        sigma_xx0: f64,
        sigma_pp0: f64,
        matsubara_cutoff: usize,
        tail_xx: f64,
        tail_pp: f64,
        f_offset: Option<f64>,
        delta_f: Option<f64>,
    }
    let mut out = Outputs::default();
    out.json(
        "thermal.json",
        &Report {
            beta: m.beta,
            hbar: m.hbar,
            sigma_xx0: st.sigma_xx0,
            sigma_pp0: st.sigma_pp0,
            matsubara_cutoff: st.matsubara_cutoff,
            tail_xx: st.tail_xx,
            tail_pp: st.tail_pp,
            f_offset,
            delta_f,
        },
    );
    Ok(out)
}

/// Analytic Gaussian work statistics in both directions.
struct Analytic {
    fwd: WorkAnalysis<f64>,
    rev: WorkAnalysis<f64>,
    jarzynski_residual: f64,
    crooks_slope: Option<f64>,
    regime: RegimeReport<f64>,
}

fn analytic(m: &Model, p: &Protocol<f64>, gs: &GreensSolutions<f64>) -> Result<Analytic> {
    let table = p.tabulate(&gs.grid)?;
    let corr = StationaryCorrelation::build(gs, &m.sd, m.beta, m.hbar, table.f.len())?;
    let fwd = analyze(p, gs, &corr, &m.sd, m.beta, m.hbar)?;
    let rev = analyze(&p.reverse(), gs, &corr, &m.sd, m.beta, m.hbar)?;
    let (df, rd) = (&fwd.distribution, &rev.distribution);
    let crooks_slope = if df.var_w > 0.0 {
        Some(crooks_check(df, rd, &density_grid(df.mean_w, -rd.mean_w, df.var_w.sqrt(), 41))?.slope)
    } else {
        None
    };
    Ok(Analytic {
        jarzynski_residual: jarzynski_check(df).residual,
        crooks_slope,
        regime: regime_classifier(&fdot_spectrum(&table, SPECTRUM_PADDING), m.beta, m.hbar)?,
        fwd,
        rev,
    })
}

/// Evenly spaced points covering both work peaks and four widths beyond.
fn density_grid(a: f64, b: f64, sd: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (a.min(b) - 4.0 * sd, a.max(b) + 4.0 * sd);
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn work(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.bath.hbar)?;
    let p = cfg.protocol()?;
    let gs = m.greens(cfg.numerics.horizon)?;
    let a = analytic(&m, &p, &gs)?;
    let d = &a.fwd.distribution;

    #[derive(Serialize)]
    struct Report {
        #[serde(rename = "meanW")]
        mean_w: f64,
        #[serde(rename = "varW")]
        var_w: f64,
        #[serde(rename = "deltaF")]
        delta_f: f64,
        jarzynski_residual: f64,
        crooks_slope: Option<f64>,
        regime: Regime,
        beta: f64,
        hbar: f64,
        imbalance: f64,
        mean_via_homogeneous: f64,
        mean_via_response: f64,
        var_time_domain: f64,
        var_frequency_domain: f64,
        var_relative_discrepancy: f64,
        #[serde(rename = "reverse_meanW")]
        reverse_mean_w: f64,
        omega_h: f64,
        omega_l: f64,
        beta_hbar_omega_h: f64,
        beta_hbar_omega_l: f64,
    }
    let mut out = Outputs::default();
    out.json(
        "work.json",
        &Report {
            mean_w: d.mean_w,
            var_w: d.var_w,
            delta_f: d.delta_f,
            jarzynski_residual: a.jarzynski_residual,
            crooks_slope: a.crooks_slope,
            regime: a.regime.regime,
            beta: m.beta,
            hbar: m.hbar,
            imbalance: d.imbalance(),
            mean_via_homogeneous: a.fwd.mean.via_homogeneous,
            mean_via_response: a.fwd.mean.via_response,
            var_time_domain: a.fwd.variance.time_domain,
            var_frequency_domain: a.fwd.variance.frequency_domain,
            var_relative_discrepancy: a.fwd.variance.relative_discrepancy(),
            reverse_mean_w: a.rev.distribution.mean_w,
            omega_h: a.regime.omega_h,
            omega_l: a.regime.omega_l,
            beta_hbar_omega_h: a.regime.beta_hbar_omega_h,
            beta_hbar_omega_l: a.regime.beta_hbar_omega_l,
        },
    );
    if d.var_w > 0.0 {
        let r = &a.rev.distribution;
        let grid = density_grid(d.mean_w, -r.mean_w, d.var_w.sqrt(), DENSITY_POINTS);
        out.csv(
            "work_density.csv",
            &["w", "log_p_forward", "log_p_reverse_neg", "log_ratio"],
            grid.iter().map(|&w| {
                let (f, r) = (d.log_density(w), r.log_density(-w));
                vec![w, f, r, f - r]
            }),
        );
    }
    Ok(out)
}

fn expand(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.bath.hbar)?;
    let p = cfg.protocol()?;
    let gs = m.greens(cfg.numerics.horizon)?;
    let s = hightemp_correction(&p, &m.sd, m.omega, Some(&gs), m.beta, m.hbar, cfg.numerics.series_order)?;
    let regime = regime_classifier(&fdot_spectrum(&p.tabulate(&gs.grid)?, SPECTRUM_PADDING), m.beta, m.hbar)?;

    let mut out = Outputs::default();
    let mut partial = 0.0;
    out.csv(
        "expand.csv",
        &["n", "coefficient", "term", "term_time", "partial_sum"],
        s.terms.iter().enumerate().map(|(k, &t)| {
            partial += t;
            let tt = s.terms_time.as_ref().map_or(f64::NAN, |v| v[k]);
            vec![(k + 1) as f64, s.coefficients[k], t, tt, partial]
        }),
    );
    if m.hbar > 0.0 {
        let freq = FrequencyGrid::for_bath(&m.sd, m.omega, m.beta, m.hbar, cfg.numerics.freq_points);
        let omegas: Vec<f64> = (1..freq.len).map(|j| freq.omega(j)).collect();
        let pts = lowtemp_sigma_ft(&omegas, &m.sd, m.omega, m.beta, m.hbar, cfg.numerics.lowtemp_terms)?;
        out.csv(
            "lowtemp.csv",
            &["omega", "value", "exact", "bound"],
            pts.iter().map(|q| vec![q.omega, q.value, q.exact, q.bound]),
        );
    }

    #[derive(Serialize)]
    struct Report {
        series_order: usize,
        classical: f64,
        exact_correction: f64,
        partial_sum: f64,
        remainder: f64,
        form_disagreement: Option<f64>,
        regime: Regime,
        beta_hbar_omega_h: f64,
        lowtemp_terms: usize,
    }
    out.json(
        "expand.json",
        &Report {
            series_order: cfg.numerics.series_order,
            classical: s.classical,
            exact_correction: s.exact_correction,
            partial_sum: s.partial_sum,
            remainder: s.remainder(),
            form_disagreement: s.form_disagreement(),
            regime: regime.regime,
            beta_hbar_omega_h: regime.beta_hbar_omega_h,
            lowtemp_terms: cfg.numerics.lowtemp_terms,
        },
    );
    Ok(out)
}

/// Forward and reverse work samples with their estimators.
struct McRun {
    forward: Vec<f64>,
    reverse: Vec<f64>,
    /// Exact mean and variance of the sampled model.
    mean: f64,
    variance: f64,
    delta_f: f64,
    recurrence: Option<(f64, bool)>,
    estimates: FtEstimates<f64>,
}

/// Seed of the reverse-protocol stream.
fn reverse_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

fn run_mc(cfg: &ExperimentConfig, m: &Model, p: &Protocol<f64>, gs: &GreensSolutions<f64>) -> Result<McRun> {
    let (n, seed) = (cfg.mc.samples, cfg.mc.seed);
    let rp = p.reverse();
    let delta_f = m.delta_f(p)?;
    let (forward, reverse, mean, variance, recurrence) = match cfg.mc.oracle {
        Oracle::Continuum => {
            let f = ContinuumSampler::new(&m.sd, m.beta, m.hbar, p, gs, seed)?.sample(n);
            let r = ContinuumSampler::new(&m.sd, m.beta, m.hbar, &rp, gs, reverse_seed(seed))?.sample(n);
            (f.samples, r.samples, f.mean, f.variance, None)
        }
        Oracle::Discrete(modes) => {
            let db = DiscreteBath::new(&m.sd, m.omega, m.beta, modes, cfg.discretization(&m.sd))?;
            let prop = match cfg.mc.propagation {
                PropagationKind::Exact => Propagation::Exact,
                PropagationKind::Leapfrog => {
                    let top = db.frequencies.iter().fold(m.omega, |a, &b| a.max(b));
                    Propagation::Leapfrog { dt: 0.05 / top }
                }
            };
            let f = discrete_bath_oracle(&db, p, n, seed, p.tau, prop)?;
            let r = discrete_bath_oracle(&db, &rp, n, reverse_seed(seed), p.tau, prop)?;
            if f.recurrence_warning {
                log::warn!(
                    "protocol duration {} exceeds the bath recurrence time {}; use more modes",
                    p.tau,
                    f.recurrence_time
                );
            }
            let rec = Some((f.recurrence_time, f.recurrence_warning));
            (f.samples, r.samples, f.mean, f.variance, rec)
        }
    };
    let estimates = empirical_ft_estimators(&forward, &reverse, m.beta, delta_f)?;
    Ok(McRun {
        forward,
        reverse,
        mean,
        variance,
        delta_f,
        recurrence,
        estimates,
    })
}

fn quality(cfg: &ExperimentConfig, run: &McRun) -> Option<String> {
    let n_eff = run.estimates.jarzynski_forward.n_eff;
    (n_eff < cfg.mc.min_n_eff)
        .then(|| format!("Jarzynski effective sample size {n_eff:.1} is below mc.min_n_eff = {}", cfg.mc.min_n_eff))
}

fn mc(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.effective_hbar())?;
    let p = cfg.protocol()?;
    let gs = m.greens(cfg.numerics.horizon)?;
    let run = run_mc(cfg, &m, &p, &gs)?;
    let e = &run.estimates;

    #[derive(Serialize)]
    struct Report<'a> {
        oracle: String,
        mode: Mode,
        samples: usize,
        seed: u64,
        reverse_seed: u64,
        beta: f64,
        hbar: f64,
        #[serde(rename = "deltaF")]
        delta_f: f64,
        model_mean: f64,
        model_variance: f64,
        mean_z: f64,
        recurrence_time: Option<f64>,
        recurrence_warning: Option<bool>,
        estimates: &'a FtEstimates<f64>,
    }
    let mut out = Outputs::default();
    out.csv(
        "mc_samples.csv",
        &["index", "forward", "reverse"],
        run.forward.iter().zip(&run.reverse).enumerate().map(|(i, (&f, &r))| vec![i as f64, f, r]),
    );
    out.json(
        "mc.json",
        &Report {
            oracle: cfg.mc.oracle.to_string(),
            mode: cfg.mc.mode,
            samples: cfg.mc.samples,
            seed: cfg.mc.seed,
            reverse_seed: reverse_seed(cfg.mc.seed),
            beta: m.beta,
            hbar: m.hbar,
            delta_f: run.delta_f,
            model_mean: run.mean,
            model_variance: run.variance,
            mean_z: (e.forward.mean - run.mean) / e.forward.stderr_mean,
            recurrence_time: run.recurrence.map(|r| r.0),
            recurrence_warning: run.recurrence.map(|r| r.1),
            estimates: e,
        },
    );
    out.quality_failure = quality(cfg, &run);
    Ok(out)
}

fn dechist(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.bath.hbar)?;
    let (sigma, scale) = (cfg.dechist.sigma, cfg.dechist.separation_scale);
    let nu0 = noise_strength(&m.sd, m.omega, m.beta, m.hbar)?;
    let r = report_from_strength(nu0, sigma);
    let separation = scale * r.min_separation;
    let exponent = scalar_offdiag_exponent(nu0, sigma, separation);
    let var_x = equilibrium_variances(&m.sd, m.beta, m.hbar, m.omega, cfg.numerics.tolerance)?.sigma_xx0;

    #[derive(Serialize)]
    struct Report {
        beta: f64,
        hbar: f64,
        sigma: f64,
        /// `null` in the classical limit, where it is infinite.
        nu0: Option<f64>,
        min_separation: f64,
        flag: ResolvabilityFlag,
        recommended_sigma: f64,
        separation_scale: f64,
        separation: f64,
        offdiag_exponent: f64,
        suppression: f64,
        partition_sum: f64,
    }
    let mut out = Outputs::default();
    out.json(
        "dechist.json",
        &Report {
            beta: m.beta,
            hbar: m.hbar,
            sigma,
            nu0: nu0.is_finite().then_some(nu0),
            min_separation: r.min_separation,
            flag: r.flag,
            recommended_sigma: r.recommended_sigma,
            separation_scale: scale,
            separation,
            offdiag_exponent: exponent,
            suppression: exponent.exp(),
            partition_sum: partition_sum(var_x, sigma),
        },
    );
    Ok(out)
}

fn verify_ft(cfg: &ExperimentConfig) -> Result<Outputs> {
    let m = Model::new(cfg, cfg.effective_hbar())?;
    let p = cfg.protocol()?;
    // the relation lives on the frequency grid; a short time table suffices
    let freq = FrequencyGrid::for_bath(&m.sd, m.omega, m.beta, m.hbar, cfg.numerics.freq_points);
    let kernels = KernelTable::build(&m.sd, m.beta, m.hbar, TimeGrid::new(m.dt, 8)?, freq)?;
    let gs = m.greens(cfg.numerics.horizon)?;
    let st = equilibrium_variances(&m.sd, m.beta, m.hbar, m.omega, cfg.numerics.tolerance)?;
    let a = analytic(&m, &p, &gs)?;
    let run = run_mc(cfg, &m, &p, &gs)?;
    let nu0 = noise_strength(&m.sd, m.omega, m.beta, m.hbar)?;
    let flag = report_from_strength(nu0, cfg.dechist.sigma).flag;
    let j = &run.estimates.jarzynski_forward;
    let d = &a.fwd.distribution;

    #[derive(Serialize)]
    struct Verdict {
        jarzynski_residual_analytic: f64,
        /// `⟨e^{−βW}⟩e^{βΔF} − 1` from the forward samples.
        jarzynski_estimate_mc: f64,
        jarzynski_estimate_mc_stderr: f64,
        crooks_slope: Option<f64>,
        crooks_slope_mc: Option<f64>,
        crooks_slope_mc_stderr: Option<f64>,
        regime: Regime,
        decoherence_flag: ResolvabilityFlag,
        /// `|MC − analytic| ≤ 3` standard errors for the Jarzynski ratio.
        consistent: bool,
        n_eff: f64,
        heavy_tail: bool,
        beta: f64,
        hbar: f64,
        #[serde(rename = "meanW")]
        mean_w: f64,
        #[serde(rename = "varW")]
        var_w: f64,
        #[serde(rename = "deltaF")]
        delta_f: f64,
        sigma_xx0: f64,
        sigma_pp0: f64,
        fdr_violation: f64,
        oracle: String,
        samples: usize,
        seed: u64,
    }
    let crooks = run.estimates.crooks.as_ref();
    let mut out = Outputs::default();
    out.json(
        "verdict.json",
        &Verdict {
            jarzynski_residual_analytic: a.jarzynski_residual,
            jarzynski_estimate_mc: j.ratio_minus_one,
            jarzynski_estimate_mc_stderr: j.ratio_stderr,
            crooks_slope: a.crooks_slope,
            crooks_slope_mc: crooks.map(|c| c.slope),
            crooks_slope_mc_stderr: crooks.map(|c| c.slope_stderr),
            regime: a.regime.regime,
            decoherence_flag: flag,
            consistent: (j.ratio_minus_one - a.jarzynski_residual).abs() <= 3.0 * j.ratio_stderr,
            n_eff: j.n_eff,
            heavy_tail: j.heavy_tail,
            beta: m.beta,
            hbar: m.hbar,
            mean_w: d.mean_w,
            var_w: d.var_w,
            delta_f: d.delta_f,
            sigma_xx0: st.sigma_xx0,
            sigma_pp0: st.sigma_pp0,
            fdr_violation: kernels.fdr_violation(),
            oracle: cfg.mc.oracle.to_string(),
            samples: cfg.mc.samples,
            seed: cfg.mc.seed,
        },
    );
    out.quality_failure = quality(cfg, &run);
    Ok(out)
}

/// Copy of `cfg` with the swept parameter set to `v`.
pub fn sweep_point(cfg: &ExperimentConfig, parameter: SweepParameter, v: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    let p = c.protocol.as_mut().expect("validated: protocol present");
    match parameter {
        SweepParameter::Hbar => c.bath.hbar = v,
        SweepParameter::Beta => c.bath.beta = v,
        SweepParameter::Gamma0 => c.bath.gamma0 = v,
        SweepParameter::BetaHbarOmega => c.bath.hbar = v / (c.bath.beta * c.system.omega),
        SweepParameter::Tau => p.tau = v,
        SweepParameter::Amplitude => p.amplitude = v,
    }
    c
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::High => "high",
        Regime::Low => "low",
        Regime::Intermediate => "intermediate",
    }
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outputs> {
    let sw = cfg.sweep.as_ref().expect("validated: sweep present");
    // validate every point before computing any
    let points: Vec<ExperimentConfig> = sw
        .values
        .iter()
        .map(|&v| {
            let c = sweep_point(cfg, sw.parameter, v);
            c.validate(needs("work")).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("sweep value {v}:\n{msg}")),
                other => other,
            })?;
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let rows = points
        .par_iter()
        .zip(&sw.values)
        .map(|(c, &v)| {
            let m = Model::new(c, c.bath.hbar)?;
            let p = c.protocol()?;
            let a = analytic(&m, &p, &m.greens(c.numerics.horizon)?)?;
            let d = &a.fwd.distribution;
            let mut row: Vec<String> = [
                v,
                m.beta,
                m.hbar,
                m.beta * m.hbar * m.omega,
                d.mean_w,
                d.var_w,
                d.delta_f,
                d.imbalance(),
                a.jarzynski_residual,
                a.crooks_slope.unwrap_or(f64::NAN),
                a.regime.beta_hbar_omega_h,
            ]
            .into_iter()
            .map(fmt_f64)
            .collect();
            row.push(regime_name(a.regime.regime).into());
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outputs::default();
    out.csv_text(
        "sweep.csv",
        &[
            "value",
            "beta",
            "hbar",
            "beta_hbar_omega",
            "meanW",
            "varW",
            "deltaF",
            "imbalance",
            "jarzynski_residual",
            "crooks_slope",
            "beta_hbar_omega_h",
            "regime",
        ],
        rows,
    );
    Ok(out)
}
