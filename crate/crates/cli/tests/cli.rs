use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const OHMIC: &str = include_str!("../../../configs/ohmic_classical.toml");
const DRUDE: &str = include_str!("../../../configs/drude_quantum.toml");
const SWEEP: &str = include_str!("../../../configs/sweep_hbar.toml");

struct Run {
    out: Output,
    dir: PathBuf,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().expect("process exited normally")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.out.stderr).into_owned()
    }

    fn json(&self, name: &str) -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(self.dir.join(name)).unwrap()).unwrap()
    }
}

/// Runs `qbm` on `config` with outputs under `root`.
fn qbm(root: &Path, config: &str, args: &[&str], threads: Option<&str>) -> Run {
    std::fs::create_dir_all(root).unwrap();
    let cfg = root.join("input.toml");
    std::fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qbm"));
    cmd.arg("--config").arg(&cfg).args(args).env("QBM_OUTPUT_DIR", root.join("out"));
    match threads {
        Some(t) => cmd.env("QBM_THREADS", t),
        None => cmd.env_remove("QBM_THREADS"),
    };
    let out = cmd.output().unwrap();
    Run {
        out,
        dir: root.join("out").join(args[0]),
    }
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn verify_ft_classical_markov_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let r = qbm(tmp.path(), OHMIC, &["verify-ft", "--samples", "4000"], None);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let v = r.json("verdict.json");
    assert!(v["jarzynski_residual_analytic"].as_f64().unwrap().abs() < 1e-10, "{v}");
    assert!((v["crooks_slope"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(v["consistent"], true);
    assert_eq!(v["regime"], "high");
    assert_eq!(v["decoherence_flag"], "trajectories-valid");
    assert_eq!(v["samples"], 4000);
}

#[test]
fn same_seed_gives_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["mc", "--samples", "3000", "--seed", "7", "--oracle", "discrete:100", "--mode", "classical"];
    let a = qbm(&tmp.path().join("a"), DRUDE, &args, Some("1"));
    let b = qbm(&tmp.path().join("b"), DRUDE, &args, Some("3"));
    assert_eq!(a.code(), 0, "{}", a.stderr());
    assert_eq!(b.code(), 0, "{}", b.stderr());
    let (ca, cb) = (dir_contents(&a.dir), dir_contents(&b.dir));
    assert_eq!(ca.len(), 4);
    assert!(ca == cb, "outputs differ between runs");

    let c = qbm(&tmp.path().join("c"), DRUDE, &["mc", "--samples", "3000", "--seed", "8", "--oracle", "discrete:100", "--mode", "classical"], None);
    assert_ne!(
        std::fs::read(a.dir.join("mc_samples.csv")).unwrap(),
        std::fs::read(c.dir.join("mc_samples.csv")).unwrap()
    );
}

#[test]
fn recorded_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = qbm(&tmp.path().join("a"), DRUDE, &["dechist", "--sigma", "0.25"], None);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    let recorded = std::fs::read_to_string(a.dir.join("config.toml")).unwrap();
    let m = a.json("manifest.json");
    assert_eq!(m["config_sha256"], hex::encode(Sha256::digest(recorded.as_bytes())));
    assert_eq!(m["subcommand"], "dechist");
    assert!(m["seed"].is_null());
    assert_eq!(a.json("dechist.json")["sigma"], 0.25);
    // the flag is folded into the recorded config, so a bare rerun matches
    let b = qbm(&tmp.path().join("b"), &recorded, &["dechist"], None);
    assert_eq!(b.code(), 0, "{}", b.stderr());
    assert!(dir_contents(&a.dir) == dir_contents(&b.dir));
}

#[test]
fn config_errors_exit_2_with_field_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = DRUDE.replace("cutoff = 5.0", "").replace("tau = 5.0", "tau = -1.0");
    let r = qbm(&tmp.path().join("a"), &bad, &["work"], None);
    assert_eq!(r.code(), 2);
    let err = r.stderr();
    assert!(err.contains("bath.cutoff") && err.contains("protocol.tau"), "{err}");
    assert!(!r.dir.exists(), "nothing is computed or written for an invalid config");

    let r = qbm(&tmp.path().join("b"), &DRUDE.replace("gamma0", "gamma_0"), &["thermal"], None);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("gamma"), "{}", r.stderr());

    let no_protocol = OHMIC.split("[protocol]").next().unwrap();
    let r = qbm(&tmp.path().join("c"), no_protocol, &["work"], None);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("protocol"));

    let r = qbm(&tmp.path().join("d"), DRUDE, &["thermal"], Some("zero"));
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("QBM_THREADS"));
}

#[test]
fn numerical_failures_exit_3_with_module_tag() {
    let tmp = tempfile::tempdir().unwrap();
    // quantum Ohmic bath without cutoff: the momentum variance diverges
    let cfg = OHMIC.replace("hbar = 0.0", "hbar = 1.0");
    let r = qbm(tmp.path(), &cfg, &["thermal"], None);
    assert_eq!(r.code(), 3);
    assert!(r.stderr().contains("thermal:"), "{}", r.stderr());
}

#[test]
fn low_effective_sample_size_exits_4_but_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = OHMIC.replace("[mc]", "[mc]\nmin_n_eff = 1e9");
    let r = qbm(tmp.path(), &cfg, &["mc", "--samples", "2000"], None);
    assert_eq!(r.code(), 4, "{}", r.stderr());
    assert!(r.stderr().contains("min_n_eff"));
    assert_eq!(r.json("manifest.json")["seed"], 20240501);
    assert!(r.dir.join("mc_samples.csv").exists());
}

#[test]
fn sweep_residual_rises_with_hbar() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SWEEP.replace("horizon = 30.0", "horizon = 20.0");
    let r = qbm(tmp.path(), &cfg, &["sweep"], None);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let mut rd = csv::Reader::from_path(r.dir.join("sweep.csv")).unwrap();
    let col = rd.headers().unwrap().iter().position(|h| h == "jarzynski_residual").unwrap();
    let res: Vec<f64> = rd.records().map(|x| x.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(res.len(), 6);
    assert_eq!(res[0], 0.0);
    assert!(res.windows(2).all(|w| w[1] > w[0]), "{res:?}");
}

#[test]
fn tables_have_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = DRUDE.replace("[numerics]", "[numerics]\nkernel_lags = 20\nfreq_points = 16");
    for (cmd, file, header) in [
        ("kernels", "kernels.csv", "t,gamma,hbar_nu"),
        ("kernels", "kernels_ft.csv", "omega,gamma_ft,hbar_nu_ft"),
        ("greens", "greens.csv", "t,h,hdot,g,gdot"),
    ] {
        let r = qbm(&tmp.path().join(cmd), &cfg, &[cmd], None);
        assert_eq!(r.code(), 0, "{}", r.stderr());
        let text = std::fs::read_to_string(r.dir.join(file)).unwrap();
        assert!(text.starts_with(&format!("{header}\r\n")), "{file}");
    }
}
