//! Report files: per-trial CSV, per-PSNR summary CSV, and a plain-text table.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::crb::{crb_analytic_k1, crb_numeric};
use crate::error::{Error, Result};
use crate::harness::capture::format_f64;
use crate::harness::config::{sigma2_for, ExperimentConfig};
use crate::harness::montecarlo::{MonteCarloReport, TrialStatus, BOUND_SLACK};

fn fmt_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv write failed: {other:?}")),
    }
}

/// One row per trial; spike-indexed columns are suffixed `_k`.
pub fn write_trials_csv<W: Write>(report: &MonteCarloReport, out: W) -> Result<()> {
    let k = report.config.spike_count();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "psnr_index",
        "psnr_db",
        "trial",
        "seed",
        "sigma2",
        "status",
        "reason",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 0..k {
        for name in [
            "t_true",
            "t_est",
            "c_true_re",
            "c_true_im",
            "c_est_re",
            "c_est_im",
            "sq_err_t",
            "sq_err_c",
            "crb_t",
            "crb_c",
        ] {
            header.push(format!("{name}_{i}"));
        }
    }
    header.push("residual".into());
    header.push("clipped".into());
    w.write_record(&header).map_err(csv_err)?;

    for t in &report.trials {
        let (status, reason) = match &t.status {
            TrialStatus::Ok => ("ok", String::new()),
            TrialStatus::Failed(r) => ("failed", r.clone()),
        };
        let mut row = vec![
            t.psnr_index.to_string(),
            format_f64(t.psnr_db),
            t.trial.to_string(),
            t.seed.to_string(),
            format_f64(t.sigma2),
            status.to_string(),
            reason,
        ];
        for i in 0..k {
            let truth = t.truth.get(i);
            let est = t.estimates.get(i);
            row.push(fmt_opt(truth.map(|s| s.location)));
            row.push(fmt_opt(est.map(|s| s.location)));
            row.push(fmt_opt(truth.map(|s| s.amplitude.re)));
            row.push(fmt_opt(truth.map(|s| s.amplitude.im)));
            row.push(fmt_opt(est.map(|s| s.amplitude.re)));
            row.push(fmt_opt(est.map(|s| s.amplitude.im)));
            row.push(fmt_opt(t.sq_err_t.get(i).copied()));
            row.push(fmt_opt(t.sq_err_c.get(i).copied()));
            row.push(fmt_opt(t.crb_t.get(i).copied()));
            row.push(fmt_opt(t.crb_c.get(i).copied()));
        }
        row.push(if t.residual.is_nan() {
            String::new()
        } else {
            format_f64(t.residual)
        });
        row.push(t.clipped.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per PSNR point.
pub fn write_summary_csv<W: Write>(report: &MonteCarloReport, out: W) -> Result<()> {
    let k = report.config.spike_count();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["psnr_db", "sigma2", "trials", "failures"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..k {
        for name in ["mse_t", "crb_t", "mse_c", "crb_c"] {
            header.push(format!("{name}_{i}"));
        }
    }
    for name in ["crb_t_analytic", "crb_c_analytic", "bound_violation"] {
        header.push(name.into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for p in &report.points {
        let mut row = vec![
            format_f64(p.psnr_db),
            format_f64(p.sigma2),
            p.trials.to_string(),
            p.failures.to_string(),
        ];
        for i in 0..k {
            row.push(format_f64(p.mse_t[i]));
            row.push(fmt_opt(p.crb_t.get(i).copied()));
            row.push(format_f64(p.mse_c[i]));
            row.push(fmt_opt(p.crb_c.get(i).copied()));
        }
        row.push(fmt_opt(p.crb_t_analytic));
        row.push(fmt_opt(p.crb_c_analytic));
        row.push(p.bound_violation.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn render_summary(report: &MonteCarloReport) -> String {
    let cfg = &report.config;
    let k = cfg.spike_count();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Monte Carlo: K={k} M={} N={} theta={:.6} T={} trials/point={} seed={}",
        cfg.kernel.weights.len(),
        cfg.samples,
        cfg.theta,
        cfg.kernel.period,
        cfg.run.trials,
        cfg.run.seed
    );
    if let Some(q) = &cfg.quantizer {
        let fs = q
            .full_scale
            .map(|v| format!("{v}"))
            .unwrap_or_else(|| format!("{} x peak", q.headroom));
        let _ = writeln!(s, "quantizer: {} bits, full scale {fs}", q.bits);
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>9} {:>11} {:>6}  {:>4} {:>11} {:>11} {:>11} {:>11}  flag",
        "PSNR(dB)", "sigma2", "fail", "k", "MSE(t)", "CRB(t)", "MSE(c)", "CRB(c)"
    );
    for p in &report.points {
        for i in 0..k {
            let flag = if i == 0 && p.bound_violation {
                "MSE<CRB"
            } else {
                ""
            };
            let crb = |v: &[f64]| {
                v.get(i)
                    .map(|x| format!("{x:11.4e}"))
                    .unwrap_or_else(|| format!("{:>11}", "-"))
            };
            let lead = if i == 0 {
                format!("{:>9.2} {:>11.4e} {:>6}", p.psnr_db, p.sigma2, p.failures)
            } else {
                format!("{:>9} {:>11} {:>6}", "", "", "")
            };
            let _ = writeln!(
                s,
                "{lead}  {i:>4} {:11.4e} {} {:11.4e} {}  {flag}",
                p.mse_t[i],
                crb(&p.crb_t),
                p.mse_c[i],
                crb(&p.crb_c)
            );
        }
        if let (Some(t), Some(c)) = (p.crb_t_analytic, p.crb_c_analytic) {
            let _ = writeln!(
                s,
                "{:>34} {:11.4e} {:>11} {:11.4e}",
                "analytic (N->inf)", t, "", c
            );
        }
    }
    let flagged = report.points.iter().filter(|p| p.bound_violation).count();
    let _ = writeln!(s);
    if flagged > 0 {
        let _ = writeln!(
            s,
            "WARNING: {flagged} PSNR point(s) with MSE below {BOUND_SLACK} x CRB (checked at PSNR >= 20 dB)"
        );
    } else {
        let _ = writeln!(s, "MSE >= {BOUND_SLACK} x CRB at every checked PSNR point");
    }
    s
}

/// Writes `trials.csv`, `summary.csv` and `summary.txt` into `dir`.
pub fn write_report(report: &MonteCarloReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let trials = dir.join("trials.csv");
    let summary = dir.join("summary.csv");
    let text = dir.join("summary.txt");
    write_trials_csv(report, fs::File::create(&trials)?)?;
    write_summary_csv(report, fs::File::create(&summary)?)?;
    fs::write(&text, render_summary(report))?;
    Ok(vec![trials, summary, text])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub psnr_db: f64,
    pub sigma2: f64,
    pub var_t: Vec<f64>,
    pub var_c: Vec<f64>,
    pub var_t_analytic: Option<f64>,
    pub var_c_analytic: Option<f64>,
}

/// Numeric (finite-N) bounds for each PSNR point of a fixed-signal config,
/// plus the closed form when K = 1 with a plain sinc kernel.
pub fn bounds_table(config: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    let signal = config
        .fixed_signal()?
        .ok_or_else(|| Error::Config("bounds need a fixed signal, not [signal.random]".into()))?;
    let kernel = config.build_kernel()?;
    let theta = config.order()?;
    config
        .noise
        .psnr_db
        .iter()
        .filter(|p| p.is_finite())
        .map(|&db| {
            let sigma2 = sigma2_for(&signal, db);
            let num = crb_numeric(&signal, &kernel, theta, config.samples, sigma2)?;
            let analytic = if signal.len() == 1 && kernel.weights() == [1.0] {
                let s = signal.spikes()[0];
                Some(crb_analytic_k1(
                    s.amplitude.norm(),
                    s.location,
                    kernel.period(),
                    theta,
                    sigma2,
                )?)
            } else {
                None
            };
            Ok(BoundRow {
                psnr_db: db,
                sigma2,
                var_t: num.var_t,
                var_c: num.var_c,
                var_t_analytic: analytic.as_ref().map(|a| a.var_t[0]),
                var_c_analytic: analytic.as_ref().map(|a| a.var_c[0]),
            })
        })
        .collect()
}

pub fn render_bounds(rows: &[BoundRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>9} {:>11} {:>4} {:>11} {:>11} {:>13} {:>13}",
        "PSNR(dB)", "sigma2", "k", "var(t)>=", "var(c)>=", "var(t) N->inf", "var(c) N->inf"
    );
    for r in rows {
        for i in 0..r.var_t.len() {
            let an = |v: Option<f64>| match (i, v) {
                (0, Some(x)) => format!("{x:13.4e}"),
                _ => format!("{:>13}", "-"),
            };
            let _ = writeln!(
                s,
                "{:>9.2} {:>11.4e} {i:>4} {:11.4e} {:11.4e} {} {}",
                r.psnr_db,
                r.sigma2,
                r.var_t[i],
                r.var_c[i],
                an(r.var_t_analytic),
                an(r.var_c_analytic)
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::montecarlo::run_monte_carlo_with_workers;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
theta = 0.7853981633974483
samples = 16
[signal]
amplitudes = [0.748]
locations = [0.5]
[kernel]
weights = [1.0]
period = 0.062
[noise]
psnr_db = [30.0, 40.0]
[run]
trials = 12
seed = 5
"#,
        )
        .unwrap()
    }

    #[test]
    fn csv_shapes() {
        let report = run_monte_carlo_with_workers(&cfg(), 2).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 24);
        assert!(text.starts_with("psnr_index,psnr_db,trial,seed,sigma2,status,reason,t_true_0,"));

        let mut buf = Vec::new();
        write_summary_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text
            .lines()
            .next()
            .unwrap()
            .ends_with("crb_t_analytic,crb_c_analytic,bound_violation"));
    }

    #[test]
    fn report_files_are_byte_identical_across_workers() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = write_report(
            &run_monte_carlo_with_workers(&cfg(), 1).unwrap(),
            dir_a.path(),
        )
        .unwrap();
        let b = write_report(
            &run_monte_carlo_with_workers(&cfg(), 6).unwrap(),
            dir_b.path(),
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let summary = fs::read_to_string(&a[2]).unwrap();
        assert!(summary.contains("CRB(t)"));
        assert!(summary.contains("analytic"));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let report = run_monte_carlo_with_workers(&cfg(), 1).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        // A regular file cannot act as a directory.
        let err = write_report(&report, file.path().join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn bounds_table_includes_analytic_for_single_sinc_spike() {
        let rows = bounds_table(&cfg()).unwrap();
        assert_eq!(rows.len(), 2);
        let r = &rows[0];
        let analytic = r.var_t_analytic.unwrap();
        assert!(r.var_t[0] > 0.0 && analytic > 0.0);
        assert!(((r.var_t[0] - analytic) / analytic).abs() < 0.2);
        assert!(render_bounds(&rows).contains("var(t)>="));
    }
}
