use std::path::{Path, PathBuf};

use opmean::bounds::{tail_reports, TailBoundReport};
use opmean::means::SolveDiagnostics;
use opmean::random::{collect_trials, sample_inputs};
use opmean::tensor::HermitianTensor;
use opmean::Error;
use serde::Serialize;

use crate::canonical::{format_float, write_csv, write_json};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_VIOLATION};
use crate::suites::{run_suite, Suite, SuiteReport};

/// Files written by a command and its exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Serialize)]
struct MeanDiagnostics<'a> {
    mean: String,
    seed: u64,
    inputs: &'a str,
    diagnostics: SolveDiagnostics,
}

/// Loads the configured tensor files, or samples trial 0 of the source when there are none.
pub fn load_inputs(config: &ExperimentConfig) -> CliResult<Vec<HermitianTensor>> {
    if config.inputs.is_empty() {
        return Ok(sample_inputs(&config.source()?, config.k, 0)?);
    }
    if config.inputs.len() != config.k {
        return Err(CliError::Config(format!("{} input files for k = {}", config.inputs.len(), config.k)));
    }
    config
        .inputs
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let tensor: HermitianTensor = serde_json::from_str(&text).map_err(|source| CliError::Parse {
                path: path.clone(),
                source,
            })?;
            if tensor.shape() != &config.shape {
                return Err(CliError::Config(format!("{}: shape does not match the config", path.display())));
            }
            tensor.require_pd().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok(tensor)
        })
        .collect()
}

/// Computes the configured mean; writes `mean.json` and `mean_diagnostics.json`.
///
/// On solver non-convergence only the diagnostics are written and the error is returned.
pub fn cmd_mean(config: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    let spec = config.mean.to_spec(&config.weights()?);
    create_dir(out)?;
    let diag_path = out.join("mean_diagnostics.json");
    let origin = if config.inputs.is_empty() { "sampled" } else { "files" };
    let write_diag = |diagnostics: SolveDiagnostics| {
        write_json(
            &diag_path,
            &MeanDiagnostics {
                mean: spec.label(),
                seed: config.seed,
                inputs: origin,
                diagnostics,
            },
        )
    };
    match spec.evaluate(&inputs, &config.tolerances) {
        Ok((x, diagnostics)) => {
            let mean_path = out.join("mean.json");
            write_json(&mean_path, &x)?;
            write_diag(diagnostics)?;
            Ok(Outcome {
                exit_code: EXIT_OK,
                files: vec![mean_path, diag_path],
            })
        }
        Err(e @ Error::NotConverged { diagnostics }) => {
            write_diag(diagnostics)?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Runs a verification suite; writes `verify_<suite>.json` and `verify_<suite>.csv`.
pub fn cmd_verify(config: &ExperimentConfig, suite: Suite, out: &Path) -> CliResult<(Outcome, SuiteReport)> {
    let report = run_suite(config, suite)?;
    create_dir(out)?;
    let json = out.join(format!("verify_{}.json", suite.name()));
    let csv = out.join(format!("verify_{}.csv", suite.name()));
    write_json(&json, &report)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.check.clone(),
                r.trial.to_string(),
                r.holds.to_string(),
                format_float(r.margin),
                r.witness_seed.to_string(),
            ]
        })
        .collect();
    write_csv(&csv, &["check", "trial", "holds", "margin", "witness_seed"], &rows)?;
    let exit_code = if report.all_hold() { EXIT_OK } else { EXIT_VIOLATION };
    Ok((
        Outcome {
            exit_code,
            files: vec![json, csv],
        },
        report,
    ))
}

/// One tail-bound report at one grid cell `(p, q, r, c)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub p: f64,
    /// Absent for mean kinds without an exponent.
    pub q: Option<f64>,
    pub r: f64,
    /// Threshold multiple; the threshold is `c * lambda_bar * I`.
    pub c: f64,
    pub lambda_bar: f64,
    pub report: TailBoundReport,
    /// Only `r = 1` rows are judged; larger `r` is reported for information.
    pub enforced: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBoundRun {
    pub seed: u64,
    pub trials: u64,
    pub mean: String,
    pub violations: usize,
    pub flipped: bool,
    pub rows: Vec<TailRow>,
}

fn cell_tag(p: f64, q: Option<f64>, r: f64) -> String {
    match q {
        Some(q) => format!("p{p}_q{q}_r{r}"),
        None => format!("p{p}_r{r}"),
    }
}

/// Tail bounds of `M(A^p)` against `c * lambda_bar * I` for every grid cell.
///
/// `lambda_bar` is the sample mean of `lambda_max(M(A^p))` over the same trials.
/// Writes `tailbound.json`, `tailbound.csv` and one plot CSV per `(p, q, r)`.
pub fn cmd_tailbound(config: &ExperimentConfig, out: &Path) -> CliResult<(Outcome, TailBoundRun)> {
    config.validate()?;
    config.require("p_values", &config.p_values)?;
    config.require("r_values", &config.r_values)?;
    config.require("c_values", &config.c_values)?;
    let qs: Vec<Option<f64>> = if config.mean.uses_q() {
        config.require("q_values", &config.q_values)?;
        config.q_values.iter().map(|q| Some(*q)).collect()
    } else {
        vec![None]
    };
    let source = config.source()?;
    let weights = config.weights()?;
    let tol = config.tolerances;

    let mut rows = Vec::new();
    let mut plots = Vec::new();
    for &p in &config.p_values {
        for &q in &qs {
            let desc = q.map_or(config.mean, |q| config.mean.with_q(q));
            let spec = desc.to_spec(&weights);
            let stats = collect_trials(config.trials, |t| {
                let inputs = sample_inputs(&source, config.k, t)?;
                let powered = inputs.iter().map(|a| a.pow(p)).collect::<opmean::Result<Vec<_>>>()?;
                spec.eval(&powered, &tol)
            })?;
            let lambda_bar = stats.iter().map(HermitianTensor::lambda_max).sum::<f64>() / stats.len() as f64;
            let thresholds: Vec<HermitianTensor> = config
                .c_values
                .iter()
                .map(|c| HermitianTensor::scaled_identity(config.shape.clone(), c * lambda_bar))
                .collect();
            let pairs: Vec<(HermitianTensor, HermitianTensor)> = stats.into_iter().map(|s| (s.clone(), s)).collect();
            for &r in &config.r_values {
                let name = format!("tail[{}]_{}", spec.label(), cell_tag(p, q, r));
                let reports = tail_reports(&name, &pairs, r, &thresholds, &tol)?;
                let mut plot = Vec::new();
                for (&c, report) in config.c_values.iter().zip(reports) {
                    let within = if config.flip {
                        report.trace_bound <= report.empirical_prob + 3.0 * report.mc_stderr
                    } else {
                        report.within_bound()
                    };
                    plot.push(vec![
                        format_float(c),
                        format_float(report.empirical_prob),
                        format_float(report.mc_stderr),
                        format_float(report.trace_bound),
                    ]);
                    rows.push(TailRow {
                        p,
                        q,
                        r,
                        c,
                        lambda_bar,
                        report,
                        enforced: r == 1.0,
                        holds: within,
                    });
                }
                plots.push((cell_tag(p, q, r), plot));
            }
        }
    }

    create_dir(out)?;
    let run = TailBoundRun {
        seed: config.seed,
        trials: config.trials,
        mean: config.mean.to_spec(&weights).label(),
        violations: rows.iter().filter(|r| r.enforced && !r.holds).count(),
        flipped: config.flip,
        rows,
    };
    let json = out.join("tailbound.json");
    write_json(&json, &run)?;
    let csv = out.join("tailbound.csv");
    let table: Vec<Vec<String>> = run
        .rows
        .iter()
        .map(|row| {
            vec![
                format_float(row.p),
                row.q.map(format_float).unwrap_or_default(),
                format_float(row.r),
                format_float(row.c),
                format_float(row.lambda_bar),
                format_float(row.report.empirical_prob),
                format_float(row.report.mc_stderr),
                format_float(row.report.trace_bound),
                row.report.n_samples.to_string(),
                row.enforced.to_string(),
                row.holds.to_string(),
            ]
        })
        .collect();
    write_csv(
        &csv,
        &[
            "p", "q", "r", "c", "lambda_bar", "empirical_prob", "stderr", "trace_bound", "n_samples", "enforced", "holds",
        ],
        &table,
    )?;
    let mut files = vec![json, csv];
    for (tag, plot) in plots {
        let path = out.join(format!("tailbound_plot_{tag}.csv"));
        write_csv(&path, &["c", "empirical_prob", "stderr", "trace_bound"], &plot)?;
        files.push(path);
    }
    let exit_code = if run.violations == 0 { EXIT_OK } else { EXIT_VIOLATION };
    Ok((Outcome { exit_code, files }, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use opmean::random::PdLaw;

    fn config(text: &str) -> ExperimentConfig {
        serde_json::from_str(text).unwrap()
    }

    fn read(path: &Path) -> HermitianTensor {
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn write_tensor(dir: &Path, name: &str, t: &HermitianTensor) -> PathBuf {
        let path = dir.join(name);
        write_json(&path, t).unwrap();
        path
    }

    #[test]
    fn karcher_of_commuting_files_is_scalar_geometric_mean() {
        let dir = tempfile::tempdir().unwrap();
        let a = HermitianTensor::from_diagonal(&[1.0, 9.0]).unwrap();
        let b = HermitianTensor::from_diagonal(&[4.0, 1.0]).unwrap();
        let mut c = config(r#"{"seed": 0, "shape": [2], "k": 2, "trials": 1, "mean": {"kind": "karcher"}}"#);
        c.inputs = vec![write_tensor(dir.path(), "a.json", &a), write_tensor(dir.path(), "b.json", &b)];
        let out = dir.path().join("out");
        let outcome = cmd_mean(&c, &out).unwrap();
        assert_eq!(outcome.exit_code, EXIT_OK);
        let x = read(&out.join("mean.json"));
        assert!(x.max_abs_diff(&HermitianTensor::from_diagonal(&[2.0, 3.0]).unwrap()) < 1e-10);
    }

    #[test]
    fn arithmetic_of_identical_inputs_echoes() {
        let dir = tempfile::tempdir().unwrap();
        let a = HermitianTensor::from_diagonal(&[0.7, 2.5, 1.1]).unwrap();
        let mut c = config(r#"{"seed": 0, "shape": [3], "k": 3, "trials": 1, "mean": {"kind": "arithmetic"}}"#);
        let path = write_tensor(dir.path(), "a.json", &a);
        c.inputs = vec![path.clone(), path.clone(), path];
        cmd_mean(&c, dir.path()).unwrap();
        assert_eq!(read(&dir.path().join("mean.json")), a);
    }

    #[test]
    fn power_one_matches_arithmetic_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let base = r#"{"seed": 5, "shape": [2, 2], "k": 3, "trials": 1, "weights": [0.2, 0.3, 0.5], "mean": "#;
        let arith = config(&format!(r#"{base}{{"kind": "arithmetic"}}}}"#));
        let power = config(&format!(r#"{base}{{"kind": "power", "q": 1}}}}"#));
        cmd_mean(&arith, &dir.path().join("a")).unwrap();
        cmd_mean(&power, &dir.path().join("p")).unwrap();
        let bytes = |d: &str| std::fs::read(dir.path().join(d).join("mean.json")).unwrap();
        assert_eq!(bytes("a"), bytes("p"));
    }

    #[test]
    fn non_convergence_writes_diagnostics_and_fails() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(
            r#"{"seed": 3, "shape": [3], "k": 2, "trials": 1, "mean": {"kind": "power", "q": 0.25}, "tolerances": {"max_iterations": 1}}"#,
        );
        let err = cmd_mean(&c, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_NUMERICAL);
        assert!(dir.path().join("mean_diagnostics.json").exists());
        assert!(!dir.path().join("mean.json").exists());
    }

    #[test]
    fn wrong_input_count_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let a = HermitianTensor::from_diagonal(&[1.0, 2.0]).unwrap();
        let mut c = config(r#"{"seed": 0, "shape": [2], "k": 2, "trials": 1}"#);
        c.inputs = vec![write_tensor(dir.path(), "a.json", &a)];
        assert_eq!(cmd_mean(&c, dir.path()).unwrap_err().exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn two_point_constant_source_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let atom = HermitianTensor::from_diagonal(&[1.0, 3.0]).unwrap();
        let mut c = config(r#"{"seed": 0, "shape": [2], "k": 2, "trials": 20, "mean": {"kind": "arithmetic"}, "p_values": [1], "c_values": [0.5, 1, 2]}"#);
        c.source = PdLaw::TwoPoint {
            a: atom.clone(),
            b: atom.clone(),
            prob_a: 0.5,
        };
        let (outcome, run) = cmd_tailbound(&c, dir.path()).unwrap();
        assert_eq!(outcome.exit_code, EXIT_OK);
        assert_eq!(run.rows.len(), 3);
        // the statistic is always diag(1, 3), so lambda_bar = 3 and the event is lambda_max > 3 c
        let probs: Vec<f64> = run.rows.iter().map(|r| r.report.empirical_prob).collect();
        assert_eq!(probs, vec![1.0, 0.0, 0.0]);
        for row in &run.rows {
            assert_eq!(row.lambda_bar, 3.0);
            let trace = 1.0 / (row.c * 3.0) + 3.0 / (row.c * 3.0);
            assert!((row.report.trace_bound - trace).abs() < 1e-14);
        }
        let plot = std::fs::read_to_string(dir.path().join("tailbound_plot_p1_r1.csv")).unwrap();
        assert!(plot.starts_with("c,empirical_prob,stderr,trace_bound\n"));
        assert_eq!(plot.lines().count(), 4);
    }

    #[test]
    fn tail_sweep_is_monotone_and_holds() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(
            r#"{"seed": 9, "shape": [3], "k": 2, "trials": 200, "p_values": [1, 2], "q_values": [0.5], "r_values": [1, 2]}"#,
        );
        let (outcome, run) = cmd_tailbound(&c, dir.path()).unwrap();
        assert_eq!(outcome.exit_code, EXIT_OK);
        assert_eq!(run.rows.len(), 2 * 2 * 4);
        for cell in run.rows.chunks(4) {
            assert!(cell.windows(2).all(|w| w[1].report.empirical_prob <= w[0].report.empirical_prob));
        }
        assert!(run.rows.iter().filter(|r| !r.enforced).all(|r| r.r == 2.0));
        assert_eq!(outcome.files.len(), 2 + 4);
    }

    #[test]
    fn flipped_tail_bound_is_violated() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(r#"{"seed": 9, "shape": [2], "k": 2, "trials": 50, "p_values": [1], "q_values": [0.5]}"#);
        c.flip = true;
        let (outcome, run) = cmd_tailbound(&c, dir.path()).unwrap();
        assert_eq!(outcome.exit_code, EXIT_VIOLATION);
        assert!(run.violations > 0);
    }
}
