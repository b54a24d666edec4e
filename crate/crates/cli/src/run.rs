use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sampling_recovery::analysis::{
    concentration_trials, fit_rate, fit_slope, hat_sampling_number, median,
    peak_interpolation_design, run_trial, trial_seed, ConcentrationReport, ConcentrationSetup,
    HatClassSpec, TrialSetup,
};
use sampling_recovery::basis::{DecayCertificate, MeasureSpace, ModelClass, OrthonormalSystem};
use sampling_recovery::estimator::certificate_from_response;

use crate::config::{ExperimentConfig, Mode, SystemChoice};
use crate::CliError;

pub const CSV_HEADER: &str = "mode,n,m,j,trial,s_min_sq,worst_error,certificate,analytic,elapsed_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    pub j: Option<usize>,
    pub trial: usize,
    pub s_min_sq: Option<f64>,
    pub worst_error: Option<f64>,
    pub certificate: Option<f64>,
    pub analytic: Option<f64>,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<CsvRow>,
    pub summary: String,
    /// Every summary check passed.
    pub passed: bool,
}

fn float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.mode.as_str(),
            r.n,
            r.m,
            r.j.map(|j| j.to_string()).unwrap_or_default(),
            r.trial,
            float(r.s_min_sq),
            float(r.worst_error),
            float(r.certificate),
            float(r.analytic),
            r.elapsed_ms
        );
    }
    out
}

struct Checks {
    lines: String,
    passed: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            lines: String::new(),
            passed: true,
        }
    }

    fn record(&mut self, ok: bool, what: impl AsRef<str>) {
        self.passed &= ok;
        let _ = writeln!(self.lines, "{} {}", if ok { "PASS" } else { "FAIL" }, what.as_ref());
    }
}

fn build_system(config: &ExperimentConfig) -> Result<(OrthonormalSystem, ModelClass), CliError> {
    match config.system {
        SystemChoice::FourierTorus => {
            let system = OrthonormalSystem::fourier(MeasureSpace::torus(config.quadrature_nodes)?)?;
            let decay = DecayCertificate::new(config.alpha, config.beta, config.c)?;
            let model = ModelClass::tail_decay(&system, decay, config.truncation)?;
            Ok((system, model))
        }
        SystemChoice::NormalizedHat => {
            let spec = config.hat_spec()?;
            let system = spec.system()?;
            let model = spec.model(&system)?;
            Ok((system, model))
        }
    }
}

fn elapsed(config: &ExperimentConfig, start: Instant) -> u64 {
    if config.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn medians_by_n(rows: &[CsvRow], ns: &[usize], pick: impl Fn(&CsvRow) -> Option<f64>) -> Vec<(f64, f64)> {
    ns.iter()
        .map(|&n| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.n == n).filter_map(&pick).collect();
            (n as f64, median(&vals))
        })
        .collect()
}

fn describe_fit(summary: &mut String, checks: &mut Checks, label: &str, pairs: &[(f64, f64)], alpha: f64, beta: f64) {
    if pairs.len() >= 4 {
        match fit_rate(pairs) {
            Ok(fit) => {
                let _ = writeln!(
                    summary,
                    "{label}: slope {:.4}, log exponent {:.4}, intercept {:.4}",
                    fit.slope, fit.log_exponent, fit.intercept
                );
                checks.record(
                    fit.slope <= -alpha + 0.15,
                    format!("{label} slope {:.4} <= -alpha + 0.15 = {:.4}", fit.slope, -alpha + 0.15),
                );
                checks.record(
                    fit.log_exponent <= beta + 0.5 + 0.3,
                    format!("{label} log exponent {:.4} <= beta + 0.8 = {:.4}", fit.log_exponent, beta + 0.8),
                );
            }
            Err(e) => checks.record(false, format!("{label} rate fit: {e}")),
        }
    } else if pairs.len() >= 2 {
        if let Ok((slope, _)) = fit_slope(pairs) {
            let _ = writeln!(summary, "{label}: slope {slope:.4} (two-parameter fit)");
        }
    }
}

fn run_trials_mode(config: &ExperimentConfig, checks: &mut Checks, summary: &mut String) -> Result<Vec<CsvRow>, CliError> {
    let (_, model) = build_system(config)?;
    let subsampled = config.mode == Mode::Subsampled;
    let setup = TrialSetup {
        model,
        mode: config.weight_mode(),
        c1: config.c1,
        random_members: config.members,
        target_ratio: subsampled.then_some(config.target_ratio),
    };
    let cells: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let reports = cells
        .par_iter()
        .map(|&(n, t)| {
            let start = Instant::now();
            run_trial(&setup, n, t, config.seed).map(|r| (r, elapsed(config, start)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(reports.len());
    let mut dominance = true;
    let (mut j_ok, mut ratio_ok, mut transfer_ok) = (true, true, true);
    for (r, ms) in &reports {
        dominance &= r.worst_error <= r.certificate;
        if let (Some(j), Some((c2, c3)), Some(full)) = (r.j, r.frame_bounds, r.full_certificate) {
            j_ok &= j <= (config.target_ratio * r.n as f64).ceil() as usize;
            ratio_ok &= c3 / c2 <= 100.0;
            transfer_ok &= r.certificate <= (r.m as f64 / (2.0 * c2 * r.n as f64)).sqrt() * full;
        }
        rows.push(CsvRow {
            mode: config.mode,
            n: r.n,
            m: r.m,
            j: r.j,
            trial: r.trial,
            s_min_sq: Some(r.s_min_sq),
            worst_error: Some(r.worst_error),
            certificate: Some(r.certificate),
            analytic: None,
            elapsed_ms: *ms,
        });
    }
    rows.sort_by_key(|r| (r.n, r.trial));

    let fact1 = reports.iter().filter(|(r, _)| r.fact1_holds).count();
    let _ = writeln!(summary, "Fact-1 event s_min^2 >= m/2 held in {fact1} of {} trials", reports.len());
    let _ = writeln!(summary, "n  median_worst_error  median_certificate");
    let worst = medians_by_n(&rows, &config.n_list, |r| r.worst_error);
    let cert = medians_by_n(&rows, &config.n_list, |r| r.certificate);
    for (w, c) in worst.iter().zip(&cert) {
        let _ = writeln!(summary, "{}  {:.6e}  {:.6e}", w.0, w.1, c.1);
    }
    let (alpha, beta) = (setup.model.decay().alpha(), setup.model.decay().beta());
    describe_fit(summary, checks, "median worst error", &worst, alpha, beta);
    describe_fit(summary, checks, "median certificate", &cert, alpha, beta);
    checks.record(dominance, "certificate >= worst error on every row");
    if subsampled {
        checks.record(j_ok, format!("#J <= ceil({} n) on every row", config.target_ratio));
        checks.record(ratio_ok, "c3/c2 <= 100 on every row");
        checks.record(transfer_ok, "certificate <= sqrt(m/(2 c2 n)) * full-design certificate");
    }
    Ok(rows)
}

fn run_hat_oracle(config: &ExperimentConfig, checks: &mut Checks, summary: &mut String) -> Result<Vec<CsvRow>, CliError> {
    let spec: HatClassSpec = config.hat_spec()?;
    let system = spec.system()?;
    let model = spec.model(&system)?;
    let mut rows = Vec::new();
    let mut max_gap: f64 = 0.0;
    for &n in &config.n_list {
        let start = Instant::now();
        let design = peak_interpolation_design(&spec, &system, n)?;
        let family = model.members(n, config.members, trial_seed(config.seed, n, 0));
        let response = design.evaluate_family(&family);
        let certificate = certificate_from_response(&design, &model, &response)?.value;
        let analytic = hat_sampling_number(&spec, n);
        max_gap = max_gap.max((response.worst_residual() - analytic).abs());
        rows.push(CsvRow {
            mode: Mode::HatOracle,
            n,
            m: design.m(),
            j: None,
            trial: 0,
            s_min_sq: Some(design.s_min().powi(2)),
            worst_error: Some(response.worst_residual()),
            certificate: Some(certificate),
            analytic: Some(analytic),
            elapsed_ms: elapsed(config, start),
        });
    }
    let _ = writeln!(summary, "rate beta_h + (alpha_len - 1)/2 = {}", spec.rate());
    checks.record(max_gap <= 1e-6, format!("|worst error - analytic e_n| = {max_gap:.3e} <= 1e-6"));
    // e_n sums over i ≥ n+1, so it is fitted against the first omitted index
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n + 1) as f64, r.analytic.unwrap_or(0.0)))
        .collect();
    if pairs.len() >= 2 {
        let (slope, _) = fit_slope(&pairs)?;
        let _ = writeln!(summary, "analytic e_n slope against n+1: {slope:.4}");
        checks.record(
            (slope + spec.rate()).abs() <= 0.1,
            format!("analytic slope {slope:.4} within 0.1 of {}", -spec.rate()),
        );
    }
    Ok(rows)
}

fn run_concentration(config: &ExperimentConfig, checks: &mut Checks, summary: &mut String) -> Result<Vec<CsvRow>, CliError> {
    let (system, _) = build_system(config)?;
    let setup = ConcentrationSetup {
        system,
        mode: config.weight_mode(),
        c1: config.c1,
        block_levels: config.block_levels,
    };
    let mut rows = Vec::new();
    for &n in &config.n_list {
        let start = Instant::now();
        let report: ConcentrationReport = concentration_trials(&setup, n, config.trials, config.seed)?;
        let ms = elapsed(config, start);
        for (t, s) in report.s_min_sq.iter().enumerate() {
            rows.push(CsvRow {
                mode: Mode::Concentration,
                n,
                m: report.m,
                j: None,
                trial: t,
                s_min_sq: Some(*s),
                worst_error: None,
                certificate: None,
                analytic: None,
                elapsed_ms: if t == 0 { ms } else { 0 },
            });
        }
        let target = 4.0 / (n * n) as f64;
        let (lo, hi) = report.fact1_interval;
        let _ = writeln!(
            summary,
            "n={n} m={}: Fact-1 failures {}/{} (Wilson 95% [{lo:.4}, {hi:.4}]), deviation >= 1/2 in {} (bound {:.3e}), fitted C4 {:.4} (holdout {:.3})",
            report.m,
            report.fact1_failures,
            report.trials,
            report.oliveira_exceedances,
            report.oliveira_bound,
            report.fitted_c4,
            report.block_holdout_frequency
        );
        checks.record(lo <= target, format!("n={n}: Fact-1 failure frequency consistent with <= 4/n^2 = {target:.4}"));
        checks.record(
            report.oliveira_frequency() <= report.oliveira_bound,
            format!("n={n}: deviation exceedance {:.4} <= Oliveira bound", report.oliveira_frequency()),
        );
    }
    Ok(rows)
}

/// Runs the configured pipeline without touching the file system.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let mut checks = Checks::new();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "mode {}  system {}  seed {}  trials {}  c1 {}",
        config.mode.as_str(),
        if config.mode == Mode::HatOracle {
            "normalized_hat"
        } else {
            config.system.as_str()
        },
        config.seed,
        config.trials,
        config.c1
    );
    let rows = match config.mode {
        Mode::RandomPoints | Mode::Subsampled => run_trials_mode(config, &mut checks, &mut summary)?,
        Mode::HatOracle => run_hat_oracle(config, &mut checks, &mut summary)?,
        Mode::Concentration => run_concentration(config, &mut checks, &mut summary)?,
    };
    summary.push_str(&checks.lines);
    Ok(RunOutput {
        rows,
        summary,
        passed: checks.passed,
    })
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, body).map_err(io)
}

pub fn write_artifacts(config: &ExperimentConfig, output: &RunOutput) -> Result<(), CliError> {
    write_file(&config.output, &render_csv(&output.rows))?;
    write_file(&config.summary_path(), &output.summary)
}

/// Validates, runs and writes the CSV and summary.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let output = run_experiment(config)?;
    write_artifacts(config, &output)?;
    Ok(output)
}
