use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::stats::wilson_interval;
use crate::basis::{ModelClass, OrthonormalSystem};
use crate::density::{SamplingDensity, WeightMode};
use crate::error::invalid;
use crate::estimator::{certificate_from_response, WeightedDesign};
use crate::linalg::{hermitian_eigenvalues, spectral_norm};
use crate::subsample::{fold_weights, sparsify, FrameInput};
use crate::{Result, C64};

/// Oversampling constants tried by [`calibrate_c1`].
pub const C1_CANDIDATES: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

/// Output of [`calibrate_c1`] on the Fourier system (n = 16, 400 trials, seed 0).
pub const DEFAULT_C1: f64 = 8.0;

/// `m = ⌈C₁ n ln(n+1)⌉`.
pub fn sample_count(c1: f64, n: usize) -> usize {
    (c1 * n as f64 * (n as f64 + 1.0).ln()).ceil().max(n as f64) as usize
}

/// Seed of trial `trial` at dimension `n`, independent of scheduling.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) ^ trial as u64);
    rng.next_u64()
}

/// Largest recovery residual over `members` random plus all extremal members.
pub fn worst_case_error(design: &WeightedDesign, model: &ModelClass, members: usize, seed: u64) -> f64 {
    design
        .evaluate_family(&model.members(design.n(), members, seed))
        .worst_residual()
}

/// One experiment cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport {
    pub n: usize,
    pub m: usize,
    /// Selected rows after subsampling.
    pub j: Option<usize>,
    pub trial: usize,
    pub seed: u64,
    pub s_min_sq: f64,
    pub worst_error: f64,
    /// Infinite when the design is rank deficient.
    pub certificate: f64,
    /// `s_min(G)² ≥ m/2` on the full design.
    pub fact1_holds: bool,
    /// `sup ‖N(f − P_n f)‖² / (ε_n² n ln(n+1))` on the full design.
    pub fact2_ratio: f64,
    /// Certificate of the full design when subsampled.
    pub full_certificate: Option<f64>,
    /// Achieved `(c₂, c₃)` when subsampled.
    pub frame_bounds: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct TrialSetup {
    pub model: ModelClass,
    pub mode: WeightMode,
    pub c1: f64,
    pub random_members: usize,
    /// Subsample with this ratio; `None` keeps all sampled points.
    pub target_ratio: Option<f64>,
}

pub fn run_trial(setup: &TrialSetup, n: usize, trial: usize, seed: u64) -> Result<TrialReport> {
    let system = setup.model.system();
    let density = SamplingDensity::new(system, n, setup.mode, None)?;
    let m = sample_count(setup.c1, n);
    let seed = trial_seed(seed, n, trial);
    let points = density.sample_points(m, seed)?;
    let design = WeightedDesign::assemble(system, &density, &points)?;
    let family = setup
        .model
        .members(n, setup.random_members, seed.rotate_left(17));
    let response = design.evaluate_family(&family);
    let certificate = certificate_from_response(&design, &setup.model, &response)
        .map_or(f64::INFINITY, |c| c.value);
    let eps = setup.model.decay().epsilon(n);
    let fact2_ratio =
        response.sup_tail_information_sq() / (eps * eps * n as f64 * (n as f64 + 1.0).ln());
    let mut report = TrialReport {
        n,
        m,
        j: None,
        trial,
        seed,
        s_min_sq: design.s_min().powi(2),
        worst_error: response.worst_residual(),
        certificate,
        fact1_holds: design.s_min().powi(2) >= m as f64 / 2.0,
        fact2_ratio,
        full_certificate: None,
        frame_bounds: None,
    };
    if let Some(ratio) = setup.target_ratio {
        let selection = sparsify(&FrameInput::from_design(&design)?, ratio)?;
        let folded = fold_weights(&design, &selection)?;
        let response = folded.evaluate_family(&family);
        report.j = Some(selection.len());
        report.s_min_sq = folded.s_min().powi(2);
        report.worst_error = response.worst_residual();
        report.full_certificate = Some(certificate);
        report.certificate = certificate_from_response(&folded, &setup.model, &response)
            .map_or(f64::INFINITY, |c| c.value);
        report.frame_bounds = Some((selection.lower_bound, selection.upper_bound));
    }
    Ok(report)
}

/// All `(n, trial)` cells in parallel, sorted by `(n, trial)`.
pub fn run_trials(setup: &TrialSetup, ns: &[usize], trials: usize, seed: u64) -> Result<Vec<TrialReport>> {
    let cells: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let mut reports = cells
        .par_iter()
        .map(|&(n, t)| run_trial(setup, n, t, seed))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by_key(|r| (r.n, r.trial));
    Ok(reports)
}

/// Oliveira tail bound `4m² exp(−m s_t / (16 R²))`.
pub fn oliveira_bound(m: usize, r_sq: f64, t: f64) -> f64 {
    let s_t = if t <= 2.0 { t * t } else { 4.0 * (t - 1.0) };
    let m = m as f64;
    4.0 * m * m * (-m * s_t / (16.0 * r_sq)).exp()
}

#[derive(Clone, Debug)]
pub struct ConcentrationSetup {
    pub system: OrthonormalSystem,
    pub mode: WeightMode,
    pub c1: f64,
    /// Dyadic tail blocks whose norms are recorded.
    pub block_levels: usize,
}

#[derive(Clone, Debug)]
pub struct ConcentrationReport {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub s_min_sq: Vec<f64>,
    /// Trials with `s_min(G)² < m/2`.
    pub fact1_failures: usize,
    /// 95% Wilson interval of the failure frequency.
    pub fact1_interval: (f64, f64),
    /// `‖G*G − mI‖ / m` per trial.
    pub deviations: Vec<f64>,
    /// Trials with `‖G*G − mI‖ ≥ m/2`.
    pub oliveira_exceedances: usize,
    /// Tail bound at `t = 1/2`, `R² = 2n`.
    pub oliveira_bound: f64,
    /// `‖Γ_ℓ‖² / (n ln((ℓ+1)(n+1)) 2^{2δℓ})`, per trial and block.
    pub block_ratios: Vec<Vec<f64>>,
    /// Empirical `(1 − 1/n²)`-quantile of the per-trial maximum ratio over the
    /// first half of the trials.
    pub fitted_c4: f64,
    /// Fraction of the second half whose blocks all stay below the fitted constant.
    pub block_holdout_frequency: f64,
}

impl ConcentrationReport {
    pub fn fact1_frequency(&self) -> f64 {
        self.fact1_failures as f64 / self.trials as f64
    }

    pub fn oliveira_frequency(&self) -> f64 {
        self.oliveira_exceedances as f64 / self.trials as f64
    }
}

struct ConcentrationSample {
    s_min_sq: f64,
    deviation: f64,
    blocks: Vec<f64>,
}

fn concentration_sample(
    setup: &ConcentrationSetup,
    density: &SamplingDensity,
    m: usize,
    seed: u64,
) -> Result<ConcentrationSample> {
    let n = density.n();
    let points = density.sample_points(m, seed)?;
    let design = WeightedDesign::assemble(&setup.system, density, &points)?;
    let gram = design.matrix().adjoint() * design.matrix();
    let eig = hermitian_eigenvalues(&gram);
    let mf = m as f64;
    let deviation = (eig[n - 1] - mf).abs().max((eig[0] - mf).abs()) / mf;

    let mut blocks = Vec::new();
    if let WeightMode::Power { delta } = density.mode() {
        for (level, &(lo, hi)) in density
            .dyadic_blocks()
            .iter()
            .enumerate()
            .take(setup.block_levels)
        {
            let gamma = DMatrix::<C64>::from_fn(m, hi - lo + 1, |i, c| {
                setup.system.eval_unchecked(lo + c, points[i]) / design.weights()[i].sqrt()
            });
            let norm_sq = spectral_norm(&gamma).powi(2);
            let scale = n as f64
                * ((level as f64 + 1.0) * (n as f64 + 1.0)).ln()
                * 2f64.powf(2.0 * delta * level as f64);
            blocks.push(norm_sq / scale);
        }
    }
    Ok(ConcentrationSample {
        s_min_sq: eig[0],
        deviation,
        blocks,
    })
}

/// Monte-Carlo frequencies of the Fact-1 event, the matrix deviation and the
/// dyadic block norms over `trials` independent designs.
pub fn concentration_trials(
    setup: &ConcentrationSetup,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if trials < 2 {
        return Err(invalid("concentration needs at least two trials"));
    }
    let density = SamplingDensity::new(&setup.system, n, setup.mode, None)?;
    let m = sample_count(setup.c1, n);
    let samples = (0..trials)
        .into_par_iter()
        .map(|t| concentration_sample(setup, &density, m, trial_seed(seed, n, t)))
        .collect::<Result<Vec<_>>>()?;

    let mf = m as f64;
    let fact1_failures = samples.iter().filter(|s| s.s_min_sq < mf / 2.0).count();
    let oliveira_exceedances = samples.iter().filter(|s| s.deviation >= 0.5).count();
    let maxima: Vec<f64> = samples
        .iter()
        .map(|s| s.blocks.iter().copied().fold(0.0, f64::max))
        .collect();
    let (fit, hold) = maxima.split_at(trials / 2);
    let mut sorted = fit.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = 1.0 - 1.0 / (n * n) as f64;
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    let fitted_c4 = sorted[idx];
    let held = hold.iter().filter(|&&r| r <= fitted_c4).count();

    Ok(ConcentrationReport {
        n,
        m,
        trials,
        s_min_sq: samples.iter().map(|s| s.s_min_sq).collect(),
        fact1_failures,
        fact1_interval: wilson_interval(fact1_failures, trials, 1.96),
        deviations: samples.iter().map(|s| s.deviation).collect(),
        oliveira_exceedances,
        oliveira_bound: oliveira_bound(m, 2.0 * n as f64, 0.5),
        block_ratios: samples.into_iter().map(|s| s.blocks).collect(),
        fitted_c4,
        block_holdout_frequency: held as f64 / hold.len() as f64,
    })
}

/// Smallest candidate `C₁` whose Fact-1 failure frequency at dimension `n`
/// falls below `4/n²`.
pub fn calibrate_c1(
    system: &OrthonormalSystem,
    mode: WeightMode,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let target = 4.0 / (n * n) as f64;
    for &c1 in &C1_CANDIDATES {
        let setup = ConcentrationSetup {
            system: system.clone(),
            mode,
            c1,
            block_levels: 0,
        };
        if concentration_trials(&setup, n, trials, seed)?.fact1_frequency() < target {
            return Ok(c1);
        }
    }
    Err(invalid("no candidate C₁ meets the Fact-1 target"))
}
