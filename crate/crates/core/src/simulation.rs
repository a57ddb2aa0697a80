// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic benchmark: piecewise-constant targets, shifted high-frequency
//! sources, and a seeded Monte-Carlo runner comparing estimator pipelines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::alignment::expand;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::selection::{detect_informative, refine_subset, InformativeSet, SelectionConfig, DEFAULT_REFINE_CAP};
use crate::signal::{mse_loss, PenaltyKind, PenaltySpec, Signal, SourceDataset};
use crate::solvers::solve;
use crate::tuning::{
    cv_select_lambda, default_grid, grid_scale, permutation_threshold, CvSpec, PermutationSpec,
    DEFAULT_FOLDS, DEFAULT_GRID_POINTS,
};

/// Reference target length the scenario changepoints are written for.
pub const REFERENCE_LEN: usize = 200;
const EQUALLY_SPACED: [usize; 7] = [25, 50, 75, 100, 125, 150, 175];
const UNEQUALLY_SPACED: [usize; 7] = [20, 40, 50, 120, 134, 160, 176];
const LEVELS: [f64; 8] = [2.0, 4.0, 1.0, 5.0, 7.0, 8.0, 2.0, 1.0];

const TAG_TARGET: u64 = 0;
const TAG_SOURCE_NOISE: u64 = 1000;
const TAG_DELTA: u64 = 2000;
const TAG_PERMUTATION: u64 = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    EquallySpaced,
    UnequallySpaced,
}

/// Target signal shape and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    scenario: Scenario,
    gamma: f64,
    n0: usize,
    sigma: f64,
    rho_noise: f64,
}

impl ScenarioSpec {
    /// Changepoints are rescaled by `n0 / 200` when `n0 != 200`.
    pub fn new(scenario: Scenario, gamma: f64, n0: usize, sigma: f64, rho_noise: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {sigma}")));
        }
        check_rho("rho_noise", rho_noise)?;
        let spec = Self { scenario, gamma, n0, sigma, rho_noise };
        let cps = spec.changepoints();
        let valid = cps.windows(2).all(|w| w[0] < w[1])
            && cps.first().is_some_and(|&c| c >= 1)
            && cps.last().is_some_and(|&c| c < n0);
        if !valid {
            return Err(Error::InvalidArgument(format!(
                "target length {n0} is too short for the scenario's changepoints"
            )));
        }
        Ok(spec)
    }

    /// `n0 = 200`, `sigma = 0.5`, independent noise.
    pub fn reference(scenario: Scenario, gamma: f64) -> Result<Self> {
        Self::new(scenario, gamma, REFERENCE_LEN, 0.5, 0.0)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho_noise(&self) -> f64 {
        self.rho_noise
    }

    /// 1-based changepoints: the signal changes between `t` and `t + 1`.
    pub fn changepoints(&self) -> Vec<usize> {
        let base = match self.scenario {
            Scenario::EquallySpaced => EQUALLY_SPACED,
            Scenario::UnequallySpaced => UNEQUALLY_SPACED,
        };
        base.iter()
            .map(|&c| (2 * c * self.n0 + REFERENCE_LEN) / (2 * REFERENCE_LEN))
            .collect()
    }

    /// The noiseless target.
    pub fn truth(&self) -> Signal {
        let cps = self.changepoints();
        let mut out = Vec::with_capacity(self.n0);
        let mut start = 0;
        for (seg, &end) in cps.iter().chain(std::iter::once(&self.n0)).enumerate() {
            out.extend(std::iter::repeat_n(LEVELS[seg] * self.gamma, end - start));
            start = end;
        }
        Signal::new(out).expect("levels are finite")
    }
}

fn check_rho(name: &str, rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {rho}")))
    }
}

/// How source signals deviate from the expanded target on their leading stretch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discrepancy {
    /// Constant offset `alpha` for informative sources, `alpha_tilde` otherwise.
    Deterministic { alpha: f64, alpha_tilde: f64 },
    /// Gaussian offsets with variance `kappa` or `kappa_tilde`.
    Gaussian { kappa: f64, kappa_tilde: f64 },
}

/// Source lengths, informative set and discrepancy model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpec {
    discrepancy: Discrepancy,
    informative: BTreeSet<usize>,
    h: f64,
    rho_delta: f64,
    source_lens: Vec<usize>,
}

impl ConfigurationSpec {
    pub fn new(
        discrepancy: Discrepancy,
        informative: BTreeSet<usize>,
        h: f64,
        rho_delta: f64,
        source_lens: Vec<usize>,
    ) -> Result<Self> {
        let (a, b) = match discrepancy {
            Discrepancy::Deterministic { alpha, alpha_tilde } => (alpha, alpha_tilde),
            Discrepancy::Gaussian { kappa, kappa_tilde } => (kappa, kappa_tilde),
        };
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(
                "discrepancy levels must be finite and nonnegative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::InvalidArgument(format!("H must lie in [0, 1], got {h}")));
        }
        check_rho("rho_delta", rho_delta)?;
        if source_lens.is_empty() || source_lens.contains(&0) {
            return Err(Error::InvalidArgument("need at least one nonempty source".into()));
        }
        let k = source_lens.len();
        if let Some(bad) = informative.iter().find(|&&i| i == 0 || i > k) {
            return Err(Error::InvalidArgument(format!(
                "informative index {bad} outside 1..={k}"
            )));
        }
        Ok(Self { discrepancy, informative, h, rho_delta, source_lens })
    }

    /// Ten sources of length `2 n0` with informative set `{1, ..., a}`.
    pub fn reference(discrepancy: Discrepancy, a: usize, h: f64, n0: usize) -> Result<Self> {
        Self::new(discrepancy, (1..=a).collect(), h, 0.0, vec![2 * n0; 10])
    }

    pub fn discrepancy(&self) -> Discrepancy {
        self.discrepancy
    }

    pub fn informative(&self) -> &BTreeSet<usize> {
        &self.informative
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rho_delta(&self) -> f64 {
        self.rho_delta
    }

    pub fn source_lens(&self) -> &[usize] {
        &self.source_lens
    }

    pub fn k(&self) -> usize {
        self.source_lens.len()
    }

    /// Number of leading indices carrying the discrepancy, `floor(H n_k)`.
    pub fn shifted_len(&self, n_k: usize) -> usize {
        ((self.h * n_k as f64 + 1e-9).floor() as usize).min(n_k)
    }
}

/// Seed material for one trial. Each stream tag gets its own generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeed {
    pub base: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn new(base: u64, trial: u64) -> Self {
        Self { base, trial }
    }

    pub fn rng(&self, tag: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.base.to_le_bytes());
        key[8..16].copy_from_slice(&self.trial.to_le_bytes());
        key[16..24].copy_from_slice(&tag.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

/// `e_1 = z_1`, `e_i = rho e_{i-1} + (1 - rho) z_i` with `z_i ~ N(0, scale^2)`.
fn ar1_series(rng: &mut ChaCha8Rng, n: usize, scale: f64, rho: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for i in 0..n {
        let z: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
        let e = if i == 0 { z } else { rho * prev + (1.0 - rho) * z };
        out.push(e);
        prev = e;
    }
    out
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Noiseless target and its noisy observation.
pub fn gen_target(spec: &ScenarioSpec, seed: TrialSeed) -> Result<(Signal, Signal)> {
    let truth = spec.truth();
    let noise = ar1_series(&mut seed.rng(TAG_TARGET), spec.n0, spec.sigma, spec.rho_noise);
    let data = Signal::new(add(&truth, &noise))?;
    Ok((truth, data))
}

/// Sources built from the target truth, each carrying its own truth.
pub fn gen_sources(
    truth: &[f64],
    spec: &ConfigurationSpec,
    sigma: f64,
    rho_noise: f64,
    seed: TrialSeed,
) -> Result<Vec<SourceDataset>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {sigma}")));
    }
    check_rho("rho_noise", rho_noise)?;
    let mut out = Vec::with_capacity(spec.k());
    for (i, &n_k) in spec.source_lens.iter().enumerate() {
        let k = i + 1;
        let informative = spec.informative.contains(&k);
        let mut f_k = expand(truth, n_k)?;
        let shifted = spec.shifted_len(n_k);
        match spec.discrepancy {
            Discrepancy::Deterministic { alpha, alpha_tilde } => {
                let d = if informative { alpha } else { alpha_tilde };
                f_k[..shifted].iter_mut().for_each(|x| *x += d);
            }
            Discrepancy::Gaussian { kappa, kappa_tilde } => {
                let var = if informative { kappa } else { kappa_tilde };
                let mut rng = seed.rng(TAG_DELTA + k as u64);
                let delta = ar1_series(&mut rng, n_k, var.sqrt(), spec.rho_delta);
                f_k[..shifted].iter_mut().zip(&delta).for_each(|(x, d)| *x += d);
            }
        }
        let noise = ar1_series(&mut seed.rng(TAG_SOURCE_NOISE + k as u64), n_k, sigma, rho_noise);
        let data = Signal::new(add(&f_k, &noise))?;
        out.push(SourceDataset::with_truth(data, k, Signal::new(f_k)?)?);
    }
    Ok(out)
}

/// Which sources a transferred pipeline draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceChoice {
    /// No sources.
    Target,
    /// The first informative source.
    First,
    /// The known informative set.
    Oracle,
    /// The set detected from the data.
    Detected,
    /// The detected set after subset refinement.
    Refined,
    /// Every source.
    All,
}

/// One estimator pipeline of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Penalised { penalty: PenaltyKind, sources: SourceChoice },
    /// ℓ0 on the target merged with the first informative source.
    TargetFirst,
    /// ℓ0 on the target merged with every source.
    TargetAll,
}

impl Method {
    pub const fn new(penalty: PenaltyKind, sources: SourceChoice) -> Self {
        Method::Penalised { penalty, sources }
    }

    /// Target-only, first source, oracle set, detected set and all sources,
    /// each with both penalties.
    pub fn standard() -> Vec<Method> {
        let mut out = Vec::new();
        for penalty in [PenaltyKind::L1, PenaltyKind::L0] {
            for sources in [
                SourceChoice::Target,
                SourceChoice::First,
                SourceChoice::Oracle,
                SourceChoice::Detected,
                SourceChoice::All,
            ] {
                out.push(Method::new(penalty, sources));
            }
        }
        out
    }

    pub fn penalty(&self) -> PenaltyKind {
        match self {
            Method::Penalised { penalty, .. } => *penalty,
            _ => PenaltyKind::L0,
        }
    }

    /// Whether the method uses the detected informative set.
    pub fn needs_detection(&self) -> bool {
        matches!(
            self,
            Method::Penalised { sources: SourceChoice::Detected | SourceChoice::Refined, .. }
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Penalised { penalty, sources } => {
                let tail = match sources {
                    SourceChoice::Target => "target",
                    SourceChoice::First => "T-1",
                    SourceChoice::Oracle => "T-A",
                    SourceChoice::Detected => "T-Ahat",
                    SourceChoice::Refined => "T-Atilde",
                    SourceChoice::All => "T-K",
                };
                write!(f, "{}-{tail}", penalty.as_str())
            }
            Method::TargetFirst => f.write_str("l0-T0-1"),
            Method::TargetAll => f.write_str("l0-T0-K"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l0-T0-1" => return Ok(Method::TargetFirst),
            "l0-T0-K" => return Ok(Method::TargetAll),
            _ => {}
        }
        let unknown = || Error::InvalidArgument(format!("unknown method '{s}'"));
        let (pen, tail) = s.split_once('-').ok_or_else(unknown)?;
        let penalty: PenaltyKind = pen.parse().map_err(|_| unknown())?;
        let sources = match tail {
            "target" => SourceChoice::Target,
            "T-1" => SourceChoice::First,
            "T-A" => SourceChoice::Oracle,
            "T-Ahat" => SourceChoice::Detected,
            "T-Atilde" => SourceChoice::Refined,
            "T-K" => SourceChoice::All,
            _ => return Err(unknown()),
        };
        Ok(Method::new(penalty, sources))
    }
}

/// Tuning knobs shared by every pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub cv_folds: usize,
    pub grid_points: usize,
    /// Screening width for detection, capped at each source length.
    pub screen_width: usize,
    pub permutations: usize,
    pub quantile: f64,
    pub refine_cap: usize,
    /// Fixed penalty level for every method; `None` selects it by cross-validation.
    pub lambda: Option<f64>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            cv_folds: DEFAULT_FOLDS,
            grid_points: DEFAULT_GRID_POINTS,
            screen_width: 50,
            permutations: 100,
            quantile: 0.95,
            refine_cap: DEFAULT_REFINE_CAP,
            lambda: None,
        }
    }
}

/// One method's outcome in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: Method,
    pub trial: usize,
    pub loss: f64,
    pub selected: Option<InformativeSet>,
    pub seed: u64,
}

/// Everything needed to rerun a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub scenario: ScenarioSpec,
    pub configuration: ConfigurationSpec,
    pub settings: PipelineSettings,
}

impl SimulationSpec {
    pub fn new(scenario: ScenarioSpec, configuration: ConfigurationSpec) -> Self {
        Self { scenario, configuration, settings: PipelineSettings::default() }
    }
}

/// Data of one trial plus the quantities shared by all methods.
#[derive(Debug, Clone)]
pub struct Trial {
    pub seed: TrialSeed,
    pub truth: Signal,
    pub target: Signal,
    pub sources: Vec<SourceDataset>,
    /// Detected informative set; present when detection was requested.
    pub detected: Option<InformativeSet>,
    cv: CvSpec,
}

/// One method's fit within a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodFit {
    pub estimate: Vec<f64>,
    pub lambda: f64,
    pub selected: Option<InformativeSet>,
}

/// Generates a trial's data, the shared CV grid and, if `detect` is set,
/// the detected informative set.
pub fn prepare_trial(spec: &SimulationSpec, detect: bool, seed: TrialSeed) -> Result<Trial> {
    let settings = &spec.settings;
    let cfg = &spec.configuration;
    let (truth, target) = gen_target(&spec.scenario, seed)?;
    let sources = gen_sources(&truth, cfg, spec.scenario.sigma, spec.scenario.rho_noise, seed)?;
    let cv = CvSpec::new(settings.cv_folds, default_grid(grid_scale(&target), settings.grid_points))?;
    let detected = if detect {
        let data: Vec<&[f64]> = sources.iter().map(|s| s.data().values()).collect();
        let widths: Vec<usize> =
            cfg.source_lens().iter().map(|&n| settings.screen_width.clamp(1, n)).collect();
        let perm_seed = seed.rng(TAG_PERMUTATION).random::<u64>();
        let perm = PermutationSpec::new(settings.permutations, settings.quantile, perm_seed)?;
        let tau = permutation_threshold(&target, &data, &widths, &perm)?.max(f64::MIN_POSITIVE);
        let config = SelectionConfig::new(widths, vec![tau; data.len()])?;
        Some(detect_informative(&target, &data, &config)?)
    } else {
        None
    };
    Ok(Trial { seed, truth, target, sources, detected, cv })
}

/// Fits `method` on a prepared trial. Source-based methods fall back to the
/// target alone when their source set is empty.
pub fn fit_method(spec: &SimulationSpec, trial: &Trial, method: Method) -> Result<MethodFit> {
    let settings = &spec.settings;
    let cfg = &spec.configuration;
    let data: Vec<&[f64]> = trial.sources.iter().map(|s| s.data().values()).collect();
    let first = cfg.informative().iter().next().copied();
    let mut selected = None;
    let (kind, used): (EstimatorKind, Vec<&[f64]>) = match method {
        Method::Penalised { sources: choice, .. } => {
            let set: Option<BTreeSet<usize>> = match choice {
                SourceChoice::Target => None,
                SourceChoice::First => first.map(|k| BTreeSet::from([k])),
                SourceChoice::Oracle => Some(cfg.informative().clone()),
                SourceChoice::All => Some((1..=data.len()).collect()),
                SourceChoice::Detected | SourceChoice::Refined => {
                    let found = trial.detected.clone().ok_or_else(|| {
                        Error::InvalidArgument(format!("{method} needs a trial prepared with detection"))
                    })?;
                    let found = if choice == SourceChoice::Refined && !found.is_empty() {
                        refine_subset(&found, cfg.source_lens(), settings.refine_cap)?
                    } else {
                        found
                    };
                    let set = found.as_set().clone();
                    selected = Some(found);
                    Some(set)
                }
            };
            match set.filter(|s| !s.is_empty()) {
                Some(s) => (EstimatorKind::Multisource(s), data.clone()),
                None => (EstimatorKind::TargetOnly, Vec::new()),
            }
        }
        Method::TargetFirst => match first {
            Some(k) => (EstimatorKind::TargetUnisource, vec![data[k - 1]]),
            None => (EstimatorKind::TargetOnly, Vec::new()),
        },
        Method::TargetAll => (EstimatorKind::TargetMultisource, data.clone()),
    };
    let input = kind.aligned_input(&trial.target, &used)?;
    let lambda = match settings.lambda {
        Some(l) => l,
        None => cv_select_lambda(&input, method.penalty(), &trial.cv)?,
    };
    let estimate = solve(&input, PenaltySpec::new(method.penalty(), lambda)?)?;
    Ok(MethodFit { estimate, lambda, selected })
}

fn run_trial(spec: &SimulationSpec, methods: &[Method], seed: TrialSeed) -> Result<Vec<TrialResult>> {
    let trial = prepare_trial(spec, methods.iter().any(Method::needs_detection), seed)?;
    methods
        .iter()
        .map(|&method| {
            let fit = fit_method(spec, &trial, method)?;
            Ok(TrialResult {
                method,
                trial: seed.trial as usize,
                loss: mse_loss(&fit.estimate, &trial.truth)?,
                selected: fit.selected,
                seed: seed.base,
            })
        })
        .collect()
}

/// Runs `trials` independent trials in parallel. Rows come back sorted by
/// method name, then trial.
pub fn run_monte_carlo(
    spec: &SimulationSpec,
    methods: &[Method],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }
    let mut rows: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(spec, methods, TrialSeed::new(base_seed, t as u64)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        a.method.to_string().cmp(&b.method.to_string()).then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

/// Mean loss and standard error of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; zero for a single trial.
    pub se: f64,
    pub trials: usize,
}

pub fn summarize(results: &[TrialResult]) -> Result<Vec<SummaryRow>> {
    if results.is_empty() {
        return Err(Error::Empty);
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in results {
        groups.entry(r.method.to_string()).or_default().push(r.loss);
    }
    Ok(groups
        .into_iter()
        .map(|(method, losses)| {
            let n = losses.len();
            let mean = losses.iter().sum::<f64>() / n as f64;
            let se = if n < 2 {
                0.0
            } else {
                let var = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>()
                    / (n - 1) as f64;
                (var / n as f64).sqrt()
            };
            SummaryRow { method, mean, se, trials: n }
        })
        .collect())
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv output failed: {e}"))
}

/// Columns `method,trial,loss,selected_set,seed`; the set column is empty
/// for methods without selection.
pub fn write_results_csv<W: Write>(results: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "trial", "loss", "selected_set", "seed"]).map_err(csv_error)?;
    for r in results {
        let set = r.selected.as_ref().map(ToString::to_string).unwrap_or_default();
        w.write_record([
            r.method.to_string(),
            r.trial.to_string(),
            r.loss.to_string(),
            set,
            r.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))
}

/// Columns `method,mean,se,trials`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "mean", "se", "trials"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([r.method.clone(), r.mean.to_string(), r.se.to_string(), r.trials.to_string()])
            .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv output failed: {e}")))
}
