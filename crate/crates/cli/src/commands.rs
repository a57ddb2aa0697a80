// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use steptransfer::estimators::{theoretical_lambda, EstimatorKind, LeftInverseMatrix, Sparsity};
use steptransfer::selection::{
    detect_informative, frequency_curve, refine_subset, theoretical_screen_width,
    theoretical_threshold, InformativeSet, SelectionConfig, DEFAULT_REFINE_CAP,
};
use steptransfer::simulation::{
    run_monte_carlo, summarize, write_results_csv, write_summary_csv, ConfigurationSpec,
    Discrepancy, Method, PipelineSettings, Scenario, ScenarioSpec, SimulationSpec, SummaryRow,
};
use steptransfer::solvers::solve;
use steptransfer::tuning::{
    cv_select_lambda, default_grid, grid_scale, permutation_threshold, CvSpec, PermutationSpec,
    DEFAULT_GRID_POINTS,
};
use steptransfer::{PenaltyKind, PenaltySpec};

use crate::error::CliError;
use crate::io::{read_matrix, read_signal, write_estimate};
use crate::{
    ConfigArg, DetectionArgs, EstimateArgs, FrequencyArgs, MethodArg, PenaltyArg, ScenarioArg,
    SelectArgs, SimulateArgs, TauMode,
};

const PRACTICAL_WIDTH: usize = 50;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: cannot create: {e}", path.display())))
}

fn read_sources(paths: &[std::path::PathBuf]) -> Result<Vec<Vec<f64>>, CliError> {
    paths.iter().map(|p| read_signal(p)).collect()
}

fn penalty_kind(p: PenaltyArg) -> PenaltyKind {
    match p {
        PenaltyArg::L1 => PenaltyKind::L1,
        PenaltyArg::L0 => PenaltyKind::L0,
    }
}

fn detect(y: &[f64], sources: &[Vec<f64>], args: &DetectionArgs) -> Result<InformativeSet, CliError> {
    let n0 = y.len();
    let s0 = args.s0.unwrap_or(0);
    let lens: Vec<usize> = sources.iter().map(Vec::len).collect();
    if args.width == Some(0) {
        return Err(usage("--width must be at least 1"));
    }
    let widths = lens
        .iter()
        .map(|&n| match (args.width, args.tau) {
            (Some(w), _) => Ok(w.min(n)),
            (None, TauMode::Permutation) => Ok(PRACTICAL_WIDTH.min(n)),
            (None, TauMode::Theoretical) => theoretical_screen_width(s0, n0, n, args.constant),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let thresholds = match args.tau {
        TauMode::Theoretical => lens
            .iter()
            .map(|&n| theoretical_threshold(s0, n0, n, args.constant))
            .collect::<Result<Vec<_>, _>>()?,
        TauMode::Permutation => {
            let spec = PermutationSpec::new(args.permutations, args.quantile, args.seed)?;
            let tau = permutation_threshold(y, sources, &widths, &spec)?.max(f64::MIN_POSITIVE);
            vec![tau; lens.len()]
        }
    };
    eprintln!("screening widths: {widths:?}");
    eprintln!("thresholds: {thresholds:?}");
    Ok(detect_informative(y, sources, &SelectionConfig::new(widths, thresholds)?)?)
}

fn parse_index_list(raw: &str, k: usize) -> Result<BTreeSet<usize>, CliError> {
    let set = raw
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&i| (1..=k).contains(&i))
                .ok_or_else(|| usage(format!("--select: '{t}' is not a source index in 1..={k}")))
        })
        .collect::<Result<BTreeSet<_>, _>>()?;
    Ok(set)
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let sources = read_sources(&args.sources)?;
    let target = args.target.as_deref().map(read_signal).transpose()?;
    let uses_target = matches!(
        args.method,
        MethodArg::TargetOnly | MethodArg::TargetUnisource | MethodArg::TargetMultisource
    ) || (args.method == MethodArg::Multisource && args.select == "detect");
    if uses_target && target.is_none() {
        return Err(usage(format!("--target is required for method {:?}", args.method)));
    }
    if args.method != MethodArg::TargetOnly && sources.is_empty() {
        return Err(usage("at least one --source is required"));
    }
    let n0 = match (&target, args.n0) {
        (Some(t), Some(n)) if t.len() != n => {
            return Err(usage(format!("--n0 {n} disagrees with target length {}", t.len())))
        }
        (Some(t), _) => t.len(),
        (None, Some(n)) if n > 0 => n,
        _ => return Err(usage("give --target or a positive --n0")),
    };
    // source-only methods read just the length of the target
    let y = target.unwrap_or_else(|| vec![0.0; n0]);
    let lens: Vec<usize> = sources.iter().map(Vec::len).collect();

    let kind = match args.method {
        MethodArg::TargetOnly => EstimatorKind::TargetOnly,
        MethodArg::Unisource => EstimatorKind::Unisource,
        MethodArg::TargetUnisource => EstimatorKind::TargetUnisource,
        MethodArg::TargetMultisource => EstimatorKind::TargetMultisource,
        MethodArg::Affine => {
            let path = args
                .left_inverse
                .as_deref()
                .ok_or_else(|| usage("--left-inverse is required for the affine method"))?;
            let (rows, cols, entries) = read_matrix(path)?;
            EstimatorKind::Affine(LeftInverseMatrix::new(rows, cols, entries)?)
        }
        MethodArg::Multisource => {
            let set = match args.select.as_str() {
                "all" => (1..=sources.len()).collect(),
                "detect" => {
                    let found = detect(&y, &sources, &args.detection)?;
                    eprintln!("selected: {found}");
                    found.as_set().clone()
                }
                list => parse_index_list(list, sources.len())?,
            };
            if set.is_empty() {
                eprintln!("no informative source; using the target only");
                EstimatorKind::TargetOnly
            } else {
                EstimatorKind::Multisource(set)
            }
        }
    };
    let penalty = penalty_kind(args.penalty);
    if kind.l0_only() && penalty == PenaltyKind::L1 {
        return Err(usage(format!("method {:?} requires --penalty l0", args.method)));
    }
    let input = kind.aligned_input(&y, &sources)?;
    let lambda = match args.lambda.as_str() {
        "cv" => {
            let spec = CvSpec::new(args.folds, default_grid(grid_scale(&input), DEFAULT_GRID_POINTS))
                .map_err(|e| usage(format!("--folds: {e}")))?;
            cv_select_lambda(&input, penalty, &spec)?
        }
        "theoretical" => {
            let sparsity = args.detection.s0.map_or(Sparsity::Unknown, Sparsity::Known);
            theoretical_lambda(&kind, penalty, sparsity, n0, &lens, args.detection.constant)?
        }
        raw => raw
            .parse::<f64>()
            .ok()
            .filter(|l| *l >= 0.0 && l.is_finite())
            .ok_or_else(|| usage(format!("--lambda: expected a nonnegative number, cv or theoretical, got '{raw}'")))?,
    };
    eprintln!("lambda: {lambda}");
    let estimate = solve(&input, PenaltySpec::new(penalty, lambda)?)?;
    match &args.output {
        Some(path) => write_estimate(&estimate, create(path)?),
        None => write_estimate(&estimate, io::stdout().lock()),
    }
}

pub fn select(args: &SelectArgs) -> Result<(), CliError> {
    let y = read_signal(&args.target)?;
    let sources = read_sources(&args.sources)?;
    let found = detect(&y, &sources, &args.detection)?;
    println!("{found}");
    if args.refine {
        if found.is_empty() {
            println!("{found}");
        } else {
            let lens: Vec<usize> = sources.iter().map(Vec::len).collect();
            println!("{}", refine_subset(&found, &lens, DEFAULT_REFINE_CAP)?);
        }
    }
    Ok(())
}

fn check(ok: bool, flag: &str, rule: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(usage(format!("{flag} {rule}")))
    }
}

fn pinned<T: PartialEq + Copy + std::fmt::Display>(
    given: Option<T>,
    reference: T,
    fallback: T,
    exact: bool,
    flag: &str,
) -> Result<T, CliError> {
    match (exact, given) {
        (true, Some(v)) if v != reference => {
            Err(usage(format!("--paper-exact pins {flag} to {reference}, got {v}")))
        }
        (true, _) => Ok(reference),
        (false, v) => Ok(v.unwrap_or(fallback)),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let exact = args.paper_exact;
    let n0 = pinned(args.n0, 200, 200, exact, "--n0")?;
    let nk = pinned(args.nk, 400, 2 * n0, exact, "--nk")?;
    let k = pinned(args.k, 10, 10, exact, "--k")?;
    let sigma = pinned(args.sigma, 0.5, 0.5, exact, "--sigma")?;

    check(args.gamma > 0.0 && args.gamma.is_finite(), "--gamma", "must be positive")?;
    check(sigma >= 0.0 && sigma.is_finite(), "--sigma", "must be nonnegative")?;
    check(n0 > 0, "--n0", "must be positive")?;
    check(nk > 0, "--nk", "must be positive")?;
    check(k > 0, "--k", "must be positive")?;
    check(args.a <= k, "--a", "cannot exceed the number of sources --k")?;
    check((0.0..=1.0).contains(&args.h), "--h", "must lie in [0, 1]")?;
    check((0.0..1.0).contains(&args.rho_noise), "--rho-noise", "must lie in [0, 1)")?;
    check((0.0..1.0).contains(&args.rho_delta), "--rho-delta", "must lie in [0, 1)")?;
    check(args.trials > 0, "--trials", "must be at least 1")?;
    check(args.width > 0, "--width", "must be at least 1")?;
    check(args.permutations > 0, "--permutations", "must be at least 1")?;
    check(args.quantile > 0.0 && args.quantile < 1.0, "--quantile", "must lie in (0, 1)")?;
    if let Some(l) = args.lambda {
        check(l >= 0.0 && l.is_finite(), "--lambda", "must be nonnegative")?;
    }
    let discrepancy = match args.config {
        ConfigArg::Deterministic => {
            check(args.alpha >= 0.0, "--alpha", "must be nonnegative")?;
            check(args.alpha_tilde >= 0.0, "--alpha-tilde", "must be nonnegative")?;
            Discrepancy::Deterministic { alpha: args.alpha, alpha_tilde: args.alpha_tilde }
        }
        ConfigArg::Gaussian => {
            check(args.kappa >= 0.0, "--kappa", "must be nonnegative")?;
            check(args.kappa_tilde >= 0.0, "--kappa-tilde", "must be nonnegative")?;
            Discrepancy::Gaussian { kappa: args.kappa, kappa_tilde: args.kappa_tilde }
        }
    };
    let scenario = match args.scenario {
        ScenarioArg::Equal => Scenario::EquallySpaced,
        ScenarioArg::Unequal => Scenario::UnequallySpaced,
    };
    let scenario = ScenarioSpec::new(scenario, args.gamma, n0, sigma, args.rho_noise)
        .map_err(|e| usage(format!("--n0: {e}")))?;
    let configuration =
        ConfigurationSpec::new(discrepancy, (1..=args.a).collect(), args.h, args.rho_delta, vec![nk; k])?;
    let methods = match &args.methods {
        None => Method::standard(),
        Some(list) => list
            .split(',')
            .map(|m| m.trim().parse::<Method>().map_err(|e| usage(format!("--methods: {e}"))))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let spec = SimulationSpec {
        scenario,
        configuration,
        settings: PipelineSettings {
            screen_width: args.width,
            permutations: args.permutations,
            quantile: args.quantile,
            lambda: args.lambda,
            ..PipelineSettings::default()
        },
    };
    let rows = run_monte_carlo(&spec, &methods, args.trials, args.seed)?;
    let summary = summarize(&rows)?;
    write_results_csv(&rows, create(&args.results)?)?;
    write_summary_csv(&summary, create(&args.summary)?)?;
    print_summary(&summary);
    Ok(())
}

fn print_summary(rows: &[SummaryRow]) {
    let width = rows.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    println!("{:<width$}  {:>12}  {:>12}  {:>6}", "method", "mean", "se", "trials");
    for r in rows {
        println!("{:<width$}  {:>12.6e}  {:>12.6e}  {:>6}", r.method, r.mean, r.se, r.trials);
    }
}

pub fn bench_frequency(args: &FrequencyArgs) -> Result<(), CliError> {
    let lens = if args.lens.is_empty() {
        (1..=10).map(|k| 200 * (11 - k)).collect()
    } else {
        args.lens.clone()
    };
    let mut out = io::stdout().lock();
    let mut best = (0, f64::NEG_INFINITY);
    let io_err = |e: io::Error| CliError::Data(format!("cannot write output: {e}"));
    writeln!(out, "K,curve").map_err(io_err)?;
    for k in 1..=lens.len() {
        let value = frequency_curve(&lens, k)?;
        if value > best.1 {
            best = (k, value);
        }
        writeln!(out, "{k},{value}").map_err(io_err)?;
    }
    eprintln!("maximised at K = {}", best.0);
    Ok(())
}
