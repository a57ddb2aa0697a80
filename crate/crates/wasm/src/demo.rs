// SPDX-License-Identifier: MIT OR Apache-2.0

use steptransfer::alignment::average;
use steptransfer::selection::frequency_curve;
use steptransfer::simulation::{
    fit_method, prepare_trial, ConfigurationSpec, Discrepancy, Method, Scenario, ScenarioSpec,
    SimulationSpec, TrialSeed,
};
use steptransfer::{mse_loss, solve, PenaltyKind, PenaltySpec};

const N0: usize = 200;

/// Knobs exposed on the page. Sources follow the deterministic offset model
/// with ten sources of length `2 n0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRequest {
    /// 1 for equally spaced changepoints, 2 otherwise.
    pub scenario: u8,
    pub gamma: f64,
    pub sigma: f64,
    pub a: usize,
    pub alpha: f64,
    pub h: f64,
    pub method: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoRun {
    pub truth: Vec<f64>,
    pub target: Vec<f64>,
    pub source: Vec<f64>,
    pub estimate: Vec<f64>,
    pub loss: f64,
    pub lambda: f64,
    /// Detected set for selection methods, empty otherwise.
    pub selected: String,
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn simulate(req: &DemoRequest) -> Result<DemoRun, String> {
    let scenario = match req.scenario {
        1 => Scenario::EquallySpaced,
        2 => Scenario::UnequallySpaced,
        s => return Err(format!("scenario must be 1 or 2, got {s}")),
    };
    if req.a > 10 {
        return Err(format!("informative set size must be at most 10, got {}", req.a));
    }
    let method: Method = req.method.parse().map_err(text)?;
    let scenario = ScenarioSpec::new(scenario, req.gamma, N0, req.sigma, 0.0).map_err(text)?;
    let disc = Discrepancy::Deterministic { alpha: req.alpha, alpha_tilde: 2.0 };
    let configuration = ConfigurationSpec::reference(disc, req.a, req.h, N0).map_err(text)?;
    let spec = SimulationSpec::new(scenario, configuration);
    let trial = prepare_trial(&spec, method.needs_detection(), TrialSeed::new(req.seed, 0)).map_err(text)?;
    let fit = fit_method(&spec, &trial, method).map_err(text)?;
    Ok(DemoRun {
        source: average(trial.sources[0].data(), N0).map_err(text)?,
        loss: mse_loss(&fit.estimate, &trial.truth).map_err(text)?,
        truth: trial.truth.into_vec(),
        target: trial.target.into_vec(),
        estimate: fit.estimate,
        lambda: fit.lambda,
        selected: fit.selected.map(|s| s.to_string()).unwrap_or_default(),
    })
}

pub fn denoise(values: &[f64], penalty: &str, lambda: f64) -> Result<Vec<f64>, String> {
    let kind: PenaltyKind = penalty.parse().map_err(text)?;
    solve(values, PenaltySpec::new(kind, lambda).map_err(text)?).map_err(text)
}

pub fn frequency(lens: &[u32]) -> Result<Vec<f64>, String> {
    let lens: Vec<usize> = lens.iter().map(|&n| n as usize).collect();
    (1..=lens.len()).map(|k| frequency_curve(&lens, k).map_err(text)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(method: &str) -> DemoRequest {
        DemoRequest {
            scenario: 1,
            gamma: 0.5,
            sigma: 0.5,
            a: 8,
            alpha: 0.2,
            h: 0.15,
            method: method.into(),
            seed: 3,
        }
    }

    #[test]
    fn simulate_returns_aligned_series() {
        let run = simulate(&request("l0-T-Ahat")).unwrap();
        for v in [&run.truth, &run.target, &run.source, &run.estimate] {
            assert_eq!(v.len(), N0);
        }
        assert!(run.loss >= 0.0 && run.lambda > 0.0);
        assert!(!run.selected.is_empty());
        assert_eq!(run, simulate(&request("l0-T-Ahat")).unwrap());
        assert!(simulate(&request("l1-target")).unwrap().selected.is_empty());
    }

    #[test]
    fn transfer_helps_in_the_default_setting() {
        let target = simulate(&request("l0-target")).unwrap().loss;
        let oracle = simulate(&request("l0-T-A")).unwrap().loss;
        assert!(oracle < target, "{oracle} vs {target}");
    }

    #[test]
    fn bad_requests_are_errors() {
        assert!(simulate(&DemoRequest { scenario: 3, ..request("l0-T-A") }).is_err());
        assert!(simulate(&DemoRequest { a: 11, ..request("l0-T-A") }).is_err());
        assert!(simulate(&request("l3-T-A")).is_err());
        assert!(denoise(&[1.0, 2.0], "l2", 0.1).is_err());
        assert!(denoise(&[], "l1", 0.1).is_err());
        assert!(frequency(&[0]).is_err());
    }

    #[test]
    fn denoise_and_frequency() {
        assert_eq!(denoise(&[1.0, 1.0, 5.0], "l0", 0.0).unwrap(), vec![1.0, 1.0, 5.0]);
        assert_eq!(denoise(&[2.0, 4.0], "l1", 100.0).unwrap(), vec![3.0, 3.0]);
        let lens: Vec<u32> = (1..=10).map(|k| 200 * (11 - k)).collect();
        let curve = frequency(&lens).unwrap();
        let best = (0..10).fold(0, |b, i| if curve[i] > curve[b] { i } else { b });
        assert_eq!(best + 1, 8);
    }
}
