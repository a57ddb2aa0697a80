// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeSet;

use steptransfer::selection::{refine_subset, theoretical_screen_width, theoretical_threshold};
use steptransfer::simulation::{gen_sources, gen_target, ConfigurationSpec, Discrepancy, Scenario, ScenarioSpec, TrialSeed};
use steptransfer::tuning::{cv_select_lambda, permutation_threshold, CvSpec, PermutationSpec};
use steptransfer::{detect_informative, mse_loss, EstimatorKind, PenaltyKind, PenaltySpec, SelectionConfig};

fn setting(seed: u64) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let scenario = ScenarioSpec::reference(Scenario::UnequallySpaced, 0.5).unwrap();
    let disc = Discrepancy::Deterministic { alpha: 0.1, alpha_tilde: 3.0 };
    let cfg = ConfigurationSpec::new(disc, BTreeSet::from([1, 2, 3]), 0.2, 0.0, vec![400, 800, 600, 400]).unwrap();
    let seed = TrialSeed::new(seed, 0);
    let (truth, y) = gen_target(&scenario, seed).unwrap();
    let sources = gen_sources(&truth, &cfg, 0.5, 0.0, seed).unwrap();
    let data = sources.iter().map(|s| s.data().values().to_vec()).collect();
    (truth.into_vec(), y.into_vec(), data)
}

#[test]
fn detected_transfer_beats_target_only() {
    let (truth, y, sources) = setting(7);
    let lens: Vec<usize> = sources.iter().map(Vec::len).collect();
    let widths = vec![50; lens.len()];
    let tau = permutation_threshold(&y, &sources, &widths, &PermutationSpec::new(100, 0.95, 3).unwrap()).unwrap();
    let config = SelectionConfig::uniform(lens.len(), 50, tau).unwrap();
    let found = detect_informative(&y, &sources, &config).unwrap();
    assert!(!found.contains(4), "drifting source selected: {found}");
    assert!(!found.is_empty());
    let refined = refine_subset(&found, &lens, 20).unwrap();
    assert!(refined.indices().all(|k| found.contains(k)));

    let mut losses = Vec::new();
    for kind in [EstimatorKind::TargetOnly, EstimatorKind::Multisource(found.as_set().clone())] {
        let input = kind.aligned_input(&y, &sources).unwrap();
        let lambda = cv_select_lambda(&input, PenaltyKind::L0, &CvSpec::for_signal(&input).unwrap()).unwrap();
        let est = kind.estimate(&y, &sources, PenaltySpec::l0(lambda).unwrap()).unwrap();
        losses.push(mse_loss(&est, &truth).unwrap());
    }
    assert!(losses[1] < losses[0], "losses {losses:?}");
}

#[test]
fn target_multisource_accepts_short_sources() {
    let (truth, y, mut sources) = setting(8);
    sources.push(steptransfer::alignment::expand(&truth, 120).unwrap());
    let est = EstimatorKind::TargetMultisource.estimate(&y, &sources, PenaltySpec::l0(0.01).unwrap()).unwrap();
    assert_eq!(est.len(), 200);
    let err = EstimatorKind::multisource([5]).unwrap().estimate(&y, &sources, PenaltySpec::l0(0.01).unwrap());
    assert!(matches!(err, Err(steptransfer::Error::Precondition(_))));
}

#[test]
fn theoretical_rules_flag_a_large_offset() {
    let f = vec![0.0; 100];
    let clean = steptransfer::alignment::expand(&f, 200).unwrap();
    let shifted: Vec<f64> = clean.iter().enumerate().map(|(i, x)| if i < 40 { x + 10.0 } else { *x }).collect();
    let sources = [clean, shifted];
    let widths: Vec<usize> = (0..2).map(|_| theoretical_screen_width(0, 100, 200, 1.0).unwrap()).collect();
    let taus: Vec<f64> = (0..2).map(|_| theoretical_threshold(0, 100, 200, 1.0).unwrap()).collect();
    let found = detect_informative(&f, &sources, &SelectionConfig::new(widths, taus).unwrap()).unwrap();
    assert_eq!(found.to_string(), "1");
}
