//! Confusion matrices and the four headline metrics (accuracy, recall,
//! precision, F1), over packet labels or device classifications, plus the
//! loss/delay robustness sweeps.
//!
//! Precision, recall, and F1 are macro-averaged over the ground-truth
//! classes present in the evaluated subset; the report says so explicitly.
//! `Unknown` is a prediction-only class: it never appears in ground truth,
//! and predicting it is always an error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{label_trace, RuleSet};
use crate::model::{DeviceType, InteractionLabel, PacketRecord};
use crate::perturb::{inject_delay, inject_loss, DEFAULT_DELAY_SECS};
use crate::synth::{generate, ScenarioConfig, SynthError};

/// Which ground-truth rows an evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    /// Only the infrequent request classes: invoke, read, and write requests.
    UnusualOnly,
}

impl Subset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::UnusualOnly => "unusual",
        }
    }
}

/// Perturbation axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    Loss,
    Delay,
}

impl PerturbKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PerturbKind::Loss => "loss",
            PerturbKind::Delay => "delay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub kind: PerturbKind,
    pub level: f64,
}

/// One evaluation outcome: the confusion matrix plus aggregate metrics, all
/// in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub subset: Subset,
    /// Averaging convention used for precision/recall/F1.
    pub averaging: String,
    pub truth_classes: Vec<String>,
    pub pred_classes: Vec<String>,
    /// Rows follow `truth_classes`, columns `pred_classes`.
    pub confusion: Vec<Vec<u64>>,
    pub samples: u64,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_point: Option<SweepPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("misaligned traces: {0}")]
    MisalignedTraces(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

fn build_report(
    pairs: &[(String, String)],
    truth_classes: Vec<String>,
    pred_classes: Vec<String>,
    subset: Subset,
) -> Result<EvalReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::MisalignedTraces(
            "no samples to evaluate".into(),
        ));
    }
    let truth_index: BTreeMap<&str, usize> = truth_classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let pred_index: BTreeMap<&str, usize> = pred_classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut confusion = vec![vec![0u64; pred_classes.len()]; truth_classes.len()];
    let mut correct = 0u64;
    for (truth, pred) in pairs {
        let Some(&row) = truth_index.get(truth.as_str()) else {
            return Err(EvalError::MisalignedTraces(format!(
                "ground truth contains unexpected class {truth:?}"
            )));
        };
        let Some(&col) = pred_index.get(pred.as_str()) else {
            return Err(EvalError::MisalignedTraces(format!(
                "prediction contains unexpected class {pred:?}"
            )));
        };
        confusion[row][col] += 1;
        if truth == pred {
            correct += 1;
        }
    }

    let samples = pairs.len() as u64;
    let mut recalls = Vec::new();
    let mut precisions = Vec::new();
    let mut f1s = Vec::new();
    for (row, class) in truth_classes.iter().enumerate() {
        let truth_total: u64 = confusion[row].iter().sum();
        if truth_total == 0 {
            continue;
        }
        let col = pred_index[class.as_str()];
        let tp = confusion[row][col];
        let pred_total: u64 = confusion.iter().map(|r| r[col]).sum();
        let recall = tp as f64 / truth_total as f64;
        // A class never predicted has undefined precision; count it as zero.
        let precision = if pred_total == 0 {
            0.0
        } else {
            tp as f64 / pred_total as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        recalls.push(recall);
        precisions.push(precision);
        f1s.push(f1);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64 * 100.0;

    Ok(EvalReport {
        subset,
        averaging: "macro".into(),
        truth_classes,
        pred_classes,
        confusion,
        samples,
        accuracy: correct as f64 / samples as f64 * 100.0,
        recall: mean(&recalls),
        precision: mean(&precisions),
        f1: mean(&f1s),
        sweep_point: None,
        seed: None,
    })
}

/// Evaluates packet labels against ground truth keyed by message counter.
///
/// Samples are the predicted packets; every one must have a truth entry.
/// Truth entries without a surviving packet (lost packets) are not samples.
pub fn evaluate_labels(
    pred: &[(PacketRecord, InteractionLabel)],
    truth: &BTreeMap<u32, InteractionLabel>,
    subset: Subset,
) -> Result<EvalReport, EvalError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut pairs = Vec::new();
    for (record, label) in pred {
        let counter = record.message_counter;
        if !seen.insert(counter) {
            return Err(EvalError::MisalignedTraces(format!(
                "duplicate message counter {counter} in predictions"
            )));
        }
        let Some(truth_label) = truth.get(&counter) else {
            return Err(EvalError::MisalignedTraces(format!(
                "message counter {counter} has no ground-truth entry"
            )));
        };
        if *truth_label == InteractionLabel::Unknown {
            return Err(EvalError::MisalignedTraces(
                "ground truth contains the Unknown label".into(),
            ));
        }
        let in_subset = match subset {
            Subset::All => true,
            Subset::UnusualOnly => InteractionLabel::UNUSUAL.contains(truth_label),
        };
        if in_subset {
            pairs.push((truth_label.to_string(), label.to_string()));
        }
    }

    let truth_classes: Vec<String> = match subset {
        Subset::All => InteractionLabel::ALL
            .iter()
            .filter(|l| **l != InteractionLabel::Unknown)
            .map(|l| l.to_string())
            .collect(),
        Subset::UnusualOnly => InteractionLabel::UNUSUAL
            .iter()
            .map(|l| l.to_string())
            .collect(),
    };
    let pred_classes: Vec<String> = InteractionLabel::ALL.iter().map(|l| l.to_string()).collect();
    build_report(&pairs, truth_classes, pred_classes, subset)
}

/// Evaluates device classifications; each (device, day) is one sample.
pub fn evaluate_devices(
    pred: &BTreeMap<(String, i64), DeviceType>,
    truth: &BTreeMap<(String, i64), DeviceType>,
) -> Result<EvalReport, EvalError> {
    let mut pairs = Vec::new();
    for (key, predicted) in pred {
        let Some(expected) = truth.get(key) else {
            return Err(EvalError::MisalignedTraces(format!(
                "device-day ({}, {}) has no ground-truth entry",
                key.0, key.1
            )));
        };
        pairs.push((expected.to_string(), predicted.to_string()));
    }
    let classes: Vec<String> = DeviceType::ALL.iter().map(|t| t.to_string()).collect();
    build_report(&pairs, classes.clone(), classes, Subset::All)
}

/// Generates the scenario once per seed, perturbs it at every level, labels,
/// and evaluates both subsets. Reports come out ordered by (level, seed,
/// subset). The perturbation reuses the scenario seed, so levels are coupled
/// through common random numbers.
pub fn robustness_sweep(
    scenario: &ScenarioConfig,
    levels: &[f64],
    kind: PerturbKind,
    seeds: &[u64],
    rules: &RuleSet,
    window: f64,
) -> Result<Vec<EvalReport>, EvalError> {
    let mut generated = Vec::new();
    for &seed in seeds {
        let mut config = scenario.clone();
        config.seed = seed;
        generated.push((seed, generate(&config)?));
    }

    let mut reports = Vec::new();
    for &level in levels {
        for (seed, scenario_data) in &generated {
            let perturbed = match kind {
                PerturbKind::Loss => inject_loss(&scenario_data.records, level, *seed),
                PerturbKind::Delay => {
                    inject_delay(&scenario_data.records, level, DEFAULT_DELAY_SECS, *seed)
                }
            };
            let labeled = label_trace(&perturbed, &scenario_data.roles, rules, window);
            for subset in [Subset::All, Subset::UnusualOnly] {
                let mut report = evaluate_labels(&labeled, &scenario_data.truth.labels, subset)?;
                report.sweep_point = Some(SweepPoint { kind, level });
                report.seed = Some(*seed);
                reports.push(report);
            }
        }
    }
    Ok(reports)
}

/// Seed-averaged metrics for one (kind, level, subset) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: PerturbKind,
    pub level: f64,
    pub subset: Subset,
    pub seeds: usize,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub accuracy_std: f64,
}

/// Means (and accuracy standard deviation) across seeds, keeping the report
/// order of levels and subsets.
pub fn summarize_sweep(reports: &[EvalReport]) -> Vec<SweepRow> {
    let mut order: Vec<(PerturbKind, f64, Subset)> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&EvalReport>> = BTreeMap::new();
    for report in reports {
        let Some(point) = report.sweep_point else {
            continue;
        };
        let key = format!(
            "{}|{:.6}|{}",
            point.kind.as_str(),
            point.level,
            report.subset.as_str()
        );
        if !groups.contains_key(&key) {
            order.push((point.kind, point.level, report.subset));
        }
        groups.entry(key).or_default().push(report);
    }

    order
        .into_iter()
        .map(|(kind, level, subset)| {
            let key = format!("{}|{:.6}|{}", kind.as_str(), level, subset.as_str());
            let members = &groups[&key];
            let n = members.len() as f64;
            let mean = |f: fn(&EvalReport) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / n;
            let acc_mean = mean(|r| r.accuracy);
            let acc_var = members
                .iter()
                .map(|r| (r.accuracy - acc_mean).powi(2))
                .sum::<f64>()
                / n;
            SweepRow {
                kind,
                level,
                subset,
                seeds: members.len(),
                accuracy: acc_mean,
                recall: mean(|r| r.recall),
                precision: mean(|r| r.precision),
                f1: mean(|r| r.f1),
                accuracy_std: acc_var.sqrt(),
            }
        })
        .collect()
}

/// Plot-ready CSV with one row per sweep point and subset.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("level,subset,accuracy,recall,precision,f1\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{:.2}\n",
            row.level,
            row.subset.as_str(),
            row.accuracy,
            row.recall,
            row.precision,
            row.f1
        ));
    }
    out
}

/// The same CSV shape for plain (non-sweep) label reports, with `level` 0.
pub fn reports_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("level,subset,accuracy,recall,precision,f1\n");
    for report in reports {
        let level = report.sweep_point.map_or(0.0, |p| p.level);
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{:.2}\n",
            level,
            report.subset.as_str(),
            report.accuracy,
            report.recall,
            report.precision,
            report.f1
        ));
    }
    out
}
