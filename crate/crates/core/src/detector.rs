//! Threshold selection on sorted training errors, classification and
//! detection metrics. Attack is the positive class throughout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{forward, reconstruction_error, Label, ModelParams, Sample};

/// Training reconstruction errors in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurve {
    sorted: Vec<f64>,
}

impl ErrorCurve {
    pub fn new(mut errors: Vec<f64>) -> Result<Self> {
        if let Some(e) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::InvalidArgument(format!("reconstruction error {e} is not a finite non-negative value")));
        }
        errors.sort_by(f64::total_cmp);
        Ok(Self { sorted: errors })
    }

    /// Errors of every sample under `params`, computed in parallel.
    pub fn from_model(params: &ModelParams, samples: &[Sample]) -> Result<Self> {
        Self::new(reconstruction_errors(params, samples)?)
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

pub fn reconstruction_errors(params: &ModelParams, samples: &[Sample]) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| reconstruction_error(params, &s.features))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ThresholdMethod {
    /// Point of the curve farthest from the chord joining its endpoints,
    /// with both axes rescaled to `[0, 1]`.
    KneeMaxChordDistance,
    /// `q`-th percentile, `q` in `[0, 100]`, linear interpolation.
    Percentile(f64),
}

impl ThresholdMethod {
    pub fn name(&self) -> String {
        match self {
            ThresholdMethod::KneeMaxChordDistance => "knee".into(),
            ThresholdMethod::Percentile(q) => format!("percentile:{q}"),
        }
    }

    /// Parses `knee` or `percentile:<q>`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "knee" {
            return Ok(ThresholdMethod::KneeMaxChordDistance);
        }
        if let Some(q) = s.strip_prefix("percentile:") {
            let q: f64 = q
                .parse()
                .map_err(|_| Error::Config(format!("bad percentile '{q}'")))?;
            if (0.0..=100.0).contains(&q) {
                return Ok(ThresholdMethod::Percentile(q));
            }
        }
        Err(Error::Config(format!("unknown threshold method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub tau: f64,
    pub method: ThresholdMethod,
    /// Set when every training error is equal and the knee is undefined.
    pub degenerate: bool,
    /// Index into the sorted curve the knee was taken from.
    pub index: Option<usize>,
}

/// Index of the knee: maximal `|x_i - y_i|` on normalized axes, first index
/// on ties. `None` when the curve is flat.
pub fn knee_index(sorted: &[f64]) -> Option<usize> {
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    if hi <= lo {
        return None;
    }
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for (i, &e) in sorted.iter().enumerate() {
        let x = i as f64 / (n - 1) as f64;
        let y = (e - lo) / (hi - lo);
        let d = (x - y).abs();
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    Some(best)
}

/// Linear-interpolation percentile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn select_threshold(curve: &ErrorCurve, method: ThresholdMethod) -> Result<Threshold> {
    let e = curve.sorted();
    match method {
        ThresholdMethod::KneeMaxChordDistance => {
            if e.len() < 3 {
                return Err(Error::InvalidArgument(format!(
                    "knee threshold needs at least 3 errors, got {}",
                    e.len()
                )));
            }
            Ok(match knee_index(e) {
                Some(i) => Threshold {
                    tau: e[i],
                    method,
                    degenerate: false,
                    index: Some(i),
                },
                None => Threshold {
                    tau: e[0],
                    method,
                    degenerate: true,
                    index: None,
                },
            })
        }
        ThresholdMethod::Percentile(q) => {
            if e.is_empty() {
                return Err(Error::Empty("error curve"));
            }
            if !(0.0..=100.0).contains(&q) {
                return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 100]")));
            }
            Ok(Threshold {
                tau: percentile(e, q),
                method,
                degenerate: e[0] == e[e.len() - 1],
                index: None,
            })
        }
    }
}

/// Attack iff the error strictly exceeds `tau`.
pub fn label_for_error(r: f64, tau: f64) -> Label {
    if r > tau {
        Label::Attack
    } else {
        Label::Natural
    }
}

pub fn classify(params: &ModelParams, x: &[f64], tau: f64) -> Result<Label> {
    Ok(label_for_error(reconstruction_error(params, x)?, tau))
}

/// Class probabilities of a model with a softmax head and the arg-max
/// label (ties go to Natural).
pub fn softmax_classify(params: &ModelParams, x: &[f64]) -> Result<(Label, [f64; 2])> {
    if !params.has_softmax_head() {
        return Err(Error::InvalidArgument("model has no softmax head".into()));
    }
    let trace = forward(params, x)?;
    let p = trace.output();
    let probs = [p[0], p[1]];
    let label = if probs[1] > probs[0] {
        Label::Attack
    } else {
        Label::Natural
    };
    Ok((label, probs))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn add(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Attack, Label::Attack) => self.tp += 1,
            (Label::Attack, Label::Natural) => self.fp += 1,
            (Label::Natural, Label::Natural) => self.tn += 1,
            (Label::Natural, Label::Attack) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Metrics derived from a confusion matrix. A zero denominator yields 0
/// and sets the matching `*_undefined` flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f_score_undefined: bool,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

impl Metrics {
    pub fn from_confusion(c: &Confusion) -> Self {
        let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
        let (accuracy, _) = ratio(tp + tn, c.total() as f64);
        let (precision, precision_undefined) = ratio(tp, tp + fp);
        let (recall, recall_undefined) = ratio(tp, tp + fn_);
        let (f_score, f_score_undefined) = ratio(2.0 * precision * recall, precision + recall);
        Self {
            accuracy,
            precision,
            recall,
            f_score,
            precision_undefined,
            recall_undefined,
            f_score_undefined,
        }
    }
}

/// One scored test sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    /// Reconstruction error, or attack probability on the softmax path.
    pub score: f64,
    pub predicted: Label,
    pub truth: Label,
    pub source: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub confusion: Confusion,
    pub metrics: Metrics,
    pub per_sample: Vec<ScoredSample>,
}

impl DetectionReport {
    pub fn from_scored(per_sample: Vec<ScoredSample>) -> Result<Self> {
        if per_sample.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let mut confusion = Confusion::default();
        for s in &per_sample {
            confusion.add(s.predicted, s.truth);
        }
        Ok(Self {
            confusion,
            metrics: Metrics::from_confusion(&confusion),
            per_sample,
        })
    }

    /// Metrics restricted to each source id.
    pub fn by_source(&self) -> BTreeMap<u32, (Confusion, Metrics)> {
        let mut groups: BTreeMap<u32, Confusion> = BTreeMap::new();
        for s in &self.per_sample {
            groups.entry(s.source).or_default().add(s.predicted, s.truth);
        }
        groups
            .into_iter()
            .map(|(k, c)| (k, (c, Metrics::from_confusion(&c))))
            .collect()
    }

    /// `key=value` lines: `n`, `tp`, `fp`, `tn`, `fn`, `accuracy`,
    /// `precision`, `recall`, `f_score` and the three `*_undefined` flags.
    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        let m = &self.metrics;
        let mut s = String::new();
        let _ = writeln!(s, "n={}", c.total());
        let _ = writeln!(s, "tp={}", c.tp);
        let _ = writeln!(s, "fp={}", c.fp);
        let _ = writeln!(s, "tn={}", c.tn);
        let _ = writeln!(s, "fn={}", c.fn_);
        let _ = writeln!(s, "accuracy={}", m.accuracy);
        let _ = writeln!(s, "precision={}", m.precision);
        let _ = writeln!(s, "recall={}", m.recall);
        let _ = writeln!(s, "f_score={}", m.f_score);
        let _ = writeln!(s, "precision_undefined={}", m.precision_undefined);
        let _ = writeln!(s, "recall_undefined={}", m.recall_undefined);
        let _ = writeln!(s, "f_score_undefined={}", m.f_score_undefined);
        s
    }

    /// CSV with header `index,source,score,predicted,truth`.
    pub fn per_sample_csv(&self) -> String {
        let mut s = String::from("index,source,score,predicted,truth\n");
        for (i, r) in self.per_sample.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{}",
                r.source,
                r.score,
                r.predicted.as_str(),
                r.truth.as_str()
            );
        }
        s
    }
}

/// Threshold detector over `test`.
pub fn evaluate(params: &ModelParams, test: &[Sample], tau: f64) -> Result<DetectionReport> {
    let errors = reconstruction_errors(params, test)?;
    DetectionReport::from_scored(
        errors
            .into_iter()
            .zip(test)
            .map(|(r, s)| ScoredSample {
                score: r,
                predicted: label_for_error(r, tau),
                truth: s.label,
                source: s.source,
            })
            .collect(),
    )
}

/// Softmax-head classifier over `test`.
pub fn evaluate_softmax(params: &ModelParams, test: &[Sample]) -> Result<DetectionReport> {
    let scored = test
        .par_iter()
        .map(|s| {
            let (predicted, p) = softmax_classify(params, &s.features)?;
            Ok(ScoredSample {
                score: p[1],
                predicted,
                truth: s.label,
                source: s.source,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DetectionReport::from_scored(scored)
}
