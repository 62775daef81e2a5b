//! Localization and classification metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoints::{match_detections, Pose2D, PoseRecord};
use crate::regressor::LocalizationEstimate;

pub const DEFAULT_BIN_EDGES: [f64; 5] = [0.0, 10.0, 20.0, 30.0, f64::INFINITY];
pub const DEFAULT_ALA_THRESHOLDS: [f64; 3] = [0.5, 1.0, 2.0];
pub const DEFAULT_IOU: f64 = 0.3;

/// Box heights (px) at which instances count as easy and moderate.
pub const EASY_MIN_HEIGHT: f64 = 40.0;
pub const MODERATE_MIN_HEIGHT: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lo: f64,
    /// `None` for an open upper end.
    pub hi: Option<f64>,
    pub count: usize,
    /// Mean absolute distance error, meters.
    pub ale: f64,
    /// Mean ground-truth distance of the bin's instances.
    pub mean_distance: f64,
}

impl BinStats {
    pub fn label(&self) -> String {
        match self.hi {
            Some(hi) => format!("[{}, {})", self.lo, hi),
            None => format!("[{}, inf)", self.lo),
        }
    }
}

/// Mean |d_pred - d_gt| per distance bin of the ground truth. `pairs` holds
/// `(d_pred, d_gt)`. Empty bins are left out.
pub fn ale(pairs: &[(f64, f64)], edges: &[f64]) -> Result<Vec<BinStats>> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("ALE needs at least one matched pair".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("bin edges must be strictly increasing".into()));
    }
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (mut n, mut err, mut d) = (0usize, 0.0, 0.0);
        for &(pred, gt) in pairs {
            if gt >= lo && gt < hi {
                n += 1;
                err += (pred - gt).abs();
                d += gt;
            }
        }
        if n > 0 {
            out.push(BinStats {
                lo,
                hi: hi.is_finite().then_some(hi),
                count: n,
                ale: err / n as f64,
                mean_distance: d / n as f64,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlaReport {
    /// `(threshold m, accuracy %)`.
    pub accuracy: Vec<(f64, f64)>,
    /// Matched ground truths, %.
    pub recall: f64,
}

/// Share of all ground truths localized within each threshold; unmatched
/// ground truths count as wrong.
pub fn ala(errors: &[f64], unmatched: usize, thresholds: &[f64]) -> Result<AlaReport> {
    if thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("thresholds must be positive".into()));
    }
    let total = errors.len() + unmatched;
    if total == 0 {
        return Err(Error::InvalidArgument("no ground truths".into()));
    }
    let accuracy = thresholds
        .iter()
        .map(|&t| (t, 100.0 * errors.iter().filter(|e| e.abs() <= t).count() as f64 / total as f64))
        .collect();
    Ok(AlaReport { accuracy, recall: 100.0 * errors.len() as f64 / total as f64 })
}

/// Percentage of instances with `|error| <= U`.
pub fn interval_recall(errors: &[f64], u: &[f64]) -> Result<f64> {
    if errors.len() != u.len() {
        return Err(Error::ShapeMismatch { expected: errors.len(), got: u.len() });
    }
    if errors.is_empty() {
        return Err(Error::InvalidArgument("no instances".into()));
    }
    let inside = errors.iter().zip(u).filter(|(e, u)| e.abs() <= **u).count();
    Ok(100.0 * inside as f64 / errors.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScore {
    pub accuracy: f64,
    /// Recall of the positive class, %; 100 when there are no positives.
    pub recall: f64,
    pub count: usize,
}

pub fn classification_accuracy(predicted: &[bool], labels: &[bool]) -> Result<ClassificationScore> {
    if predicted.len() != labels.len() {
        return Err(Error::ShapeMismatch { expected: labels.len(), got: predicted.len() });
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no instances".into()));
    }
    let correct = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    let positives = labels.iter().filter(|l| **l).count();
    let hits = predicted.iter().zip(labels).filter(|(p, l)| **p && **l).count();
    Ok(ClassificationScore {
        accuracy: 100.0 * correct as f64 / labels.len() as f64,
        recall: if positives == 0 { 100.0 } else { 100.0 * hits as f64 / positives as f64 },
        count: labels.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
}

/// Category by keypoint-box height; a truncated pose (any joint missing)
/// drops one level.
pub fn difficulty(pose: &Pose2D) -> Difficulty {
    let h = pose.bounding_box().map(|b| b.height()).unwrap_or(0.0);
    let base = if h >= EASY_MIN_HEIGHT {
        Difficulty::Easy
    } else if h >= MODERATE_MIN_HEIGHT {
        Difficulty::Moderate
    } else {
        Difficulty::Hard
    };
    if pose.keypoints.iter().any(|k| !k.visible()) {
        match base {
            Difficulty::Easy => Difficulty::Moderate,
            _ => Difficulty::Hard,
        }
    } else {
        base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub pose: Pose2D,
    pub estimate: LocalizationEstimate,
    pub scene: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyStats {
    pub difficulty: Option<Difficulty>,
    pub ground_truths: usize,
    pub matched: usize,
    pub ale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ground_truths: usize,
    pub matched: usize,
    pub bins: Vec<BinStats>,
    pub ala: AlaReport,
    /// `% of matched ground truths within d +- b d`.
    pub interval_recall_b: Option<f64>,
    /// `% within d +- sigma`.
    pub interval_recall_sigma: Option<f64>,
    /// Easy, moderate, hard, then all.
    pub difficulty: Vec<DifficultyStats>,
}

/// Matches predictions to labeled records scene by scene (IoU of keypoint
/// boxes) and computes every localization metric.
pub fn evaluate(preds: &[Prediction], gts: &[PoseRecord], iou: f64) -> Result<EvalReport> {
    let mut by_scene: BTreeMap<Option<u64>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        by_scene.entry(p.scene).or_default().0.push(i);
    }
    for (j, g) in gts.iter().enumerate() {
        if g.gt.is_none() {
            return Err(Error::InvalidArgument(format!("record {j} has no ground truth")));
        }
        by_scene.entry(g.scene).or_default().1.push(j);
    }
    // (pred index, gt index)
    let mut pairs = Vec::new();
    for (pi, gi) in by_scene.values() {
        let dp: Vec<Pose2D> = pi.iter().map(|&i| preds[i].pose).collect();
        let gp: Vec<Pose2D> = gi.iter().map(|&j| gts[j].pose).collect();
        for m in match_detections(&dp, &gp, iou)? {
            pairs.push((pi[m.detection], gi[m.ground_truth]));
        }
    }
    pairs.sort_unstable_by_key(|&(_, j)| j);
    let gt_distance = |j: usize| {
        let x = gts[j].gt.as_ref().expect("checked").xyz;
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    };
    let dist_pairs: Vec<(f64, f64)> = pairs.iter().map(|&(i, j)| (preds[i].estimate.d, gt_distance(j))).collect();
    let errors: Vec<f64> = dist_pairs.iter().map(|(p, g)| p - g).collect();
    let bins = if dist_pairs.is_empty() { Vec::new() } else { ale(&dist_pairs, &DEFAULT_BIN_EDGES)? };
    let ala = ala(&errors, gts.len() - pairs.len(), &DEFAULT_ALA_THRESHOLDS)?;
    let recall_with = |u: &dyn Fn(&LocalizationEstimate) -> Option<f64>| -> Result<Option<f64>> {
        let us: Option<Vec<f64>> = pairs.iter().map(|&(i, _)| u(&preds[i].estimate)).collect();
        match us {
            Some(us) if !us.is_empty() => interval_recall(&errors, &us).map(Some),
            _ => Ok(None),
        }
    };
    let interval_recall_b = recall_with(&|e| e.spread_m())?;
    let interval_recall_sigma = recall_with(&|e| e.sigma)?;

    let mut difficulty_rows = Vec::new();
    let matched_gt: BTreeMap<usize, f64> = pairs.iter().zip(&errors).map(|(&(_, j), &e)| (j, e)).collect();
    for level in [Some(Difficulty::Easy), Some(Difficulty::Moderate), Some(Difficulty::Hard), None] {
        let members: Vec<usize> =
            (0..gts.len()).filter(|&j| level.is_none_or(|l| difficulty(&gts[j].pose) == l)).collect();
        let errs: Vec<f64> = members.iter().filter_map(|j| matched_gt.get(j).copied()).collect();
        difficulty_rows.push(DifficultyStats {
            difficulty: level,
            ground_truths: members.len(),
            matched: errs.len(),
            ale: (!errs.is_empty()).then(|| errs.iter().map(|e| e.abs()).sum::<f64>() / errs.len() as f64),
        });
    }
    Ok(EvalReport {
        ground_truths: gts.len(),
        matched: pairs.len(),
        bins,
        ala,
        interval_recall_b,
        interval_recall_sigma,
        difficulty: difficulty_rows,
    })
}
