//! ROC analysis and evaluation reports.

use std::fs;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use crate::audio::{Label, LabeledClip};
use crate::classifier::Network;
use crate::error::{Error, Result};
use crate::features::FeatureMode;
use crate::pipeline::{analyze, config_from_model};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Scores `>= threshold` are called positive.
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Descending threshold; starts at (0, 0) with an infinite threshold and
    /// ends at (1, 1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC with one point per distinct score. Tied scores move together, so ties
/// contribute a diagonal segment and AUC counts them as one half.
pub fn roc(scores: &[(f64, bool)]) -> Result<RocCurve> {
    if scores.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let pos = scores.iter().filter(|(_, l)| *l).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            tpr: tp as f64 / pos as f64,
            fpr: fp as f64 / neg as f64,
        });
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Lowest false-positive rate among thresholds reaching `target_tpr`.
pub fn fpr_at_tpr(curve: &RocCurve, target_tpr: f64) -> Result<OperatingPoint> {
    if !(target_tpr > 0.0 && target_tpr <= 1.0) {
        return Err(Error::Config(format!(
            "target TPR must be in (0, 1], got {target_tpr}"
        )));
    }
    curve
        .points
        .iter()
        .filter(|p| p.tpr >= target_tpr)
        .min_by(|a, b| a.fpr.total_cmp(&b.fpr))
        .map(|p| OperatingPoint {
            fpr: p.fpr,
            tpr: p.tpr,
            threshold: p.threshold,
        })
        .ok_or_else(|| Error::Config(format!("no threshold reaches TPR {target_tpr}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipScore {
    pub id: String,
    pub label: Label,
    pub score: f64,
}

/// Operating TPR used in summaries.
pub const REPORT_TPR: f64 = 0.90;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub mode: FeatureMode,
    pub scores: Vec<ClipScore>,
    pub curve: RocCurve,
    pub operating: OperatingPoint,
    /// Clips whose pipeline run failed; they are left out of the scores.
    pub failures: usize,
}

/// Scores clips with one model, replaying the pipeline settings stored in it.
/// Output order follows the input; failed clips are logged and skipped.
pub fn score_clips(model: &Network, clips: &[LabeledClip]) -> Result<(Vec<ClipScore>, usize)> {
    let cfg = config_from_model(model)?;
    let results: Vec<Result<ClipScore>> = clips
        .par_iter()
        .map(|lc| {
            let analysis = analyze(&lc.clip, &cfg)?;
            let score = model.forward(&analysis.features(cfg.features).values)?;
            Ok(ClipScore {
                id: lc.clip.id(),
                label: lc.label,
                score,
            })
        })
        .collect();
    let mut scores = Vec::with_capacity(clips.len());
    let mut failures = 0;
    for (lc, r) in clips.iter().zip(results) {
        match r {
            Ok(s) => scores.push(s),
            Err(e) => {
                warn!("clip {} failed: {e}", lc.clip.id());
                failures += 1;
            }
        }
    }
    Ok((scores, failures))
}

pub fn report_from_scores(mode: FeatureMode, scores: Vec<ClipScore>, failures: usize) -> Result<ModeReport> {
    let pairs: Vec<(f64, bool)> = scores.iter().map(|s| (s.score, s.label.is_positive())).collect();
    let curve = roc(&pairs)?;
    let operating = fpr_at_tpr(&curve, REPORT_TPR)?;
    Ok(ModeReport {
        mode,
        scores,
        curve,
        operating,
        failures,
    })
}

/// Evaluates one or more models (typically one per feature mode) on a
/// labeled set. Reports come back in table order: combined20, diagonal5, mask15.
pub fn evaluate_models(models: &[Network], clips: &[LabeledClip]) -> Result<Vec<ModeReport>> {
    if clips.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    if models.is_empty() {
        return Err(Error::Empty("model list"));
    }
    let mut reports = models
        .iter()
        .map(|m| {
            let mode = config_from_model(m)?.features;
            let (scores, failures) = score_clips(m, clips)?;
            report_from_scores(mode, scores, failures)
        })
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by_key(|r| FeatureMode::ALL.iter().position(|&m| m == r.mode));
    Ok(reports)
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,tpr,fpr\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.tpr, p.fpr));
    }
    out
}

pub fn scores_csv(scores: &[ClipScore]) -> String {
    let mut out = String::from("clip,label,score\n");
    for s in scores {
        out.push_str(&format!("{},{},{}\n", s.id, s.label, s.score));
    }
    out
}

/// Table of AUC and FPR at the report TPR, one row per mode.
pub fn summary_text(reports: &[ModeReport]) -> String {
    let mut out = format!(
        "{:<12} {:>8} {:>8} {:>8} {:>12} {:>8} {:>9}\n",
        "features", "auc", "fpr%", "tpr%", "threshold", "clips", "failures"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<12} {:>8.4} {:>8.2} {:>8.2} {:>12.6} {:>8} {:>9}\n",
            r.mode.name(),
            r.curve.auc,
            100.0 * r.operating.fpr,
            100.0 * r.operating.tpr,
            r.operating.threshold,
            r.scores.len(),
            r.failures
        ));
    }
    out
}

/// Writes `scores_<mode>.csv`, `roc_<mode>.csv` and `summary.txt`.
pub fn write_report(dir: &Path, reports: &[ModeReport]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    for r in reports {
        write(format!("scores_{}.csv", r.mode), scores_csv(&r.scores))?;
        write(format!("roc_{}.csv", r.mode), roc_csv(&r.curve))?;
    }
    write("summary.txt".into(), summary_text(reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_scores() {
        let s = [(0.9, true), (0.8, true), (0.3, false), (0.1, false)];
        let c = roc(&s).unwrap();
        assert_eq!(c.auc, 1.0);
        assert_eq!(fpr_at_tpr(&c, 0.9).unwrap().fpr, 0.0);
        assert_eq!(fpr_at_tpr(&c, 0.9).unwrap().threshold, 0.8);
        let first = c.points[0];
        let last = *c.points.last().unwrap();
        assert_eq!((first.tpr, first.fpr), (0.0, 0.0));
        assert_eq!((last.tpr, last.fpr), (1.0, 1.0));
    }

    #[test]
    fn hand_set_auc() {
        let s = [(0.9, true), (0.8, false), (0.7, true), (0.1, false)];
        assert_eq!(roc(&s).unwrap().auc, 0.75);
    }

    #[test]
    fn ties_share_a_point() {
        let s = [(0.5, true), (0.5, false), (0.2, false)];
        let c = roc(&s).unwrap();
        assert_eq!(c.points.len(), 3);
        assert_eq!(c.auc, 0.75);
    }

    #[test]
    fn step_semantics() {
        // 20 positives: 17 above 0.5, 2 at 0.5, 1 below; 10 negatives
        let mut s: Vec<(f64, bool)> = (0..17).map(|i| (0.9 - i as f64 * 0.01, true)).collect();
        s.push((0.5, true));
        s.push((0.5, true));
        s.push((0.5, false));
        s.push((0.1, true));
        s.extend((0..9).map(|i| (0.3 - i as f64 * 0.01, false)));
        let c = roc(&s).unwrap();
        let op = fpr_at_tpr(&c, 0.90).unwrap();
        assert_eq!(op.threshold, 0.5);
        assert_eq!(op.tpr, 0.95);
        assert_eq!(op.fpr, 0.1);
    }

    #[test]
    fn errors() {
        assert!(matches!(roc(&[(0.1, true)]), Err(Error::SingleClass)));
        assert!(roc(&[(f64::NAN, true), (0.2, false)]).is_err());
        let c = roc(&[(0.1, true), (0.2, false)]).unwrap();
        assert!(fpr_at_tpr(&c, 0.0).is_err());
        assert!(evaluate_models(&[], &[]).is_err());
    }

    #[test]
    fn roc_csv_shape() {
        let c = roc(&[(0.75, true), (0.25, false)]).unwrap();
        assert_eq!(roc_csv(&c), "threshold,tpr,fpr\ninf,0,0\n0.75,1,0\n0.25,1,1\n");
    }
}
