//! Accuracy, t-based confidence intervals, per-keyword false-alarm /
//! false-reject curves, their vertical average and the area under them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::{class_name, KEYWORDS};
use crate::error::{Error, Result};
use crate::numerics::argmax;

/// Tolerance on the posterior sum.
pub const POSTERIOR_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRecord {
    pub id: String,
    pub true_class: usize,
    pub posterior: Vec<f64>,
}

impl PosteriorRecord {
    pub fn new(id: impl Into<String>, true_class: usize, posterior: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if posterior.is_empty() || true_class >= posterior.len() {
            return Err(Error::LabelOutOfRange {
                label: true_class,
                classes: posterior.len(),
            });
        }
        if posterior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Eval(format!(
                "{id}: posterior has negative or non-finite entries"
            )));
        }
        let sum: f64 = posterior.iter().sum();
        if (sum - 1.0).abs() > POSTERIOR_SUM_TOLERANCE {
            return Err(Error::Eval(format!("{id}: posterior sums to {sum}")));
        }
        Ok(Self {
            id,
            true_class,
            posterior,
        })
    }

    /// Predicted class; ties go to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(&self.posterior)
    }
}

pub fn accuracy(records: &[PosteriorRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Eval("accuracy of an empty record set".into()));
    }
    let correct = records
        .iter()
        .filter(|r| r.predicted() == r.true_class)
        .count();
    Ok(correct as f64 / records.len() as f64)
}

/// Mean and 95% Student-t half-width of a set of run accuracies.
pub fn confidence_interval(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Eval(format!(
            "confidence interval needs at least 2 values, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| Error::Eval(e.to_string()))?
        .inverse_cdf(0.975);
    Ok((mean, t * var.sqrt() / nf.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// `None` for points of a vertically averaged curve.
    pub threshold: Option<f64>,
    pub false_alarm_rate: f64,
    pub false_reject_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Keyword name, or `"overall"`.
    pub label: String,
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Tab-separated `threshold, far, frr` lines with a header. Averaged
    /// points have threshold `nan`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("threshold\tfar\tfrr\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                p.threshold.unwrap_or(f64::NAN),
                p.false_alarm_rate,
                p.false_reject_rate
            );
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::from(e).at(path))
    }
}

/// `n` evenly spaced thresholds from 0 to 1 inclusive.
pub fn threshold_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// The 101-point grid plus one threshold just above 1, where every example
/// is rejected.
pub fn roc_thresholds() -> Vec<f64> {
    let mut t = threshold_grid(101);
    t.push(1.0 + f64::EPSILON);
    t
}

/// Accept an example as `keyword` iff its posterior for that class is at
/// least the threshold. Every example of another class is a negative.
pub fn roc_keyword(
    records: &[PosteriorRecord],
    keyword: usize,
    thresholds: &[f64],
) -> Result<RocCurve> {
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Eval(
            "thresholds must be finite and ascending".into(),
        ));
    }
    if let Some(r) = records.iter().find(|r| keyword >= r.posterior.len()) {
        return Err(Error::LabelOutOfRange {
            label: keyword,
            classes: r.posterior.len(),
        });
    }
    let mut positives: Vec<f64> = Vec::new();
    let mut negatives: Vec<f64> = Vec::new();
    for r in records {
        let score = r.posterior[keyword];
        if r.true_class == keyword {
            positives.push(score);
        } else {
            negatives.push(score);
        }
    }
    let label = class_name(keyword);
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Eval(format!(
            "keyword {label} needs positives and negatives (got {} and {})",
            positives.len(),
            negatives.len()
        )));
    }
    positives.sort_by(f64::total_cmp);
    negatives.sort_by(f64::total_cmp);
    let below = |sorted: &[f64], t: f64| sorted.partition_point(|&s| s < t);
    let points = thresholds
        .iter()
        .map(|&t| RocPoint {
            threshold: Some(t),
            false_alarm_rate: (negatives.len() - below(&negatives, t)) as f64
                / negatives.len() as f64,
            false_reject_rate: below(&positives, t) as f64 / positives.len() as f64,
        })
        .collect();
    Ok(RocCurve {
        label: label.to_string(),
        points,
    })
}

/// Curves for all ten keywords on the same thresholds.
pub fn roc_keywords(records: &[PosteriorRecord], thresholds: &[f64]) -> Result<Vec<RocCurve>> {
    (0..KEYWORDS.len())
        .map(|k| roc_keyword(records, k, thresholds))
        .collect()
}

/// A curve as a monotone polyline over FAR: points ascending in FAR and, at
/// equal FAR, descending in FRR. Missing end points are anchored at (0, 1)
/// and (1, 0).
fn polyline(curve: &RocCurve) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .map(|p| (p.false_alarm_rate, p.false_reject_rate))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    if pts.first().is_none_or(|p| p.0 > 0.0) {
        pts.insert(0, (0.0, 1.0));
    }
    if pts.last().is_none_or(|p| p.0 < 1.0) {
        pts.push((1.0, 0.0));
    }
    pts
}

/// FRR of a polyline at `far` as (highest, lowest): the two differ only where
/// the curve has a vertical segment at exactly `far`.
pub fn interpolate_frr(line: &[(f64, f64)], far: f64) -> (f64, f64) {
    let start = line.partition_point(|p| p.0 < far);
    let end = line.partition_point(|p| p.0 <= far);
    if start < end {
        return (line[start].1, line[end - 1].1);
    }
    if start == 0 {
        return (line[0].1, line[0].1);
    }
    if start == line.len() {
        let last = line[line.len() - 1].1;
        return (last, last);
    }
    let (a, b) = (line[start - 1], line[start]);
    let frr = a.1 + (b.1 - a.1) * (far - a.0) / (b.0 - a.0);
    (frr, frr)
}

/// Vertical average of keyword curves. Every curve is linearly interpolated
/// onto the union of all their FAR values and the FRRs are averaged per grid
/// point. Points run from FAR 1 down to FAR 0 so FRR is non-decreasing along
/// the curve, like a keyword curve in threshold order.
pub fn roc_overall(curves: &[RocCurve]) -> Result<RocCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Eval("vertical average of no curves".into()))?;
    let grid_of = |c: &RocCurve| c.points.iter().map(|p| p.threshold).collect::<Vec<_>>();
    let thresholds = grid_of(first);
    if let Some(c) = curves.iter().find(|c| grid_of(c) != thresholds) {
        return Err(Error::Eval(format!(
            "curve {} uses a different threshold grid from {}",
            c.label, first.label
        )));
    }
    let lines: Vec<Vec<(f64, f64)>> = curves.iter().map(polyline).collect();
    let mut grid: Vec<f64> = lines.iter().flatten().map(|p| p.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let n = lines.len() as f64;
    let mut points = Vec::with_capacity(grid.len() * 2);
    for &far in grid.iter().rev() {
        let (mut lo, mut hi) = (0.0, 0.0);
        for line in &lines {
            let (h, l) = interpolate_frr(line, far);
            hi += h;
            lo += l;
        }
        let (lo, hi) = (lo / n, hi / n);
        points.push(RocPoint {
            threshold: None,
            false_alarm_rate: far,
            false_reject_rate: lo,
        });
        if hi > lo {
            points.push(RocPoint {
                threshold: None,
                false_alarm_rate: far,
                false_reject_rate: hi,
            });
        }
    }
    Ok(RocCurve {
        label: "overall".into(),
        points,
    })
}

/// Trapezoidal area under FRR as a function of FAR. Points must be monotone
/// in FAR (either direction) and reach both 0 and 1.
pub fn auc(curve: &RocCurve) -> Result<f64> {
    let far: Vec<f64> = curve.points.iter().map(|p| p.false_alarm_rate).collect();
    let (Some(&head), Some(&tail)) = (far.first(), far.last()) else {
        return Err(Error::Eval(format!("curve {} has no points", curve.label)));
    };
    let ascending = far.windows(2).all(|w| w[0] <= w[1]);
    let descending = far.windows(2).all(|w| w[0] >= w[1]);
    if !ascending && !descending {
        return Err(Error::Eval(format!(
            "curve {} is not sorted by false alarm rate",
            curve.label
        )));
    }
    if head.min(tail) != 0.0 || head.max(tail) != 1.0 {
        return Err(Error::Eval(format!(
            "curve {} spans false alarm rates {}..{}, not 0..1",
            curve.label,
            head.min(tail),
            head.max(tail)
        )));
    }
    let area: f64 = curve
        .points
        .windows(2)
        .map(|w| {
            (w[1].false_alarm_rate - w[0].false_alarm_rate).abs()
                * (w[0].false_reject_rate + w[1].false_reject_rate)
                / 2.0
        })
        .sum();
    Ok(area)
}

/// One tab-separated line per record: id, true class, posteriors.
pub fn posteriors_to_tsv(records: &[PosteriorRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = write!(out, "{}\t{}", r.id, r.true_class);
        for p in &r.posterior {
            let _ = write!(out, "\t{p}");
        }
        out.push('\n');
    }
    out
}

pub fn posteriors_from_tsv(text: &str) -> Result<Vec<PosteriorRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let bad = |what: &str| Error::Eval(format!("posterior line {}: {what}", n + 1));
            let mut fields = line.split('\t');
            let id = fields.next().ok_or_else(|| bad("missing id"))?;
            let class = fields
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .ok_or_else(|| bad("bad true class"))?;
            let posterior = fields
                .map(|f| f.parse::<f64>().map_err(|_| bad("bad posterior value")))
                .collect::<Result<Vec<_>>>()?;
            PosteriorRecord::new(id, class, posterior)
        })
        .collect()
}

pub fn write_posteriors(path: &Path, records: &[PosteriorRecord]) -> Result<()> {
    fs::write(path, posteriors_to_tsv(records)).map_err(|e| Error::from(e).at(path))
}

pub fn read_posteriors(path: &Path) -> Result<Vec<PosteriorRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
    posteriors_from_tsv(&text).map_err(|e| e.at(path))
}
