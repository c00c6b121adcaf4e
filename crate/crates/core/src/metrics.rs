//! Per-pixel segmentation scoring and prediction confidence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, LabelFrame};
use crate::scene::{ClassId, ClassTaxonomy};

/// Rows are ground truth, columns predictions. Pixels whose ground truth is
/// `background` are counted in `ignored` only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    background: ClassId,
    counts: Vec<u64>,
    ignored: u64,
}

impl ConfusionMatrix {
    pub fn new(classes: usize, background: ClassId) -> Self {
        Self {
            classes,
            background,
            counts: vec![0; classes * classes],
            ignored: 0,
        }
    }

    pub fn for_taxonomy(taxonomy: &ClassTaxonomy) -> Self {
        Self::new(taxonomy.len(), taxonomy.background())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, gt: ClassId, pred: ClassId) -> u64 {
        self.counts[gt.index() * self.classes + pred.index()]
    }

    pub fn ignored(&self) -> u64 {
        self.ignored
    }

    pub fn counted(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, gt: ClassId) -> u64 {
        let start = gt.index() * self.classes;
        self.counts[start..start + self.classes].iter().sum()
    }

    fn check(&self, id: ClassId) -> Result<()> {
        if id.index() >= self.classes {
            return Err(Error::Taxonomy(format!("class id {} outside a {}-class matrix", id.0, self.classes)));
        }
        Ok(())
    }

    /// Adds every pixel of a frame pair; on error the matrix is unchanged.
    pub fn accumulate(&mut self, gt: &LabelFrame, pred: &LabelFrame) -> Result<()> {
        pred.ensure_dims(gt.dims())?;
        for (&g, &p) in gt.data().iter().zip(pred.data()) {
            self.check(g)?;
            self.check(p)?;
        }
        for (&g, &p) in gt.data().iter().zip(pred.data()) {
            if g == self.background {
                self.ignored += 1;
            } else {
                self.counts[g.index() * self.classes + p.index()] += 1;
            }
        }
        Ok(())
    }

    /// Sum of two matrices over the same classes.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if (self.classes, self.background) != (other.classes, other.background) {
            return Err(Error::Parameter("confusion matrices cover different class sets".into()));
        }
        Ok(Self {
            classes: self.classes,
            background: self.background,
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            ignored: self.ignored + other.ignored,
        })
    }
}

/// Trace over counted pixels.
pub fn global_accuracy(m: &ConfusionMatrix) -> Result<f64> {
    let counted = m.counted();
    if counted == 0 {
        return Err(Error::NoLabelledPixels);
    }
    let trace: u64 = (0..m.classes).map(|i| m.counts[i * m.classes + i]).sum();
    Ok(trace as f64 / counted as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    /// Recall per class id; `None` for classes absent from ground truth.
    pub recall: Vec<Option<f64>>,
    /// Mean over classes with support.
    pub mean: f64,
}

pub fn class_accuracy(m: &ConfusionMatrix) -> Result<ClassAccuracy> {
    if m.counted() == 0 {
        return Err(Error::NoLabelledPixels);
    }
    let recall: Vec<Option<f64>> = (0..m.classes)
        .map(|i| {
            let support = m.row_sum(ClassId(i as u16));
            (support > 0).then(|| m.counts[i * m.classes + i] as f64 / support as f64)
        })
        .collect();
    let supported: Vec<f64> = recall.iter().flatten().copied().collect();
    Ok(ClassAccuracy {
        mean: supported.iter().sum::<f64>() / supported.len() as f64,
        recall,
    })
}

/// Per-pixel probability vectors over `classes` classes, stored pixel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ProbabilityMap {
    /// Each pixel's entries must be non-negative and sum to 1 within 1e-6.
    pub fn new(width: usize, height: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * classes || classes == 0 {
            return Err(Error::Parameter(format!(
                "probability data has {} entries, expected {width}x{height}x{classes}",
                data.len()
            )));
        }
        for (i, p) in data.chunks_exact(classes).enumerate() {
            let sum: f64 = p.iter().sum();
            if p.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Parameter(format!("pixel {i} is not a probability vector (sum {sum})")));
            }
        }
        Ok(Self {
            width,
            height,
            classes,
            data,
        })
    }

    /// Normalizes non-negative scores per pixel.
    pub fn from_scores(width: usize, height: usize, classes: usize, mut scores: Vec<f64>) -> Result<Self> {
        if classes == 0 || scores.len() != width * height * classes {
            return Err(Error::Parameter("score data does not match dimensions".into()));
        }
        for p in scores.chunks_exact_mut(classes) {
            let sum: f64 = p.iter().sum();
            if !(sum > 0.0) || p.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::Parameter("scores must be non-negative with a positive sum".into()));
            }
            p.iter_mut().for_each(|v| *v /= sum);
        }
        Self::new(width, height, classes, scores)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.classes;
        &self.data[start..start + self.classes]
    }

    fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.classes)
    }
}

/// Most probable class per pixel; ties go to the lowest id.
pub fn argmax(probs: &ProbabilityMap) -> LabelFrame {
    let data = probs
        .pixels()
        .map(|p| {
            let mut best = 0;
            for (i, &v) in p.iter().enumerate() {
                if v > p[best] {
                    best = i;
                }
            }
            ClassId(best as u16)
        })
        .collect();
    Frame::from_vec(probs.width, probs.height, data).expect("dims match")
}

/// Second-largest over largest probability per pixel; 1 on ties, 0 for one-hot.
pub fn confidence_ratio(probs: &ProbabilityMap) -> Result<Frame<f64>> {
    if probs.classes < 2 {
        return Err(Error::Parameter("confidence ratio needs at least two classes".into()));
    }
    let data = probs
        .pixels()
        .map(|p| {
            let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &v in p {
                if v > first {
                    second = first;
                    first = v;
                } else if v > second {
                    second = v;
                }
            }
            second / first
        })
        .collect();
    Frame::from_vec(probs.width, probs.height, data)
}

/// Scores keyed by class name, as written by the `eval` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub global: f64,
    pub mean_class: f64,
    pub per_class: BTreeMap<String, Option<f64>>,
    pub counted: u64,
    pub ignored: u64,
}

impl EvalReport {
    pub fn new(m: &ConfusionMatrix, taxonomy: &ClassTaxonomy) -> Result<Self> {
        let ca = class_accuracy(m)?;
        let per_class = taxonomy
            .iter()
            .filter(|(id, _)| *id != taxonomy.background())
            .map(|(id, name)| (name.to_string(), ca.recall.get(id.index()).copied().flatten()))
            .collect();
        Ok(Self {
            global: global_accuracy(m)?,
            mean_class: ca.mean,
            per_class,
            counted: m.counted(),
            ignored: m.ignored(),
        })
    }
}
