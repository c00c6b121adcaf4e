//! Statistical priors that parameterize the layout energy: class
//! co-occurrence, recommended pairwise distances and wall placement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::LabelFrame;
use crate::scene::{center_distance, ClassId, ClassTaxonomy, SceneLayout};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PairwiseRepr {
    classes: [ClassId; 2],
    max_distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_angle: Option<f64>,
    #[serde(default = "one")]
    weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Recommended maximum center distance for an unordered class pair, with an
/// optional relative-yaw target. The pair is stored smaller id first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairwiseRepr", into = "PairwiseRepr")]
pub struct PairwisePrior {
    classes: (ClassId, ClassId),
    pub max_distance: f64,
    /// Target for `yaw(lower class) - yaw(higher class)`.
    pub target_angle: Option<f64>,
    pub weight: f64,
}

impl PairwisePrior {
    pub fn new(a: ClassId, b: ClassId, max_distance: f64, target_angle: Option<f64>, weight: f64) -> Result<Self> {
        if !(max_distance > 0.0 && max_distance.is_finite()) {
            return Err(Error::Parameter(format!("pairwise max distance must be positive, got {max_distance}")));
        }
        if !(weight >= 0.0) {
            return Err(Error::Parameter("pairwise weight must be non-negative".into()));
        }
        Ok(Self {
            classes: (a.min(b), a.max(b)),
            max_distance,
            target_angle,
            weight,
        })
    }

    pub fn classes(&self) -> (ClassId, ClassId) {
        self.classes
    }

    pub fn matches(&self, a: ClassId, b: ClassId) -> bool {
        self.classes == (a.min(b), a.max(b))
    }
}

impl TryFrom<PairwiseRepr> for PairwisePrior {
    type Error = Error;

    fn try_from(r: PairwiseRepr) -> Result<Self> {
        PairwisePrior::new(r.classes[0], r.classes[1], r.max_distance, r.target_angle, r.weight)
    }
}

impl From<PairwisePrior> for PairwiseRepr {
    fn from(p: PairwisePrior) -> Self {
        PairwiseRepr {
            classes: [p.classes.0, p.classes.1],
            max_distance: p.max_distance,
            target_angle: p.target_angle,
            weight: p.weight,
        }
    }
}

/// Preferred distance and heading relative to the nearest wall for one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallPrior {
    pub class: ClassId,
    pub target_distance: f64,
    /// Offset from the wall's inward normal.
    pub target_angle: f64,
    pub weight_distance: f64,
    pub weight_angle: f64,
}

impl WallPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_distance >= 0.0) || !(self.weight_distance >= 0.0) || !(self.weight_angle >= 0.0) {
            return Err(Error::Parameter(format!(
                "wall prior for class {} needs non-negative distance and weights",
                self.class
            )));
        }
        Ok(())
    }
}

/// Symmetric class co-occurrence counts over a corpus of layouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoOccurrenceMatrix {
    counts: Vec<Vec<u64>>,
}

impl CoOccurrenceMatrix {
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, a: ClassId, b: ClassId) -> u64 {
        self.counts[a.index()][b.index()]
    }

    /// Row-stochastic form; all-zero rows stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }
}

/// Counts, per class pair, the layouts containing both classes. The
/// diagonal counts layouts holding at least two instances of a class.
pub fn cooccurrence_from_layouts(layouts: &[SceneLayout], taxonomy: &ClassTaxonomy) -> Result<CoOccurrenceMatrix> {
    if layouts.is_empty() {
        return Err(Error::EmptyInput("no layouts"));
    }
    let k = taxonomy.len();
    let mut counts = vec![vec![0u64; k]; k];
    for layout in layouts {
        let mut present = vec![0usize; k];
        for obj in &layout.objects {
            if !taxonomy.contains(obj.class) {
                return Err(Error::Taxonomy(format!("class {} not in taxonomy", obj.class)));
            }
            present[obj.class.index()] += 1;
        }
        for i in 0..k {
            for j in 0..k {
                let hit = if i == j { present[i] >= 2 } else { present[i] >= 1 && present[j] >= 1 };
                if hit {
                    counts[i][j] += 1;
                }
            }
        }
    }
    Ok(CoOccurrenceMatrix { counts })
}

/// Linearly interpolated percentile of sorted samples (`rank = q (n - 1)`).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub const MAX_DISTANCE_PERCENTILE: f64 = 0.9;

/// Derives one [`PairwisePrior`] per class pair that co-occurs in at least
/// `min_support` layouts. `M` is the 90th percentile of observed center
/// distances between instances of the two classes.
pub fn pairwise_priors_from_layouts(layouts: &[SceneLayout], min_support: usize) -> Result<Vec<PairwisePrior>> {
    if min_support == 0 {
        return Err(Error::Parameter("min support must be at least 1".into()));
    }
    let mut support: BTreeMap<(ClassId, ClassId), usize> = BTreeMap::new();
    let mut distances: BTreeMap<(ClassId, ClassId), Vec<f64>> = BTreeMap::new();
    for layout in layouts {
        let mut seen = std::collections::BTreeSet::new();
        for (i, a) in layout.objects.iter().enumerate() {
            for b in &layout.objects[i + 1..] {
                let key = (a.class.min(b.class), a.class.max(b.class));
                distances.entry(key).or_default().push(center_distance(a, b));
                seen.insert(key);
            }
        }
        for key in seen {
            *support.entry(key).or_default() += 1;
        }
    }
    let mut priors = Vec::new();
    for (key, mut samples) in distances {
        if support[&key] < min_support {
            continue;
        }
        samples.sort_by(f64::total_cmp);
        let m = percentile_sorted(&samples, MAX_DISTANCE_PERCENTILE).expect("non-empty");
        if m > 0.0 {
            priors.push(PairwisePrior::new(key.0, key.1, m, None, 1.0)?);
        }
    }
    Ok(priors)
}

/// Fraction of labelled (non-background) pixels per class.
pub fn class_frequency(frames: &[LabelFrame], taxonomy: &ClassTaxonomy) -> Result<Vec<f64>> {
    let mut counts = vec![0u64; taxonomy.len()];
    let background = taxonomy.background();
    for frame in frames {
        for &c in frame.data() {
            if c == background {
                continue;
            }
            if !taxonomy.contains(c) {
                return Err(Error::Taxonomy(format!("label {c} not in taxonomy")));
            }
            counts[c.index()] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoLabelledPixels);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Serialized prior bundle: `{ "pairwise": [...], "wall": [...], "cooccurrence": [[...]] }`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorSet {
    #[serde(default)]
    pub pairwise: Vec<PairwisePrior>,
    #[serde(default)]
    pub wall: Vec<WallPrior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooccurrence: Option<CoOccurrenceMatrix>,
}

const INDOOR_PRIORS: &str = include_str!("../data/indoor_priors.json");

impl PriorSet {
    /// Bundled priors for common furniture pairs (bed/wardrobe, bed/nightstand,
    /// chair/table, table/tv, desk/chair) keyed to [`ClassTaxonomy::indoor`].
    pub fn indoor_defaults() -> Self {
        serde_json::from_str(INDOOR_PRIORS).expect("bundled priors parse")
    }

    pub fn validate(&self, taxonomy: &ClassTaxonomy) -> Result<()> {
        for p in &self.pairwise {
            let (a, b) = p.classes();
            if !taxonomy.contains(a) || !taxonomy.contains(b) {
                return Err(Error::Taxonomy(format!("pairwise prior references unknown class ({a}, {b})")));
            }
        }
        for w in &self.wall {
            w.validate()?;
            if !taxonomy.contains(w.class) {
                return Err(Error::Taxonomy(format!("wall prior references unknown class {}", w.class)));
            }
        }
        Ok(())
    }
}
