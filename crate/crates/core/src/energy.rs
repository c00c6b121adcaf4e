//! Layout energy: bounding-box overlap, pairwise distance priors,
//! visibility corridors, wall distance/angle priors and pairwise angle priors.
//!
//! Terms are summed over ordered object pairs `(o, n)`, `o != n`, so each
//! symmetric pair term contributes twice. Visibility is summed over ordered
//! protected pairs `(o, n)` and every other object `m` as occluder. Angular
//! residuals are wrapped to `[-π, π)` before squaring.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{PairwisePrior, PriorSet, WallPrior};
use crate::scene::{
    center_distance, obb_half_diagonal, wrap_angle, ClassId, ClassTaxonomy, ObjectId, ObjectInstance, RoomShell,
    SceneLayout,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Bbox,
    Pairwise,
    Visibility,
    WallDistance,
    WallAngle,
    PairAngle,
}

impl Term {
    pub const ALL: [Term; 6] = [
        Term::Bbox,
        Term::Pairwise,
        Term::Visibility,
        Term::WallDistance,
        Term::WallAngle,
        Term::PairAngle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::Bbox => "bbox",
            Term::Pairwise => "pairwise",
            Term::Visibility => "visibility",
            Term::WallDistance => "wall_distance",
            Term::WallAngle => "wall_angle",
            Term::PairAngle => "pair_angle",
        }
    }

    /// Parses a term name; `wall` expands to both wall terms.
    pub fn parse_group(name: &str) -> Result<Vec<Term>> {
        match name.trim() {
            "wall" => Ok(vec![Term::WallDistance, Term::WallAngle]),
            other => Ok(vec![other.parse()?]),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Term::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown energy term `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyWeights {
    pub bbox: f64,
    pub alpha: f64,
    /// One weight shared by every protected-pair occluder term.
    pub visibility: f64,
    pub pair_angle: f64,
    /// Value used for `(bb/d)^α` when it would exceed this (including d = 0).
    pub rho_cap: f64,
    /// Subtract 1 from the outer branches of ρ and clamp at 0, making it continuous.
    pub smooth_rho: bool,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            bbox: 10.0,
            alpha: 2.0,
            visibility: 2.0,
            pair_angle: 0.5,
            rho_cap: 1e6,
            smooth_rho: false,
        }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.bbox >= 0.0 && self.visibility >= 0.0 && self.pair_angle >= 0.0) {
            return Err(Error::Parameter("energy weights must be non-negative".into()));
        }
        if !(self.alpha >= 1.0) {
            return Err(Error::Parameter(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if !(self.rho_cap > 0.0) {
            return Err(Error::Parameter("rho cap must be positive".into()));
        }
        Ok(())
    }
}

/// Weights, priors and protected visibility pairs for one energy evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    #[serde(default)]
    pub weights: EnergyWeights,
    #[serde(default)]
    pub pairwise: Vec<PairwisePrior>,
    #[serde(default)]
    pub wall: Vec<WallPrior>,
    /// Ordered (observer class, target class) pairs whose line of sight is kept clear.
    #[serde(default)]
    pub visibility_pairs: Vec<(ClassId, ClassId)>,
    /// Terms evaluated and reported but left out of the total.
    #[serde(default)]
    pub disabled: BTreeSet<Term>,
}

impl ConstraintSet {
    pub fn from_priors(priors: &PriorSet, weights: EnergyWeights, visibility_pairs: Vec<(ClassId, ClassId)>) -> Self {
        Self {
            weights,
            pairwise: priors.pairwise.clone(),
            wall: priors.wall.clone(),
            visibility_pairs,
            disabled: BTreeSet::new(),
        }
    }

    /// Bundled indoor priors, default weights, and sofa -> tv visibility.
    pub fn indoor_defaults(taxonomy: &ClassTaxonomy) -> Self {
        let pairs = match (taxonomy.id("sofa"), taxonomy.id("tv")) {
            (Some(sofa), Some(tv)) => vec![(sofa, tv)],
            _ => vec![],
        };
        Self::from_priors(&PriorSet::indoor_defaults(), EnergyWeights::default(), pairs)
    }

    pub fn validate(&self, taxonomy: &ClassTaxonomy) -> Result<()> {
        self.weights.validate()?;
        PriorSet {
            pairwise: self.pairwise.clone(),
            wall: self.wall.clone(),
            cooccurrence: None,
        }
        .validate(taxonomy)?;
        for &(a, b) in &self.visibility_pairs {
            if !taxonomy.contains(a) || !taxonomy.contains(b) {
                return Err(Error::Taxonomy(format!("visibility pair ({a}, {b}) references unknown class")));
            }
        }
        Ok(())
    }

    pub fn with_disabled(&self, terms: impl IntoIterator<Item = Term>) -> Self {
        let mut out = self.clone();
        out.disabled.extend(terms);
        out
    }

    pub fn is_enabled(&self, term: Term) -> bool {
        !self.disabled.contains(&term)
    }
}

/// Weighted value of each term plus the total over enabled terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bbox: f64,
    pub pairwise: f64,
    pub visibility: f64,
    pub wall_distance: f64,
    pub wall_angle: f64,
    pub pair_angle: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn component(&self, term: Term) -> f64 {
        match term {
            Term::Bbox => self.bbox,
            Term::Pairwise => self.pairwise,
            Term::Visibility => self.visibility,
            Term::WallDistance => self.wall_distance,
            Term::WallAngle => self.wall_angle,
            Term::PairAngle => self.pair_angle,
        }
    }

    fn component_mut(&mut self, term: Term) -> &mut f64 {
        match term {
            Term::Bbox => &mut self.bbox,
            Term::Pairwise => &mut self.pairwise,
            Term::Visibility => &mut self.visibility,
            Term::WallDistance => &mut self.wall_distance,
            Term::WallAngle => &mut self.wall_angle,
            Term::PairAngle => &mut self.pair_angle,
        }
    }

    fn finish(mut self, constraints: &ConstraintSet) -> Self {
        self.total = Term::ALL
            .into_iter()
            .filter(|&t| constraints.is_enabled(t))
            .map(|t| self.component(t))
            .sum();
        self
    }
}

/// `max(0, bb - d)` with `bb` the sum of footprint half-diagonals.
pub fn bbox_penalty(a: &ObjectInstance, b: &ObjectInstance) -> f64 {
    (obb_half_diagonal(a) + obb_half_diagonal(b) - center_distance(a, b)).max(0.0)
}

/// Piecewise pairwise distance function: `(bb/d)^α` below `bb`, zero on
/// `[bb, M]`, `(d/M)^α` above `M`.
pub fn rho(bb: f64, d: f64, max_distance: f64, weights: &EnergyWeights) -> f64 {
    let alpha = weights.alpha;
    let offset = if weights.smooth_rho { 1.0 } else { 0.0 };
    if d < bb {
        let v = if d <= 0.0 { weights.rho_cap } else { (bb / d).powf(alpha).min(weights.rho_cap) };
        (v - offset).max(0.0)
    } else if d > max_distance {
        ((d / max_distance).powf(alpha) - offset).max(0.0)
    } else {
        0.0
    }
}

/// Unweighted ρ for a pair of objects under `prior`.
pub fn pairwise_penalty(a: &ObjectInstance, b: &ObjectInstance, prior: &PairwisePrior, weights: &EnergyWeights) -> f64 {
    let bb = obb_half_diagonal(a) + obb_half_diagonal(b);
    rho(bb, center_distance(a, b), prior.max_distance, weights)
}

/// Box enclosing the footprints of an observer and its target, aligned with
/// the line joining their centers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityTriple {
    pub observer: ObjectId,
    pub target: ObjectId,
    pub center: Vector2<f64>,
    pub axis: Vector2<f64>,
    /// Lengths along `axis` and its perpendicular.
    pub extents: Vector2<f64>,
}

impl VisibilityTriple {
    pub fn new(observer: &ObjectInstance, target: &ObjectInstance) -> Result<Self> {
        if observer.id == target.id {
            return Err(Error::Parameter("visibility observer and target must differ".into()));
        }
        let delta = target.center() - observer.center();
        let axis = if delta.norm() > 0.0 { delta.normalize() } else { Vector2::x() };
        let perp = Vector2::new(-axis.y, axis.x);
        let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
        for p in observer.footprint_corners().iter().chain(target.footprint_corners().iter()) {
            let q = Vector2::new(p.dot(&axis), p.dot(&perp));
            lo = lo.inf(&q);
            hi = hi.sup(&q);
        }
        let mid = (lo + hi) / 2.0;
        Ok(Self {
            observer: observer.id,
            target: target.id,
            center: axis * mid.x + perp * mid.y,
            axis,
            extents: hi - lo,
        })
    }

    pub fn diagonal(&self) -> f64 {
        self.extents.x.hypot(self.extents.y)
    }
}

/// `weight * max(0, bb - d)` with `bb` = occluder half-diagonal + corridor
/// diagonal and `d` the occluder's distance to the corridor center.
pub fn visibility_penalty(triple: &VisibilityTriple, occluder: &ObjectInstance, weight: f64) -> f64 {
    let bb = obb_half_diagonal(occluder) + triple.diagonal();
    let d = (occluder.center() - triple.center).norm();
    weight * (bb - d).max(0.0)
}

/// Unweighted `(distance residual², angle residual²)` against the nearest wall.
pub fn wall_penalties(obj: &ObjectInstance, room: &RoomShell, prior: &WallPrior) -> (f64, f64) {
    let (wall, d) = room.nearest_wall(obj.center());
    let dd = d - prior.target_distance;
    let dtheta = wrap_angle(obj.pose.yaw() - (wall.inward_yaw + prior.target_angle));
    (dd * dd, dtheta * dtheta)
}

/// Squared wrapped difference between `yaw(a) - yaw(b)` and `target`.
pub fn pair_angle_penalty(a: &ObjectInstance, b: &ObjectInstance, target: f64) -> f64 {
    let r = wrap_angle(a.pose.yaw() - b.pose.yaw() - target);
    r * r
}

/// Constraint set with lookup tables built once for repeated evaluation.
#[derive(Clone, Debug)]
pub struct EnergyModel<'a> {
    constraints: &'a ConstraintSet,
    pairwise: HashMap<(ClassId, ClassId), &'a PairwisePrior>,
    wall: HashMap<ClassId, &'a WallPrior>,
}

impl<'a> EnergyModel<'a> {
    pub fn new(constraints: &'a ConstraintSet) -> Self {
        let mut pairwise = HashMap::new();
        for p in &constraints.pairwise {
            pairwise.entry(p.classes()).or_insert(p);
        }
        let mut wall = HashMap::new();
        for w in &constraints.wall {
            wall.entry(w.class).or_insert(w);
        }
        Self {
            constraints,
            pairwise,
            wall,
        }
    }

    pub fn constraints(&self) -> &ConstraintSet {
        self.constraints
    }

    pub fn pairwise_prior(&self, a: ClassId, b: ClassId) -> Option<&'a PairwisePrior> {
        self.pairwise.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn wall_prior(&self, class: ClassId) -> Option<&'a WallPrior> {
        self.wall.get(&class).copied()
    }

    fn is_protected(&self, observer: ClassId, target: ClassId) -> bool {
        self.constraints.visibility_pairs.contains(&(observer, target))
    }

    /// Number of prior-bearing relations among `objects`: pairs with a
    /// pairwise prior, ordered protected pairs and objects with a wall prior.
    pub fn relation_count(&self, objects: &[ObjectInstance]) -> usize {
        let mut count = 0;
        for (i, o) in objects.iter().enumerate() {
            for (j, n) in objects.iter().enumerate() {
                if i == j {
                    continue;
                }
                if i < j && self.pairwise_prior(o.class, n.class).is_some() {
                    count += 1;
                }
                if self.is_protected(o.class, n.class) {
                    count += 1;
                }
            }
            if self.wall_prior(o.class).is_some() {
                count += 1;
            }
        }
        count
    }

    /// Energy of `objects` in `room`.
    pub fn evaluate(&self, room: &RoomShell, objects: &[ObjectInstance]) -> EnergyBreakdown {
        let w = &self.constraints.weights;
        let mut e = EnergyBreakdown::default();
        for (i, o) in objects.iter().enumerate() {
            for (j, n) in objects.iter().enumerate() {
                if i == j {
                    continue;
                }
                e.bbox += w.bbox * bbox_penalty(o, n);
                if let Some(prior) = self.pairwise_prior(o.class, n.class) {
                    e.pairwise += prior.weight * pairwise_penalty(o, n, prior, w);
                    if let Some(target) = prior.target_angle {
                        let oriented = if o.class <= n.class { target } else { -target };
                        e.pair_angle += w.pair_angle * pair_angle_penalty(o, n, oriented);
                    }
                }
                if self.is_protected(o.class, n.class) {
                    let triple = VisibilityTriple::new(o, n).expect("distinct objects");
                    for (k, m) in objects.iter().enumerate() {
                        if k != i && k != j {
                            e.visibility += visibility_penalty(&triple, m, w.visibility);
                        }
                    }
                }
            }
            if let Some(prior) = self.wall_prior(o.class) {
                let (dist, angle) = wall_penalties(o, room, prior);
                e.wall_distance += prior.weight_distance * dist;
                e.wall_angle += prior.weight_angle * angle;
            }
        }
        e.finish(self.constraints)
    }

    pub fn evaluate_layout(&self, layout: &SceneLayout) -> EnergyBreakdown {
        self.evaluate(&layout.room, &layout.objects)
    }
}

/// Total layout energy with its per-term breakdown.
pub fn total_energy(layout: &SceneLayout, constraints: &ConstraintSet) -> EnergyBreakdown {
    EnergyModel::new(constraints).evaluate_layout(layout)
}

impl EnergyBreakdown {
    /// Adds `value` to `term` (used by callers assembling breakdowns by hand).
    pub fn add(&mut self, term: Term, value: f64) {
        *self.component_mut(term) += value;
    }

    /// Recomputes the total for `constraints`' enabled terms.
    pub fn totalled(self, constraints: &ConstraintSet) -> Self {
        self.finish(constraints)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Pose2D;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn obj(id: u32, class: u16, x: f64, y: f64, yaw: f64, hx: f64, hy: f64) -> ObjectInstance {
        ObjectInstance::new(id, ClassId(class), [hx, hy, 0.4], Pose2D::new(x, y, yaw))
    }

    fn with_half_diag(id: u32, x: f64, hd: f64) -> ObjectInstance {
        let h = hd / 2f64.sqrt();
        obj(id, 4, x, 0.0, 0.0, h, h)
    }

    #[test]
    fn bbox_examples() {
        assert_eq!(bbox_penalty(&with_half_diag(0, 0.0, 1.0), &with_half_diag(1, 3.0, 1.0)), 0.0);
        assert_relative_eq!(bbox_penalty(&with_half_diag(0, 0.0, 1.0), &with_half_diag(1, 1.0, 1.0)), 1.0, epsilon = 1e-12);
        assert_relative_eq!(bbox_penalty(&with_half_diag(0, 0.0, 1.0), &with_half_diag(1, 0.0, 1.0)), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rho_branches() {
        let w = EnergyWeights::default();
        assert_eq!(rho(2.0, 3.0, 4.0, &w), 0.0);
        assert_eq!(rho(2.0, 1.0, 4.0, &w), 4.0);
        assert_eq!(rho(2.0, 8.0, 4.0, &w), 4.0);
        // boundaries belong to the zero branch
        assert_eq!(rho(2.0, 2.0, 4.0, &w), 0.0);
        assert_eq!(rho(2.0, 4.0, 4.0, &w), 0.0);
        // literal form jumps to 1 just outside the band
        assert!((rho(2.0, 2.0 - 1e-9, 4.0, &w) - 1.0).abs() < 1e-6);
        assert!((rho(2.0, 4.0 + 1e-9, 4.0, &w) - 1.0).abs() < 1e-6);
        assert_eq!(rho(2.0, 0.0, 4.0, &w), 1e6);
    }

    #[test]
    fn smooth_rho_is_continuous() {
        let w = EnergyWeights {
            smooth_rho: true,
            ..Default::default()
        };
        assert!(rho(2.0, 2.0 - 1e-9, 4.0, &w) < 1e-6);
        assert!(rho(2.0, 4.0 + 1e-9, 4.0, &w) < 1e-6);
        assert_relative_eq!(rho(2.0, 1.0, 4.0, &w), 3.0);
    }

    #[test]
    fn pairwise_penalty_uses_footprints() {
        let prior = PairwisePrior::new(ClassId(4), ClassId(4), 4.0, None, 1.0).unwrap();
        let w = EnergyWeights::default();
        assert_eq!(pairwise_penalty(&with_half_diag(0, 0.0, 1.0), &with_half_diag(1, 3.0, 1.0), &prior, &w), 0.0);
        assert_relative_eq!(
            pairwise_penalty(&with_half_diag(0, 0.0, 1.0), &with_half_diag(1, 1.0, 1.0), &prior, &w),
            4.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            pairwise_penalty(&with_half_diag(0, 0.0, 1.0), &with_half_diag(1, 8.0, 1.0), &prior, &w),
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn visibility_examples() {
        // unit-square sofa and tv 3 m apart
        let o = obj(0, 11, 0.0, 0.0, 0.0, 0.5, 0.5);
        let n = obj(1, 10, 3.0, 0.0, 0.0, 0.5, 0.5);
        let t = VisibilityTriple::new(&o, &n).unwrap();
        // combined box spans x in [-0.5, 3.5], y in [-0.5, 0.5]
        assert_relative_eq!(t.extents.x, 4.0, epsilon = 1e-12);
        assert_relative_eq!(t.extents.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.center.x, 1.5, epsilon = 1e-12);
        assert_relative_eq!(t.center.y, 0.0, epsilon = 1e-12);

        let far = obj(2, 8, 50.0, 0.0, 0.0, 0.3, 0.3);
        assert_eq!(visibility_penalty(&t, &far, 2.0), 0.0);

        // chair at the corridor midpoint: bb = hd(chair) + diag, d = 0
        let chair = obj(2, 8, 1.5, 0.0, 0.0, 0.3, 0.3);
        let expected = (0.3f64.hypot(0.3) + 17f64.sqrt()) * 2.0;
        assert_relative_eq!(visibility_penalty(&t, &chair, 2.0), expected, epsilon = 1e-12);

        // chair offset 1 m sideways from the midpoint
        let chair = obj(2, 8, 1.5, 1.0, 0.0, 0.3, 0.3);
        let expected = (0.3f64.hypot(0.3) + 17f64.sqrt() - 1.0) * 2.0;
        assert_relative_eq!(visibility_penalty(&t, &chair, 2.0), expected, epsilon = 1e-12);

        assert!(VisibilityTriple::new(&o, &o).is_err());
    }

    #[test]
    fn visibility_coincident_centers() {
        // corridor diagonal 4 from a degenerate pair stacked on each other
        let s = 4.0 / 2f64.sqrt() / 2.0;
        let o = obj(0, 11, 0.0, 0.0, 0.0, s, s);
        let n = obj(1, 10, 0.0, 0.0, 0.0, s, s);
        let t = VisibilityTriple::new(&o, &n).unwrap();
        assert_relative_eq!(t.diagonal(), 4.0, epsilon = 1e-12);
        let m = with_half_diag(2, 0.0, 1.0);
        assert_relative_eq!(visibility_penalty(&t, &m, 1.5), 5.0 * 1.5, epsilon = 1e-12);
    }

    #[test]
    fn wall_examples() {
        let room = RoomShell::new(5.0, 4.0, 2.5).unwrap();
        let prior = WallPrior {
            class: ClassId(4),
            target_distance: 0.4,
            target_angle: 0.0,
            weight_distance: 1.0,
            weight_angle: 1.0,
        };
        assert_eq!(wall_penalties(&obj(0, 4, 0.4, 2.0, 0.0, 0.2, 0.2), &room, &prior), (0.0, 0.0));
        let (d, a) = wall_penalties(&obj(0, 4, 1.0, 2.0, 0.0, 0.2, 0.2), &room, &prior);
        assert_relative_eq!(d, 0.36, epsilon = 1e-12);
        assert_eq!(a, 0.0);
        let (_, a) = wall_penalties(&obj(0, 4, 0.4, 2.0, PI / 2.0, 0.2, 0.2), &room, &prior);
        assert_relative_eq!(a, (PI / 2.0).powi(2), epsilon = 1e-12);
        // east wall faces -x
        let (d, a) = wall_penalties(&obj(0, 4, 4.6, 2.0, PI, 0.2, 0.2), &room, &prior);
        assert!(d < 1e-20 && a < 1e-20);
    }

    #[test]
    fn pair_angle_examples_and_wrap_grid() {
        assert!(pair_angle_penalty(&obj(0, 1, 0.0, 0.0, 0.3, 1.0, 1.0), &obj(1, 1, 0.0, 0.0, 0.1, 1.0, 1.0), 0.2) < 1e-24);
        assert_relative_eq!(
            pair_angle_penalty(&obj(0, 1, 0.0, 0.0, PI / 2.0, 1.0, 1.0), &obj(1, 1, 0.0, 0.0, -PI / 2.0, 1.0, 1.0), 0.0),
            PI * PI,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            pair_angle_penalty(&obj(0, 1, 0.0, 0.0, -PI + 0.1, 1.0, 1.0), &obj(1, 1, 0.0, 0.0, 0.0, 1.0, 1.0), PI - 0.1),
            0.04,
            epsilon = 1e-12
        );
        // oracle: smallest squared distance over 2π-shifts, checked on a grid
        for i in 0..72 {
            for j in 0..72 {
                let rel = -PI + i as f64 * (2.0 * PI / 72.0);
                let target = -PI + j as f64 * (2.0 * PI / 72.0) + 0.013;
                let oracle = (-3..=3)
                    .map(|k| (rel - target + 2.0 * PI * k as f64).powi(2))
                    .fold(f64::INFINITY, f64::min);
                let a = obj(0, 1, 0.0, 0.0, rel, 1.0, 1.0);
                let b = obj(1, 1, 0.0, 0.0, 0.0, 1.0, 1.0);
                assert_relative_eq!(pair_angle_penalty(&a, &b, target), oracle, epsilon = 1e-9);
            }
        }
    }

    fn room() -> RoomShell {
        RoomShell::new(4.0, 3.0, 2.5).unwrap()
    }

    #[test]
    fn total_energy_trivial_cases() {
        let c = ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor());
        let empty = SceneLayout::new(room(), vec![], vec![]).unwrap();
        assert_eq!(total_energy(&empty, &c), EnergyBreakdown::default());
        let single = SceneLayout::new(room(), vec![obj(0, 13, 2.0, 1.5, 0.0, 0.2, 0.2)], vec![]).unwrap();
        assert_eq!(total_energy(&single, &c).total, 0.0);
    }

    #[test]
    fn total_energy_bed_nightstand_by_hand() {
        let bed = obj(0, 4, 1.2, 1.5, 0.3, 1.0, 0.8);
        let stand = obj(1, 5, 2.6, 1.0, 0.0, 0.25, 0.25);
        let layout = SceneLayout::new(room(), vec![bed, stand], vec![]).unwrap();
        let mut c = ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor());
        c.pairwise = vec![PairwisePrior::new(ClassId(4), ClassId(5), 1.2, None, 1.5).unwrap()];
        c.wall = vec![WallPrior {
            class: ClassId(4),
            target_distance: 1.0,
            target_angle: 0.0,
            weight_distance: 2.0,
            weight_angle: 0.7,
        }];
        // hand computation
        let hd_bed = (1.0f64 + 0.64).sqrt();
        let hd_stand = (0.0625f64 * 2.0).sqrt();
        let bb = hd_bed + hd_stand;
        let d = (1.4f64 * 1.4 + 0.25).sqrt();
        let bbox = 2.0 * 10.0 * (bb - d).max(0.0);
        let rho = if d < bb { (bb / d).powi(2) } else if d > 1.2 { (d / 1.2).powi(2) } else { 0.0 };
        let pairwise = 2.0 * 1.5 * rho;
        // bed centre (1.2, 1.5): nearest wall is west at 1.2 m, inward yaw 0
        let wall_distance = 2.0 * (1.2f64 - 1.0).powi(2);
        let wall_angle = 0.7 * 0.3f64.powi(2);
        let e = total_energy(&layout, &c);
        assert_relative_eq!(e.bbox, bbox, epsilon = 1e-9);
        assert_relative_eq!(e.pairwise, pairwise, epsilon = 1e-9);
        assert_relative_eq!(e.wall_distance, wall_distance, epsilon = 1e-9);
        assert_relative_eq!(e.wall_angle, wall_angle, epsilon = 1e-9);
        assert_eq!(e.visibility, 0.0);
        assert_relative_eq!(e.total, bbox + pairwise + wall_distance + wall_angle, epsilon = 1e-9);
    }

    #[test]
    fn disabled_terms_reported_but_excluded() {
        let layout = SceneLayout::new(
            room(),
            vec![obj(0, 4, 1.0, 1.0, 0.0, 1.0, 0.8), obj(1, 5, 1.1, 1.0, 0.0, 0.25, 0.25)],
            vec![],
        )
        .unwrap();
        let c = ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor());
        let full = total_energy(&layout, &c);
        let ablated = total_energy(&layout, &c.with_disabled([Term::Bbox]));
        assert_eq!(ablated.bbox, full.bbox);
        assert_relative_eq!(ablated.total, full.total - full.bbox, epsilon = 1e-9);
    }

    #[test]
    fn term_parsing() {
        assert_eq!(Term::parse_group("wall").unwrap(), vec![Term::WallDistance, Term::WallAngle]);
        assert_eq!("visibility".parse::<Term>().unwrap(), Term::Visibility);
        assert!("nope".parse::<Term>().is_err());
        let c: ConstraintSet = serde_json::from_str(r#"{"disabled":["pairwise"],"visibility_pairs":[[11,10]]}"#).unwrap();
        assert!(!c.is_enabled(Term::Pairwise));
        assert_eq!(c.weights, EnergyWeights::default());
    }

    fn arb_object(id: u32) -> impl Strategy<Value = ObjectInstance> {
        (4u16..12, 0.0..6.0f64, 0.0..5.0f64, -PI..PI, 0.1..1.2f64, 0.1..1.2f64)
            .prop_map(move |(c, x, y, yaw, hx, hy)| obj(id, c, x, y, yaw, hx, hy))
    }

    fn arb_layout() -> impl Strategy<Value = SceneLayout> {
        proptest::collection::vec(any::<u8>(), 0..6).prop_flat_map(|v| {
            let n = v.len() as u32;
            (0..n)
                .map(arb_object)
                .collect::<Vec<_>>()
                .prop_map(|objects| SceneLayout::new(RoomShell::new(6.0, 5.0, 2.5).unwrap(), objects, vec![]).unwrap())
        })
    }

    fn constraints() -> ConstraintSet {
        let mut c = ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor());
        c.pairwise
            .push(PairwisePrior::new(ClassId(10), ClassId(11), 3.0, Some(PI), 1.0).unwrap());
        c.visibility_pairs.push((ClassId(8), ClassId(9)));
        c
    }

    proptest! {
        #[test]
        fn all_terms_non_negative(layout in arb_layout()) {
            let e = total_energy(&layout, &constraints());
            for t in Term::ALL {
                prop_assert!(e.component(t) >= 0.0);
            }
            prop_assert!(e.total >= 0.0);
        }

        #[test]
        fn pair_terms_symmetric(a in arb_object(0), b in arb_object(1)) {
            prop_assert_eq!(bbox_penalty(&a, &b), bbox_penalty(&b, &a));
            let prior = PairwisePrior::new(a.class, b.class, 2.0, None, 1.0).unwrap();
            let w = EnergyWeights::default();
            prop_assert_eq!(pairwise_penalty(&a, &b, &prior, &w), pairwise_penalty(&b, &a, &prior, &w));
        }

        #[test]
        fn rigid_translation_invariance(layout in arb_layout(), dx in -3.0..3.0f64, dy in -3.0..3.0f64) {
            let c = constraints();
            let base = total_energy(&layout, &c);
            let moved = layout.translated(Vector2::new(dx, dy));
            let shifted = total_energy(&moved, &c);
            for t in [Term::Bbox, Term::Pairwise, Term::Visibility, Term::PairAngle] {
                prop_assert!((base.component(t) - shifted.component(t)).abs() <= 1e-9 * (1.0 + base.component(t)));
            }
        }

        #[test]
        fn total_is_sum_of_enabled(layout in arb_layout(), mask in 0u8..64) {
            let disabled: Vec<Term> = Term::ALL.into_iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| t).collect();
            let c = constraints().with_disabled(disabled.clone());
            let e = total_energy(&layout, &c);
            let sum: f64 = Term::ALL.into_iter().filter(|t| !disabled.contains(t)).map(|t| e.component(t)).sum();
            prop_assert!((e.total - sum).abs() <= 1e-12 * (1.0 + sum.abs()));
        }
    }
}
