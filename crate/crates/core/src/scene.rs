//! Domain types shared by every stage: class taxonomy, planar poses, placed
//! objects, the room shell and the layout that the annealer optimizes.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        wrapped -= 2.0 * PI;
    }
    wrapped
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u16);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TaxonomyEntry {
    id: u16,
    name: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TaxonomyRepr {
    classes: Vec<TaxonomyEntry>,
    background: u16,
}

/// Ordered set of semantic classes with dense ids `0..K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TaxonomyRepr", into = "TaxonomyRepr")]
pub struct ClassTaxonomy {
    names: Vec<String>,
    background: ClassId,
}

impl ClassTaxonomy {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, background: ClassId) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Taxonomy("no classes".into()));
        }
        if names.len() > u16::MAX as usize {
            return Err(Error::Taxonomy("too many classes".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Taxonomy(format!("duplicate class name `{name}`")));
            }
        }
        if background.index() >= names.len() {
            return Err(Error::Taxonomy(format!("background id {background} out of range")));
        }
        Ok(Self { names, background })
    }

    /// Indoor label set used by the bundled presets. Id 0 is the void class.
    pub fn indoor() -> Self {
        Self::new(
            [
                "void", "wall", "floor", "ceiling", "bed", "nightstand", "wardrobe", "desk", "chair",
                "table", "tv", "sofa", "monitor", "lamp", "shelf", "plant",
            ],
            ClassId(0),
        )
        .expect("static taxonomy is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn background(&self) -> ClassId {
        self.background
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<ClassId> {
        self.names.iter().position(|n| n == name).map(|i| ClassId(i as u16))
    }

    pub fn contains(&self, id: ClassId) -> bool {
        id.index() < self.names.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (ClassId(i as u16), n.as_str()))
    }

    /// Room-shell classes plus background; these never count as "objects" in a view.
    pub fn structural(&self) -> Vec<ClassId> {
        let mut ids = vec![self.background];
        ids.extend(["wall", "floor", "ceiling"].iter().filter_map(|n| self.id(n)));
        ids
    }
}

impl TryFrom<TaxonomyRepr> for ClassTaxonomy {
    type Error = Error;

    fn try_from(repr: TaxonomyRepr) -> Result<Self> {
        let mut entries = repr.classes;
        entries.sort_by_key(|e| e.id);
        for (i, entry) in entries.iter().enumerate() {
            if entry.id as usize != i {
                return Err(Error::Taxonomy(format!("class ids must be dense 0..K, found {}", entry.id)));
            }
        }
        Self::new(entries.into_iter().map(|e| e.name), ClassId(repr.background))
    }
}

impl From<ClassTaxonomy> for TaxonomyRepr {
    fn from(t: ClassTaxonomy) -> Self {
        TaxonomyRepr {
            classes: t
                .names
                .into_iter()
                .enumerate()
                .map(|(i, name)| TaxonomyEntry { id: i as u16, name })
                .collect(),
            background: t.background.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PoseRepr {
    position: Vector2<f64>,
    yaw: f64,
}

/// Position on the floor plane plus heading. Yaw is the direction of the
/// object's local +x axis, kept in `[-π, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct Pose2D {
    position: Vector2<f64>,
    yaw: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            yaw: wrap_angle(yaw),
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        self.position
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn with_position(self, position: Vector2<f64>) -> Self {
        Self { position, ..self }
    }

    pub fn with_yaw(self, yaw: f64) -> Self {
        Self {
            yaw: wrap_angle(yaw),
            ..self
        }
    }

    pub fn heading(&self) -> Vector2<f64> {
        Vector2::new(self.yaw.cos(), self.yaw.sin())
    }
}

impl From<PoseRepr> for Pose2D {
    fn from(r: PoseRepr) -> Self {
        Pose2D::new(r.position.x, r.position.y, r.yaw)
    }
}

impl From<Pose2D> for PoseRepr {
    fn from(p: Pose2D) -> Self {
        PoseRepr {
            position: p.position,
            yaw: p.yaw,
        }
    }
}

/// A placed object: an axis-aligned box in its own frame, posed on the floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub class: ClassId,
    pub half_extents: Vector3<f64>,
    pub pose: Pose2D,
    #[serde(default)]
    pub base_height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
}

impl ObjectInstance {
    pub fn new(id: u32, class: ClassId, half_extents: [f64; 3], pose: Pose2D) -> Self {
        Self {
            id: ObjectId(id),
            class,
            half_extents: Vector3::from(half_extents),
            pose,
            base_height: 0.0,
            mesh: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.half_extents.iter().all(|&h| h > 0.0 && h.is_finite()) {
            return Err(Error::Geometry(format!(
                "object {} has non-positive half extents {:?}",
                self.id,
                self.half_extents.as_slice()
            )));
        }
        if !(self.base_height >= 0.0) {
            return Err(Error::Geometry(format!("object {} has negative base height", self.id)));
        }
        Ok(())
    }

    pub fn center(&self) -> Vector2<f64> {
        self.pose.position()
    }

    /// Footprint corners in room coordinates, counter-clockwise.
    pub fn footprint_corners(&self) -> [Vector2<f64>; 4] {
        let (s, c) = self.pose.yaw().sin_cos();
        let (hx, hy) = (self.half_extents.x, self.half_extents.y);
        let p = self.pose.position();
        [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)].map(|(x, y)| p + Vector2::new(c * x - s * y, s * x + c * y))
    }

    pub fn top_height(&self) -> f64 {
        self.base_height + 2.0 * self.half_extents.z
    }

    /// Whether `point` lies inside the footprint grown by `margin` on every side.
    pub fn footprint_contains(&self, point: Vector2<f64>, margin: f64) -> bool {
        let d = point - self.pose.position();
        let (s, c) = self.pose.yaw().sin_cos();
        let local_x = c * d.x + s * d.y;
        let local_y = -s * d.x + c * d.y;
        local_x.abs() <= self.half_extents.x + margin && local_y.abs() <= self.half_extents.y + margin
    }
}

/// Length of the footprint half-diagonal, `sqrt(hx² + hy²)`.
pub fn obb_half_diagonal(obj: &ObjectInstance) -> f64 {
    obj.half_extents.x.hypot(obj.half_extents.y)
}

/// Planar distance between footprint centers.
pub fn center_distance(a: &ObjectInstance, b: &ObjectInstance) -> f64 {
    (a.center() - b.center()).norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WallSide {
    /// x = 0
    West,
    /// x = width
    East,
    /// y = 0
    South,
    /// y = depth
    North,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wall {
    pub side: WallSide,
    pub start: Vector2<f64>,
    pub end: Vector2<f64>,
    /// Yaw of the normal pointing into the room.
    pub inward_yaw: f64,
}

impl Wall {
    pub fn distance_to(&self, p: Vector2<f64>) -> f64 {
        let seg = self.end - self.start;
        let t = ((p - self.start).dot(&seg) / seg.norm_squared()).clamp(0.0, 1.0);
        (p - (self.start + seg * t)).norm()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RoomRepr {
    width: f64,
    depth: f64,
    wall_height: f64,
}

/// Rectangular room occupying `[0, width] x [0, depth]` on the floor plane
/// (floor at z = 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoomRepr", into = "RoomRepr")]
pub struct RoomShell {
    width: f64,
    depth: f64,
    wall_height: f64,
}

impl RoomShell {
    pub fn new(width: f64, depth: f64, wall_height: f64) -> Result<Self> {
        for (name, v) in [("width", width), ("depth", depth), ("wall_height", wall_height)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Geometry(format!("room {name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            width,
            depth,
            wall_height,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn wall_height(&self) -> f64 {
        self.wall_height
    }

    pub fn walls(&self) -> [Wall; 4] {
        let (w, d) = (self.width, self.depth);
        [
            Wall {
                side: WallSide::West,
                start: Vector2::new(0.0, 0.0),
                end: Vector2::new(0.0, d),
                inward_yaw: 0.0,
            },
            Wall {
                side: WallSide::East,
                start: Vector2::new(w, 0.0),
                end: Vector2::new(w, d),
                inward_yaw: wrap_angle(PI),
            },
            Wall {
                side: WallSide::South,
                start: Vector2::new(0.0, 0.0),
                end: Vector2::new(w, 0.0),
                inward_yaw: PI / 2.0,
            },
            Wall {
                side: WallSide::North,
                start: Vector2::new(0.0, d),
                end: Vector2::new(w, d),
                inward_yaw: -PI / 2.0,
            },
        ]
    }

    /// Nearest wall to `p` and the distance to it. Ties resolve in
    /// west, east, south, north order.
    pub fn nearest_wall(&self, p: Vector2<f64>) -> (Wall, f64) {
        let walls = self.walls();
        let mut best = (walls[0], walls[0].distance_to(p));
        for wall in &walls[1..] {
            let d = wall.distance_to(p);
            if d < best.1 {
                best = (*wall, d);
            }
        }
        best
    }

    pub fn contains(&self, p: Vector2<f64>) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.depth
    }

    pub fn clamp(&self, p: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.depth))
    }
}

impl TryFrom<RoomRepr> for RoomShell {
    type Error = Error;

    fn try_from(r: RoomRepr) -> Result<Self> {
        RoomShell::new(r.width, r.depth, r.wall_height)
    }
}

impl From<RoomShell> for RoomRepr {
    fn from(r: RoomShell) -> Self {
        RoomRepr {
            width: r.width,
            depth: r.depth,
            wall_height: r.wall_height,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LayoutRepr {
    room: RoomShell,
    objects: Vec<ObjectInstance>,
    #[serde(default)]
    groups: Vec<Vec<ObjectId>>,
}

/// Room plus placed objects, partitioned into groups for hierarchical
/// optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct SceneLayout {
    pub room: RoomShell,
    pub objects: Vec<ObjectInstance>,
    groups: Vec<Vec<ObjectId>>,
}

impl SceneLayout {
    /// Builds a layout; an empty `groups` puts every object in one group.
    pub fn new(room: RoomShell, objects: Vec<ObjectInstance>, groups: Vec<Vec<ObjectId>>) -> Result<Self> {
        let groups = if groups.is_empty() && !objects.is_empty() {
            vec![objects.iter().map(|o| o.id).collect()]
        } else {
            groups
        };
        let layout = Self { room, objects, groups };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for obj in &self.objects {
            obj.validate()?;
            if !ids.insert(obj.id) {
                return Err(Error::Layout(format!("duplicate object id {}", obj.id)));
            }
        }
        let mut grouped = HashSet::new();
        for group in &self.groups {
            if group.is_empty() {
                return Err(Error::Layout("empty group".into()));
            }
            for id in group {
                if !ids.contains(id) {
                    return Err(Error::Layout(format!("group references unknown object {id}")));
                }
                if !grouped.insert(*id) {
                    return Err(Error::Layout(format!("object {id} appears in more than one group")));
                }
            }
        }
        if grouped.len() != ids.len() {
            return Err(Error::Layout("groups do not cover every object".into()));
        }
        Ok(())
    }

    pub fn groups(&self) -> &[Vec<ObjectId>] {
        &self.groups
    }

    /// Group membership as object-index lists.
    pub fn group_indices(&self) -> Vec<Vec<usize>> {
        let index: HashMap<ObjectId, usize> = self.objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect();
        self.groups.iter().map(|g| g.iter().map(|id| index[id]).collect()).collect()
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Sub-layout holding only the listed objects, as a single group.
    pub fn subset(&self, indices: &[usize]) -> SceneLayout {
        let objects: Vec<_> = indices.iter().map(|&i| self.objects[i].clone()).collect();
        let groups = vec![objects.iter().map(|o| o.id).collect()];
        SceneLayout {
            room: self.room,
            objects,
            groups,
        }
    }

    /// Rigid translation of room origin and every object.
    pub fn translated(&self, offset: Vector2<f64>) -> SceneLayout {
        let mut out = self.clone();
        for obj in &mut out.objects {
            obj.pose = obj.pose.with_position(obj.pose.position() + offset);
        }
        out
    }
}

impl TryFrom<LayoutRepr> for SceneLayout {
    type Error = Error;

    fn try_from(r: LayoutRepr) -> Result<Self> {
        SceneLayout::new(r.room, r.objects, r.groups)
    }
}

impl From<SceneLayout> for LayoutRepr {
    fn from(l: SceneLayout) -> Self {
        LayoutRepr {
            room: l.room,
            objects: l.objects,
            groups: l.groups,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn obj_at(x: f64, y: f64, he: [f64; 3]) -> ObjectInstance {
        ObjectInstance::new(0, ClassId(1), he, Pose2D::new(x, y, 0.0))
    }

    #[test]
    fn half_diagonal_examples() {
        assert_relative_eq!(obb_half_diagonal(&obj_at(0.0, 0.0, [1.0, 1.0, 1.0])), 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(obb_half_diagonal(&obj_at(0.0, 0.0, [3.0, 4.0, 1.0])), 5.0, epsilon = 1e-12);
        assert_relative_eq!(obb_half_diagonal(&obj_at(0.0, 0.0, [0.5, 0.5, 1.0])), 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn center_distance_examples() {
        let he = [0.5, 0.5, 0.5];
        assert_eq!(center_distance(&obj_at(0.0, 0.0, he), &obj_at(3.0, 4.0, he)), 5.0);
        assert_eq!(center_distance(&obj_at(1.0, 1.0, he), &obj_at(1.0, 1.0, he)), 0.0);
        assert_eq!(center_distance(&obj_at(1.0, 1.0, he), &obj_at(1.0, 2.0, he)), 1.0);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(0.25), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn invalid_objects_rejected() {
        let mut o = obj_at(0.0, 0.0, [1.0, 0.0, 1.0]);
        assert!(o.validate().is_err());
        o.half_extents = Vector3::new(1.0, 1.0, 1.0);
        o.base_height = -0.1;
        assert!(o.validate().is_err());
    }

    #[test]
    fn taxonomy_rules() {
        assert!(ClassTaxonomy::new(["a", "a"], ClassId(0)).is_err());
        assert!(ClassTaxonomy::new(["a", "b"], ClassId(2)).is_err());
        let t = ClassTaxonomy::indoor();
        assert_eq!(t.id("bed"), Some(ClassId(4)));
        let json = serde_json::to_string(&t).unwrap();
        let back: ClassTaxonomy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let sparse = r#"{"classes":[{"id":0,"name":"a"},{"id":2,"name":"b"}],"background":0}"#;
        assert!(serde_json::from_str::<ClassTaxonomy>(sparse).is_err());
    }

    #[test]
    fn layout_group_partition() {
        let room = RoomShell::new(4.0, 3.0, 2.5).unwrap();
        let a = ObjectInstance::new(1, ClassId(4), [1.0, 0.8, 0.3], Pose2D::new(1.0, 1.0, 0.0));
        let b = ObjectInstance::new(2, ClassId(5), [0.2, 0.2, 0.3], Pose2D::new(2.0, 1.0, 0.0));
        let ok = SceneLayout::new(room, vec![a.clone(), b.clone()], vec![]).unwrap();
        assert_eq!(ok.groups().len(), 1);
        assert!(SceneLayout::new(room, vec![a.clone(), b.clone()], vec![vec![ObjectId(1)]]).is_err());
        assert!(SceneLayout::new(room, vec![a.clone(), b.clone()], vec![vec![ObjectId(1), ObjectId(2)], vec![ObjectId(2)]]).is_err());
        assert!(SceneLayout::new(room, vec![a.clone(), a], vec![]).is_err());
        assert!(RoomShell::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn nearest_wall_and_inward_normals() {
        let room = RoomShell::new(4.0, 3.0, 2.5).unwrap();
        let (w, d) = room.nearest_wall(Vector2::new(0.4, 1.5));
        assert_eq!(w.side, WallSide::West);
        assert_relative_eq!(d, 0.4);
        let (w, d) = room.nearest_wall(Vector2::new(2.0, 2.9));
        assert_eq!(w.side, WallSide::North);
        assert_relative_eq!(d, 0.1, epsilon = 1e-12);
        for wall in room.walls() {
            let mid = (wall.start + wall.end) / 2.0;
            let inward = mid + Vector2::new(wall.inward_yaw.cos(), wall.inward_yaw.sin()) * 0.1;
            assert!(room.contains(inward));
        }
    }

    proptest! {
        #[test]
        fn center_distance_is_a_metric(ax in -10.0..10.0f64, ay in -10.0..10.0f64, bx in -10.0..10.0f64, by in -10.0..10.0f64) {
            let he = [0.5, 0.5, 0.5];
            let a = obj_at(ax, ay, he);
            let b = obj_at(bx, by, he);
            let d = center_distance(&a, &b);
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d, center_distance(&b, &a));
            prop_assert_eq!(d == 0.0, ax == bx && ay == by);
        }

        #[test]
        fn half_diagonal_ignores_yaw(yaw in -10.0..10.0f64, hx in 0.01..3.0f64, hy in 0.01..3.0f64) {
            let mut o = obj_at(0.0, 0.0, [hx, hy, 1.0]);
            let base = obb_half_diagonal(&o);
            o.pose = o.pose.with_yaw(yaw);
            prop_assert_eq!(obb_half_diagonal(&o), base);
        }

        #[test]
        fn pose_yaw_normalized(yaw in -100.0..100.0f64) {
            let p = Pose2D::new(0.0, 0.0, yaw);
            prop_assert!(p.yaw() >= -PI && p.yaw() < PI);
        }
    }
}
