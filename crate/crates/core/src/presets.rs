//! Small built-in scenes keyed to [`ClassTaxonomy::indoor`]. Objects start
//! piled near the room centre; callers anneal or scatter them.

use crate::energy::ConstraintSet;
use crate::priors::{PairwisePrior, WallPrior};
use crate::scene::{ClassId, ClassTaxonomy, ObjectId, ObjectInstance, Pose2D, RoomShell, SceneLayout};

fn class(name: &str) -> ClassId {
    ClassTaxonomy::indoor().id(name).expect("indoor class")
}

fn object(id: u32, name: &str, half_extents: [f64; 3], x: f64, y: f64) -> ObjectInstance {
    ObjectInstance::new(id, class(name), half_extents, Pose2D::new(x, y, 0.0))
}

const BED: [f64; 3] = [1.0, 0.8, 0.3];
const NIGHTSTAND: [f64; 3] = [0.25, 0.25, 0.3];
const WARDROBE: [f64; 3] = [0.3, 0.6, 1.0];
const DESK: [f64; 3] = [0.35, 0.6, 0.375];
const CHAIR: [f64; 3] = [0.25, 0.25, 0.45];
const MONITOR: [f64; 3] = [0.1, 0.25, 0.2];
const SOFA: [f64; 3] = [0.45, 1.0, 0.4];
const TV: [f64; 3] = [0.15, 0.6, 0.5];
const TABLE: [f64; 3] = [0.4, 0.6, 0.25];
const LAMP: [f64; 3] = [0.15, 0.15, 0.6];
const SHELF: [f64; 3] = [0.2, 0.5, 0.9];
const PLANT: [f64; 3] = [0.2, 0.2, 0.5];

/// Bed, nightstand and wardrobe in a 4 x 3.5 m room.
pub fn bedroom() -> (SceneLayout, ConstraintSet) {
    let room = RoomShell::new(4.0, 3.5, 2.6).expect("room");
    let objects = vec![
        object(0, "bed", BED, 2.0, 1.75),
        object(1, "nightstand", NIGHTSTAND, 2.1, 1.8),
        object(2, "wardrobe", WARDROBE, 1.9, 1.7),
    ];
    let layout = SceneLayout::new(room, objects, vec![]).expect("layout");
    (layout, ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor()))
}

/// Hand-arranged bedroom with a work corner, eight objects in a 4.5 x 4 m room.
pub fn furnished_bedroom() -> (SceneLayout, ConstraintSet) {
    use std::f64::consts::{FRAC_PI_2, PI};
    let room = RoomShell::new(4.5, 4.0, 2.6).expect("room");
    let place = |id: u32, name: &str, he: [f64; 3], x: f64, y: f64, yaw: f64| {
        ObjectInstance::new(id, class(name), he, Pose2D::new(x, y, yaw))
    };
    let objects = vec![
        place(0, "bed", BED, 2.25, 1.0, FRAC_PI_2),
        place(1, "nightstand", NIGHTSTAND, 1.0, 0.3, FRAC_PI_2),
        place(2, "nightstand", NIGHTSTAND, 3.5, 0.3, FRAC_PI_2),
        place(3, "wardrobe", WARDROBE, 0.3, 2.8, 0.0),
        place(4, "desk", DESK, 4.15, 2.8, -PI),
        place(5, "chair", CHAIR, 3.45, 2.8, 0.0),
        place(6, "lamp", LAMP, 1.0, 3.7, 0.0),
        place(7, "plant", PLANT, 2.6, 3.7, 0.0),
    ];
    let layout = SceneLayout::new(room, objects, vec![]).expect("layout");
    (layout, ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor()))
}

/// Sofa facing a tv with a coffee table and a stray chair.
pub fn living_room() -> (SceneLayout, ConstraintSet) {
    let room = RoomShell::new(5.0, 4.0, 2.6).expect("room");
    let objects = vec![
        object(0, "sofa", SOFA, 2.5, 2.0),
        object(1, "tv", TV, 2.6, 2.1),
        object(2, "table", TABLE, 2.4, 1.9),
        object(3, "chair", CHAIR, 2.5, 2.2),
    ];
    let layout = SceneLayout::new(room, objects, vec![]).expect("layout");
    let mut c = ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor());
    c.pairwise.push(PairwisePrior::new(class("sofa"), class("tv"), 3.5, Some(std::f64::consts::PI), 1.0).expect("prior"));
    c.pairwise.push(PairwisePrior::new(class("sofa"), class("table"), 2.5, None, 1.0).expect("prior"));
    c.wall.push(WallPrior {
        class: class("sofa"),
        target_distance: 0.45,
        target_angle: 0.0,
        weight_distance: 1.0,
        weight_angle: 0.5,
    });
    c.wall.push(WallPrior {
        class: class("tv"),
        target_distance: 0.15,
        target_angle: 0.0,
        weight_distance: 1.0,
        weight_angle: 0.5,
    });
    (layout, c)
}

/// Desk, chair and monitor forming one group.
pub fn study_corner() -> (SceneLayout, ConstraintSet) {
    let room = RoomShell::new(3.5, 3.0, 2.6).expect("room");
    let objects = vec![
        object(0, "desk", DESK, 1.75, 1.5),
        object(1, "chair", CHAIR, 1.8, 1.4),
        object(2, "monitor", MONITOR, 1.7, 1.6),
    ];
    let layout = SceneLayout::new(room, objects, vec![]).expect("layout");
    let mut c = ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor());
    c.pairwise.push(PairwisePrior::new(class("desk"), class("monitor"), 1.4, Some(0.0), 1.0).expect("prior"));
    (layout, c)
}

/// Twenty objects in two groups with disjoint class sets: a sleeping area
/// anchored on the bed and a lounge/study area anchored on the sofa and desk.
pub fn two_zone_apartment() -> (SceneLayout, ConstraintSet) {
    let room = RoomShell::new(7.0, 6.0, 2.7).expect("room");
    let sleeping: [(&str, [f64; 3]); 10] = [
        ("bed", BED),
        ("nightstand", NIGHTSTAND),
        ("nightstand", NIGHTSTAND),
        ("wardrobe", WARDROBE),
        ("lamp", LAMP),
        ("lamp", LAMP),
        ("shelf", SHELF),
        ("plant", PLANT),
        ("plant", PLANT),
        ("lamp", LAMP),
    ];
    let lounge: [(&str, [f64; 3]); 10] = [
        ("desk", DESK),
        ("chair", CHAIR),
        ("monitor", MONITOR),
        ("sofa", SOFA),
        ("tv", TV),
        ("table", TABLE),
        ("chair", CHAIR),
        ("table", TABLE),
        ("monitor", MONITOR),
        ("chair", CHAIR),
    ];
    let mut objects = Vec::new();
    let mut groups = vec![Vec::new(), Vec::new()];
    for (g, items) in [sleeping, lounge].iter().enumerate() {
        for (k, (name, he)) in items.iter().enumerate() {
            let id = objects.len() as u32;
            let x = 3.5 + 0.05 * k as f64;
            let y = 3.0 - 0.05 * g as f64;
            objects.push(object(id, name, *he, x, y));
            groups[g].push(ObjectId(id));
        }
    }
    let layout = SceneLayout::new(room, objects, groups).expect("layout");
    let (_, mut c) = living_room();
    let pair = |a: &str, b: &str, m: f64| PairwisePrior::new(class(a), class(b), m, None, 1.0).expect("prior");
    c.pairwise.extend([
        pair("desk", "monitor", 1.4),
        pair("bed", "lamp", 2.2),
        pair("bed", "shelf", 2.5),
        pair("bed", "plant", 2.5),
    ]);
    (layout, c)
}

pub const NAMES: [&str; 5] = ["bedroom", "furnished_bedroom", "living_room", "study_corner", "two_zone_apartment"];

pub fn by_name(name: &str) -> Option<(SceneLayout, ConstraintSet)> {
    match name {
        "bedroom" => Some(bedroom()),
        "furnished_bedroom" => Some(furnished_bedroom()),
        "living_room" => Some(living_room()),
        "study_corner" => Some(study_corner()),
        "two_zone_apartment" => Some(two_zone_apartment()),
        _ => None,
    }
}
