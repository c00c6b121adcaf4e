//! Simulated annealing over object poses, flat or hierarchical (objects
//! within groups first, then whole groups as rigid bodies).

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Rotation2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::energy::{ConstraintSet, EnergyBreakdown, EnergyModel, Term};
use crate::error::{Error, Result};
use crate::scene::{wrap_angle, ObjectInstance, Pose2D, RoomShell, SceneLayout};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSchedule {
    /// Starting temperature; `None` calibrates it from the spread of energies
    /// over random perturbations of the initial layout.
    pub initial_temperature: Option<f64>,
    pub cooling_factor: f64,
    pub steps_per_temperature: usize,
    pub min_temperature: f64,
    pub max_iterations: usize,
    pub calibration_samples: usize,
    /// Relative frequencies of translate, rotate and swap proposals.
    pub move_mix: [f64; 3],
    /// Translation std-dev at the starting temperature, as a fraction of the room diagonal.
    pub translate_scale: f64,
    /// Rotation std-dev at the starting temperature, radians.
    pub rotate_scale: f64,
    /// Restrict yaws to multiples of 90°.
    pub snap_yaw: bool,
    /// A result whose bbox component exceeds this is flagged infeasible.
    pub feasibility_bound: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: None,
            cooling_factor: 0.95,
            steps_per_temperature: 100,
            min_temperature: 1e-9,
            max_iterations: 20_000,
            calibration_samples: 100,
            move_mix: [0.6, 0.3, 0.1],
            translate_scale: 0.25,
            rotate_scale: FRAC_PI_2,
            snap_yaw: false,
            feasibility_bound: 0.0,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(Error::Parameter(format!("cooling factor must be in (0, 1), got {}", self.cooling_factor)));
        }
        if self.steps_per_temperature == 0 || self.max_iterations == 0 || self.calibration_samples == 0 {
            return Err(Error::Parameter("schedule counts must be positive".into()));
        }
        if let Some(t0) = self.initial_temperature {
            if !(t0 > 0.0 && t0.is_finite()) {
                return Err(Error::Parameter(format!("initial temperature must be positive, got {t0}")));
            }
        }
        if !(self.min_temperature >= 0.0) {
            return Err(Error::Parameter("min temperature must be non-negative".into()));
        }
        if self.move_mix.iter().any(|&w| !(w >= 0.0)) || self.move_mix.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Parameter("move mix must be non-negative with a positive sum".into()));
        }
        Ok(())
    }

    /// Same number of temperature levels within a smaller iteration budget.
    fn with_budget(&self, max_iterations: usize) -> Self {
        let max_iterations = max_iterations.max(1);
        let scaled = self.steps_per_temperature * max_iterations / self.max_iterations.max(1);
        Self {
            max_iterations,
            steps_per_temperature: scaled.clamp(1, self.steps_per_temperature),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Translate,
    Rotate,
    Swap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    /// Energy of the current (last accepted) state.
    pub energy: f64,
    /// Best energy seen so far.
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealResult {
    pub best_layout: SceneLayout,
    pub best_energy: EnergyBreakdown,
    pub trace: Vec<TracePoint>,
    pub seed: u64,
    pub iterations: usize,
    pub initial_temperature: f64,
    /// Bbox overlap remained above the schedule's feasibility bound.
    pub infeasible: bool,
}

impl AnnealResult {
    /// `iteration,energy,best` rows with a header line.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,energy,best\n");
        for p in &self.trace {
            out.push_str(&format!("{},{},{}\n", p.iteration, p.energy, p.best));
        }
        out
    }
}

/// Metropolis rule: always accept downhill, uphill with probability `exp(-ΔE/T)`.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.random::<f64>() < (-delta / temperature).exp()
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn snap_quarter(yaw: f64) -> f64 {
    wrap_angle((yaw / FRAC_PI_2).round() * FRAC_PI_2)
}

fn pick_move<R: Rng + ?Sized>(mix: &[f64; 3], rng: &mut R) -> MoveKind {
    let total: f64 = mix.iter().sum();
    let r = rng.random::<f64>() * total;
    if r < mix[0] {
        MoveKind::Translate
    } else if r < mix[0] + mix[1] {
        MoveKind::Rotate
    } else {
        MoveKind::Swap
    }
}

/// A family of proposals over some set of movable units (objects or groups).
/// A proposal edits `objects` in place and returns the previous poses so
/// the caller can revert it.
trait MoveSet {
    fn propose(
        &self,
        room: &RoomShell,
        objects: &mut [ObjectInstance],
        step: &StepSize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<(usize, Pose2D)>;

    /// Length that translation steps scale with.
    fn extent(&self, room: &RoomShell) -> f64 {
        room.width().hypot(room.depth())
    }
}

struct StepSize {
    translate: f64,
    rotate: f64,
    mix: [f64; 3],
    snap_yaw: bool,
}

impl StepSize {
    fn at(schedule: &AnnealSchedule, diag: f64, ratio: f64) -> Self {
        Self {
            translate: (schedule.translate_scale * diag * ratio.sqrt()).max(1e-4),
            rotate: (schedule.rotate_scale * ratio.sqrt()).max(1e-4),
            mix: schedule.move_mix,
            snap_yaw: schedule.snap_yaw,
        }
    }

    fn rotation<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.snap_yaw {
            if rng.random::<bool>() {
                FRAC_PI_2
            } else {
                -FRAC_PI_2
            }
        } else {
            self.rotate * normal(rng)
        }
    }

    fn yaw(&self, yaw: f64) -> f64 {
        if self.snap_yaw {
            snap_quarter(yaw)
        } else {
            yaw
        }
    }
}

/// Axis-aligned region that object centers must stay in. Sides flagged in
/// `inset` are pulled in by each object's half-diagonal so footprints stay
/// on the near side.
#[derive(Clone, Copy, Debug)]
struct Region {
    lo: Vector2<f64>,
    hi: Vector2<f64>,
    inset_lo: [bool; 2],
    inset_hi: [bool; 2],
}

impl Region {
    fn clamp(&self, obj: &ObjectInstance, p: Vector2<f64>) -> Vector2<f64> {
        let r = obj.half_extents.x.hypot(obj.half_extents.y);
        let mut out = p;
        for k in 0..2 {
            let lo = self.lo[k] + if self.inset_lo[k] { r } else { 0.0 };
            let hi = self.hi[k] - if self.inset_hi[k] { r } else { 0.0 };
            out[k] = if lo > hi { 0.5 * (self.lo[k] + self.hi[k]) } else { p[k].clamp(lo, hi) };
        }
        out
    }
}

#[derive(Default)]
struct ObjectMoves {
    region: Option<Region>,
}

impl ObjectMoves {
    fn place(&self, room: &RoomShell, obj: &ObjectInstance, p: Vector2<f64>) -> Vector2<f64> {
        let p = room.clamp(p);
        match &self.region {
            Some(r) => r.clamp(obj, p),
            None => p,
        }
    }
}

impl MoveSet for ObjectMoves {
    fn extent(&self, room: &RoomShell) -> f64 {
        match &self.region {
            Some(r) => (r.hi - r.lo).norm(),
            None => room.width().hypot(room.depth()),
        }
    }

    fn propose(
        &self,
        room: &RoomShell,
        objects: &mut [ObjectInstance],
        step: &StepSize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<(usize, Pose2D)> {
        let n = objects.len();
        let mut kind = pick_move(&step.mix, rng);
        if kind == MoveKind::Swap && n < 2 {
            kind = MoveKind::Translate;
        }
        match kind {
            MoveKind::Translate => {
                let i = rng.random_range(0..n);
                let old = objects[i].pose;
                let delta = Vector2::new(normal(rng), normal(rng)) * step.translate;
                objects[i].pose = old.with_position(self.place(room, &objects[i], old.position() + delta));
                vec![(i, old)]
            }
            MoveKind::Rotate => {
                let i = rng.random_range(0..n);
                let old = objects[i].pose;
                objects[i].pose = old.with_yaw(step.yaw(old.yaw() + step.rotation(rng)));
                vec![(i, old)]
            }
            MoveKind::Swap => {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (pi, pj) = (objects[i].pose, objects[j].pose);
                objects[i].pose = pi.with_position(self.place(room, &objects[i], pj.position()));
                objects[j].pose = pj.with_position(self.place(room, &objects[j], pi.position()));
                vec![(i, pi), (j, pj)]
            }
        }
    }
}

/// Moves whole groups rigidly; intra-group arrangement is preserved.
struct GroupMoves {
    groups: Vec<Vec<usize>>,
}

impl GroupMoves {
    fn centroid(&self, objects: &[ObjectInstance], g: usize) -> Vector2<f64> {
        let members = &self.groups[g];
        members.iter().map(|&i| objects[i].center()).sum::<Vector2<f64>>() / members.len() as f64
    }

    /// Shift keeping all member centers inside the room, or `None` if the
    /// group is wider than the room.
    fn containment_shift(&self, room: &RoomShell, objects: &[ObjectInstance], g: usize) -> Option<Vector2<f64>> {
        let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
        for &i in &self.groups[g] {
            lo = lo.inf(&objects[i].center());
            hi = hi.sup(&objects[i].center());
        }
        let axis = |lo: f64, hi: f64, size: f64| -> Option<f64> {
            if hi - lo > size {
                None
            } else if lo < 0.0 {
                Some(-lo)
            } else if hi > size {
                Some(size - hi)
            } else {
                Some(0.0)
            }
        };
        Some(Vector2::new(axis(lo.x, hi.x, room.width())?, axis(lo.y, hi.y, room.depth())?))
    }

    fn transform(objects: &mut [ObjectInstance], members: &[usize], pivot: Vector2<f64>, angle: f64, shift: Vector2<f64>) {
        let rot = Rotation2::new(angle);
        for &i in members {
            let pose = objects[i].pose;
            let p = pivot + rot * (pose.position() - pivot) + shift;
            objects[i].pose = Pose2D::new(p.x, p.y, pose.yaw() + angle);
        }
    }
}

impl MoveSet for GroupMoves {
    fn propose(
        &self,
        room: &RoomShell,
        objects: &mut [ObjectInstance],
        step: &StepSize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<(usize, Pose2D)> {
        let n = self.groups.len();
        let mut kind = pick_move(&step.mix, rng);
        if kind == MoveKind::Swap && n < 2 {
            kind = MoveKind::Translate;
        }
        let touched: Vec<usize> = match kind {
            MoveKind::Translate | MoveKind::Rotate => self.groups[rng.random_range(0..n)].clone(),
            MoveKind::Swap => {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let mut t = self.groups[a].clone();
                t.extend_from_slice(&self.groups[b]);
                t
            }
        };
        let undo: Vec<(usize, Pose2D)> = touched.iter().map(|&i| (i, objects[i].pose)).collect();
        let group_of = |i: usize| self.groups.iter().position(|g| g.contains(&i)).expect("member");
        let mut moved = Vec::new();
        match kind {
            MoveKind::Translate => {
                let g = group_of(touched[0]);
                let delta = Vector2::new(normal(rng), normal(rng)) * step.translate;
                Self::transform(objects, &self.groups[g], Vector2::zeros(), 0.0, delta);
                moved.push(g);
            }
            MoveKind::Rotate => {
                let g = group_of(touched[0]);
                let pivot = self.centroid(objects, g);
                let angle = step.rotation(rng);
                Self::transform(objects, &self.groups[g], pivot, angle, Vector2::zeros());
                if step.snap_yaw {
                    for &i in &self.groups[g] {
                        objects[i].pose = objects[i].pose.with_yaw(snap_quarter(objects[i].pose.yaw()));
                    }
                }
                moved.push(g);
            }
            MoveKind::Swap => {
                let a = group_of(touched[0]);
                let b = group_of(*touched.last().expect("two groups"));
                let (ca, cb) = (self.centroid(objects, a), self.centroid(objects, b));
                Self::transform(objects, &self.groups[a], Vector2::zeros(), 0.0, cb - ca);
                Self::transform(objects, &self.groups[b], Vector2::zeros(), 0.0, ca - cb);
                moved.extend([a, b]);
            }
        }
        for g in moved {
            match self.containment_shift(room, objects, g) {
                Some(shift) => Self::transform(objects, &self.groups[g], Vector2::zeros(), 0.0, shift),
                None => {
                    for &(i, pose) in &undo {
                        objects[i].pose = pose;
                    }
                    return Vec::new();
                }
            }
        }
        undo
    }
}

fn revert(objects: &mut [ObjectInstance], undo: &[(usize, Pose2D)]) {
    for &(i, pose) in undo.iter().rev() {
        objects[i].pose = pose;
    }
}

fn calibrate_temperature(
    room: &RoomShell,
    objects: &mut [ObjectInstance],
    model: &EnergyModel,
    moves: &dyn MoveSet,
    schedule: &AnnealSchedule,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let step = StepSize::at(schedule, moves.extent(room), 1.0);
    let samples: Vec<f64> = (0..schedule.calibration_samples)
        .map(|_| {
            let undo = moves.propose(room, objects, &step, rng);
            let e = model.evaluate(room, objects).total;
            revert(objects, &undo);
            e
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / samples.len() as f64;
    let std = var.sqrt();
    if std.is_finite() && std > 0.0 {
        std
    } else {
        1.0
    }
}

struct ChainOutcome {
    best: Vec<ObjectInstance>,
    trace: Vec<TracePoint>,
    iterations: usize,
    initial_temperature: f64,
}

fn run_chain(
    room: &RoomShell,
    mut objects: Vec<ObjectInstance>,
    model: &EnergyModel,
    moves: &dyn MoveSet,
    schedule: &AnnealSchedule,
    rng: &mut ChaCha8Rng,
) -> ChainOutcome {
    let mut current = model.evaluate(room, &objects).total;
    let mut best = objects.clone();
    let mut best_energy = current;
    let mut trace = vec![TracePoint {
        iteration: 0,
        energy: current,
        best: best_energy,
    }];
    if objects.is_empty() {
        return ChainOutcome {
            best,
            trace,
            iterations: 0,
            initial_temperature: schedule.initial_temperature.unwrap_or(1.0),
        };
    }
    let t0 = match schedule.initial_temperature {
        Some(t) => t,
        None => calibrate_temperature(room, &mut objects, model, moves, schedule, rng),
    };
    let mut temperature = t0;
    let mut iteration = 0;
    while iteration < schedule.max_iterations && temperature >= schedule.min_temperature {
        let step = StepSize::at(schedule, moves.extent(room), temperature / t0);
        for _ in 0..schedule.steps_per_temperature {
            if iteration >= schedule.max_iterations {
                break;
            }
            iteration += 1;
            let undo = moves.propose(room, &mut objects, &step, rng);
            if undo.is_empty() {
                continue;
            }
            let candidate = model.evaluate(room, &objects).total;
            if metropolis_accept(candidate - current, temperature, rng) {
                current = candidate;
                if current < best_energy {
                    best_energy = current;
                    best.clone_from(&objects);
                }
            } else {
                revert(&mut objects, &undo);
            }
        }
        trace.push(TracePoint {
            iteration,
            energy: current,
            best: best_energy,
        });
        temperature *= schedule.cooling_factor;
    }
    ChainOutcome {
        best,
        trace,
        iterations: iteration,
        initial_temperature: t0,
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    layout: &SceneLayout,
    objects: Vec<ObjectInstance>,
    model: &EnergyModel,
    schedule: &AnnealSchedule,
    outcome_trace: Vec<TracePoint>,
    iterations: usize,
    initial_temperature: f64,
    seed: u64,
) -> AnnealResult {
    let mut best_layout = layout.clone();
    best_layout.objects = objects;
    let best_energy = model.evaluate_layout(&best_layout);
    AnnealResult {
        infeasible: best_energy.bbox > schedule.feasibility_bound,
        best_layout,
        best_energy,
        trace: outcome_trace,
        seed,
        iterations,
        initial_temperature,
    }
}

fn prepare(layout: &SceneLayout, schedule: &AnnealSchedule) -> Result<Vec<ObjectInstance>> {
    schedule.validate()?;
    layout.validate()?;
    let mut objects = layout.objects.clone();
    for obj in &mut objects {
        let p = layout.room.clamp(obj.pose.position());
        let yaw = if schedule.snap_yaw { snap_quarter(obj.pose.yaw()) } else { obj.pose.yaw() };
        obj.pose = Pose2D::new(p.x, p.y, yaw);
    }
    Ok(objects)
}

/// Flat annealing over every object's position and yaw.
pub fn anneal(layout: &SceneLayout, constraints: &ConstraintSet, schedule: &AnnealSchedule, seed: u64) -> Result<AnnealResult> {
    let objects = prepare(layout, schedule)?;
    constraints.weights.validate()?;
    let model = EnergyModel::new(constraints);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = run_chain(&layout.room, objects, &model, &ObjectMoves::default(), schedule, &mut rng);
    Ok(finish(layout, out.best, &model, schedule, out.trace, out.iterations, out.initial_temperature, seed))
}

/// Splits the room along its longer side into one region per group, each
/// sized by the group's share of total footprint area.
fn group_regions(room: &RoomShell, objects: &[ObjectInstance], groups: &[Vec<usize>]) -> Vec<Region> {
    let area = |members: &Vec<usize>| -> f64 {
        members
            .iter()
            .map(|&i| 4.0 * objects[i].half_extents.x * objects[i].half_extents.y)
            .sum::<f64>()
            .max(f64::EPSILON)
    };
    let areas: Vec<f64> = groups.iter().map(area).collect();
    let total: f64 = areas.iter().sum();
    let k = if room.width() >= room.depth() { 0 } else { 1 };
    let size = Vector2::new(room.width(), room.depth());
    let mut start = 0.0;
    let last = areas.len() - 1;
    areas
        .iter()
        .enumerate()
        .map(|(g, a)| {
            let end = if g == last { size[k] } else { start + size[k] * a / total };
            let (mut lo, mut hi) = (Vector2::zeros(), size);
            lo[k] = start;
            hi[k] = end;
            let (mut inset_lo, mut inset_hi) = ([false; 2], [false; 2]);
            inset_lo[k] = g > 0;
            inset_hi[k] = g < last;
            start = end;
            Region { lo, hi, inset_lo, inset_hi }
        })
        .collect()
}

/// Two-phase annealing: each group is first arranged on its own inside a
/// strip of the room sized by its footprint area (terms involving other
/// groups are absent), then groups move as rigid bodies under
/// the full energy. Phase 1 gets 70% of the iteration budget, shared between
/// groups by member and relation count.
/// A single group degenerates to [`anneal`].
pub fn anneal_hierarchical(
    layout: &SceneLayout,
    constraints: &ConstraintSet,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<AnnealResult> {
    if layout.groups().is_empty() {
        return Err(Error::Layout("hierarchical annealing needs at least one group".into()));
    }
    if layout.groups().len() == 1 {
        return anneal(layout, constraints, schedule, seed);
    }
    let mut objects = prepare(layout, schedule)?;
    constraints.weights.validate()?;
    let model = EnergyModel::new(constraints);
    let groups = layout.group_indices();

    let phase1_budget = schedule.max_iterations * 7 / 10;
    let weights: Vec<usize> = groups
        .iter()
        .map(|m| {
            let sub: Vec<ObjectInstance> = m.iter().map(|&i| objects[i].clone()).collect();
            model.relation_count(&sub) + m.len()
        })
        .collect();
    let total_weight = weights.iter().sum::<usize>().max(1);
    let regions = group_regions(&layout.room, &objects, &groups);
    let mut phase1_iterations = 0;
    for (g, (members, region)) in groups.iter().zip(regions).enumerate() {
        let budget = phase1_budget * weights[g] / total_weight;
        let moves = ObjectMoves { region: Some(region) };
        let sub: Vec<ObjectInstance> = members
            .iter()
            .map(|&i| {
                let mut obj = objects[i].clone();
                obj.pose = obj.pose.with_position(moves.place(&layout.room, &obj, obj.pose.position()));
                obj
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, g as u64 + 1));
        let out = run_chain(&layout.room, sub, &model, &moves, &schedule.with_budget(budget), &mut rng);
        phase1_iterations += out.iterations;
        for (&i, obj) in members.iter().zip(out.best) {
            objects[i] = obj;
        }
    }

    let moves = GroupMoves { groups };
    let phase2 = schedule.with_budget(schedule.max_iterations - phase1_iterations.min(schedule.max_iterations));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let out = run_chain(&layout.room, objects, &model, &moves, &phase2, &mut rng);
    let trace = out
        .trace
        .into_iter()
        .map(|p| TracePoint {
            iteration: p.iteration + phase1_iterations,
            ..p
        })
        .collect();
    Ok(finish(
        layout,
        out.best,
        &model,
        schedule,
        trace,
        phase1_iterations + out.iterations,
        out.initial_temperature,
        seed,
    ))
}

/// Terms that [`ablate`] may switch off.
pub const ABLATABLE: [Term; 5] = [
    Term::Pairwise,
    Term::Visibility,
    Term::WallDistance,
    Term::WallAngle,
    Term::PairAngle,
];

/// Anneals with the listed terms removed from the objective. The result's
/// breakdown still reports their values.
pub fn ablate(
    layout: &SceneLayout,
    constraints: &ConstraintSet,
    schedule: &AnnealSchedule,
    seed: u64,
    disabled: &[Term],
) -> Result<AnnealResult> {
    if let Some(t) = disabled.iter().find(|t| !ABLATABLE.contains(t)) {
        return Err(Error::Parameter(format!("term `{t}` cannot be ablated")));
    }
    anneal(layout, &constraints.with_disabled(disabled.iter().copied()), schedule, seed)
}

/// Places every object uniformly at random inside the room with a random yaw.
pub fn scatter_objects(layout: &SceneLayout, seed: u64) -> SceneLayout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = layout.clone();
    for obj in &mut out.objects {
        let x = rng.random::<f64>() * layout.room.width();
        let y = rng.random::<f64>() * layout.room.depth();
        let yaw = rng.random::<f64>() * 2.0 * PI - PI;
        obj.pose = Pose2D::new(x, y, yaw);
    }
    out
}
