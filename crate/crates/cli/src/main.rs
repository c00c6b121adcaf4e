use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use roomsynth::annealer::{ablate, anneal, anneal_hierarchical, scatter_objects, AnnealSchedule};
use roomsynth::camera::{format_trajectory, parse_trajectory, CameraIntrinsics};
use roomsynth::energy::{ConstraintSet, Term};
use roomsynth::error::{Error, Result};
use roomsynth::features::{encode_dha, write_dha, write_dha_previews};
use roomsynth::image_io::{read_depth_png, read_label_png, write_depth_png, write_label_png};
use roomsynth::metrics::{ConfusionMatrix, EvalReport};
use roomsynth::pipeline::{
    frame_name, generate_dataset, load_mesh_library, noise_seed, read_json, write_json, MeshSource, PipelineConfig,
};
use roomsynth::presets;
use roomsynth::priors::{class_frequency, cooccurrence_from_layouts, pairwise_priors_from_layouts, PriorSet};
use roomsynth::render::{render_trajectory, sample_viewpoints, RenderScene, ViewpointSampler};
use roomsynth::scene::{ClassTaxonomy, SceneLayout};
use roomsynth::sensor::{add_noise, estimate_normals, inpaint, NoiseParams};

/// Synthetic indoor depth and label data: furniture arrangement, rendering,
/// sensor simulation and evaluation.
#[derive(Parser)]
#[command(name = "roomsynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anneal a furniture layout under a constraint set.
    Arrange(ArrangeArgs),
    /// Render depth and label PNGs of a layout.
    Render(RenderArgs),
    /// Add sensor noise to depth PNGs and inpaint the holes.
    Corrupt(CorruptArgs),
    /// Encode depth PNGs as three-channel depth/height/angle binaries.
    Encode(EncodeArgs),
    /// Class frequencies of label PNGs, or priors mined from layouts.
    Stats(StatsArgs),
    /// Score predicted label PNGs against ground truth.
    Eval(EvalArgs),
    /// Run the full pipeline from a JSON config.
    Gen(GenArgs),
}

#[derive(Args)]
struct SceneSource {
    /// Layout JSON; overrides --preset.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Built-in scene used when no layout is given.
    #[arg(long, default_value = "furnished_bedroom", value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
    preset: String,
    /// Taxonomy JSON; the built-in indoor taxonomy when absent.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

impl SceneSource {
    fn taxonomy(&self) -> Result<ClassTaxonomy> {
        match &self.taxonomy {
            Some(p) => read_json(p),
            None => Ok(ClassTaxonomy::indoor()),
        }
    }

    fn load(&self) -> Result<(SceneLayout, Option<ConstraintSet>)> {
        let preset = presets::by_name(&self.preset).expect("value parser restricts presets");
        match &self.layout {
            Some(p) => {
                let layout: SceneLayout = read_json(p)?;
                layout.validate()?;
                Ok((layout, None))
            }
            None => Ok((preset.0, Some(preset.1))),
        }
    }
}

#[derive(Args)]
struct ArrangeArgs {
    #[command(flatten)]
    scene: SceneSource,
    /// Constraint set JSON; the preset's (or the indoor defaults) when absent.
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Schedule JSON; individual flags below override its fields.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Seed of the annealing chain.
    #[arg(long)]
    seed: u64,
    /// Starting temperature; calibrated from the layout when absent.
    #[arg(long)]
    t0: Option<f64>,
    /// Geometric cooling factor in (0, 1).
    #[arg(long)]
    cool: Option<f64>,
    /// Proposals per temperature level.
    #[arg(long)]
    steps: Option<usize>,
    /// Total proposal budget.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Comma-separated terms removed from the objective (pairwise, visibility, wall, pair_angle).
    #[arg(long, value_delimiter = ',')]
    disable: Vec<String>,
    /// Anneal each group separately, then the groups as rigid bodies.
    #[arg(long)]
    hierarchical: bool,
    /// Randomize object positions before annealing, using the same seed.
    #[arg(long)]
    scatter: bool,
    /// Output layout JSON.
    #[arg(long)]
    out: PathBuf,
    /// Energy trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneSource,
    /// JSON map from mesh key to `{path, groups, default}`; paths resolve against its directory.
    #[arg(long)]
    meshes: Option<PathBuf>,
    /// Intrinsics JSON; Kinect-like defaults when absent.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Trajectory file to render; viewpoints are sampled when absent.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Number of sampled viewpoints.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Seed for viewpoint sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Object classes each sampled view must show.
    #[arg(long)]
    min_visible: Option<usize>,
    /// Output directory; receives `depth/`, `labels/` and `poses.txt`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorruptArgs {
    /// Depth PNG or a directory of them.
    #[arg(long)]
    input: PathBuf,
    /// Output directory; receives `noisy/` and `inpainted/`.
    #[arg(long)]
    out: PathBuf,
    /// Base seed; frame i uses a stream derived from it and i.
    #[arg(long)]
    seed: u64,
    /// Noise parameter JSON; defaults when absent.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Odd inpainting window size.
    #[arg(long, default_value_t = 3)]
    inpaint_kernel: usize,
    /// Intrinsics JSON used for normals and disparity.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Depth PNG directory.
    #[arg(long)]
    depth: PathBuf,
    /// Trajectory file with one pose per depth PNG, in file-name order.
    #[arg(long)]
    poses: PathBuf,
    /// Intrinsics JSON; Kinect-like defaults when absent.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Floor height in world coordinates.
    #[arg(long, default_value_t = 0.0)]
    floor_height: f64,
    /// Also write 16-bit PNG previews of each channel.
    #[arg(long)]
    previews: bool,
    /// Output directory for `<stem>.bin` files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Label PNG directory; prints class frequencies.
    #[arg(long, conflicts_with = "layouts", required_unless_present = "layouts")]
    labels: Option<PathBuf>,
    /// Layout JSON files; prints mined priors.
    #[arg(long, num_args = 1..)]
    layouts: Vec<PathBuf>,
    /// Minimum co-occurring layouts before a pairwise prior is emitted.
    #[arg(long, default_value_t = 1)]
    min_support: usize,
    /// Taxonomy JSON; the built-in indoor taxonomy when absent.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth label PNG directory.
    #[arg(long)]
    gt: PathBuf,
    /// Predicted label PNG directory with the same file names.
    #[arg(long)]
    pred: PathBuf,
    /// Taxonomy JSON; the built-in indoor taxonomy when absent.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Pipeline config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the frame count.
    #[arg(long)]
    frames: Option<usize>,
    /// Overrides the output directory (relative to the working directory).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the built-in scene.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the worker thread count.
    #[arg(long)]
    workers: Option<usize>,
    /// Use hierarchical annealing.
    #[arg(long)]
    hierarchical: bool,
    /// Write per-channel DHA previews.
    #[arg(long)]
    previews: bool,
}

fn optional_json<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    path.as_deref().map(read_json).transpose().map(Option::unwrap_or_default)
}

fn emit(out: &Option<PathBuf>, value: &serde_json::Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(value)?)?;
            Ok(())
        }
    }
}

/// PNG files in `dir`, sorted by name.
fn pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let listing = || -> std::io::Result<Vec<PathBuf>> { fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect() };
    let mut files = listing().map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", dir.display())))?;
    files.retain(|p| p.extension().is_some_and(|e| e == "png"));
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyInput("no PNG files in directory"));
    }
    Ok(files)
}

fn file_name(p: &Path) -> &std::ffi::OsStr {
    p.file_name().expect("listed files have names")
}

fn arrange(a: ArrangeArgs) -> Result<serde_json::Value> {
    let (mut layout, preset_constraints) = a.scene.load()?;
    let taxonomy = a.scene.taxonomy()?;
    let constraints = match (&a.constraints, preset_constraints) {
        (Some(p), _) => read_json(p)?,
        (None, Some(c)) => c,
        (None, None) => ConstraintSet::indoor_defaults(&taxonomy),
    };
    constraints.validate(&taxonomy)?;
    let mut schedule: AnnealSchedule = optional_json(&a.schedule)?;
    if a.t0.is_some() {
        schedule.initial_temperature = a.t0;
    }
    if let Some(c) = a.cool {
        schedule.cooling_factor = c;
    }
    if let Some(s) = a.steps {
        schedule.steps_per_temperature = s;
    }
    if let Some(m) = a.max_iterations {
        schedule.max_iterations = m;
    }
    let mut disabled = Vec::new();
    for name in &a.disable {
        disabled.extend(Term::parse_group(name)?);
    }
    if a.scatter {
        layout = scatter_objects(&layout, a.seed);
    }
    let result = match (a.hierarchical, disabled.is_empty()) {
        (true, true) => anneal_hierarchical(&layout, &constraints, &schedule, a.seed)?,
        (true, false) => {
            anneal_hierarchical(&layout, &constraints.with_disabled(disabled.iter().copied()), &schedule, a.seed)?
        }
        (false, true) => anneal(&layout, &constraints, &schedule, a.seed)?,
        (false, false) => ablate(&layout, &constraints, &schedule, a.seed, &disabled)?,
    };
    write_json(&a.out, &result.best_layout)?;
    if let Some(t) = &a.trace {
        fs::write(t, result.trace_csv())?;
    }
    Ok(json!({
        "energy": result.best_energy,
        "iterations": result.iterations,
        "initial_temperature": result.initial_temperature,
        "infeasible": result.infeasible,
    }))
}

fn render(a: RenderArgs) -> Result<serde_json::Value> {
    let (layout, _) = a.scene.load()?;
    let taxonomy = a.scene.taxonomy()?;
    let k: CameraIntrinsics = optional_json(&a.intrinsics)?;
    k.validate()?;
    let library = match &a.meshes {
        Some(p) => {
            let mut sources: BTreeMap<String, MeshSource> = read_json(p)?;
            let base = p.parent().unwrap_or(Path::new(""));
            for s in sources.values_mut() {
                s.path = base.join(&s.path);
            }
            load_mesh_library(&sources, &taxonomy)?
        }
        None => Default::default(),
    };
    let scene = RenderScene::new(&layout, &taxonomy, &library)?;
    let poses = match &a.poses {
        Some(p) => parse_trajectory(&fs::read_to_string(p)?)?,
        None => {
            let mut sampler = ViewpointSampler::default();
            if let Some(m) = a.min_visible {
                sampler.min_visible_classes = m;
            }
            sample_viewpoints(&layout, &scene, &k, a.count, &sampler, a.seed)?
        }
    };
    let frames = render_trajectory(&scene, &poses, &k)?;
    fs::create_dir_all(a.out.join("depth"))?;
    fs::create_dir_all(a.out.join("labels"))?;
    for (i, (depth, labels)) in frames.iter().enumerate() {
        let name = format!("{}.png", frame_name(i));
        write_depth_png(&a.out.join("depth").join(&name), depth)?;
        write_label_png(&a.out.join("labels").join(&name), labels)?;
    }
    fs::write(a.out.join("poses.txt"), format_trajectory(&poses))?;
    Ok(json!({ "frames": frames.len(), "width": k.width, "height": k.height }))
}

fn corrupt(a: CorruptArgs) -> Result<serde_json::Value> {
    let params: NoiseParams = optional_json(&a.params)?;
    params.validate()?;
    let k: CameraIntrinsics = optional_json(&a.intrinsics)?;
    k.validate()?;
    let inputs = if a.input.is_dir() { pngs(&a.input)? } else { vec![a.input.clone()] };
    fs::create_dir_all(a.out.join("noisy"))?;
    fs::create_dir_all(a.out.join("inpainted"))?;
    for (i, path) in inputs.iter().enumerate() {
        let clean = read_depth_png(path)?;
        let normals = estimate_normals(&clean, &k)?;
        let noisy = add_noise(&clean, &normals, &k, &params, noise_seed(a.seed, i))?;
        let filled = inpaint(&noisy, a.inpaint_kernel)?;
        write_depth_png(&a.out.join("noisy").join(file_name(path)), &noisy)?;
        write_depth_png(&a.out.join("inpainted").join(file_name(path)), &filled)?;
    }
    Ok(json!({ "frames": inputs.len() }))
}

fn encode(a: EncodeArgs) -> Result<serde_json::Value> {
    let k: CameraIntrinsics = optional_json(&a.intrinsics)?;
    k.validate()?;
    let files = pngs(&a.depth)?;
    let poses = parse_trajectory(&fs::read_to_string(&a.poses)?)?;
    if poses.len() != files.len() {
        return Err(Error::Parameter(format!("{} poses for {} depth frames", poses.len(), files.len())));
    }
    fs::create_dir_all(&a.out)?;
    for (path, pose) in files.iter().zip(&poses) {
        let depth = read_depth_png(path)?;
        let dha = encode_dha(&depth, pose, &k, a.floor_height)?;
        let stem = path.file_stem().expect("png has a stem").to_string_lossy();
        let mut w = BufWriter::new(fs::File::create(a.out.join(format!("{stem}.bin")))?);
        write_dha(&dha, &mut w)?;
        w.flush()?;
        if a.previews {
            write_dha_previews(&a.out, &stem, &dha, k.far)?;
        }
    }
    Ok(json!({ "frames": files.len() }))
}

fn stats(a: StatsArgs) -> Result<serde_json::Value> {
    let taxonomy = match &a.taxonomy {
        Some(p) => read_json(p)?,
        None => ClassTaxonomy::indoor(),
    };
    let value = if let Some(dir) = &a.labels {
        let frames = pngs(dir)?.iter().map(|p| read_label_png(p)).collect::<Result<Vec<_>>>()?;
        let freq = class_frequency(&frames, &taxonomy)?;
        let by_name: BTreeMap<&str, f64> = taxonomy
            .iter()
            .filter(|(id, _)| *id != taxonomy.background())
            .map(|(id, name)| (name, freq[id.index()]))
            .collect();
        json!({ "frames": frames.len(), "class_frequency": by_name })
    } else {
        let layouts = a.layouts.iter().map(|p| read_json(p)).collect::<Result<Vec<SceneLayout>>>()?;
        let priors = PriorSet {
            pairwise: pairwise_priors_from_layouts(&layouts, a.min_support)?,
            wall: Vec::new(),
            cooccurrence: Some(cooccurrence_from_layouts(&layouts, &taxonomy)?),
        };
        serde_json::to_value(priors)?
    };
    emit(&a.out, &value)?;
    Ok(json!(null))
}

fn eval(a: EvalArgs) -> Result<serde_json::Value> {
    let taxonomy = match &a.taxonomy {
        Some(p) => read_json(p)?,
        None => ClassTaxonomy::indoor(),
    };
    let mut m = ConfusionMatrix::for_taxonomy(&taxonomy);
    for gt_path in pngs(&a.gt)? {
        let pred_path = a.pred.join(file_name(&gt_path));
        if !pred_path.is_file() {
            return Err(Error::Parameter(format!("no prediction for {}", gt_path.display())));
        }
        m.accumulate(&read_label_png(&gt_path)?, &read_label_png(&pred_path)?)?;
    }
    emit(&a.out, &serde_json::to_value(EvalReport::new(&m, &taxonomy)?)?)?;
    Ok(json!(null))
}

fn gen(a: GenArgs) -> Result<serde_json::Value> {
    let mut config = PipelineConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(f) = a.frames {
        config.frames = f;
    }
    if let Some(o) = a.output {
        config.output = o;
    }
    if let Some(p) = a.preset {
        config.preset = p;
    }
    if a.workers.is_some() {
        config.workers = a.workers;
    }
    config.hierarchical |= a.hierarchical;
    config.previews |= a.previews;
    Ok(serde_json::to_value(generate_dataset(&config)?)?)
}

fn error_line(e: &Error) -> serde_json::Value {
    match e {
        Error::Stage { stage, frame, source } => json!({
            "error": e.kind(),
            "stage": stage,
            "frame": frame,
            "cause": source.kind(),
            "message": e.to_string(),
        }),
        _ => json!({ "error": e.kind(), "message": e.to_string() }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "usage", "message": first }));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Arrange(a) => arrange(a),
        Command::Render(a) => render(a),
        Command::Corrupt(a) => corrupt(a),
        Command::Encode(a) => encode(a),
        Command::Stats(a) => stats(a),
        Command::Eval(a) => eval(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(serde_json::Value::Null) => ExitCode::SUCCESS,
        Ok(summary) => {
            let _ = writeln!(std::io::stdout().lock(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}
