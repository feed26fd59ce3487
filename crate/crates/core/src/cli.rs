//! Command-line front end. Every subcommand resolves a [`RunConfig`] from defaults, an
//! optional `--config` file and its flags, writes the resolved table next to its outputs,
//! and draws all randomness from `run.seed`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::assets::{load_image, load_poses, read_focus_areas, read_ply, write_focus_areas, write_pgm, write_png, CameraPose, PoseFormat};
use crate::assets::ply::ply_bytes;
use crate::assets::pose::transforms_json_string;
use crate::collinearity::edges::{detect_edges, CannyParams};
use crate::collinearity::loss::CollinearityParams;
use crate::config::RunConfig;
use crate::extraction::{extract_with_mode, Extraction, ExtractionConfig, ExtractionError, ExtractionStats, Mode};
use crate::field::train::TrainView;
use crate::field::{global_box, load_checkpoint, save_checkpoint, train_toy, AnalyticField, CountingField, RadianceField, ToyFieldConfig, ToyHashField, TrainConfig};
use crate::fixtures::{build_fixture, FixtureKind, FixtureMeta, FixtureSpec};
use crate::focus::{detect_focus_areas, LrfConfig};
use crate::geometry::Aabb;
use crate::metrics::evaluate;
use crate::render::{ColorMode, RenderConfig};

pub const SYNOPSIS: &str = "\
usage: surfex [--threads N] [--config FILE] <command> [flags]

commands:
  make-fixture        --kind KIND --out DIR [--seed S]
  detect-focus-areas  --poses FILE --out areas.json [--max-areas 5] [--neighbors 20]
                      [--alpha-deg 10] [--min-cluster-size 20]
  render-edges        --image FILE --out edges.pgm [--sigma 1.4] [--low 0.1] [--high 0.2]
  train-toy           --poses FILE --images DIR [--areas areas.json] [--iters N] [--seed S]
                      --out field.bin
  extract             (--field field.bin | --analytic KIND|field.json) [--poses FILE]
                      [--points N] [--patch 3] [--eps3 0.0025|off] [--color-mode csd|standard]
                      [--bounds x0,y0,z0,x1,y1,z1] [--samples-per-ray N] [--seed S]
                      --out cloud.ply [--stats stats.json]
  eval                --ref a.ply --test b.ply --fscore-threshold T --out report.json
  bench-sdd           [--analytic KIND] [--points N] [--seed S] --out bench.json

exit status: 0 success, 1 usage error, 2 runtime error
";

#[derive(Debug, Parser)]
#[command(name = "surfex", version, about = "Surface point clouds from radiance fields")]
pub struct Cli {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key = value` configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Writes poses, images, ground-truth areas and the scene description of a fixture.
    MakeFixture {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Detects focus areas from camera poses.
    DetectFocusAreas {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_areas: Option<usize>,
        #[arg(long)]
        neighbors: Option<usize>,
        #[arg(long)]
        alpha_deg: Option<f64>,
        #[arg(long)]
        min_cluster_size: Option<usize>,
    },
    /// Writes the edge map of an image as a PGM.
    RenderEdges {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        low: Option<f64>,
        #[arg(long)]
        high: Option<f64>,
    },
    /// Trains the toy hash field and writes a checkpoint.
    TrainToy {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        areas: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extracts a point cloud from a trained or analytic field.
    Extract {
        #[arg(long, conflicts_with = "analytic", required_unless_present = "analytic")]
        field: Option<PathBuf>,
        /// Fixture kind or path to a scene description written by make-fixture.
        #[arg(long)]
        analytic: Option<String>,
        #[arg(long)]
        poses: Option<PathBuf>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        patch: Option<u32>,
        /// Relative slack of the surrounding-depth check, or `off`.
        #[arg(long)]
        eps3: Option<String>,
        #[arg(long)]
        color_mode: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        bounds: Option<String>,
        #[arg(long)]
        samples_per_ray: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Compares two point clouds.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        fscore_threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Counts field queries of two-step and naive extraction.
    BenchSdd {
        #[arg(long)]
        analytic: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

trait OrRuntime<T> {
    fn rt(self) -> Result<T, CliError>;
}

impl<T, E: std::fmt::Display> OrRuntime<T> for Result<T, E> {
    fn rt(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(e.to_string()))
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run(args: Vec<OsString>) -> i32 {
    if args.len() <= 1 {
        eprint!("{SYNOPSIS}");
        return 1;
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if code == 1 {
                eprint!("\n{SYNOPSIS}");
            }
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprint!("\n{SYNOPSIS}");
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().rt()?;
    pool.install(|| dispatch(cli.command, cfg))
}

fn set<T: ToString>(cfg: &mut RunConfig, key: &str, v: Option<T>) -> Result<(), CliError> {
    if let Some(v) = v {
        cfg.set(key, v.to_string()).map_err(usage)?;
    }
    Ok(())
}

fn get<T: std::str::FromStr>(cfg: &RunConfig, key: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    cfg.get(key).map_err(usage)
}

fn dir_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn write_echo(cfg: &RunConfig, dir: &Path, command: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).rt()?;
    fs::write(dir.join(format!("{command}.config")), cfg.echo()).rt()
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).rt()?;
    text.push('\n');
    fs::write(path, text).rt()
}

fn read_poses(path: &Path) -> Result<Vec<CameraPose>, CliError> {
    load_poses(path, PoseFormat::from_path(path)).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn dispatch(command: Command, mut cfg: RunConfig) -> Result<(), CliError> {
    match command {
        Command::MakeFixture { kind, out, seed } => {
            set(&mut cfg, "fixture.kind", kind)?;
            set(&mut cfg, "run.seed", seed)?;
            make_fixture(&out, &cfg)
        }
        Command::DetectFocusAreas {
            poses,
            out,
            max_areas,
            neighbors,
            alpha_deg,
            min_cluster_size,
        } => {
            set(&mut cfg, "lrf.max_areas", max_areas)?;
            set(&mut cfg, "lrf.neighbors", neighbors)?;
            set(&mut cfg, "lrf.alpha_deg", alpha_deg)?;
            set(&mut cfg, "lrf.min_cluster_size", min_cluster_size)?;
            let lrf = lrf_config(&cfg)?;
            lrf.validate().map_err(usage)?;
            let poses = read_poses(&poses)?;
            let areas = detect_focus_areas(&poses, &lrf).rt()?;
            log::info!("{} focus areas", areas.len());
            write_echo(&cfg, &dir_of(&out), "detect-focus-areas")?;
            write_focus_areas(&areas, &out).rt()
        }
        Command::RenderEdges { image, out, sigma, low, high } => {
            set(&mut cfg, "ism.canny_sigma", sigma)?;
            set(&mut cfg, "ism.canny_low", low)?;
            set(&mut cfg, "ism.canny_high", high)?;
            let canny = canny_params(&cfg)?;
            let img = load_image(&image).rt()?;
            let edges = detect_edges(&img, &canny).map_err(usage)?;
            write_echo(&cfg, &dir_of(&out), "render-edges")?;
            write_pgm(edges.width, edges.height, &edges.to_bytes(), &out).rt()
        }
        Command::TrainToy {
            poses,
            images,
            areas,
            iters,
            seed,
            out,
        } => {
            set(&mut cfg, "train.iterations", iters)?;
            set(&mut cfg, "run.seed", seed)?;
            train(&poses, &images, areas.as_deref(), &out, &cfg)
        }
        Command::Extract {
            field,
            analytic,
            poses,
            points,
            patch,
            eps3,
            color_mode,
            bounds,
            samples_per_ray,
            seed,
            out,
            stats,
        } => {
            set(&mut cfg, "run.points", points)?;
            set(&mut cfg, "sdd.patch", patch)?;
            match eps3.as_deref() {
                Some("off") => set(&mut cfg, "sdd.enabled", Some(false))?,
                other => {
                    set(&mut cfg, "sdd.eps3", other)?;
                    set(&mut cfg, "sdd.enabled", other.map(|_| true))?;
                }
            }
            set(&mut cfg, "csd.color_mode", color_mode)?;
            set(&mut cfg, "run.bounds", bounds)?;
            set(&mut cfg, "render.samples", samples_per_ray)?;
            set(&mut cfg, "run.seed", seed)?;
            let source = match (field, analytic) {
                (Some(f), _) => Source::Checkpoint(f),
                (None, Some(a)) => Source::Analytic(a),
                (None, None) => return Err(usage("one of --field or --analytic is required")),
            };
            extract(source, poses.as_deref(), &out, stats.as_deref(), &mut cfg)
        }
        Command::Eval {
            reference,
            test,
            fscore_threshold,
            out,
        } => {
            set(&mut cfg, "eval.fscore_threshold", fscore_threshold)?;
            if !cfg.is_explicit("eval.fscore_threshold") {
                return Err(usage("--fscore-threshold is required"));
            }
            let threshold: f64 = get(&cfg, "eval.fscore_threshold")?;
            let r = read_ply(&reference).rt()?;
            let t = read_ply(&test).rt()?;
            let rp: Vec<[f64; 3]> = r.positions().collect();
            let tp: Vec<[f64; 3]> = t.positions().collect();
            let metrics = evaluate(&tp, &rp, threshold).rt()?;
            #[derive(Serialize)]
            struct Report {
                reference_points: usize,
                test_points: usize,
                #[serde(flatten)]
                metrics: crate::metrics::CloudMetrics,
            }
            write_echo(&cfg, &dir_of(&out), "eval")?;
            write_json(
                &Report {
                    reference_points: rp.len(),
                    test_points: tp.len(),
                    metrics,
                },
                &out,
            )
        }
        Command::BenchSdd { analytic, points, seed, out } => {
            set(&mut cfg, "run.bench_points", points)?;
            set(&mut cfg, "run.seed", seed)?;
            bench(analytic.as_deref().unwrap_or("two_planes"), &out, &mut cfg)
        }
    }
}

fn lrf_config(cfg: &RunConfig) -> Result<LrfConfig, CliError> {
    Ok(LrfConfig {
        max_areas: get(cfg, "lrf.max_areas")?,
        neighbors: get(cfg, "lrf.neighbors")?,
        alpha_deg: get(cfg, "lrf.alpha_deg")?,
        min_cluster_size: get(cfg, "lrf.min_cluster_size")?,
        single_cluster: get(cfg, "lrf.single_cluster")?,
        t_search: None,
    })
}

fn canny_params(cfg: &RunConfig) -> Result<CannyParams, CliError> {
    Ok(CannyParams {
        sigma: get(cfg, "ism.canny_sigma")?,
        low: get(cfg, "ism.canny_low")?,
        high: get(cfg, "ism.canny_high")?,
    })
}

#[derive(Serialize)]
struct FixtureFile<'a> {
    spec: &'a FixtureSpec,
    meta: &'a FixtureMeta,
    field: &'a AnalyticField,
}

fn make_fixture(out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let kind: String = get(cfg, "fixture.kind")?;
    if kind.is_empty() {
        return Err(usage("--kind is required"));
    }
    let kind: FixtureKind = kind.parse().map_err(usage)?;
    let spec = FixtureSpec::new(kind).with_seed(get(cfg, "run.seed")?);
    let fixture = build_fixture(&spec).map_err(usage)?;
    let images_dir = out.join("images");
    fs::create_dir_all(&images_dir).rt()?;
    let mut poses = fixture.poses.clone();
    for p in &mut poses {
        p.id = format!("images/{}.png", p.id);
    }
    for (pose, img) in poses.iter().zip(fixture.render_images()) {
        write_png(&img, &out.join(&pose.id)).rt()?;
    }
    fs::write(out.join("transforms.json"), transforms_json_string(&poses).rt()? + "\n").rt()?;
    write_focus_areas(&fixture.meta.areas(), &out.join("areas_truth.json")).rt()?;
    write_json(
        &FixtureFile {
            spec: &fixture.spec,
            meta: &fixture.meta,
            field: &fixture.field,
        },
        &out.join("fixture.json"),
    )?;
    write_echo(cfg, out, "make-fixture")
}

fn image_path(dir: &Path, id: &str) -> PathBuf {
    let direct = dir.join(id);
    if direct.is_file() {
        return direct;
    }
    let named = dir.join(format!("{id}.png"));
    if named.is_file() {
        return named;
    }
    // ids written by make-fixture carry an `images/` prefix
    let base = Path::new(id).file_name().map(|f| dir.join(f));
    base.filter(|p| p.is_file()).unwrap_or(direct)
}

fn train(poses: &Path, images: &Path, areas: Option<&Path>, out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let tc = TrainConfig {
        iterations: get(cfg, "train.iterations")?,
        triplets_per_batch: get(cfg, "train.triplets_per_batch")?,
        samples: get(cfg, "train.samples")?,
        near: get(cfg, "train.near")?,
        far: get(cfg, "train.far")?,
        learning_rate: get(cfg, "train.learning_rate")?,
        lambda_col: get(cfg, "ism.lambda_col")?,
        collinearity: CollinearityParams {
            tau: get(cfg, "ism.tau")?,
            gamma: get(cfg, "ism.gamma")?,
            eps2: get(cfg, "ism.eps2")?,
            max_segment: get(cfg, "ism.max_segment")?,
        },
        canny: canny_params(cfg)?,
        seed: get(cfg, "run.seed")?,
        chunk_triplets: get(cfg, "train.chunk_triplets")?,
    };
    tc.validate().map_err(usage)?;
    let poses = read_poses(poses)?;
    let areas = match areas {
        Some(p) => read_focus_areas(p).rt()?,
        None => Vec::new(),
    };
    let imgs = poses
        .iter()
        .map(|p| load_image(&image_path(images, &p.id)))
        .collect::<Result<Vec<_>, _>>()
        .rt()?;
    let views = poses
        .iter()
        .zip(&imgs)
        .map(|(p, i)| TrainView::new(p, i, &tc.canny))
        .collect::<Result<Vec<_>, _>>()
        .rt()?;
    let scene = global_box(&poses).ok_or_else(|| CliError::Runtime("no poses".into()))?;
    let mut field = ToyHashField::new(ToyFieldConfig::default(), &scene, &areas, tc.seed).rt()?;
    let report = train_toy(&mut field, &views, &tc).rt()?;
    write_echo(cfg, &dir_of(out), "train-toy")?;
    save_checkpoint(&field, out).rt()?;
    let mut loss_path = out.as_os_str().to_owned();
    loss_path.push(".loss.json");
    write_json(&report_json(&report), Path::new(&loss_path))
}

#[derive(Serialize)]
struct LossHistory<'a> {
    loss: &'a [f64],
    photometric: &'a [f64],
    collinearity: &'a [f64],
}

fn report_json(r: &crate::field::TrainReport) -> LossHistory<'_> {
    LossHistory {
        loss: &r.loss,
        photometric: &r.photometric,
        collinearity: &r.collinearity,
    }
}

enum Source {
    Checkpoint(PathBuf),
    Analytic(String),
}

/// Field and optional default poses of an analytic source.
fn analytic_source(name: &str, cfg: &mut RunConfig) -> Result<(AnalyticField, Option<Vec<CameraPose>>), CliError> {
    if let Ok(kind) = name.parse::<FixtureKind>() {
        let fixture = build_fixture(&FixtureSpec::new(kind)).map_err(usage)?;
        set_render_defaults(cfg, &fixture.meta)?;
        return Ok((fixture.field, Some(fixture.poses)));
    }
    let text = fs::read_to_string(name).map_err(|e| usage(format!("--analytic {name:?} is neither a fixture kind nor a readable file: {e}")))?;
    #[derive(serde::Deserialize)]
    struct Described {
        meta: Option<FixtureMeta>,
        field: AnalyticField,
    }
    // a make-fixture scene description, or a bare field
    let (field, meta) = match serde_json::from_str::<Described>(&text) {
        Ok(d) => (d.field, d.meta),
        Err(_) => (serde_json::from_str::<AnalyticField>(&text).rt()?, None),
    };
    if let Some(m) = meta {
        set_render_defaults(cfg, &m)?;
    }
    Ok((field, None))
}

fn set_render_defaults(cfg: &mut RunConfig, meta: &FixtureMeta) -> Result<(), CliError> {
    cfg.set_default("render.near", meta.near.to_string()).map_err(usage)?;
    cfg.set_default("render.far", meta.far.to_string()).map_err(usage)?;
    cfg.set_default("render.samples", meta.samples.to_string()).map_err(usage)
}

fn extraction_config(cfg: &RunConfig, points_key: &str) -> Result<ExtractionConfig, CliError> {
    let color_mode: ColorMode = get(cfg, "csd.color_mode")?;
    let mut render = RenderConfig::new(get(cfg, "render.near")?, get(cfg, "render.far")?, get(cfg, "render.samples")?)
        .with_color_mode(color_mode)
        .with_resample(get(cfg, "render.resample")?);
    render.eps4 = get(cfg, "csd.eps4")?;
    let mut ec = ExtractionConfig::new(get(cfg, points_key)?, render);
    let patch: u32 = get(cfg, "sdd.patch")?;
    ec.patch_w = patch;
    ec.patch_h = patch;
    let enabled: bool = get(cfg, "sdd.enabled")?;
    ec.eps3 = if enabled { Some(get(cfg, "sdd.eps3")?) } else { None };
    let bounds = cfg.raw("run.bounds");
    ec.bounds = if bounds.is_empty() {
        None
    } else {
        Some(Aabb::parse(bounds).ok_or_else(|| usage(format!("cannot parse bounds {bounds:?}")))?)
    };
    ec.seed = get(cfg, "run.seed")?;
    ec.validate().map_err(usage)?;
    Ok(ec)
}

#[derive(Serialize)]
struct StatsFile {
    points: usize,
    #[serde(flatten)]
    stats: ExtractionStats,
}

fn finish_extraction(r: Result<Extraction, ExtractionError>) -> Result<Extraction, CliError> {
    match r {
        Ok(e) => Ok(e),
        Err(ExtractionError::Config(m)) => Err(CliError::Usage(m)),
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn extract(source: Source, poses: Option<&Path>, out: &Path, stats: Option<&Path>, cfg: &mut RunConfig) -> Result<(), CliError> {
    let explicit_poses = poses.map(read_poses).transpose()?;
    let (result, n) = match source {
        Source::Checkpoint(path) => {
            let field = load_checkpoint(&path).rt()?;
            let poses = explicit_poses.ok_or_else(|| usage("--poses is required with --field"))?;
            let ec = extraction_config(cfg, "run.points")?;
            (extract_with_mode(&field, &poses, &ec, Mode::TwoStep), ec.target_points)
        }
        Source::Analytic(name) => {
            let (field, default_poses) = analytic_source(&name, cfg)?;
            let poses = explicit_poses
                .or(default_poses)
                .ok_or_else(|| usage("--poses is required with a scene description file"))?;
            let ec = extraction_config(cfg, "run.points")?;
            (extract_with_mode(&field, &poses, &ec, Mode::TwoStep), ec.target_points)
        }
    };
    let e = finish_extraction(result)?;
    log::info!("extracted {} of {n} points in {} attempts", e.cloud.len(), e.stats.attempted);
    write_echo(cfg, &dir_of(out), "extract")?;
    fs::write(out, ply_bytes(&e.cloud)).rt()?;
    if let Some(s) = stats {
        write_json(
            &StatsFile {
                points: e.cloud.len(),
                stats: e.stats,
            },
            s,
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRun {
    field_queries: u64,
    #[serde(flatten)]
    stats: ExtractionStats,
}

#[derive(Serialize)]
struct BenchFile {
    fixture: String,
    points: usize,
    two_step: BenchRun,
    naive: BenchRun,
    query_ratio: f64,
    identical_clouds: bool,
}

#[derive(Serialize)]
struct BenchTiming {
    two_step_seconds: f64,
    naive_seconds: f64,
    wall_ratio: f64,
}

fn counted(field: &(impl RadianceField + ?Sized), poses: &[CameraPose], ec: &ExtractionConfig, mode: Mode) -> Result<(Extraction, u64, f64), CliError> {
    let counter = CountingField::new(field);
    let start = Instant::now();
    let e = finish_extraction(extract_with_mode(&counter, poses, ec, mode))?;
    Ok((e, counter.queries(), start.elapsed().as_secs_f64()))
}

fn bench(name: &str, out: &Path, cfg: &mut RunConfig) -> Result<(), CliError> {
    let (field, poses) = analytic_source(name, cfg)?;
    let poses = poses.ok_or_else(|| usage("bench-sdd needs a fixture kind"))?;
    let ec = extraction_config(cfg, "run.bench_points")?;
    let (two, q_two, s_two) = counted(&field, &poses, &ec, Mode::TwoStep)?;
    let (naive, q_naive, s_naive) = counted(&field, &poses, &ec, Mode::Naive)?;
    let file = BenchFile {
        fixture: name.to_string(),
        points: ec.target_points,
        identical_clouds: two.cloud == naive.cloud,
        query_ratio: q_naive as f64 / q_two as f64,
        two_step: BenchRun {
            field_queries: q_two,
            stats: two.stats,
        },
        naive: BenchRun {
            field_queries: q_naive,
            stats: naive.stats,
        },
    };
    log::info!("query ratio naive/two-step {:.3}", file.query_ratio);
    write_echo(cfg, &dir_of(out), "bench-sdd")?;
    write_json(&file, out)?;
    let mut timing_path = out.as_os_str().to_owned();
    timing_path.push(".timing.json");
    write_json(
        &BenchTiming {
            two_step_seconds: s_two,
            naive_seconds: s_naive,
            wall_ratio: s_naive / s_two,
        },
        Path::new(&timing_path),
    )
}
