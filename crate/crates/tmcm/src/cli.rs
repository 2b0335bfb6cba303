//! Command-line orchestration: scene ingestion, synthesis, mode analysis,
//! sweeps, pattern export, and direct operator manipulation.

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::io::{
    atomic_write, eigentrace_csv, load_tmatrix, pattern_csv, save_tmatrix, SceneConfig,
    TMatrixMetadata,
};
use crate::modes::{characteristic_modes, decompose_scene, sweep, SweepResult};
use crate::rotation::{rotate_tmatrix, rotation_matrix, EulerAngles};
use crate::synthesis::{synthesize_background, synthesize_total, Scene};
use crate::tmatrix::TMatrix;
use crate::translation::{general_regular, general_translation, global_cache};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

/// Environment variable naming the directory for cached background solves.
pub const CACHE_DIR_ENV: &str = "TMCM_CACHE_DIR";

#[derive(Parser)]
#[command(name = "tmcm", version, about = "T-matrix synthesis and characteristic modes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Bound the rayon worker pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Verbosity; at 1 or higher, operator cache statistics are printed.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the total (and optionally background) T-matrix of a scene.
    Synth(SynthArgs),
    /// Characteristic modes at the scene's single frequency.
    Modes(ModesArgs),
    /// Eigentraces over a frequency grid with mode tracking.
    Sweep(SweepArgs),
    /// Far-field pattern of one characteristic mode.
    Pattern(PatternArgs),
    /// Rotate a stored T-matrix by Euler angles.
    Rotate(RotateArgs),
    /// Emit a translation operator matrix.
    Translate(TranslateArgs),
}

#[derive(Args)]
struct SceneArgs {
    /// Scene configuration file.
    #[arg(long)]
    scene: PathBuf,
    /// Override the scene's padding policy.
    #[arg(long)]
    padding: Option<usize>,
}

impl SceneArgs {
    fn load(&self, k_override: Option<f64>) -> Result<(SceneConfig, Scene)> {
        let config = SceneConfig::load(&self.scene)?;
        let k = match k_override {
            Some(k) => k,
            None => config.wavenumber()?,
        };
        let base = self.scene.parent().unwrap_or(Path::new(".")).to_path_buf();
        let scene = config.to_scene(k, &base, self.padding)?;
        Ok((config, scene))
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Output file for the total T-matrix.
    #[arg(long)]
    output: PathBuf,
    /// Optional output file for the background-only T-matrix.
    #[arg(long)]
    background: Option<PathBuf>,
}

#[derive(Args)]
struct ModesArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Output CSV of modal eigenvalues.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Output CSV of tracked eigentraces.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    f_start_hz: Option<f64>,
    #[arg(long)]
    f_stop_hz: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
}

#[derive(Args)]
struct PatternArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Output CSV of the pattern grid.
    #[arg(long)]
    output: PathBuf,
    /// Mode index (by descending modal significance).
    #[arg(long, default_value_t = 0)]
    mode: usize,
    #[arg(long, default_value_t = 37)]
    n_theta: usize,
    #[arg(long, default_value_t = 72)]
    n_phi: usize,
    /// Radiate from the key structures only, omitting background scattering.
    #[arg(long)]
    exclude_background: bool,
}

#[derive(Args)]
struct RotateArgs {
    /// Input T-matrix file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    alpha_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    beta_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma_deg: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TranslateKindArg {
    /// Outgoing source waves re-expanded as regular waves.
    OutgoingToRegular,
    /// Regular waves re-expanded as regular waves.
    RegularToRegular,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    l_max: usize,
    /// Dimensionless displacement "kdx,kdy,kdz".
    #[arg(long)]
    kd: String,
    #[arg(long, value_enum, default_value_t = TranslateKindArg::OutgoingToRegular)]
    kind: TranslateKindArg,
    /// Wavenumber recorded in the output header.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
}

/// Run the CLI on explicit arguments; returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // a pre-existing global pool keeps its size; that is fine for tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli.command) {
        Ok(()) => {
            if cli.verbose >= 1 {
                let (hits, misses) = global_cache().stats();
                eprintln!("cache: translation kernels hits={hits} misses={misses}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Modes(args) => cmd_modes(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Pattern(args) => cmd_pattern(args),
        Command::Rotate(args) => cmd_rotate(args),
        Command::Translate(args) => cmd_translate(args),
    }
}

fn scene_meta(scene: &Scene) -> TMatrixMetadata {
    TMatrixMetadata {
        scene_hash: Some(scene.hash()),
        padding: Some(scene.padding),
        ..Default::default()
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let (_config, scene) = args.scene.load(None)?;
    let total = synthesize_total(&scene)?;
    let mut meta = scene_meta(&scene);
    meta.name = Some("total".into());
    save_tmatrix(&total, &args.output, &meta)?;
    if let Some(path) = &args.background {
        let (background, _) = synthesize_background(&scene)?;
        let mut meta = scene_meta(&scene);
        meta.name = Some("background".into());
        save_tmatrix(&background, path, &meta)?;
    }
    Ok(())
}

/// Background solve with an optional on-disk cache keyed by the scene's
/// background hash (directory from TMCM_CACHE_DIR).
fn background_with_cache(scene: &Scene) -> Result<TMatrix> {
    if scene.background_indices().is_empty() {
        return Ok(TMatrix::zeros(scene.k, scene.global_basis.clone()));
    }
    let cache_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
    if let Some(dir) = &cache_dir {
        let path = dir.join(format!("bg-{}.tmat", scene.background_hash()));
        if path.is_file() {
            return Ok(load_tmatrix(&path)?.0);
        }
    }
    let (background, _) = synthesize_background(scene)?;
    if let Some(dir) = &cache_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("bg-{}.tmat", scene.background_hash()));
        let mut meta = scene_meta(scene);
        meta.scene_hash = Some(scene.background_hash());
        meta.name = Some("background".into());
        save_tmatrix(&background, &path, &meta)?;
    }
    Ok(background)
}

fn cmd_modes(args: &ModesArgs) -> Result<()> {
    let (_config, scene) = args.scene.load(None)?;
    let total = synthesize_total(&scene)?;
    let background = background_with_cache(&scene)?;
    let set = characteristic_modes(&total, &background)?;
    let single = SweepResult { sets: vec![set], failures: vec![] };
    let csv = eigentrace_csv(&single, &scene.hash(), scene.padding);
    atomic_write(&args.output, csv.as_bytes())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let (config, scene) = args.scene.load(Some(1.0))?;
    let (f_start, f_stop, n_points) = match (&config.sweep, args.f_start_hz) {
        (_, Some(f0)) => (
            f0,
            args.f_stop_hz
                .ok_or_else(|| Error::InvalidArgument("--f-stop-hz required".into()))?,
            args.n_points
                .ok_or_else(|| Error::InvalidArgument("--n-points required".into()))?,
        ),
        (Some(s), None) => (s.f_start_hz, s.f_stop_hz, s.n_points),
        (None, None) => {
            return Err(Error::InvalidArgument(
                "scene config has no [sweep] section and no sweep flags given".into(),
            ))
        }
    };
    let result = sweep(&scene, f_start, f_stop, n_points)?;
    for (f, e) in &result.failures {
        eprintln!("warning: frequency {f} Hz failed: {e}");
    }
    let csv = eigentrace_csv(&result, &scene.hash(), scene.padding);
    atomic_write(&args.output, csv.as_bytes())
}

fn cmd_pattern(args: &PatternArgs) -> Result<()> {
    let (_config, scene) = args.scene.load(None)?;
    let set = decompose_scene(&scene)?;
    let mut grid = Vec::with_capacity(args.n_theta * args.n_phi);
    for i in 0..args.n_theta {
        let theta = std::f64::consts::PI * i as f64 / (args.n_theta.max(2) - 1) as f64;
        for j in 0..args.n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / args.n_phi.max(1) as f64;
            grid.push((theta, phi));
        }
    }
    let pattern = if args.exclude_background {
        crate::modes::characteristic_farfield_key_only(&scene, &set, args.mode, &grid)?
    } else {
        crate::modes::characteristic_farfield(&set, args.mode, &grid)?
    };
    let csv = pattern_csv(&pattern, &scene.hash(), scene.padding);
    atomic_write(&args.output, csv.as_bytes())
}

fn cmd_rotate(args: &RotateArgs) -> Result<()> {
    let (t, mut meta) = load_tmatrix(&args.input)?;
    let d = std::f64::consts::PI / 180.0;
    let angles =
        EulerAngles::new(args.alpha_deg * d, args.beta_deg * d, args.gamma_deg * d).canonicalize();
    let rotated = if angles.alpha == 0.0 && angles.beta == 0.0 && angles.gamma == 0.0 {
        t
    } else {
        rotate_tmatrix(&t, &rotation_matrix(&t.basis, angles))?
    };
    meta.notes.push(format!(
        "rotated by euler_deg ({}, {}, {})",
        args.alpha_deg, args.beta_deg, args.gamma_deg
    ));
    save_tmatrix(&rotated, &args.output, &meta)
}

fn cmd_translate(args: &TranslateArgs) -> Result<()> {
    let parts: Vec<f64> = args
        .kd
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("unparseable --kd '{}'", args.kd)))?;
    if parts.len() != 3 {
        return Err(Error::InvalidArgument("--kd needs three components".into()));
    }
    let kd = [parts[0], parts[1], parts[2]];
    let basis = BasisSpec::new(args.l_max);
    let op = match args.kind {
        TranslateKindArg::OutgoingToRegular => general_translation(&basis, kd)?,
        TranslateKindArg::RegularToRegular => general_regular(&basis, kd)?,
    };
    let t = TMatrix::new(op.matrix, args.k, basis)?;
    let meta = TMatrixMetadata {
        name: Some("translation-operator".into()),
        notes: vec![format!(
            "kind {:?}, kd ({}, {}, {})",
            args.kind as u8, kd[0], kd[1], kd[2]
        )],
        ..Default::default()
    };
    save_tmatrix(&t, &args.output, &meta)
}
