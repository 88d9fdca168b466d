//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use uvforge_core::camera::{orbit_viewpoints, DEFAULT_DISTANCE, DEFAULT_FOV_DEG};
use uvforge_core::{
    inspect, normalize_to_unit, rasterize_position_map, render_depth, render_textured, Condition,
    UvMask, Vec3, ViewLabel, Viewpoint,
};

use crate::backend::BackendKind;
use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::{self, PipelineConfig};

pub const ENDPOINT_ENV: &str = "UVFORGE_ENDPOINT";

#[derive(Debug, Parser)]
#[command(
    name = "uvforge",
    version,
    about = "Paint textures onto UV-mapped meshes with an image-generation backend"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full coarse-to-fine texturing pipeline.
    Texture(TextureArgs),
    /// Render a textured mesh from evenly spaced azimuths.
    Preview(PreviewArgs),
    /// Write the UV-space position map of a mesh.
    Posmap(PosmapArgs),
    /// Render a depth map from one viewpoint.
    Depth(DepthArgs),
    /// Print mesh statistics as JSON.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mock,
    Http,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Http => BackendKind::Http,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct TextureArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub prompt: Option<String>,
    #[arg(long)]
    pub negative_prompt: Option<String>,
    /// Reference image (PNG) used as the appearance condition.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// JSON file with `PipelineConfig` fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Per-request timeout in seconds for the http backend.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "atlas-res")]
    pub atlas_res: Option<usize>,
    #[arg(long = "view-res")]
    pub view_res: Option<usize>,
    /// Total viewpoints: 2, 4, 6 or 8.
    #[arg(long)]
    pub views: Option<usize>,
    /// Viewpoints per iteration: 1 or 2.
    #[arg(long = "per-iter")]
    pub per_iter: Option<usize>,
    #[arg(long)]
    pub dilation: Option<usize>,
    #[arg(long = "no-position-map")]
    pub no_position_map: bool,
    #[arg(long)]
    pub debug: bool,
}

#[derive(Debug, Args)]
pub struct PreviewArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Texture atlas PNG.
    #[arg(long)]
    pub texture: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub views: usize,
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    pub elevation: f64,
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(long, default_value = "preview")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PosmapArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = 2048)]
    pub res: usize,
    #[arg(long, default_value = "position_map.png")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Degrees around +Y; 0 looks from +Z.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub azimuth: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub elevation: f64,
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(long, default_value = "depth.png")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub mesh: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: uvforge <texture|preview|posmap|depth|inspect> [OPTIONS]; see `uvforge help`");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Texture(args) => texture(&args),
        Command::Preview(args) => preview(&args),
        Command::Posmap(args) => posmap(&args),
        Command::Depth(args) => depth(&args),
        Command::Inspect(args) => inspect_cmd(&args),
    }
}

/// Defaults, then the config file, then flags. The endpoint falls back to
/// `env_endpoint` when no flag is given.
pub fn effective_config(
    args: &TextureArgs,
    env_endpoint: Option<String>,
) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(b) = args.backend {
        cfg.backend.kind = b.into();
    }
    if let Some(e) = args.endpoint.clone().or(env_endpoint) {
        cfg.backend.endpoint = Some(e);
    }
    if let Some(t) = args.timeout {
        cfg.backend.timeout_secs = t;
    }
    if let Some(r) = args.retries {
        cfg.backend.retries = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.atlas_res {
        cfg.atlas_resolution = r;
    }
    if let Some(r) = args.view_res {
        cfg.view_resolution = r;
    }
    if let Some(v) = args.views {
        cfg.total_viewpoints = v;
    }
    if let Some(p) = args.per_iter {
        cfg.viewpoints_per_iteration = p;
    }
    if let Some(d) = args.dilation {
        cfg.dilation_radius = d;
    }
    if args.no_position_map {
        cfg.use_position_map = false;
    }
    if args.debug {
        cfg.debug = true;
    }
    cfg.validate()?;
    if cfg.backend.kind == BackendKind::Http && cfg.backend.endpoint.is_none() {
        return Err(Error::Config(format!(
            "--backend http needs --endpoint or {ENDPOINT_ENV}"
        )));
    }
    Ok(cfg)
}

fn texture(args: &TextureArgs) -> std::result::Result<(), Failure> {
    if args.prompt.is_none() && args.image.is_none() {
        return Err(Failure::Usage(
            "texture needs --prompt and/or --image".into(),
        ));
    }
    let cfg = effective_config(args, std::env::var(ENDPOINT_ENV).ok())?;
    let reference = args.image.as_ref().map(io::read_rgb_png).transpose()?;
    let condition = Condition::new(args.prompt.clone(), reference, args.negative_prompt.clone())
        .map_err(Error::from)?;
    let out = pipeline::run(&args.mesh, &condition, &cfg)?;
    out.write(&args.out)?;
    println!(
        "wrote {} ({} requests, {:.2}s)",
        args.out.join("texture.png").display(),
        out.trace.requests.len(),
        out.trace.elapsed_secs
    );
    Ok(())
}

fn load_normalized(path: &Path) -> Result<uvforge_core::Mesh> {
    Ok(normalize_to_unit(&io::load_mesh(path)?)?)
}

fn check_size(name: &str, size: usize) -> std::result::Result<(), Failure> {
    if size == 0 || size > 16384 {
        return Err(Failure::Usage(format!(
            "{name} must be in 1..=16384, got {size}"
        )));
    }
    Ok(())
}

fn preview(args: &PreviewArgs) -> std::result::Result<(), Failure> {
    if args.views == 0 {
        return Err(Failure::Usage("--views must be at least 1".into()));
    }
    check_size("--size", args.size)?;
    let mesh = load_normalized(&args.mesh)?;
    let atlas = io::read_rgb_png(&args.texture)?;
    let colored = UvMask::filled(atlas.width(), atlas.height(), true);
    let views = orbit_viewpoints(
        args.views,
        args.elevation,
        DEFAULT_DISTANCE,
        DEFAULT_FOV_DEG,
    );
    let digits = (args.views - 1).to_string().len().max(3);
    for (i, view) in views.iter().enumerate() {
        let (image, _, _) = render_textured(&mesh, &atlas, &colored, view, args.size, args.size)
            .map_err(Error::from)?;
        io::write_rgb_png(args.out.join(format!("view_{i:0digits$}.png")), &image)?;
    }
    println!("wrote {} views to {}", views.len(), args.out.display());
    Ok(())
}

fn posmap(args: &PosmapArgs) -> std::result::Result<(), Failure> {
    check_size("--res", args.res)?;
    let mesh = load_normalized(&args.mesh)?;
    let pm = rasterize_position_map(&mesh, args.res, args.res);
    io::write_rgb16_png(&args.out, &pm.map)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn depth(args: &DepthArgs) -> std::result::Result<(), Failure> {
    check_size("--size", args.size)?;
    let mesh = load_normalized(&args.mesh)?;
    let (az, el) = (args.azimuth.to_radians(), args.elevation.to_radians());
    let eye = Vec3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos()) * DEFAULT_DISTANCE;
    let view = Viewpoint::look_at_origin(eye, DEFAULT_FOV_DEG, ViewLabel::Custom("cli".into()));
    view.validate().map_err(Error::from)?;
    let depth = render_depth(&mesh, &view, args.size, args.size);
    io::write_depth_png(&args.out, &depth)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn inspect_cmd(args: &InspectArgs) -> std::result::Result<(), Failure> {
    let r = inspect(&io::load_mesh(&args.mesh)?);
    let json = serde_json::json!({
        "vertices": r.vertices,
        "faces": r.faces,
        "charts": r.charts,
        "dropped_degenerate": r.dropped_degenerate,
        "ignored_directives": r.ignored_directives,
        "bounds_min": [r.bounds_min.x, r.bounds_min.y, r.bounds_min.z],
        "bounds_max": [r.bounds_max.x, r.bounds_max.y, r.bounds_max.z],
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json).map_err(Error::from)?
    );
    Ok(())
}
