//! Coarse-to-fine texturing.
//!
//! The coarse stage walks the viewpoint schedule. The first iteration
//! generates images from depth; later iterations inpaint the regions not yet
//! covered by the atlas. Each view is back-projected and fused into the
//! atlas. The refinement stage fills the remaining chart texels in UV space
//! (conditioned on the position map), enhances the atlas, and pads seams.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use uvforge_core::camera::{DEFAULT_DISTANCE, DEFAULT_FOV_DEG};
use uvforge_core::uvspace::{backproject_with, position_map_from};
use uvforge_core::{
    compose_grid, dilate_seams, fuse, inspect, normalize_depth_for_conditioning, normalize_to_unit,
    render_depth, render_textured, schedule_viewpoints, split_grid, Backend, BackprojectOptions,
    Condition, ControlKind, DepthMap, Grid, Mask, Mesh, MeshReport, PositionMap, RgbImage,
    SampleKind, SampleRequest, TextureAtlas, UvMask, UvRaster, Viewpoint,
};

use crate::backend::{sample, BackendConfig};
use crate::error::{Error, Result};
use crate::io;

const MIN_RESOLUTION: usize = 16;
const MAX_RESOLUTION: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub atlas_resolution: usize,
    pub view_resolution: usize,
    pub total_viewpoints: usize,
    pub viewpoints_per_iteration: usize,
    pub coarse_strength: f64,
    pub refine_strength: f64,
    pub use_position_map: bool,
    pub seed: u64,
    pub dilation_radius: usize,
    /// Keep per-iteration images for `debug/`.
    pub debug: bool,
    pub backend: BackendConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            atlas_resolution: 2048,
            view_resolution: 512,
            total_viewpoints: 6,
            viewpoints_per_iteration: 2,
            coarse_strength: 1.0,
            refine_strength: 0.75,
            use_position_map: true,
            seed: 0,
            dilation_radius: 3,
            debug: false,
            backend: BackendConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, res) in [
            ("atlas_resolution", self.atlas_resolution),
            ("view_resolution", self.view_resolution),
        ] {
            if !res.is_power_of_two() || !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&res) {
                return Err(Error::Config(format!(
                    "{name} must be a power of two in [{MIN_RESOLUTION}, {MAX_RESOLUTION}], got {res}"
                )));
            }
        }
        for (name, s) in [
            ("coarse_strength", self.coarse_strength),
            ("refine_strength", self.refine_strength),
        ] {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {s}")));
            }
        }
        self.schedule().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<Vec<Vec<Viewpoint>>> {
        if self.total_viewpoints == 0 {
            return Err(Error::EmptySchedule);
        }
        let s = schedule_viewpoints(
            self.total_viewpoints,
            self.viewpoints_per_iteration,
            DEFAULT_DISTANCE,
            DEFAULT_FOV_DEG,
        )?;
        Ok(s.iterations)
    }

    /// Coarse iterations plus the two refinement requests.
    pub fn expected_requests(&self) -> usize {
        self.total_viewpoints
            .div_ceil(self.viewpoints_per_iteration)
            + 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewRecord {
    pub iteration: usize,
    pub label: String,
    pub seed: u64,
    pub colored_before: f64,
    pub colored_after: f64,
    pub valid_texels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub kind: String,
    pub seed: u64,
    pub strength: f64,
    pub width: usize,
    pub height: usize,
    pub control_kind: Option<String>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineRecord {
    pub kind: String,
    pub seed: u64,
    pub strength: f64,
    pub fill_texels: usize,
    pub uncolored_chart_texels_before: usize,
    pub uncolored_chart_texels_after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebugImage {
    pub name: String,
    pub image: RgbImage,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageTrace {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<PipelineConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSummary>,
    pub backend_id: String,
    pub coarse: Vec<ViewRecord>,
    pub refine: Vec<RefineRecord>,
    pub requests: Vec<RequestRecord>,
    pub elapsed_secs: f64,
    #[serde(skip)]
    pub debug: Vec<DebugImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub faces: usize,
    pub charts: usize,
    pub dropped_degenerate: usize,
    pub ignored_directives: usize,
}

impl From<MeshReport> for MeshSummary {
    fn from(r: MeshReport) -> Self {
        MeshSummary {
            vertices: r.vertices,
            faces: r.faces,
            charts: r.charts,
            dropped_degenerate: r.dropped_degenerate,
            ignored_directives: r.ignored_directives,
        }
    }
}

impl StageTrace {
    fn absorb(&mut self, other: StageTrace) {
        self.backend_id = other.backend_id;
        self.coarse.extend(other.coarse);
        self.refine.extend(other.refine);
        self.requests.extend(other.requests);
        self.elapsed_secs += other.elapsed_secs;
        self.debug.extend(other.debug);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn mask_image(mask: &Mask) -> RgbImage {
    mask.map(|&m| if m { [1.0; 3] } else { [0.0; 3] })
}

fn fraction(colored: &Mask, chart: &Mask) -> f64 {
    let total = chart.count();
    if total == 0 {
        return 0.0;
    }
    let hit = colored
        .as_slice()
        .iter()
        .zip(chart.as_slice())
        .filter(|(&c, &k)| c && k)
        .count();
    hit as f64 / total as f64
}

/// Requests go through here so every call is validated, timed and traced.
fn issue<B: Backend + ?Sized>(
    backend: &mut B,
    request: &SampleRequest,
    trace: &mut StageTrace,
) -> Result<RgbImage> {
    let resp = sample(backend, request)?;
    trace.backend_id = resp.backend_id;
    trace.requests.push(RequestRecord {
        kind: request.kind.as_str().to_owned(),
        seed: request.seed,
        strength: request.strength,
        width: request.width,
        height: request.height,
        control_kind: request.control_kind.map(|k| k.as_str().to_owned()),
        elapsed_secs: resp.elapsed.as_secs_f64(),
    });
    Ok(resp.image)
}

fn concat<T: Clone>(parts: &[Grid<T>]) -> Result<Grid<T>> {
    match parts {
        [one] => Ok(one.clone()),
        [a, b] => Ok(compose_grid(a, b)?),
        _ => unreachable!("schedules group one or two views"),
    }
}

fn split(image: RgbImage, n: usize) -> Result<Vec<RgbImage>> {
    if n == 1 {
        return Ok(vec![image]);
    }
    let (a, b) = split_grid(&image)?;
    Ok(vec![a, b])
}

struct ViewInput {
    depth: DepthMap,
    control: RgbImage,
    init: Option<RgbImage>,
    keep: Option<Mask>,
}

pub fn run_coarse<B: Backend + ?Sized>(
    mesh: &Mesh,
    condition: &Condition,
    backend: &mut B,
    config: &PipelineConfig,
) -> Result<(TextureAtlas, UvMask, StageTrace)> {
    config.validate()?;
    let uv = UvRaster::new(mesh, config.atlas_resolution, config.atlas_resolution);
    coarse_with(mesh, &uv, condition, backend, config)
}

fn coarse_with<B: Backend + ?Sized>(
    mesh: &Mesh,
    uv: &UvRaster,
    condition: &Condition,
    backend: &mut B,
    config: &PipelineConfig,
) -> Result<(TextureAtlas, UvMask, StageTrace)> {
    let start = Instant::now();
    let schedule = config.schedule()?;
    let (aw, ah) = uv.dims();
    let vres = config.view_resolution;
    let chart = uv.coverage();
    let options = BackprojectOptions::default();

    let mut trace = StageTrace::default();
    let mut atlas = TextureAtlas::filled(aw, ah, [0.0; 3]);
    let mut colored = UvMask::filled(aw, ah, false);

    for (it, views) in schedule.iter().enumerate() {
        let seed = config.seed.wrapping_add(it as u64);
        let inputs: Vec<ViewInput> = views
            .iter()
            .map(|view| -> Result<ViewInput> {
                if it == 0 {
                    let depth = render_depth(mesh, view, vres, vres);
                    let control = normalize_depth_for_conditioning(&depth);
                    Ok(ViewInput {
                        depth,
                        control,
                        init: None,
                        keep: None,
                    })
                } else {
                    let (image, masks, depth) =
                        render_textured(mesh, &atlas, &colored, view, vres, vres)?;
                    let keep = masks.coverage.and(&masks.uncolored.not())?;
                    let control = normalize_depth_for_conditioning(&depth);
                    Ok(ViewInput {
                        depth,
                        control,
                        init: Some(image),
                        keep: Some(keep),
                    })
                }
            })
            .collect::<Result<_>>()?;

        let controls: Vec<RgbImage> = inputs.iter().map(|v| v.control.clone()).collect();
        let control = concat(&controls)?;
        let (kind, init, keep) = if it == 0 {
            (SampleKind::Generate, None, None)
        } else {
            let inits: Vec<RgbImage> = inputs.iter().filter_map(|v| v.init.clone()).collect();
            let keeps: Vec<Mask> = inputs.iter().filter_map(|v| v.keep.clone()).collect();
            (
                SampleKind::Inpaint,
                Some(concat(&inits)?),
                Some(concat(&keeps)?),
            )
        };
        let request = SampleRequest {
            kind,
            condition: condition.clone(),
            init_image: init,
            keep_mask: keep,
            width: control.width(),
            height: control.height(),
            control_image: Some(control),
            control_kind: Some(ControlKind::Depth),
            seed,
            strength: config.coarse_strength,
        };
        let output = issue(backend, &request, &mut trace)?;
        if config.debug {
            let tag = format!("iter{it}");
            trace.debug.push(DebugImage {
                name: format!("{tag}_control"),
                image: request.control_image.clone().unwrap(),
            });
            if let (Some(init), Some(keep)) = (&request.init_image, &request.keep_mask) {
                trace.debug.push(DebugImage {
                    name: format!("{tag}_init"),
                    image: init.clone(),
                });
                trace.debug.push(DebugImage {
                    name: format!("{tag}_keep"),
                    image: mask_image(keep),
                });
            }
            trace.debug.push(DebugImage {
                name: format!("{tag}_output"),
                image: output.clone(),
            });
        }

        for ((view, input), half) in views.iter().zip(&inputs).zip(split(output, views.len())?) {
            let before = fraction(&colored, &chart);
            let (tex, valid) = backproject_with(mesh, uv, &half, view, &input.depth, &options)?;
            let (a, c) = fuse(&atlas, &colored, &tex, &valid)?;
            atlas = a;
            colored = c;
            trace.coarse.push(ViewRecord {
                iteration: it,
                label: view.label.as_str().to_owned(),
                seed,
                colored_before: before,
                colored_after: fraction(&colored, &chart),
                valid_texels: valid.count(),
            });
        }
        if config.debug {
            trace.debug.push(DebugImage {
                name: format!("iter{it}_atlas"),
                image: atlas.clone(),
            });
        }
    }
    trace.elapsed_secs = start.elapsed().as_secs_f64();
    Ok((atlas, colored, trace))
}

/// Refinement result with the intermediate atlas kept for inspection.
#[derive(Debug, Clone)]
pub struct Refined {
    pub atlas: TextureAtlas,
    /// Atlas after UV inpainting and enhancement, before seam dilation.
    pub before_dilation: TextureAtlas,
    /// Texels requested from UV inpainting.
    pub fill_mask: UvMask,
    pub trace: StageTrace,
}

pub fn run_refine<B: Backend + ?Sized>(
    mesh: &Mesh,
    coarse: &TextureAtlas,
    colored: &UvMask,
    condition: &Condition,
    backend: &mut B,
    config: &PipelineConfig,
) -> Result<(TextureAtlas, StageTrace)> {
    let r = refine_detailed(mesh, coarse, colored, condition, backend, config)?;
    Ok((r.atlas, r.trace))
}

pub fn refine_detailed<B: Backend + ?Sized>(
    mesh: &Mesh,
    coarse: &TextureAtlas,
    colored: &UvMask,
    condition: &Condition,
    backend: &mut B,
    config: &PipelineConfig,
) -> Result<Refined> {
    config.validate()?;
    let res = config.atlas_resolution;
    let uv = UvRaster::new(mesh, res, res);
    refine_with(
        mesh,
        &uv,
        coarse,
        colored,
        condition,
        backend,
        config,
        config.schedule()?.len() as u64,
    )
}

#[allow(clippy::too_many_arguments)]
fn refine_with<B: Backend + ?Sized>(
    mesh: &Mesh,
    uv: &UvRaster,
    coarse: &TextureAtlas,
    colored: &UvMask,
    condition: &Condition,
    backend: &mut B,
    config: &PipelineConfig,
    seed_offset: u64,
) -> Result<Refined> {
    let start = Instant::now();
    let (w, h) = uv.dims();
    if coarse.dims() != (w, h) || colored.dims() != (w, h) {
        return Err(Error::Config(format!(
            "coarse atlas is {}x{}, atlas_resolution is {w}",
            coarse.width(),
            coarse.height()
        )));
    }
    let PositionMap {
        map: position,
        coverage: chart,
    } = position_map_from(mesh, uv);
    let fill = chart.and(&colored.not())?.dilate(1).and(&colored.not())?;
    let (control, control_kind) = if config.use_position_map {
        (Some(position.clone()), Some(ControlKind::Position))
    } else {
        (None, None)
    };
    let mut trace = StageTrace::default();
    let uncolored_chart = |m: &Mask| {
        chart
            .as_slice()
            .iter()
            .zip(m.as_slice())
            .filter(|(&k, &c)| k && !c)
            .count()
    };
    let holes_before = uncolored_chart(colored);

    let inpaint_req = SampleRequest {
        kind: SampleKind::UvInpaint,
        condition: condition.clone(),
        init_image: Some(coarse.clone()),
        keep_mask: Some(colored.clone()),
        control_image: control.clone(),
        control_kind,
        seed: config.seed.wrapping_add(seed_offset),
        strength: config.refine_strength,
        width: w,
        height: h,
    };
    let inpainted = issue(backend, &inpaint_req, &mut trace)?;
    let mut filled = TextureAtlas::filled(w, h, [0.0; 3]);
    let mut painted = colored.clone();
    for i in 0..w * h {
        if colored.as_slice()[i] {
            filled.as_mut_slice()[i] = coarse.as_slice()[i];
        } else if fill.as_slice()[i] {
            filled.as_mut_slice()[i] = inpainted.as_slice()[i];
            painted.as_mut_slice()[i] = true;
        }
    }
    trace.refine.push(RefineRecord {
        kind: inpaint_req.kind.as_str().to_owned(),
        seed: inpaint_req.seed,
        strength: inpaint_req.strength,
        fill_texels: fill.count(),
        uncolored_chart_texels_before: holes_before,
        uncolored_chart_texels_after: uncolored_chart(&painted),
    });

    let hd_req = SampleRequest {
        kind: SampleKind::UvHd,
        condition: condition.clone(),
        init_image: Some(filled),
        keep_mask: None,
        control_image: control,
        control_kind,
        seed: config.seed.wrapping_add(seed_offset + 1),
        strength: config.refine_strength,
        width: w,
        height: h,
    };
    let enhanced = issue(backend, &hd_req, &mut trace)?;
    trace.refine.push(RefineRecord {
        kind: hd_req.kind.as_str().to_owned(),
        seed: hd_req.seed,
        strength: hd_req.strength,
        fill_texels: 0,
        uncolored_chart_texels_before: uncolored_chart(&painted),
        uncolored_chart_texels_after: uncolored_chart(&painted),
    });

    let atlas = dilate_seams(&enhanced, &painted, config.dilation_radius);
    if config.debug {
        trace.debug.push(DebugImage {
            name: "refine_position".into(),
            image: position,
        });
        trace.debug.push(DebugImage {
            name: "refine_fill_mask".into(),
            image: mask_image(&fill),
        });
        trace.debug.push(DebugImage {
            name: "refine_inpaint".into(),
            image: inpainted,
        });
        trace.debug.push(DebugImage {
            name: "refine_enhanced".into(),
            image: enhanced.clone(),
        });
    }
    trace.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(Refined {
        atlas,
        before_dilation: enhanced,
        fill_mask: fill,
        trace,
    })
}

/// Everything produced by a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub texture: TextureAtlas,
    pub coarse: TextureAtlas,
    pub colored: UvMask,
    pub position_map: PositionMap,
    pub mesh: Mesh,
    pub trace: StageTrace,
}

pub fn run(
    mesh_path: impl AsRef<Path>,
    condition: &Condition,
    config: &PipelineConfig,
) -> Result<RunOutput> {
    config.validate()?;
    let mut backend = config.backend.build(config.seed)?;
    run_with_backend(mesh_path, condition, config, &mut backend)
}

pub fn run_with_backend<B: Backend + ?Sized>(
    mesh_path: impl AsRef<Path>,
    condition: &Condition,
    config: &PipelineConfig,
    backend: &mut B,
) -> Result<RunOutput> {
    let mesh = io::load_mesh(mesh_path)?;
    run_mesh(&mesh, condition, config, backend)
}

/// Normalizes `mesh` and runs both stages.
pub fn run_mesh<B: Backend + ?Sized>(
    mesh: &Mesh,
    condition: &Condition,
    config: &PipelineConfig,
    backend: &mut B,
) -> Result<RunOutput> {
    let start = Instant::now();
    config.validate()?;
    condition.validate()?;
    let mesh = normalize_to_unit(mesh)?;
    let res = config.atlas_resolution;
    let uv = UvRaster::new(&mesh, res, res);
    let (coarse, colored, coarse_trace) = coarse_with(&mesh, &uv, condition, backend, config)?;
    let iterations = config.schedule()?.len() as u64;
    let refined = refine_with(
        &mesh, &uv, &coarse, &colored, condition, backend, config, iterations,
    )?;

    let mut trace = StageTrace {
        config: Some(config.clone()),
        mesh: Some(inspect(&mesh).into()),
        ..StageTrace::default()
    };
    trace.absorb(coarse_trace);
    trace.absorb(refined.trace);
    trace.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(RunOutput {
        texture: refined.atlas,
        coarse,
        colored,
        position_map: position_map_from(&mesh, &uv),
        mesh,
        trace,
    })
}

impl RunOutput {
    /// Writes `texture.png`, `colored_mask.png`, `position_map.png`,
    /// `trace.json` and, when debug images were kept, `debug/*.png`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        io::write_rgb_png(dir.join("texture.png"), &self.texture)?;
        io::write_mask_png(dir.join("colored_mask.png"), &self.colored)?;
        io::write_rgb16_png(dir.join("position_map.png"), &self.position_map.map)?;
        io::write_text(dir.join("trace.json"), &self.trace.to_json()?)?;
        for d in &self.trace.debug {
            io::write_rgb_png(dir.join("debug").join(format!("{}.png", d.name)), &d.image)?;
        }
        Ok(())
    }

    pub fn elapsed(&self) -> Duration {
        Duration::from_secs_f64(self.trace.elapsed_secs)
    }
}
