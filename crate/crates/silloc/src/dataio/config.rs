use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use silloc_core::coarse::{AxisSampling, SamplingSpec};
use silloc_core::pipeline::{Mode, PipelineConfig};
use silloc_core::rasterizer::Bounds;
use silloc_core::refine::RefineParams;
use silloc_core::synth::{CitySpec, CorruptionSpec, NoiseMode, PriorNoiseSpec, QuerySpec};
use silloc_core::{CameraIntrinsics, COARSE_RESOLUTION, FINE_RESOLUTION, MASK_THRESHOLD};

use super::{read_file, DataError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub city: u64,
    pub queries: u64,
    pub prior: u64,
    pub corruption: u64,
    pub refine: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            city: 0,
            queries: 1,
            prior: 2,
            corruption: 3,
            refine: 4,
        }
    }
}

impl Seeds {
    /// Every stream seeded from one number.
    pub fn all(seed: u64) -> Self {
        Seeds {
            city: seed,
            queries: seed,
            prior: seed,
            corruption: seed,
            refine: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CityConfig {
    pub bounds: [f64; 4],
    pub building_count: usize,
    pub side_range: [f64; 2],
    pub height_range: [f64; 2],
    pub min_gap: f64,
    pub l_shape_fraction: f64,
}

impl Default for CityConfig {
    fn default() -> Self {
        let s = CitySpec::default();
        CityConfig {
            bounds: [s.bounds.xmin, s.bounds.ymin, s.bounds.xmax, s.bounds.ymax],
            building_count: s.building_count,
            side_range: s.side_range.into(),
            height_range: s.height_range.into(),
            min_gap: s.min_gap,
            l_shape_fraction: s.l_shape_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConfig {
    pub count: usize,
    pub altitude_range: [f64; 2],
    pub pitch_range: [f64; 2],
    pub margin: f64,
    pub min_coverage: f64,
}

impl Default for QueryConfig {
    fn default() -> Self {
        let q = QuerySpec::default();
        QueryConfig {
            count: q.count,
            altitude_range: q.altitude_range.into(),
            pitch_range: q.pitch_range.into(),
            margin: q.margin,
            min_coverage: q.min_coverage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub mode: PriorMode,
    pub translation: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        let p = PriorNoiseSpec::calibrated(0);
        PriorConfig {
            mode: PriorMode::Uniform,
            translation: p.translation,
            yaw: p.yaw,
            pitch: p.pitch,
            roll: p.roll,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionConfig {
    pub target_iou: f64,
    pub dropout: f64,
    pub max_jitter: f64,
    pub hole_rate: f64,
    pub noise_cell: f64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        let c = CorruptionSpec::default();
        CorruptionConfig {
            target_iou: c.target_iou,
            dropout: c.dropout,
            max_jitter: c.max_jitter,
            hole_rate: c.hole_rate,
            noise_cell: c.noise_cell,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub range: f64,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
    pub yaw: Axis,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let s = SamplingSpec::default();
        let a = |a: AxisSampling| Axis {
            range: a.range,
            count: a.count,
        };
        SamplingConfig {
            x: a(s.x),
            y: a(s.y),
            z: a(s.z),
            yaw: a(s.yaw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub iterations: u32,
    pub beams: u32,
    pub candidates: u32,
    pub sigma_t: f64,
    pub sigma_yaw: f64,
    pub gamma: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        let r = RefineParams::default();
        RefineConfig {
            iterations: r.iterations,
            beams: r.beams,
            candidates: r.candidates,
            sigma_t: r.sigma_t,
            sigma_yaw: r.sigma_yaw,
            gamma: r.gamma,
        }
    }
}

/// Pinhole intrinsics at a reference resolution; scaled to each render size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraConfig {
    fn default() -> Self {
        let k = CameraIntrinsics::default_uav();
        CameraConfig {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinConfig {
    /// Prior half-widths, meters.
    pub deltas: Vec<f64>,
    /// Use only the first `queries` queries; all when absent.
    pub queries: Option<usize>,
}

impl Default for BasinConfig {
    fn default() -> Self {
        BasinConfig {
            deltas: vec![30.0, 50.0, 100.0, 200.0],
            queries: None,
        }
    }
}

/// Everything a run needs. Paths are relative to the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: PathBuf,
    pub queries: PathBuf,
    pub priors: PathBuf,
    pub masks: PathBuf,
    pub output: PathBuf,
    pub camera: CameraConfig,
    pub city: CityConfig,
    pub query: QueryConfig,
    pub prior: PriorConfig,
    /// Oracle masks when absent.
    pub corruption: Option<CorruptionConfig>,
    pub sampling: SamplingConfig,
    pub refine: RefineConfig,
    pub coarse_resolution: [u32; 2],
    pub fine_resolution: [u32; 2],
    pub near: f64,
    pub mask_threshold: u8,
    pub basin: BasinConfig,
    pub seeds: Seeds,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: "city.json".into(),
            queries: "queries.csv".into(),
            priors: "priors.csv".into(),
            masks: "masks".into(),
            output: "out".into(),
            camera: CameraConfig::default(),
            city: CityConfig::default(),
            query: QueryConfig::default(),
            prior: PriorConfig::default(),
            corruption: None,
            sampling: SamplingConfig::default(),
            refine: RefineConfig::default(),
            coarse_resolution: COARSE_RESOLUTION.into(),
            fine_resolution: FINE_RESOLUTION.into(),
            near: silloc_core::geometry::DEFAULT_NEAR,
            mask_threshold: MASK_THRESHOLD,
            basin: BasinConfig::default(),
            seeds: Seeds::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn invalid(at: &str, e: impl ToString) -> DataError {
    DataError::Schema {
        at: at.into(),
        msg: e.to_string(),
    }
}

impl RunConfig {
    pub fn parse(document: &[u8], base_dir: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(document);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            invalid(if at == "." { "config" } else { &at }, e.into_inner())
        })?;
        cfg.base_dir = base_dir.to_owned();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_owned);
        let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
        Self::parse(&read_file(path)?, &dir)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let [cw, ch] = self.coarse_resolution;
        let [fw, fh] = self.fine_resolution;
        if cw == 0 || ch == 0 {
            return Err(invalid("coarse_resolution", "must be positive"));
        }
        if fw == 0 || fh == 0 {
            return Err(invalid("fine_resolution", "must be positive"));
        }
        if (fw, fh) != (cw, ch) && (fw, fh) != (2 * cw, 2 * ch) {
            return Err(invalid("fine_resolution", "must equal or double coarse_resolution"));
        }
        self.intrinsics()?;
        self.city_spec().validate().map_err(|e| invalid("city", e))?;
        self.prior_spec().validate().map_err(|e| invalid("prior", e))?;
        if let Some(c) = self.corruption_spec() {
            c.validate().map_err(|e| invalid("corruption", e))?;
        }
        let p = self.pipeline_config(Mode::Full);
        p.sampling.validate().map_err(|e| invalid("sampling", e))?;
        p.refine.validate().map_err(|e| invalid("refine", e))?;
        p.validate().map_err(|e| invalid("config", e))?;
        if self.basin.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid("basin.deltas", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `path` interpreted relative to the config directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    /// Fails with the first listed path that does not exist.
    pub fn require(&self, paths: &[(&str, &Path)]) -> Result<()> {
        for (field, p) in paths {
            let full = self.resolve(p);
            if !full.exists() {
                return Err(invalid(field, format!("{} does not exist", full.display())));
            }
        }
        Ok(())
    }

    pub fn mask_path(&self, id: &str) -> PathBuf {
        self.resolve(&self.masks).join(format!("{id}.pgm"))
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        let c = &self.camera;
        CameraIntrinsics::new(c.fx, c.fy, c.cx, c.cy, c.width, c.height).map_err(|e| invalid("camera", e))
    }

    pub fn city_spec(&self) -> CitySpec {
        let c = &self.city;
        let [xmin, ymin, xmax, ymax] = c.bounds;
        CitySpec {
            bounds: Bounds { xmin, ymin, xmax, ymax },
            building_count: c.building_count,
            side_range: c.side_range.into(),
            height_range: c.height_range.into(),
            min_gap: c.min_gap,
            l_shape_fraction: c.l_shape_fraction,
            seed: self.seeds.city,
        }
    }

    pub fn query_spec(&self) -> QuerySpec {
        let q = &self.query;
        QuerySpec {
            count: q.count,
            altitude_range: q.altitude_range.into(),
            pitch_range: q.pitch_range.into(),
            margin: q.margin,
            min_coverage: q.min_coverage,
            seed: self.seeds.queries,
        }
    }

    pub fn prior_spec(&self) -> PriorNoiseSpec {
        let p = &self.prior;
        PriorNoiseSpec {
            mode: match p.mode {
                PriorMode::Uniform => NoiseMode::Uniform,
                PriorMode::Gaussian => NoiseMode::Gaussian,
            },
            translation: p.translation,
            yaw: p.yaw,
            pitch: p.pitch,
            roll: p.roll,
            seed: self.seeds.prior,
        }
    }

    pub fn corruption_spec(&self) -> Option<CorruptionSpec> {
        self.corruption.as_ref().map(|c| CorruptionSpec {
            target_iou: c.target_iou,
            dropout: c.dropout,
            max_jitter: c.max_jitter,
            hole_rate: c.hole_rate,
            noise_cell: c.noise_cell,
            seed: self.seeds.corruption,
        })
    }

    pub fn pipeline_config(&self, mode: Mode) -> PipelineConfig {
        let a = |a: Axis| AxisSampling {
            range: a.range,
            count: a.count,
        };
        let s = &self.sampling;
        let r = &self.refine;
        PipelineConfig {
            sampling: SamplingSpec {
                x: a(s.x),
                y: a(s.y),
                z: a(s.z),
                yaw: a(s.yaw),
            },
            refine: RefineParams {
                iterations: r.iterations,
                beams: r.beams,
                candidates: r.candidates,
                sigma_t: r.sigma_t,
                sigma_yaw: r.sigma_yaw,
                gamma: r.gamma,
                width: self.fine_resolution[0],
                height: self.fine_resolution[1],
            },
            coarse_resolution: self.coarse_resolution.into(),
            near: self.near,
            mode,
        }
    }
}
