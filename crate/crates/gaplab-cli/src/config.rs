//! Run configuration: a flat key-value file with sections (TOML), chosen over
//! positional flags so runs archive and diff cleanly. CLI flags override file
//! values.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use gaplab_core::coupling::SimConfig;
use gaplab_core::domain::{
    ConvexDomain, ConvexPolygon, Disk, Ellipse, Interval, PlanarDomain, Rectangle,
};
use gaplab_core::potential::{Potential, Potential1d};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: String,
    pub length: Option<f64>,
    pub radius: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    /// Polygon vertices as a flat list x0, y0, x1, y1, ...
    pub vertices: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "default_potential_kind")]
    pub kind: String,
    pub curvature: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub gradient: Option<Vec<f64>>,
    /// Even polynomial coefficients of the 1D comparison potential
    /// (z^0, z^2, z^4, ...), used when the domain is an interval.
    pub even_coeffs: Option<Vec<f64>>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            kind: default_potential_kind(),
            curvature: None,
            center: None,
            gradient: None,
            even_coeffs: None,
        }
    }
}

fn default_potential_kind() -> String {
    "zero".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_n1d")]
    pub n_1d: usize,
}

fn default_h() -> f64 {
    1.0 / 128.0
}

fn default_n1d() -> usize {
    1000
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            h: default_h(),
            n_1d: default_n1d(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Coupling threshold; defaults to 4 sqrt(2 dt) if absent.
    pub eta: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub record_stride: u32,
}

fn default_dt() -> f64 {
    1e-5
}
fn default_delta() -> f64 {
    1e-3
}
fn default_horizon() -> f64 {
    0.2
}
fn default_n_traj() -> u32 {
    10_000
}
fn default_seed() -> u64 {
    42
}
fn default_stride() -> u32 {
    1000
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            dt: default_dt(),
            eta: None,
            delta: default_delta(),
            horizon: default_horizon(),
            n_traj: default_n_traj(),
            seed: default_seed(),
            record_stride: default_stride(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_d1_factor")]
    pub d1_factor: f64,
    #[serde(default = "default_d1_sensitivity")]
    pub d1_sensitivity_factor: f64,
    /// Interior pair count for the log-concavity sweep.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Modulus tolerance in units of the grid spacing.
    #[serde(default = "default_modulus_tol")]
    pub modulus_tol_factor: f64,
    /// Start points of the coupled pair (defaults chosen from the geometry).
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    /// Number of start pairs for the coupling-based gap estimate.
    #[serde(default = "default_gap_pairs")]
    pub gap_pairs: usize,
    /// Trajectories per start pair for the gap estimate (defaults to n_traj).
    pub gap_traj: Option<u32>,
}

fn default_d1_factor() -> f64 {
    1.05
}
fn default_d1_sensitivity() -> f64 {
    1.01
}
fn default_pairs() -> usize {
    10_000
}
fn default_modulus_tol() -> f64 {
    10.0
}
fn default_gap_pairs() -> usize {
    2
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            d1_factor: default_d1_factor(),
            d1_sensitivity_factor: default_d1_sensitivity(),
            pairs: default_pairs(),
            modulus_tol_factor: default_modulus_tol(),
            x0: None,
            y0: None,
            gap_pairs: default_gap_pairs(),
            gap_traj: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Any of "table", "structured", "raw-paths".
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_dir() -> String {
    "out".to_string()
}

fn default_formats() -> Vec<String> {
    vec!["table".to_string(), "structured".to_string()]
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| anyhow!("config parse error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid.h > 0.0) {
            bail!("grid.h must be positive (got {})", self.grid.h);
        }
        if self.grid.n_1d < 16 {
            bail!("grid.n_1d must be at least 16 (got {})", self.grid.n_1d);
        }
        if !(self.sim.dt > 0.0) {
            bail!("sim.dt must be positive (got {})", self.sim.dt);
        }
        if let Some(eta) = self.sim.eta {
            if !(eta > 0.0) {
                bail!("sim.eta must be positive (got {eta})");
            }
        }
        if !(self.sim.delta > 0.0) {
            bail!("sim.delta must be positive (got {})", self.sim.delta);
        }
        if !(self.sim.horizon > 0.0) {
            bail!("sim.horizon must be positive (got {})", self.sim.horizon);
        }
        if self.sim.n_traj == 0 {
            bail!("sim.n_traj must be at least 1");
        }
        if self.sim.record_stride == 0 {
            bail!("sim.record_stride must be at least 1");
        }
        if !(self.verify.d1_factor > 1.0) {
            bail!(
                "verify.d1_factor must exceed 1 (got {})",
                self.verify.d1_factor
            );
        }
        for f in &self.output.formats {
            if !matches!(f.as_str(), "table" | "structured" | "raw-paths") {
                bail!("output.formats entry {f:?} not one of table|structured|raw-paths");
            }
        }
        self.domain()?;
        Ok(())
    }

    /// The coupling threshold: explicit, or the minimum safe multiple of the
    /// per-step noise scale.
    pub fn eta(&self) -> f64 {
        self.sim
            .eta
            .unwrap_or_else(|| 4.0 * (2.0 * self.sim.dt).sqrt())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            eta: self.eta(),
            delta: self.sim.delta,
            horizon: self.sim.horizon,
            n_traj: self.sim.n_traj,
            seed: self.sim.seed,
            record_stride: self.sim.record_stride,
        }
    }

    pub fn domain(&self) -> Result<ConvexDomain> {
        let d = &self.domain;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| anyhow!("domain.{name} required for kind {:?}", d.kind))
        };
        match d.kind.as_str() {
            "interval" => Ok(ConvexDomain::Interval(
                Interval::new(need(d.length, "length")?).map_err(|e| anyhow!("domain: {e}"))?,
            )),
            "disk" => Ok(ConvexDomain::Planar(PlanarDomain::Disk(
                Disk::new(need(d.radius, "radius")?).map_err(|e| anyhow!("domain: {e}"))?,
            ))),
            "ellipse" => Ok(ConvexDomain::Planar(PlanarDomain::Ellipse(
                Ellipse::new(need(d.a, "a")?, need(d.b, "b")?)
                    .map_err(|e| anyhow!("domain: {e}"))?,
            ))),
            "rectangle" => Ok(ConvexDomain::Planar(PlanarDomain::Rectangle(
                Rectangle::new(need(d.width, "width")?, need(d.height, "height")?)
                    .map_err(|e| anyhow!("domain: {e}"))?,
            ))),
            "polygon" => {
                let flat = d
                    .vertices
                    .as_ref()
                    .ok_or_else(|| anyhow!("domain.vertices required for kind \"polygon\""))?;
                if flat.len() % 2 != 0 {
                    bail!("domain.vertices must hold coordinate pairs (even length)");
                }
                let pts: Vec<[f64; 2]> = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
                Ok(ConvexDomain::Planar(PlanarDomain::Polygon(
                    ConvexPolygon::new(pts).map_err(|e| anyhow!("domain: {e}"))?,
                )))
            }
            other => bail!("unknown domain.kind {other:?}"),
        }
    }

    pub fn potential_2d(&self) -> Result<Potential<2>> {
        let p = &self.potential;
        let vec2 = |v: &Option<Vec<f64>>, name: &str| -> Result<[f64; 2]> {
            match v {
                None => Ok([0.0, 0.0]),
                Some(xs) if xs.len() == 2 => Ok([xs[0], xs[1]]),
                Some(xs) => bail!("potential.{name} must have 2 entries, got {}", xs.len()),
            }
        };
        let pot = match p.kind.as_str() {
            "zero" => Potential::Zero,
            "quadratic" => Potential::Quadratic {
                curvature: p
                    .curvature
                    .ok_or_else(|| anyhow!("potential.curvature required for quadratic"))?,
                center: vec2(&p.center, "center")?,
            },
            "linear" => Potential::Linear {
                gradient: vec2(&p.gradient, "gradient")?,
            },
            other => bail!("unknown potential.kind {other:?}"),
        };
        pot.validate().map_err(|e| anyhow!("potential: {e}"))?;
        Ok(pot)
    }

    pub fn potential_1d(&self) -> Result<Potential<1>> {
        let p = &self.potential;
        let vec1 = |v: &Option<Vec<f64>>, name: &str| -> Result<[f64; 1]> {
            match v {
                None => Ok([0.0]),
                Some(xs) if xs.len() == 1 => Ok([xs[0]]),
                Some(xs) => bail!(
                    "potential.{name} must have 1 entry on an interval domain, got {}",
                    xs.len()
                ),
            }
        };
        let pot = match p.kind.as_str() {
            "zero" => Potential::Zero,
            "quadratic" => Potential::Quadratic {
                curvature: p
                    .curvature
                    .ok_or_else(|| anyhow!("potential.curvature required for quadratic"))?,
                center: vec1(&p.center, "center")?,
            },
            "linear" => Potential::Linear {
                gradient: vec1(&p.gradient, "gradient")?,
            },
            other => bail!("unknown potential.kind {other:?}"),
        };
        pot.validate().map_err(|e| anyhow!("potential: {e}"))?;
        Ok(pot)
    }

    /// The even comparison potential, for interval runs that specify one.
    pub fn comparison_potential(&self) -> Potential1d {
        match &self.potential.even_coeffs {
            Some(c) => Potential1d::from_even_coeffs(c.clone()),
            None => Potential1d::zero(),
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}
