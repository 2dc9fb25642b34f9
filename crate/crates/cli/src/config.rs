use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vibronic_core::{
    DetuningRule, ElectronicConfig, Frame, Geometry, MotionPolicy, PhysicalParams, PotentialModel, Preset,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Task {
    Graph,
    GsScanXi,
    GsScanKappa,
    GsScanOmega,
    Wigner,
    BopesScan,
    Compare,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Graph => "graph",
            Task::GsScanXi => "gs-scan-xi",
            Task::GsScanKappa => "gs-scan-kappa",
            Task::GsScanOmega => "gs-scan-omega",
            Task::Wigner => "wigner",
            Task::BopesScan => "bopes-scan",
            Task::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GeometrySpec {
    Preset {
        preset: Preset,
    },
    Custom {
        positions: Vec<[f64; 3]>,
        motion: MotionPolicy,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "one")]
    pub x0: f64,
    /// Equilibrium distance; defaults to x0/ν for explicit potentials.
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub rabi: f64,
    #[serde(default = "default_detuning")]
    pub detuning: String,
}

fn one() -> f64 {
    1.0
}

fn default_detuning() -> String {
    "-V".into()
}

/// Uniformly spaced parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub samples: usize,
    /// Values are fractions of the critical coupling.
    #[serde(default)]
    pub relative: bool,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.samples {
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_e_tol")]
    pub e_tol: f64,
    /// Largest cutoff; defaults by mode count.
    #[serde(default)]
    pub max_cutoff: Option<usize>,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
}

fn default_e_tol() -> f64 {
    1e-8
}

fn default_max_dim() -> usize {
    4_000_000
}

fn default_eig_tol() -> f64 {
    1e-10
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            e_tol: default_e_tol(),
            max_cutoff: None,
            frame: Frame::default(),
            max_dim: default_max_dim(),
            eig_tol: default_eig_tol(),
        }
    }
}

impl SolverSpec {
    /// Largest cutoff for a product basis over `modes` coupled modes.
    pub fn max_cutoff_for(&self, modes: usize) -> usize {
        self.max_cutoff.unwrap_or(if modes <= 1 { 256 } else { 24 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WignerMode {
    #[default]
    Perpendicular,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    #[serde(default)]
    pub mode: WignerMode,
    /// Half-width of the grid in α; by default six standard deviations
    /// along each axis.
    #[serde(default)]
    pub extent: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    61
}

impl Default for WignerSpec {
    fn default() -> Self {
        Self {
            mode: WignerMode::default(),
            extent: None,
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BopesSpec {
    /// Multistart count; defaults to two per sign sector.
    #[serde(default)]
    pub starts: Option<usize>,
    /// Also solve the full quantum problem at every Rabi frequency.
    #[serde(default = "yes")]
    pub quantum: bool,
}

fn yes() -> bool {
    true
}

impl Default for BopesSpec {
    fn default() -> Self {
        Self {
            starts: None,
            quantum: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub task: Option<Task>,
    pub geometry: GeometrySpec,
    pub potential: PotentialModel,
    #[serde(default = "default_params")]
    pub params: ParamsSpec,
    /// Seed configuration of the resonant manifold, e.g. "001".
    #[serde(default)]
    pub seed: Option<String>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub scan: Option<Range>,
    #[serde(default)]
    pub wigner: WignerSpec,
    #[serde(default)]
    pub bopes: BopesSpec,
}

fn default_params() -> ParamsSpec {
    ParamsSpec {
        omega: 1.0,
        x0: 1.0,
        d: None,
        rabi: 0.0,
        detuning: default_detuning(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(r) = &self.scan {
            if r.samples == 0 {
                bail!("scan.samples must be positive");
            }
            if !r.start.is_finite() || !r.stop.is_finite() {
                bail!("scan range must be finite");
            }
        }
        if self.wigner.points < 2 || self.wigner.extent.is_some_and(|e| !(e > 0.0)) {
            bail!("wigner grid needs at least 2 points and a positive extent");
        }
        if !(self.solver.e_tol > 0.0) || !(self.solver.eig_tol > 0.0) {
            bail!("solver tolerances must be positive");
        }
        if let Some(m) = self.solver.max_cutoff {
            if m < 4 {
                bail!("solver.max_cutoff must be at least 4, got {m}");
            }
        }
        self.detuning()?;
        self.physical()?;
        Ok(())
    }

    pub fn detuning(&self) -> Result<DetuningRule> {
        self.params
            .detuning
            .parse()
            .map_err(|e| anyhow::anyhow!("params.detuning: {e}"))
    }

    pub fn physical(&self) -> Result<PhysicalParams> {
        let p = &self.params;
        let d = match (p.d, &self.potential) {
            (Some(d), _) => d,
            (None, PotentialModel::Explicit { nu, .. }) => p.x0 / nu,
            (None, _) => bail!("params.d is required for power-law potentials"),
        };
        Ok(PhysicalParams::new(p.omega, p.x0, d)?.with_rabi(p.rabi))
    }

    pub fn geometry(&self) -> Result<(Geometry, MotionPolicy)> {
        let d = self.physical()?.d;
        Ok(match &self.geometry {
            GeometrySpec::Preset { preset } => {
                let g = Geometry::preset(*preset, d);
                let policy = MotionPolicy::for_geometry(&g);
                (g, policy)
            }
            GeometrySpec::Custom { positions, motion } => (Geometry::custom(positions.clone())?, *motion),
        })
    }

    pub fn preset(&self) -> Option<Preset> {
        match self.geometry {
            GeometrySpec::Preset { preset } => Some(preset),
            GeometrySpec::Custom { .. } => None,
        }
    }

    pub fn seed(&self) -> Result<ElectronicConfig> {
        if let Some(s) = &self.seed {
            return s.parse().map_err(|e| anyhow::anyhow!("seed: {e}"));
        }
        let excited = match self.detuning()? {
            DetuningRule::Facilitation(m) => m.round().max(0.0) as usize,
            DetuningRule::Explicit(_) => bail!("a seed configuration is required with an explicit detuning"),
        };
        let n = match self.preset() {
            Some(p) => Geometry::preset(p, 1.0).len(),
            None => bail!("a seed configuration is required for custom geometries"),
        };
        // One excitation sits on the last atom, several fill the first ones.
        let k = excited.min(n - 1);
        let bits: String = if k == 1 {
            format!("{}1", "0".repeat(n - 1))
        } else {
            (0..n).map(|i| if i < k { '1' } else { '0' }).collect()
        };
        bits.parse().map_err(|e| anyhow::anyhow!("seed: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{
        "geometry": {"preset": "triangle"},
        "potential": {"kind": "explicit", "kappa": -0.6, "xi": -0.05, "nu": 0.1}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::parse(TRIANGLE).unwrap();
        assert_eq!(c.params.omega, 1.0);
        assert_eq!(c.solver.max_cutoff_for(1), 256);
        assert_eq!(c.solver.max_cutoff_for(4), 24);
        assert!((c.physical().unwrap().d - 10.0).abs() < 1e-12);
        assert_eq!(c.seed().unwrap().to_string(), "001");
    }

    #[test]
    fn default_seeds() {
        let tet = |det: &str| {
            RunConfig::parse(&format!(
                r#"{{"geometry": {{"preset": "tetrahedron"}},
                    "potential": {{"kind": "explicit", "kappa": -0.6, "xi": 0.0, "nu": 0.1}},
                    "params": {{"detuning": "{det}"}}}}"#
            ))
            .unwrap()
            .seed()
            .unwrap()
            .to_string()
        };
        assert_eq!(tet("-V"), "0001");
        assert_eq!(tet("-3V"), "1110");
    }

    #[test]
    fn errors_point_at_line() {
        let bad = "{\n  \"geometry\": {\"preset\": \"triangle\"},\n  \"potentail\": 1\n}";
        let msg = format!("{:#}", RunConfig::parse(bad).unwrap_err());
        assert!(msg.contains("line 3"), "{msg}");
        let bad = r#"{"geometry": {"preset": "triangle"}, "potential": {"kind": "explicit", "kappa": 0, "xi": 0, "nu": 0.1}, "scan": {"start": 0, "stop": 1, "samples": 0}}"#;
        assert!(RunConfig::parse(bad).is_err());
    }

    #[test]
    fn ranges() {
        let r = Range {
            start: 0.0,
            stop: 1.0,
            samples: 5,
            relative: false,
        };
        assert_eq!(r.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(Range { samples: 1, ..r }.values(), vec![0.0]);
    }
}
