use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::abstraction::Mode;
use crate::automata::{bundled, Dfa};
use crate::dynamics::ModelConfig;
use crate::error::{Error, Result};
use crate::geometry::PartitionConfig;
use crate::samples::{smallest_support_eps, NoiseDistribution};
use crate::synthesis::{Adversary, Horizon, Objective};

/// Fixed value or the smallest value the sample count certifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsC {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// CSV of disturbance samples; drawn from `distribution` when absent.
    #[serde(default)]
    pub samples: Option<PathBuf>,
    /// Ground truth used for synthetic samples and for simulation.
    pub distribution: NoiseDistribution,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    pub eps_c: EpsC,
    pub beta_c: f64,
    pub alpha: f64,
    /// Target cluster count.
    pub clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    /// Bundled automaton name (`phi1`, `phi2`, `phi3`, `safety`, `trivial`)
    /// or a path to a JSON automaton.
    pub dfa: String,
    /// Exact number of sweeps; unbounded when absent.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_objective")]
    pub objective: Objective,
}

fn default_objective() -> Objective {
    Objective::Reach
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_adversary")]
    pub adversary: Adversary,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_mode() -> Mode {
    Mode::Full
}
fn default_adversary() -> Adversary {
    Adversary::TwoLayer
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    10_000
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig { mode: Mode::Full, adversary: Adversary::TwoLayer, tol: default_tol(), max_iters: default_max_iters() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Number of initial cells drawn for the sweep.
    pub cells: usize,
    pub episodes: usize,
    /// Defaults to ten times the sweep count of value iteration.
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Trajectories exported per swept cell.
    #[serde(default)]
    pub record: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { cells: 20, episodes: 200, max_steps: None, seed: 1, record: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub model: ModelConfig,
    pub partition: PartitionConfig,
    pub noise: NoiseConfig,
    pub spec: SpecConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.noise;
        let bad = |m: String| Err(Error::Config(m));
        if !(n.alpha > 0.0 && n.alpha < 1.0) {
            return bad(format!("noise.alpha = {} must lie in (0, 1)", n.alpha));
        }
        if !(n.beta_c > 0.0 && n.beta_c < n.alpha) {
            return bad(format!("noise.beta_c = {} must lie in (0, alpha)", n.beta_c));
        }
        if let EpsC::Value(e) = n.eps_c {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("noise.eps_c = {e} must lie in (0, 1)"));
            }
        }
        if n.n_samples == 0 || n.clusters == 0 {
            return bad("noise.n_samples and noise.clusters must be positive".into());
        }
        let model = self.model.build();
        let d = self.partition.safe_box.dim();
        if d != model.state_dim() {
            return bad(format!("partition has dimension {d}, model state dimension {}", model.state_dim()));
        }
        if n.distribution.dim() != model.noise_dim() {
            return bad(format!("noise distribution has dimension {}, model expects {}", n.distribution.dim(), model.noise_dim()));
        }
        if !(self.synthesis.tol > 0.0) || self.synthesis.max_iters == 0 {
            return bad("synthesis.tol and synthesis.max_iters must be positive".into());
        }
        Ok(())
    }

    /// Support budget after resolving `auto`.
    pub fn eps_c(&self) -> f64 {
        match self.noise.eps_c {
            EpsC::Value(e) => e,
            EpsC::Auto(_) => smallest_support_eps(self.noise.n_samples, self.noise.beta_c),
        }
    }

    pub fn load_dfa(&self, base_dir: Option<&Path>) -> Result<Dfa> {
        if let Some(text) = bundled(&self.spec.dfa) {
            return Dfa::from_json(text);
        }
        let p = Path::new(&self.spec.dfa);
        let p = match base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };
        Dfa::load(&p)
    }

    pub fn horizon(&self) -> Horizon {
        match self.spec.horizon {
            Some(k) => Horizon::Bounded(k),
            None => Horizon::Unbounded { tol: self.synthesis.tol, max_iters: self.synthesis.max_iters },
        }
    }

    /// Serialized inputs of the abstraction stage, for cache keys.
    pub fn abstraction_inputs(&self) -> String {
        serde_json::json!({
            "model": self.model,
            "partition": self.partition,
            "noise": self.noise,
            "mode": self.synthesis.mode,
        })
        .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn presets_round_trip_and_validate() {
        for name in presets::NAMES {
            let cfg = presets::preset(name).unwrap();
            cfg.validate().unwrap();
            let back = RunConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back.to_json(), cfg.to_json());
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cfg = presets::preset("pendulum-phi1").unwrap();
        let text = cfg.to_json().replace("\"alpha\": 0.01", "\"alpha\": \"high\"");
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn alpha_must_exceed_beta_c() {
        let mut cfg = presets::preset("pendulum-phi1").unwrap();
        cfg.noise.beta_c = 0.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
