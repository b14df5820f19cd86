//! Simulation manifests: a TOML file naming the vignette set, the roster
//! and the run layout. Relative paths resolve against the manifest's
//! directory.

use std::path::{Path, PathBuf};

use nomiclaw_core::agent::{AgentBinding, AgentKind, InvocationParams};
use nomiclaw_core::protocol::{Condition, Vignette, DEFAULT_POINTS_TIE, DEFAULT_POINTS_WIN, DEFAULT_ROUNDS};
use serde::Deserialize;

use crate::error::{input, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub condition: Condition,
    pub vignettes: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub runs_per_vignette: u32,
    #[serde(default)]
    pub seed: u64,
    pub jobs: Option<usize>,
    /// Shuffle the seat order of every run (seeded); otherwise roster order.
    #[serde(default)]
    pub shuffle_seats: bool,
    #[serde(default)]
    pub game: GameSettings,
    pub backend: Option<BackendSettings>,
    /// Heterogeneous roster, one entry per agent.
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    /// Homogeneous layout: one group of identical agents per model.
    pub homogeneous: Option<HomogeneousSpec>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSettings {
    pub num_rounds: u32,
    pub points_win: i64,
    pub points_tie: i64,
}

impl Default for GameSettings {
    fn default() -> Self {
        Self { num_rounds: DEFAULT_ROUNDS, points_win: DEFAULT_POINTS_WIN, points_tie: DEFAULT_POINTS_TIE }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct BackendSettings {
    /// Overridden by `--backend-url` / `NOMIC_BACKEND_URL`.
    pub url: Option<String>,
    /// Requests per second across all workers.
    pub rate_limit: Option<f64>,
    /// Directory with replacement prompt templates.
    pub templates: Option<PathBuf>,
    #[serde(flatten)]
    pub params: InvocationParams,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: Option<String>,
    pub model: String,
    #[serde(default = "scripted")]
    pub kind: AgentKind,
    pub policy: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousSpec {
    pub models: Vec<String>,
    #[serde(default = "five")]
    pub agents_per_model: usize,
    #[serde(default = "scripted")]
    pub kind: AgentKind,
    pub policy: Option<String>,
}

fn scripted() -> AgentKind {
    AgentKind::Scripted
}

fn five() -> usize {
    5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VignetteFile {
    vignette: Vec<Vignette>,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let mut m: Manifest = toml::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.vignettes = base.join(&m.vignettes);
        m.output_dir = base.join(&m.output_dir);
        if let Some(b) = &mut m.backend {
            b.templates = b.templates.as_ref().map(|t| base.join(t));
        }
        for spec in m.agents.iter_mut().filter_map(|a| a.policy.as_mut()) {
            resolve_replay(spec, base);
        }
        if let Some(spec) = m.homogeneous.as_mut().and_then(|h| h.policy.as_mut()) {
            resolve_replay(spec, base);
        }
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> CliResult<()> {
        if self.runs_per_vignette == 0 {
            return Err(input("runs_per_vignette must be at least 1"));
        }
        if !self.vignettes.is_file() {
            return Err(input(format!("vignette file {} does not exist", self.vignettes.display())));
        }
        match self.condition {
            Condition::Heterogeneous => {
                if self.agents.len() < 2 {
                    return Err(input("a heterogeneous manifest needs at least two [[agents]]"));
                }
                if self.homogeneous.is_some() {
                    return Err(input("[homogeneous] is only valid with condition = \"homo\""));
                }
            }
            Condition::Homogeneous => {
                let h = self
                    .homogeneous
                    .as_ref()
                    .ok_or_else(|| input("a homogeneous manifest needs a [homogeneous] table"))?;
                if h.models.is_empty() || h.agents_per_model < 2 {
                    return Err(input("[homogeneous] needs models and at least two agents per model"));
                }
                if !self.agents.is_empty() {
                    return Err(input("[[agents]] is only valid with condition = \"hetero\""));
                }
            }
        }
        Ok(())
    }

    pub fn load_vignettes(&self) -> CliResult<Vec<Vignette>> {
        let path = &self.vignettes;
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let file: VignetteFile = toml::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        for v in &file.vignette {
            v.validate().map_err(|e| input(format!("{}: {e}", path.display())))?;
        }
        if file.vignette.is_empty() {
            return Err(input(format!("{} lists no vignettes", path.display())));
        }
        Ok(file.vignette)
    }

    /// Agent groups that each play `runs_per_vignette` runs per vignette:
    /// the single roster for heterogeneous manifests, one group per model
    /// for homogeneous ones.
    pub fn rosters(&self) -> Vec<Vec<AgentBinding>> {
        match &self.homogeneous {
            None => vec![self
                .agents
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    binding(a.id.clone().unwrap_or_else(|| format!("Agent_{}", i + 1)), &a.model, a.kind, &a.policy)
                })
                .collect()],
            Some(h) => h
                .models
                .iter()
                .map(|m| {
                    (1..=h.agents_per_model).map(|i| binding(format!("Agent_{i}"), m, h.kind, &h.policy)).collect()
                })
                .collect(),
        }
    }
}

fn resolve_replay(policy: &mut String, base: &Path) {
    if let Some(rest) = policy.strip_prefix("replay:") {
        let p = Path::new(rest.trim());
        if p.is_relative() {
            *policy = format!("replay:{}", base.join(p).display());
        }
    }
}

fn binding(id: String, model: &str, kind: AgentKind, policy: &Option<String>) -> AgentBinding {
    match kind {
        AgentKind::Backend => AgentBinding::backend(id, model),
        // The policy decides between scripted and stochastic.
        AgentKind::Scripted | AgentKind::Stochastic => {
            AgentBinding::scripted(id, model, policy.as_deref().unwrap_or("always_self_vote"))
        }
    }
}
