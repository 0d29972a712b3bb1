//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! gamma = -3.0
//! delta = 0.5
//! s = 1.0
//!
//! [grid]
//! N = 32
//! L = 8.0
//!
//! [initial]
//! kind = "maxwellian"
//! temperature = 1.0
//!
//! [solver]
//! T = 0.1
//! cfl = 0.25
//!
//! [diagnostics]
//! every = 1
//! snapshot_every = 10
//!
//! [barrier]
//! mu_prime = 0.25
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Only `model.gamma`, `grid.N` and `solver.T` are required. Unknown keys are
//! rejected so that typos do not silently fall back to defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use landau_core::coefficients::{compute_coefficients, ellipticity_spectrum};
use landau_core::diagnostics::{BarrierInputs, StructuralConstants};
use landau_core::grid::{inf_on_ball, make_maxwellian, random_mixture, DEFAULT_HALF_WIDTH};
use landau_core::io::read_snapshot;
use landau_core::{
    DistributionState, KernelTables, ModelParams, PositivityPolicy, Scheme, SolverConfig,
    VelocityGrid,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A config that failed to load. `key` is the dotted path of the offending
/// entry when one can be named.
#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{}: `{k}`: {}", self.path.display(), self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub barrier: BarrierSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory relative paths in the config resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub gamma: f64,
    /// Kernel amplitude; defaults to `1/(8 pi)` for Coulomb and 1 otherwise.
    #[serde(default)]
    pub a_gamma: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_s")]
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L", default = "default_half_width")]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSection {
    Maxwellian {
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        temperature: f64,
        #[serde(default)]
        mean: [f64; 3],
    },
    /// Seeded random Gaussian mixture.
    Mixture {
        #[serde(default = "default_components")]
        components: usize,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default = "default_temperature_range")]
        temperature_range: (f64, f64),
        #[serde(default = "one")]
        mass: f64,
    },
    /// A distribution snapshot written by an earlier run.
    Snapshot { path: PathBuf },
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Maxwellian {
            mass: 1.0,
            temperature: 1.0,
            mean: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default = "default_positivity")]
    pub positivity: PositivityPolicy,
    #[serde(default = "default_max_relative_change")]
    pub max_relative_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    /// Log a trajectory row every this many steps.
    #[serde(default = "default_every")]
    pub every: usize,
    /// Write a snapshot every this many logged rows; 0 keeps only the
    /// initial and final states.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// Trailing rows used by the growth monitor.
    #[serde(default = "default_blowup_window")]
    pub blowup_window: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            every: default_every(),
            snapshot_every: default_snapshot_every(),
            blowup_window: default_blowup_window(),
        }
    }
}

/// Gaussian bounds of the initial data. `C0` and `ell` default to the
/// tightest values the sampled initial state admits. `c0` and `C1` must be
/// given together; otherwise they derive from the fitted ellipticity constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    #[serde(rename = "C0", default)]
    pub c_initial: Option<f64>,
    #[serde(default = "default_mu_prime")]
    pub mu_prime: f64,
    #[serde(default)]
    pub ell: Option<f64>,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(rename = "C1", default)]
    pub big_c1: Option<f64>,
}

impl Default for BarrierSection {
    fn default() -> Self {
        BarrierSection {
            c_initial: None,
            mu_prime: default_mu_prime(),
            ell: None,
            rho: 1.0,
            c0: None,
            big_c1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.5
}
fn default_s() -> f64 {
    1.0
}
fn default_half_width() -> f64 {
    DEFAULT_HALF_WIDTH
}
fn default_components() -> usize {
    3
}
fn default_spread() -> f64 {
    1.5
}
fn default_temperature_range() -> (f64, f64) {
    (0.6, 1.6)
}
fn default_scheme() -> Scheme {
    Scheme::Heun
}
fn default_cfl() -> f64 {
    0.25
}
fn default_positivity() -> PositivityPolicy {
    PositivityPolicy::ClipToZero
}
fn default_max_relative_change() -> f64 {
    0.5
}
fn default_every() -> usize {
    1
}
fn default_snapshot_every() -> usize {
    10
}
fn default_blowup_window() -> usize {
    5
}
fn default_mu_prime() -> f64 {
    0.25
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Turns `missing field `N`` at path `grid` into `grid.N`.
fn dotted_key(path: &serde_path_to_error::Path, message: &str) -> Option<String> {
    let parent = path.to_string();
    let parent = if parent == "." { String::new() } else { parent };
    let field = message
        .split_once("missing field `")
        .and_then(|(_, rest)| rest.split_once('`'))
        .map(|(name, _)| name.to_string());
    match (parent.is_empty(), field) {
        (true, Some(f)) => Some(f),
        (false, Some(f)) => Some(format!("{parent}.{f}")),
        (false, None) => Some(parent),
        (true, None) => None,
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            key: None,
            message: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text).map_err(|mut e| {
            e.path = path.to_path_buf();
            e
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Parses and validates a TOML document. Relative paths resolve against
    /// the working directory.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let err = |key: Option<String>, message: String| ConfigError {
            path: PathBuf::from("<config>"),
            key,
            message,
        };
        let de = toml::Deserializer::parse(text).map_err(|e| err(None, e.to_string().trim_end().to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let message = e.inner().to_string().trim_end().to_string();
            err(dotted_key(e.path(), &message), message)
        })?;
        cfg.validate().map_err(|e| err(None, e.to_string()))?;
        Ok(cfg)
    }

    /// Re-checks every parameter constraint of the numerical modules.
    pub fn validate(&self) -> landau_core::Result<()> {
        self.params()?;
        self.grid()?;
        self.solver_config()?;
        if self.diagnostics.blowup_window < 2 {
            return Err(landau_core::LandauError::Configuration(
                "diagnostics.blowup_window must be at least 2".into(),
            ));
        }
        if !(self.barrier.mu_prime > 0.0) || !(self.barrier.rho > 0.0) {
            return Err(landau_core::LandauError::Configuration(
                "barrier.mu_prime and barrier.rho must be positive".into(),
            ));
        }
        if self.barrier.c0.is_some() != self.barrier.big_c1.is_some() {
            return Err(landau_core::LandauError::Configuration(
                "barrier.c0 and barrier.C1 must be given together".into(),
            ));
        }
        if let InitialSection::Mixture { components, .. } = self.initial {
            if components == 0 {
                return Err(landau_core::LandauError::Configuration(
                    "initial.components must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> landau_core::Result<ModelParams> {
        match self.model.a_gamma {
            Some(a) => ModelParams::with_amplitude(self.model.gamma, a, self.model.delta),
            None => ModelParams::new(self.model.gamma, self.model.delta),
        }
    }

    pub fn grid(&self) -> landau_core::Result<VelocityGrid> {
        VelocityGrid::new(self.grid.n, self.grid.l)
    }

    pub fn solver_config(&self) -> landau_core::Result<SolverConfig> {
        let mut cfg = SolverConfig::new(self.params()?, self.solver.t_end)?;
        cfg.scheme = self.solver.scheme;
        cfg.cfl = self.solver.cfl;
        cfg.dt_max = self.solver.dt_max;
        cfg.positivity = self.solver.positivity;
        cfg.max_relative_change = self.solver.max_relative_change;
        cfg.observe_every = self.diagnostics.every;
        cfg.s = self.model.s;
        cfg.rho = self.barrier.rho;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_state(&self) -> landau_core::Result<DistributionState> {
        let grid = self.grid()?;
        match &self.initial {
            InitialSection::Maxwellian {
                mass,
                temperature,
                mean,
            } => make_maxwellian(grid, *mass, *mean, *temperature),
            InitialSection::Mixture {
                components,
                spread,
                temperature_range,
                mass,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let comps = random_mixture(&mut rng, *components, *spread, *temperature_range, *mass);
                DistributionState::mixture(grid, &comps)
            }
            InitialSection::Snapshot { path } => {
                let snap = read_snapshot(&self.base_dir.join(path))?;
                grid.ensure_same(&snap.header.grid)?;
                snap.into_state()
            }
        }
    }

    /// Barrier inputs, filling `C0` and `ell` from `f0` where not given.
    pub fn barrier_inputs(&self, f0: &DistributionState) -> landau_core::Result<BarrierInputs> {
        let b = &self.barrier;
        let c_initial = match b.c_initial {
            Some(c) => c,
            None => {
                let g = *f0.grid();
                f0.values()
                    .iter()
                    .enumerate()
                    .map(|(k, fk)| {
                        let v = g.node(k);
                        fk * (b.mu_prime * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
                    })
                    .fold(0.0, f64::max)
            }
        };
        let ell = match b.ell {
            Some(e) => e,
            None => inf_on_ball(f0, b.rho)?,
        };
        Ok(BarrierInputs {
            c_initial,
            mu_prime: b.mu_prime,
            ell,
            rho: b.rho,
        })
    }

    /// `c0`, `C1` from the config, or derived from the ellipticity of `f0`.
    pub fn structural_constants(
        &self,
        f0: &DistributionState,
        tables: &KernelTables,
        inputs: &BarrierInputs,
    ) -> landau_core::Result<StructuralConstants> {
        if let (Some(c0), Some(c1)) = (self.barrier.c0, self.barrier.big_c1) {
            return StructuralConstants::explicit(c0, c1);
        }
        let params = self.params()?;
        let coeffs = compute_coefficients(f0, tables, &params)?;
        let ell = ellipticity_spectrum(&coeffs, f0, &params, inputs.ell, inputs.rho);
        StructuralConstants::from_ellipticity(ell.c_a_gamma, f0.mass())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\ngamma = -3.0\n[grid]\nN = 8\nL = 4.0\n[solver]\nT = 0.1\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.model.delta, 0.5);
        assert_eq!(cfg.solver.cfl, 0.25);
        assert_eq!(cfg.initial, InitialSection::default());
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn missing_grid_n_is_named() {
        let err = RunConfig::parse("[model]\ngamma = 0.0\n[grid]\nL = 4.0\n[solver]\nT = 0.1\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("grid.N"));
        assert!(err.to_string().contains("grid.N"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let err = RunConfig::parse(&format!("{MINIMAL}cfll = 1.0\n")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("solver.cfll"));
        assert!(err.message.contains("cfll"), "{}", err.message);
    }

    #[test]
    fn wrong_type_names_the_key_and_line() {
        let err = RunConfig::parse("[model]\ngamma = \"soft\"\n[grid]\nN = 8\n[solver]\nT = 0.1\n").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("model.gamma"));
        assert!(err.message.contains("line 2"), "{}", err.message);
    }

    #[test]
    fn constraints_are_revalidated() {
        let odd = MINIMAL.replace("N = 8", "N = 7");
        assert!(RunConfig::parse(&odd).is_err());
        let gamma = MINIMAL.replace("gamma = -3.0", "gamma = -4.0");
        assert!(RunConfig::parse(&gamma).is_err());
        let lone_c0 = format!("{MINIMAL}[barrier]\nc0 = 0.1\n");
        assert!(RunConfig::parse(&lone_c0).is_err());
    }

    #[test]
    fn mixture_is_seeded() {
        let text = format!("seed = 11\n{MINIMAL}[initial]\nkind = \"mixture\"\n");
        let a = RunConfig::parse(&text).unwrap().initial_state().unwrap();
        let b = RunConfig::parse(&text).unwrap().initial_state().unwrap();
        assert_eq!(a, b);
        let other = RunConfig::parse(&text.replace("seed = 11", "seed = 12")).unwrap();
        assert_ne!(a, other.initial_state().unwrap());
    }
}
