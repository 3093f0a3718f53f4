//! Problem configuration: JSON, unknown keys rejected, defaults made explicit
//! before hashing.

use crate::error::{CliError, Result};
use nonlocal_fredholm::coefficients::{CoefficientConfig, CoefficientSet, HypothesisParams};
use nonlocal_fredholm::domain::Domain;
use nonlocal_fredholm::fredholm::{COMPATIBILITY_TOL, RANK_TOL};
use nonlocal_fredholm::grid::{GridFunction, PeriodicBox};
use nonlocal_fredholm::measure::MeasureSpec;
use nonlocal_fredholm::probes::CANONICAL_SEED;
use nonlocal_fredholm::variational::FormContext;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// A single shift or a uniform sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaConfig {
    Value(f64),
    Sweep(SweepRange),
}

/// Right-hand side `T`, paired with the nodal basis as `T_l = h^n g(x_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsConfig {
    /// Uniform values in `[-1, 1]` at the basis nodes, drawn from `seed`.
    #[default]
    Seeded,
    Constant {
        value: f64,
    },
    /// Smooth bump of the probe family.
    Bump {
        center: Vec<f64>,
        radius: f64,
    },
    /// Grid function in the `index_*,value` layout, relative to the config
    /// file.
    Csv {
        path: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rank")]
    pub rank: f64,
    #[serde(default = "default_compat")]
    pub compatibility: f64,
}

fn default_rank() -> f64 {
    RANK_TOL
}

fn default_compat() -> f64 {
    COMPATIBILITY_TOL
}

fn default_seed() -> u64 {
    CANONICAL_SEED
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: RANK_TOL, compatibility: COMPATIBILITY_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(rename = "box")]
    pub grid: BoxConfig,
    pub omega: Domain,
    pub measure: MeasureSpec,
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub rhs: RhsConfig,
    #[serde(default)]
    pub sigma: Option<SigmaConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Basis nodes must lie this many cells inside `Ω`.
    #[serde(default)]
    pub basis_margin_cells: f64,
    /// Number of resonance values to report (largest first); all if absent.
    #[serde(default)]
    pub spectrum_count: Option<usize>,
    /// Structural hypotheses checked before spectrum and solve.
    #[serde(default)]
    pub hypotheses: Option<HypothesisParams>,
}

/// A parsed config with its origin.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ProblemConfig,
    pub base_dir: PathBuf,
    pub hash: String,
}

/// Hex SHA-256 of the canonical serialization, defaults included.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `text`, reporting the failing field path and position.
pub fn parse(text: &str, origin: &str) -> Result<ProblemConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ProblemConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!("{origin}: field `{path}`: {inner}"))
    })?;
    validate(&cfg).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let config = parse(&text, &path.display().to_string())?;
    let hash = hash_of(&config);
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir, hash })
}

fn validate(cfg: &ProblemConfig) -> std::result::Result<(), String> {
    let bx = cfg.grid_box().map_err(|e| format!("field `box`: {e}"))?;
    cfg.omega.validate().map_err(|e| format!("field `omega`: {e}"))?;
    cfg.omega.check_placement(&bx).map_err(|e| format!("field `omega`: {e}"))?;
    CoefficientSet::from_config(&cfg.coefficients, cfg.grid.n).map_err(|e| format!("field `coefficients`: {e}"))?;
    let t = cfg.tolerances;
    if !(t.rank > 0.0 && t.rank < 1.0 && t.compatibility > 0.0 && t.compatibility < 1.0) {
        return Err("field `tolerances`: values must lie in (0, 1)".into());
    }
    if !(cfg.basis_margin_cells >= 0.0) {
        return Err("field `basis_margin_cells`: must be nonnegative".into());
    }
    if let Some(SigmaConfig::Sweep(r)) = &cfg.sigma {
        if !(r.lo < r.hi) || r.count < 2 {
            return Err("field `sigma`: sweep needs lo < hi and count ≥ 2".into());
        }
    }
    if let RhsConfig::Bump { center, radius } = &cfg.rhs {
        if center.len() != cfg.grid.n || !(*radius > 0.0) {
            return Err("field `rhs`: bump centre dimension or radius invalid".into());
        }
    }
    Ok(())
}

impl ProblemConfig {
    pub fn grid_box(&self) -> nonlocal_fredholm::Result<PeriodicBox> {
        PeriodicBox::new(self.grid.n, self.grid.half_width, self.grid.points)
    }

    pub fn context(&self) -> Result<FormContext> {
        let bx = self.grid_box()?;
        let cs = CoefficientSet::from_config(&self.coefficients, self.grid.n)?;
        Ok(FormContext::new(self.measure.clone(), cs, self.omega.clone(), bx)?)
    }

    /// The right-hand side as a grid function on `bx`.
    pub fn rhs_function(&self, bx: &PeriodicBox, base_dir: &Path) -> Result<GridFunction> {
        Ok(match &self.rhs {
            RhsConfig::Seeded => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mask = self.omega.mask(bx);
                let vals = mask.iter().map(|&m| if m { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
                GridFunction::from_values(*bx, vals)?
            }
            RhsConfig::Constant { value } => GridFunction::constant(*bx, *value),
            RhsConfig::Bump { center, radius } => {
                nonlocal_fredholm::probes::Bump::new(center.clone(), *radius).sample(bx)
            }
            RhsConfig::Csv { path } => {
                let p = base_dir.join(path);
                let file = std::fs::File::open(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                GridFunction::read_csv(*bx, file).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        })
    }

    /// `T_l = h^n g(x_l)` on the basis nodes.
    pub fn rhs_vector(&self, g: &GridFunction, basis: &[usize]) -> Vec<f64> {
        let vol = g.grid().cell_volume();
        basis.iter().map(|&i| vol * g.values()[i]).collect()
    }

    /// Shifts requested by `sigma`, defaulting to `σ₀ + 1`.
    pub fn sigmas(&self, sigma0: f64) -> Vec<f64> {
        match &self.sigma {
            None => vec![sigma0 + 1.0],
            Some(SigmaConfig::Value(v)) => vec![*v],
            Some(SigmaConfig::Sweep(r)) => {
                (0..r.count).map(|k| r.lo + (r.hi - r.lo) * k as f64 / (r.count - 1) as f64).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "box": {"n": 1, "L": 8.0, "N": 256},
        "omega": {"shape": "interval", "lo": -1.0, "hi": 1.0},
        "measure": {"atoms": [[1.0, 1.0]]},
        "coefficients": {"matrix": {"preset": "identity"}}
    }"#;

    #[test]
    fn defaults_are_filled_and_hashed() {
        let cfg = parse(MINIMAL, "t").unwrap();
        assert_eq!(cfg.seed, CANONICAL_SEED);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.rhs, RhsConfig::Seeded);
        let h = hash_of(&cfg);
        assert_eq!(h.len(), 64);
        assert_eq!(h, hash_of(&parse(MINIMAL, "t").unwrap()));
    }

    #[test]
    fn unknown_key_reports_path() {
        let bad = MINIMAL.replace("\"N\": 256", "\"N\": 256, \"M\": 3");
        match parse(&bad, "t") {
            Err(CliError::Config(msg)) => assert!(msg.contains("box") && msg.contains("line"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn placement_violation_is_config_error() {
        let bad = MINIMAL.replace("\"L\": 8.0", "\"L\": 3.0");
        assert!(matches!(parse(&bad, "t"), Err(CliError::Config(_))));
    }

    #[test]
    fn sigma_forms() {
        let cfg =
            parse(&MINIMAL.replace("\"box\"", "\"sigma\": {\"lo\": 0.0, \"hi\": 1.0, \"count\": 3}, \"box\""), "t")
                .unwrap();
        assert_eq!(cfg.sigmas(3.0), vec![0.0, 0.5, 1.0]);
        let cfg = parse(&MINIMAL.replace("\"box\"", "\"sigma\": -2.5, \"box\""), "t").unwrap();
        assert_eq!(cfg.sigmas(3.0), vec![-2.5]);
        assert_eq!(parse(MINIMAL, "t").unwrap().sigmas(3.0), vec![4.0]);
    }
}
