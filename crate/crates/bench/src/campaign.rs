//! Declarative campaign files.
//!
//! A campaign is a TOML document with an optional `base_seed`, a default
//! `repetitions` count and a list of `[[experiment]]` tables:
//!
//! ```toml
//! base_seed = 0
//! repetitions = 25
//!
//! [[experiment]]
//! id = "branin-acc12"
//! function = "branin"
//! strategy = "accelerated"
//! q = 12
//! epsilon = 1e-2
//! max_stages = 80
//! ```
//!
//! Initial-design and pool sizes default to the catalog's table; stop rules
//! combine `epsilon` (target gap to the known minimum), `max_evaluations`
//! (initial design included), `max_updates` (evaluations after the initial
//! design) and `max_stages`. At least one must be given.

use std::collections::HashSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use aego::kriging::KernelFamily;
use aego::qmc::{self, CandidatePool};
use aego::strategies::{Lie, StrategyOptions};
use aego::testfns::{self, TestFunction};
use aego::{Domain, Objective, StopRule};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, IoContext, Result};
use crate::external::ExternalSpec;

fn default_repetitions() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    #[serde(default)]
    pub base_seed: u64,
    /// Default number of replicates per experiment.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
    /// Directory that relative `pool_file` paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    Ego,
    Accelerated,
    ConstantLiar,
}

impl StrategyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyName::Ego => "ego",
            StrategyName::Accelerated => "accelerated",
            StrategyName::ConstantLiar => "constant-liar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    /// Catalog function name; exclusive with `external`.
    #[serde(default)]
    pub function: Option<String>,
    #[serde(default)]
    pub external: Option<ExternalSpec>,
    pub strategy: StrategyName,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub pool_size: Option<usize>,
    /// CSV file with the candidate pool, replacing the Sobol pool.
    #[serde(default)]
    pub pool_file: Option<PathBuf>,
    #[serde(default)]
    pub initial_size: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    #[serde(default)]
    pub max_updates: Option<usize>,
    #[serde(default)]
    pub max_stages: Option<usize>,
    #[serde(default)]
    pub lie: Option<Lie>,
    #[serde(default)]
    pub kernel: Option<KernelFamily>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub mle_evals: Option<usize>,
    #[serde(default)]
    pub scan_per_dim: Option<usize>,
    #[serde(default)]
    pub local_starts: Option<usize>,
    #[serde(default)]
    pub parallel_evaluations: Option<bool>,
    #[serde(default)]
    pub repetitions: Option<usize>,
}

impl Campaign {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Campaign = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        let mut c = Self::from_toml_str(&text)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() {
            return Err(BenchError::Config("no [[experiment]] entries".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.experiments {
            let ok_id = !e.id.is_empty()
                && e.id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
            if !ok_id {
                return Err(BenchError::Config(format!(
                    "experiment id {:?} must be non-empty and use only letters, digits, '-', '_' or '.'",
                    e.id
                )));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(BenchError::Config(format!("duplicate experiment id {:?}", e.id)));
            }
        }
        Ok(())
    }

    /// Checks every experiment and builds what the replicates share.
    pub fn resolve(&self) -> Result<Vec<Experiment>> {
        self.experiments.iter().map(|e| Experiment::resolve(e, self)).collect()
    }
}

#[derive(Debug, Clone)]
pub enum ObjectiveSource {
    Catalog(TestFunction),
    External(ExternalSpec),
}

/// A validated experiment, ready to run replicates.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: String,
    pub function: String,
    pub source: ObjectiveSource,
    pub domain: Domain,
    pub strategy: StrategyName,
    pub q: usize,
    pub pool: Option<CandidatePool>,
    pub initial_size: usize,
    pub stop: StopRule,
    pub lie: Lie,
    pub options: StrategyOptions,
    pub repetitions: usize,
}

impl Experiment {
    fn resolve(cfg: &ExperimentConfig, campaign: &Campaign) -> Result<Self> {
        let bad = |msg: String| BenchError::Config(format!("experiment {:?}: {msg}", cfg.id));
        let (source, domain, minimum, sizes) = match (&cfg.function, &cfg.external) {
            (Some(name), None) => {
                let f = testfns::lookup(name)?;
                let sizes = (f.initial_size, f.pool_size);
                (
                    ObjectiveSource::Catalog(f.clone()),
                    f.domain.clone(),
                    Some(f.minimum),
                    sizes,
                )
            }
            (None, Some(ext)) => {
                let d = ext.domain()?;
                let s = d.dim();
                (
                    ObjectiveSource::External(ext.clone()),
                    d,
                    ext.minimum,
                    (10 * s, qmc::default_pool_size(s)),
                )
            }
            _ => return Err(bad("give exactly one of `function` or `external`".into())),
        };
        let function = match &source {
            ObjectiveSource::Catalog(f) => f.name.clone(),
            ObjectiveSource::External(e) => e.name(),
        };

        if function.contains([',', '"', '\n', '\r']) {
            return Err(bad(format!(
                "objective name {function:?} cannot contain commas, quotes or newlines"
            )));
        }

        let q = cfg.q.unwrap_or(1);
        if q == 0 {
            return Err(bad("q must be at least 1".into()));
        }
        if cfg.strategy == StrategyName::Ego && q != 1 {
            return Err(bad(format!("serial EGO adds one point per stage, got q = {q}")));
        }
        if cfg.strategy != StrategyName::ConstantLiar && cfg.lie.is_some() {
            return Err(bad("`lie` applies to constant-liar only".into()));
        }
        let initial_size = cfg.initial_size.unwrap_or(sizes.0);
        if initial_size < 2 {
            return Err(bad("initial_size must be at least 2".into()));
        }

        let pool = if cfg.strategy == StrategyName::Accelerated {
            let pool = match &cfg.pool_file {
                Some(path) => {
                    if cfg.pool_size.is_some() {
                        return Err(bad("give either pool_size or pool_file".into()));
                    }
                    let path = campaign.base_dir.join(path);
                    let file = File::open(&path).at(&path)?;
                    CandidatePool::read_csv(BufReader::new(file), &domain)?
                }
                None => qmc::sobol_pool(cfg.pool_size.unwrap_or(sizes.1), &domain)?,
            };
            if pool.len() < q {
                return Err(bad(format!("pool of {} points cannot fill batches of {q}", pool.len())));
            }
            Some(pool)
        } else {
            if cfg.pool_size.is_some() || cfg.pool_file.is_some() {
                return Err(bad("pool settings apply to the accelerated strategy only".into()));
            }
            None
        };

        let mut stop = StopRule::new();
        if let Some(eps) = cfg.epsilon {
            let m = minimum.ok_or_else(|| bad("epsilon needs a known minimum".into()))?;
            stop = stop.target_gap(m, eps);
        }
        let budget = match (cfg.max_evaluations, cfg.max_updates) {
            (Some(_), Some(_)) => return Err(bad("give either max_evaluations or max_updates".into())),
            (Some(n), None) => Some(n),
            (None, Some(u)) => Some(initial_size + u),
            (None, None) => None,
        };
        if let Some(n) = budget {
            stop = stop.max_evaluations(n);
        }
        if let Some(s) = cfg.max_stages {
            stop = stop.max_stages(s);
        }
        stop.validate().map_err(|e| bad(e.to_string()))?;

        let mut options = StrategyOptions::default();
        if let Some(k) = cfg.kernel {
            options.kernel = k;
        }
        if let Some(r) = cfg.restarts {
            options.restarts = r;
        }
        options.mle_evals = cfg.mle_evals;
        if let Some(v) = cfg.scan_per_dim {
            options.maximize.scan_per_dim = v;
        }
        if let Some(v) = cfg.local_starts {
            options.maximize.local_starts = v;
        }
        if let Some(p) = cfg.parallel_evaluations {
            options.parallel_evaluations = p;
        }

        Ok(Experiment {
            id: cfg.id.clone(),
            function,
            source,
            domain,
            strategy: cfg.strategy,
            q,
            pool,
            initial_size,
            stop,
            lie: cfg.lie.unwrap_or(Lie::Min),
            options,
            repetitions: cfg.repetitions.unwrap_or(campaign.repetitions),
        })
    }

    /// A fresh objective with its own evaluation ledger (and its own child
    /// process for external objectives).
    pub fn objective(&self) -> Result<Objective> {
        match &self.source {
            ObjectiveSource::Catalog(f) => Ok(f.objective()),
            ObjectiveSource::External(e) => e.spawn(),
        }
    }

    pub fn pool_size(&self) -> Option<usize> {
        self.pool.as_ref().map(CandidatePool::len)
    }

    pub fn replicate_id(&self, replicate: usize) -> String {
        format!("{}-r{}", self.id, replicate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(body: &str) -> Result<Vec<Experiment>> {
        Campaign::from_toml_str(&format!("[[experiment]]\nid = \"e\"\n{body}"))?.resolve()
    }

    #[test]
    fn catalog_defaults_fill_sizes() {
        let e = one("function = \"hartmann6\"\nstrategy = \"accelerated\"\nq = 8\nmax_updates = 80").unwrap();
        assert_eq!(e[0].initial_size, 65);
        assert_eq!(e[0].pool_size(), Some(300));
        assert_eq!(e[0].stop.max_evaluations, Some(145));
        assert_eq!(e[0].repetitions, 25);
    }

    #[test]
    fn rejects_inconsistent_experiments() {
        assert!(one("function = \"branin\"\nstrategy = \"ego\"\nq = 3\nmax_stages = 2").is_err());
        assert!(one("function = \"branin\"\nstrategy = \"ego\"").is_err());
        assert!(one("function = \"nope\"\nstrategy = \"ego\"\nmax_stages = 2").is_err());
        assert!(one("function = \"branin\"\nstrategy = \"ego\"\npool_size = 10\nmax_stages = 2").is_err());
        assert!(
            one("function = \"branin\"\nstrategy = \"accelerated\"\nq = 20\npool_size = 10\nmax_stages = 2").is_err()
        );
        assert!(one("function = \"branin\"\nstrategy = \"ego\"\nmax_stages = 2\ncolour = 1").is_err());
        let ext =
            "strategy = \"ego\"\nepsilon = 0.1\n[experiment.external]\ncommand = [\"x\"]\nlower = [0.0]\nupper = [1.0]";
        assert!(one(ext).is_err(), "epsilon without a known minimum");
    }

    #[test]
    fn lie_forms_parse() {
        let base = "function = \"branin\"\nstrategy = \"constant-liar\"\nq = 4\nmax_stages = 2\n";
        assert_eq!(one(&format!("{base}lie = \"max\"")).unwrap()[0].lie, Lie::Max);
        assert_eq!(
            one(&format!("{base}lie = {{ value = 1.5 }}")).unwrap()[0].lie,
            Lie::Value(1.5)
        );
        assert_eq!(one(base).unwrap()[0].lie, Lie::Min);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = "[[experiment]]\nid = \"a\"\nfunction = \"branin\"\nstrategy = \"ego\"\nmax_stages = 1\n\
                    [[experiment]]\nid = \"a\"\nfunction = \"sin2\"\nstrategy = \"ego\"\nmax_stages = 1\n";
        assert!(Campaign::from_toml_str(text).is_err());
    }
}
