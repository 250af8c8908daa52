//! Experiment configuration: a single TOML file mapping onto system
//! parameters, an association profile, demands, and an optional sweep.
//!
//! Cache subsets are written as sorted 1-based integer lists (`[1, 2]`);
//! bitmask encodings never appear in config files. Profiles are either an
//! explicit list of `{ caches, count }` groups, the keyword `"cyclic"`,
//! or `"uniform:<k>"` for `k` users on every subset. Demands are either
//! the keyword `"distinct"` (a fresh seeded distinct assignment per
//! trial) or an explicit list of 1-based file indices.
//!
//! Top-level keys (`profile`, `demand`, `trials`, `seed`) must appear
//! before the first section header, per TOML scoping rules:
//!
//! ```toml
//! profile = [
//!   { caches = [1, 2], count = 2 },
//!   { caches = [1, 3], count = 2 },
//! ]
//! demand = "distinct"
//! trials = 10
//! seed = 7
//!
//! [params]
//! caches = 4
//! access_degree = 2
//! files = 9
//! cache_size = 3.0
//!
//! [sweep]
//! variable = "M"
//! values = [0.0, 1.0, 2.0]
//! ```

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use macc::model::{
    canonicalize_profile, cyclic_profile, CacheSubsetTable, DemandVector, SystemParams,
};
use macc::subsets::{k_subsets, CacheSet};

/// When simulation runs (`trials > 0`) and the config gives no file size,
/// use this many bits per file.
pub const DEFAULT_FILE_BITS: u64 = 1 << 17;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Model(#[from] macc::Error),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsSection,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub demand: DemandSpec,
    /// Monte Carlo repetitions per evaluation point; 0 disables simulation.
    #[serde(default)]
    pub trials: u32,
    /// Base seed; trial `t` runs with `seed + t`.
    #[serde(default)]
    pub seed: u64,
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub caches: u32,
    pub access_degree: u32,
    pub files: u32,
    pub cache_size: f64,
    pub file_bits: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    /// `"cyclic"` or `"uniform:<k>"`.
    Keyword(String),
    Explicit(Vec<GroupSpec>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub caches: Vec<u32>,
    pub count: u32,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(untagged)]
pub enum DemandSpec {
    #[default]
    #[serde(skip)]
    DistinctDefault,
    Keyword(String),
    /// 1-based file indices in row-major user order.
    Explicit(Vec<u32>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `"M"` or `"r"`.
    pub variable: String,
    pub values: Vec<f64>,
    /// Optional per-value profiles, e.g. one association per access
    /// degree when sweeping `r`.
    pub profiles: Option<Vec<ProfileSpec>>,
}

/// Demand assignment resolved from the config.
#[derive(Clone, Debug)]
pub enum DemandMode {
    /// Fresh seeded distinct files per trial.
    Distinct,
    /// Fixed 0-based assignment.
    Explicit(Vec<usize>),
}

/// A fully validated evaluation point.
#[derive(Clone, Debug)]
pub struct Instance {
    pub params: SystemParams,
    pub table: CacheSubsetTable,
    pub demand: DemandMode,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        Ok(config)
    }

    fn file_bits(&self) -> u64 {
        self.params.file_bits.unwrap_or(DEFAULT_FILE_BITS)
    }

    fn resolve_profile(
        &self,
        profile: &ProfileSpec,
        access_degree: u32,
        field: &str,
    ) -> Result<(u32, ProfileKind), ConfigError> {
        let c = self.params.caches;
        match profile {
            ProfileSpec::Keyword(word) if word == "cyclic" => Ok((c, ProfileKind::Cyclic)),
            ProfileSpec::Keyword(word) => match word.strip_prefix("uniform:") {
                Some(per) => {
                    let per: u32 = per
                        .parse()
                        .map_err(|_| invalid(field, format!("bad uniform count in {word:?}")))?;
                    let groups = k_subsets(c, access_degree).len() as u32;
                    Ok((per * groups, ProfileKind::Uniform(per)))
                }
                None => Err(invalid(
                    field,
                    format!("unknown keyword {word:?}, expected \"cyclic\" or \"uniform:<k>\""),
                )),
            },
            ProfileSpec::Explicit(groups) => {
                let mut raw = Vec::with_capacity(groups.len());
                for (i, group) in groups.iter().enumerate() {
                    for &cache in &group.caches {
                        if cache == 0 || cache > c {
                            return Err(invalid(
                                &format!("{field}[{i}].caches"),
                                format!("cache index {cache} outside 1..={c}"),
                            ));
                        }
                    }
                    raw.push((CacheSet::from_members(&group.caches), group.count));
                }
                let users = raw.iter().map(|&(_, n)| n).sum();
                Ok((users, ProfileKind::Explicit(raw)))
            }
        }
    }

    fn build_instance(
        &self,
        access_degree: u32,
        cache_size: f64,
        profile: &ProfileSpec,
        field: &str,
    ) -> Result<Instance, ConfigError> {
        let (users, kind) = self.resolve_profile(profile, access_degree, field)?;
        let params = SystemParams::new(
            self.params.caches,
            access_degree,
            self.params.files,
            users,
            cache_size,
            self.file_bits(),
        )
        .map_err(|e| invalid("params", e.to_string()))?;
        let table = match kind {
            ProfileKind::Cyclic => cyclic_profile(&params)?,
            ProfileKind::Uniform(per) => {
                let raw: Vec<(CacheSet, u32)> = k_subsets(params.caches, access_degree)
                    .into_iter()
                    .map(|s| (s, per))
                    .collect();
                canonicalize_profile(&raw, &params)?
            }
            ProfileKind::Explicit(raw) => canonicalize_profile(&raw, &params)?,
        };
        let demand = self.resolve_demand(&params, &table)?;
        Ok(Instance {
            params,
            table,
            demand,
        })
    }

    fn resolve_demand(
        &self,
        params: &SystemParams,
        table: &CacheSubsetTable,
    ) -> Result<DemandMode, ConfigError> {
        let distinct = |params: &SystemParams| {
            if params.distinct_demands_valid {
                Ok(DemandMode::Distinct)
            } else {
                Err(invalid(
                    "demand",
                    format!(
                        "distinct demands need files >= users, got {} < {}",
                        params.files, params.users
                    ),
                ))
            }
        };
        match &self.demand {
            DemandSpec::DistinctDefault => distinct(params),
            DemandSpec::Keyword(word) if word == "distinct" => distinct(params),
            DemandSpec::Keyword(word) => Err(invalid(
                "demand",
                format!("unknown keyword {word:?}, expected \"distinct\""),
            )),
            DemandSpec::Explicit(files) => {
                let zero_based: Vec<usize> = files
                    .iter()
                    .enumerate()
                    .map(|(i, &f)| {
                        if f == 0 || f > params.files {
                            Err(invalid(
                                &format!("demand[{i}]"),
                                format!("file index {f} outside 1..={}", params.files),
                            ))
                        } else {
                            Ok(f as usize - 1)
                        }
                    })
                    .collect::<Result<_, _>>()?;
                // Coverage check now, with a field path.
                DemandVector::new(zero_based.clone(), table, params)
                    .map_err(|e| invalid("demand", e.to_string()))?;
                Ok(DemandMode::Explicit(zero_based))
            }
        }
    }

    /// The configured instance, ignoring any sweep section.
    pub fn base_instance(&self) -> Result<Instance, ConfigError> {
        self.build_instance(
            self.params.access_degree,
            self.params.cache_size,
            &self.profile,
            "profile",
        )
    }

    /// One instance per sweep value. Without a sweep section this is the
    /// base instance at its configured memory point.
    pub fn sweep_instances(&self) -> Result<Vec<(String, f64, Instance)>, ConfigError> {
        let Some(sweep) = &self.sweep else {
            let instance = self.base_instance()?;
            return Ok(vec![("M".to_string(), self.params.cache_size, instance)]);
        };
        if sweep.values.is_empty() {
            return Err(invalid("sweep.values", "empty grid"));
        }
        if let Some(profiles) = &sweep.profiles {
            if profiles.len() != sweep.values.len() {
                return Err(invalid(
                    "sweep.profiles",
                    format!(
                        "{} profiles for {} values",
                        profiles.len(),
                        sweep.values.len()
                    ),
                ));
            }
        }
        let mut out = Vec::with_capacity(sweep.values.len());
        for (i, &value) in sweep.values.iter().enumerate() {
            let profile = sweep
                .profiles
                .as_ref()
                .map(|p| &p[i])
                .unwrap_or(&self.profile);
            let field = format!("sweep.profiles[{i}]");
            let instance = match sweep.variable.as_str() {
                "M" => {
                    if value < 0.0 || value > self.params.files as f64 {
                        return Err(invalid(
                            &format!("sweep.values[{i}]"),
                            format!("M={value} outside [0, {}]", self.params.files),
                        ));
                    }
                    self.build_instance(self.params.access_degree, value, profile, &field)?
                }
                "r" => {
                    if value.fract() != 0.0 || value < 1.0 || value > self.params.caches as f64 {
                        return Err(invalid(
                            &format!("sweep.values[{i}]"),
                            format!("r={value} outside 1..={}", self.params.caches),
                        ));
                    }
                    self.build_instance(value as u32, self.params.cache_size, profile, &field)?
                }
                other => {
                    return Err(invalid(
                        "sweep.variable",
                        format!("unknown variable {other:?}, expected \"M\" or \"r\""),
                    ));
                }
            };
            out.push((sweep.variable.clone(), value, instance));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
enum ProfileKind {
    Cyclic,
    Uniform(u32),
    Explicit(Vec<(CacheSet, u32)>),
}
