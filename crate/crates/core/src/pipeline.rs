//! Loading a composition from disk and running it through the
//! derive → weave → compose stages.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::compose::{compose, ComposeError, CompositeLts};
use crate::machine::{
    failed_prop, parse_machine, weave_with_rules, MachineError, StateMachine, WeaveError,
    WovenMachine, FAILED_PROP,
};
use crate::manifest::{Manifest, ManifestParseError};
use crate::oftm::{
    derive_mechanism, validate_configuration, FeatureConfig, OftmError, RuleParseError, RuleSet,
    ValidationReport,
};
use crate::properties::{PropertyFile, PropertyParseError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[load] {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("[load] {path}: {source}")]
    Manifest {
        path: PathBuf,
        source: ManifestParseError,
    },
    #[error("[load] {path}: {source}")]
    Machine { path: PathBuf, source: MachineError },
    #[error("[load] {path}: {source}")]
    Rules {
        path: PathBuf,
        source: RuleParseError,
    },
    #[error("[load] {path}: {source}")]
    Properties {
        path: PathBuf,
        source: PropertyParseError,
    },
    #[error("[derive] machine '{machine}': {source}")]
    Derive { machine: String, source: OftmError },
    #[error("[weave] {0}")]
    Weave(#[from] WeaveError),
    #[error("[compose] {0}")]
    Compose(#[from] ComposeError),
}

pub fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a rule file, or returns the built-in rules when `path` is `None`.
pub fn load_rules(path: Option<&Path>) -> Result<RuleSet, PipelineError> {
    match path {
        None => Ok(RuleSet::default_rules()),
        Some(p) => RuleSet::parse(&read(p)?).map_err(|source| PipelineError::Rules {
            path: p.to_path_buf(),
            source,
        }),
    }
}

pub fn load_properties(path: &Path) -> Result<PropertyFile, PipelineError> {
    PropertyFile::parse(&read(path)?).map_err(|source| PipelineError::Properties {
        path: path.to_path_buf(),
        source,
    })
}

/// A parsed manifest together with its machines and the active rules.
#[derive(Debug, Clone)]
pub struct Project {
    pub manifest: Manifest,
    pub machines: Vec<StateMachine>,
    pub rules: RuleSet,
}

/// Outcome of deriving one machine's configuration.
#[derive(Debug, Clone)]
pub struct ConfigCheck {
    pub machine: String,
    pub config: FeatureConfig,
    pub report: ValidationReport,
}

impl Project {
    /// Parses the manifest and every machine it references.
    pub fn load(manifest_path: &Path, rules: RuleSet) -> Result<Project, PipelineError> {
        let manifest =
            Manifest::parse(&read(manifest_path)?).map_err(|source| PipelineError::Manifest {
                path: manifest_path.to_path_buf(),
                source,
            })?;
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let machines = manifest
            .machines
            .iter()
            .map(|entry| {
                let path = dir.join(&entry.path);
                parse_machine(&read(&path)?)
                    .map_err(|source| PipelineError::Machine { path, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Project {
            manifest,
            machines,
            rules,
        })
    }

    /// Derives and validates each configured machine's fault-tolerance
    /// configuration. Machines listed with `none` are skipped.
    pub fn configurations(&self) -> Result<Vec<ConfigCheck>, PipelineError> {
        let mut out = Vec::new();
        for (entry, m) in self.manifest.machines.iter().zip(&self.machines) {
            let Some(mechanism) = entry.mechanism else {
                continue;
            };
            let derive_err = |source| PipelineError::Derive {
                machine: m.name().to_string(),
                source,
            };
            let config = derive_mechanism(mechanism.name(), &entry.choices).map_err(derive_err)?;
            let report = validate_configuration(&config, &self.rules).map_err(derive_err)?;
            out.push(ConfigCheck {
                machine: m.name().to_string(),
                config,
                report,
            });
        }
        Ok(out)
    }

    /// Weaves every configured machine; with `no_faults`, machines are used
    /// as they are.
    pub fn weave(&self, no_faults: bool) -> Result<Vec<WovenMachine>, PipelineError> {
        let configs = if no_faults {
            Vec::new()
        } else {
            self.configurations()?
        };
        self.machines
            .iter()
            .map(|m| match configs.iter().find(|c| c.machine == m.name()) {
                Some(c) => Ok(weave_with_rules(m, &c.config, &self.rules)?),
                None => Ok(WovenMachine::plain(m.clone())),
            })
            .collect()
    }

    /// Runs derive → weave → compose. Declared propositions, and the fault
    /// propositions of configured machines, are always known to the result
    /// so that the same properties apply with and without faults.
    pub fn compose(&self, no_faults: bool) -> Result<CompositeLts, PipelineError> {
        let woven = self.weave(no_faults)?;
        let mut lts = compose(&woven, &self.manifest.sync)?;
        let mut declared: BTreeSet<String> = self.manifest.declared.clone();
        for (entry, m) in self.manifest.machines.iter().zip(&self.machines) {
            if entry.mechanism.is_some() {
                declared.insert(FAILED_PROP.to_string());
                declared.insert(failed_prop(m.name()));
            }
        }
        lts.declare(declared);
        Ok(lts)
    }
}
