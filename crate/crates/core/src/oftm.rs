//! The orthogonal fault-tolerance feature model.
//!
//! A fault-tolerance configuration picks one value on each of four
//! dimensions (execution scheme, error processing, judgment criteria,
//! checkpoints). The classic software fault-tolerance mechanisms are
//! templates over that lattice: each template restricts every dimension to
//! a nonempty set of alternatives, and a concrete configuration is derived
//! by picking one alternative per dimension.
//!
//! Dependency rules constrain which lattice points are consistent. They are
//! data, read from a small line-oriented rule language (see [`RuleSet::parse`]);
//! the default rule set is embedded from `corpus/default.rules`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Text of the built-in rule file.
pub const DEFAULT_RULES: &str = include_str!("../corpus/default.rules");

/// Number of software variants assumed when a derivation does not say.
pub const DEFAULT_VARIANTS: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OftmError {
    #[error("unknown fault tolerance mechanism '{0}'")]
    MechanismNotFound(String),
    #[error("{mechanism} does not allow {value} for {dimension} (allowed: {allowed})")]
    ChoiceOutsideTemplate {
        mechanism: Mechanism,
        dimension: Dimension,
        value: FeatureValue,
        allowed: String,
    },
    #[error("configuration has no value for {0}")]
    IncompleteConfiguration(Dimension),
    #[error("invalid choice '{0}'")]
    InvalidChoice(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("rule file line {line}: {message}")]
pub struct RuleParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Dimension {
    ExecutionScheme,
    ErrorProcessing,
    JudgmentCriteria,
    Checkpoints,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::ExecutionScheme,
        Dimension::ErrorProcessing,
        Dimension::JudgmentCriteria,
        Dimension::Checkpoints,
    ];

    /// The allowed values of this dimension, in their canonical order.
    pub fn values(self) -> &'static [FeatureValue] {
        use FeatureValue::*;
        match self {
            Dimension::ExecutionScheme => &[Sequential, Parallel],
            Dimension::ErrorProcessing => &[Forward, Backward],
            Dimension::JudgmentCriteria => &[AcceptanceTest, Voter, Comparison],
            Dimension::Checkpoints => &[Yes, No],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::ExecutionScheme => "ExecutionScheme",
            Dimension::ErrorProcessing => "ErrorProcessing",
            Dimension::JudgmentCriteria => "JudgmentCriteria",
            Dimension::Checkpoints => "Checkpoints",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = OftmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| OftmError::InvalidChoice(s.to_string()))
    }
}

/// A value on one of the four dimensions. Every value belongs to exactly one
/// dimension, so a value alone identifies the dimension it selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FeatureValue {
    Sequential,
    Parallel,
    Forward,
    Backward,
    AcceptanceTest,
    Voter,
    Comparison,
    Yes,
    No,
}

impl FeatureValue {
    pub fn dimension(self) -> Dimension {
        use FeatureValue::*;
        match self {
            Sequential | Parallel => Dimension::ExecutionScheme,
            Forward | Backward => Dimension::ErrorProcessing,
            AcceptanceTest | Voter | Comparison => Dimension::JudgmentCriteria,
            Yes | No => Dimension::Checkpoints,
        }
    }

    pub fn name(self) -> &'static str {
        use FeatureValue::*;
        match self {
            Sequential => "Sequential",
            Parallel => "Parallel",
            Forward => "Forward",
            Backward => "Backward",
            AcceptanceTest => "AcceptanceTest",
            Voter => "Voter",
            Comparison => "Comparison",
            Yes => "Yes",
            No => "No",
        }
    }

    fn parse_in(dimension: Dimension, s: &str) -> Option<FeatureValue> {
        if dimension == Dimension::JudgmentCriteria && s.eq_ignore_ascii_case("AT") {
            return Some(FeatureValue::AcceptanceTest);
        }
        dimension
            .values()
            .iter()
            .copied()
            .find(|v| v.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Absolute vs relative acceptance criteria. Stored on a configuration but
/// carries no semantics in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum JudgmentFacet {
    Absolute,
    Relative,
}

impl FromStr for JudgmentFacet {
    type Err = OftmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" => Ok(JudgmentFacet::Absolute),
            "relative" => Ok(JudgmentFacet::Relative),
            _ => Err(OftmError::InvalidChoice(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Mechanism {
    RecoveryBlock,
    NVersionProgramming,
    NSelfCheckingProgramming,
    DistributedRecoveryBlock,
    ConsensusRecoveryBlock,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [
        Mechanism::RecoveryBlock,
        Mechanism::NVersionProgramming,
        Mechanism::NSelfCheckingProgramming,
        Mechanism::DistributedRecoveryBlock,
        Mechanism::ConsensusRecoveryBlock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::RecoveryBlock => "RecoveryBlock",
            Mechanism::NVersionProgramming => "NVersionProgramming",
            Mechanism::NSelfCheckingProgramming => "NSelfCheckingProgramming",
            Mechanism::DistributedRecoveryBlock => "DistributedRecoveryBlock",
            Mechanism::ConsensusRecoveryBlock => "ConsensusRecoveryBlock",
        }
    }

    fn abbreviation(self) -> &'static str {
        match self {
            Mechanism::RecoveryBlock => "RB",
            Mechanism::NVersionProgramming => "NVP",
            Mechanism::NSelfCheckingProgramming => "NSCP",
            Mechanism::DistributedRecoveryBlock => "DRB",
            Mechanism::ConsensusRecoveryBlock => "CRB",
        }
    }

    pub fn lookup(name: &str) -> Result<Mechanism, OftmError> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == name || m.abbreviation() == name)
            .ok_or_else(|| OftmError::MechanismNotFound(name.to_string()))
    }

    /// The built-in template for this mechanism.
    pub fn template(self) -> MechanismTemplate {
        use FeatureValue::*;
        let cells: [&[FeatureValue]; 4] = match self {
            Mechanism::RecoveryBlock => [
                &[Sequential, Parallel],
                &[Backward],
                &[AcceptanceTest, Voter],
                &[Yes],
            ],
            Mechanism::NVersionProgramming => [
                &[Sequential, Parallel],
                &[Forward],
                &[AcceptanceTest, Voter],
                &[No],
            ],
            Mechanism::NSelfCheckingProgramming => [
                &[Sequential, Parallel],
                &[Forward, Backward],
                &[AcceptanceTest, Voter, Comparison],
                &[Yes, No],
            ],
            Mechanism::DistributedRecoveryBlock => {
                [&[Sequential], &[Forward], &[AcceptanceTest], &[No]]
            }
            Mechanism::ConsensusRecoveryBlock => [
                &[Parallel],
                &[Forward, Backward],
                &[AcceptanceTest, Voter, Comparison],
                &[Yes],
            ],
        };
        MechanismTemplate {
            mechanism: self,
            allowed: Dimension::ALL
                .into_iter()
                .zip(cells)
                .map(|(d, cell)| (d, cell.to_vec()))
                .collect(),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the mechanism table: the alternatives each dimension admits.
/// Alternatives are listed in table order; the first one is the default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MechanismTemplate {
    pub mechanism: Mechanism,
    pub allowed: BTreeMap<Dimension, Vec<FeatureValue>>,
}

impl MechanismTemplate {
    pub fn allowed(&self, dimension: Dimension) -> &[FeatureValue] {
        &self.allowed[&dimension]
    }

    pub fn admits(&self, config: &FeatureConfig) -> bool {
        Dimension::ALL
            .into_iter()
            .all(|d| config.get(d).is_some_and(|v| self.allowed(d).contains(&v)))
    }

    /// Every concrete configuration inside the template, in lattice order.
    pub fn concretizations(&self) -> Vec<FeatureConfig> {
        lattice()
            .into_iter()
            .filter(|c| self.admits(c))
            .map(|mut c| {
                c.source = Some(self.mechanism);
                c
            })
            .collect()
    }
}

/// A selection of (at most) one value per dimension, plus metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureConfig {
    selection: BTreeMap<Dimension, FeatureValue>,
    pub source: Option<Mechanism>,
    pub variants: u32,
    pub judgment_facet: Option<JudgmentFacet>,
}

impl FeatureConfig {
    /// A complete configuration with no source and default metadata.
    pub fn new(
        execution: FeatureValue,
        error_processing: FeatureValue,
        judgment: FeatureValue,
        checkpoints: FeatureValue,
    ) -> FeatureConfig {
        FeatureConfig::from_values([execution, error_processing, judgment, checkpoints])
    }

    /// Builds a (possibly partial) configuration; later values on the same
    /// dimension replace earlier ones.
    pub fn from_values(values: impl IntoIterator<Item = FeatureValue>) -> FeatureConfig {
        FeatureConfig {
            selection: values.into_iter().map(|v| (v.dimension(), v)).collect(),
            source: None,
            variants: DEFAULT_VARIANTS,
            judgment_facet: None,
        }
    }

    pub fn get(&self, dimension: Dimension) -> Option<FeatureValue> {
        self.selection.get(&dimension).copied()
    }

    pub fn is(&self, value: FeatureValue) -> bool {
        self.get(value.dimension()) == Some(value)
    }

    pub fn is_complete(&self) -> bool {
        Dimension::ALL
            .iter()
            .all(|d| self.selection.contains_key(d))
    }

    pub fn values(&self) -> impl Iterator<Item = FeatureValue> + '_ {
        self.selection.values().copied()
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = Dimension::ALL
            .iter()
            .map(|d| match self.get(*d) {
                Some(v) => format!("{d}={v}"),
                None => format!("{d}=?"),
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))?;
        if self.variants != DEFAULT_VARIANTS {
            write!(f, " variants={}", self.variants)?;
        }
        Ok(())
    }
}

/// Caller-supplied choices for the alternative cells of a template.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Choices {
    pub values: BTreeMap<Dimension, FeatureValue>,
    pub variants: Option<u32>,
    pub judgment_facet: Option<JudgmentFacet>,
}

impl Choices {
    pub fn new() -> Choices {
        Choices::default()
    }

    pub fn with(mut self, value: FeatureValue) -> Choices {
        self.values.insert(value.dimension(), value);
        self
    }

    pub fn with_variants(mut self, variants: u32) -> Choices {
        self.variants = Some(variants);
        self
    }

    /// Applies one `key=value` token: `<Dimension>=<Value>`, `variants=<n>`
    /// or `facet=absolute|relative`. A bare value name is also accepted.
    pub fn apply(&mut self, token: &str) -> Result<(), OftmError> {
        let bad = || OftmError::InvalidChoice(token.to_string());
        match token.split_once('=') {
            Some((key, value)) if key.eq_ignore_ascii_case("variants") => {
                self.variants = Some(value.parse().map_err(|_| bad())?);
            }
            Some((key, value)) if key.eq_ignore_ascii_case("facet") => {
                self.judgment_facet = Some(value.parse()?);
            }
            Some((key, value)) => {
                let dim: Dimension = key.parse().map_err(|_| bad())?;
                let v = FeatureValue::parse_in(dim, value).ok_or_else(bad)?;
                self.values.insert(dim, v);
            }
            None => {
                let v = Dimension::ALL
                    .into_iter()
                    .find_map(|d| FeatureValue::parse_in(d, token))
                    .ok_or_else(bad)?;
                self.values.insert(v.dimension(), v);
            }
        }
        Ok(())
    }
}

/// Derives a concrete configuration from a built-in mechanism.
///
/// Alternative cells take the caller's choice when given, otherwise the
/// first alternative listed for the mechanism.
pub fn derive_mechanism(name: &str, choices: &Choices) -> Result<FeatureConfig, OftmError> {
    let mechanism = Mechanism::lookup(name)?;
    let template = mechanism.template();
    let mut selection = BTreeMap::new();
    for dimension in Dimension::ALL {
        let allowed = template.allowed(dimension);
        let value = match choices.values.get(&dimension) {
            Some(v) if allowed.contains(v) => *v,
            Some(v) => {
                return Err(OftmError::ChoiceOutsideTemplate {
                    mechanism,
                    dimension,
                    value: *v,
                    allowed: join(allowed),
                })
            }
            None => allowed[0],
        };
        selection.insert(dimension, value);
    }
    Ok(FeatureConfig {
        selection,
        source: Some(mechanism),
        variants: choices.variants.unwrap_or(DEFAULT_VARIANTS),
        judgment_facet: choices.judgment_facet,
    })
}

fn join(values: &[FeatureValue]) -> String {
    values
        .iter()
        .map(|v| v.name())
        .collect::<Vec<_>>()
        .join("/")
}

/// The full 2x2x3x2 lattice, ordered lexicographically by dimension then by
/// each dimension's canonical value order.
pub fn lattice() -> Vec<FeatureConfig> {
    let mut out = Vec::with_capacity(24);
    for &e in Dimension::ExecutionScheme.values() {
        for &p in Dimension::ErrorProcessing.values() {
            for &j in Dimension::JudgmentCriteria.values() {
                for &c in Dimension::Checkpoints.values() {
                    out.push(FeatureConfig::new(e, p, j, c));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    Eq,
    AtLeast,
    AtMost,
}

/// An atomic condition in a dependency rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Condition {
    Is(FeatureValue),
    Variants(Comparison, u32),
}

impl Condition {
    fn holds(&self, config: &FeatureConfig) -> bool {
        match self {
            Condition::Is(v) => config.is(*v),
            Condition::Variants(Comparison::Eq, n) => config.variants == *n,
            Condition::Variants(Comparison::AtLeast, n) => config.variants >= *n,
            Condition::Variants(Comparison::AtMost, n) => config.variants <= *n,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Is(v) => write!(f, "{}={}", v.dimension(), v),
            Condition::Variants(Comparison::Eq, n) => write!(f, "variants={n}"),
            Condition::Variants(Comparison::AtLeast, n) => write!(f, "variants>={n}"),
            Condition::Variants(Comparison::AtMost, n) => write!(f, "variants<={n}"),
        }
    }
}

/// `IF all(antecedent) THEN any(consequent)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyRule {
    pub id: String,
    pub antecedent: Vec<Condition>,
    pub consequent: Vec<Condition>,
    pub message: String,
}

impl DependencyRule {
    pub fn holds(&self, config: &FeatureConfig) -> bool {
        !self.antecedent.iter().all(|c| c.holds(config))
            || self.consequent.iter().any(|c| c.holds(config))
    }
}

impl fmt::Display for DependencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<_> = self.antecedent.iter().map(|c| c.to_string()).collect();
        let rhs: Vec<_> = self.consequent.iter().map(|c| c.to_string()).collect();
        write!(
            f,
            "{}: IF {} THEN {}",
            self.id,
            lhs.join(" & "),
            rhs.join(" | ")
        )?;
        if !self.message.is_empty() {
            write!(f, " ; {}", self.message)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuleSet {
    pub rules: Vec<DependencyRule>,
}

impl RuleSet {
    pub fn empty() -> RuleSet {
        RuleSet::default()
    }

    /// R1 to R3, parsed from the embedded rule file.
    pub fn default_rules() -> RuleSet {
        RuleSet::parse(DEFAULT_RULES).expect("embedded rule file parses")
    }

    /// Keeps only the rules whose id is listed.
    pub fn only(&self, ids: &[&str]) -> RuleSet {
        RuleSet {
            rules: self
                .rules
                .iter()
                .filter(|r| ids.contains(&r.id.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Parses a rule file. Grammar, one rule per line:
    ///
    /// ```text
    /// rule      := id ':' 'IF' condition ('&' condition)* 'THEN' condition ('|' condition)* [';' message]
    /// condition := Dimension '=' Value | 'variants' ('=' | '>=' | '<=') integer
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<RuleSet, RuleParseError> {
        let mut rules: Vec<DependencyRule> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| RuleParseError { line, message };
            let (body, message) = match trimmed.split_once(';') {
                Some((b, m)) => (b.trim(), m.trim().to_string()),
                None => (trimmed, String::new()),
            };
            let (id, rest) = body
                .split_once(':')
                .ok_or_else(|| err("expected '<id>:'".into()))?;
            let id = id.trim();
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(format!("invalid rule id '{id}'")));
            }
            if rules.iter().any(|r| r.id == id) {
                return Err(err(format!("duplicate rule id '{id}'")));
            }
            let rest = rest.trim();
            let rest = rest
                .strip_prefix("IF ")
                .ok_or_else(|| err("expected 'IF'".into()))?;
            let (lhs, rhs) = rest
                .split_once(" THEN ")
                .ok_or_else(|| err("expected 'THEN'".into()))?;
            let antecedent = lhs
                .split('&')
                .map(|c| parse_condition(c.trim()).map_err(&err))
                .collect::<Result<Vec<_>, _>>()?;
            let consequent = rhs
                .split('|')
                .map(|c| parse_condition(c.trim()).map_err(&err))
                .collect::<Result<Vec<_>, _>>()?;
            rules.push(DependencyRule {
                id: id.to_string(),
                antecedent,
                consequent,
                message,
            });
        }
        Ok(RuleSet { rules })
    }
}

fn parse_condition(text: &str) -> Result<Condition, String> {
    if let Some(rest) = text.strip_prefix("variants") {
        let rest = rest.trim();
        let (cmp, num) = if let Some(n) = rest.strip_prefix(">=") {
            (Comparison::AtLeast, n)
        } else if let Some(n) = rest.strip_prefix("<=") {
            (Comparison::AtMost, n)
        } else if let Some(n) = rest.strip_prefix('=') {
            (Comparison::Eq, n)
        } else {
            return Err(format!("invalid variant condition '{text}'"));
        };
        let n = num
            .trim()
            .parse()
            .map_err(|_| format!("invalid variant count in '{text}'"))?;
        return Ok(Condition::Variants(cmp, n));
    }
    let (dim, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected '<dimension>=<value>', found '{text}'"))?;
    let dim: Dimension = dim
        .trim()
        .parse()
        .map_err(|_| format!("unknown dimension '{}'", dim.trim()))?;
    let value = FeatureValue::parse_in(dim, value.trim())
        .ok_or_else(|| format!("'{}' is not a value of {dim}", value.trim()))?;
    Ok(Condition::Is(value))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleViolation {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<RuleViolation>,
}

impl ValidationReport {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated_ids(&self) -> Vec<&str> {
        self.violations.iter().map(|v| v.id.as_str()).collect()
    }
}

/// Checks a configuration against every rule in `rules`.
pub fn validate_configuration(
    config: &FeatureConfig,
    rules: &RuleSet,
) -> Result<ValidationReport, OftmError> {
    if let Some(missing) = Dimension::ALL
        .into_iter()
        .find(|d| config.get(*d).is_none())
    {
        return Err(OftmError::IncompleteConfiguration(missing));
    }
    let violations = rules
        .rules
        .iter()
        .filter(|r| !r.holds(config))
        .map(|r| RuleViolation {
            id: r.id.clone(),
            message: r.message.clone(),
        })
        .collect();
    Ok(ValidationReport { violations })
}

/// The lattice points that satisfy `rules`, in [`lattice`] order.
pub fn enumerate_valid_configs(rules: &RuleSet) -> Vec<FeatureConfig> {
    lattice()
        .into_iter()
        .filter(|c| rules.rules.iter().all(|r| r.holds(c)))
        .collect()
}
