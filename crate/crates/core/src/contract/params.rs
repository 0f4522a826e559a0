//! Tiered stage parameters.
//!
//! Each stage declares a schema made of general, application (drug
//! response) and model tiers. Values resolve with precedence
//! command line > config file > defaults, and every resolved key remembers
//! where it came from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{ConfigFile, ContractError, StageKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    General,
    Application,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Str,
    Int,
    Float,
    Bool,
    Path,
    /// Comma-separated list of strings.
    List,
}

impl ParamKind {
    fn check(self, raw: &str) -> bool {
        match self {
            ParamKind::Str | ParamKind::Path | ParamKind::List => true,
            ParamKind::Int => raw.parse::<i64>().is_ok(),
            ParamKind::Float => raw.parse::<f64>().is_ok(),
            ParamKind::Bool => matches!(raw, "true" | "false"),
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamKind::Str => "string",
            ParamKind::Int => "integer",
            ParamKind::Float => "float",
            ParamKind::Bool => "bool",
            ParamKind::Path => "path",
            ParamKind::List => "list",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub key: String,
    pub kind: ParamKind,
    pub tier: Tier,
    pub default: Option<String>,
    pub required: bool,
    pub help: String,
}

impl ParamSpec {
    pub fn new(key: &str, kind: ParamKind, tier: Tier, help: &str) -> Self {
        Self {
            key: key.into(),
            kind,
            tier,
            default: None,
            required: false,
            help: help.into(),
        }
    }

    pub fn default_value(mut self, v: &str) -> Self {
        self.default = Some(v.into());
        self
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub stage: StageKind,
    pub params: Vec<ParamSpec>,
}

impl Schema {
    pub fn new(stage: StageKind) -> Self {
        Self {
            stage,
            params: Vec::new(),
        }
    }

    /// General and drug-response tiers for `stage`; models append their own.
    pub fn standard(stage: StageKind) -> Self {
        use ParamKind::*;
        use Tier::*;
        let mut s = Self::new(stage);
        s.push(ParamSpec::new("input_dir", Path, General, "stage input directory").required());
        s.push(ParamSpec::new("output_dir", Path, General, "stage output directory").required());
        s.push(ParamSpec::new("config", Path, General, "INI config file"));
        s.push(ParamSpec::new("device", Str, General, "opaque device string passed to the model").default_value("cpu"));
        s.push(ParamSpec::new("log_level", Str, General, "log verbosity").default_value("info"));
        match stage {
            StageKind::Preprocess => {
                s.push(ParamSpec::new("benchmark_root", Path, Application, "benchmark root directory").required());
                s.push(ParamSpec::new("source_dataset", Str, Application, "dataset providing train and val rows").required());
                s.push(ParamSpec::new("target_dataset", Str, Application, "dataset providing test rows").required());
                s.push(ParamSpec::new("split_index", Int, Application, "split number").required());
                s.push(ParamSpec::new("split_dir", Path, Application, "directory holding the source split files").required());
                s.push(ParamSpec::new("cell_features", List, Application, "cell feature kinds, in order").default_value(""));
                s.push(ParamSpec::new("drug_features", List, Application, "drug feature kinds, in order").default_value(""));
                s.push(ParamSpec::new("supplementary_dir", Path, Application, "model-owned supplementary data"));
            }
            StageKind::Train => {}
            StageKind::Infer => {
                s.push(ParamSpec::new("model_dir", Path, Application, "trained model directory").required());
                s.push(ParamSpec::new("test_data_dir", Path, Application, "preprocessed test data").required());
            }
        }
        s
    }

    pub fn push(&mut self, spec: ParamSpec) {
        self.params.retain(|p| p.key != spec.key);
        self.params.push(spec);
    }

    pub fn with(mut self, specs: impl IntoIterator<Item = ParamSpec>) -> Self {
        for s in specs {
            self.push(s);
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.key == key)
    }

    pub fn help(&self) -> String {
        let mut out = format!("Parameters for the {} stage:\n", self.stage);
        for tier in [Tier::General, Tier::Application, Tier::Model] {
            let rows: Vec<_> = self.params.iter().filter(|p| p.tier == tier).collect();
            if rows.is_empty() {
                continue;
            }
            out.push_str(&format!("\n  {tier:?} parameters:\n"));
            for p in rows {
                let extra = match (&p.default, p.required) {
                    (_, true) => " (required)".to_string(),
                    (Some(d), _) => format!(" [default: {d}]"),
                    _ => String::new(),
                };
                out.push_str(&format!("    --{} <{}>  {}{}\n", p.key, p.kind, p.help, extra));
            }
        }
        out
    }

    /// Split `--key value` / `--key=value` tokens. A bool key may appear
    /// without a value.
    pub fn parse_cli(&self, args: &[String]) -> Result<Vec<(String, String)>, ContractError> {
        let mut out = Vec::new();
        let mut it = args.iter().peekable();
        while let Some(tok) = it.next() {
            let body = tok
                .strip_prefix("--")
                .ok_or_else(|| ContractError::BadArgument(tok.clone()))?;
            if let Some((k, v)) = body.split_once('=') {
                out.push((k.to_string(), v.to_string()));
                continue;
            }
            let is_bool = self.get(body).is_some_and(|p| p.kind == ParamKind::Bool);
            let next_is_value = it.peek().is_some_and(|n| !n.starts_with("--"));
            if is_bool && !next_is_value {
                out.push((body.to_string(), "true".into()));
            } else {
                let v = it
                    .next()
                    .ok_or_else(|| ContractError::BadArgument(format!("--{body} needs a value")))?;
                out.push((body.to_string(), v.clone()));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Default,
    ConfigFile,
    CommandLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub value: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet {
    pub values: BTreeMap<String, ParamValue>,
}

impl ParamSet {
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|v| v.value.as_str())
    }

    pub fn provenance(&self, key: &str) -> Option<Provenance> {
        self.values.get(key).map(|v| v.provenance)
    }

    pub fn str(&self, key: &str) -> Result<&str, ContractError> {
        self.raw(key)
            .ok_or_else(|| ContractError::MissingRequired(key.to_string()))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, ContractError> {
        self.str(key).map(PathBuf::from)
    }

    pub fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).filter(|s| !s.is_empty()).map(PathBuf::from)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, kind: ParamKind) -> Result<T, ContractError> {
        let raw = self.str(key)?;
        raw.parse().map_err(|_| ContractError::TypeMismatch {
            key: key.to_string(),
            value: raw.to_string(),
            expected: kind,
        })
    }

    pub fn int(&self, key: &str) -> Result<i64, ContractError> {
        self.parsed(key, ParamKind::Int)
    }

    pub fn float(&self, key: &str) -> Result<f64, ContractError> {
        self.parsed(key, ParamKind::Float)
    }

    pub fn opt_float(&self, key: &str) -> Result<Option<f64>, ContractError> {
        match self.raw(key) {
            None | Some("") => Ok(None),
            Some(_) => self.float(key).map(Some),
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool, ContractError> {
        self.parsed(key, ParamKind::Bool)
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.raw(key)
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    }
}

/// Merge defaults, the config file and command-line values for the schema's
/// stage. The config file contributes its `[model]` section, then the
/// stage's own section on top. Keys in the stage section or on the command
/// line that the schema does not declare are rejected; `[model]` is shared
/// by all stages, so keys there that another stage owns are skipped.
pub fn resolve_params(
    schema: &Schema,
    config: Option<&ConfigFile>,
    cli: &[(String, String)],
) -> Result<ParamSet, ContractError> {
    let mut set = ParamSet::default();
    let mut put = |key: &str, value: &str, provenance: Provenance| -> Result<(), ContractError> {
        let spec = schema.get(key).ok_or_else(|| ContractError::UnknownKey {
            key: key.to_string(),
            origin: provenance,
        })?;
        if !spec.kind.check(value) {
            return Err(ContractError::TypeMismatch {
                key: key.to_string(),
                value: value.to_string(),
                expected: spec.kind,
            });
        }
        set.values.insert(
            key.to_string(),
            ParamValue {
                value: value.to_string(),
                provenance,
            },
        );
        Ok(())
    };

    for p in &schema.params {
        if let Some(d) = &p.default {
            put(&p.key, d, Provenance::Default)?;
        }
    }
    if let Some(cfg) = config {
        if let Some(model) = cfg.section("model") {
            for (k, v) in model {
                if schema.get(k).is_some() {
                    put(k, v, Provenance::ConfigFile)?;
                }
            }
        }
        if let Some(stage) = cfg.section(schema.stage.as_str()) {
            for (k, v) in stage {
                put(k, v, Provenance::ConfigFile)?;
            }
        }
    }
    for (k, v) in cli {
        put(k, v, Provenance::CommandLine)?;
    }

    for p in &schema.params {
        if p.required && !set.values.contains_key(&p.key) {
            return Err(ContractError::MissingRequired(p.key.clone()));
        }
    }
    Ok(set)
}
