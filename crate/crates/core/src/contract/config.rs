//! INI-style stage configuration: `[section]` headers and `key = value`
//! lines. `#` and `;` start comments. Keys outside any section are an error.

use std::collections::BTreeMap;
use std::path::Path;

use super::ContractError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ContractError> {
        let mut cfg = ConfigFile::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                cfg.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ContractError::ConfigSyntax {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let section = current.as_ref().ok_or_else(|| ContractError::ConfigSyntax {
                line: i + 1,
                message: "key outside of any section".into(),
            })?;
            cfg.sections
                .get_mut(section)
                .expect("section inserted on header")
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ContractError> {
        let text = std::fs::read_to_string(path).map_err(|source| ContractError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.sections.get(name)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    /// Serialize with sections and keys in sorted order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, kv) in &self.sections {
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in kv {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_whitespace() {
        let cfg = ConfigFile::parse(
            "# top\n[train]\nepochs = 20\n  lr=0.1 \n; note\n\n[model]\nname = ridge\n",
        )
        .unwrap();
        assert_eq!(cfg.section("train").unwrap()["epochs"], "20");
        assert_eq!(cfg.section("train").unwrap()["lr"], "0.1");
        assert_eq!(cfg.section("model").unwrap()["name"], "ridge");
        assert_eq!(ConfigFile::parse(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        assert!(matches!(
            ConfigFile::parse("epochs = 3\n"),
            Err(ContractError::ConfigSyntax { line: 1, .. })
        ));
        assert!(matches!(
            ConfigFile::parse("[train]\nnot a pair\n"),
            Err(ContractError::ConfigSyntax { line: 2, .. })
        ));
    }
}
