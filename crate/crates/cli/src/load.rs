//! Reading specification, wiring, scenario and property files.

use anyhow::{Context, Result};
use codelv::diag::Diagnostic;
use codelv::semantic::{parse_wiring, resolve, SystemModel};
use codelv::spec_ast::{lexer::duration_to_us, parse_component, parse_properties, parse_scenario, Property, Scenario};
use std::fmt;
use std::path::{Path, PathBuf};

/// Input errors, already rendered as `file:line:col: severity: message`.
#[derive(Debug)]
pub struct Failed(pub Vec<Diagnostic>);

impl fmt::Display for Failed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error(s) in the input files", self.0.iter().filter(|d| d.is_error()).count())
    }
}

impl std::error::Error for Failed {}

pub struct Inputs {
    pub model: SystemModel,
    /// Non-fatal diagnostics of the resolution.
    pub diagnostics: Vec<Diagnostic>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

impl Inputs {
    pub fn load(specs: &[PathBuf], wiring: Option<&Path>) -> Result<Inputs> {
        let mut parsed = Vec::new();
        let mut errors = Vec::new();
        let mut files = Vec::new();
        for p in specs {
            match parse_component(&read(p)?) {
                Ok(c) => {
                    files.push((c.name.clone(), name(p)));
                    parsed.push(c);
                }
                Err(e) => errors.push(e.to_diagnostic().in_file(name(p))),
            }
        }
        let connections = match wiring {
            Some(w) => match parse_wiring(&read(w)?) {
                Ok(c) => c,
                Err(d) => {
                    errors.push(d.in_file(name(w)));
                    Vec::new()
                }
            },
            None => Vec::new(),
        };
        if !errors.is_empty() {
            return Err(Failed(errors).into());
        }
        // Resolution diagnostics carry no file; attribute them by component.
        let attribute = |d: Diagnostic| -> Diagnostic {
            if d.file.is_some() {
                return d;
            }
            match files.iter().find(|(c, _)| d.message.contains(&format!("`{}`", c)) || d.message.starts_with(&format!("{}:", c))) {
                Some((_, f)) => d.in_file(f.clone()),
                None if files.len() == 1 => d.in_file(files[0].1.clone()),
                None => d,
            }
        };
        match resolve(parsed, &connections) {
            Ok(model) => {
                let diagnostics = model.diagnostics.iter().cloned().map(attribute).collect();
                Ok(Inputs { model, diagnostics })
            }
            Err(e) => Err(Failed(e.diagnostics.into_iter().map(attribute).collect()).into()),
        }
    }

    pub fn scenario(&self, path: Option<&Path>) -> Result<Scenario> {
        let Some(p) = path else { return Ok(Scenario::default()) };
        parse_scenario(&read(p)?).map_err(|e| Failed(vec![e.to_diagnostic().in_file(name(p))]).into())
    }

    pub fn properties(&self, path: Option<&Path>) -> Result<Vec<Property>> {
        let Some(p) = path else { return Ok(Vec::new()) };
        parse_properties(&read(p)?)
            .map(|s| s.properties)
            .map_err(|e| Failed(vec![e.to_diagnostic().in_file(name(p))]).into())
    }
}

/// `250us`, `3ms`, `1.5s`, or a bare number of microseconds.
pub fn parse_duration(s: &str) -> Result<u64, String> {
    let split = s.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    duration_to_us(num, if unit.is_empty() { "us" } else { unit.trim() })
}
