//! Prompt templates with `{{ code }}` and `{{ error }}` placeholders.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProposerError;

pub const CODE: &str = "{{ code }}";
pub const ERROR: &str = "{{ error }}";

const M1: &str = include_str!("../../prompts/m1.txt");
const M2: &str = include_str!("../../prompts/m2.txt");
const MR: &str = include_str!("../../prompts/mr.txt");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
}

impl PromptTemplate {
    /// A template from text. The body must contain `{{ code }}`.
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Result<Self, ProposerError> {
        let t = PromptTemplate { name: name.into(), body: body.into() };
        if !t.body.contains(CODE) {
            return Err(ProposerError::Template(format!("template `{}` has no {CODE} placeholder", t.name)));
        }
        Ok(t)
    }

    pub fn m1() -> Self {
        PromptTemplate { name: "M1".into(), body: M1.into() }
    }

    pub fn m2() -> Self {
        PromptTemplate { name: "M2".into(), body: M2.into() }
    }

    pub fn mr() -> Self {
        PromptTemplate { name: "Mr".into(), body: MR.into() }
    }

    /// `M1`, `M2`, `Mr` (any case) or a path to a template file.
    pub fn resolve(spec: &str) -> Result<Self, ProposerError> {
        match spec.to_ascii_lowercase().as_str() {
            "m1" => Ok(Self::m1()),
            "m2" => Ok(Self::m2()),
            "mr" => Ok(Self::mr()),
            _ => {
                let path = Path::new(spec);
                let body = std::fs::read_to_string(path)
                    .map_err(|e| ProposerError::Template(format!("cannot read template {spec}: {e}")))?;
                let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
                Self::new(name, body)
            }
        }
    }

    pub fn needs_error(&self) -> bool {
        self.body.contains(ERROR)
    }
}

/// Substitute the placeholders. Error text given to a template without an
/// error slot is dropped with a warning.
pub fn render_prompt(template: &PromptTemplate, code: &str, error: Option<&str>) -> Result<String, ProposerError> {
    let error = match (template.needs_error(), error) {
        (true, Some(err)) => err,
        (true, None) => return Err(ProposerError::MissingPlaceholderValue(ERROR.into())),
        (false, Some(_)) => {
            log::warn!("template {} has no error slot; ignoring error text", template.name);
            ""
        }
        (false, None) => "",
    };
    // one left-to-right pass so substituted text is never rescanned
    let mut out = String::with_capacity(template.body.len() + code.len() + error.len());
    let mut rest = template.body.as_str();
    loop {
        let next = [(CODE, code), (ERROR, error)]
            .into_iter()
            .filter_map(|(p, v)| rest.find(p).map(|i| (i, p, v)))
            .min_by_key(|(i, _, _)| *i);
        match next {
            Some((i, p, v)) => {
                out.push_str(&rest[..i]);
                out.push_str(v);
                rest = &rest[i + p.len()..];
            }
            None => {
                out.push_str(rest);
                return Ok(out);
            }
        }
    }
}
