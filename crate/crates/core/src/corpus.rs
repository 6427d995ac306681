//! The fixture programs in `corpus/` with their expected outcomes.
//!
//! `corpus/manifest.toml` lists entries as `[[entry]]` tables with keys
//! `file`, `expr`, `op` and optionally `fj`. An outcome is a capsule in
//! canonical form, `!Kind` for a runtime error of that kind (see
//! [`RuntimeError::kind`]), or `!diverges` for fuel exhaustion or a detected
//! divergence.

use serde::Deserialize;
use thiserror::Error;

use crate::ast::Expr;
use crate::capsule::Capsule;
use crate::classtable::{LoadError, Program};
use crate::parser::{parse_capsule, parse_expr, ParseError};
use crate::runtime::RuntimeError;

pub const FILES: [(&str, &str); 4] = [
    ("lists.cofj", include_str!("../corpus/lists.cofj")),
    ("numbers.cofj", include_str!("../corpus/numbers.cofj")),
    ("graph.cofj", include_str!("../corpus/graph.cofj")),
    (
        "undetermined.cofj",
        include_str!("../corpus/undetermined.cofj"),
    ),
];

pub const MANIFEST: &str = include_str!("../corpus/manifest.toml");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Value(Capsule),
    Error(String),
    Diverges,
}

impl Outcome {
    pub fn parse(s: &str) -> Result<Outcome, ParseError> {
        match s.strip_prefix('!') {
            Some("diverges") => Ok(Outcome::Diverges),
            Some(kind) => Ok(Outcome::Error(kind.to_string())),
            None => parse_capsule(s).map(Outcome::Value),
        }
    }

    /// Exact agreement: same canonical text, same error kind, or divergence.
    pub fn matches(&self, r: &Result<Capsule, RuntimeError>) -> bool {
        match (self, r) {
            (Outcome::Value(c), Ok(d)) => c.canonical().to_string() == d.canonical().to_string(),
            (Outcome::Error(k), Err(e)) => e.kind() == k,
            (Outcome::Diverges, Err(e)) => e.is_divergence(),
            _ => false,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Value(c) => c.fmt(f),
            Outcome::Error(k) => write!(f, "!{k}"),
            Outcome::Diverges => f.write_str("!diverges"),
        }
    }
}

/// Renders an evaluation result the way the manifest writes outcomes.
pub fn describe(r: &Result<Capsule, RuntimeError>) -> String {
    match r {
        Ok(c) => c.canonical().to_string(),
        Err(e) if e.is_divergence() => "!diverges".into(),
        Err(e) => format!("!{}", e.kind()),
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub text: String,
    pub expr: Expr,
    pub op: Outcome,
    pub fj: Option<Outcome>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub file: &'static str,
    pub source: &'static str,
    pub program: Program,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest: {0}")]
    Manifest(#[from] toml::de::Error),
    #[error("{file}: {error}")]
    Load { file: String, error: LoadError },
    #[error("{file}: no `main` expression")]
    NoMain { file: String },
    #[error("manifest names unknown file `{0}`")]
    UnknownFile(String),
    #[error("entry `{expr}`: {what}: {error}")]
    Entry {
        expr: String,
        what: &'static str,
        error: ParseError,
    },
    #[error("entry `{expr}`: {error}")]
    Invalid {
        expr: String,
        error: crate::classtable::ValidationError,
    },
    #[error("entry `{expr}`: expected capsule `{text}` is not in canonical form")]
    NotCanonical { expr: String, text: String },
}

#[derive(Deserialize)]
struct Manifest {
    entry: Vec<RawEntry>,
}

#[derive(Deserialize)]
struct RawEntry {
    file: String,
    expr: String,
    op: String,
    fj: Option<String>,
}

/// Parses and validates every fixture and manifest entry.
pub fn load_corpus() -> Result<Vec<Fixture>, CorpusError> {
    let mut fixtures = Vec::new();
    for (file, source) in FILES {
        let program = Program::load(source).map_err(|error| CorpusError::Load {
            file: file.into(),
            error,
        })?;
        if program.main.is_none() {
            return Err(CorpusError::NoMain { file: file.into() });
        }
        fixtures.push(Fixture {
            file,
            source,
            program,
            entries: Vec::new(),
        });
    }
    let manifest: Manifest = toml::from_str(MANIFEST)?;
    for raw in manifest.entry {
        let fixture = fixtures
            .iter_mut()
            .find(|f| f.file == raw.file)
            .ok_or_else(|| CorpusError::UnknownFile(raw.file.clone()))?;
        let entry_err = |what, error| CorpusError::Entry {
            expr: raw.expr.clone(),
            what,
            error,
        };
        let expr = parse_expr(&raw.expr).map_err(|e| entry_err("expression", e))?;
        fixture
            .program
            .table
            .check_expr(&expr, &Default::default(), false, "entry")
            .map_err(|error| CorpusError::Invalid {
                expr: raw.expr.clone(),
                error,
            })?;
        let op = Outcome::parse(&raw.op).map_err(|e| entry_err("op outcome", e))?;
        let fj = raw
            .fj
            .as_deref()
            .map(Outcome::parse)
            .transpose()
            .map_err(|e| entry_err("fj outcome", e))?;
        for o in std::iter::once(&op).chain(fj.as_ref()) {
            if let Outcome::Value(c) = o {
                let text = c.to_string();
                if c.canonical().to_string() != text {
                    return Err(CorpusError::NotCanonical {
                        expr: raw.expr.clone(),
                        text,
                    });
                }
            }
        }
        fixture.entries.push(Entry {
            text: raw.expr,
            expr,
            op,
            fj,
        });
    }
    Ok(fixtures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcomes() {
        assert_eq!(Outcome::parse("!diverges").unwrap(), Outcome::Diverges);
        assert_eq!(
            Outcome::parse("!NoCodefinition").unwrap(),
            Outcome::Error("NoCodefinition".into())
        );
        let o = Outcome::parse("x0 where x0 = new A(x0)").unwrap();
        assert!(o.matches(&Ok(parse_capsule("y where y = new A(y)").unwrap())));
        assert!(!o.matches(&Ok(parse_capsule("y where y = new A(new A(y))").unwrap())));
        assert!(Outcome::Diverges.matches(&Err(RuntimeError::FuelExhausted(3))));
        assert!(!Outcome::Diverges.matches(&Err(RuntimeError::DivisionByZero)));
    }
}
