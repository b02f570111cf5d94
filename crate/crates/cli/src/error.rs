use std::fmt;
use std::path::Path;

/// What went wrong, which decides the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub msg: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { kind: Kind::Config, msg: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self { kind: Kind::Data, msg: msg.into() }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Self { kind: Kind::Numeric, msg: msg.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Config => 1,
            Kind::Data => 2,
            Kind::Numeric => 3,
        }
    }

    /// Prefixes the message with a file path unless it already names it.
    pub fn at(mut self, path: &Path) -> Self {
        let shown = path.display().to_string();
        if !self.msg.contains(&shown) {
            self.msg = format!("{shown}: {}", self.msg);
        }
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<bhlr::Error> for CliError {
    fn from(e: bhlr::Error) -> Self {
        use bhlr::Error as E;
        let kind = match &e {
            E::Config(_) | E::UnsupportedKind(_) | E::TooManyTuples { .. } => Kind::Config,
            E::Domain { .. } | E::NonFiniteGradient { .. } => Kind::Numeric,
            _ => Kind::Data,
        };
        Self { kind, msg: e.to_string() }
    }
}

/// Attaches a path to library errors raised while reading that file.
pub trait WithPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> WithPath<T> for bhlr::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::from(e).at(path))
    }
}
