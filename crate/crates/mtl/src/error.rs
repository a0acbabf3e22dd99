use std::fmt;

/// Crate-wide error type. Every failure carries enough context to be
/// reported verbatim by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A character outside the declared alphabet.
    Alphabet {
        ch: char,
    },
    /// Malformed basis declaration.
    BadBasis(String),
    /// Config syntax or reference error with source position.
    Config {
        line: usize,
        col: usize,
        msg: String,
    },
    /// The generator images do not define an automorphism; the witness is
    /// a generator not contained in the subgroup the images generate.
    NotAnAutomorphism {
        witness: char,
    },
    /// A splitting precondition does not hold (factor not preserved,
    /// stable letter image not of the required shape, ...).
    Normalization(String),
    /// A subgroup that must be invariant is not.
    NotInvariant(String),
    /// An argument lies outside the operation's domain.
    Domain(String),
    /// Bounded search exhausted its budget without an answer.
    BoundedFailure(String),
    /// Data violates a structural constraint that should be impossible.
    Inconsistency(String),
    /// A verification suite failed; the payload names the failed property.
    Verification(String),
    Io(String),
    Usage(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Alphabet { ch } => write!(f, "unknown letter '{ch}'"),
            Error::BadBasis(m) => write!(f, "bad basis: {m}"),
            Error::Config { line, col, msg } => {
                write!(f, "config error at line {line}, column {col}: {msg}")
            }
            Error::NotAnAutomorphism { witness } => write!(
                f,
                "images do not define an automorphism: generator '{witness}' is not in the image subgroup"
            ),
            Error::Normalization(m) => write!(f, "normalization error: {m}"),
            Error::NotInvariant(m) => write!(f, "invariance error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::BoundedFailure(m) => write!(f, "bounded search failed: {m}"),
            Error::Inconsistency(m) => write!(f, "inconsistency: {m}"),
            Error::Verification(m) => write!(f, "verification failure: {m}"),
            Error::Io(m) => write!(f, "io error: {m}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
