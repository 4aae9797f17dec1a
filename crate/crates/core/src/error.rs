use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
    #[error("unknown relation id {0}")]
    UnknownRelation(u32),
    #[error("no fact {relation}({head}, _) exists")]
    NoFacts { relation: String, head: String },
    #[error("relation list has no common tail for the given heads")]
    EmptyIntersection,
    #[error("relation list is empty")]
    EmptyList,
    #[error("identity aggregator needs exactly one premise, got {0}")]
    IdentityArity(usize),
    #[error("rule has no premises")]
    NoPremises,
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("variable {0} is not an output variable")]
    NotOutput(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("rule file line {line}: {message}")]
    RuleSyntax { line: usize, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("gold set is empty")]
    EmptyGold,
}

pub type Result<T> = core::result::Result<T, Error>;
