use thiserror::Error;

use crate::tensor::SymTensor;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomials are defined over different variable sets")]
    VarSetMismatch,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid variable set: {0}")]
    InvalidVarSet(String),

    #[error("degree error: {0}")]
    Degree(String),

    #[error("invalid bivector: {0}")]
    InvalidBivector(String),

    #[error("order {requested} is out of range (available up to {available})")]
    Range { requested: usize, available: usize },

    /// A defect that must vanish identically did not. `defect` carries the
    /// offending tensor when one is available.
    #[error("consistency failure at order {order}: {condition}")]
    Consistency {
        order: usize,
        condition: String,
        defect: Option<Box<SymTensor>>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular transformation: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn consistency(order: usize, condition: impl Into<String>) -> Self {
        Error::Consistency {
            order,
            condition: condition.into(),
            defect: None,
        }
    }

    pub(crate) fn consistency_with(
        order: usize,
        condition: impl Into<String>,
        defect: SymTensor,
    ) -> Self {
        Error::Consistency {
            order,
            condition: condition.into(),
            defect: Some(Box::new(defect)),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
