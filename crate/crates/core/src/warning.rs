use serde::{Deserialize, Serialize};

/// Non-fatal findings collected into run records. In strict mode the
/// boundary-mass variant is promoted to an error instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    BoundaryMass { context: String, ratio: f64 },
    ResolutionSkip { context: String, order: usize, ratio: f64 },
    Crossover { context: String, order: usize },
    Note { context: String, message: String },
}

impl Warning {
    /// Short single-line form used in CSV cells.
    pub fn brief(&self) -> String {
        match self {
            Warning::BoundaryMass { context, ratio } => format!("boundary-mass {context} {ratio:.2e}"),
            Warning::ResolutionSkip { context, order, ratio } => format!("resolution {context} order {order} {ratio:.2e}"),
            Warning::Crossover { context, order } => format!("crossover {context} order {order}"),
            Warning::Note { context, message } => format!("{context}: {message}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Lenient,
    Strict,
}
