//! Mining small Turing machine spaces: simulation, exact sequence fitting and
//! the box dimension of space-time diagrams.

pub mod algebra;
pub mod census;
pub mod diagrams;
pub mod dimension;
pub mod error;
pub mod machine;
pub mod pipeline;
pub mod seq;
pub mod sim;

pub use algebra::{Enclosure, Field, Polynomial, Rational};
pub use dimension::{Bucket, DimensionReport, GrowthClass, LimitValue};
pub use error::{Error, Result};
pub use machine::{Action, Direction, InputTape, MachineId, Space, TransitionTable};
pub use sim::{RunMetrics, RunOptions, SpaceTimeDiagram, Status};
pub use seq::{FitReport, SequenceModel};

/// Polynomial with exact rational coefficients.
pub type RationalPolynomial = Polynomial<Rational>;
