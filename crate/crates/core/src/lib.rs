//! Thermodynamic formalism and multifractal spectra for conformal graph
//! directed Markov systems on the line.

pub mod error;
pub mod expr;
pub mod interval;
pub mod maps;
pub mod measures;
pub mod multifractal;
pub mod potential;
pub mod roots;
pub mod sum;
pub mod symbolic;
pub mod system;
pub mod thermo;

pub use error::{Error, Result};
pub use interval::{Enclosure, Interval};
pub use expr::Expr;
pub use maps::MapFamily;
pub use potential::PotentialVector;
pub use symbolic::{Alphabet, IncidenceMatrix, Word};
pub use system::{SystemDescriptor, TailRule};
