pub mod appell;
pub mod chaos;
pub mod error;
pub mod io;
pub mod measures;
pub mod multi_index;
pub mod operators;
pub mod quadrature;
pub mod series;
pub mod tensor;
pub mod transforms;

pub use num_complex::Complex64 as C64;

pub use appell::AppellSystem;
pub use chaos::{ChaosFunctional, ChaosVector};
pub use error::{Error, Result};
pub use measures::{ComponentMeasure, ProductMeasure};
pub use multi_index::MultiIndex;
pub use operators::{OperatorKernel, SymbolGerm};
pub use series::PowerSeries;
pub use tensor::{BiSymTensor, HilbertScale, SymTensor};
pub use transforms::{BoundKind, GermFunction, Locality};
