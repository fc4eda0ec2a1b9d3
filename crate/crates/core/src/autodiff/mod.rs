//! Dense matrices, a reverse-mode tape, parameter storage and gradient
//! checking. Every trainable map in the crate is built on these pieces.

pub mod gradcheck;
pub mod mat;
pub mod params;
pub mod tape;

pub use gradcheck::{check_gradients, GradCheckConfig, GradCheckReport};
pub use mat::Mat;
pub use params::{Adam, Bound, ParamId, ParamSet};
pub use tape::{Gradients, Tape, Var};
