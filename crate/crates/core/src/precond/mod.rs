//! Preconditioner building blocks and the ASMG cycle.

pub mod amli;
pub mod gcg;
pub mod ilue;
pub mod smoother;

pub use amli::{AmliConfig, Asmg, InnerStats, Stabilization};
pub use gcg::{gcg, GcgStop};
pub use ilue::Ilue;
pub use smoother::{Smoother, SmootherKind};
