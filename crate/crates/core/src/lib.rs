//! Exact multiplicity calculus for tensor, symmetric and subgroup-invariant
//! powers of unitary operators with atomic spectral models, together with
//! the Markov-operator identities for couplings of finite probability spaces.
//!
//! Continuous measures are modeled by atoms at free generators of the circle
//! group (see [`circle`]), which makes every "almost every tuple" statement
//! an exact statement about generic fibers.

pub mod circle;
pub mod error;
pub mod frac;
pub mod linalg;
pub mod markov;
pub mod measure;
pub mod permgroup;
pub mod spectral;
pub mod suite;

pub use circle::{CirclePoint, GeneratorAllocator};
pub use error::{Error, Result};
pub use measure::AtomicMeasure;
pub use permgroup::{Perm, PermSubgroup};
pub use spectral::{Caps, MultiplicityReport};
