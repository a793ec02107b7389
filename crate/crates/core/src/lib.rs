//! Conformal invariants of space-like hypersurfaces in Lorentzian space forms.

pub mod catalog;
pub mod chart;
pub mod checker;
pub mod conformal;
pub mod error;
pub mod hypersurface;
pub mod jets;
pub mod linalg;
pub mod pseudo_linalg;
pub mod scalar;
pub mod spaceforms;
pub mod sweep;

pub use error::{GeomError, Result};
pub use scalar::Real;

pub type Jet = jets::Jet<f64>;
pub type Mat = linalg::Mat<f64>;
pub type LorentzVector = pseudo_linalg::LorentzVector<f64>;
pub type PseudoOrthogonalMap = pseudo_linalg::PseudoOrthogonalMap<f64>;
