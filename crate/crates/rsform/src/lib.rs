//! Formal reduction of planar germs along invariant curves and sectorial
//! construction of parabolic curves.

pub mod coeff;
pub mod corpus;
pub mod curves;
pub mod error;
pub mod exp_log;
pub mod jet;
pub mod linalg;
pub mod mono;
pub mod parabolic;
pub mod rational;
pub mod reduction;
pub mod sector;
pub mod series;
pub mod transforms;
pub mod turrittin;

pub use coeff::{Coeff, Exact, Float64, GaussRat};
pub use curves::{CurveParam, TangentLine};
pub use error::{Error, ErrorClass, Result};
pub use exp_log::{exp_field, inverse_map, log_map, FormalField, FormalMap};
pub use jet::{Composer, Jet, JetTuple, Order};
pub use mono::Mono;
pub use linalg::Mat;
pub use rational::Rational;
pub use series::{MatSeries, Series};

pub type ExactJet = Jet<GaussRat>;
pub type FloatJet = Jet<num_complex::Complex64>;
