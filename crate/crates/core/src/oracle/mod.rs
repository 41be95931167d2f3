//! Independent verification routes.
//!
//! [`numeric`] evaluates expressions in multiple-precision complex
//! arithmetic and [`sample`] drives it over declared intervals. [`expnf`] is a
//! symbolic cross-check that rewrites everything through complex
//! exponentials; it is complete for the corpus fragment and is never used to
//! certify anything.

pub mod expnf;
pub mod numeric;
pub mod sample;

pub use expnf::{exp_normalize, ExpNfError, ExpNormalForm};
pub use numeric::{Complex, Env, NumError, Numeric};
pub use sample::{falsify, min_modulus, Nonvanishing, PointVerdict, Report, SamplePlan};
