//! Permutation tests with max-statistic family-wise error correction,
//! permutation confidence intervals and bootstrapped, bias-corrected effect
//! sizes for multivariate data.
//!
//! ```
//! use permstat::{permuttest2, DataMatrix, TestConfig};
//!
//! let x = DataMatrix::from_vec(vec![1.0, 2.0]).unwrap();
//! let y = DataMatrix::from_vec(vec![3.0, 4.0]).unwrap();
//! let r = permuttest2(&x, &y, &TestConfig::default()).unwrap();
//! assert!(r.exact);
//! assert!((r.tested(0).p - 1.0 / 3.0).abs() < 1e-15);
//! ```

pub mod cli;
pub mod effectsize;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod permtests;
pub mod reference;
pub mod resample;
mod serde_ext;
pub mod types;

pub use effectsize::{
    bias_factor, booteffectsize, cliffs_d, cohens_d_from_summaries, effect_point, BootConfig, Control,
};
pub use error::{Error, Result};
pub use kernels::CorrelationKind;
pub use permtests::{
    permuanova1, permuanova2, permucorr, permuttest, permuttest2, permuvartest2, permuztest,
    Anova2Result,
};
pub use types::*;
