//! Credit scoring with Gaussian mixture models.
//!
//! A full-covariance mixture is fitted to the (unlabeled) training features,
//! its component count is chosen by AIC or BIC, and the clusters are then
//! labeled by the share of good-credit applicants they contain. An applicant
//! is scored by mixing those shares with the applicant's cluster membership
//! probabilities; see [`csgm`].

// `!(x > 0.0)` is how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod csgm;
pub mod dataset;
pub mod error;
pub mod gmm;
pub mod json;
pub mod linalg;
pub mod metrics;
pub mod resample;

pub use crate::csgm::{fit_csgm, CsgmFit, CsgmModel, SelectionSpec};
pub use crate::dataset::{EncodedDataset, Encoding, RawTable, Schema, SplitSpec};
pub use crate::error::{Error, Result};
pub use crate::gmm::{fit_em, Criterion, EmConfig, FitReport, GmmParams};
pub use crate::metrics::{ConfusionMatrix, RocCurve};
pub use crate::resample::SmoteConfig;
