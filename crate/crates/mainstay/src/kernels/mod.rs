//! Statistical workloads used to exercise the pool and loops on real
//! shapes: Gaussian kernel density estimation and Kendall rank
//! correlation, including a parallel correlation-matrix driver whose
//! per-row work shrinks as the row index grows (a naturally unbalanced
//! loop).

mod kde;
mod kendall;

pub use kde::{
    kde_gauss, kde_gauss_with, silverman_bandwidth, trapezoid_integral, DensityEstimate,
};
pub use kendall::{
    kendall_matrix, kendall_matrix_seq, kendall_tau_brute, kendall_tau_knight, CorrelationMatrix,
};

use crate::error::Error;

/// All kernels reject NaN and infinite inputs up front.
pub(crate) fn ensure_finite(values: &[f64]) -> Result<(), Error> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}
