//! Factorized-Fourier MIONet neural operator (FFINO) for radial two-phase
//! injection problems, with the data synthesis, training and evaluation
//! pipeline around it.
//!
//! * [`tensor`]: dense tensors, reverse-mode autodiff, real FFTs.
//! * [`layers`]: spectral, factorized spectral, U-Net and fully connected blocks.
//! * [`model`]: the MIONet encoder and Fourier decoder, checkpoints.
//! * [`datagen`]: relative permeability curves, sampling, random fields, the
//!   analytic toy response used as ground truth, and the dataset format.
//! * [`training`]: the relative lp loss, Adam, and the epoch loop.
//! * [`eval`]: R², RMSE, SSIM, AOI-restricted MRE, reports and images.

mod container;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod layers;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{Precision, Real, Tensor};

/// Version string embedded in manifests and checkpoints.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
