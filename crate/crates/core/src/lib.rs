//! Near-field wideband XL-RIS channel estimation.
//!
//! The crate is `no_std` with `alloc`. Enable the `std` feature for
//! hardware-accelerated float intrinsics and `std::error::Error` glue.
//!
//! Layout follows the processing chain:
//! [`geometry`] steering vectors, [`channel`] ground-truth synthesis,
//! [`measurement`] uplink training, [`squint`] beam-squint analytics,
//! [`dictionary`] wideband sparse dictionaries and [`estimators`] recovery.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod channel;
pub mod config;
pub mod dictionary;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod linalg;
pub mod measurement;
pub mod nearfield;
pub mod rng;
pub mod special;
pub mod squint;
pub mod timing;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use geometry::{CarrierGrid, SphericalPoint, UpaShape};

/// Complex double.
pub type C64 = num_complex::Complex64;
/// Dense column-major complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
