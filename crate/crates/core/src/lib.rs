//! Tests of general linear hypotheses on the mean functions of k independent
//! samples of multivariate functional data, allowing unequal covariances.
//!
//! The hypothesis C M(t) = C₀(t) is assessed with Wilks, Lawley–Hotelling and
//! Pillai type statistics built from B_n and E_n. Both matrices are scaled
//! by Wishart-matching degrees of freedom that are estimated with
//! U-statistics, and each statistic is referred to an F approximation.
//!
//! ```no_run
//! use mfd_glht::{dataset::{load_csv, LoadOptions}, glht::ContrastSpec, stats::run_glht};
//! let ds = load_csv(std::fs::File::open("curves.csv")?, &LoadOptions::default())?;
//! let report = run_glht(&ds, &ContrastSpec::one_way(ds.k())?, 0.05)?;
//! println!("MFP p-value {}", report.p_values.mfp);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod dataset;
pub mod dof;
pub mod error;
pub mod glht;
pub mod grid;
pub mod moments;
pub mod simulation;
pub mod stats;

pub use error::{GlhtError, Result};
