//! Hourly solar generation forecasting from weather and AQI features.
//!
//! The pipeline: ingest and merge the raw CSV sources, resample to hourly
//! resolution, build horizon-shifted supervised datasets (24/48/72 hours
//! out), optionally Gaussianize features and target with a Yeo-Johnson
//! power transform or route through a zero-inflated two-part model, fit
//! tree-ensemble and linear predictors, and benchmark them on R2/MAE/RMSE
//! across three methodologies.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod persist;
pub mod synth;
pub mod transform;

pub use error::{Result, ToolError};
