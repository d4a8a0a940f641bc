//! Data handling around the estimator: CSV ingestion and emission,
//! seasonal-trend preprocessing, normality diagnostics and per-season
//! coefficient profiles.

pub mod analysis;
pub mod deseason;
pub mod io;
pub mod normality;

pub use analysis::{analyze, default_bandwidth, select_bandwidth_cv, ProfileRow};
pub use deseason::{deseasonalize, Decomposition};
pub use io::{ingest_csv, ingest_reader, write_trajectory_csv, ColumnMapping, SeriesFile};
pub use normality::{jarque_bera, JarqueBeraResult};
