//! Experiment runner for `magpol`: JSON run configurations, CSV spectra
//! export, greymap quick-looks and ingestion of measured spectra.

pub mod config;
pub mod export;
pub mod ingest;
pub mod run;

pub use config::{ConfigError, RunConfig, Sweep};
pub use export::SpectraFile;
pub use ingest::{ingest_spectra, IngestError, MeasuredSpectrum};
pub use run::{execute, run, RunError, RunOutput};
