//! Series containers, M4 ingestion, synthetic corpora and report persistence.

mod m4;
mod persist;
mod series;
mod synth;

pub use m4::load_m4_csv;
pub use persist::{
    load_report, persist_report, write_series_csv, PersistReport, ReportFormat,
};
pub use series::{Provenance, TimeSeries, M4_MONTHLY_HORIZON};
pub use synth::{synthesize, synthesize_corpus, SeriesKind, SynthSpec};
