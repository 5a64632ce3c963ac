//! Error measures and the known-fraction benchmark.

mod benchmark;
mod measures;
mod report;

pub use benchmark::{
    known_pct, run_benchmark, BenchConfig, BenchError, BenchOutcome, ErrorReport, ModelSpec, ModelTiming, ReportRow,
    DEFAULT_BASELINE_ORDER,
};
pub use measures::{
    bpl, duration_error, event_error, feature_error, pair_duration_error, pair_event_error, pair_feature_error,
    MeasureError, SuffixPair, SuffixStream,
};
pub use report::{render_report_text, write_report_csv, write_timings_csv};
