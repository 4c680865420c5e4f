pub mod config;
pub mod metrics;
pub mod series;

pub use config::{parse_config, preset, ExperimentConfig, Mode, ParseError, Settings};
pub use metrics::{report_metrics, Metrics};
pub use series::{read_series, write_series, write_series_to, CsvRecord};
