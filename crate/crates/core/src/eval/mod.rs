//! Classification and detection metrics, throughput benchmarks and reports.

mod ap;
mod bench;
mod classify;
mod report;

pub use ap::{ap_at_iou, map_at_iou, mean_ap, pr_curve, MapResult, PrCurve, DEFAULT_IOU_THRESHOLD};
pub use bench::{bench_inference, bench_passes, median, BenchResult, BenchTarget};
pub use classify::{classify_metrics, ConfusionMatrix};
pub use report::{read_report, write_report, MetricsReport, Task, REPORT_KEYS};
pub(crate) use report::parse_keyed_json;
