//! End-to-end runs: training, monitoring, alarm policy, retraining and clustering.

mod cluster;
mod detector;

pub use cluster::{cluster_alarms, match_change_points, Cluster, MatchCounts};
pub use detector::{
    run_sequential, run_single, BaselineSummary, Detector, Event, PipelineConfig, RunReport, SegmentReport,
};
