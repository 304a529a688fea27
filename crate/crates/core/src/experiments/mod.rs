//! Replications, calibration and paired comparison.
//!
//! Every configuration in one experiment sees the same [`SeedSet`]. Jobs
//! fan out over rayon but results are always collected in canonical
//! (configuration, seed) order, so reports are byte-identical whatever the
//! thread count.

mod calibrate;
mod compare;
mod report;
mod run;
mod spec;

pub use calibrate::{grid_search, grid_search_with, CalibrationReport, CalibrationRow, ParameterGrid};
pub use compare::{compare_controllers, compare_records, Comparison, PairRow};
pub use report::{calibration_csv, calibration_table, comparison_csv, num, records_csv, summary_table, ReportHeader, SummaryRow};
pub use run::{check_setup, run_once, run_replications, simulate, DecisionRow, DetectorRow, RampRow, RunRecord, RunTrace};
pub use spec::{ControllerSpec, Family, ObjectiveSpec, Scenario, SeedSet};
