//! Flat CSV views for external plotting.
//!
//! | file                    | columns                         |
//! |-------------------------|---------------------------------|
//! | `<prefix>_profile_NNN`  | `x,density` or `x1,x2,density`  |
//! | `<prefix>_profiles.csv` | `index,t,norm,file`             |
//! | `ratios.csv`            | `label,ratio`                   |
//! | `series.csv`            | `t,norm`                        |
//! | `errors.csv`            | `t,l2_error,phase`              |

use metaplectic_core::amalgam::NormEstimateReport;
use metaplectic_core::schrodinger::{ComparisonRow, PropagationResult};
use metaplectic_core::SampledWavefunction;

use crate::io::fmt_f64;

pub const PLOT_HELP: &str = "\
Plot data (CSV, one header row):
  <prefix>_profile_NNN.csv   x,density  (2-D: x1,x2,density), density = |psi|^2
  <prefix>_profiles.csv      index,t,norm,file
  ratios.csv                 label,ratio   (one row per family member)
  series.csv                 t,norm
  errors.csv                 t,l2_error,phase";

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV");
    for row in rows {
        w.write_record(&row).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}

/// `|ψ|²` on the grid.
pub fn density_profile(psi: &SampledWavefunction) -> Vec<u8> {
    let axes = psi.axes();
    let values = psi.values();
    if axes.len() == 1 {
        table(
            &["x", "density"],
            values.iter().enumerate().map(|(j, v)| vec![fmt_f64(axes[0].x(j)), fmt_f64(v.norm_sqr())]),
        )
    } else {
        let n2 = axes[1].count;
        table(
            &["x1", "x2", "density"],
            values.iter().enumerate().map(|(j, v)| {
                vec![fmt_f64(axes[0].x(j / n2)), fmt_f64(axes[1].x(j % n2)), fmt_f64(v.norm_sqr())]
            }),
        )
    }
}

/// One profile per snapshot plus an index.
pub fn propagation_profiles(result: &PropagationResult, prefix: &str) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::with_capacity(result.snapshots.len() + 1);
    let mut index = Vec::with_capacity(result.snapshots.len());
    for (i, snap) in result.snapshots.iter().enumerate() {
        let name = format!("{prefix}_profile_{i:03}.csv");
        index.push(vec![i.to_string(), fmt_f64(snap.t), fmt_f64(snap.norm), name.clone()]);
        files.push((name, density_profile(&snap.psi)));
    }
    files.push((format!("{prefix}_profiles.csv"), table(&["index", "t", "norm", "file"], index)));
    files
}

/// One row per family member that entered the maximum.
pub fn ratio_table(report: Option<&NormEstimateReport>) -> Vec<u8> {
    let rows: Vec<Vec<String>> = report
        .map(|r| r.labels.iter().zip(&r.ratios).map(|(l, v)| vec![l.clone(), fmt_f64(*v)]).collect())
        .unwrap_or_default();
    table(&["label", "ratio"], rows)
}

pub fn time_series(series: &[(f64, f64)]) -> Vec<u8> {
    table(&["t", "norm"], series.iter().map(|(t, v)| vec![fmt_f64(*t), fmt_f64(*v)]))
}

pub fn error_report(rows: &[ComparisonRow]) -> Vec<u8> {
    table(
        &["t", "l2_error", "phase"],
        rows.iter().map(|r| vec![fmt_f64(r.t), fmt_f64(r.l2_error), fmt_f64(r.phase)]),
    )
}
