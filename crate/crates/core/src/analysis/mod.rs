//! Experiments built on matrix sections: section-norm growth scans, the
//! Dirichlet divergence of C_ω(1), non-compactness probes and the
//! observables of the necessity arguments.

mod families;
mod power;
mod probes;
mod scan;

pub use families::{bergman_f_n, bergman_f_nm, f_a, f_n, f_nm, truncation_degree, TestFamily};
pub use power::{section_norm, PowerConfig, PowerResult};
pub use probes::{
    compactness_probe, compactness_ratio_dense, dirichlet_divergence, necessity_functionals,
    DirichletCurve, NecessityReport, ProbeConfig, ProbeCurve,
};
pub use scan::{boundedness_scan, ScanConfig, ScanReport, ScanThresholds, ScanVerdict};
