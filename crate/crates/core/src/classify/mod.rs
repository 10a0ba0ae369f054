//! Recurrence and transience diagnostics: drift criteria, resistance growth
//! and distortion of the spider graph against the substrate.

mod distortion;
mod growth;
mod lamperti;

pub use distortion::{
    distortion_scan, distortion_scan_sites, DistortionReport, PairRatio, SiteDiameter, SiteSelection,
};
pub use growth::{
    growth_verdict, resistance_growth, spider_resistance_growth, CurvePoint, ResistanceGrowth, CAUCHY_TOLERANCE,
    GROWTH_RATIO,
};
pub use lamperti::{
    lamperti_classify, lamperti_classify_window, spider_drift_profile, walk_drift_profile, DriftProfile, LimitFit,
    Verdict, VerdictClass, DEFAULT_MARGIN, MIN_COVERAGE,
};
