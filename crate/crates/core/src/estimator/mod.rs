//! Sigmoid stopping rule and the final entanglement estimate.

mod sampling;
mod sigmoid;

pub use sampling::{
    draw_subsample, sample_shots, subsample_errors, MeanStd, SubsampleErrors, SubsamplePoint,
};
pub use sigmoid::{
    fit_data, fit_points, fit_sigmoid, half_reduction_center, FitMethod, SigmoidFit, MIN_FIT_POINTS,
};

use serde::{Deserialize, Serialize};

use crate::distribution::{entropy_summary, BitstringDistribution, Conditional, Source};
use crate::entanglement::{entanglement_entropy, Bipartition};
use crate::error::Result;
use crate::filtering::{sweep, FilterCurve, PminGrid};
use crate::hamiltonian::GroundState;

/// Outcome of fitting one conditional-entropy curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflectionEstimate {
    pub curve: Conditional,
    pub fit: SigmoidFit,
    pub p_star: f64,
    /// Grid point nearest the inflection in `log10 p_min`.
    pub p_min_at_inflection: f64,
    pub i_at_inflection: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub bipartition: Bipartition,
    pub source: Source,
    pub i_unfiltered: f64,
    pub conditional_curve_used: Conditional,
    pub fit: Option<SigmoidFit>,
    pub p_star: Option<f64>,
    pub p_min_at_inflection: Option<f64>,
    pub i_at_inflection: Option<f64>,
    /// The other conditional curve, only for unequal halves.
    pub alt: Option<InflectionEstimate>,
    pub i_at_inflection_alt: Option<f64>,
    pub alt_failure: Option<String>,
    /// Exact entanglement entropy when a state was supplied.
    pub reference_svn: Option<f64>,
    /// Set when the supplied state is flagged near-degenerate.
    pub unreliable: bool,
    pub failure: Option<String>,
}

impl EstimateReport {
    /// Best available estimate: the inflection value, else the unfiltered one.
    pub fn best_estimate(&self) -> f64 {
        self.i_at_inflection.unwrap_or(self.i_unfiltered)
    }
}

/// Mutual information at the grid point closest to `center`; ties go to the
/// smaller `p_min`.
fn nearest_point(curve: &FilterCurve, center: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for p in curve.points.iter().filter(|p| p.p_min > 0.0) {
        let dist = (p.p_min.log10() - center).abs();
        if best.is_none_or(|b| dist < b.0) {
            best = Some((dist, p.p_min, p.summary.mutual_information));
        }
    }
    best.map(|b| (b.1, b.2))
}

pub fn inflection(curve: &FilterCurve, which: Conditional) -> Result<InflectionEstimate> {
    let fit = fit_sigmoid(curve, which)?;
    let (p_min_at_inflection, i_at_inflection) =
        nearest_point(curve, fit.center).expect("a successful fit implies positive grid points");
    Ok(InflectionEstimate { curve: which, fit, p_star: fit.p_star(), p_min_at_inflection, i_at_inflection })
}

/// Sweeps, fits and reports, returning the curve as well.
pub fn estimate_with_curve(
    dist: &BitstringDistribution,
    part: &Bipartition,
    grid: &PminGrid,
    state: Option<&GroundState>,
) -> Result<(EstimateReport, FilterCurve)> {
    let curve = sweep(dist, part, grid, state)?;
    let i_unfiltered = entropy_summary(dist, part)?.mutual_information;
    let reference_svn = state.map(|g| entanglement_entropy(g, part)).transpose()?;

    let primary = Conditional::AGivenB;
    let mut report = EstimateReport {
        bipartition: *part,
        source: dist.source(),
        i_unfiltered,
        conditional_curve_used: primary,
        fit: None,
        p_star: None,
        p_min_at_inflection: None,
        i_at_inflection: None,
        alt: None,
        i_at_inflection_alt: None,
        alt_failure: None,
        reference_svn,
        unreliable: state.is_some_and(|g| g.near_degenerate),
        failure: None,
    };
    match inflection(&curve, primary) {
        Ok(est) => {
            report.fit = Some(est.fit);
            report.p_star = Some(est.p_star);
            report.p_min_at_inflection = Some(est.p_min_at_inflection);
            report.i_at_inflection = Some(est.i_at_inflection);
        }
        Err(e) if e.is_fit_failure() => report.failure = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    if !part.is_balanced() {
        match inflection(&curve, Conditional::BGivenA) {
            Ok(est) => {
                report.i_at_inflection_alt = Some(est.i_at_inflection);
                report.alt = Some(est);
            }
            Err(e) if e.is_fit_failure() => report.alt_failure = Some(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    Ok((report, curve))
}

pub fn estimate(
    dist: &BitstringDistribution,
    part: &Bipartition,
    grid: &PminGrid,
    state: Option<&GroundState>,
) -> Result<EstimateReport> {
    Ok(estimate_with_curve(dist, part, grid, state)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::exact_distribution;
    use crate::filtering::FilterPoint;
    use crate::hamiltonian::{dense_ground_state, HamiltonianSpec};

    fn dist(n: usize, pairs: &[(u64, f64)]) -> BitstringDistribution {
        BitstringDistribution::from_probabilities(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn product_state_degrades_gracefully() {
        // independent fair bits: I = 0 and every conditional curve is flat
        let pairs: Vec<(u64, f64)> = (0..16).map(|n| (n, 1.0 / 16.0)).collect();
        let part = Bipartition::new(4, 2).unwrap();
        let r = estimate(&dist(4, &pairs), &part, &PminGrid::default(), None).unwrap();
        assert!(r.i_unfiltered.abs() < 1e-12);
        assert!(r.fit.is_none() && r.i_at_inflection.is_none());
        assert!(r.failure.is_some());
        assert_eq!(r.best_estimate(), r.i_unfiltered);
    }

    #[test]
    fn correlated_pair_already_maximal() {
        let d = dist(2, &[(0b00, 0.5), (0b11, 0.5)]);
        let part = Bipartition::new(2, 1).unwrap();
        let grid = PminGrid::log_uniform(-4.0, -0.31, 20, true).unwrap();
        let (r, curve) = estimate_with_curve(&d, &part, &grid, None).unwrap();
        assert!((r.i_unfiltered - 2f64.ln()).abs() < 1e-12);
        assert!(curve.cutoff.is_none());
        for p in &curve.points {
            assert_eq!(p.summary.mutual_information, r.i_unfiltered);
        }
    }

    fn point(p_min: f64, mi: f64) -> FilterPoint {
        let mut summary = entropy_summary(&dist(2, &[(0, 1.0)]), &Bipartition::new(2, 1).unwrap()).unwrap();
        summary.mutual_information = mi;
        FilterPoint { p_min, kept_states: 1, kept_mass: 1.0, summary, filtered_svn: None }
    }

    #[test]
    fn nearest_point_breaks_ties_low() {
        let curve = FilterCurve {
            points: vec![point(0.0, 9.0), point(1e-3, 1.0), point(1e-2, 2.0), point(1e-1, 3.0)],
            cutoff: None,
            bipartition: Bipartition::new(2, 1).unwrap(),
            source: Source::Exact,
        };
        assert_eq!(nearest_point(&curve, -2.5), Some((1e-3, 1.0)));
        assert_eq!(nearest_point(&curve, -2.4), Some((1e-2, 2.0)));
        assert_eq!(nearest_point(&curve, -9.0), Some((1e-3, 1.0)));
    }

    #[test]
    fn unbalanced_cut_reports_both_curves() {
        let spec = HamiltonianSpec::ladder(3, 2.35, 3.5).unwrap();
        let g = dense_ground_state(&spec).unwrap();
        let d = exact_distribution(&g, 0.0);
        let part = Bipartition::new(6, 2).unwrap();
        let r = estimate(&d, &part, &PminGrid::default(), Some(&g)).unwrap();
        assert!(r.alt.is_some() || r.alt_failure.is_some());
        let balanced = estimate(&d, &Bipartition::half(6).unwrap(), &PminGrid::default(), Some(&g)).unwrap();
        assert!(balanced.alt.is_none() && balanced.alt_failure.is_none());
        assert!(r.reference_svn.unwrap() > 0.0);
    }

    #[test]
    fn estimate_is_deterministic() {
        let spec = HamiltonianSpec::ladder(4, 2.35, 3.5).unwrap();
        let g = dense_ground_state(&spec).unwrap();
        let d = exact_distribution(&g, 0.0);
        let part = Bipartition::half(8).unwrap();
        let a = serde_json::to_string(&estimate(&d, &part, &PminGrid::default(), Some(&g)).unwrap()).unwrap();
        let b = serde_json::to_string(&estimate(&d, &part, &PminGrid::default(), Some(&g)).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
