//! Probability filtering and `p_min` sweeps.
//!
//! Filtering drops every bitstring with probability below `p_min` (ties are
//! kept) and renormalizes the survivors. A sweep repeats this over a grid of
//! thresholds and records the entropies of each filtered distribution.

use serde::{Deserialize, Serialize};

use crate::distribution::{entropy_summary, BitstringDistribution, EntropySummary, Source};
use crate::entanglement::{filtered_vn_entropy, Bipartition};
use crate::error::{Error, Result};
use crate::hamiltonian::GroundState;
use crate::par;

fn check_threshold(p_min: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_min) {
        return Err(Error::BadThreshold(p_min));
    }
    Ok(())
}

/// Filters and also reports the raw probability mass that survived.
pub fn filter_with_mass(dist: &BitstringDistribution, p_min: f64) -> Result<(BitstringDistribution, f64)> {
    check_threshold(p_min)?;
    let entries = dist.entries();
    match dist.retain_renormalized(|i| entries[i].1 >= p_min) {
        (Some(d), mass) => Ok((d, mass)),
        (None, _) => Err(Error::EmptySurvivors { p_min, max_prob: dist.max_probability() }),
    }
}

pub fn filter_distribution(dist: &BitstringDistribution, p_min: f64) -> Result<BitstringDistribution> {
    filter_with_mass(dist, p_min).map(|r| r.0)
}

/// Drops bitstrings observed fewer than `min_count` times.
pub fn filter_by_min_count(dist: &BitstringDistribution, min_count: u64) -> Result<BitstringDistribution> {
    let counts = dist.counts().ok_or(Error::NotEmpirical)?;
    match dist.retain_renormalized(|i| counts[i] >= min_count) {
        (Some(d), _) => Ok(d),
        (None, _) => {
            let n = dist.n_shots().unwrap_or(1).max(1) as f64;
            Err(Error::EmptySurvivors { p_min: min_count as f64 / n, max_prob: dist.max_probability() })
        }
    }
}

/// Strictly increasing thresholds in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PminGrid(Vec<f64>);

impl PminGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let in_range = values.iter().all(|p| (0.0..=1.0).contains(p));
        let increasing = values.windows(2).all(|w| w[0] < w[1]);
        if values.is_empty() || !in_range || !increasing {
            return Err(Error::BadGrid);
        }
        Ok(Self(values))
    }

    /// `points` log-uniform values from `10^min_exp` to `10^max_exp`,
    /// optionally preceded by an exact zero.
    pub fn log_uniform(min_exp: f64, max_exp: f64, points: usize, with_zero: bool) -> Result<Self> {
        if points == 0 || min_exp.is_nan() || max_exp.is_nan() || min_exp > max_exp || max_exp > 0.0 || (points > 1 && min_exp == max_exp) {
            return Err(Error::BadGrid);
        }
        let mut v = Vec::with_capacity(points + 1);
        if with_zero {
            v.push(0.0);
        }
        let step = if points > 1 { (max_exp - min_exp) / (points - 1) as f64 } else { 0.0 };
        v.extend((0..points).map(|i| 10f64.powf(min_exp + step * i as f64)));
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for PminGrid {
    /// Zero anchor plus 121 points from `1e-7` to `10^-0.5`.
    fn default() -> Self {
        Self::log_uniform(-7.0, -0.5, 121, true).expect("default grid is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterPoint {
    pub p_min: f64,
    pub kept_states: usize,
    /// Raw probability retained before renormalization.
    pub kept_mass: f64,
    pub summary: EntropySummary,
    /// Entanglement entropy of the projected state (exact sources only).
    pub filtered_svn: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterCurve {
    pub points: Vec<FilterPoint>,
    /// First grid value at which nothing survived, if any.
    pub cutoff: Option<f64>,
    pub bipartition: Bipartition,
    pub source: Source,
}

impl FilterCurve {
    pub fn unfiltered(&self) -> Option<&FilterPoint> {
        self.points.first()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "p_min,kept_states,kept_mass,s_ab,s_a,s_b,s_a_given_b,s_b_given_a,mutual_information,filtered_svn\n",
        );
        for p in &self.points {
            let s = &p.summary;
            let svn = p.filtered_svn.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                p.p_min, p.kept_states, p.kept_mass, s.s_ab, s.s_a, s.s_b, s.s_a_given_b,
                s.s_b_given_a, s.mutual_information, svn
            ));
        }
        out
    }
}

fn sweep_point(
    dist: &BitstringDistribution,
    part: &Bipartition,
    p_min: f64,
    state: Option<&GroundState>,
) -> Result<Option<FilterPoint>> {
    let (filtered, kept_mass) = match filter_with_mass(dist, p_min) {
        Ok(r) => r,
        Err(Error::EmptySurvivors { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let summary = entropy_summary(&filtered, part)?;
    let filtered_svn = match (state, dist.source()) {
        (Some(g), Source::Exact) => Some(filtered_vn_entropy(g, part, p_min)?),
        _ => None,
    };
    Ok(Some(FilterPoint { p_min, kept_states: filtered.len(), kept_mass, summary, filtered_svn }))
}

/// Runs the filter at every grid value. The curve ends at the first grid
/// value with no survivors, which is recorded as the cutoff.
pub fn sweep(
    dist: &BitstringDistribution,
    part: &Bipartition,
    grid: &PminGrid,
    state: Option<&GroundState>,
) -> Result<FilterCurve> {
    if part.n_atoms() != dist.n_atoms() {
        return Err(Error::LengthMismatch { expected: part.n_atoms(), got: dist.n_atoms() });
    }
    let values = grid.values();
    let results = par::map_range(values.len(), |i| sweep_point(dist, part, values[i], state));
    let mut points = Vec::with_capacity(values.len());
    let mut cutoff = None;
    for (r, &p) in results.into_iter().zip(values) {
        match r? {
            Some(pt) => points.push(pt),
            None => {
                cutoff = Some(p);
                break;
            }
        }
    }
    Ok(FilterCurve { points, cutoff, bipartition: *part, source: dist.source() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{empirical_distribution, ShotCounts};
    use proptest::prelude::*;

    fn dist(n: usize, pairs: &[(u64, f64)]) -> BitstringDistribution {
        BitstringDistribution::from_probabilities(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn zero_threshold_is_identity() {
        let d = dist(2, &[(0, 0.7), (1, 0.2), (3, 0.1)]);
        assert_eq!(filter_distribution(&d, 0.0).unwrap(), d);
    }

    #[test]
    fn renormalizes_survivors() {
        let d = dist(2, &[(0, 0.7), (1, 0.2), (3, 0.1)]);
        let (f, mass) = filter_with_mass(&d, 0.15).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f.probability(0) - 0.7 / 0.9).abs() < 1e-15);
        assert!((f.probability(1) - 0.2 / 0.9).abs() < 1e-15);
        assert!((mass - 0.9).abs() < 1e-15);
        assert_eq!(f.source(), Source::Exact);
    }

    #[test]
    fn empty_and_bad_thresholds() {
        let d = dist(2, &[(0, 0.7), (1, 0.3)]);
        assert!(matches!(filter_distribution(&d, 0.8), Err(Error::EmptySurvivors { .. })));
        assert!(matches!(filter_distribution(&d, 1.5), Err(Error::BadThreshold(_))));
        assert!(matches!(filter_distribution(&d, f64::NAN), Err(Error::BadThreshold(_))));
    }

    fn thousand_shots() -> BitstringDistribution {
        let mut c = ShotCounts::new(4);
        for (bits, n) in [(0u64, 600u64), (3, 250), (5, 100), (6, 10), (9, 9), (12, 30), (15, 1)] {
            c.add(bits, n).unwrap();
        }
        empirical_distribution(&c).unwrap()
    }

    #[test]
    fn min_count_matches_probability_threshold() {
        let d = thousand_shots();
        let by_count = filter_by_min_count(&d, 10).unwrap();
        let by_prob = filter_distribution(&d, 0.01).unwrap();
        assert_eq!(by_count, by_prob);
        assert_eq!(by_count.len(), 5);
        assert_eq!(by_count.n_shots(), Some(990));
        assert_eq!(filter_by_min_count(&d, 1).unwrap(), d);
        assert!(matches!(filter_by_min_count(&d, 601), Err(Error::EmptySurvivors { .. })));
        let exact = dist(1, &[(0, 0.5), (1, 0.5)]);
        assert!(matches!(filter_by_min_count(&exact, 1), Err(Error::NotEmpirical)));
    }

    #[test]
    fn filtered_empirical_stays_on_count_lattice() {
        let f = filter_distribution(&thousand_shots(), 0.02).unwrap();
        let n = f.n_shots().unwrap() as f64;
        for ((_, p), c) in f.entries().iter().zip(f.counts().unwrap()) {
            assert!((p * n - *c as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = PminGrid::default();
        assert_eq!(g.len(), 122);
        assert_eq!(g.values()[0], 0.0);
        assert!((g.values()[1] - 1e-7).abs() < 1e-20);
        assert!((g.values()[121] - 10f64.powf(-0.5)).abs() < 1e-15);
        assert!(PminGrid::new(vec![0.1, 0.1]).is_err());
        assert!(PminGrid::new(vec![-0.1]).is_err());
    }

    #[test]
    fn uniform_curve_flat_below_one_over_k() {
        let k = 8u64;
        let d = dist(3, &(0..k).map(|i| (i, 1.0)).collect::<Vec<_>>());
        let part = Bipartition::new(3, 1).unwrap();
        let grid = PminGrid::log_uniform(-6.0, -0.95, 30, true).unwrap();
        let c = sweep(&d, &part, &grid, None).unwrap();
        assert_eq!(c.points.len(), grid.len());
        assert!(c.points.iter().all(|p| p.summary == c.points[0].summary));
    }

    #[test]
    fn two_point_grid_reaches_cutoff() {
        let d = dist(2, &[(0, 0.6), (3, 0.4)]);
        let part = Bipartition::new(2, 1).unwrap();
        let grid = PminGrid::new(vec![0.0, 0.66]).unwrap();
        let c = sweep(&d, &part, &grid, None).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.cutoff, Some(0.66));
        assert_eq!(c.points[0].summary, entropy_summary(&d, &part).unwrap());
    }

    #[test]
    fn single_survivor_corner() {
        let d = dist(4, &[(0, 0.5), (5, 0.3), (10, 0.15), (15, 0.05)]);
        let part = Bipartition::new(4, 2).unwrap();
        let grid = PminGrid::new(vec![0.0, 0.1, 0.2, 0.4]).unwrap();
        let c = sweep(&d, &part, &grid, None).unwrap();
        let last = c.points.last().unwrap();
        assert_eq!(last.kept_states, 1);
        assert_eq!(last.summary.s_a_given_b, 0.0);
        assert_eq!(last.summary.mutual_information, 0.0);
    }

    #[test]
    fn csv_header_and_empty_svn() {
        let d = dist(2, &[(0, 0.6), (3, 0.4)]);
        let c = sweep(&d, &Bipartition::new(2, 1).unwrap(), &PminGrid::new(vec![0.0]).unwrap(), None).unwrap();
        let csv = c.to_csv();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("p_min,kept_states,kept_mass"));
        assert!(lines.next().unwrap().ends_with(','));
    }

    proptest! {
        #[test]
        fn survivors_nested_and_idempotent(
            raw in prop::collection::vec((0u64..32, 0.001f64..1.0), 1..30),
            a in 0.0f64..0.2,
            b in 0.0f64..0.2,
        ) {
            let d = dist(5, &raw);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if let Ok(f_hi) = filter_distribution(&d, hi) {
                let f_lo = filter_distribution(&d, lo).unwrap();
                for (bits, _) in f_hi.entries() {
                    prop_assert!(f_lo.probability(*bits) > 0.0);
                }
                prop_assert_eq!(filter_distribution(&f_hi, 0.0).unwrap(), f_hi);
            }
        }

        #[test]
        fn kept_states_nonincreasing(raw in prop::collection::vec((0u64..64, 0.001f64..1.0), 2..50)) {
            let d = dist(6, &raw);
            let part = Bipartition::new(6, 3).unwrap();
            let grid = PminGrid::log_uniform(-4.0, -0.3, 25, true).unwrap();
            let c = sweep(&d, &part, &grid, None).unwrap();
            for w in c.points.windows(2) {
                prop_assert!(w[1].kept_states <= w[0].kept_states);
            }
            prop_assert_eq!(c.points[0].summary, entropy_summary(&d, &part).unwrap());
        }
    }
}
