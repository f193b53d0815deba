//! Finite-shot sampling from a distribution, and subsample error bars.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::distribution::{empirical_distribution, BitstringDistribution, ShotCounts};
use crate::entanglement::Bipartition;
use crate::error::{Error, Result};
use crate::filtering::{sweep, PminGrid};
use crate::par;

/// Multinomial draw of `n_shots` outcomes.
///
/// Implemented as a chain of conditional binomials over the entries in
/// bitstring order, so the result is a deterministic function of the seed.
pub fn sample_shots(dist: &BitstringDistribution, n_shots: u64, seed: u64) -> Result<ShotCounts> {
    if n_shots == 0 {
        return Err(Error::InvalidDistribution("need at least one shot".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ShotCounts::new(dist.n_atoms());
    let entries = dist.entries();
    let mut remaining = n_shots;
    let mut mass_left: f64 = entries.iter().map(|e| e.1).sum();
    for (i, &(bits, p)) in entries.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let k = if i + 1 == entries.len() {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidDistribution(e.to_string()))?
                .sample(&mut rng)
        };
        out.add(bits, k)?;
        remaining -= k;
        mass_left -= p;
    }
    Ok(out)
}

/// Draws `sub_size` shots without replacement from the pooled shot list.
pub fn draw_subsample(pool: &ShotCounts, sub_size: usize, rng: &mut ChaCha8Rng) -> Result<ShotCounts> {
    let total = pool.total();
    if sub_size as u64 > total {
        return Err(Error::SubsampleTooLarge { sub_size, total });
    }
    let (keys, cumulative): (Vec<u64>, Vec<u64>) = pool
        .iter()
        .scan(0u64, |acc, (bits, c)| {
            *acc += c;
            Some((bits, *acc))
        })
        .unzip();
    let mut out = ShotCounts::new(pool.n_atoms());
    let mut picks: Vec<usize> = index::sample(rng, total as usize, sub_size).into_vec();
    picks.sort_unstable();
    for shot in picks {
        let slot = cumulative.partition_point(|&c| c <= shot as u64);
        out.add(keys[slot], 1)?;
    }
    Ok(out)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (`n − 1`); zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsamplePoint {
    pub p_min: f64,
    /// Subsamples that still had survivors at this threshold.
    pub n_valid: usize,
    pub mutual_information: Option<MeanStd>,
    pub s_ab: Option<MeanStd>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsampleErrors {
    pub sub_size: usize,
    pub n_subsamples: usize,
    pub seed: u64,
    pub points: Vec<SubsamplePoint>,
}

impl SubsampleErrors {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p_min,n_valid,mi_mean,mi_std,s_ab_mean,s_ab_std\n");
        let cell = |m: Option<MeanStd>| match m {
            Some(m) => format!("{},{}", m.mean, m.std),
            None => ",".to_string(),
        };
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.p_min,
                p.n_valid,
                cell(p.mutual_information),
                cell(p.s_ab)
            ));
        }
        out
    }
}

/// Repeats the filtered sweep on `n_subsamples` random subsets of the pool
/// and aggregates each grid point. Subsample `i` uses the seed `seed + i`.
pub fn subsample_errors(
    pool: &ShotCounts,
    sub_size: usize,
    n_subsamples: usize,
    part: &Bipartition,
    grid: &PminGrid,
    seed: u64,
) -> Result<SubsampleErrors> {
    if sub_size as u64 > pool.total() {
        return Err(Error::SubsampleTooLarge { sub_size, total: pool.total() });
    }
    let curves = par::map_range(n_subsamples, |i| -> Result<Vec<Option<(f64, f64)>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let sub = draw_subsample(pool, sub_size, &mut rng)?;
        let curve = sweep(&empirical_distribution(&sub)?, part, grid, None)?;
        let mut row: Vec<Option<(f64, f64)>> = vec![None; grid.len()];
        for (slot, p) in row.iter_mut().zip(&curve.points) {
            *slot = Some((p.summary.mutual_information, p.summary.s_ab));
        }
        Ok(row)
    });
    let curves: Vec<_> = curves.into_iter().collect::<Result<_>>()?;
    let points = grid
        .values()
        .iter()
        .enumerate()
        .map(|(g, &p_min)| {
            let (mi, sab): (Vec<f64>, Vec<f64>) = curves.iter().filter_map(|c| c[g]).unzip();
            SubsamplePoint {
                p_min,
                n_valid: mi.len(),
                mutual_information: MeanStd::of(&mi),
                s_ab: MeanStd::of(&sab),
            }
        })
        .collect();
    Ok(SubsampleErrors { sub_size, n_subsamples, seed, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::entropy_summary;

    fn dist(n: usize, pairs: &[(u64, f64)]) -> BitstringDistribution {
        BitstringDistribution::from_probabilities(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn single_entry_gets_every_shot() {
        let c = sample_shots(&dist(3, &[(5, 1.0)]), 1234, 9).unwrap();
        assert_eq!(c.get(5), 1234);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn fair_coin_within_five_sigma() {
        let c = sample_shots(&dist(1, &[(0, 0.5), (1, 0.5)]), 1_000_000, 42).unwrap();
        assert_eq!(c.total(), 1_000_000);
        let dev = (c.get(0) as f64 - 500_000.0).abs();
        assert!(dev < 5.0 * 500.0, "deviation {dev}");
    }

    #[test]
    fn sampling_is_seeded() {
        let d = dist(2, &[(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4)]);
        assert_eq!(sample_shots(&d, 1000, 3).unwrap(), sample_shots(&d, 1000, 3).unwrap());
        assert_ne!(sample_shots(&d, 1000, 3).unwrap(), sample_shots(&d, 1000, 4).unwrap());
    }

    #[test]
    fn subsample_without_replacement_respects_pool() {
        let mut pool = ShotCounts::new(2);
        pool.add(0, 3).unwrap();
        pool.add(3, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let all = draw_subsample(&pool, 10, &mut rng).unwrap();
        assert_eq!(all, pool);
        let part = draw_subsample(&pool, 6, &mut rng).unwrap();
        assert_eq!(part.total(), 6);
        assert!(part.get(0) <= 3 && part.get(3) <= 7);
        assert!(draw_subsample(&pool, 11, &mut rng).is_err());
    }

    #[test]
    fn full_size_single_subsample_reproduces_curve() {
        let d = dist(4, &[(0, 0.4), (3, 0.2), (12, 0.2), (15, 0.15), (5, 0.05)]);
        let pool = sample_shots(&d, 500, 8).unwrap();
        let part = Bipartition::new(4, 2).unwrap();
        let grid = PminGrid::log_uniform(-3.0, -0.5, 12, true).unwrap();
        let errs = subsample_errors(&pool, 500, 1, &part, &grid, 0).unwrap();
        let full = sweep(&empirical_distribution(&pool).unwrap(), &part, &grid, None).unwrap();
        for (e, p) in errs.points.iter().zip(&full.points) {
            let mi = e.mutual_information.unwrap();
            assert_eq!(mi.std, 0.0);
            assert_eq!(mi.mean, p.summary.mutual_information);
        }
        assert_eq!(
            errs.points[0].mutual_information.unwrap().mean,
            entropy_summary(&empirical_distribution(&pool).unwrap(), &part).unwrap().mutual_information
        );
        assert!(subsample_errors(&pool, 501, 1, &part, &grid, 0).is_err());
    }

    #[test]
    fn coin_entropy_spread_matches_error_propagation() {
        // Two outcomes drawn m at a time without replacement from a pool of N:
        // Var(p̂) = p(1−p)/m · (N−m)/(N−1), and dS/dp = ln((1−p)/p).
        let (n0, n1) = (30_000u64, 70_000u64);
        let (m, total) = (1000usize, (n0 + n1) as f64);
        let p = n0 as f64 / total;
        let var_p = p * (1.0 - p) / m as f64 * (total - m as f64) / (total - 1.0);
        let predicted = ((1.0 - p) / p).ln().abs() * var_p.sqrt();
        let mut lifted = ShotCounts::new(2);
        lifted.add(0b00, n0).unwrap();
        lifted.add(0b11, n1).unwrap();
        let part = Bipartition::new(2, 1).unwrap();
        let grid = PminGrid::new(vec![0.0]).unwrap();
        let errs = subsample_errors(&lifted, m, 400, &part, &grid, 5).unwrap();
        let observed = errs.points[0].s_ab.unwrap().std;
        let ratio = observed / predicted;
        assert!((0.5..2.0).contains(&ratio), "observed {observed} predicted {predicted}");
    }
}
