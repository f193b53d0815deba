//! Pipeline drivers behind the `ladder-entropy` binary.
//!
//! Every command takes a resolved [`RunConfig`], writes its outputs under
//! `out_dir` (atomically), and returns the structured result so tests and
//! other tools can call it directly.

mod config;
mod shots;

pub use config::{parse_values, RunConfig, DEFAULT_MAX_ATOMS};
pub use shots::{format_counts, parse_shots, read_shots, ShotFormat};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distribution::{
    empirical_distribution, entropy_summary, exact_distribution, BitstringDistribution, EntropySummary,
    ShotCounts,
};
use crate::entanglement::{entanglement_entropy, Bipartition};
use crate::error::{Error, Result};
use crate::estimator::{estimate_with_curve, sample_shots, subsample_errors, EstimateReport, SubsampleErrors};
use crate::filtering::FilterCurve;
use crate::hamiltonian::{ground_state, read_state, write_state, GroundState, SolverOptions};
use crate::io::write_string_atomic;
use crate::par;

/// Inputs that determine an output, embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub grid: Vec<f64>,
    pub solver: SolverOptions,
    pub input: Option<PathBuf>,
}

impl Provenance {
    fn new(command: &str, config: &RunConfig) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            grid: config.grid()?.values().to_vec(),
            solver: config.solver(),
            input: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub n_rungs: usize,
    pub n_atoms: usize,
    pub rb_over_a: f64,
    pub delta_over_omega: f64,
    pub energy: f64,
    pub gap: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub near_degenerate: bool,
    pub matvecs: usize,
    pub size_a: usize,
    pub svn: f64,
    pub from_cache: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOutput {
    pub provenance: Provenance,
    pub summary: StateSummary,
    pub state_file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub provenance: Provenance,
    pub state: Option<StateSummary>,
    pub report: EstimateReport,
    pub subsample: Option<SubsampleErrors>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_string_atomic(path, &to_json(value)?)
}

/// Solves for the configured ground state, going through the cache when one
/// is configured.
pub fn solve(config: &RunConfig) -> Result<(GroundState, Option<PathBuf>, bool)> {
    config.validate()?;
    let spec = config.hamiltonian()?;
    let cache = config.cache_dir.as_ref().map(|d| d.join(config.state_file_name()));
    if let Some(path) = cache.as_ref().filter(|p| p.exists()) {
        let g = read_state(path)?;
        if g.n_atoms != config.n_atoms() {
            return Err(Error::StateFile(format!(
                "{} holds {} atoms, expected {}",
                path.display(),
                g.n_atoms,
                config.n_atoms()
            )));
        }
        return Ok((g, cache, true));
    }
    let g = ground_state(&spec, &config.solver())?;
    if let Some(path) = &cache {
        write_state(path, &g)?;
    }
    Ok((g, cache, false))
}

fn summarize(config: &RunConfig, g: &GroundState, part: &Bipartition, from_cache: bool) -> Result<StateSummary> {
    Ok(StateSummary {
        n_rungs: config.n_rungs,
        n_atoms: g.n_atoms,
        rb_over_a: config.rb_over_a,
        delta_over_omega: config.delta_over_omega,
        energy: g.energy,
        gap: g.gap,
        converged: g.converged,
        residual_norm: g.residual_norm,
        near_degenerate: g.near_degenerate,
        matvecs: g.matvecs,
        size_a: part.size_a(),
        svn: entanglement_entropy(g, part)?,
        from_cache,
    })
}

pub fn cmd_ground_state(config: &RunConfig) -> Result<GroundStateOutput> {
    let part = config.bipartition()?;
    let (g, state_file, cached) = solve(config)?;
    let out = GroundStateOutput {
        provenance: Provenance::new("ground-state", config)?,
        summary: summarize(config, &g, &part, cached)?,
        state_file,
    };
    write_json(&config.out_dir.join("ground_state.json"), &out)?;
    Ok(out)
}

/// The distribution a config asks for: exact, or sampled when `shots` is set.
pub fn distribution_for(config: &RunConfig, g: &GroundState) -> Result<BitstringDistribution> {
    let exact = exact_distribution(g, config.epsilon);
    match config.shots {
        None => Ok(exact),
        Some(n) => empirical_distribution(&sample_shots(&exact, n, config.seed)?),
    }
}

fn subsample_for(config: &RunConfig, counts: Option<&ShotCounts>, part: &Bipartition) -> Result<Option<SubsampleErrors>> {
    let (Some(n), Some(size)) = (config.subsamples, config.sub_size) else {
        return Ok(None);
    };
    let counts = counts.ok_or(Error::NotEmpirical)?;
    subsample_errors(counts, size, n, part, &config.grid()?, config.seed).map(Some)
}

fn counts_of(dist: &BitstringDistribution) -> Option<ShotCounts> {
    let raw = dist.counts()?;
    let mut c = ShotCounts::new(dist.n_atoms());
    for (&(bits, _), &k) in dist.entries().iter().zip(raw) {
        c.add(bits, k).ok()?;
    }
    Some(c)
}

/// Sweep, fit and optional subsampling for one resolved config.
pub fn run_estimate(
    command: &str,
    config: &RunConfig,
    state: Option<(&GroundState, StateSummary)>,
    dist: &BitstringDistribution,
) -> Result<(EstimateOutput, FilterCurve)> {
    let part = config.bipartition()?;
    let (report, curve) = estimate_with_curve(dist, &part, &config.grid()?, state.as_ref().map(|s| s.0))?;
    let subsample = subsample_for(config, counts_of(dist).as_ref(), &part)?;
    let out = EstimateOutput {
        provenance: Provenance::new(command, config)?,
        state: state.map(|s| s.1),
        report,
        subsample,
    };
    Ok((out, curve))
}

fn write_estimate(config: &RunConfig, stem: &str, out: &EstimateOutput, curve: &FilterCurve) -> Result<()> {
    write_json(&config.out_dir.join(format!("{stem}.json")), out)?;
    write_string_atomic(&config.out_dir.join(format!("{stem}_curve.csv")), &curve.to_csv())?;
    if let Some(s) = &out.subsample {
        write_string_atomic(&config.out_dir.join(format!("{stem}_subsample.csv")), &s.to_csv())?;
    }
    Ok(())
}

fn estimate_from_state(command: &str, config: &RunConfig) -> Result<(EstimateOutput, FilterCurve)> {
    let part = config.bipartition()?;
    let (g, _, cached) = solve(config)?;
    let summary = summarize(config, &g, &part, cached)?;
    let dist = distribution_for(config, &g)?;
    run_estimate(command, config, Some((&g, summary)), &dist)
}

pub fn cmd_estimate(config: &RunConfig) -> Result<(EstimateOutput, FilterCurve)> {
    let (out, curve) = estimate_from_state("estimate", config)?;
    write_estimate(config, "estimate", &out, &curve)?;
    Ok((out, curve))
}

pub fn cmd_ingest(config: &RunConfig, path: &Path, format: ShotFormat) -> Result<(EstimateOutput, FilterCurve)> {
    config.bipartition()?;
    config.grid()?;
    let counts = read_shots(path, format, config.n_atoms())?;
    let dist = empirical_distribution(&counts)?;
    let (mut out, curve) = run_estimate("ingest", config, None, &dist)?;
    out.provenance.input = Some(path.to_path_buf());
    write_estimate(config, "ingest", &out, &curve)?;
    Ok((out, curve))
}

pub fn cmd_sample(config: &RunConfig, shots: u64, path: &Path) -> Result<ShotCounts> {
    let (g, _, _) = solve(config)?;
    let counts = sample_shots(&exact_distribution(&g, config.epsilon), shots, config.seed)?;
    write_string_atomic(path, &format_counts(&counts))?;
    Ok(counts)
}

/// One row of a sweep summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_rungs: usize,
    pub rb_over_a: f64,
    pub delta_over_omega: f64,
    pub size_a: usize,
    pub svn: Option<f64>,
    pub i_unfiltered: f64,
    pub i_at_inflection: Option<f64>,
    pub i_at_inflection_alt: Option<f64>,
    pub p_star: Option<f64>,
    pub failure: Option<String>,
}

impl SweepRow {
    fn of(config: &RunConfig, out: &EstimateOutput) -> Self {
        let r = &out.report;
        Self {
            n_rungs: config.n_rungs,
            rb_over_a: config.rb_over_a,
            delta_over_omega: config.delta_over_omega,
            size_a: r.bipartition.size_a(),
            svn: r.reference_svn,
            i_unfiltered: r.i_unfiltered,
            i_at_inflection: r.i_at_inflection,
            i_at_inflection_alt: r.i_at_inflection_alt,
            p_star: r.p_star,
            failure: r.failure.clone(),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "n_rungs,rb_over_a,delta_over_omega,size_a,svn,i_unfiltered,i_at_inflection,i_at_inflection_alt,p_star\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n_rungs,
            r.rb_over_a,
            r.delta_over_omega,
            r.size_a,
            opt(r.svn),
            r.i_unfiltered,
            opt(r.i_at_inflection),
            opt(r.i_at_inflection_alt),
            opt(r.p_star)
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<EstimateOutput>,
}

fn finish_sweep(config: &RunConfig, stem: &str, runs: Vec<(RunConfig, EstimateOutput)>) -> Result<SweepOutput> {
    let rows: Vec<SweepRow> = runs.iter().map(|(c, o)| SweepRow::of(c, o)).collect();
    let out = SweepOutput { rows, runs: runs.into_iter().map(|r| r.1).collect() };
    write_json(&config.out_dir.join(format!("{stem}.json")), &out)?;
    write_string_atomic(&config.out_dir.join(format!("{stem}.csv")), &sweep_csv(&out.rows))?;
    Ok(out)
}

/// Runs one config per list element. Ladders of different sizes are solved
/// one after another to bound peak memory; same-size runs go in parallel.
fn run_variants(command: &str, variants: Vec<RunConfig>, concurrent: bool) -> Result<Vec<(RunConfig, EstimateOutput)>> {
    for v in &variants {
        v.validate()?;
    }
    let one = |v: &RunConfig| estimate_from_state(command, v).map(|(o, _)| (v.clone(), o));
    if concurrent {
        par::map_range(variants.len(), |i| one(&variants[i])).into_iter().collect()
    } else {
        variants.iter().map(one).collect()
    }
}

pub fn cmd_sweep_volume(config: &RunConfig, rungs: &[usize]) -> Result<SweepOutput> {
    let variants = rungs
        .iter()
        .map(|&n_rungs| RunConfig { n_rungs, size_a: None, ..config.clone() })
        .collect();
    finish_sweep(config, "sweep_volume", run_variants("sweep-volume", variants, false)?)
}

pub fn cmd_sweep_spacing(config: &RunConfig, rb_values: &[f64]) -> Result<SweepOutput> {
    let variants = rb_values
        .iter()
        .map(|&rb_over_a| RunConfig { rb_over_a, ..config.clone() })
        .collect();
    finish_sweep(config, "sweep_spacing", run_variants("sweep-spacing", variants, true)?)
}

/// Every cut shares one ground state and one distribution.
pub fn cmd_sweep_bipartition(config: &RunConfig, sizes: &[usize]) -> Result<SweepOutput> {
    let variants: Vec<RunConfig> =
        sizes.iter().map(|&s| RunConfig { size_a: Some(s), ..config.clone() }).collect();
    for v in &variants {
        v.validate()?;
    }
    let (g, _, cached) = solve(config)?;
    let dist = distribution_for(config, &g)?;
    let runs: Vec<(RunConfig, EstimateOutput)> = par::map_range(variants.len(), |i| {
        let v = &variants[i];
        let summary = summarize(v, &g, &v.bipartition()?, cached)?;
        run_estimate("sweep-bipartition", v, Some((&g, summary)), &dist).map(|(o, _)| (v.clone(), o))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    finish_sweep(config, "sweep_bipartition", runs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub rb_over_a: f64,
    pub delta_over_omega: f64,
    pub energy: f64,
    pub gap: f64,
    pub svn: f64,
    /// Unfiltered statistics of the exact distribution.
    pub shannon: EntropySummary,
}

pub fn phase_csv(cells: &[PhaseCell]) -> String {
    let mut out = String::from("rb_over_a,delta_over_omega,energy,gap,s_ab,s_a,s_b,svn,mutual_information\n");
    for c in cells {
        let s = &c.shannon;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.rb_over_a, c.delta_over_omega, c.energy, c.gap, s.s_ab, s.s_a, s.s_b, c.svn, s.mutual_information
        );
    }
    out
}

pub fn phase_cell(config: &RunConfig) -> Result<PhaseCell> {
    let part = config.bipartition()?;
    let (g, _, _) = solve(config)?;
    Ok(PhaseCell {
        rb_over_a: config.rb_over_a,
        delta_over_omega: config.delta_over_omega,
        energy: g.energy,
        gap: g.gap,
        svn: entanglement_entropy(&g, &part)?,
        shannon: entropy_summary(&exact_distribution(&g, config.epsilon), &part)?,
    })
}

/// Unfiltered entropies over an `rb × delta` grid, `delta` varying fastest.
pub fn cmd_phase_scan(config: &RunConfig, rb_values: &[f64], delta_values: &[f64]) -> Result<Vec<PhaseCell>> {
    let variants: Vec<RunConfig> = rb_values
        .iter()
        .flat_map(|&rb_over_a| {
            delta_values
                .iter()
                .map(move |&delta_over_omega| RunConfig { rb_over_a, delta_over_omega, ..config.clone() })
        })
        .collect();
    for v in &variants {
        v.validate()?;
    }
    let cells: Vec<PhaseCell> =
        par::map_range(variants.len(), |i| phase_cell(&variants[i])).into_iter().collect::<Result<_>>()?;
    write_string_atomic(&config.out_dir.join("phase_scan.csv"), &phase_csv(&cells))?;
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &Path) -> RunConfig {
        RunConfig { n_rungs: 2, out_dir: dir.to_path_buf(), ..Default::default() }
    }

    #[test]
    fn counts_recovered_from_empirical() {
        let mut c = ShotCounts::new(2);
        c.add(1, 3).unwrap();
        c.add(2, 5).unwrap();
        assert_eq!(counts_of(&empirical_distribution(&c).unwrap()), Some(c));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig { cache_dir: Some(dir.path().join("cache")), ..cfg(dir.path()) };
        let (a, path, cached) = solve(&c).unwrap();
        assert!(!cached && path.as_ref().unwrap().exists());
        let (b, _, cached) = solve(&c).unwrap();
        assert!(cached);
        assert_eq!(a.amplitudes, b.amplitudes);
        assert_eq!(a.energy, b.energy);
    }

    #[test]
    fn sweep_rows_follow_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_sweep_bipartition(&cfg(dir.path()), &[1, 2, 3]).unwrap();
        assert_eq!(out.rows.iter().map(|r| r.size_a).collect::<Vec<_>>(), vec![1, 2, 3]);
        let csv = std::fs::read_to_string(dir.path().join("sweep_bipartition.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }
}
