use ladder_entropy::distribution::{empirical_distribution, entropy_summary, exact_distribution};
use ladder_entropy::entanglement::{entanglement_entropy, Bipartition};
use ladder_entropy::estimator::{estimate, estimate_with_curve, sample_shots, subsample_errors};
use ladder_entropy::filtering::{sweep, PminGrid};
use ladder_entropy::hamiltonian::{ground_state, read_state, write_state, GroundState, HamiltonianSpec, SolverOptions};

fn solve(n_rungs: usize, rb: f64, delta: f64) -> GroundState {
    ground_state(&HamiltonianSpec::ladder(n_rungs, rb, delta).unwrap(), &SolverOptions::default()).unwrap()
}

#[test]
fn inflection_improves_on_unfiltered_at_eight_rungs() {
    let g = solve(8, 2.35, 3.5);
    assert!(g.converged);
    let part = Bipartition::half(16).unwrap();
    let svn = entanglement_entropy(&g, &part).unwrap();
    let r = estimate(&exact_distribution(&g, 0.0), &part, &PminGrid::default(), Some(&g)).unwrap();
    let i_inf = r.i_at_inflection.expect("fit succeeds");
    assert!((i_inf - svn).abs() < (r.i_unfiltered - svn).abs(), "{i_inf} vs {} (S = {svn})", r.i_unfiltered);
    assert!(r.i_unfiltered <= svn + 1e-9);
}

#[test]
fn empirical_curve_tracks_exact_curve() {
    let g = solve(4, 2.35, 3.5);
    let part = Bipartition::half(8).unwrap();
    let exact = exact_distribution(&g, 0.0);
    let counts = sample_shots(&exact, 1_000_000, 11).unwrap();
    let emp = empirical_distribution(&counts).unwrap();
    let a = entropy_summary(&exact, &part).unwrap().mutual_information;
    let b = entropy_summary(&emp, &part).unwrap().mutual_information;
    assert!((a - b).abs() < 0.01, "{a} vs {b}");
    let grid = PminGrid::log_uniform(-4.0, -1.0, 13, true).unwrap();
    let (ce, cm) = (sweep(&exact, &part, &grid, None).unwrap(), sweep(&emp, &part, &grid, None).unwrap());
    for (x, y) in ce.points.iter().zip(&cm.points) {
        let d = (x.summary.mutual_information - y.summary.mutual_information).abs();
        assert!(d < 0.02, "p_min {}: {d}", x.p_min);
    }
}

#[test]
fn entanglement_vanishes_as_blockade_shrinks() {
    // couplings scale as (rb/a)^6, so small rb approaches a product state
    let part = Bipartition::half(8).unwrap();
    let measure = |rb| {
        let g = solve(4, rb, 0.0);
        let i = entropy_summary(&exact_distribution(&g, 0.0), &part).unwrap().mutual_information;
        (i, entanglement_entropy(&g, &part).unwrap())
    };
    let points: Vec<(f64, f64)> = [0.5, 0.75, 1.0].into_iter().map(measure).collect();
    assert!(points[0].1 < 1e-3, "{points:?}");
    for w in points.windows(2) {
        assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1, "{points:?}");
    }
}

#[test]
fn results_independent_of_thread_count() {
    let run = || {
        let g = solve(5, 2.35, 3.5);
        let part = Bipartition::half(10).unwrap();
        let d = exact_distribution(&g, 0.0);
        let (r, curve) = estimate_with_curve(&d, &part, &PminGrid::default(), Some(&g)).unwrap();
        let counts = sample_shots(&d, 100_000, 3).unwrap();
        let sub = subsample_errors(&counts, 1000, 20, &part, &PminGrid::default(), 3).unwrap();
        (g.amplitudes, serde_json::to_string(&(r, curve, sub)).unwrap())
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(run);
    let four = pool(4).install(run);
    assert_eq!(one.0, four.0);
    assert_eq!(one.1, four.1);
}

#[test]
fn state_file_round_trip_preserves_entropy() {
    let g = solve(4, 2.35, 3.5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gs.bin");
    write_state(&path, &g).unwrap();
    let back = read_state(&path).unwrap();
    assert_eq!(back.amplitudes, g.amplitudes);
    assert_eq!((back.energy, back.gap), (g.energy, g.gap));
    let part = Bipartition::new(8, 2).unwrap();
    assert_eq!(entanglement_entropy(&back, &part).unwrap(), entanglement_entropy(&g, &part).unwrap());
}
