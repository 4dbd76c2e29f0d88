use dcqec::experiments::{
    fit_collapse_with, run_effective_rate_scan, run_threshold_scan, run_timing_scan, CollapseOptions, ThresholdPoint,
};
use dcqec::neural::{MlpConfig, MlpModel};
use dcqec::ToricLattice;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

#[test]
fn larger_lattices_have_steeper_failure_curves() {
    let grid = [0.13, 0.16];
    let pts = run_threshold_scan(None, &[7, 15], &grid, 4000, 1).unwrap();
    let slope = |l: usize| {
        let f = |p: f64| pts.iter().find(|t| t.size == l && t.p_err == p).unwrap().failure_rate();
        (f(0.16) - f(0.13)) / 0.03
    };
    assert!(slope(15) > slope(7), "slopes {} {}", slope(7), slope(15));
}

fn synthetic(seed: u64) -> Vec<ThresholdPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for size in [8usize, 12, 16, 24] {
        for i in 0..7 {
            let p = 0.13 + 0.0066 * i as f64;
            let x = (p - 0.15) * (size as f64).powf(1.0 / 1.5);
            let f = 0.3 + 1.5 * x + x * x;
            out.push(ThresholdPoint {
                size,
                p_err: p,
                trials: 10_000,
                failures: Binomial::new(10_000, f).unwrap().sample(&mut rng),
            });
        }
    }
    out
}

#[test]
fn bootstrap_errors_stabilise_with_more_resamples() {
    // The spread of the error estimate across bootstrap seeds falls roughly
    // as 1/sqrt(resamples); 16x more resamples should shrink it well below half.
    let pts = synthetic(2);
    let spread = |resamples: usize| {
        let errs: Vec<f64> = (0..6)
            .map(|seed| fit_collapse_with(&pts, &CollapseOptions { resamples, seed }).unwrap().p_th_err)
            .collect();
        let m = errs.iter().sum::<f64>() / errs.len() as f64;
        (errs.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (errs.len() - 1) as f64).sqrt()
    };
    let (few, many) = (spread(10), spread(160));
    assert!(many < 0.5 * few, "spread {few} -> {many}");
}

#[test]
fn effective_rate_scan_is_deterministic() {
    let lat = ToricLattice::new(9).unwrap();
    let model = MlpModel::<f32>::random(MlpConfig::new(5, 1, 16).unwrap(), 3).unwrap();
    let a = run_effective_rate_scan(&model, &lat, &[0.0, 0.05, 0.1], 200, 7).unwrap();
    let b = run_effective_rate_scan(&model, &lat, &[0.0, 0.05, 0.1], 200, 7).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].p_eff, 0.0);
    assert!(a[0].ratio().is_none());
}

#[test]
fn uf_decode_time_grows_with_size() {
    let t = run_timing_scan(None, &[9, 33, 65], &[0.05], 300, 20, 1).unwrap();
    assert!(t[0].mean_us < t[1].mean_us && t[1].mean_us < t[2].mean_us, "{t:?}");
}
