use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{compute_syndrome, decode_succeeded, ToricLattice};
use crate::neural::check_window;
use crate::noise::{instance_noise, sample_depolarizing};
use crate::pipeline::{measure_effective_rate, Decoder, DecoderKind, EffectiveRatePoint, QubitClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub size: usize,
    pub p_err: f64,
    pub trials: u64,
    pub failures: u64,
}

impl ThresholdPoint {
    pub fn failure_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    /// Binomial standard error `sqrt(f (1 - f) / trials)`.
    pub fn standard_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let f = self.failure_rate();
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }
}

fn check_grids(sizes: &[usize], p_grid: &[f64]) -> Result<()> {
    if sizes.is_empty() || p_grid.is_empty() {
        return Err(Error::InvalidArgument("size list and error-rate grid must be nonempty".into()));
    }
    Ok(())
}

/// Logical failure counts for every `(L, p)` pair. Trial `s` at a given
/// point is stream `s` of [`instance_noise`]`(seed, L, p)`, so every decoder
/// sees the same instances.
pub fn run_threshold_scan(
    model: Option<&dyn QubitClassifier>,
    sizes: &[usize],
    p_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<ThresholdPoint>> {
    check_grids(sizes, p_grid)?;
    let mut out = Vec::with_capacity(sizes.len() * p_grid.len());
    for &size in sizes {
        let lat = ToricLattice::new(size)?;
        if let Some(m) = model {
            check_window(&lat, m.l_input())?;
        }
        for &p_err in p_grid {
            let noise = instance_noise(seed, &lat, p_err)?;
            let failures = (0..trials)
                .into_par_iter()
                .map_init(
                    || match model {
                        Some(m) => Decoder::two_stage(&lat, m).expect("window checked"),
                        None => Decoder::uf(&lat),
                    },
                    |dec, s| -> Result<u64> {
                        let error = sample_depolarizing(&noise, &lat, s);
                        let syn = compute_syndrome(&error, &lat)?;
                        let out = dec.decode(&syn)?;
                        Ok(u64::from(!decode_succeeded(&error, &out.correction, &lat)?))
                    },
                )
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            out.push(ThresholdPoint {
                size,
                p_err,
                trials,
                failures,
            });
        }
    }
    Ok(out)
}

pub fn decoder_kind(model: Option<&dyn QubitClassifier>) -> DecoderKind {
    if model.is_some() {
        DecoderKind::MlUf
    } else {
        DecoderKind::Uf
    }
}

pub fn run_effective_rate_scan<C: QubitClassifier>(
    model: &C,
    lat: &ToricLattice,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<EffectiveRatePoint>> {
    check_grids(&[lat.size()], p_grid)?;
    check_window(lat, model.l_input())?;
    p_grid
        .iter()
        .map(|&p| measure_effective_rate(p, model, lat, trials, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{MlpConfig, MlpModel};

    #[test]
    fn zero_rate_never_fails() {
        let pts = run_threshold_scan(None, &[5, 7], &[0.0], 200, 1).unwrap();
        assert!(pts.iter().all(|p| p.failures == 0 && p.failure_rate() == 0.0));
    }

    #[test]
    fn scan_is_deterministic() {
        let a = run_threshold_scan(None, &[5, 9], &[0.08, 0.14], 300, 42).unwrap();
        let b = run_threshold_scan(None, &[5, 9], &[0.08, 0.14], 300, 42).unwrap();
        assert_eq!(a, b);
        let c = run_threshold_scan(None, &[5, 9], &[0.08, 0.14], 300, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scan_independent_of_worker_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_threshold_scan(None, &[7], &[0.12], 400, 5).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn identity_stub_scan_matches_uf() {
        let stub = MlpModel::<f32>::identity_stub(MlpConfig::new(5, 1, 4).unwrap()).unwrap();
        let uf = run_threshold_scan(None, &[5, 7], &[0.1, 0.15], 300, 9).unwrap();
        let ml = run_threshold_scan(Some(&stub), &[5, 7], &[0.1, 0.15], 300, 9).unwrap();
        assert_eq!(uf, ml);
    }

    #[test]
    fn standard_error_formula() {
        let p = ThresholdPoint {
            size: 7,
            p_err: 0.1,
            trials: 400,
            failures: 100,
        };
        assert!((p.standard_error() - (0.25f64 * 0.75 / 400.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_grids_rejected() {
        assert!(run_threshold_scan(None, &[], &[0.1], 10, 0).is_err());
        assert!(run_threshold_scan(None, &[5], &[], 10, 0).is_err());
    }
}
