use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{compute_syndrome, ToricLattice};
use crate::noise::{instance_noise, sample_depolarizing};
use crate::pipeline::{Decoder, DecoderKind, QubitClassifier};

/// Instances decoded before timing starts.
pub const MIN_WARMUP: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    pub decoder: DecoderKind,
    pub size: usize,
    pub p_err: f64,
    pub instances: u64,
    pub mean_us: f64,
    /// Sample variance of per-instance times.
    pub var_us: f64,
}

/// Decode-only wall-clock times on the calling thread. Sampling and
/// syndrome extraction happen outside the timed region. Warm-up instances
/// use streams past the measured ones.
pub fn run_timing_scan(
    model: Option<&dyn QubitClassifier>,
    sizes: &[usize],
    p_list: &[f64],
    instances: u64,
    warmup: u64,
    seed: u64,
) -> Result<Vec<TimingPoint>> {
    if sizes.is_empty() || p_list.is_empty() {
        return Err(Error::InvalidArgument("size list and error-rate list must be nonempty".into()));
    }
    if instances == 0 {
        return Err(Error::InvalidArgument("timing needs at least one instance".into()));
    }
    let warmup = warmup.max(MIN_WARMUP);
    let mut out = Vec::with_capacity(sizes.len() * p_list.len());
    for &size in sizes {
        let lat = ToricLattice::new(size)?;
        let mut dec = match model {
            Some(m) => Decoder::two_stage(&lat, m)?,
            None => Decoder::uf(&lat),
        };
        for &p_err in p_list {
            let noise = instance_noise(seed, &lat, p_err)?;
            for s in 0..warmup {
                let syn = compute_syndrome(&sample_depolarizing(&noise, &lat, instances + s), &lat)?;
                std::hint::black_box(dec.decode(&syn)?);
            }
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for s in 0..instances {
                let syn = compute_syndrome(&sample_depolarizing(&noise, &lat, s), &lat)?;
                let start = Instant::now();
                std::hint::black_box(dec.decode(&syn)?);
                let t = start.elapsed().as_secs_f64() * 1e6;
                sum += t;
                sum_sq += t * t;
            }
            let n = instances as f64;
            let mean = sum / n;
            let var = if instances > 1 {
                ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            out.push(TimingPoint {
                decoder: dec.kind(),
                size,
                p_err,
                instances,
                mean_us: mean,
                var_us: var,
            });
        }
    }
    Ok(out)
}

/// Smallest L in both tables (at `p_err`) where the two-stage decoder is
/// faster than bare union-find.
pub fn find_crossing(uf: &[TimingPoint], ml_uf: &[TimingPoint], p_err: f64) -> Option<usize> {
    let mut shared: Vec<(usize, f64, f64)> = uf
        .iter()
        .filter(|a| a.p_err == p_err)
        .filter_map(|a| {
            ml_uf
                .iter()
                .find(|b| b.p_err == p_err && b.size == a.size)
                .map(|b| (a.size, a.mean_us, b.mean_us))
        })
        .collect();
    shared.sort_by_key(|t| t.0);
    shared.into_iter().find(|&(_, t_uf, t_ml)| t_ml < t_uf).map(|t| t.0)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn power_law_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("power-law fit needs at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("power-law fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all x values identical".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
