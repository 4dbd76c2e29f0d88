//! Finite-size scaling collapse.
//!
//! Failure rates are modelled as `f = a + b x + c x^2` with
//! `x = (p - p_th) L^(1/nu)`. For fixed `(p_th, nu)` the coefficients come
//! from weighted least squares; `(p_th, nu)` minimise the reduced chi-square
//! of that fit (coarse grid, then Nelder-Mead).

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::scan::ThresholdPoint;
use crate::error::{Error, Result};

const NU_MIN: f64 = 0.2;
const NU_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOptions {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self { resamples: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub p_th: f64,
    pub p_th_err: f64,
    pub nu: f64,
    pub nu_err: f64,
    /// Reduced chi-square of the master-curve fit at the optimum.
    pub quality: f64,
    /// Master-curve coefficients `[a, b, c]`.
    pub coefficients: [f64; 3],
    pub resamples: usize,
}

/// One observation: `(L, p, failures, trials)`.
#[derive(Debug, Clone, Copy)]
struct Obs {
    size: f64,
    p: f64,
    failures: u64,
    trials: u64,
}

struct Objective<'a> {
    obs: &'a [Obs],
    p_range: (f64, f64),
}

impl Objective<'_> {
    /// Weighted quadratic fit; `None` when the design is singular.
    fn fit(&self, p_th: f64, nu: f64) -> Option<(f64, [f64; 3])> {
        let mut ata = Matrix3::<f64>::zeros();
        let mut atb = Vector3::<f64>::zeros();
        let rows: Vec<(f64, f64, f64)> = self
            .obs
            .iter()
            .map(|o| {
                let n = o.trials as f64;
                let f = o.failures as f64 / n;
                // Laplace-smoothed variance keeps 0 and 1 rates finite.
                let fs = (o.failures as f64 + 1.0) / (n + 2.0);
                let w = n / (fs * (1.0 - fs));
                ((o.p - p_th) * o.size.powf(1.0 / nu), f, w)
            })
            .collect();
        for &(x, f, w) in &rows {
            let v = Vector3::new(1.0, x, x * x);
            ata += w * v * v.transpose();
            atb += w * f * v;
        }
        // Scale-free singularity test on the normalised normal matrix.
        let d = Vector3::new(ata[(0, 0)], ata[(1, 1)], ata[(2, 2)]).map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
        let scaled = Matrix3::from_diagonal(&d) * ata * Matrix3::from_diagonal(&d);
        if d.iter().any(|&v| v == 0.0) || scaled.determinant().abs() < 1e-12 {
            return None;
        }
        let coef = ata.lu().solve(&atb)?;
        let chi2: f64 = rows
            .iter()
            .map(|&(x, f, w)| {
                let r = f - (coef[0] + coef[1] * x + coef[2] * x * x);
                w * r * r
            })
            .sum();
        let dof = (rows.len() as f64 - 5.0).max(1.0);
        Some((chi2 / dof, [coef[0], coef[1], coef[2]]))
    }

    fn eval(&self, p_th: f64, nu: f64) -> f64 {
        if !(NU_MIN..=NU_MAX).contains(&nu) || p_th <= self.p_range.0 || p_th >= self.p_range.1 {
            return f64::INFINITY;
        }
        self.fit(p_th, nu).map_or(f64::INFINITY, |(q, _)| q)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, param: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(param[0], param[1]))
    }
}

fn minimise(obs: &[Obs], start: Option<(f64, f64)>) -> Result<(f64, f64, f64, [f64; 3])> {
    let (p_lo, p_hi) = obs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| (lo.min(o.p), hi.max(o.p)));
    let width = p_hi - p_lo;
    let objective = Objective {
        obs,
        p_range: (p_lo - width, p_hi + width),
    };
    let (p0, nu0) = match start {
        Some(s) => s,
        None => {
            let mut best = (f64::INFINITY, p_lo, 1.0);
            for i in 0..=40 {
                let p = p_lo + width * i as f64 / 40.0;
                for j in 0..=40 {
                    let nu = 0.5 + 3.0 * j as f64 / 40.0;
                    let q = objective.eval(p, nu);
                    if q < best.0 {
                        best = (q, p, nu);
                    }
                }
            }
            if !best.0.is_finite() {
                return Err(Error::DegenerateFit("no (p_th, nu) gives a nonsingular master-curve fit".into()));
            }
            (best.1, best.2)
        }
    };
    let dp = (width / 20.0).max(1e-6);
    let simplex = vec![vec![p0, nu0], vec![p0 + dp, nu0], vec![p0, nu0 + 0.1]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let res = Executor::new(objective, solver)
        .configure(|s| s.max_iters(2000))
        .run()
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let best = res.state().get_best_param().cloned().unwrap_or_else(|| vec![p0, nu0]);
    let objective = Objective {
        obs,
        p_range: (p_lo - width, p_hi + width),
    };
    let (quality, coef) = objective
        .fit(best[0], best[1])
        .ok_or_else(|| Error::DegenerateFit("master-curve design is singular at the optimum".into()))?;
    Ok((best[0], best[1], quality, coef))
}

fn observations(points: &[ThresholdPoint]) -> Result<Vec<Obs>> {
    let mut obs: Vec<Obs> = points
        .iter()
        .filter(|p| p.trials > 0)
        .map(|p| Obs {
            size: p.size as f64,
            p: p.p_err,
            failures: p.failures,
            trials: p.trials,
        })
        .collect();
    // Canonical order makes the fit independent of row order.
    obs.sort_by(|a, b| a.size.total_cmp(&b.size).then(a.p.total_cmp(&b.p)));
    let mut sizes: Vec<f64> = obs.iter().map(|o| o.size).collect();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "collapse fit needs at least 3 lattice sizes, got {}",
            sizes.len()
        )));
    }
    for &s in &sizes {
        let n = obs.iter().filter(|o| o.size == s).count();
        if n < 5 {
            return Err(Error::InvalidArgument(format!(
                "collapse fit needs at least 5 error rates per size, L = {s} has {n}"
            )));
        }
    }
    Ok(obs)
}

pub fn fit_collapse(points: &[ThresholdPoint]) -> Result<CollapseFit> {
    fit_collapse_with(points, &CollapseOptions::default())
}

/// Collapse fit with parametric bootstrap errors: each resample redraws every
/// failure count from a binomial at the observed rate and refits.
pub fn fit_collapse_with(points: &[ThresholdPoint], opts: &CollapseOptions) -> Result<CollapseFit> {
    let obs = observations(points)?;
    let (p_th, nu, quality, coefficients) = minimise(&obs, None)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ps = Vec::with_capacity(opts.resamples);
    let mut nus = Vec::with_capacity(opts.resamples);
    for _ in 0..opts.resamples {
        let resampled: Vec<Obs> = obs
            .iter()
            .map(|o| {
                let f = o.failures as f64 / o.trials as f64;
                let failures = Binomial::new(o.trials, f).expect("rate in [0, 1]").sample(&mut rng);
                Obs { failures, ..*o }
            })
            .collect();
        if let Ok((p, n, _, _)) = minimise(&resampled, Some((p_th, nu))) {
            ps.push(p);
            nus.push(n);
        }
    }
    Ok(CollapseFit {
        p_th,
        p_th_err: std_dev(&ps),
        nu,
        nu_err: std_dev(&nus),
        quality,
        coefficients,
        resamples: ps.len(),
    })
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Where the failure curves of two consecutive sizes cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveCrossing {
    pub size_small: usize,
    pub size_large: usize,
    pub p_cross: f64,
}

/// Crossings of consecutive-size curves, by linear interpolation on the
/// shared p grid. Only the first sign change per size pair is reported.
pub fn raw_crossings(points: &[ThresholdPoint]) -> Vec<CurveCrossing> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let curve = |s: usize| {
        let mut c: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.size == s)
            .map(|p| (p.p_err, p.failure_rate()))
            .collect();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        c
    };
    let mut out = Vec::new();
    for w in sizes.windows(2) {
        let (small, large) = (curve(w[0]), curve(w[1]));
        let diffs: Vec<(f64, f64)> = small
            .iter()
            .filter_map(|&(p, f)| large.iter().find(|q| q.0 == p).map(|q| (p, q.1 - f)))
            .collect();
        for d in diffs.windows(2) {
            let ((p0, d0), (p1, d1)) = (d[0], d[1]);
            if d0 <= 0.0 && d1 > 0.0 {
                let p_cross = if d1 == d0 { p0 } else { p0 + (p1 - p0) * (-d0) / (d1 - d0) };
                out.push(CurveCrossing {
                    size_small: w[0],
                    size_large: w[1],
                    p_cross,
                });
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn master(x: f64) -> f64 {
        0.3 + 1.5 * x + x * x
    }

    fn synthetic(trials: u64, seed: u64) -> Vec<ThresholdPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for size in [8, 12, 16, 24] {
            for i in 0..9 {
                let p = 0.13 + 0.005 * i as f64;
                let x = (p - 0.15) * (size as f64).powf(1.0 / 1.5);
                let f = master(x).clamp(0.0, 1.0);
                let failures = Binomial::new(trials, f).unwrap().sample(&mut rng);
                out.push(ThresholdPoint {
                    size,
                    p_err: p,
                    trials,
                    failures,
                });
            }
        }
        out
    }

    #[test]
    fn recovers_synthetic_master_curve() {
        let pts = synthetic(20_000, 3);
        let fit = fit_collapse_with(&pts, &CollapseOptions { resamples: 60, seed: 1 }).unwrap();
        assert!((fit.p_th - 0.15).abs() < 3.0 * fit.p_th_err.max(1e-4), "{fit:?}");
        assert!((fit.nu - 1.5).abs() < 3.0 * fit.nu_err.max(1e-3), "{fit:?}");
        assert!(fit.quality < 3.0, "{fit:?}");
        assert!(fit.nu > 0.0 && fit.p_th > 0.0 && fit.p_th < 0.25);
    }

    #[test]
    fn noiseless_synthetic_is_exact() {
        let mut pts = Vec::new();
        for size in [8usize, 12, 16] {
            for i in 0..7 {
                let p = 0.13 + 0.006 * i as f64;
                let x = (p - 0.15) * (size as f64).powf(1.0 / 1.5);
                let trials = 1_000_000_000u64;
                pts.push(ThresholdPoint {
                    size,
                    p_err: p,
                    trials,
                    failures: (master(x) * trials as f64).round() as u64,
                });
            }
        }
        let fit = fit_collapse_with(&pts, &CollapseOptions { resamples: 0, seed: 0 }).unwrap();
        assert!((fit.p_th - 0.15).abs() < 1e-4, "{fit:?}");
        assert!((fit.nu - 1.5).abs() < 1e-2, "{fit:?}");
    }

    #[test]
    fn row_order_irrelevant() {
        let pts = synthetic(5_000, 8);
        let opts = CollapseOptions { resamples: 10, seed: 4 };
        let a = fit_collapse_with(&pts, &opts).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        rev.swap(0, 7);
        assert_eq!(a, fit_collapse_with(&rev, &opts).unwrap());
    }

    #[test]
    fn too_few_sizes_or_points_rejected() {
        let pts = synthetic(1000, 1);
        let two: Vec<_> = pts.iter().copied().filter(|p| p.size <= 12).collect();
        assert!(matches!(fit_collapse(&two), Err(Error::InvalidArgument(_))));
        let sparse: Vec<_> = pts.iter().copied().filter(|p| p.p_err < 0.145).collect();
        assert!(matches!(fit_collapse(&sparse), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_error_rate_is_degenerate() {
        let pts: Vec<ThresholdPoint> = [8usize, 12, 16]
            .iter()
            .flat_map(|&size| {
                (0..5).map(move |_| ThresholdPoint {
                    size,
                    p_err: 0.15,
                    trials: 100,
                    failures: 50,
                })
            })
            .collect();
        assert!(matches!(fit_collapse(&pts), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn crossing_between_linear_curves() {
        let mk = |size, p: f64, f: f64| ThresholdPoint {
            size,
            p_err: p,
            trials: 1_000_000,
            failures: (f * 1e6) as u64,
        };
        let pts = vec![
            mk(7, 0.10, 0.30),
            mk(7, 0.20, 0.50),
            mk(11, 0.10, 0.20),
            mk(11, 0.20, 0.60),
        ];
        let c = raw_crossings(&pts);
        assert_eq!(c.len(), 1);
        assert!((c[0].p_cross - 0.15).abs() < 1e-9);
    }
}
