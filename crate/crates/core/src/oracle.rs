//! Brute-force validators that do not go through the exponential-sum
//! machinery: transform-order definitions checked on grids, and Monte Carlo
//! sampling of parallel-system lifetimes.
//!
//! The transform `T = F̄_Y⁻¹∘F̄_X` is computed by matching log-CDFs,
//! `Σ ln(1 − e^{−θᵢy}) = Σ ln(1 − e^{−λᵢx})`, which stays accurate in both
//! tails where the survival functions are close to 1 or to 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::{survival, HazardVector};

pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct GridReport {
    pub grid_x: Vec<f64>,
    pub values: Vec<f64>,
    /// `(index, magnitude)` with magnitude above [`ORACLE_TOL`]. For the
    /// ratio check, index `i` marks a drop from `i` to `i + 1`; for the
    /// convexity check, a negative second difference centred at `i`.
    pub violations: Vec<(usize, f64)>,
}

impl GridReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<(usize, f64)> {
        self.violations
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// `ln(1 − e^{−z})` for `z > 0`.
fn log1mexp(z: f64) -> f64 {
    if z < std::f64::consts::LN_2 {
        (-(-z).exp_m1()).ln()
    } else {
        (-(-z).exp()).ln_1p()
    }
}

fn log_cdf(rates: &[f64], x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    rates.iter().map(|&r| log1mexp(r * x)).sum()
}

/// `F̄_Y⁻¹(F̄_X(x))` by bisection on the log-CDF of `Y`.
pub fn transform(lambda: &HazardVector, theta: &HazardVector, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite and >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let target = log_cdf(lambda.rates(), x);
    if target == 0.0 {
        return Err(Error::Overflow {
            largest_safe_x: 700.0 / lambda.smallest(),
        });
    }
    let ly = |y: f64| log_cdf(theta.rates(), y);
    let (mut lo, mut hi) = (x, x);
    while ly(hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Domain(format!(
                "cannot bracket the quantile for x = {x}"
            )));
        }
    }
    while ly(lo) > target {
        lo *= 0.5;
        if lo == 0.0 {
            return Ok(0.0);
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ly(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if target - ly(lo) <= ly(hi) - target {
        lo
    } else {
        hi
    })
}

fn transform_grid(lambda: &HazardVector, theta: &HazardVector, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&x| transform(lambda, theta, x))
        .collect()
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Domain("grid needs at least two points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Star-shape check: `R(x) = T(x)/x` must be nondecreasing on the grid.
pub fn star_ratio_oracle(
    lambda: &HazardVector,
    theta: &HazardVector,
    grid: &[f64],
) -> Result<GridReport> {
    check_increasing(grid)?;
    if !(grid[0] > 0.0) || !grid[grid.len() - 1].is_finite() {
        return Err(Error::Domain("ratio grid must lie in (0, ∞)".into()));
    }
    let t = transform_grid(lambda, theta, grid)?;
    let values: Vec<f64> = t.iter().zip(grid).map(|(t, x)| t / x).collect();
    let violations = values
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let drop = w[0] - w[1];
            (drop > ORACLE_TOL).then_some((i, drop))
        })
        .collect();
    Ok(GridReport {
        grid_x: grid.to_vec(),
        values,
        violations,
    })
}

/// Convexity check: second differences of `T` on a uniform grid.
pub fn convexity_oracle(
    lambda: &HazardVector,
    theta: &HazardVector,
    grid: &[f64],
) -> Result<GridReport> {
    check_increasing(grid)?;
    if grid.len() < 3 {
        return Err(Error::Domain(
            "convexity grid needs at least three points".into(),
        ));
    }
    if !(grid[0] >= 0.0) {
        return Err(Error::Domain("convexity grid must lie in [0, ∞)".into()));
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if grid
        .windows(2)
        .any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h)
    {
        return Err(Error::Domain("convexity grid must be uniform".into()));
    }
    let values = transform_grid(lambda, theta, grid)?;
    let violations = values
        .windows(3)
        .enumerate()
        .filter_map(|(i, w)| {
            let d2 = w[0] - 2.0 * w[1] + w[2];
            (d2 < -ORACLE_TOL).then_some((i + 1, -d2))
        })
        .collect();
    Ok(GridReport {
        grid_x: grid.to_vec(),
        values,
        violations,
    })
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub rates: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub grid_x: Vec<f64>,
    pub empirical: Vec<f64>,
    pub analytic: Vec<f64>,
    pub sup_distance: f64,
}

const MC_SHARDS: u64 = 16;
const MC_GRID: usize = 512;

/// Empirical tail of `max(E₁/λ₁, …, Eₙ/λₙ)` against the analytic survival.
///
/// Samples are drawn in a fixed number of shards, each on its own ChaCha
/// stream, so the report depends only on `(h, n_samples, seed)`.
pub fn mc_survival(h: &HazardVector, n_samples: usize, seed: u64) -> Result<McReport> {
    if n_samples < 1000 {
        return Err(Error::Domain(format!(
            "need at least 1000 samples, got {n_samples}"
        )));
    }
    let surv = survival(h)?;
    let rates = h.rates();
    let per = n_samples as u64 / MC_SHARDS;
    let mut samples: Vec<f64> = (0..MC_SHARDS)
        .into_par_iter()
        .flat_map_iter(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = if shard == MC_SHARDS - 1 {
                n_samples as u64 - per * (MC_SHARDS - 1)
            } else {
                per
            };
            (0..count)
                .map(|_| {
                    rates
                        .iter()
                        .map(|&r| -(-rng.random::<f64>()).ln_1p() / r)
                        .fold(0.0, f64::max)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    samples.sort_by(f64::total_cmp);

    let grid_x = uniform_grid(0.0, 5.0 / h.smallest(), MC_GRID);
    let n = samples.len() as f64;
    let empirical: Vec<f64> = grid_x
        .iter()
        .map(|&x| (samples.len() - samples.partition_point(|&s| s <= x)) as f64 / n)
        .collect();
    let analytic: Vec<f64> = grid_x.iter().map(|&x| surv.eval(x)).collect();
    let sup_distance = empirical
        .iter()
        .zip(&analytic)
        .map(|(e, a)| (e - a).abs())
        .fold(0.0, f64::max);
    Ok(McReport {
        rates: rates.to_vec(),
        n_samples,
        seed,
        grid_x,
        empirical,
        analytic,
        sup_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(r: &[f64]) -> HazardVector {
        HazardVector::new(r.to_vec()).unwrap()
    }

    #[test]
    fn log1mexp_branches_agree() {
        for z in [1e-3f64, 0.5, 0.69, 0.7, 2.0, 8.0] {
            let direct = (1.0 - (-z).exp()).ln();
            assert!((log1mexp(z) - direct).abs() <= 1e-10 * direct.abs());
        }
        assert!((log1mexp(1e-12) - (1e-12f64).ln()).abs() < 1e-9);
        assert!((log1mexp(40.0) + (-40f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn identity_transform() {
        let l = hv(&[2.0, 3.0]);
        for x in [0.0, 1e-6, 0.3, 2.0, 15.0] {
            assert!((transform(&l, &l, x).unwrap() - x).abs() <= 4.0 * f64::EPSILON * x);
        }
        let r = star_ratio_oracle(&l, &l, &uniform_grid(0.01, 5.0, 500)).unwrap();
        assert!(r.is_clean());
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn transform_matches_survival_levels() {
        let (l, t) = (hv(&[2.0, 3.0]), hv(&[1.5, 3.5]));
        let (sx, sy) = (survival(&l).unwrap(), survival(&t).unwrap());
        for x in [0.05, 0.4, 1.0, 3.0] {
            let y = transform(&l, &t, x).unwrap();
            assert!((sy.eval(y) - sx.eval(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn ratio_oracle_examples() {
        let grid = uniform_grid(0.005, 8.0, 4000);
        let ok = star_ratio_oracle(&hv(&[2.0, 3.0]), &hv(&[1.5, 3.5]), &grid).unwrap();
        assert!(ok.is_clean(), "{:?}", ok.worst());
        let bad = star_ratio_oracle(&hv(&[1.5, 3.5]), &hv(&[2.0, 3.0]), &grid).unwrap();
        assert!(!bad.is_clean());
    }

    #[test]
    fn convexity_oracle_requires_uniform_grid() {
        let l = hv(&[2.0, 3.0]);
        assert!(convexity_oracle(&l, &l, &[0.0, 1.0, 3.0]).is_err());
        let r = convexity_oracle(&l, &l, &uniform_grid(0.0, 3.0, 100)).unwrap();
        assert!(r.is_clean());
    }

    #[test]
    fn mc_is_deterministic() {
        let h = hv(&[2.0, 3.0]);
        let a = mc_survival(&h, 20_000, 7).unwrap();
        let b = mc_survival(&h, 20_000, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.sup_distance < 0.02);
        assert!(mc_survival(&h, 999, 7).is_err());
    }
}
