use rayon::prelude::*;
use serde::Serialize;

use super::{
    convex_violation, log_grid, star_check, violation_search, OrderOptions, OrderVerdict, Status,
    SystemPair, Witness, CERT_HOMOGENEOUS, CERT_IDENTICAL,
};
use crate::error::{Error, Result};
use crate::systems::{majorizes, HazardVector};

/// Cases for `(a, b)` with `b ≥ 0` when `(λ) ≺ (θ)`, `n = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegionLabel {
    /// `a ≥ 1`: `V ≥ F̄_Y − F̄_X ≥ 0`.
    Fav1,
    /// `θ₁/λ₁ ≤ a < 1`: pattern `+` or `+,−,+`.
    Fav2,
    /// `0 < a ≤ θ₁/λ₂`: pattern `+,−`.
    Fav3,
    /// `θ₁/λ₂ < a < θ₁/λ₁`: sign control is lost.
    ViolatingStrip,
}

pub fn region_classify(
    a: f64,
    b: f64,
    lambda: &HazardVector,
    theta: &HazardVector,
) -> Result<RegionLabel> {
    if !(a > 0.0) || !(b >= 0.0) {
        return Err(Error::Domain(format!(
            "need a > 0 and b >= 0, got a = {a}, b = {b}"
        )));
    }
    if lambda.len() != 2 || theta.len() != 2 {
        return Err(Error::Unsupported(
            "region_classify handles n = 2 only".into(),
        ));
    }
    if lambda.approx_eq(theta) {
        return Err(Error::Degenerate("λ = θ: every region is trivial".into()));
    }
    if !majorizes(lambda, theta)? {
        return Err(Error::Domain("region_classify needs (λ) ≺ (θ)".into()));
    }
    let t1 = theta.smallest();
    let (a_low, a_high) = (t1 / lambda.largest(), t1 / lambda.smallest());
    Ok(if a >= 1.0 {
        RegionLabel::Fav1
    } else if a >= a_high {
        RegionLabel::Fav2
    } else if a <= a_low {
        RegionLabel::Fav3
    } else {
        RegionLabel::ViolatingStrip
    })
}

/// Convex order `X ≤c Y` between two-component systems.
pub fn convex_check(
    lambda: &HazardVector,
    theta: &HazardVector,
    opts: &OrderOptions,
) -> Result<OrderVerdict> {
    let pair = SystemPair::new(lambda, theta)?;
    pair.require_two("convex_check")?;
    if lambda.approx_eq(theta) {
        return Ok(OrderVerdict::holds(CERT_IDENTICAL).note("the transform is the identity"));
    }
    let star = star_check(lambda, theta, opts)?;
    let (a_low, a_high) = pair.strip();
    let b_grid = b_grid(&pair, opts);

    if lambda.is_homogeneous() {
        let a_grid = log_grid(a_low / 2.0, 2.0, opts.a_grid_points, &[a_low, 1.0]);
        return Ok(match scan_convex(&pair, &a_grid, &b_grid, opts)? {
            Some(w) => OrderVerdict::fails(w)
                .note("violation found despite homogeneous λ; numerical trouble likely"),
            None => OrderVerdict::holds(CERT_HOMOGENEOUS)
                .note("numerical (a, b) scan found no violation, consistent with the certificate"),
        });
    }

    if majorizes(lambda, theta)? {
        // Star order holds, so b >= 0 suffices; only the strip is not covered analytically.
        return Ok(match violation_search(lambda, theta, opts) {
            Ok(report) => OrderVerdict::fails(Witness {
                a: report.a,
                b: report.b,
                pattern: report.pattern.certain_only(),
            })
            .note(format!(
                "constructive search with b0 = {} seeded at x0 = {}",
                report.b0_used, report.x0_seed
            )),
            Err(e) => {
                let a_grid = strip_grid(a_low, a_high, opts.a_grid_points);
                match scan_convex(&pair, &a_grid, &b_grid, opts)? {
                    Some(w) => OrderVerdict::fails(w).note(format!(
                        "constructive search failed ({e}); grid found a witness"
                    )),
                    None => {
                        let mut v = OrderVerdict::new(Status::Inconclusive).note(format!(
                            "constructive search failed ({e}); no violation on the strip grid"
                        ));
                        v.suspect_region = Some((a_low, a_high));
                        v
                    }
                }
            }
        });
    }

    let a_grid = log_grid(a_low / 2.0, 2.0, opts.a_grid_points, &[a_low, a_high, 1.0]);
    if let Some(w) = scan_convex(&pair, &a_grid, &b_grid, opts)? {
        return Ok(OrderVerdict::fails(w)
            .note("hazard vectors are not majorized; witness from the (a, b) grid"));
    }
    let mut v = if opts.allow_numerical_holds && star.status == Status::Holds {
        OrderVerdict::new(Status::Holds)
            .note("no violation on the (a, b) grid (numerical, no certificate)")
    } else {
        OrderVerdict::new(Status::Inconclusive).note("no violation on the (a, b) grid")
    };
    if star.status != Status::Holds {
        v.notes.push(format!(
            "star order not established ({:?}); b < 0 was not scanned",
            star.status
        ));
    }
    v.suspect_region = Some((a_grid[0], a_grid[a_grid.len() - 1]));
    Ok(v)
}

/// Convex-criterion check at a single `(a, b)`. A single point can only
/// refute the order, so the verdict is FAILS or INCONCLUSIVE.
pub fn convex_check_at(
    lambda: &HazardVector,
    theta: &HazardVector,
    a: f64,
    b: f64,
    opts: &OrderOptions,
) -> Result<OrderVerdict> {
    let pair = SystemPair::new(lambda, theta)?;
    let p = pair.pattern(a, b, &opts.scan)?;
    if convex_violation(&p.certain_signs()) {
        return Ok(OrderVerdict::fails(Witness {
            a,
            b,
            pattern: p.certain_only(),
        }));
    }
    Ok(OrderVerdict::new(Status::Inconclusive).note(format!(
        "pattern {p} at (a, b) = ({a}, {b}) does not violate the convex criterion{}",
        if p.certified {
            ""
        } else {
            " (not fully certified)"
        }
    )))
}

fn b_grid(pair: &SystemPair, opts: &OrderOptions) -> Vec<f64> {
    let (l1, l2) = (pair.lambda.smallest(), pair.lambda.largest());
    let mut g = log_grid(1e-3 / l2, 1.0 / l1, opts.b_grid_points, &[]);
    g.insert(0, 0.0);
    g
}

fn strip_grid(a_low: f64, a_high: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (1..=n)
        .map(|i| a_low + (a_high - a_low) * i as f64 / (n + 1) as f64)
        .collect()
}

fn scan_convex(
    pair: &SystemPair,
    a_grid: &[f64],
    b_grid: &[f64],
    opts: &OrderOptions,
) -> Result<Option<Witness>> {
    let cells: Vec<(f64, f64)> = a_grid
        .iter()
        .flat_map(|&a| b_grid.iter().map(move |&b| (a, b)))
        .collect();
    let hits = cells
        .par_iter()
        .map(|&(a, b)| {
            let p = pair.pattern(a, b, &opts.scan)?;
            Ok(convex_violation(&p.certain_signs()).then(|| Witness {
                a,
                b,
                pattern: p.certain_only(),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.into_iter().flatten().next())
}
