use rayon::prelude::*;

use super::{
    log_grid, star_violation, OrderOptions, OrderVerdict, SpotCheck, Status, SystemPair, Witness,
    CERT_IDENTICAL, CERT_MAJORIZED_PAIR,
};
use crate::error::{Error, Result};
use crate::systems::{majorizes, HazardVector, MAX_COMPONENTS};

/// Star order `X ≤* Y` between two-component systems.
///
/// Majorized pairs get the analytic certificate, backed by spot checks of
/// each case of the argument. Other pairs are scanned over a grid of `a`.
pub fn star_check(
    lambda: &HazardVector,
    theta: &HazardVector,
    opts: &OrderOptions,
) -> Result<OrderVerdict> {
    let pair = SystemPair::new(lambda, theta)?;
    if pair.require_two("star_check").is_err() {
        return Err(Error::Unsupported(
            "star_check handles n = 2; use star_check_n".into(),
        ));
    }
    if lambda.approx_eq(theta) {
        let mut v = OrderVerdict::holds(CERT_IDENTICAL);
        v.spot_checks
            .push(spot(&pair, "a = 1, identical systems", 1.0, &[""], opts)?);
        return Ok(v.note("V vanishes identically at a = 1"));
    }
    if majorizes(lambda, theta)? {
        return certified_star(&pair, opts);
    }
    let (l2, t1) = (lambda.largest(), theta.smallest());
    let (a_low, a_high) = pair.strip();
    let grid = log_grid(
        t1 / (2.0 * l2),
        2.0,
        opts.a_grid_points,
        &[a_low, a_high, 1.0],
    );
    scan_star(&pair, &grid, opts)
        .map(|v| v.note("hazard vectors are not majorized; verdict is numerical"))
}

fn certified_star(pair: &SystemPair, opts: &OrderOptions) -> Result<OrderVerdict> {
    let (_, a_high) = pair.strip();
    let checks = vec![
        spot(pair, "a = 1", 1.0, &["+"], opts)?,
        spot(pair, "a > 1", 1.5, &["+"], opts)?,
        spot(
            pair,
            "a = θ₁/λ₁ (bounding function H)",
            a_high,
            &["-"],
            opts,
        )?,
        spot(
            pair,
            "θ₁/λ₁ < a < 1",
            0.5 * (a_high + 1.0),
            &["+", "-,+"],
            opts,
        )?,
        spot(pair, "0 < a < θ₁/λ₁", 0.5 * a_high, &["-"], opts)?,
    ];
    let contradicted: Vec<&SpotCheck> = checks.iter().filter(|c| !c.consistent).collect();
    let mut verdict = if contradicted.is_empty() {
        OrderVerdict::holds(CERT_MAJORIZED_PAIR)
    } else {
        let msg = format!(
            "numerical spot check contradicts the analytic case: {}",
            contradicted
                .iter()
                .map(|c| c.case.as_str())
                .collect::<Vec<_>>()
                .join("; ")
        );
        OrderVerdict::new(Status::Inconclusive).note(msg)
    };
    verdict.spot_checks = checks;
    Ok(verdict)
}

fn spot(
    pair: &SystemPair,
    case: &str,
    a: f64,
    allowed: &[&str],
    opts: &OrderOptions,
) -> Result<SpotCheck> {
    let p = pair.pattern(a, 0.0, &opts.scan)?;
    let sig = p.signature();
    Ok(SpotCheck {
        case: case.to_string(),
        a,
        b: 0.0,
        consistent: !p.certified || allowed.contains(&sig.as_str()),
        pattern: p.to_string(),
        certified: p.certified,
    })
}

fn scan_star(pair: &SystemPair, grid: &[f64], opts: &OrderOptions) -> Result<OrderVerdict> {
    let patterns = grid
        .par_iter()
        .map(|&a| pair.pattern(a, 0.0, &opts.scan).map(|p| (a, p)))
        .collect::<Result<Vec<_>>>()?;
    let uncertain = patterns.iter().filter(|(_, p)| !p.certified).count();
    if let Some((a, p)) = patterns
        .into_iter()
        .find(|(_, p)| star_violation(&p.certain_signs()))
    {
        return Ok(OrderVerdict::fails(Witness {
            a,
            b: 0.0,
            pattern: p.certain_only(),
        }));
    }
    let mut v = if opts.allow_numerical_holds {
        OrderVerdict::new(Status::Holds)
            .note("no violation on the a-grid (numerical, no certificate)")
    } else {
        OrderVerdict::new(Status::Inconclusive).note("no violation on the a-grid")
    };
    if uncertain > 0 {
        v = v.note(format!(
            "{uncertain} grid patterns were not fully certified"
        ));
    }
    v.suspect_region = Some((grid[0], grid[grid.len() - 1]));
    Ok(v)
}

/// Exploratory star-order scan for systems with any number of components.
/// Never returns HOLDS: no analytic result covers `n > 2`.
pub fn star_check_n(
    lambda: &HazardVector,
    theta: &HazardVector,
    opts: &OrderOptions,
) -> Result<OrderVerdict> {
    let n = lambda.len();
    if theta.len() != n {
        return Err(Error::Domain(format!(
            "component counts differ: {n} and {}",
            theta.len()
        )));
    }
    if n < 2 {
        return Err(Error::Domain("star_check_n needs n >= 2".into()));
    }
    if n > MAX_COMPONENTS {
        return Err(Error::Size {
            n,
            max: MAX_COMPONENTS,
        });
    }
    let pair = SystemPair::new(lambda, theta)?;
    let t1 = theta.smallest();
    let mut extra: Vec<f64> = lambda.rates().iter().map(|l| t1 / l).collect();
    extra.push(1.0);
    let grid = log_grid(
        t1 / (2.0 * lambda.largest()),
        2.0,
        opts.a_grid_points,
        &extra,
    );

    let mut verdict = scan_star(
        &pair,
        &grid,
        &OrderOptions {
            allow_numerical_holds: false,
            ..*opts
        },
    )?;
    if verdict.status == Status::Inconclusive {
        verdict.notes.insert(
            0,
            "consistent with the star order on the scanned grid".into(),
        );
    }
    if !majorizes(lambda, theta)? {
        verdict
            .notes
            .push("precondition: (λ) is not majorized by (θ); scanned anyway".into());
    }
    if lambda.approx_eq(theta) {
        verdict
            .notes
            .push("identical systems: V vanishes identically at a = 1".into());
    }
    Ok(verdict)
}
