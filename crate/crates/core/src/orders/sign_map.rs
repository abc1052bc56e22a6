use rayon::prelude::*;
use serde::Serialize;

use super::SystemPair;
use crate::error::{Error, Result};
use crate::expsum::{ScanOptions, Sign};
use crate::systems::HazardVector;

/// Signs of `V(x, a, b)` on an `(a, x)` grid for fixed `b`.
///
/// `signs[i][j]` is the sign at `a_values[i]`, `x_values[j]`; `0` marks a
/// cell where `|V|` is unresolved or below the floor.
#[derive(Clone, Debug, Serialize)]
pub struct SignMap {
    pub b: f64,
    pub a_values: Vec<f64>,
    pub x_values: Vec<f64>,
    pub signs: Vec<Vec<i8>>,
}

impl SignMap {
    /// Compressed sign sequence of one row, zeros skipped.
    pub fn row_pattern(&self, row: usize) -> String {
        let mut out: Vec<i8> = Vec::new();
        for &s in &self.signs[row] {
            if s != 0 && out.last() != Some(&s) {
                out.push(s);
            }
        }
        out.iter()
            .map(|&s| if s > 0 { "+" } else { "-" })
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn row_of(&self, a: f64) -> Option<usize> {
        self.a_values.iter().position(|&v| v == a)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,a,sign\n");
        for (i, &a) in self.a_values.iter().enumerate() {
            for (j, &x) in self.x_values.iter().enumerate() {
                s.push_str(&format!("{x},{a},{}\n", self.signs[i][j]));
            }
        }
        s
    }
}

/// `resolution = (a rows, x columns)`. The breakpoints `θ₁/λ₂` and `θ₁/λ₁`
/// are added as exact rows when they fall inside `a_range`.
pub fn sign_map(
    lambda: &HazardVector,
    theta: &HazardVector,
    b: f64,
    a_range: (f64, f64),
    x_range: (f64, f64),
    resolution: (usize, usize),
    opts: &ScanOptions,
) -> Result<SignMap> {
    let (a_lo, a_hi) = a_range;
    if !(a_lo > 0.0) || !(a_hi >= a_lo) || !a_hi.is_finite() {
        return Err(Error::Domain(format!(
            "a range must lie in (0, ∞), got [{a_lo}, {a_hi}]"
        )));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!("b must be >= 0, got {b}")));
    }
    let (x_lo, x_hi) = x_range;
    if !(x_lo >= 0.0) || !(x_hi > x_lo) || !x_hi.is_finite() {
        return Err(Error::Domain(format!("bad x range [{x_lo}, {x_hi}]")));
    }
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::Domain(format!(
            "resolution must be at least 2x2, got {resolution:?}"
        )));
    }
    let pair = SystemPair::new(lambda, theta)?;

    let mut a_values = linspace(a_lo, a_hi, resolution.0);
    let t1 = theta.smallest();
    for brk in [t1 / lambda.largest(), t1 / lambda.smallest()] {
        if brk >= a_lo && brk <= a_hi {
            a_values.push(brk);
        }
    }
    a_values.sort_by(f64::total_cmp);
    a_values.dedup();
    let x_values = linspace(x_lo, x_hi, resolution.1);

    let signs = a_values
        .par_iter()
        .map(|&a| {
            let v = pair.difference(a, b)?;
            Ok(x_values
                .iter()
                .map(|&x| {
                    let s = v.eval_scaled(x);
                    if s.resolved() && s.value().abs() > opts.sign_floor {
                        s.sign().as_i8()
                    } else {
                        Sign::Zero.as_i8()
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<i8>>>>()?;

    Ok(SignMap {
        b,
        a_values,
        x_values,
        signs,
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(r: &[f64]) -> HazardVector {
        HazardVector::new(r.to_vec()).unwrap()
    }

    #[test]
    fn breakpoint_rows_are_exact() {
        let m = sign_map(
            &hv(&[2.0, 3.0]),
            &hv(&[1.5, 3.5]),
            0.0169,
            (0.3, 1.2),
            (0.0, 20.0),
            (10, 4000),
            &ScanOptions::default(),
        )
        .unwrap();
        let hi = m.row_of(0.75).unwrap();
        let lo = m.row_of(0.5).unwrap();
        assert_eq!(m.row_pattern(hi), "+,-,+");
        assert_eq!(m.row_pattern(lo), "+,-");
        assert!(m.to_csv().starts_with("x,a,sign\n"));
    }

    #[test]
    fn columns_switch_at_most_once() {
        let m = sign_map(
            &hv(&[2.0, 3.0]),
            &hv(&[1.5, 3.5]),
            0.0169,
            (0.3, 1.2),
            (0.01, 10.0),
            (40, 60),
            &ScanOptions::default(),
        )
        .unwrap();
        for j in 0..m.x_values.len() {
            let col: Vec<i8> = m.signs.iter().map(|r| r[j]).filter(|&s| s != 0).collect();
            let switches = col.windows(2).filter(|w| w[0] != w[1]).count();
            assert!(switches <= 1);
            assert!(col.windows(2).all(|w| !(w[0] > 0 && w[1] < 0)));
        }
    }

    #[test]
    fn identical_systems_give_zero_row_at_one() {
        let l = hv(&[2.0, 3.0]);
        let m = sign_map(
            &l,
            &l,
            0.0,
            (0.5, 1.5),
            (0.0, 5.0),
            (3, 10),
            &ScanOptions::default(),
        )
        .unwrap();
        let r = m.row_of(1.0).unwrap();
        assert!(m.signs[r].iter().all(|&s| s == 0));
    }

    #[test]
    fn rejects_bad_ranges() {
        let l = hv(&[2.0, 3.0]);
        let o = ScanOptions::default();
        assert!(sign_map(&l, &l, 0.0, (0.0, 1.0), (0.0, 1.0), (2, 2), &o).is_err());
        assert!(sign_map(&l, &l, -1.0, (0.5, 1.0), (0.0, 1.0), (2, 2), &o).is_err());
        assert!(sign_map(&l, &l, 0.0, (0.5, 1.0), (0.0, 1.0), (1, 2), &o).is_err());
    }
}
