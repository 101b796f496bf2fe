//! BMO and `Osc(Φ)` seminorms over dyadic families, John–Nirenberg scans and the
//! `a`-th root BMO check.
//!
//! All suprema run over the finite cube family of a grid, so every seminorm reported here
//! is a lower bound for the seminorm over all cubes; reports name the attaining cube.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{mean, supremum, Cube, DyadicGrid, SampledFunction};
use crate::orlicz::luxemburg;
use crate::young::YoungFunction;

/// Supremum of a per-cube quantity, with the cube table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscReport {
    pub seminorm: f64,
    pub attaining_cube: Cube,
    pub gauge: YoungFunction,
    pub per_cube: Vec<(Cube, f64)>,
}

/// `⨍_Q |b - b_Q|`.
pub fn mean_oscillation(b: &SampledFunction, q: &Cube) -> Result<f64> {
    Ok(mean_osc_slice(b.slice(q)?))
}

fn mean_osc_slice(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|v| (v - m).abs()).sum::<f64>() / xs.len() as f64
}

fn centered(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    xs.iter().map(|v| v - m).collect()
}

fn scan(
    b: &SampledFunction,
    grids: &[DyadicGrid],
    gauge: YoungFunction,
    per: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<OscReport> {
    let mut per_cube = Vec::new();
    for g in grids {
        b.lattice.check_same(&g.lattice)?;
        let rows: Vec<(Cube, f64)> = g
            .cube_ranges()
            .par_iter()
            .map(|(q, r)| (*q, per(&b.values[r.clone()])))
            .collect();
        per_cube.extend(rows);
    }
    let (attaining_cube, seminorm) =
        supremum(&per_cube).ok_or_else(|| Error::Domain("grid has no cubes".into()))?;
    Ok(OscReport { seminorm, attaining_cube, gauge, per_cube })
}

/// Dyadic BMO seminorm `sup_Q ⨍_Q |b - b_Q|` over one or more grids.
pub fn bmo_seminorm(b: &SampledFunction, grids: &[DyadicGrid]) -> Result<OscReport> {
    scan(b, grids, YoungFunction::Power { p: 1.0 }, mean_osc_slice)
}

/// `sup_Q ‖b - b_Q‖_{Φ,Q}` over one or more grids.
pub fn osc_seminorm(phi: &YoungFunction, b: &SampledFunction, grids: &[DyadicGrid]) -> Result<OscReport> {
    scan(b, grids, phi.clone(), |xs| luxemburg(phi, &centered(xs)).0)
}

/// Largest `c` with `⨍_Q exp(c |b - b_Q|) <= C_target` on every grid cube.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JohnNirenbergReport {
    /// `+inf` when `b` is constant on every cube.
    pub c_star: f64,
    pub unbounded: bool,
    pub bmo: f64,
    /// `c_star · ‖b‖_BMO`, the constant in the normalized form `exp(c |b - b_Q| / ‖b‖_BMO)`.
    pub c_normalized: f64,
    pub attaining_cube: Option<Cube>,
}

/// Per-cube bisection on `c` for `⨍_Q exp(c|b - b_Q|) = C_target`, minimized over cubes.
pub fn john_nirenberg_scan(b: &SampledFunction, grid: &DyadicGrid, c_target: f64) -> Result<JohnNirenbergReport> {
    if !(c_target > 1.0) {
        return Err(Error::Domain(format!("C_target must exceed 1, got {c_target}")));
    }
    b.lattice.check_same(&grid.lattice)?;
    let bmo = bmo_seminorm(b, std::slice::from_ref(grid))?.seminorm;
    let rows: Vec<(Cube, f64)> = grid
        .cube_ranges()
        .par_iter()
        .filter_map(|(q, r)| {
            let dev: Vec<f64> = centered(&b.values[r.clone()]).into_iter().map(f64::abs).collect();
            let dmax = dev.iter().fold(0.0_f64, |a, &v| a.max(v));
            (dmax > 0.0).then(|| (*q, jn_threshold(&dev, dmax, c_target)))
        })
        .collect();
    // Smallest threshold wins: negate to reuse the max scan.
    let neg: Vec<(Cube, f64)> = rows.iter().map(|&(q, c)| (q, -c)).collect();
    Ok(match supremum(&neg) {
        None => JohnNirenbergReport {
            c_star: f64::INFINITY,
            unbounded: true,
            bmo,
            c_normalized: f64::INFINITY,
            attaining_cube: None,
        },
        Some((q, c)) => JohnNirenbergReport {
            c_star: -c,
            unbounded: false,
            bmo,
            c_normalized: -c * bmo,
            attaining_cube: Some(q),
        },
    })
}

fn jn_threshold(dev: &[f64], dmax: f64, target: f64) -> f64 {
    let n = dev.len() as f64;
    let g = |c: f64| dev.iter().map(|d| (c * d).exp()).sum::<f64>() / n;
    // g(c) <= exp(c dmax) and g(c) >= exp(c dmax) / n
    let mut lo = target.ln() / dmax;
    let mut hi = (target * n).ln() / dmax;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Comparison of `‖b‖_{Osc(exp L^a)}` with `‖b^a‖_BMO^{1/a}` for `b >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootBmoReport {
    pub a: f64,
    pub bmo_of_power: f64,
    pub bmo_cube: Cube,
    pub osc_exp: f64,
    pub osc_cube: Cube,
    /// `‖b‖_{Osc(exp L^a)} / ‖b^a‖_BMO^{1/a}`, 0 when both vanish.
    pub ratio: f64,
    /// `max_Q ⨍_Q |b - (b^a)_Q^{1/a}| / ‖b^a‖_BMO^{1/a}`; at most 1 by Hölder continuity of `x^{1/a}`.
    pub chain_max: f64,
    pub chain_holds: bool,
}

/// Computes both sides of the root-BMO inequality after normalizing `‖b^a‖_BMO = 1`.
pub fn root_bmo_check(b: &SampledFunction, a: f64, grid: &DyadicGrid) -> Result<RootBmoReport> {
    if !(a >= 1.0 && a.is_finite()) {
        return Err(Error::Domain(format!("root exponent a must be >= 1, got {a}")));
    }
    if let Some(v) = b.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("root BMO needs b >= 0, found {v}")));
    }
    let grids = std::slice::from_ref(grid);
    let ba = b.map(|v| v.powf(a));
    let bmo_rep = bmo_seminorm(&ba, grids)?;
    let gauge = YoungFunction::exp_minus_one(a)?;
    if bmo_rep.seminorm == 0.0 {
        let osc = osc_seminorm(&gauge, b, grids)?;
        return Ok(RootBmoReport {
            a,
            bmo_of_power: 0.0,
            bmo_cube: bmo_rep.attaining_cube,
            osc_exp: osc.seminorm,
            osc_cube: osc.attaining_cube,
            ratio: 0.0,
            chain_max: 0.0,
            chain_holds: osc.seminorm == 0.0,
        });
    }
    let scale = bmo_rep.seminorm.powf(1.0 / a);
    let normalized = b.scale(1.0 / scale);
    let osc = osc_seminorm(&gauge, &normalized, grids)?;
    let chain: Vec<f64> = grid
        .cube_ranges()
        .par_iter()
        .map(|(_, r)| {
            let xs = &b.values[r.clone()];
            let f_of_mean = mean(&ba.values[r.clone()]).powf(1.0 / a);
            xs.iter().map(|v| (v - f_of_mean).abs()).sum::<f64>() / xs.len() as f64 / scale
        })
        .collect();
    let chain_max = chain.iter().fold(0.0_f64, |m, &v| m.max(v));
    Ok(RootBmoReport {
        a,
        bmo_of_power: bmo_rep.seminorm,
        bmo_cube: bmo_rep.attaining_cube,
        osc_exp: osc.seminorm * scale,
        osc_cube: osc.attaining_cube,
        ratio: osc.seminorm,
        chain_max,
        chain_holds: chain_max <= 1.0 + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Generator, Lattice};
    use approx::assert_relative_eq;

    fn setup(depth: u32) -> (Lattice, DyadicGrid) {
        let lat = Lattice::with_depth(0.0, 1.0, depth).unwrap();
        (lat, DyadicGrid::standard(lat).unwrap())
    }

    #[test]
    fn mean_oscillation_examples() {
        let (lat, _) = setup(8);
        let q = Cube::new(0.0, 1.0).unwrap();
        assert_eq!(mean_oscillation(&SampledFunction::constant(lat, 2.0), &q).unwrap(), 0.0);
        assert_relative_eq!(mean_oscillation(&Generator::Identity.sample(lat), &q).unwrap(), 0.25, max_relative = 1e-12);
        assert_relative_eq!(mean_oscillation(&Generator::Indicator(0.0, 0.5).sample(lat), &q).unwrap(), 0.5);
    }

    #[test]
    fn bmo_of_identity_is_attained_at_top() {
        let (lat, g) = setup(8);
        let rep = bmo_seminorm(&Generator::Identity.sample(lat), &[g]).unwrap();
        assert_relative_eq!(rep.seminorm, 0.25, max_relative = 1e-12);
        assert_eq!(rep.attaining_cube, Cube { a: 0.0, side: 1.0 });
    }

    #[test]
    fn exp_oscillation_of_half_indicator() {
        let (lat, g) = setup(6);
        let b = Generator::Indicator(0.0, 0.5).sample(lat);
        let rep = osc_seminorm(&YoungFunction::exp_minus_one(1.0).unwrap(), &b, &[g]).unwrap();
        assert_relative_eq!(rep.seminorm, 1.0 / (2.0 * 2f64.ln()), max_relative = 1e-12);
        let bmo = bmo_seminorm(&b, &[g]).unwrap();
        let one = osc_seminorm(&YoungFunction::power(1.0).unwrap(), &b, &[g]).unwrap();
        assert_eq!(one.seminorm, bmo.seminorm);
    }

    #[test]
    fn john_nirenberg_examples() {
        let (lat, g) = setup(6);
        let b = Generator::Indicator(0.0, 0.5).sample(lat);
        let rep = john_nirenberg_scan(&b, &g, 2.0).unwrap();
        assert_relative_eq!(rep.c_star, 2.0 * 2f64.ln(), max_relative = 1e-12);
        let flat = john_nirenberg_scan(&SampledFunction::constant(lat, 1.0), &g, 2.0).unwrap();
        assert!(flat.unbounded && flat.c_star.is_infinite());
    }

    #[test]
    fn root_bmo_constant_and_negative() {
        let (lat, g) = setup(6);
        let rep = root_bmo_check(&SampledFunction::constant(lat, 3.0), 2.0, &g).unwrap();
        assert_eq!(rep.ratio, 0.0);
        assert!(root_bmo_check(&Generator::Identity.sample(Lattice::with_depth(-1.0, 1.0, 6).unwrap()), 2.0,
            &DyadicGrid::standard(Lattice::with_depth(-1.0, 1.0, 6).unwrap()).unwrap()).is_err());
    }
}
