//! Luxemburg-type Orlicz averages over cubes and the dyadic Orlicz maximal function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicGrid, SampledFunction};
use crate::young::YoungFunction;

/// `‖f‖_{Φ,Q}` together with the cube and the bisection effort.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrliczAverage {
    pub value: f64,
    pub cube: Cube,
    pub gauge: YoungFunction,
    pub iterations: u32,
}

/// Stop once the log-bracket is narrower than this.
const REL_TOL: f64 = 1e-14;

/// `inf{λ > 0 : mean(Φ(|x_i|/λ)) <= 1}` over a slice of samples, with the iteration count.
///
/// The bracket `[M/Φ⁻¹(n), M/Φ⁻¹(1)]`, `M = max|x_i|`, always contains the root; bisection
/// runs on `ln λ` and returns the upper end, so the constraint holds at the returned value.
pub fn luxemburg(phi: &YoungFunction, xs: &[f64]) -> (f64, u32) {
    let m = xs.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 || xs.is_empty() {
        return (0.0, 0);
    }
    if phi.is_linear() {
        return (xs.iter().map(|v| v.abs()).sum::<f64>() / xs.len() as f64, 0);
    }
    let n = xs.len() as f64;
    let mean_phi = |lam: f64| xs.iter().map(|v| phi.eval(v.abs() / lam)).sum::<f64>() / n;
    let mut lo = m / phi.eval_inverse(n);
    let mut hi = m / phi.eval_inverse(1.0);
    while mean_phi(hi) > 1.0 {
        hi *= 1.0 + 1e-12;
    }
    while lo > 0.0 && mean_phi(lo) <= 1.0 {
        lo *= 0.5;
    }
    let mut it = 0;
    while hi / lo - 1.0 > REL_TOL && it < 200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_phi(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
    }
    (hi, it)
}

/// `‖f‖_{Φ,Q}`.
pub fn orlicz_average(phi: &YoungFunction, f: &SampledFunction, q: &Cube) -> Result<OrliczAverage> {
    let (value, iterations) = luxemburg(phi, f.slice(q)?);
    Ok(OrliczAverage { value, cube: *q, gauge: phi.clone(), iterations })
}

/// `M_Φ f(x) = max` of `‖f‖_{Φ,Q}` over grid cubes containing `x`.
pub fn orlicz_maximal(phi: &YoungFunction, f: &SampledFunction, grid: &DyadicGrid, x: f64) -> Result<f64> {
    f.lattice.check_same(&grid.lattice)?;
    grid.lattice.locate(x)?;
    let mut best = 0.0_f64;
    for q in grid.containing(x) {
        best = best.max(luxemburg(phi, f.slice(&q)?).0);
    }
    Ok(best)
}

/// `M_Φ f` at every sample; samples outside all grid cubes get 0.
pub fn orlicz_maximal_function(phi: &YoungFunction, f: &SampledFunction, grid: &DyadicGrid) -> Result<SampledFunction> {
    f.lattice.check_same(&grid.lattice)?;
    let ranges = grid.cube_ranges();
    let avgs: Vec<f64> = ranges.par_iter().map(|(_, r)| luxemburg(phi, &f.values[r.clone()]).0).collect();
    let mut out = SampledFunction::zeros(f.lattice);
    for ((_, r), a) in ranges.iter().zip(avgs) {
        for v in &mut out.values[r.clone()] {
            *v = v.max(a);
        }
    }
    Ok(out)
}

/// `‖M_Φ f‖_{L^p} / ‖f‖_{L^p}` on the sampled domain, a lower bound for the operator norm.
pub fn maximal_lp_norm_ratio(phi: &YoungFunction, p: f64, f: &SampledFunction, grid: &DyadicGrid) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("L^p exponent must be >= 1, got {p}")));
    }
    let den = f.lp_norm(p, None)?;
    if den == 0.0 {
        return Err(Error::ZeroNorm("‖f‖_p = 0".into()));
    }
    Ok(orlicz_maximal_function(phi, f, grid)?.lp_norm(p, None)? / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Generator, Lattice};
    use approx::assert_relative_eq;

    fn lat() -> Lattice {
        Lattice::with_depth(0.0, 1.0, 6).unwrap()
    }

    #[test]
    fn constant_function() {
        let f = SampledFunction::constant(lat(), 3.0);
        let q = Cube::new(0.0, 1.0).unwrap();
        let e1 = YoungFunction::exp_minus_one(1.0).unwrap();
        let avg = orlicz_average(&e1, &f, &q).unwrap();
        assert_relative_eq!(avg.value, 3.0 / 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn half_indicator_in_l2() {
        let f = Generator::Indicator(0.0, 0.5).sample(lat()).scale(2.0);
        let q = Cube::new(0.0, 1.0).unwrap();
        let avg = orlicz_average(&YoungFunction::power(2.0).unwrap(), &f, &q).unwrap();
        assert_relative_eq!(avg.value, 2f64.sqrt(), max_relative = 1e-12);
        let mean: f64 = f.values.iter().map(|v| (v / avg.value).powi(2)).sum::<f64>() / 64.0;
        assert!((1.0 - 1e-8..=1.0).contains(&mean));
    }

    #[test]
    fn zero_function() {
        let f = SampledFunction::zeros(lat());
        let q = Cube::new(0.0, 0.5).unwrap();
        assert_eq!(orlicz_average(&YoungFunction::power(3.0).unwrap(), &f, &q).unwrap().value, 0.0);
    }

    #[test]
    fn maximal_examples() {
        let g = DyadicGrid::standard(lat()).unwrap();
        let f = Generator::Indicator(0.0, 0.25).sample(lat());
        let one = YoungFunction::power(1.0).unwrap();
        assert_relative_eq!(orlicz_maximal(&one, &f, &g, 0.125).unwrap(), 1.0);
        let c = SampledFunction::constant(lat(), 1.0);
        let e1 = YoungFunction::exp_minus_one(1.0).unwrap();
        assert_relative_eq!(maximal_lp_norm_ratio(&e1, 2.0, &c, &g).unwrap(), 1.0 / 2f64.ln(), max_relative = 1e-12);
    }
}
