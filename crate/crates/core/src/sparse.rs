//! Sparse families of dyadic cubes, the sparse commutator operators
//! `T^m_{S,b} f = Σ_Q (⨍_Q |b - b_Q|^m f) 1_Q` and their adjoints, and the pointwise
//! inequality that reduces iterated commutators to sparse operators.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{mean, Cube, DyadicGrid, SampledFunction};

/// A cube of a sparse family with its exceptional set `E_Q`, stored as half-open
/// sample-index ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCube {
    pub cube: Cube,
    pub exceptional: Vec<(usize, usize)>,
    /// `|E_Q| / |Q|`.
    pub ratio: f64,
}

/// Certified sparse family: every `|E_Q| >= δ|Q|` and the `E_Q` are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFamily {
    pub grid: DyadicGrid,
    pub delta: f64,
    pub cubes: Vec<SparseCube>,
}

impl SparseFamily {
    pub fn cube_list(&self) -> Vec<Cube> {
        self.cubes.iter().map(|c| c.cube).collect()
    }

    /// Rebuilds the exceptional sets from the cube list and re-certifies the family.
    pub fn reverify(&self) -> Result<SparseFamily> {
        verify_or_build_exceptional(&self.grid, &self.cube_list(), self.delta)
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Smallest `|E_Q| / |Q|` in the family (1 for an empty family).
    pub fn min_ratio(&self) -> f64 {
        self.cubes.iter().map(|c| c.ratio).fold(1.0, f64::min)
    }

    fn ranges(&self) -> Vec<Range<usize>> {
        self.cubes
            .iter()
            .map(|c| self.grid.lattice.index_range(&c.cube).expect("family cubes are aligned"))
            .collect()
    }
}

fn belongs_to(grid: &DyadicGrid, q: &Cube) -> bool {
    let k = q.side.log2();
    if (k - k.round()).abs() > 1e-12 {
        return false;
    }
    let k = k.round() as i32;
    if k < grid.k_min || k > grid.k_max {
        return false;
    }
    let j = (q.a - grid.shift) / q.side;
    (j - j.round()).abs() <= 1e-9 * j.abs().max(1.0)
        && q.is_within(&grid.lattice.domain())
        && grid.lattice.index_range(q).is_ok()
}

/// Builds `E_Q = Q \ ∪{maximal selected cubes strictly inside Q}` and checks
/// `|E_Q| >= δ|Q|` for every cube. The offending cube is reported on failure.
pub fn verify_or_build_exceptional(grid: &DyadicGrid, cubes: &[Cube], delta: f64) -> Result<SparseFamily> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("sparsity parameter must lie in (0, 1), got {delta}")));
    }
    if let Some(q) = cubes.iter().find(|q| !belongs_to(grid, q)) {
        return Err(Error::Domain(format!("cube {q} is not a cube of the grid with shift {}", grid.shift)));
    }
    let mut sorted: Vec<Cube> = cubes.to_vec();
    // start ascending, larger first at equal start: parents precede their descendants
    sorted.sort_by(|p, q| p.a.total_cmp(&q.a).then(q.side.total_cmp(&p.side)));
    sorted.dedup_by(|p, q| p.lex_cmp(q).is_eq());

    let lat = grid.lattice;
    let ranges: Vec<Range<usize>> = sorted.iter().map(|q| lat.index_range(q).unwrap()).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); sorted.len()];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..sorted.len() {
        while let Some(&top) = stack.last() {
            if ranges[i].start >= ranges[top].start && ranges[i].end <= ranges[top].end {
                break;
            }
            stack.pop();
        }
        if let Some(&top) = stack.last() {
            children[top].push(i);
        }
        stack.push(i);
    }

    let mut out = Vec::with_capacity(sorted.len());
    for (i, q) in sorted.iter().enumerate() {
        let r = &ranges[i];
        let mut exceptional = Vec::new();
        let mut cursor = r.start;
        for &c in &children[i] {
            if ranges[c].start > cursor {
                exceptional.push((cursor, ranges[c].start));
            }
            cursor = cursor.max(ranges[c].end);
        }
        if cursor < r.end {
            exceptional.push((cursor, r.end));
        }
        let kept: usize = exceptional.iter().map(|(s, e)| e - s).sum();
        let ratio = kept as f64 / r.len() as f64;
        if ratio < delta * (1.0 - 1e-12) {
            return Err(Error::NotSparse { cube: *q, ratio, delta });
        }
        out.push(SparseCube { cube: *q, exceptional, ratio });
    }
    Ok(SparseFamily { grid: *grid, delta, cubes: out })
}

/// Stopping-time family: starting from the maximal grid cubes, select inside each
/// selected `Q` the maximal grid cubes `Q'` with `⨍_{Q'} f > ratio · ⨍_Q f`, and recurse.
/// The result is sparse with `δ = 1 - 1/ratio`.
pub fn build_sparse_stopping(f: &SampledFunction, grid: &DyadicGrid, ratio: f64) -> Result<SparseFamily> {
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::Domain(format!("stopping ratio must exceed 1, got {ratio}")));
    }
    f.lattice.check_same(&grid.lattice)?;
    if let Some(v) = f.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("stopping construction needs f >= 0, found {v}")));
    }
    let lat = grid.lattice;
    let mut prefix = Vec::with_capacity(lat.n + 1);
    prefix.push(0.0);
    for v in &f.values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let avg = |q: &Cube| {
        let r = lat.index_range(q).unwrap();
        (prefix[r.end] - prefix[r.start]) / r.len() as f64
    };
    let finest = 2f64.powi(grid.k_min);

    let mut selected = Vec::new();
    let mut pending: Vec<Cube> = grid.maximal_cubes();
    while let Some(top) = pending.pop() {
        selected.push(top);
        let threshold = ratio * avg(&top);
        let mut explore: Vec<Cube> = if top.side > finest * 1.5 { top.children().to_vec() } else { Vec::new() };
        while let Some(c) = explore.pop() {
            if avg(&c) > threshold {
                pending.push(c);
            } else if c.side > finest * 1.5 {
                explore.extend(c.children());
            }
        }
    }
    verify_or_build_exceptional(grid, &selected, 1.0 - 1.0 / ratio).map_err(|e| {
        Error::Invariant(format!("stopping family failed its own sparsity certificate: {e}"))
    })
}

fn check_inputs(s: &SparseFamily, b: &SampledFunction, f: &SampledFunction) -> Result<()> {
    s.grid.lattice.check_same(&b.lattice)?;
    s.grid.lattice.check_same(&f.lattice)
}

/// `T^m_{S,b} f = Σ_Q (⨍_Q |b - b_Q|^m f) 1_Q`; `m = 0` gives the plain sparse operator.
pub fn apply_sparse(s: &SparseFamily, b: &SampledFunction, m: u32, f: &SampledFunction) -> Result<SampledFunction> {
    check_inputs(s, b, f)?;
    let ranges = s.ranges();
    let coeffs: Vec<f64> = ranges
        .par_iter()
        .map(|r| {
            let bs = &b.values[r.clone()];
            let bq = mean(bs);
            let fs = &f.values[r.clone()];
            bs.iter().zip(fs).map(|(bv, fv)| (bv - bq).abs().powi(m as i32) * fv).sum::<f64>() / r.len() as f64
        })
        .collect();
    let mut out = SampledFunction::zeros(f.lattice);
    for (r, c) in ranges.iter().zip(coeffs) {
        for v in &mut out.values[r.clone()] {
            *v += c;
        }
    }
    Ok(out)
}

/// `(T^m_{S,b})^* f = Σ_Q |b - b_Q|^m (⨍_Q f) 1_Q`.
pub fn apply_sparse_adjoint(s: &SparseFamily, b: &SampledFunction, m: u32, f: &SampledFunction) -> Result<SampledFunction> {
    check_inputs(s, b, f)?;
    let ranges = s.ranges();
    let stats: Vec<(f64, f64)> = ranges
        .par_iter()
        .map(|r| (mean(&b.values[r.clone()]), mean(&f.values[r.clone()])))
        .collect();
    let mut out = SampledFunction::zeros(f.lattice);
    for (r, (bq, fq)) in ranges.iter().zip(stats) {
        for i in r.clone() {
            out.values[i] += (b.values[i] - bq).abs().powi(m as i32) * fq;
        }
    }
    Ok(out)
}

/// `|∫(Tf)g - ∫f(T*g)| / (1 + |∫(Tf)g|)`.
pub fn duality_residual(
    s: &SparseFamily,
    b: &SampledFunction,
    m: u32,
    f: &SampledFunction,
    g: &SampledFunction,
) -> Result<f64> {
    let lhs = apply_sparse(s, b, m, f)?.inner(g)?;
    let rhs = f.inner(&apply_sparse_adjoint(s, b, m, g)?)?;
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
}

/// Both sides of the pointwise bound
/// `Σ_k |b(x)-b_Q|^{m-k} ⨍_Q |b-b_Q|^k f <= (m+1)(|b(x)-b_Q|^m ⨍_Q f + ⨍_Q |b-b_Q|^m f)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointwiseBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates [`PointwiseBound`] at the sample containing `x`.
pub fn pointwise_bound_check(
    b: &SampledFunction,
    m: u32,
    q: &Cube,
    f: &SampledFunction,
    x: f64,
) -> Result<PointwiseBound> {
    b.lattice.check_same(&f.lattice)?;
    if !q.contains(x) {
        return Err(Error::Domain(format!("point {x} is not in {q}")));
    }
    let r = b.lattice.index_range(q)?;
    let fs = &f.values[r.clone()];
    if let Some(v) = fs.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("pointwise bound needs f >= 0, found {v}")));
    }
    let bs = &b.values[r.clone()];
    let bq = mean(bs);
    let dx = (b.values[b.lattice.locate(x)?] - bq).abs();
    let n = bs.len() as f64;
    let moment = |k: i32| bs.iter().zip(fs).map(|(bv, fv)| (bv - bq).abs().powi(k) * fv).sum::<f64>() / n;
    let mi = m as i32;
    let lhs: f64 = (0..=mi).map(|k| dx.powi(mi - k) * moment(k)).sum();
    let rhs = (m as f64 + 1.0) * (dx.powi(mi) * moment(0) + moment(mi));
    Ok(PointwiseBound { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) })
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
    fn singleton_and_full_grid() {
        let (_, g) = setup(4);
        let top = Cube::new(0.0, 1.0).unwrap();
        let s = verify_or_build_exceptional(&g, &[top], 0.9).unwrap();
        assert_eq!(s.cubes[0].exceptional, vec![(0, 16)]);
        assert_eq!(s.cubes[0].ratio, 1.0);
        match verify_or_build_exceptional(&g, &g.cubes(), 0.5) {
            Err(Error::NotSparse { cube, ratio, .. }) => {
                assert_eq!(ratio, 0.0);
                assert!(cube.side > 1.0 / 16.0);
            }
            other => panic!("expected NotSparse, got {other:?}"),
        }
    }

    #[test]
    fn every_other_generation() {
        let (_, g) = setup(6);
        // all cubes of levels 0, -2, -4, -6: the four grandchildren cover each parent
        let full: Vec<Cube> = (0..=6).step_by(2).flat_map(|k| g.level(-k)).collect();
        assert!(matches!(
            verify_or_build_exceptional(&g, &full, 0.5),
            Err(Error::NotSparse { ratio, .. }) if ratio == 0.0
        ));
        // two of the four grandchildren per selected cube leave exactly half
        let mut cubes = vec![Cube { a: 0.0, side: 1.0 }];
        let mut frontier = cubes.clone();
        while frontier[0].side > 1.0 / 64.0 {
            let next: Vec<Cube> = frontier
                .iter()
                .flat_map(|q| q.children().map(|c| c.children()[0]))
                .collect();
            cubes.extend(&next);
            frontier = next;
        }
        let s = verify_or_build_exceptional(&g, &cubes, 0.5).unwrap();
        for c in &s.cubes {
            let expect = if c.cube.side == 1.0 / 64.0 { 1.0 } else { 0.5 };
            assert_eq!(c.ratio, expect);
        }
    }

    #[test]
    fn stopping_examples() {
        let (lat, g) = setup(6);
        let s = build_sparse_stopping(&SampledFunction::constant(lat, 1.0), &g, 2.0).unwrap();
        assert_eq!(s.cube_list(), vec![Cube { a: 0.0, side: 1.0 }]);
        let spike = Generator::Indicator(0.0, 1.0 / 64.0).sample(lat);
        let s = build_sparse_stopping(&spike, &g, 2.0).unwrap();
        // averages double per level, so the strict threshold selects every other level
        let sides: Vec<f64> = s.cube_list().iter().map(|q| q.side).collect();
        assert_eq!(sides, vec![1.0, 0.25, 1.0 / 16.0, 1.0 / 64.0]);
        assert!(s.min_ratio() >= 0.5);
    }

    #[test]
    fn sparse_operator_examples() {
        let (lat, g) = setup(8);
        let s = verify_or_build_exceptional(&g, &[Cube { a: 0.0, side: 1.0 }], 0.5).unwrap();
        let x = Generator::Identity.sample(lat);
        let one = SampledFunction::constant(lat, 1.0);
        let t = apply_sparse(&s, &x, 1, &one).unwrap();
        assert!(t.values.iter().all(|v| (v - 0.25).abs() < 1e-12));
        let ts = apply_sparse_adjoint(&s, &x, 1, &one).unwrap();
        for (i, v) in ts.values.iter().enumerate() {
            assert!((v - (lat.midpoint(i) - 0.5).abs()).abs() < 1e-12);
        }
        let c = SampledFunction::constant(lat, 4.0);
        assert!(apply_sparse(&s, &c, 2, &one).unwrap().values.iter().all(|v| *v == 0.0));
        let f = Generator::Sin(5.0).sample(lat);
        assert_eq!(apply_sparse(&s, &x, 0, &f).unwrap(), apply_sparse_adjoint(&s, &x, 0, &f).unwrap());
    }

    #[test]
    fn pointwise_bound_example() {
        let (lat, _) = setup(12);
        let x = Generator::Identity.sample(lat);
        let one = SampledFunction::constant(lat, 1.0);
        let q = Cube { a: 0.0, side: 1.0 };
        let c = pointwise_bound_check(&x, 1, &q, &one, 0.0).unwrap();
        assert_relative_eq!(c.lhs, 0.75, epsilon = 1e-3);
        assert_relative_eq!(c.rhs, 1.5, epsilon = 1e-3);
        assert!(c.holds);
    }
}
