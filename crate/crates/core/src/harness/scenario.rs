//! Scenario files: the weights, symbol, gauges, grid and checks of one harness run.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bumps::{Gauges, SeparatedPreset};
use crate::error::{Error, Result};
use crate::grid::{shifted_grids, Cube, DyadicGrid, FunctionSource, Generator, Lattice, SampledFunction, Weight};
use crate::operators::BatterySpec;
use crate::young::YoungFunction;

pub const SCHEMA_VERSION: u32 = 1;

/// How the bump gauges are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[derive(Default)]
pub enum GaugeSelection {
    /// `A = C = t^p`, `B = D = t^{p'}`.
    #[default]
    Unbumped,
    Explicit {
        a: YoungFunction,
        b: YoungFunction,
        c: YoungFunction,
        d: YoungFunction,
    },
    /// A separated log-bump preset such as `cor1.6(1,0.5,5)`; `a`, `d` override the free gauges.
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<YoungFunction>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<YoungFunction>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Truncated domain `[x0, x1)`.
    pub domain: [f64; 2],
    pub depth: u32,
    #[serde(default = "one")]
    pub shifts: usize,
}

fn one() -> usize {
    1
}

/// A sparse family used by the sparse operators and hard checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SparseSpec {
    /// Stopping-time family of `function` (default `σ = v^{-p'/p}`) with the given ratio.
    Stopping {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        function: Option<FunctionSource>,
        #[serde(default = "four")]
        ratio: f64,
    },
    /// Explicit cube list `[a, side]` on the unshifted grid.
    Cubes { cubes: Vec<[f64; 2]>, delta: f64 },
    /// A family saved as JSON.
    File { path: String },
}

fn four() -> f64 {
    4.0
}

/// Operator handles: `identity`, `hilbert`, `commutator(m)`, `sparse(m, id)`, `sparse_adjoint(m, id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorHandle {
    Identity,
    Hilbert,
    Commutator(u32),
    Sparse { m: u32, family: usize },
    SparseAdjoint { m: u32, family: usize },
}

impl OperatorHandle {
    pub fn parse(text: &str) -> Result<Self> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let (name, args) = match t.find('(') {
            None => (t.as_str(), Vec::new()),
            Some(i) => {
                if !t.ends_with(')') {
                    return Err(Error::Parse(format!("unbalanced parentheses in operator `{text}`")));
                }
                let args = t[i + 1..t.len() - 1]
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<u32>().map_err(|e| Error::Parse(format!("bad operator argument `{s}`: {e}"))))
                    .collect::<Result<Vec<u32>>>()?;
                (&t[..i], args)
            }
        };
        Ok(match (name, args.as_slice()) {
            ("identity", []) => OperatorHandle::Identity,
            ("hilbert", []) => OperatorHandle::Hilbert,
            ("commutator", [m]) if *m >= 1 => OperatorHandle::Commutator(*m),
            ("sparse", [m, id]) => OperatorHandle::Sparse { m: *m, family: *id as usize },
            ("sparse_adjoint", [m, id]) => OperatorHandle::SparseAdjoint { m: *m, family: *id as usize },
            _ => return Err(Error::Parse(format!("unknown operator `{text}`"))),
        })
    }
}

impl fmt::Display for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorHandle::Identity => write!(f, "identity"),
            OperatorHandle::Hilbert => write!(f, "hilbert"),
            OperatorHandle::Commutator(m) => write!(f, "commutator({m})"),
            OperatorHandle::Sparse { m, family } => write!(f, "sparse({m},{family})"),
            OperatorHandle::SparseAdjoint { m, family } => write!(f, "sparse_adjoint({m},{family})"),
        }
    }
}

/// Tolerances of the hard checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub sparse_duality: f64,
    pub sparse_necessity: f64,
    pub necessity_identity: f64,
    pub unbumped: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { sparse_duality: 1e-10, sparse_necessity: 1e-8, necessity_identity: 1e-3, unbumped: 1e-8 }
    }
}

/// Optional extra measurements, all informational.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Extras {
    /// Root exponents `a` for the `b^a ∈ BMO` comparison.
    pub root_bmo: Vec<f64>,
    /// One-weight chain, reverse Hölder exponent and BMO seminorm (needs `u = v`).
    pub one_weight: bool,
    /// Cap for the reverse Hölder search.
    pub reverse_holder_cap: Option<f64>,
}

/// Battery options; the seed comes from the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryOptions {
    pub random_steps: usize,
    pub oscillations: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        let d = BatterySpec::default();
        BatteryOptions { random_steps: d.random_steps, oscillations: d.oscillations }
    }
}

fn default_operator() -> String {
    "hilbert".into()
}

fn default_checks() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub p: f64,
    pub m: u32,
    pub symbol: FunctionSource,
    pub u: FunctionSource,
    pub v: FunctionSource,
    /// Weights are clamped below by this value; without it nonpositive samples are an error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_floor: Option<f64>,
    #[serde(default)]
    pub gauges: GaugeSelection,
    pub grid: GridSpec,
    #[serde(default = "default_operator")]
    pub operator: String,
    #[serde(default)]
    pub battery: BatteryOptions,
    #[serde(default)]
    pub sparse: Vec<SparseSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub extras: Extras,
    /// Random instances per hard check (sparse duality, pointwise bound).
    #[serde(default = "default_checks")]
    pub random_checks: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Sampled inputs of a validated scenario.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub lattice: Lattice,
    pub grids: Vec<DyadicGrid>,
    pub b: SampledFunction,
    pub u: Weight,
    pub v: Weight,
    pub sigma: Weight,
    pub operator: OperatorHandle,
    pub separated: Option<SeparatedPreset>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Scenario::from_json(&text)?, base))
    }

    /// Lists every problem with the scenario's parameters (not its sampled inputs).
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            out.push(format!("p must lie in (1, inf), got {}", self.p));
        }
        if self.m < 1 {
            out.push("m must be at least 1".into());
        }
        if self.grid.depth < 4 {
            out.push(format!("grid depth must be at least 4, got {}", self.grid.depth));
        }
        if self.grid.depth > 20 {
            out.push(format!("grid depth {} exceeds the supported maximum 20", self.grid.depth));
        }
        if self.grid.shifts != 1 && self.grid.shifts != 3 {
            out.push(format!("grid shifts must be 1 or 3, got {}", self.grid.shifts));
        }
        let [x0, x1] = self.grid.domain;
        if !(x0.is_finite() && x1.is_finite() && x0 < x1) {
            out.push(format!("grid domain [{x0}, {x1}) is empty or not finite"));
        }
        if let Some(fl) = self.weight_floor {
            if !(fl > 0.0 && fl.is_finite()) {
                out.push(format!("weight_floor must be positive, got {fl}"));
            }
        }
        for (name, src) in [("symbol", &self.symbol), ("u", &self.u), ("v", &self.v)] {
            if let FunctionSource::Generator(g) = src {
                if let Err(e) = Generator::parse(g) {
                    out.push(format!("{name}: {e}"));
                }
            }
        }
        match &self.gauges {
            GaugeSelection::Unbumped => {}
            GaugeSelection::Explicit { a, b, c, d } => {
                for (n, g) in [("A", a), ("B", b), ("C", c), ("D", d)] {
                    if let Err(e) = g.validate() {
                        out.push(format!("gauge {n}: {e}"));
                    }
                }
            }
            GaugeSelection::Preset { preset, a, d } => {
                match SeparatedPreset::parse(preset) {
                    Ok(pr) if pr.m() != self.m => {
                        out.push(format!("preset order {} differs from scenario m = {}", pr.m(), self.m))
                    }
                    Ok(_) => {}
                    Err(e) => out.push(format!("preset: {e}")),
                }
                for (n, g) in [("A", a), ("D", d)] {
                    if let Some(Err(e)) = g.as_ref().map(YoungFunction::validate) {
                        out.push(format!("gauge {n}: {e}"));
                    }
                }
            }
        }
        match OperatorHandle::parse(&self.operator) {
            Ok(OperatorHandle::Sparse { family, .. } | OperatorHandle::SparseAdjoint { family, .. }) => {
                let n = self.sparse.len().max(1);
                if family >= n {
                    out.push(format!("operator refers to sparse family {family}, only {n} defined"));
                }
            }
            Ok(_) => {}
            Err(e) => out.push(e.to_string()),
        }
        for (i, s) in self.sparse.iter().enumerate() {
            match s {
                SparseSpec::Stopping { ratio, .. } if !(*ratio > 1.0) => {
                    out.push(format!("sparse family {i}: stopping ratio must exceed 1, got {ratio}"))
                }
                SparseSpec::Cubes { delta, .. } if !(*delta > 0.0 && *delta < 1.0) => {
                    out.push(format!("sparse family {i}: delta must lie in (0, 1), got {delta}"))
                }
                _ => {}
            }
        }
        let t = &self.tolerances;
        for (n, v) in [
            ("sparse_duality", t.sparse_duality),
            ("sparse_necessity", t.sparse_necessity),
            ("necessity_identity", t.necessity_identity),
            ("unbumped", t.unbumped),
        ] {
            if !(v > 0.0) {
                out.push(format!("tolerance {n} must be positive, got {v}"));
            }
        }
        for a in &self.extras.root_bmo {
            if !(*a >= 1.0) {
                out.push(format!("root_bmo exponent must be >= 1, got {a}"));
            }
        }
        if self.extras.one_weight && self.u != self.v {
            out.push("extras.one_weight needs u = v".into());
        }
        if let Some(c) = self.extras.reverse_holder_cap {
            if !(c > 1.0) {
                out.push(format!("reverse_holder_cap must exceed 1, got {c}"));
            }
        }
        out
    }

    fn weight(&self, name: &str, src: &FunctionSource, lat: Lattice, base: Option<&Path>, problems: &mut Vec<String>) -> Option<Weight> {
        let f = match src.resolve(lat, base) {
            Ok(f) => f,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                return None;
            }
        };
        let f = match self.weight_floor {
            Some(fl) => f.map(|x| if x.is_nan() { x } else { x.max(fl) }),
            None => f,
        };
        match Weight::new(f) {
            Ok(w) => Some(w),
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                None
            }
        }
    }

    /// Validates and samples the scenario; all problems are reported together.
    pub fn resolve(&self, base: Option<&Path>) -> Result<Resolved> {
        let mut problems = self.problems();
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let [x0, x1] = self.grid.domain;
        let lattice = Lattice::with_depth(x0, x1, self.grid.depth)?;
        let grids = shifted_grids(lattice, self.grid.shifts)?;
        let b = match self.symbol.resolve(lattice, base) {
            Ok(b) if b.values.iter().all(|v| v.is_finite()) => Some(b),
            Ok(_) => {
                problems.push("symbol: non-finite sample".into());
                None
            }
            Err(e) => {
                problems.push(format!("symbol: {e}"));
                None
            }
        };
        let u = self.weight("u", &self.u, lattice, base, &mut problems);
        let v = self.weight("v", &self.v, lattice, base, &mut problems);
        let (Some(b), Some(u), Some(v)) = (b, u, v) else {
            return Err(Error::Validation(problems));
        };
        let sigma = v.sigma(self.p)?;
        let separated = match &self.gauges {
            GaugeSelection::Preset { preset, .. } => Some(SeparatedPreset::parse(preset)?),
            _ => None,
        };
        Ok(Resolved {
            lattice,
            grids,
            b,
            u,
            v,
            sigma,
            operator: OperatorHandle::parse(&self.operator)?,
            separated,
        })
    }

    /// Gauges of the full condition (`Unbumped` and `Explicit` only).
    pub fn explicit_gauges(&self) -> Result<Option<Gauges>> {
        Ok(match &self.gauges {
            GaugeSelection::Unbumped => Some(Gauges::unbumped(self.p)?),
            GaugeSelection::Explicit { a, b, c, d } => Some(Gauges { a: a.clone(), b: b.clone(), c: c.clone(), d: d.clone() }),
            GaugeSelection::Preset { .. } => None,
        })
    }

    pub fn battery_spec(&self) -> BatterySpec {
        BatterySpec { random_steps: self.battery.random_steps, seed: self.seed, oscillations: self.battery.oscillations }
    }

    /// Same scenario at another depth.
    pub fn with_depth(&self, depth: u32) -> Scenario {
        let mut s = self.clone();
        s.grid.depth = depth;
        s
    }
}

/// Cube from a `[a, side]` pair.
pub(crate) fn cube_of(pair: [f64; 2]) -> Result<Cube> {
    Cube::new(pair[0], pair[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Scenario {
        Scenario::from_json(
            r#"{"schema_version":1,"name":"t","p":2,"m":1,"symbol":"identity()","u":"constant(1)","v":"constant(1)",
                "grid":{"domain":[0,1],"depth":6}}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_handles() {
        let s = base();
        assert_eq!(s.gauges, GaugeSelection::Unbumped);
        assert_eq!(s.operator, "hilbert");
        assert!(s.problems().is_empty());
        assert_eq!(OperatorHandle::parse("sparse_adjoint(2, 1)").unwrap(), OperatorHandle::SparseAdjoint { m: 2, family: 1 });
        assert_eq!(OperatorHandle::parse("commutator(3)").unwrap().to_string(), "commutator(3)");
        assert!(OperatorHandle::parse("riesz").is_err());
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut s = base();
        s.p = 1.0;
        s.grid.depth = 3;
        s.operator = "sparse(1,4)".into();
        let probs = s.problems();
        assert_eq!(probs.len(), 3, "{probs:?}");
        match s.resolve(None) {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weight_floor() {
        let mut s = base();
        s.u = FunctionSource::Generator("indicator(0,0.5)".into());
        assert!(matches!(s.resolve(None), Err(Error::Validation(_))));
        s.weight_floor = Some(1e-6);
        let r = s.resolve(None).unwrap();
        assert_eq!(r.u.values()[63], 1e-6);
    }
}
