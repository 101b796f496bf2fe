//! The curated scenario suite shipped with the toolkit.

use serde::{Deserialize, Serialize};

use super::report::{now_stamp, sha256_hex, VerdictReport};
use super::run::run_scenario;
use super::scenario::Scenario;
use crate::bumps::{necessity_constants, one_weight_chain_check, reverse_holder_exponent, NecessityConstants, OneWeightChain, ReverseHolderReport};
use crate::error::Result;
use crate::grid::{shifted_grids, DyadicGrid, Generator, Lattice, Weight};
use crate::oscillation::{bmo_seminorm, root_bmo_check, RootBmoReport};

/// `(file name, contents)` of every shipped scenario.
pub const SHIPPED_SCENARIOS: [(&str, &str); 7] = [
    ("one_weight_sanity.json", include_str!("../../scenarios/one_weight_sanity.json")),
    ("constant_symbol.json", include_str!("../../scenarios/constant_symbol.json")),
    ("bloom_style.json", include_str!("../../scenarios/bloom_style.json")),
    ("exp_class.json", include_str!("../../scenarios/exp_class.json")),
    ("loglog_even.json", include_str!("../../scenarios/loglog_even.json")),
    ("one_weight_ap.json", include_str!("../../scenarios/one_weight_ap.json")),
    ("explicit_gauges.json", include_str!("../../scenarios/explicit_gauges.json")),
];

pub fn shipped_scenarios() -> Result<Vec<Scenario>> {
    SHIPPED_SCENARIOS.iter().map(|(_, text)| Scenario::from_json(text)).collect()
}

/// One-weight characterization on an `A_p` power weight with a logarithmic symbol:
/// the necessity constants of each admissible order next to the BMO seminorm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneWeightSummary {
    pub weight: String,
    pub symbol: String,
    pub p: f64,
    pub chain: OneWeightChain,
    pub reverse_holder: ReverseHolderReport,
    pub bmo: f64,
    /// `(m, constants)` for `m = 1, 2`.
    pub necessity: Vec<(u32, NecessityConstants)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub reports: Vec<VerdictReport>,
    pub root_bmo: Vec<RootBmoReport>,
    pub one_weight: OneWeightSummary,
    pub all_hard_pass: bool,
    pub timestamp: String,
    /// Hash of everything except timestamps.
    pub fingerprint: String,
}

impl SuiteReport {
    pub fn compute_fingerprint(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timestamp.clear();
        copy.fingerprint.clear();
        for r in &mut copy.reports {
            r.timestamp.clear();
        }
        Ok(sha256_hex(serde_json::to_string(&copy)?.as_bytes()))
    }
}

fn one_weight_summary() -> Result<OneWeightSummary> {
    let lat = Lattice::with_depth(-1.0, 1.0, 12)?;
    let grids: Vec<DyadicGrid> = shifted_grids(lat, 3)?;
    let w = Weight::new(Generator::PowerWeight(0.5).sample(lat))?;
    let b = Generator::LogSymbol.sample(lat);
    let p = 2.0;
    let necessity = [1u32, 2]
        .iter()
        .map(|&m| Ok((m, necessity_constants(&b, m, &w, &w, p, &grids)?)))
        .collect::<Result<_>>()?;
    Ok(OneWeightSummary {
        weight: "power_weight(0.5)".into(),
        symbol: "log_symbol()".into(),
        p,
        chain: one_weight_chain_check(&w, p, &grids)?,
        reverse_holder: reverse_holder_exponent(&w, &grids, 2.0)?,
        bmo: bmo_seminorm(&b, &grids)?.seminorm,
        necessity,
    })
}

/// Root-BMO comparison for `b = |log x|^{1/a}` on `[0, 1)`.
pub fn root_bmo_case(a: f64, depth: u32) -> Result<RootBmoReport> {
    let lat = Lattice::with_depth(0.0, 1.0, depth)?;
    root_bmo_check(&Generator::RootLogSymbol(a).sample(lat), a, &DyadicGrid::standard(lat)?)
}

/// Runs every shipped scenario with the given seed plus the root-BMO and one-weight cases.
pub fn corollary_suite(seed: u64) -> Result<SuiteReport> {
    let mut reports = Vec::new();
    for mut s in shipped_scenarios()? {
        s.seed = seed;
        reports.push(run_scenario(&s, None)?);
    }
    let root_bmo = [2.0, 3.0].iter().map(|&a| root_bmo_case(a, 12)).collect::<Result<Vec<_>>>()?;
    let one_weight = one_weight_summary()?;
    let all_hard_pass = reports.iter().all(|r| r.passed);
    let mut rep = SuiteReport {
        seed,
        reports,
        root_bmo,
        one_weight,
        all_hard_pass,
        timestamp: now_stamp(),
        fingerprint: String::new(),
    };
    rep.fingerprint = rep.compute_fingerprint()?;
    Ok(rep)
}
