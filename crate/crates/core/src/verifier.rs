//! Symbol-level simulation and exhaustive verification.
//!
//! Every scheme is checked three ways per active user: its own decoder, the
//! scheme-agnostic [`generic_linear_decode`], and a library-independent rank test
//! on the coefficient rows alone. All three must agree with the library.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinat::demand_rank;
use crate::error::{Error, Result};
use crate::field::{EvaluatedSpan, FieldMatrix};
use crate::model::{
    enumerate_scenarios, generate_library, random_scenario, scenario_count, CachePlan, DemandScenario, FileLibrary,
    LinearPacket, RealizedPacket, SystemParams, Transmission,
};
use crate::rational::{zero, Rational};
use crate::schemes::Scheme;

pub const DEFAULT_SCENARIO_CAP: u128 = 1_000_000;

fn check_width(params: &SystemParams, packets: &[RealizedPacket]) -> Result<()> {
    match packets.iter().find(|p| p.coeffs.cols() != params.dim() || p.values.len() != p.coeffs.rows()) {
        Some(p) => Err(Error::DimensionMismatch(format!(
            "packet {} has {} columns and {} values, expected {} columns",
            p.label,
            p.coeffs.cols(),
            p.values.len(),
            params.dim()
        ))),
        None => Ok(()),
    }
}

/// Solves for file `file` from everything a user holds.
///
/// Returns `Ok(None)` when the rows do not pin down every coordinate of the file.
pub fn generic_linear_decode(
    params: &SystemParams,
    cache: &[RealizedPacket],
    received: &[RealizedPacket],
    file: usize,
) -> Result<Option<Vec<u64>>> {
    check_width(params, cache)?;
    check_width(params, received)?;
    if file == 0 || file > params.n {
        return Err(Error::OutOfRange {
            what: "file",
            detail: format!("{file} outside [1, {}]", params.n),
        });
    }
    let rows = cache
        .iter()
        .chain(received)
        .flat_map(|p| p.coeffs.iter_rows().zip(p.values.iter().copied()));
    let span = EvaluatedSpan::new(params.field, params.dim(), rows);
    let off = (file - 1) * params.b;
    Ok((off..off + params.b).map(|j| span.coordinate(j)).collect())
}

/// Library-free test: `rank(A) − rank(A without file columns) = B` for the
/// stacked coefficient rows `A`.
pub fn coefficient_decodable(
    params: &SystemParams,
    cache: &[LinearPacket],
    received: &[LinearPacket],
    file: usize,
) -> bool {
    let f = params.field;
    let mut a = FieldMatrix::zeros(0, params.dim());
    for p in cache.iter().chain(received) {
        for r in p.coeffs.iter_rows() {
            a.push_row(r);
        }
    }
    let off = (file - 1) * params.b;
    let others: Vec<usize> = (0..params.dim()).filter(|j| !(off..off + params.b).contains(j)).collect();
    a.rank(f) - a.select_cols(&others).rank(f) == params.b
}

/// What happened for one active user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserOutcome {
    pub user: usize,
    pub file: usize,
    /// Scheme decoder returned the right file.
    pub fast_ok: bool,
    /// Generic decoder returned the right file.
    pub generic_ok: bool,
    /// Coefficient rank test passed.
    pub rank_ok: bool,
    /// Both decoders returned the same thing (including both failing).
    pub agree: bool,
}

impl UserOutcome {
    pub fn ok(&self) -> bool {
        self.fast_ok && self.generic_ok && self.rank_ok && self.agree
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub transmission: Transmission,
    pub users: Vec<UserOutcome>,
}

/// Placement realized on one library, shared across scenarios.
pub struct Realized {
    pub plan: CachePlan,
    pub library: FileLibrary,
    caches: Vec<Vec<RealizedPacket>>,
}

impl Realized {
    pub fn new(scheme: &dyn Scheme, library: FileLibrary) -> Self {
        let p = scheme.params();
        let plan = scheme.place();
        let caches = (1..=plan.users())
            .map(|k| plan.cache(k).iter().map(|x| x.realize(p, &library)).collect())
            .collect();
        Self { plan, library, caches }
    }

    pub fn cache(&self, k: usize) -> &[RealizedPacket] {
        &self.caches[k - 1]
    }
}

/// Delivery plus all decoders for every active user of `scenario`.
pub fn simulate(scheme: &dyn Scheme, realized: &Realized, scenario: &DemandScenario) -> Result<Simulation> {
    let p = scheme.params();
    let transmission = scheme.deliver(scenario);
    let received: Vec<RealizedPacket> = transmission.packets.iter().map(|x| x.realize(p, &realized.library)).collect();
    let mut users = Vec::with_capacity(scenario.active().len());
    for (u, d) in scenario.pairs() {
        let want = realized.library.file(d);
        let cache = realized.cache(u);
        let fast = scheme.decode(u, scenario, cache, &received);
        let generic = generic_linear_decode(p, cache, &received, d)?;
        let rank_ok = coefficient_decodable(p, realized.plan.cache(u), &transmission.packets, d);
        users.push(UserOutcome {
            user: u,
            file: d,
            fast_ok: fast.as_deref() == Some(want),
            generic_ok: generic.as_deref() == Some(want),
            rank_ok,
            agree: fast == generic,
        });
    }
    Ok(Simulation { transmission, users })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeFailure {
    pub scenario: DemandScenario,
    pub user: usize,
    pub fast_ok: bool,
    pub generic_ok: bool,
    pub rank_ok: bool,
    /// Scheme and generic decoders returned the same output.
    pub agree: bool,
}

impl DecodeFailure {
    /// All three checks reached the same verdict.
    pub fn oracles_agree(&self) -> bool {
        self.agree && self.fast_ok == self.generic_ok && self.generic_ok == self.rank_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub scheme: String,
    pub k: usize,
    pub kp: usize,
    pub n: usize,
    pub b: usize,
    pub q: u64,
    pub t: Option<usize>,
    pub seed: u64,
    pub scenarios_checked: usize,
    pub decode_failures: Vec<DecodeFailure>,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub worst_load: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub formula_load: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub memory: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub measured_memory: Rational,
    /// Some scenario with `r′` distinct demands reaches the formula load.
    pub formula_attained_at_full_rank: bool,
    #[serde(rename = "match")]
    pub matches: bool,
}

/// Every scenario, decoded by every active user.
pub fn exhaustive_report(scheme: &dyn Scheme, seed: u64, cap: u128) -> Result<VerificationReport> {
    let p = *scheme.params();
    let count = scenario_count(&p);
    if count > cap {
        return Err(Error::ScenarioCapExceeded { count, cap });
    }
    let realized = Realized::new(scheme, generate_library(&p, seed));
    let scenarios = enumerate_scenarios(&p);
    let results: Vec<(DemandScenario, Simulation)> = scenarios
        .into_par_iter()
        .map(|s| simulate(scheme, &realized, &s).map(|sim| (s, sim)))
        .collect::<Result<_>>()?;

    let desc = scheme.descriptor();
    let mut worst = zero();
    let mut attained = false;
    let mut failures = Vec::new();
    for (s, sim) in &results {
        let load = &sim.transmission.load;
        if *load > worst {
            worst = load.clone();
        }
        if *load == desc.load && demand_rank(s.demands()) == p.r_prime {
            attained = true;
        }
        for o in sim.users.iter().filter(|o| !o.ok()) {
            failures.push(DecodeFailure {
                scenario: s.clone(),
                user: o.user,
                fast_ok: o.fast_ok,
                generic_ok: o.generic_ok,
                rank_ok: o.rank_ok,
                agree: o.agree,
            });
        }
    }
    let matches = failures.is_empty() && worst == desc.load;
    Ok(VerificationReport {
        scheme: desc.name().to_string(),
        k: p.k,
        kp: p.kp,
        n: p.n,
        b: p.b,
        q: p.q(),
        t: desc.t,
        seed,
        scenarios_checked: results.len(),
        decode_failures: failures,
        worst_load: worst,
        formula_load: desc.load.clone(),
        memory: desc.memory.clone(),
        measured_memory: realized.plan.measured_memory(),
        formula_attained_at_full_rank: attained,
        matches,
    })
}

/// Random scenarios only; never claims a match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampledReport {
    pub scheme: String,
    pub k: usize,
    pub kp: usize,
    pub n: usize,
    pub t: Option<usize>,
    pub seed: u64,
    pub sampled: bool,
    pub scenarios_checked: usize,
    pub decode_failures: Vec<DecodeFailure>,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub worst_load_observed: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub formula_load: Rational,
}

pub fn sampled_report(scheme: &dyn Scheme, seed: u64, samples: usize) -> Result<SampledReport> {
    let p = *scheme.params();
    let realized = Realized::new(scheme, generate_library(&p, seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let scenarios: Vec<DemandScenario> = (0..samples).map(|_| random_scenario(&p, &mut rng)).collect();
    let results: Vec<(DemandScenario, Simulation)> = scenarios
        .into_par_iter()
        .map(|s| simulate(scheme, &realized, &s).map(|sim| (s, sim)))
        .collect::<Result<_>>()?;
    let mut worst = zero();
    let mut failures = Vec::new();
    for (s, sim) in &results {
        if sim.transmission.load > worst {
            worst = sim.transmission.load.clone();
        }
        for o in sim.users.iter().filter(|o| !o.ok()) {
            failures.push(DecodeFailure {
                scenario: s.clone(),
                user: o.user,
                fast_ok: o.fast_ok,
                generic_ok: o.generic_ok,
                rank_ok: o.rank_ok,
                agree: o.agree,
            });
        }
    }
    let desc = scheme.descriptor();
    Ok(SampledReport {
        scheme: desc.name().to_string(),
        k: p.k,
        kp: p.kp,
        n: p.n,
        t: desc.t,
        seed,
        sampled: true,
        scenarios_checked: results.len(),
        decode_failures: failures,
        worst_load_observed: worst,
        formula_load: desc.load.clone(),
    })
}
