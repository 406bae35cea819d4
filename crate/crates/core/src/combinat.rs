//! Subset enumeration in lexicographic order, binomials, demand rank, and the
//! small combinatorial helpers used by delivery (demand fill-in and leaders).

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::model::DemandScenario;

/// Binomial coefficient `C(a, b)`; zero unless `a >= b >= 0`.
pub fn binom(a: i64, b: i64) -> u64 {
    if b < 0 || a < b {
        return 0;
    }
    let b = b.min(a - b) as u64;
    let a = a as u64;
    let mut acc: u128 = 1;
    for i in 0..b {
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial overflows u64")
}

/// Convenience for the common unsigned case.
pub fn binom_u(a: usize, b: usize) -> u64 {
    binom(a as i64, b as i64)
}

/// All `t`-subsets of a ground set, in lexicographic order, with index lookup.
#[derive(Debug, Clone)]
pub struct SubsetFamily {
    ground: Vec<usize>,
    t: usize,
    members: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl SubsetFamily {
    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// The `i`-th subset (0-based).
    pub fn member(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    /// Position of a sorted subset, if it belongs to the family.
    pub fn index_of(&self, subset: &[usize]) -> Option<usize> {
        self.index.get(subset).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.members.iter().map(Vec::as_slice)
    }
}

/// Enumerates `t`-subsets of `ground` lexicographically.
///
/// The ground set is sorted and deduplicated first.
pub fn subsets_lex(ground: &[usize], t: usize) -> Result<SubsetFamily> {
    let ground: Vec<usize> = ground.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if t > ground.len() {
        return Err(Error::OutOfRange {
            what: "subset size",
            detail: format!("t={t} exceeds ground size {}", ground.len()),
        });
    }
    let mut members = Vec::with_capacity(binom_u(ground.len(), t) as usize);
    let mut pos: Vec<usize> = (0..t).collect();
    let n = ground.len();
    loop {
        members.push(pos.iter().map(|&p| ground[p]).collect::<Vec<_>>());
        // advance to the next combination of positions
        let Some(i) = (0..t).rev().find(|&i| pos[i] < n - t + i) else {
            break;
        };
        pos[i] += 1;
        for j in i + 1..t {
            pos[j] = pos[j - 1] + 1;
        }
    }
    let index = members
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect();
    Ok(SubsetFamily {
        ground,
        t,
        members,
        index,
    })
}

/// `[1, n]` as a vector.
pub fn range1(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

/// Number of distinct values in a demand vector.
pub fn demand_rank(d: &[usize]) -> usize {
    d.iter().collect::<BTreeSet<_>>().len()
}

/// Extends the active users' demands to all `k` users: every offline user takes
/// the demand of the smallest-index active user.
pub fn fill_demands(scenario: &DemandScenario, k: usize) -> Vec<usize> {
    let fallback = scenario.demands()[0];
    let mut full = vec![fallback; k];
    for (&u, &d) in scenario.active().iter().zip(scenario.demands()) {
        full[u - 1] = d;
    }
    full
}

/// One representative per distinct demanded file: the smallest user index
/// requesting it. Returned sorted.
pub fn leaders(users: &[usize], demands: &[usize]) -> Vec<usize> {
    let mut first: HashMap<usize, usize> = HashMap::new();
    for (&u, &d) in users.iter().zip(demands) {
        first
            .entry(d)
            .and_modify(|v| *v = (*v).min(u))
            .or_insert(u);
    }
    let mut out: Vec<usize> = first.into_values().collect();
    out.sort_unstable();
    out
}

/// Leader set of a hotplug scenario.
pub fn scenario_leaders(scenario: &DemandScenario) -> Vec<usize> {
    leaders(scenario.active(), scenario.demands())
}

/// Sorted set difference `s \ {x}`.
pub fn without(s: &[usize], x: usize) -> Vec<usize> {
    s.iter().copied().filter(|&y| y != x).collect()
}
