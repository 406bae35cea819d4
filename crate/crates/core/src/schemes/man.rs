//! Classical MAN placement with YMA delivery, and the hotplug baseline that runs
//! it over all `K` users after filling in the offline users' demands.

use crate::combinat::{fill_demands, leaders, range1, subsets_lex, SubsetFamily};
use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::model::{embed, CachePlan, DemandScenario, LinearPacket, PacketLabel, RealizedPacket, SystemParams, Transmission};
use crate::rational::rat;

use super::{corner, multicast, require_divisible, ManStyleRecovery, Scheme, SchemeDescriptor, SchemeKind};

/// Subfile layout shared by placement, delivery and decoding.
struct Layout {
    subsets: SubsetFamily,
    sub_len: usize,
}

impl Layout {
    fn new(params: &SystemParams, t: usize) -> Result<Self> {
        if t > params.k {
            return Err(Error::OutOfRange {
                what: "t",
                detail: format!("t={t} exceeds K={}", params.k),
            });
        }
        let subsets = subsets_lex(&range1(params.k), t)?;
        require_divisible(params.b, subsets.len(), "C(K,t)")?;
        Ok(Self {
            sub_len: params.b / subsets.len(),
            subsets,
        })
    }

    /// Rows selecting subfile `subset` out of one file.
    fn local(&self, params: &SystemParams, subset: &[usize]) -> FieldMatrix {
        let idx = self.subsets.index_of(subset).expect("subset of [K]");
        let mut m = FieldMatrix::zeros(self.sub_len, params.b);
        for r in 0..self.sub_len {
            m.set(r, idx * self.sub_len + r, 1);
        }
        m
    }

    fn piece(&self, params: &SystemParams, file: usize, subset: &[usize]) -> FieldMatrix {
        embed(params, file, &self.local(params, subset))
    }
}

fn subfile_label(file: usize, subset: &[usize]) -> PacketLabel {
    PacketLabel::Subfile {
        file,
        subset: subset.to_vec(),
    }
}

/// User `k` caches `F_{n,W}` for every file `n` and every `t`-subset `W ∋ k`.
pub fn man_placement(params: &SystemParams, t: usize) -> Result<CachePlan> {
    let layout = Layout::new(params, t)?;
    let caches = (1..=params.k)
        .map(|k| {
            let mut packets = Vec::new();
            for file in 1..=params.n {
                for w in layout.subsets.iter().filter(|w| w.contains(&k)) {
                    packets.push(LinearPacket::new(subfile_label(file, w), layout.piece(params, file, w)));
                }
            }
            packets
        })
        .collect();
    // N·C(K−1,t−1)/C(K,t) = N·t/K
    let memory = rat((params.n * t) as i64, params.k as i64);
    Ok(CachePlan::new(caches, memory, params.b))
}

/// Sends `X_S` for every `(t+1)`-subset `S ⊆ [K]` that contains a leader of the
/// full demand vector.
pub fn yma_delivery(params: &SystemParams, t: usize, full_demand: &[usize]) -> Result<Transmission> {
    if full_demand.len() != params.k {
        return Err(Error::DimensionMismatch(format!(
            "demand vector of length {} for K={}",
            full_demand.len(),
            params.k
        )));
    }
    let layout = Layout::new(params, t)?;
    let users = range1(params.k);
    let lead = leaders(&users, full_demand);
    let mut packets = Vec::new();
    if t < params.k {
        for s in subsets_lex(&users, t + 1)?.iter() {
            if s.iter().any(|u| lead.contains(u)) {
                packets.push(multicast(
                    params,
                    s,
                    |u| full_demand[u - 1],
                    |file, w| layout.piece(params, file, w),
                ));
            }
        }
    }
    Ok(Transmission::new(packets, params.b))
}

fn man_decode(
    params: &SystemParams,
    layout: &Layout,
    full_demand: &[usize],
    user: usize,
    cache: &[RealizedPacket],
    received: &[RealizedPacket],
) -> Option<Vec<u64>> {
    let mut rec = ManStyleRecovery::new(
        params,
        user,
        cache,
        received,
        subfile_label,
        |file, w| layout.piece(params, file, w),
        |u| full_demand[u - 1],
    );
    let mut out = vec![0; params.b];
    for (idx, w) in layout.subsets.iter().enumerate() {
        let vals = rec.recover(w)?;
        out[idx * layout.sub_len..(idx + 1) * layout.sub_len].copy_from_slice(&vals);
    }
    Some(out)
}

/// Classical scheme; only meaningful when every user is active.
pub struct ManScheme {
    params: SystemParams,
    t: usize,
    layout: Layout,
    desc: SchemeDescriptor,
}

impl ManScheme {
    pub fn new(params: SystemParams, t: usize) -> Result<Self> {
        if params.kp != params.k {
            return Err(Error::UnsupportedRegime(
                "the classical MAN/YMA scheme needs K' = K; use the baseline for hotplug".into(),
            ));
        }
        let layout = Layout::new(&params, t)?;
        let (memory, load) = corner(SchemeKind::Man, params.k, params.kp, params.n, Some(t))?;
        Ok(Self {
            desc: SchemeDescriptor {
                kind: SchemeKind::Man,
                t: Some(t),
                subfile_divisor: layout.subsets.len(),
                memory,
                load,
            },
            params,
            t,
            layout,
        })
    }
}

impl Scheme for ManScheme {
    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn place(&self) -> CachePlan {
        man_placement(&self.params, self.t).expect("validated at construction")
    }

    fn deliver(&self, scenario: &DemandScenario) -> Transmission {
        yma_delivery(&self.params, self.t, scenario.demands()).expect("validated at construction")
    }

    fn decode(
        &self,
        user: usize,
        scenario: &DemandScenario,
        cache: &[RealizedPacket],
        received: &[RealizedPacket],
    ) -> Option<Vec<u64>> {
        man_decode(&self.params, &self.layout, scenario.demands(), user, cache, received)
    }
}

/// MAN placement for all `K` users; delivery fills offline demands with the
/// demand of the smallest active user, then runs YMA delivery.
pub struct BaselineScheme {
    params: SystemParams,
    t: usize,
    layout: Layout,
    desc: SchemeDescriptor,
}

impl BaselineScheme {
    pub fn new(params: SystemParams, t: usize) -> Result<Self> {
        let layout = Layout::new(&params, t)?;
        let (memory, load) = corner(SchemeKind::Base, params.k, params.kp, params.n, Some(t))?;
        Ok(Self {
            desc: SchemeDescriptor {
                kind: SchemeKind::Base,
                t: Some(t),
                subfile_divisor: layout.subsets.len(),
                memory,
                load,
            },
            params,
            t,
            layout,
        })
    }
}

impl Scheme for BaselineScheme {
    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn place(&self) -> CachePlan {
        man_placement(&self.params, self.t).expect("validated at construction")
    }

    fn deliver(&self, scenario: &DemandScenario) -> Transmission {
        let full = fill_demands(scenario, self.params.k);
        yma_delivery(&self.params, self.t, &full).expect("validated at construction")
    }

    fn decode(
        &self,
        user: usize,
        scenario: &DemandScenario,
        cache: &[RealizedPacket],
        received: &[RealizedPacket],
    ) -> Option<Vec<u64>> {
        let full = fill_demands(scenario, self.params.k);
        man_decode(&self.params, &self.layout, &full, user, cache, received)
    }
}
