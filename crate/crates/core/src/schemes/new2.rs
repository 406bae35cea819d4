//! Cross-file coded placement: user `k` stores `G_k (F_1 + … + F_N)`, where the
//! `G_k` are `B/K′ × B` blocks any `K′` of which stack to an invertible matrix.
//!
//! Delivery first "unlocks" the caches (step 1: `G_u F_n` for every active `u`
//! and every file `n ≠ d_u`), then serves each group of users sharing a file with
//! leader pairs (step 2: `G_{u*} F_j + G_u F_j`). If some file is requested by
//! nobody, the requested files are simply sent whole.

use crate::error::Result;
use crate::field::{block_mds_family, mat_solve, FieldMatrix, Solution};
use crate::model::{embed, embed_terms, CachePlan, DemandScenario, LinearPacket, PacketLabel, RealizedPacket, SystemParams, Transmission};

use super::{corner, find, new2_regime, require_divisible, Scheme, SchemeDescriptor, SchemeKind};

pub struct New2Scheme {
    params: SystemParams,
    blocks: Vec<FieldMatrix>,
    desc: SchemeDescriptor,
}

impl New2Scheme {
    pub fn new(params: SystemParams) -> Result<Self> {
        if params.kp < params.n {
            return Err(new2_regime(params.kp, params.n));
        }
        require_divisible(params.b, params.kp, "K'")?;
        let blocks = block_mds_family(params.k, params.b / params.kp, params.b, params.field)?;
        let (memory, load) = corner(SchemeKind::New2, params.k, params.kp, params.n, None)?;
        Ok(Self {
            desc: SchemeDescriptor {
                kind: SchemeKind::New2,
                t: None,
                subfile_divisor: params.kp,
                memory,
                load,
            },
            params,
            blocks,
        })
    }

    /// Cache-coding block of user `u` (1-based).
    pub fn block(&self, u: usize) -> &FieldMatrix {
        &self.blocks[u - 1]
    }

    /// Active users requesting each file (index 0 is file 1).
    fn groups(&self, scenario: &DemandScenario) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.params.n];
        for (u, d) in scenario.pairs() {
            groups[d - 1].push(u);
        }
        groups
    }

    fn whole_file(&self, file: usize) -> LinearPacket {
        let id = FieldMatrix::identity(self.params.b);
        LinearPacket::new(PacketLabel::WholeFile { file }, embed(&self.params, file, &id))
    }

    /// `(step 1, step 2)` packet counts for a scenario; `None` on the degenerate branch.
    pub fn step_counts(&self, scenario: &DemandScenario) -> Option<(usize, usize)> {
        let tx = self.deliver(scenario);
        let mut step1 = 0;
        let mut step2 = 0;
        for p in &tx.packets {
            match p.label {
                PacketLabel::UserBlock { .. } => step1 += 1,
                PacketLabel::LeaderPair { .. } => step2 += 1,
                _ => return None,
            }
        }
        Some((step1, step2))
    }
}

impl Scheme for New2Scheme {
    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn place(&self) -> CachePlan {
        let caches = (1..=self.params.k)
            .map(|u| {
                let g = self.block(u);
                let terms: Vec<_> = (1..=self.params.n).map(|file| (file, 1, g)).collect();
                vec![LinearPacket::new(
                    PacketLabel::CacheMix { user: u },
                    embed_terms(&self.params, &terms),
                )]
            })
            .collect();
        CachePlan::new(caches, self.desc.memory.clone(), self.params.b)
    }

    fn deliver(&self, scenario: &DemandScenario) -> Transmission {
        let groups = self.groups(scenario);
        let mut packets = Vec::new();
        if groups.iter().any(Vec::is_empty) {
            for (j, g) in groups.iter().enumerate() {
                if !g.is_empty() {
                    packets.push(self.whole_file(j + 1));
                }
            }
            return Transmission::new(packets, self.params.b);
        }
        for (u, d) in scenario.pairs() {
            for file in (1..=self.params.n).filter(|&n| n != d) {
                packets.push(LinearPacket::new(
                    PacketLabel::UserBlock { user: u, file },
                    embed(&self.params, file, self.block(u)),
                ));
            }
        }
        for (j, group) in groups.iter().enumerate() {
            let file = j + 1;
            let leader = group[0];
            for &u in &group[1..] {
                packets.push(LinearPacket::new(
                    PacketLabel::LeaderPair { file, leader, user: u },
                    embed_terms(&self.params, &[(file, 1, self.block(leader)), (file, 1, self.block(u))]),
                ));
            }
        }
        Transmission::new(packets, self.params.b)
    }

    /// Recovers `G_u F_{d_k}` for every active `u` and inverts the stacked blocks.
    fn decode(
        &self,
        user: usize,
        scenario: &DemandScenario,
        cache: &[RealizedPacket],
        received: &[RealizedPacket],
    ) -> Option<Vec<u64>> {
        let f = self.params.field;
        let want = scenario.demand_of(user)?;
        if let Some(p) = find(received, &PacketLabel::WholeFile { file: want }) {
            return Some(p.values.clone());
        }
        let value = |label: PacketLabel| find(received, &label).map(|p| p.values.clone());
        let sub = |a: &[u64], b: &[u64]| -> Vec<u64> { a.iter().zip(b).map(|(&x, &y)| f.sub(x, y)).collect() };

        // cache cancellation: G_k ΣF − Σ_{n≠d} G_k F_n
        let mut own = find(cache, &PacketLabel::CacheMix { user })?.values.clone();
        for file in (1..=self.params.n).filter(|&n| n != want) {
            own = sub(&own, &value(PacketLabel::UserBlock { user, file })?);
        }

        let group: Vec<usize> = scenario.pairs().filter(|&(_, d)| d == want).map(|(u, _)| u).collect();
        let leader = group[0];
        let leader_value = if leader == user {
            own.clone()
        } else {
            sub(&value(PacketLabel::LeaderPair { file: want, leader, user })?, &own)
        };

        let mut lhs = FieldMatrix::zeros(0, self.params.b);
        let mut rhs = Vec::with_capacity(self.params.b);
        for &u in scenario.active() {
            let v = if u == user {
                own.clone()
            } else if u == leader {
                leader_value.clone()
            } else if group.contains(&u) {
                sub(&value(PacketLabel::LeaderPair { file: want, leader, user: u })?, &leader_value)
            } else {
                value(PacketLabel::UserBlock { user: u, file: want })?
            };
            for r in 0..self.block(u).rows() {
                lhs.push_row(self.block(u).row(r));
            }
            rhs.extend(v);
        }
        let rhs = FieldMatrix::from_entries(f, rhs.len(), 1, rhs).ok()?;
        match mat_solve(f, &lhs, &rhs) {
            Ok(Solution::Unique(x)) => Some(x.entries().to_vec()),
            _ => None,
        }
    }
}
