//! Cache-encoding-block variants of MAN+YMA.
//!
//! [`Remark2Scheme`] assigns every `t`-subset `T ⊆ [K]` a block `G_T` of `ηB` rows,
//! with `η = 1 / (C(K′−1,t) + C(K−1,t−1))`; user `k` caches `G_T F_n` for all
//! `T ∋ k`. [`Remark2Example`] is the hand-built binary `K = 6, K′ = 3` code.

use crate::combinat::{range1, scenario_leaders, subsets_lex, SubsetFamily};
use crate::error::{Error, Result};
use crate::field::{block_mds_family, mat_solve, FieldMatrix, Solution};
use crate::model::{embed, embed_terms, CachePlan, DemandScenario, LinearPacket, PacketLabel, RealizedPacket, SystemParams, Transmission};

use super::{corner, find, multicast, remark2_divisor, require_divisible, ManStyleRecovery, Scheme, SchemeDescriptor, SchemeKind};

pub struct Remark2Scheme {
    params: SystemParams,
    t: usize,
    subsets: SubsetFamily,
    blocks: Vec<FieldMatrix>,
    desc: SchemeDescriptor,
}

fn coded_label(file: usize, subset: &[usize]) -> PacketLabel {
    PacketLabel::Coded {
        file,
        subset: subset.to_vec(),
    }
}

impl Remark2Scheme {
    pub fn new(params: SystemParams, t: usize) -> Result<Self> {
        if t == 0 || t >= params.kp {
            return Err(Error::OutOfRange {
                what: "t",
                detail: format!("need 1 <= t <= K'-1, got t={t}, K'={}", params.kp),
            });
        }
        let per_user = remark2_divisor(params.k, params.kp, t);
        require_divisible(params.b, per_user, "C(K'-1,t)+C(K-1,t-1)")?;
        let subsets = subsets_lex(&range1(params.k), t)?;
        let blocks = block_mds_family(subsets.len(), params.b / per_user, params.b, params.field)?;
        let (memory, load) = corner(SchemeKind::Remark2, params.k, params.kp, params.n, Some(t))?;
        Ok(Self {
            desc: SchemeDescriptor {
                kind: SchemeKind::Remark2,
                t: Some(t),
                subfile_divisor: per_user,
                memory,
                load,
            },
            params,
            t,
            subsets,
            blocks,
        })
    }

    fn block(&self, subset: &[usize]) -> &FieldMatrix {
        &self.blocks[self.subsets.index_of(subset).expect("t-subset of [K]")]
    }

    fn piece(&self, file: usize, subset: &[usize]) -> FieldMatrix {
        embed(&self.params, file, self.block(subset))
    }
}

impl Scheme for Remark2Scheme {
    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn place(&self) -> CachePlan {
        let caches = (1..=self.params.k)
            .map(|k| {
                let mut packets = Vec::new();
                for file in 1..=self.params.n {
                    for tset in self.subsets.iter().filter(|s| s.contains(&k)) {
                        packets.push(LinearPacket::new(coded_label(file, tset), self.piece(file, tset)));
                    }
                }
                packets
            })
            .collect();
        CachePlan::new(caches, self.desc.memory.clone(), self.params.b)
    }

    fn deliver(&self, scenario: &DemandScenario) -> Transmission {
        let lead = scenario_leaders(scenario);
        let family = subsets_lex(scenario.active(), self.t + 1).expect("t < K'");
        let packets = family
            .iter()
            .filter(|s| s.iter().any(|u| lead.contains(u)))
            .map(|s| {
                multicast(
                    &self.params,
                    s,
                    |u| scenario.demand_of(u).expect("active"),
                    |file, tset| self.piece(file, tset),
                )
            })
            .collect();
        Transmission::new(packets, self.params.b)
    }

    /// Collects `G_T F_{d_k}` for the cached `T ∋ k` and the delivered
    /// `T ⊆ I∖{k}`, then inverts the stacked blocks.
    fn decode(
        &self,
        user: usize,
        scenario: &DemandScenario,
        cache: &[RealizedPacket],
        received: &[RealizedPacket],
    ) -> Option<Vec<u64>> {
        let f = self.params.field;
        let mut rec = ManStyleRecovery::new(
            &self.params,
            user,
            cache,
            received,
            coded_label,
            |file, tset| self.piece(file, tset),
            |u| scenario.demand_of(u).expect("active"),
        );
        let others: Vec<usize> = scenario.active().iter().copied().filter(|&u| u != user).collect();
        let rest = subsets_lex(&others, self.t).ok()?;
        let targets = self
            .subsets
            .iter()
            .filter(|s| s.contains(&user))
            .map(<[usize]>::to_vec)
            .chain(rest.iter().map(<[usize]>::to_vec));
        let mut lhs = FieldMatrix::zeros(0, self.params.b);
        let mut rhs = Vec::new();
        for tset in targets {
            let vals = rec.recover(&tset)?;
            let g = self.block(&tset);
            for r in 0..g.rows() {
                lhs.push_row(g.row(r));
            }
            rhs.extend(vals);
        }
        let rhs = FieldMatrix::from_entries(f, rhs.len(), 1, rhs).ok()?;
        match mat_solve(f, &lhs, &rhs) {
            Ok(Solution::Unique(x)) => Some(x.entries().to_vec()),
            _ => None,
        }
    }
}

/// Binary `K = 6, K′ = 3` construction: each user stores two of the three parts
/// of every file (coded), and one `B/3`-symbol packet serves any three users.
pub struct Remark2Example {
    params: SystemParams,
    part_len: usize,
    desc: SchemeDescriptor,
}

const G12: [u64; 3] = [1, 0, 0];
const G13: [u64; 3] = [0, 1, 0];
const G23: [u64; 3] = [0, 0, 1];

fn xor(a: [u64; 3], b: [u64; 3]) -> [u64; 3] {
    [a[0] ^ b[0], a[1] ^ b[1], a[2] ^ b[2]]
}

impl Remark2Example {
    pub fn new(params: SystemParams) -> Result<Self> {
        if params.k != 6 || params.kp != 3 || params.n < 3 {
            return Err(Error::InvalidParams(format!(
                "remark2ex is defined for K=6, K'=3, N>=3 only, got ({}, {}, {})",
                params.k, params.kp, params.n
            )));
        }
        if params.q() != 2 {
            return Err(Error::InvalidParams("remark2ex is a binary code (q = 2)".into()));
        }
        require_divisible(params.b, 3, "3")?;
        let (memory, load) = corner(SchemeKind::Remark2Ex, params.k, params.kp, params.n, None)?;
        Ok(Self {
            desc: SchemeDescriptor {
                kind: SchemeKind::Remark2Ex,
                t: None,
                subfile_divisor: 3,
                memory,
                load,
            },
            part_len: params.b / 3,
            params,
        })
    }

    /// Rows of `G_u` as 3-vectors over the parts.
    pub fn user_rows(u: usize) -> [[u64; 3]; 2] {
        match u {
            1 => [G12, G13],
            2 => [G12, G23],
            3 => [G13, G23],
            4 => [xor(G13, G23), xor(G12, G23)],
            5 => [xor(G13, G23), xor(G12, G13)],
            6 => [xor(G12, G23), xor(G12, G13)],
            _ => panic!("user {u} out of range"),
        }
    }

    /// `g_{uv}` including the aliases for pairs outside `{1,2,3}`.
    pub fn pair_row(u: usize, v: usize) -> [u64; 3] {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        match (a, b) {
            (1, 2) => G12,
            (1, 3) => G13,
            (2, 3) => G23,
            (1, 4) | (1, 5) | (1, 6) | (5, 6) => xor(G12, G13),
            (2, 4) | (2, 5) | (2, 6) | (4, 6) => xor(G12, G23),
            (3, 4) | (3, 5) | (3, 6) | (4, 5) => xor(G13, G23),
            _ => panic!("pair ({u}, {v}) out of range"),
        }
    }

    /// Expands 3-vectors over parts into a map on one file.
    fn local(&self, rows: &[[u64; 3]]) -> FieldMatrix {
        let m = self.part_len;
        let mut out = FieldMatrix::zeros(rows.len() * m, self.params.b);
        for (i, g) in rows.iter().enumerate() {
            for (part, &c) in g.iter().enumerate() {
                for r in 0..m {
                    out.set(i * m + r, part * m + r, c);
                }
            }
        }
        out
    }

    /// `(row, file)` terms of the single delivery packet.
    fn terms(scenario: &DemandScenario) -> [([u64; 3], usize); 3] {
        let u = scenario.active();
        let d = scenario.demands();
        [
            (Self::pair_row(u[1], u[2]), d[0]),
            (Self::pair_row(u[0], u[2]), d[1]),
            (Self::pair_row(u[0], u[1]), d[2]),
        ]
    }
}

impl Scheme for Remark2Example {
    fn descriptor(&self) -> &SchemeDescriptor {
        &self.desc
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn place(&self) -> CachePlan {
        let caches = (1..=6)
            .map(|u| {
                let local = self.local(&Self::user_rows(u));
                (1..=self.params.n)
                    .map(|file| {
                        LinearPacket::new(PacketLabel::UserBlock { user: u, file }, embed(&self.params, file, &local))
                    })
                    .collect()
            })
            .collect();
        CachePlan::new(caches, self.desc.memory.clone(), self.params.b)
    }

    fn deliver(&self, scenario: &DemandScenario) -> Transmission {
        let locals: Vec<(usize, FieldMatrix)> = Self::terms(scenario)
            .iter()
            .map(|(g, file)| (*file, self.local(&[*g])))
            .collect();
        let terms: Vec<_> = locals.iter().map(|(file, m)| (*file, 1, m)).collect();
        let packet = LinearPacket::new(
            PacketLabel::Multicast {
                subset: scenario.active().to_vec(),
            },
            embed_terms(&self.params, &terms),
        );
        Transmission::new(vec![packet], self.params.b)
    }

    /// Cancels every term whose row lies in the span of `G_k`, then solves the
    /// 3×3 system made of `G_k` and the surviving row.
    fn decode(
        &self,
        user: usize,
        scenario: &DemandScenario,
        cache: &[RealizedPacket],
        received: &[RealizedPacket],
    ) -> Option<Vec<u64>> {
        let f = self.params.field;
        let m = self.part_len;
        let want = scenario.demand_of(user)?;
        let own_rows = Self::user_rows(user);
        let mut acc = find(received, &PacketLabel::Multicast { subset: scenario.active().to_vec() })?
            .values
            .clone();
        let mut survivor = [0u64; 3];
        for (g, file) in Self::terms(scenario) {
            // over GF(2) the span of two rows is {0, r0, r1, r0+r1}
            let lambda = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .into_iter()
                .find(|&(a, b)| (0..3).all(|i| (a * own_rows[0][i]) ^ (b * own_rows[1][i]) == g[i]));
            match lambda {
                Some((a, b)) => {
                    let cached = &find(cache, &PacketLabel::UserBlock { user, file })?.values;
                    for r in 0..m {
                        acc[r] ^= (a * cached[r]) ^ (b * cached[m + r]);
                    }
                }
                None if file == want => survivor = xor(survivor, g),
                None => return None,
            }
        }
        let lhs = FieldMatrix::from_rows(f, 3, &[own_rows[0].to_vec(), own_rows[1].to_vec(), survivor.to_vec()]).ok()?;
        let own = &find(cache, &PacketLabel::UserBlock { user, file: want })?.values;
        let mut rhs = FieldMatrix::zeros(3, m);
        for r in 0..m {
            rhs.set(0, r, own[r]);
            rhs.set(1, r, own[m + r]);
            rhs.set(2, r, acc[r]);
        }
        match mat_solve(f, &lhs, &rhs) {
            Ok(Solution::Unique(x)) => Some(x.entries().to_vec()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{EvaluatedSpan, PrimeField};
    use crate::rational::rat;

    #[test]
    fn printed_blocks_and_aliases() {
        assert_eq!(Remark2Example::user_rows(1), [[1, 0, 0], [0, 1, 0]]);
        assert_eq!(Remark2Example::user_rows(6), [[1, 0, 1], [1, 1, 0]]);
        assert_eq!(Remark2Example::pair_row(2, 5), xor(G12, G23));
        assert_eq!(Remark2Example::pair_row(5, 1), xor(G12, G13));
        assert_eq!(Remark2Example::pair_row(4, 5), xor(G13, G23));
    }

    #[test]
    fn every_pair_row_lies_in_both_users_blocks() {
        let f = PrimeField::new(2).unwrap();
        for u in 1..=6 {
            for v in (1..=6).filter(|&v| v != u) {
                let g = Remark2Example::pair_row(u, v);
                for w in [u, v] {
                    let rows = Remark2Example::user_rows(w);
                    let span = EvaluatedSpan::new(f, 3, rows.iter().map(|r| (r.as_slice(), 0)));
                    assert!(span.evaluate(&g).is_some(), "g_{u}{v} not in span of G_{w}");
                }
            }
        }
    }

    #[test]
    fn operating_point() {
        let p = SystemParams::new(6, 3, 3, 3, 2).unwrap();
        let s = Remark2Example::new(p).unwrap();
        assert_eq!(s.descriptor().memory, rat(2, 1));
        assert_eq!(s.descriptor().load, rat(1, 3));
        assert_eq!(s.place().rows(4), 6);
        let tx = s.deliver(&DemandScenario::new(vec![1, 2, 3], vec![1, 2, 3]));
        assert_eq!(tx.rows(), 1);
        // g23 F1 + g13 F2 + g12 F3
        assert_eq!(tx.packets[0].coeffs.row(0), &[0, 0, 1, 0, 1, 0, 1, 0, 0]);
    }

    #[test]
    fn rejects_other_shapes() {
        assert!(Remark2Example::new(SystemParams::new(6, 3, 2, 3, 2).unwrap()).is_err());
        assert!(Remark2Example::new(SystemParams::new(6, 3, 3, 3, 3).unwrap()).is_err());
        assert!(Remark2Example::new(SystemParams::new(5, 3, 3, 3, 2).unwrap()).is_err());
    }

    #[test]
    fn general_matches_new1_point_at_t1() {
        let p = SystemParams::new(3, 2, 2, 2, 3).unwrap();
        let s = Remark2Scheme::new(p, 1).unwrap();
        assert_eq!(s.descriptor().memory, rat(1, 1));
        assert_eq!(s.descriptor().load, rat(1, 2));
    }
}
