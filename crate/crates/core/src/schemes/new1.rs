//! MDS-precoded MAN placement.
//!
//! Each file is split into `C(K′,t)` subfiles, which are treated as information
//! symbols of a `C(K,t) × C(K′,t)` MDS code. Coded symbol `C_{n,T}` goes to every
//! user in `T`. Any `K′` active users then jointly hold coded symbols indexed by
//! `Ω_I^t`, which is exactly enough to invert the code.

use crate::combinat::{binom_u, range1, scenario_leaders, subsets_lex, SubsetFamily};
use crate::error::{Error, Result};
use crate::field::{mat_solve, FieldMatrix, Solution};
use crate::model::{embed, CachePlan, DemandScenario, LinearPacket, PacketLabel, RealizedPacket, SystemParams, Transmission};
use crate::rational::{int, Rational};

use super::{corner, generator, multicast, require_divisible, ManStyleRecovery, Scheme, SchemeDescriptor, SchemeKind};

pub struct New1Scheme {
    params: SystemParams,
    t: usize,
    /// `Ω_[K]^t`, indexes the rows of the generator.
    coded_subsets: SubsetFamily,
    generator: FieldMatrix,
    sub_len: usize,
    desc: SchemeDescriptor,
}

fn coded_label(file: usize, subset: &[usize]) -> PacketLabel {
    PacketLabel::Coded {
        file,
        subset: subset.to_vec(),
    }
}

impl New1Scheme {
    /// Builds the scheme with the default MDS generator for the field in `params`.
    pub fn new(params: SystemParams, t: usize) -> Result<Self> {
        if t > params.kp {
            return Err(Error::OutOfRange {
                what: "t",
                detail: format!("t={t} exceeds K'={}", params.kp),
            });
        }
        let rows = binom_u(params.k, t) as usize;
        let cols = binom_u(params.kp, t) as usize;
        let g = generator(rows, cols, params.field)?;
        Self::with_generator(params, t, g)
    }

    /// Builds the scheme with an explicit generator; every `C(K′,t)`-row submatrix
    /// is checked for invertibility before it is accepted.
    pub fn with_generator(params: SystemParams, t: usize, generator: FieldMatrix) -> Result<Self> {
        let info = binom_u(params.kp, t) as usize;
        require_divisible(params.b, info, "C(K',t)")?;
        let coded_subsets = subsets_lex(&range1(params.k), t)?;
        if generator.rows() != coded_subsets.len() || generator.cols() != info {
            return Err(Error::DimensionMismatch(format!(
                "generator is {}x{}, expected {}x{info}",
                generator.rows(),
                generator.cols(),
                coded_subsets.len()
            )));
        }
        if !every_square_submatrix_invertible(&params, &generator) {
            return Err(Error::InvalidParams("generator is not MDS over this field".into()));
        }
        let (memory, load) = corner(SchemeKind::New1, params.k, params.kp, params.n, Some(t))?;
        Ok(Self {
            desc: SchemeDescriptor {
                kind: SchemeKind::New1,
                t: Some(t),
                subfile_divisor: info,
                memory,
                load,
            },
            sub_len: params.b / info,
            params,
            t,
            coded_subsets,
            generator,
        })
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    /// `C_{file,T}` as a `B/C(K′,t) × B` map on one file.
    fn local(&self, subset: &[usize]) -> FieldMatrix {
        let row = self.coded_subsets.index_of(subset).expect("t-subset of [K]");
        let f = self.params.field;
        let mut m = FieldMatrix::zeros(self.sub_len, self.params.b);
        for (w, &g) in self.generator.row(row).iter().enumerate() {
            for r in 0..self.sub_len {
                let c = w * self.sub_len + r;
                m.set(r, c, f.add(m.get(r, c), g));
            }
        }
        m
    }

    fn piece(&self, file: usize, subset: &[usize]) -> FieldMatrix {
        embed(&self.params, file, &self.local(subset))
    }
}

/// Exhaustive MDS check, falling back to the structural guarantee only when the
/// number of submatrices is too large to enumerate.
fn every_square_submatrix_invertible(params: &SystemParams, g: &FieldMatrix) -> bool {
    let k = g.cols();
    let n = g.rows();
    if binom_u(n, k) > 10_000 {
        // Vandermonde on distinct points; the property tests sample these.
        return (params.q() as usize) >= n;
    }
    let rows: Vec<usize> = (0..n).collect();
    subsets_lex(&rows, k)
        .expect("k <= n")
        .iter()
        .all(|sel| g.select_rows(sel).is_invertible(params.field))
}

impl Scheme for New1Scheme {
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
                    for tset in self.coded_subsets.iter().filter(|s| s.contains(&k)) {
                        packets.push(LinearPacket::new(coded_label(file, tset), self.piece(file, tset)));
                    }
                }
                packets
            })
            .collect();
        let memory: Rational = self.desc.memory.clone();
        debug_assert!(memory >= int(0));
        CachePlan::new(caches, memory, self.params.b)
    }

    fn deliver(&self, scenario: &DemandScenario) -> Transmission {
        let lead = scenario_leaders(scenario);
        let mut packets = Vec::new();
        if self.t < self.params.kp {
            let family = subsets_lex(scenario.active(), self.t + 1).expect("t < K'");
            for s in family.iter().filter(|s| s.iter().any(|u| lead.contains(u))) {
                packets.push(multicast(
                    &self.params,
                    s,
                    |u| scenario.demand_of(u).expect("active"),
                    |file, tset| self.piece(file, tset),
                ));
            }
        }
        Transmission::new(packets, self.params.b)
    }

    /// Gathers `C_{d_k,Q}` for every `Q ∈ Ω_I^t` and inverts `G[Ω_I^t]`.
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
        let targets = subsets_lex(scenario.active(), self.t).ok()?;
        let mut sel = Vec::with_capacity(targets.len());
        let mut rhs = FieldMatrix::zeros(0, self.sub_len);
        for q in targets.iter() {
            sel.push(self.coded_subsets.index_of(q)?);
            rhs.push_row(&rec.recover(q)?);
        }
        let square = self.generator.select_rows(&sel);
        let Ok(Solution::Unique(x)) = mat_solve(f, &square, &rhs) else {
            return None;
        };
        // row w of x is subfile W_w
        Some(x.entries().to_vec())
    }
}
