//! Placement and delivery constructions.
//!
//! Every scheme builds its caches without seeing a scenario ([`Scheme::place`]),
//! produces a broadcast from `(I, d[I])` alone ([`Scheme::deliver`]) and carries a
//! structure-aware decoder ([`Scheme::decode`]) that the verifier cross-checks
//! against the scheme-agnostic linear decoder.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bounds;
use crate::combinat::binom_u;
use crate::error::{Error, Result};
use crate::field::{mds_generator, smallest_mds_field, EvaluatedSpan, FieldMatrix, PrimeField};
use crate::model::{
    check_kkn, CachePlan, DemandScenario, LinearPacket, PacketLabel, RealizedPacket, SystemParams,
    Transmission,
};
use crate::rational::Rational;

mod man;
mod new1;
mod new2;
mod remark2;

pub use man::{man_placement, yma_delivery, BaselineScheme, ManScheme};
pub use new1::New1Scheme;
pub use new2::New2Scheme;
pub use remark2::{Remark2Example, Remark2Scheme};

/// Scheme families, named as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Classical MAN placement with YMA delivery, all users active.
    Man,
    /// MAN placement over all `K` users, offline demands filled in.
    Base,
    /// MDS-precoded MAN placement over active-set subsets.
    New1,
    /// Cross-file coded placement with two-step delivery.
    New2,
    /// Per-subset cache-encoding blocks with MAN-like delivery.
    Remark2,
    /// The hard-coded binary `K = 6, K′ = 3` construction.
    Remark2Ex,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        Self::Man,
        Self::Base,
        Self::New1,
        Self::New2,
        Self::Remark2,
        Self::Remark2Ex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Man => "man",
            Self::Base => "base",
            Self::New1 => "new1",
            Self::New2 => "new2",
            Self::Remark2 => "remark2",
            Self::Remark2Ex => "remark2ex",
        }
    }

    /// Parameter values `t` the scheme admits at `(K, K′, N)`; `[None]` for
    /// schemes without a parameter, empty if the scheme does not apply.
    pub fn admissible_t(self, k: usize, kp: usize, n: usize) -> Vec<Option<usize>> {
        match self {
            Self::Man if kp == k => (0..=k).map(Some).collect(),
            Self::Man => vec![],
            Self::Base => (0..=k).map(Some).collect(),
            Self::New1 => (0..=kp).map(Some).collect(),
            Self::New2 if kp >= n => vec![None],
            Self::New2 => vec![],
            Self::Remark2 => (1..kp).map(Some).collect(),
            Self::Remark2Ex if k == 6 && kp == 3 && n >= 3 => vec![None],
            Self::Remark2Ex => vec![],
        }
    }

    /// Builds the scheme at its smallest admissible `B`, on the smallest suitable
    /// prime field unless `q` is forced.
    pub fn instantiate(
        self,
        k: usize,
        kp: usize,
        n: usize,
        t: Option<usize>,
        q: Option<u64>,
    ) -> Result<Box<dyn Scheme>> {
        check_kkn(k, kp, n)?;
        let need_t = || {
            t.ok_or_else(|| Error::InvalidParams(format!("scheme {} needs a value of t", self.name())))
        };
        let field = |auto: PrimeField| -> Result<PrimeField> {
            match q {
                Some(q) => PrimeField::new(q),
                None => Ok(auto),
            }
        };
        let params = |b: usize, f: PrimeField| SystemParams::new(k, kp, n, b, f.order());
        Ok(match self {
            Self::Man => {
                let t = need_t()?;
                let f = field(PrimeField::new(2)?)?;
                Box::new(ManScheme::new(params(man_divisor(k, t)?, f)?, t)?)
            }
            Self::Base => {
                let t = need_t()?;
                let f = field(PrimeField::new(2)?)?;
                Box::new(BaselineScheme::new(params(man_divisor(k, t)?, f)?, t)?)
            }
            Self::New1 => {
                let t = need_t()?;
                if t > kp {
                    return Err(out_of_range_t(t, kp));
                }
                let f = field(smallest_mds_field(binom_u(k, t) as usize, binom_u(kp, t) as usize))?;
                Box::new(New1Scheme::new(params(binom_u(kp, t) as usize, f)?, t)?)
            }
            Self::New2 => {
                if kp < n {
                    return Err(new2_regime(kp, n));
                }
                let f = field(smallest_mds_field(k, kp))?;
                Box::new(New2Scheme::new(params(kp, f)?)?)
            }
            Self::Remark2 => {
                let t = need_t()?;
                if t == 0 || t >= kp {
                    return Err(Error::OutOfRange {
                        what: "t",
                        detail: format!("remark2 needs 1 <= t <= K'-1 = {}", kp.saturating_sub(1)),
                    });
                }
                let d = remark2_divisor(k, kp, t);
                let f = field(smallest_mds_field(binom_u(k, t) as usize, d))?;
                Box::new(Remark2Scheme::new(params(d, f)?, t)?)
            }
            Self::Remark2Ex => {
                let f = field(PrimeField::new(2)?)?;
                Box::new(Remark2Example::new(params(3, f)?)?)
            }
        })
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown scheme {s:?}")))
    }
}

fn man_divisor(k: usize, t: usize) -> Result<usize> {
    if t > k {
        return Err(out_of_range_t(t, k));
    }
    Ok(binom_u(k, t) as usize)
}

/// `C(K′−1, t) + C(K−1, t−1)`: the number of cache-encoding blocks one user combines.
pub(crate) fn remark2_divisor(k: usize, kp: usize, t: usize) -> usize {
    (binom_u(kp - 1, t) + binom_u(k - 1, t - 1)) as usize
}

fn out_of_range_t(t: usize, max: usize) -> Error {
    Error::OutOfRange {
        what: "t",
        detail: format!("t={t} exceeds {max}"),
    }
}

pub(crate) fn new2_regime(kp: usize, n: usize) -> Error {
    Error::UnsupportedRegime(format!("new2 requires K' >= N, got K'={kp}, N={n}"))
}

pub(crate) fn require_divisible(b: usize, divisor: usize, what: &str) -> Result<()> {
    if divisor == 0 || b % divisor != 0 {
        return Err(Error::Divisibility(format!("B={b} is not a multiple of {what}={divisor}")));
    }
    Ok(())
}

/// Name, parameter and theoretical operating point of a scheme instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemeDescriptor {
    pub kind: SchemeKind,
    pub t: Option<usize>,
    /// `B` must be a multiple of this.
    pub subfile_divisor: usize,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub memory: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub load: Rational,
}

impl SchemeDescriptor {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

pub trait Scheme: Send + Sync {
    fn descriptor(&self) -> &SchemeDescriptor;

    fn params(&self) -> &SystemParams;

    /// Cache contents; depends on the files only.
    fn place(&self) -> CachePlan;

    /// Broadcast for one scenario.
    fn deliver(&self, scenario: &DemandScenario) -> Transmission;

    /// Structure-aware decoder for active user `user`. Returns the demanded file's
    /// `B` symbols, or `None` if this decoder cannot recover it.
    fn decode(
        &self,
        user: usize,
        scenario: &DemandScenario,
        cache: &[RealizedPacket],
        received: &[RealizedPacket],
    ) -> Option<Vec<u64>>;
}

/// Sign of the term at position `pos` of a multicast message.
pub(crate) fn alternating(f: PrimeField, pos: usize) -> u64 {
    if pos % 2 == 0 {
        1
    } else {
        f.neg(1)
    }
}

/// MAN-type multicast `X_S = Σ_{k∈S} (−1)^{pos(k)} piece(d_k, S∖{k})`.
///
/// Alternating signs keep the YMA linear dependencies intact over odd
/// characteristic; over GF(2) this is the plain sum.
pub(crate) fn multicast(
    params: &SystemParams,
    subset: &[usize],
    demand: impl Fn(usize) -> usize,
    piece: impl Fn(usize, &[usize]) -> FieldMatrix,
) -> LinearPacket {
    let f = params.field;
    let mut coeffs: Option<FieldMatrix> = None;
    for (pos, &k) in subset.iter().enumerate() {
        let rest: Vec<usize> = subset.iter().copied().filter(|&u| u != k).collect();
        let term = piece(demand(k), &rest);
        let sign = alternating(f, pos);
        match coeffs.as_mut() {
            None => {
                let mut m = FieldMatrix::zeros(term.rows(), term.cols());
                for r in 0..term.rows() {
                    f.axpy(m.row_mut(r), sign, term.row(r));
                }
                coeffs = Some(m);
            }
            Some(m) => {
                for r in 0..term.rows() {
                    f.axpy(m.row_mut(r), sign, term.row(r));
                }
            }
        }
    }
    LinearPacket::new(
        PacketLabel::Multicast {
            subset: subset.to_vec(),
        },
        coeffs.expect("nonempty subset"),
    )
}

pub(crate) fn find<'a>(packets: &'a [RealizedPacket], label: &PacketLabel) -> Option<&'a RealizedPacket> {
    packets.iter().find(|p| &p.label == label)
}

/// Recovers the values of `piece(d_user, target)` for a MAN-style scheme whose
/// pieces are labeled by `label(file, subset)` and whose user caches every piece
/// with `user ∈ subset`.
///
/// Cached pieces are read directly; otherwise the multicast `X_{target ∪ {user}}`
/// is cache-cancelled. A message skipped by the YMA rule is replaced by evaluating
/// the piece on the span of everything the user holds.
pub(crate) struct ManStyleRecovery<'a, L, P, D>
where
    L: Fn(usize, &[usize]) -> PacketLabel,
    P: Fn(usize, &[usize]) -> FieldMatrix,
    D: Fn(usize) -> usize,
{
    pub params: &'a SystemParams,
    pub label: L,
    pub piece: P,
    pub demand: D,
    pub user: usize,
    pub cache: &'a [RealizedPacket],
    pub received: &'a [RealizedPacket],
    span: Option<EvaluatedSpan>,
}

impl<'a, L, P, D> ManStyleRecovery<'a, L, P, D>
where
    L: Fn(usize, &[usize]) -> PacketLabel,
    P: Fn(usize, &[usize]) -> FieldMatrix,
    D: Fn(usize) -> usize,
{
    pub fn new(
        params: &'a SystemParams,
        user: usize,
        cache: &'a [RealizedPacket],
        received: &'a [RealizedPacket],
        label: L,
        piece: P,
        demand: D,
    ) -> Self {
        Self {
            params,
            label,
            piece,
            demand,
            user,
            cache,
            received,
            span: None,
        }
    }

    pub fn recover(&mut self, target: &[usize]) -> Option<Vec<u64>> {
        let f = self.params.field;
        let k = self.user;
        let want = (self.demand)(k);
        if target.contains(&k) {
            return find(self.cache, &(self.label)(want, target)).map(|p| p.values.clone());
        }
        let mut s: Vec<usize> = target.to_vec();
        s.push(k);
        s.sort_unstable();
        if let Some(x) = find(self.received, &PacketLabel::Multicast { subset: s.clone() }) {
            let mut acc = x.values.clone();
            let mut own_sign = 1;
            for (pos, &j) in s.iter().enumerate() {
                let sign = alternating(f, pos);
                if j == k {
                    own_sign = sign;
                    continue;
                }
                let rest: Vec<usize> = s.iter().copied().filter(|&u| u != j).collect();
                let known = find(self.cache, &(self.label)((self.demand)(j), &rest))?;
                f.axpy(&mut acc, f.neg(sign), &known.values);
            }
            // own_sign is ±1, its own inverse
            return Some(acc.into_iter().map(|v| f.mul(v, own_sign)).collect());
        }
        let coeffs = (self.piece)(want, target);
        let span = self.span.get_or_insert_with(|| {
            let rows = self.cache.iter().chain(self.received).flat_map(|p| {
                p.coeffs.iter_rows().zip(p.values.iter().copied())
            });
            EvaluatedSpan::new(f, self.params.dim(), rows)
        });
        span.evaluate_rows(&coeffs)
    }
}

/// MDS generator for `n` coded pieces of `k` information pieces.
pub(crate) fn generator(n: usize, k: usize, f: PrimeField) -> Result<FieldMatrix> {
    mds_generator(n, k, f)
}

/// Theoretical corner point for a scheme instance.
pub(crate) fn corner(kind: SchemeKind, k: usize, kp: usize, n: usize, t: Option<usize>) -> Result<(Rational, Rational)> {
    let p = bounds::corner_point(kind, k, kp, n, t)?;
    Ok((p.m, p.r))
}
