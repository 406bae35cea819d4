//! System parameters, libraries, demand scenarios and the labeled linear packets
//! every scheme produces.
//!
//! A packet is a block of rows over the concatenated file space `F_1 ‖ … ‖ F_N`
//! (length `N·B`). Caches and transmissions are both lists of packets, so the
//! verifier can treat every scheme uniformly.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinat::{binom_u, range1, subsets_lex};
use crate::error::{Error, Result};
use crate::field::{FieldMatrix, PrimeField};
use crate::rational::{int, Rational};

/// `(K, K′, N)` plus the realization parameters `B` (symbols per file) and `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemParams {
    /// Total users.
    pub k: usize,
    /// Active users.
    pub kp: usize,
    /// Files.
    pub n: usize,
    /// Symbols per file.
    pub b: usize,
    pub field: PrimeField,
    /// `min(N, K′)`, the largest possible number of distinct demands.
    pub r_prime: usize,
}

impl SystemParams {
    pub fn new(k: usize, kp: usize, n: usize, b: usize, q: u64) -> Result<Self> {
        check_kkn(k, kp, n)?;
        if b == 0 {
            return Err(Error::InvalidParams("B must be positive".into()));
        }
        Ok(Self {
            k,
            kp,
            n,
            b,
            field: PrimeField::new(q)?,
            r_prime: n.min(kp),
        })
    }

    /// Length of the concatenated file space.
    pub fn dim(&self) -> usize {
        self.n * self.b
    }

    pub fn q(&self) -> u64 {
        self.field.order()
    }
}

/// Validates `1 ≤ K′ ≤ K`, `N ≥ 1`.
pub fn check_kkn(k: usize, kp: usize, n: usize) -> Result<()> {
    if kp == 0 || kp > k {
        return Err(Error::InvalidParams(format!("need 1 <= K' <= K, got K={k}, K'={kp}")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("need N >= 1".into()));
    }
    Ok(())
}

/// `N` files of `B` field symbols each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileLibrary {
    files: Vec<Vec<u64>>,
    flat: Vec<u64>,
}

impl FileLibrary {
    pub fn from_files(files: Vec<Vec<u64>>) -> Result<Self> {
        let b = files.first().map_or(0, Vec::len);
        if files.iter().any(|f| f.len() != b) {
            return Err(Error::DimensionMismatch("files of unequal length".into()));
        }
        let flat = files.concat();
        Ok(Self { files, flat })
    }

    /// File `i` (1-based).
    pub fn file(&self, i: usize) -> &[u64] {
        &self.files[i - 1]
    }

    pub fn files(&self) -> &[Vec<u64>] {
        &self.files
    }

    /// All files concatenated.
    pub fn flat(&self) -> &[u64] {
        &self.flat
    }
}

/// Deterministic pseudo-random library for `params`.
pub fn generate_library(params: &SystemParams, seed: u64) -> FileLibrary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = params.q();
    let files = (0..params.n)
        .map(|_| (0..params.b).map(|_| rng.gen_range(0..q)).collect())
        .collect();
    FileLibrary::from_files(files).expect("uniform shape")
}

/// What a packet carries. Users are 1-based, files are 1-based, subsets sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PacketLabel {
    /// Uncoded subfile `F_{n,W}`.
    Subfile { file: usize, subset: Vec<usize> },
    /// Coded piece indexed by a user subset: an MDS symbol `C_{n,T}` or `G_T F_n`.
    Coded { file: usize, subset: Vec<usize> },
    /// A user's cache-coding block applied to one file, `G_u F_n`.
    UserBlock { user: usize, file: usize },
    /// `G_u (F_1 + … + F_N)`.
    CacheMix { user: usize },
    /// Multicast message `X_S`.
    Multicast { subset: Vec<usize> },
    /// `G_leader F_n + G_user F_n`.
    LeaderPair { file: usize, leader: usize, user: usize },
    /// An entire file sent uncoded.
    WholeFile { file: usize },
}

impl fmt::Display for PacketLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &[usize]| {
            s.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        };
        match self {
            Self::Subfile { file, subset } => write!(f, "F[{file};{{{}}}]", set(subset)),
            Self::Coded { file, subset } => write!(f, "C[{file};{{{}}}]", set(subset)),
            Self::UserBlock { user, file } => write!(f, "G{user}F{file}"),
            Self::CacheMix { user } => write!(f, "G{user}(sum F)"),
            Self::Multicast { subset } => write!(f, "X{{{}}}", set(subset)),
            Self::LeaderPair { file, leader, user } => write!(f, "G{leader}F{file}+G{user}F{file}"),
            Self::WholeFile { file } => write!(f, "F{file}"),
        }
    }
}

/// A labeled block of linear rows over the `N·B`-dimensional file space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearPacket {
    pub label: PacketLabel,
    pub coeffs: FieldMatrix,
}

impl LinearPacket {
    pub fn new(label: PacketLabel, coeffs: FieldMatrix) -> Self {
        Self { label, coeffs }
    }

    pub fn rows(&self) -> usize {
        self.coeffs.rows()
    }

    /// Evaluates the rows on an actual library.
    pub fn realize(&self, params: &SystemParams, lib: &FileLibrary) -> RealizedPacket {
        let values = self
            .coeffs
            .apply(params.field, lib.flat())
            .expect("packet width matches library");
        RealizedPacket {
            label: self.label.clone(),
            coeffs: self.coeffs.clone(),
            values,
        }
    }
}

/// A packet together with the symbol values it evaluates to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedPacket {
    pub label: PacketLabel,
    pub coeffs: FieldMatrix,
    pub values: Vec<u64>,
}

/// Builds packet coefficients from per-file `B`-column blocks:
/// `Σ_j c_j · (local_j applied to F_{file_j})`.
pub fn embed_terms(params: &SystemParams, terms: &[(usize, u64, &FieldMatrix)]) -> FieldMatrix {
    let rows = terms.first().map_or(0, |t| t.2.rows());
    let f = params.field;
    let mut out = FieldMatrix::zeros(rows, params.dim());
    for &(file, c, local) in terms {
        assert_eq!(local.rows(), rows, "terms must have equal row counts");
        assert_eq!(local.cols(), params.b, "term must act on one file");
        let off = (file - 1) * params.b;
        for r in 0..rows {
            let dst = &mut out.row_mut(r)[off..off + params.b];
            f.axpy(dst, c, local.row(r));
        }
    }
    out
}

/// `local` (a `rows × B` matrix) acting on file `file`.
pub fn embed(params: &SystemParams, file: usize, local: &FieldMatrix) -> FieldMatrix {
    embed_terms(params, &[(file, 1, local)])
}

/// Per-user caches produced by a placement. Built without any scenario in scope.
#[derive(Debug, Clone)]
pub struct CachePlan {
    caches: Vec<Vec<LinearPacket>>,
    memory: Rational,
    b: usize,
}

impl CachePlan {
    pub fn new(caches: Vec<Vec<LinearPacket>>, memory: Rational, b: usize) -> Self {
        Self { caches, memory, b }
    }

    pub fn users(&self) -> usize {
        self.caches.len()
    }

    /// Cache of user `k` (1-based).
    pub fn cache(&self, k: usize) -> &[LinearPacket] {
        &self.caches[k - 1]
    }

    pub fn memory(&self) -> &Rational {
        &self.memory
    }

    pub fn rows(&self, k: usize) -> usize {
        self.cache(k).iter().map(LinearPacket::rows).sum()
    }

    /// Largest per-user row count, normalized by `B`.
    pub fn measured_memory(&self) -> Rational {
        let rows = (1..=self.users()).map(|k| self.rows(k)).max().unwrap_or(0);
        Rational::new((rows as i64).into(), (self.b as i64).into())
    }

    /// Every user stores at most `M·B` rows.
    pub fn within_budget(&self) -> bool {
        (1..=self.users()).all(|k| int(self.rows(k) as i64) <= &self.memory * int(self.b as i64))
    }
}

/// Active set `I` (sorted, 1-based) and the active users' demands `d[I]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DemandScenario {
    active: Vec<usize>,
    demands: Vec<usize>,
}

impl DemandScenario {
    /// Panics unless `active` is strictly increasing and matches `demands` in length.
    pub fn new(active: Vec<usize>, demands: Vec<usize>) -> Self {
        assert_eq!(active.len(), demands.len(), "one demand per active user");
        assert!(!active.is_empty(), "at least one active user");
        assert!(active.windows(2).all(|w| w[0] < w[1]), "active set must be sorted");
        Self { active, demands }
    }

    /// Checked constructor against `params`.
    pub fn checked(params: &SystemParams, active: Vec<usize>, demands: Vec<usize>) -> Result<Self> {
        let mut sorted: Vec<(usize, usize)> = active.into_iter().zip(demands).collect();
        sorted.sort_unstable();
        let (active, demands): (Vec<_>, Vec<_>) = sorted.into_iter().unzip();
        if active.len() != params.kp
            || active.windows(2).any(|w| w[0] == w[1])
            || active.iter().any(|&u| u == 0 || u > params.k)
        {
            return Err(Error::InvalidParams(format!(
                "active set {active:?} is not a {}-subset of [{}]",
                params.kp, params.k
            )));
        }
        if demands.iter().any(|&d| d == 0 || d > params.n) {
            return Err(Error::InvalidParams(format!("demands {demands:?} outside [{}]", params.n)));
        }
        Ok(Self { active, demands })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn demands(&self) -> &[usize] {
        &self.demands
    }

    /// Demand of active user `u`.
    pub fn demand_of(&self, u: usize) -> Option<usize> {
        self.active.iter().position(|&a| a == u).map(|i| self.demands[i])
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.active.iter().copied().zip(self.demands.iter().copied())
    }
}

impl fmt::Display for DemandScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I={:?} d={:?}", self.active, self.demands)
    }
}

/// What the server broadcasts for one scenario.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub packets: Vec<LinearPacket>,
    pub load: Rational,
}

impl Transmission {
    pub fn new(packets: Vec<LinearPacket>, b: usize) -> Self {
        let rows: usize = packets.iter().map(LinearPacket::rows).sum();
        let load = Rational::new((rows as i64).into(), (b as i64).into());
        Self { packets, load }
    }

    pub fn rows(&self) -> usize {
        self.packets.iter().map(LinearPacket::rows).sum()
    }

    pub fn find(&self, label: &PacketLabel) -> Option<&LinearPacket> {
        self.packets.iter().find(|p| &p.label == label)
    }
}

/// `C(K, K′) · N^{K′}`.
pub fn scenario_count(params: &SystemParams) -> u128 {
    binom_u(params.k, params.kp) as u128 * (params.n as u128).pow(params.kp as u32)
}

/// Every `(I, d[I])` pair: active sets in lexicographic order, demands in
/// lexicographic order within each.
pub fn enumerate_scenarios(params: &SystemParams) -> Vec<DemandScenario> {
    let sets = subsets_lex(&range1(params.k), params.kp).expect("K' <= K");
    let mut out = Vec::with_capacity(scenario_count(params) as usize);
    for active in sets.iter() {
        let mut d = vec![1usize; params.kp];
        loop {
            out.push(DemandScenario::new(active.to_vec(), d.clone()));
            let Some(i) = (0..params.kp).rev().find(|&i| d[i] < params.n) else {
                break;
            };
            d[i] += 1;
            for x in d.iter_mut().skip(i + 1) {
                *x = 1;
            }
        }
    }
    out
}

/// Uniformly random scenario.
pub fn random_scenario<R: Rng>(params: &SystemParams, rng: &mut R) -> DemandScenario {
    let mut users = range1(params.k);
    for i in 0..params.kp {
        let j = rng.gen_range(i..users.len());
        users.swap(i, j);
    }
    let mut active = users[..params.kp].to_vec();
    active.sort_unstable();
    let demands = (0..params.kp).map(|_| rng.gen_range(1..=params.n)).collect();
    DemandScenario::new(active, demands)
}
