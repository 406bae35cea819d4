//! Achievable corner points, converse bounds and the checks tying them together.
//!
//! Everything here is exact: memories and loads are [`Rational`]s, envelopes are
//! evaluated by exact linear interpolation, and the only approximation is the
//! α grid of [`yma_converse`], which can only weaken the bound.

use std::fmt;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::combinat::binom;
use crate::error::{Error, Result};
use crate::model::check_kkn;
use crate::rational::{int, rat, zero, Rational};
use crate::schemes::SchemeKind;

/// The certified gap between the baseline envelope and the α-family converse.
pub const GAP_BOUND: (i64, i64) = (200_884, 100_000);

pub const DEFAULT_ALPHA_STEPS: u32 = 1000;

/// A memory-load pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TradeoffPoint {
    #[serde(serialize_with = "crate::rational::serialize")]
    pub m: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub r: Rational,
}

impl TradeoffPoint {
    pub fn new(m: Rational, r: Rational) -> Self {
        Self { m, r }
    }
}

impl fmt::Display for TradeoffPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})",
            crate::rational::format(&self.m),
            crate::rational::format(&self.r)
        )
    }
}

fn b(n: usize, k: i64) -> i64 {
    binom(n as i64, k) as i64
}

/// `min(N, K′)`.
pub fn r_prime(kp: usize, n: usize) -> usize {
    kp.min(n)
}

/// Corner point of one scheme instance.
pub fn corner_point(kind: SchemeKind, k: usize, kp: usize, n: usize, t: Option<usize>) -> Result<TradeoffPoint> {
    check_kkn(k, kp, n)?;
    let rp = r_prime(kp, n);
    let nn = n as i64;
    let need_t = |max: usize, min: usize| -> Result<i64> {
        match t {
            Some(t) if (min..=max).contains(&t) => Ok(t as i64),
            Some(t) => Err(Error::OutOfRange {
                what: "t",
                detail: format!("{kind} needs {min} <= t <= {max}, got {t}"),
            }),
            None => Err(Error::InvalidParams(format!("scheme {kind} needs a value of t"))),
        }
    };
    // (C(U,t+1) − C(U−r,t+1)) / C(U,t) with U users in the MAN structure
    let yma = |u: usize, t: i64, r: usize| -> (i64, i64) {
        (b(u, t + 1) - binom(u as i64 - r as i64, t + 1) as i64, b(u, t))
    };
    Ok(match kind {
        SchemeKind::Man | SchemeKind::Base => {
            if kind == SchemeKind::Man && kp != k {
                return Err(Error::InvalidParams(format!("man needs K' = K, got K={k}, K'={kp}")));
            }
            let t = need_t(k, 0)?;
            let (num, den) = yma(k, t, rp);
            TradeoffPoint::new(rat(nn * binom(k as i64 - 1, t - 1) as i64, b(k, t)), rat(num, den))
        }
        SchemeKind::New1 => {
            let t = need_t(kp, 0)?;
            let (num, den) = yma(kp, t, rp);
            TradeoffPoint::new(rat(nn * binom(k as i64 - 1, t - 1) as i64, b(kp, t)), rat(num, den))
        }
        SchemeKind::New2 => {
            if kp < n {
                return Err(crate::schemes::new2_regime(kp, n));
            }
            TradeoffPoint::new(rat(1, kp as i64), rat(nn * (kp as i64 - 1), kp as i64))
        }
        SchemeKind::Remark2 => {
            let t = need_t(kp.saturating_sub(1), 1)?;
            let d = b(kp - 1, t) + b(k - 1, t - 1);
            let (num, _) = yma(kp, t, rp);
            TradeoffPoint::new(rat(nn * b(k - 1, t - 1), d), rat(num, d))
        }
        SchemeKind::Remark2Ex => {
            if k != 6 || kp != 3 || n < 3 {
                return Err(Error::InvalidParams("remark2ex is defined for K=6, K'=3, N>=3 only".into()));
            }
            TradeoffPoint::new(rat(2 * nn, 3), rat(1, 3))
        }
    })
}

/// Closed form of the `t = 1` point of the first new scheme, written through `r′`.
pub fn new1_t1_closed_form(kp: usize, n: usize) -> TradeoffPoint {
    let rp = r_prime(kp, n) as i64;
    let kp = kp as i64;
    let m = rat(n as i64, kp);
    if kp - rp >= 2 {
        TradeoffPoint::new(m, int(rp) - rat(rp * (rp + 1), 2 * kp))
    } else {
        TradeoffPoint::new(m, rat(kp - 1, 2))
    }
}

/// All corner points of a scheme over its parameter range, with points beyond
/// `M = N` dropped and the trivial endpoints `(0, r′)`, `(N, 0)` added.
pub fn achievable_points(kind: SchemeKind, k: usize, kp: usize, n: usize) -> Result<Vec<TradeoffPoint>> {
    check_kkn(k, kp, n)?;
    if kind == SchemeKind::New2 && kp < n {
        return Err(crate::schemes::new2_regime(kp, n));
    }
    let ts = kind.admissible_t(k, kp, n);
    if ts.is_empty() {
        return Err(Error::InvalidParams(format!("{kind} does not apply at (K,K',N)=({k},{kp},{n})")));
    }
    let cap = int(n as i64);
    let mut pts = vec![TradeoffPoint::new(zero(), int(r_prime(kp, n) as i64))];
    for t in ts {
        let p = corner_point(kind, k, kp, n, t)?;
        if p.m <= cap {
            pts.push(p);
        }
    }
    pts.push(TradeoffPoint::new(cap, zero()));
    Ok(pts)
}

/// Union of the achievable corner points: baseline, first new scheme,
/// and the second new scheme when `K′ ≥ N`.
pub fn combined_points(k: usize, kp: usize, n: usize) -> Result<Vec<TradeoffPoint>> {
    let mut pts = achievable_points(SchemeKind::Base, k, kp, n)?;
    pts.extend(achievable_points(SchemeKind::New1, k, kp, n)?);
    if kp >= n {
        pts.extend(achievable_points(SchemeKind::New2, k, kp, n)?);
    }
    Ok(pts)
}

/// `((1−μ)/μ)(1 − (1−μ)^{r′})` with `μ = M/N`; `r′` at `M = 0`.
pub fn decentralized_load(m: &Rational, n: usize, kp: usize) -> Result<Rational> {
    let nn = int(n as i64);
    if m.is_negative() || *m > nn {
        return Err(out_of_range_m(m, n));
    }
    let rp = r_prime(kp, n);
    if m.is_zero() {
        return Ok(int(rp as i64));
    }
    let mu = m / &nn;
    let rest = int(1) - &mu;
    let mut pow = int(1);
    for _ in 0..rp {
        pow *= &rest;
    }
    Ok(&rest / &mu * (int(1) - pow))
}

fn out_of_range_m(m: &Rational, n: usize) -> Error {
    Error::OutOfRange {
        what: "M",
        detail: format!("M={} outside [0, {n}]", crate::rational::format(m)),
    }
}

/// Piecewise-linear, convex, non-increasing curve through its breakpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TradeoffCurve {
    breakpoints: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    pub fn breakpoints(&self) -> &[TradeoffPoint] {
        &self.breakpoints
    }

    pub fn m_range(&self) -> (&Rational, &Rational) {
        (&self.breakpoints[0].m, &self.breakpoints[self.breakpoints.len() - 1].m)
    }

    /// Linear interpolation; `M` outside the breakpoint range is an error.
    pub fn eval(&self, m: &Rational) -> Result<Rational> {
        let pts = &self.breakpoints;
        let (lo, hi) = self.m_range();
        if m < lo || m > hi {
            return Err(Error::OutOfRange {
                what: "M",
                detail: format!(
                    "M={} outside curve range [{}, {}]",
                    crate::rational::format(m),
                    crate::rational::format(lo),
                    crate::rational::format(hi)
                ),
            });
        }
        let i = pts.partition_point(|p| p.m < *m);
        if pts[i].m == *m {
            return Ok(pts[i].r.clone());
        }
        let (a, c) = (&pts[i - 1], &pts[i]);
        Ok(&a.r + (&c.r - &a.r) * (m - &a.m) / (&c.m - &a.m))
    }

    pub fn is_non_increasing(&self) -> bool {
        self.breakpoints.windows(2).all(|w| w[1].r <= w[0].r)
    }

    /// Slopes strictly increase between consecutive segments.
    pub fn is_convex(&self) -> bool {
        self.breakpoints.windows(3).all(|w| {
            let s1 = (&w[1].r - &w[0].r) / (&w[1].m - &w[0].m);
            let s2 = (&w[2].r - &w[1].r) / (&w[2].m - &w[1].m);
            s1 < s2
        })
    }
}

/// `(b − a) × (c − a)` in the `(M, R)` plane.
fn cross(a: &TradeoffPoint, b: &TradeoffPoint, c: &TradeoffPoint) -> Rational {
    (&b.m - &a.m) * (&c.r - &a.r) - (&b.r - &a.r) * (&c.m - &a.m)
}

/// Lower convex hull of `points` over `M`, truncated after the last point with the
/// lowest load so the result is non-increasing. Collinear interior points are dropped.
pub fn lower_convex_envelope(points: &[TradeoffPoint]) -> Result<TradeoffCurve> {
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.m.cmp(&b.m).then(a.r.cmp(&b.r)));
    pts.dedup_by(|later, first| later.m == first.m);
    let mut hull: Vec<TradeoffPoint> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive() {
            hull.pop();
        }
        hull.push(p);
    }
    let lowest = hull
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.r.cmp(&b.r).then(j.cmp(i)))
        .map(|(i, _)| i)
        .expect("nonempty");
    hull.truncate(lowest + 1);
    Ok(TradeoffCurve { breakpoints: hull })
}

/// Envelope of a scheme's [`achievable_points`].
pub fn scheme_envelope(kind: SchemeKind, k: usize, kp: usize, n: usize) -> Result<TradeoffCurve> {
    lower_convex_envelope(&achievable_points(kind, k, kp, n)?)
}

fn check_m(m: &Rational, n: usize) -> Result<()> {
    if m.is_negative() || *m > int(n as i64) {
        return Err(out_of_range_m(m, n));
    }
    Ok(())
}

fn floor0(r: Rational) -> Rational {
    if r.is_negative() {
        zero()
    } else {
        r
    }
}

/// Cut-set bound: `max_s s − s/⌊N/s⌋ · M` over `s ∈ [min(N, K′)]`, floored at 0.
pub fn cutset_bound(m: &Rational, n: usize, kp: usize) -> Result<Rational> {
    check_m(m, n)?;
    let best = (1..=r_prime(kp, n))
        .map(|s| int(s as i64) - rat(s as i64, (n / s) as i64) * m)
        .max()
        .expect("r' >= 1");
    Ok(floor0(best))
}

/// Exact optimum for two active users and two files.
pub fn optimal_2x2(m: &Rational) -> Result<Rational> {
    check_m(m, 2)?;
    let best = [int(2) - int(2) * m, rat(3, 2) - m, int(1) - m / int(2)]
        .into_iter()
        .max()
        .expect("three lines");
    Ok(floor0(best))
}

/// Exact optimum for two active users and `N ≥ 3` files.
pub fn optimal_2user(m: &Rational, n: usize) -> Result<Rational> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("two-user optimum needs N >= 3, got {n}")));
    }
    check_m(m, n)?;
    let mu = m / int(n as i64);
    let best = (int(2) - int(3) * &mu).max(int(1) - mu);
    Ok(floor0(best))
}

/// A line `R ≥ a − c·M` produced by the α-family converse for one `(s, α)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConverseLine {
    pub s: usize,
    pub alpha: Rational,
    pub ell: usize,
    pub intercept: Rational,
    pub slope: Rational,
}

impl ConverseLine {
    pub fn at(&self, m: &Rational) -> Rational {
        &self.intercept - &self.slope * m
    }
}

/// Smallest `ℓ ∈ [s]` with `(s(s−1) − ℓ(ℓ−1))/2 + αs ≤ (N−ℓ+1)ℓ`, for `α = i/steps`.
pub fn converse_ell(s: usize, n: usize, i: u32, steps: u32) -> usize {
    let (s_, n_, i_, a_) = (s as i128, n as i128, i as i128, steps as i128);
    (1..=s)
        .find(|&l| {
            let l = l as i128;
            a_ * (s_ * (s_ - 1) - l * (l - 1)) + 2 * i_ * s_ <= 2 * a_ * (n_ - l + 1) * l
        })
        .expect("l = s always satisfies the condition when s <= N")
}

/// The α-family line for `(s, α = i/steps)`.
pub fn converse_line(s: usize, n: usize, i: u32, steps: u32) -> ConverseLine {
    let ell = converse_ell(s, n, i, steps);
    let alpha = rat(i as i64, steps as i64);
    let (s_, l_, n_) = (s as i64, ell as i64, n as i64);
    let intercept = int(s_ - 1) + &alpha;
    let slope = (int(s_ * (s_ - 1) - l_ * (l_ - 1)) + int(2 * s_) * &alpha) / int(2 * (n_ - l_ + 1));
    ConverseLine {
        s,
        alpha,
        ell,
        intercept,
        slope,
    }
}

/// The α-family lines that can attain the maximum over the α grid.
///
/// `ℓ(α)` is non-decreasing in α and, for fixed `(s, ℓ)`, the bound is affine in
/// α, so only the first and last grid α of each constant-`ℓ` run matter.
#[derive(Debug, Clone)]
pub struct YmaConverse {
    n: usize,
    kp: usize,
    steps: u32,
    lines: Vec<ConverseLine>,
}

impl YmaConverse {
    pub fn new(n: usize, kp: usize, steps: u32) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParams("alpha_steps must be >= 1".into()));
        }
        let mut lines = Vec::new();
        for s in 1..=r_prime(kp, n) {
            let mut run_start = 0u32;
            let mut cur = converse_ell(s, n, 0, steps);
            for i in 1..=steps {
                let l = converse_ell(s, n, i, steps);
                if l != cur {
                    lines.push(converse_line(s, n, run_start, steps));
                    lines.push(converse_line(s, n, i - 1, steps));
                    run_start = i;
                    cur = l;
                }
            }
            lines.push(converse_line(s, n, run_start, steps));
            lines.push(converse_line(s, n, steps, steps));
        }
        lines.dedup();
        Ok(Self { n, kp, steps, lines })
    }

    pub fn lines(&self) -> &[ConverseLine] {
        &self.lines
    }

    pub fn alpha_steps(&self) -> u32 {
        self.steps
    }

    pub fn eval(&self, m: &Rational) -> Result<Rational> {
        check_m(m, self.n)?;
        let best = self.lines.iter().map(|l| l.at(m)).max().expect("r' >= 1");
        let _ = self.kp;
        Ok(floor0(best))
    }
}

/// α-family converse at one memory value, maximized over `s` and the α grid.
pub fn yma_converse(m: &Rational, n: usize, kp: usize, alpha_steps: u32) -> Result<Rational> {
    YmaConverse::new(n, kp, alpha_steps)?.eval(m)
}

/// `Σ` of the converses that apply at `(K′, N)`: the pointwise max of all of them.
pub fn best_converse(m: &Rational, n: usize, kp: usize, yma: &YmaConverse) -> Result<Rational> {
    let mut best = cutset_bound(m, n, kp)?.max(yma.eval(m)?);
    if kp == 2 && n == 2 {
        best = best.max(optimal_2x2(m)?);
    }
    if kp == 2 && n >= 3 {
        best = best.max(optimal_2user(m, n)?);
    }
    Ok(best)
}

/// `steps` equally spaced points on `[lo, hi]`, both ends included.
pub fn grid(lo: &Rational, hi: &Rational, steps: usize) -> Vec<Rational> {
    if steps <= 1 {
        return vec![lo.clone()];
    }
    let den = int(steps as i64 - 1);
    (0..steps)
        .map(|i| lo + (hi - lo) * int(i as i64) / &den)
        .collect()
}

/// Outcome of one optimality item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ItemCheck {
    pub item: u8,
    pub applicable: bool,
    pub holds: bool,
    pub points_checked: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptimalityReport {
    pub k: usize,
    pub kp: usize,
    pub n: usize,
    pub items: Vec<ItemCheck>,
}

impl OptimalityReport {
    pub fn item(&self, i: u8) -> &ItemCheck {
        &self.items[(i - 1) as usize]
    }

    /// Every applicable item holds.
    pub fn all_hold(&self) -> bool {
        self.items.iter().all(|c| !c.applicable || c.holds)
    }
}

pub const OPTIMALITY_GRID: usize = 101;

/// Compares `env` with `target` on `[lo, hi]`: all envelope breakpoints inside
/// plus an [`OPTIMALITY_GRID`]-point grid.
fn segment_equal(
    env: &TradeoffCurve,
    lo: &Rational,
    hi: &Rational,
    target: impl Fn(&Rational) -> Result<Rational>,
) -> Result<(bool, usize, String)> {
    let mut ms: Vec<Rational> = env
        .breakpoints()
        .iter()
        .filter(|p| &p.m >= lo && &p.m <= hi)
        .map(|p| p.m.clone())
        .collect();
    ms.extend(grid(lo, hi, OPTIMALITY_GRID));
    for m in &ms {
        let (a, c) = (env.eval(m)?, target(m)?);
        if a != c {
            return Ok((
                false,
                ms.len(),
                format!(
                    "envelope {} vs bound {} at M={}",
                    crate::rational::format(&a),
                    crate::rational::format(&c),
                    crate::rational::format(m)
                ),
            ));
        }
    }
    Ok((true, ms.len(), String::from("equal")))
}

/// Checks optimality items 1–6 for the combined envelope at `(K, K′, N)`.
pub fn verify_optimality_cases(k: usize, kp: usize, n: usize) -> Result<OptimalityReport> {
    verify_optimality_cases_with(k, kp, n, DEFAULT_ALPHA_STEPS)
}

pub fn verify_optimality_cases_with(k: usize, kp: usize, n: usize, alpha_steps: u32) -> Result<OptimalityReport> {
    check_kkn(k, kp, n)?;
    let env = lower_convex_envelope(&combined_points(k, kp, n)?)?;
    let yma = YmaConverse::new(n, kp, alpha_steps)?;
    let nn = int(n as i64);
    let kpr = int(kp as i64);
    let full = (zero(), nn.clone());
    let skipped = |item: u8, why: &str| ItemCheck {
        item,
        applicable: false,
        holds: false,
        points_checked: 0,
        detail: format!("not applicable: {why}"),
    };
    let done = |item: u8, (holds, points_checked, detail): (bool, usize, String)| ItemCheck {
        item,
        applicable: true,
        holds,
        points_checked,
        detail,
    };
    let mut items = Vec::with_capacity(6);

    items.push(if r_prime(kp, n) == 1 {
        done(1, segment_equal(&env, &full.0, &full.1, |m| cutset_bound(m, n, kp))?)
    } else {
        skipped(1, "min(N, K') > 1")
    });

    items.push(if kp == 2 && n == 2 {
        done(2, segment_equal(&env, &full.0, &full.1, optimal_2x2)?)
    } else {
        skipped(2, "needs K' = N = 2")
    });

    items.push(if kp == 2 && n >= 3 {
        done(3, segment_equal(&env, &full.0, &full.1, |m| optimal_2user(m, n))?)
    } else {
        skipped(3, "needs K' = 2 and N >= 3")
    });

    items.push(if n <= kp {
        let corner = corner_point(SchemeKind::New2, k, kp, n, None)?;
        let on_line = corner.r == &nn * (int(1) - &corner.m);
        let hi = int(1) / &kpr;
        let mut res = segment_equal(&env, &zero(), &hi, |m| cutset_bound(m, n, kp))?;
        if !on_line {
            res = (false, res.1, format!("corner {corner} is off R = N(1 - M)"));
        }
        done(4, res)
    } else {
        skipped(4, "needs N <= K'")
    });

    items.push(if 2 * n >= kp * (kp + 1) {
        // s = K', α = 1 exactly: ℓ must be 1 and the line R = K' − K'(K'+1)/2 · M/N
        let exact = converse_line(kp, n, 1, 1);
        let line = |m: &Rational| -> Rational { &kpr - rat((kp * (kp + 1)) as i64, 2) * m / &nn };
        let hi = &nn / &kpr;
        let mut res = segment_equal(&env, &zero(), &hi, |m| Ok(line(m)))?;
        if exact.ell != 1 || exact.intercept != kpr || exact.slope != rat((kp * (kp + 1)) as i64, 2 * n as i64) {
            res = (false, res.1, format!("alpha = 1 line is l = {}, {} - {} M", exact.ell, exact.intercept, exact.slope));
        } else if res.0 {
            // the grid-scanned converse must not exceed the line (it is a valid bound below the envelope)
            let grid_res = segment_equal(&env, &zero(), &hi, |m| yma.eval(m))?;
            if !grid_res.0 {
                res = (false, res.1, format!("grid converse: {}", grid_res.2));
            }
        }
        done(5, res)
    } else {
        skipped(5, "needs N >= K'(K'+1)/2")
    });

    let lo = &nn * (int(1) - rat(1, k as i64));
    items.push(done(
        6,
        segment_equal(&env, &lo, &nn, |m| Ok(int(1) - m / &nn))?,
    ));

    Ok(OptimalityReport { k, kp, n, items })
}

/// Result of the multiplicative-gap scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapCertificate {
    pub k: usize,
    pub kp: usize,
    pub n: usize,
    pub grid_points: usize,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub max_ratio: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub argmax_m: Rational,
    /// Baseline envelope never exceeds the decentralized load on the grid.
    pub below_decentralized: bool,
    /// Wherever the converse vanishes, so does the baseline envelope.
    pub zero_guard_ok: bool,
    pub ok: bool,
}

pub fn gap_bound() -> Rational {
    rat(GAP_BOUND.0, GAP_BOUND.1)
}

/// Max over `M_i = i·N/(steps−1)` of `envelope(R^base)(M) / yma_converse(M)`.
pub fn gap_certificate(k: usize, kp: usize, n: usize, steps: usize, alpha_steps: u32) -> Result<GapCertificate> {
    if steps < 2 {
        return Err(Error::InvalidParams("gap grid needs at least 2 points".into()));
    }
    let env = scheme_envelope(SchemeKind::Base, k, kp, n)?;
    let yma = YmaConverse::new(n, kp, alpha_steps)?;
    let ms = grid(&zero(), &int(n as i64), steps);
    let rows: Vec<(Rational, Rational, Rational, Rational)> = ms
        .par_iter()
        .map(|m| -> Result<_> {
            Ok((m.clone(), env.eval(m)?, yma.eval(m)?, decentralized_load(m, n, kp)?))
        })
        .collect::<Result<_>>()?;
    let mut max_ratio = zero();
    let mut argmax_m = zero();
    let mut below_decentralized = true;
    let mut zero_guard_ok = true;
    for (m, base, conv, dec) in rows {
        below_decentralized &= base <= dec;
        if conv.is_zero() {
            zero_guard_ok &= base.is_zero();
            continue;
        }
        let ratio = base / conv;
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax_m = m;
        }
    }
    let ok = below_decentralized && zero_guard_ok && max_ratio <= gap_bound();
    Ok(GapCertificate {
        k,
        kp,
        n,
        grid_points: steps,
        max_ratio,
        argmax_m,
        below_decentralized,
        zero_guard_ok,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(m: (i64, i64), r: (i64, i64)) -> TradeoffPoint {
        TradeoffPoint::new(rat(m.0, m.1), rat(r.0, r.1))
    }

    // Independent oracle: direct evaluation of the corner formulas with f64-free
    // integer arithmetic, written out without the shared helpers.
    fn fact(n: i64) -> i64 {
        (1..=n).product()
    }
    fn c(n: i64, k: i64) -> i64 {
        if k < 0 || k > n || n < 0 {
            0
        } else {
            fact(n) / (fact(k) * fact(n - k))
        }
    }

    #[test]
    fn corner_points_from_formulas() {
        let base = corner_point(SchemeKind::Base, 3, 2, 2, Some(1)).unwrap();
        assert_eq!(base, pt((2, 3), (1, 1)));
        let base = corner_point(SchemeKind::Base, 10, 5, 20, Some(1)).unwrap();
        assert_eq!(base, pt((2, 1), (7, 2)));
        // (10·9 − 5·4/2... ) checked against the factorial oracle
        assert_eq!(base.r, rat(c(10, 2) - c(5, 2), c(10, 1)));
        assert_eq!(corner_point(SchemeKind::New1, 10, 5, 20, Some(1)).unwrap(), pt((4, 1), (2, 1)));
        // (3/5, 9/5) belongs to K' = 5, N = 3; at K' = 3, N = 3 both forms give (1, 1)
        assert_eq!(corner_point(SchemeKind::New1, 5, 5, 3, Some(1)).unwrap(), pt((3, 5), (9, 5)));
        assert_eq!(corner_point(SchemeKind::New1, 7, 5, 3, Some(1)).unwrap(), new1_t1_closed_form(5, 3));
        assert_eq!(corner_point(SchemeKind::New1, 5, 3, 3, Some(1)).unwrap(), pt((1, 1), (1, 1)));
        assert_eq!(corner_point(SchemeKind::New1, 3, 2, 2, Some(1)).unwrap(), pt((1, 1), (1, 2)));
        assert_eq!(corner_point(SchemeKind::New2, 6, 5, 3, None).unwrap(), pt((1, 5), (12, 5)));
        assert_eq!(corner_point(SchemeKind::New2, 3, 2, 2, None).unwrap(), pt((1, 2), (1, 1)));
        assert_eq!(corner_point(SchemeKind::Remark2, 4, 3, 3, Some(1)).unwrap(), pt((1, 1), (1, 1)));
        assert_eq!(corner_point(SchemeKind::Remark2, 4, 3, 3, Some(2)).unwrap(), pt((9, 4), (1, 4)));
        assert_eq!(corner_point(SchemeKind::Remark2, 3, 2, 2, Some(1)).unwrap(), pt((1, 1), (1, 2)));
        assert_eq!(corner_point(SchemeKind::Remark2Ex, 6, 3, 3, None).unwrap(), pt((2, 1), (1, 3)));
        assert!(matches!(
            corner_point(SchemeKind::New2, 3, 2, 3, None),
            Err(Error::UnsupportedRegime(_))
        ));
        assert!(corner_point(SchemeKind::Man, 3, 2, 2, Some(1)).is_err());
    }

    #[test]
    fn man_corners_match_classical_formula() {
        for k in 1..=7i64 {
            for n in 1..=6i64 {
                let r = k.min(n);
                for t in 0..=k {
                    let p = corner_point(SchemeKind::Man, k as usize, k as usize, n as usize, Some(t as usize)).unwrap();
                    assert_eq!(p.m, rat(n * t, k));
                    assert_eq!(p.r, rat(c(k, t + 1) - c(k - r, t + 1), c(k, t)));
                }
            }
        }
    }

    #[test]
    fn achievable_sets() {
        let new1 = achievable_points(SchemeKind::New1, 3, 2, 2).unwrap();
        let env = lower_convex_envelope(&new1).unwrap();
        assert_eq!(env.breakpoints(), &[pt((0, 1), (2, 1)), pt((1, 1), (1, 2)), pt((2, 1), (0, 1))]);
        let all = lower_convex_envelope(&combined_points(3, 2, 2).unwrap()).unwrap();
        assert_eq!(
            all.breakpoints(),
            &[pt((0, 1), (2, 1)), pt((1, 2), (1, 1)), pt((1, 1), (1, 2)), pt((2, 1), (0, 1))]
        );
        assert!(achievable_points(SchemeKind::New2, 3, 2, 3).is_err());
        // t = K' would need M = 2·C(2,1) = 4 > N
        assert!(new1.iter().all(|p| p.m <= int(2)));
    }

    #[test]
    fn decentralized_examples() {
        assert_eq!(decentralized_load(&int(1), 2, 2).unwrap(), rat(3, 4));
        assert_eq!(decentralized_load(&int(2), 2, 2).unwrap(), zero());
        assert_eq!(decentralized_load(&zero(), 5, 3).unwrap(), int(3));
        // near zero it approaches r'
        let tiny = rat(1, 1_000_000);
        let v = decentralized_load(&tiny, 5, 3).unwrap();
        assert!(v < int(3) && v > rat(2999, 1000));
        assert!(decentralized_load(&int(3), 2, 2).is_err());
    }

    #[test]
    fn envelope_examples() {
        let seg = lower_convex_envelope(&[pt((0, 1), (2, 1)), pt((2, 1), (0, 1))]).unwrap();
        assert_eq!(seg.breakpoints().len(), 2);
        assert_eq!(seg.eval(&int(1)).unwrap(), int(1));
        let dropped = lower_convex_envelope(&[pt((0, 1), (2, 1)), pt((1, 1), (19, 10)), pt((2, 1), (0, 1))]).unwrap();
        assert_eq!(dropped.breakpoints(), &[pt((0, 1), (2, 1)), pt((2, 1), (0, 1))]);
        let four = lower_convex_envelope(&[
            pt((0, 1), (2, 1)),
            pt((1, 1), (1, 2)),
            pt((1, 2), (1, 1)),
            pt((2, 1), (0, 1)),
        ])
        .unwrap();
        assert_eq!(four.breakpoints().len(), 4);
        assert!(four.eval(&int(3)).is_err());
        assert!(lower_convex_envelope(&[]).is_err());
        // duplicates in M keep the lower load; trailing rises are cut
        let d = lower_convex_envelope(&[pt((0, 1), (3, 1)), pt((0, 1), (2, 1)), pt((1, 1), (0, 1)), pt((2, 1), (1, 1))]).unwrap();
        assert_eq!(d.breakpoints(), &[pt((0, 1), (2, 1)), pt((1, 1), (0, 1))]);
    }

    #[test]
    fn lemma_examples() {
        assert_eq!(cutset_bound(&rat(1, 2), 2, 2).unwrap(), int(1));
        assert_eq!(cutset_bound(&zero(), 5, 3).unwrap(), int(3));
        assert_eq!(cutset_bound(&int(5), 5, 3).unwrap(), zero());
        assert_eq!(optimal_2x2(&rat(1, 2)).unwrap(), int(1));
        assert_eq!(optimal_2x2(&int(1)).unwrap(), rat(1, 2));
        assert_eq!(optimal_2x2(&int(2)).unwrap(), zero());
        assert_eq!(optimal_2user(&rat(3, 2), 3).unwrap(), rat(1, 2));
        assert_eq!(optimal_2user(&zero(), 4).unwrap(), int(2));
        assert_eq!(optimal_2user(&int(4), 4).unwrap(), zero());
        assert!(optimal_2user(&zero(), 2).is_err());
        assert_eq!(yma_converse(&zero(), 3, 2, 1000).unwrap(), int(2));
        assert_eq!(yma_converse(&int(3), 3, 2, 1000).unwrap(), zero());
    }

    /// Brute force over the whole α grid, no run compression.
    fn yma_full_grid(m: &Rational, n: usize, kp: usize, steps: u32) -> Rational {
        let mut best = zero();
        for s in 1..=kp.min(n) {
            for i in 0..=steps {
                let alpha = rat(i as i64, steps as i64);
                let (s_, n_) = (s as i64, n as i64);
                let mut l = 1i64;
                while !(rat(s_ * (s_ - 1) - l * (l - 1), 2) + &alpha * int(s_) <= int((n_ - l + 1) * l)) {
                    l += 1;
                }
                let v = int(s_ - 1) + &alpha
                    - (int(s_ * (s_ - 1) - l * (l - 1)) + int(2 * s_) * &alpha) / int(2 * (n_ - l + 1)) * m;
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn candidate_lines_match_full_grid() {
        for (n, kp) in [(2, 2), (3, 2), (5, 4), (10, 4), (6, 3), (7, 7), (20, 5)] {
            let conv = YmaConverse::new(n, kp, 60).unwrap();
            for m in grid(&zero(), &int(n as i64), 37) {
                assert_eq!(conv.eval(&m).unwrap(), yma_full_grid(&m, n, kp, 60), "N={n} K'={kp} M={m}");
            }
        }
    }

    #[test]
    fn converse_small_memory_line() {
        // (K', N) = (3, 6): α = 1, s = 3 gives ℓ = 1 and R ≥ 3 − M
        let line = converse_line(3, 6, 1, 1);
        assert_eq!(line.ell, 1);
        assert_eq!(line.intercept, int(3));
        assert_eq!(line.slope, int(1));
        let env = lower_convex_envelope(&combined_points(6, 3, 6).unwrap()).unwrap();
        assert!(env.breakpoints().contains(&pt((2, 1), (1, 1))));
        assert_eq!(env.eval(&int(1)).unwrap(), int(2));
    }

    #[test]
    fn optimality_examples() {
        let r = verify_optimality_cases(3, 2, 2).unwrap();
        assert!(r.item(2).applicable && r.item(2).holds);
        assert!(r.item(6).holds);
        assert!(!r.item(1).applicable);
        let r = verify_optimality_cases(5, 2, 3).unwrap();
        assert!(r.item(3).holds, "{:?}", r.item(3));
        let r = verify_optimality_cases(6, 3, 6).unwrap();
        assert!(r.item(5).holds, "{:?}", r.item(5));
    }

    #[test]
    fn gap_examples() {
        let g = gap_certificate(3, 2, 2, 101, 1000).unwrap();
        assert!(g.ok, "{g:?}");
        assert!(g.max_ratio >= int(1));
        let g = gap_certificate(15, 12, 20, 101, 1000).unwrap();
        assert!(g.ok, "{g:?}");
    }

    #[test]
    fn eq15_matches_t1_point() {
        for kp in 1..=8 {
            for n in 1..=12 {
                for k in kp..=kp + 2 {
                    let p = corner_point(SchemeKind::New1, k, kp, n, Some(1)).unwrap();
                    assert_eq!(p, new1_t1_closed_form(kp, n), "K'={kp} N={n}");
                }
            }
        }
    }

    #[test]
    fn decentralized_dominates_classical_envelope() {
        for (kp, n) in [(2, 2), (5, 20), (3, 4)] {
            let env = scheme_envelope(SchemeKind::Man, kp, kp, n).unwrap();
            for m in grid(&zero(), &int(n as i64), 101) {
                assert!(decentralized_load(&m, n, kp).unwrap() >= env.eval(&m).unwrap());
            }
        }
    }

    proptest! {
        #[test]
        fn envelopes_are_convex_and_monotone(kp in 1usize..6, extra in 0usize..3, n in 1usize..8) {
            let k = kp + extra;
            let mut kinds = vec![SchemeKind::Base, SchemeKind::New1];
            if kp >= n { kinds.push(SchemeKind::New2); }
            for kind in kinds {
                let env = scheme_envelope(kind, k, kp, n).unwrap();
                prop_assert!(env.is_convex());
                prop_assert!(env.is_non_increasing());
            }
        }

        #[test]
        fn converses_below_envelopes(kp in 1usize..5, extra in 0usize..3, n in 1usize..7) {
            let k = kp + extra;
            let yma = YmaConverse::new(n, kp, 100).unwrap();
            let base = scheme_envelope(SchemeKind::Base, k, kp, n).unwrap();
            let new1 = scheme_envelope(SchemeKind::New1, k, kp, n).unwrap();
            for m in grid(&zero(), &int(n as i64), 41) {
                let y = yma.eval(&m).unwrap();
                let cs = cutset_bound(&m, n, kp).unwrap();
                prop_assert!(y <= new1.eval(&m).unwrap());
                prop_assert!(cs <= base.eval(&m).unwrap());
                prop_assert!(best_converse(&m, n, kp, &yma).unwrap() <= base.eval(&m).unwrap().min(new1.eval(&m).unwrap()));
            }
        }

        #[test]
        fn small_memory_new1_ignores_k(kp in 1usize..6, n in 1usize..8) {
            let hi = rat(n as i64, kp as i64);
            let reference = scheme_envelope(SchemeKind::New1, kp, kp, n).unwrap();
            for k in kp..=kp + 3 {
                prop_assert_eq!(
                    corner_point(SchemeKind::New1, k, kp, n, Some(1)).unwrap(),
                    corner_point(SchemeKind::New1, kp, kp, n, Some(1)).unwrap()
                );
                if kp >= n {
                    prop_assert_eq!(
                        corner_point(SchemeKind::New2, k, kp, n, None).unwrap(),
                        corner_point(SchemeKind::New2, kp, kp, n, None).unwrap()
                    );
                }
                let env = scheme_envelope(SchemeKind::New1, k, kp, n).unwrap();
                for m in grid(&zero(), &hi, 11) {
                    prop_assert_eq!(env.eval(&m).unwrap(), reference.eval(&m).unwrap());
                }
            }
        }
    }
}
