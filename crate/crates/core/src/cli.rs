//! The `hotplug` command line: `verify`, `tradeoff`, `bounds`, `gap`.
//!
//! Exit status: 0 on success, 1 when a verification fails (decode failure, load
//! mismatch, or a gap above the bound), 2 when the input is inadmissible.

use std::fs;
use std::io::Write;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{
    self, best_converse, cutset_bound, decentralized_load, gap_certificate, grid, lower_convex_envelope,
    optimal_2user, optimal_2x2, TradeoffPoint, YmaConverse,
};
use crate::error::{Error, Result};
use crate::model::{check_kkn, SystemParams};
use crate::rational::{self, int, zero, Rational};
use crate::schemes::SchemeKind;
use crate::verifier::{exhaustive_report, sampled_report, DEFAULT_SCENARIO_CAP};

#[derive(Debug, Parser)]
#[command(name = "hotplug", version, about = "Hotplug coded caching: verify schemes, emit tradeoff curves and bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustively simulate schemes and compare loads with the formulas.
    Verify(RunConfig),
    /// Envelope breakpoints per scheme plus converse and decentralized curves, as CSV.
    Tradeoff(RunConfig),
    /// Converse bounds on the memory grid, as CSV.
    Bounds(RunConfig),
    /// Ratio of the baseline envelope to the α-family converse.
    Gap(RunConfig),
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Total users.
    #[arg(long = "K")]
    pub k: usize,
    /// Active users.
    #[arg(long = "Kp")]
    pub kp: usize,
    /// Files.
    #[arg(long = "N")]
    pub n: usize,
    /// Placement parameter; every admissible value when omitted.
    #[arg(long)]
    pub t: Option<usize>,
    /// Schemes (repeat or comma-separate).
    #[arg(long = "scheme", value_delimiter = ',')]
    pub schemes: Vec<SchemeKind>,
    /// Points on the memory grid.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Resolution of the α scan in the α-family converse.
    #[arg(long = "alpha-steps", default_value_t = bounds::DEFAULT_ALPHA_STEPS)]
    pub alpha_steps: u32,
    /// Library seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Field order override.
    #[arg(long)]
    pub q: Option<u64>,
    /// Write the machine-readable output here instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Check this many random scenarios instead of all of them.
    #[arg(long, num_args = 0..=1, default_missing_value = "1000")]
    pub sample: Option<usize>,
    /// Refuse exhaustive runs above this many scenarios.
    #[arg(long, default_value_t = DEFAULT_SCENARIO_CAP)]
    pub cap: u128,
}

/// Runs one command; returns the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match &cli.command {
        Command::Verify(c) => cmd_verify(c, out, err),
        Command::Tradeoff(c) => emit(c, cmd_tradeoff(c), out),
        Command::Bounds(c) => emit(c, cmd_bounds(c), out),
        Command::Gap(c) => cmd_gap(c, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn emit(c: &RunConfig, csv: Result<String>, out: &mut dyn Write) -> Result<u8> {
    write_output(c, &csv?, out)?;
    Ok(0)
}

fn write_output(c: &RunConfig, text: &str, out: &mut dyn Write) -> Result<()> {
    match &c.out {
        Some(path) => fs::write(path, text).map_err(|e| Error::InvalidParams(format!("cannot write {}: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::InvalidParams(format!("cannot write output: {e}"))),
    }
}

fn validate(c: &RunConfig) -> Result<()> {
    check_kkn(c.k, c.kp, c.n)?;
    if c.grid < 2 {
        return Err(Error::InvalidParams("--grid needs at least 2 points".into()));
    }
    if c.alpha_steps == 0 {
        return Err(Error::InvalidParams("--alpha-steps must be positive".into()));
    }
    Ok(())
}

/// Requested schemes, or the combined set when none were given.
fn schemes_or_default(c: &RunConfig) -> Vec<SchemeKind> {
    if !c.schemes.is_empty() {
        return c.schemes.clone();
    }
    let mut v = vec![SchemeKind::Base, SchemeKind::New1];
    if c.kp >= c.n {
        v.push(SchemeKind::New2);
    }
    v
}

fn inadmissible(kind: SchemeKind, c: &RunConfig) -> Error {
    if kind == SchemeKind::New2 && c.kp < c.n {
        return crate::schemes::new2_regime(c.kp, c.n);
    }
    Error::InvalidParams(format!("{kind} does not apply at (K,K',N)=({},{},{})", c.k, c.kp, c.n))
}

fn cmd_verify(c: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    validate(c)?;
    let mut jobs = Vec::new();
    for kind in schemes_or_default(c) {
        let ts = match c.t {
            Some(t) => vec![if kind.admissible_t(c.k, c.kp, c.n).contains(&None) { None } else { Some(t) }],
            None => kind.admissible_t(c.k, c.kp, c.n),
        };
        if ts.is_empty() {
            return Err(inadmissible(kind, c));
        }
        for t in ts {
            jobs.push(kind.instantiate(c.k, c.kp, c.n, t, c.q)?);
        }
    }

    let mut json = Vec::new();
    let mut code = 0;
    for scheme in &jobs {
        let d = scheme.descriptor();
        let p: &SystemParams = scheme.params();
        let tag = match d.t {
            Some(t) => format!("{} t={t}", d.name()),
            None => d.name().to_string(),
        };
        if let Some(samples) = c.sample {
            let r = sampled_report(scheme.as_ref(), c.seed, samples)?;
            let _ = writeln!(
                err,
                "{tag} (K,K',N)=({},{},{}) B={} q={}: sampled {} scenarios, worst observed load {} (formula {}), {} failures; match not claimed",
                p.k,
                p.kp,
                p.n,
                p.b,
                p.q(),
                r.scenarios_checked,
                rational::format(&r.worst_load_observed),
                rational::format(&r.formula_load),
                r.decode_failures.len()
            );
            if let Some(f) = r.decode_failures.first() {
                let _ = writeln!(err, "  first failure: {} user {}", f.scenario, f.user);
                code = 1;
            }
            if r.worst_load_observed > r.formula_load {
                code = 1;
            }
            json.push(serde_json::to_value(&r).expect("serializable"));
            continue;
        }
        let r = exhaustive_report(scheme.as_ref(), c.seed, c.cap)?;
        let _ = writeln!(
            err,
            "{tag} (K,K',N)=({},{},{}) B={} q={}: {} scenarios, M={} worst_load={} formula={} failures={} {}",
            p.k,
            p.kp,
            p.n,
            p.b,
            p.q(),
            r.scenarios_checked,
            rational::format(&r.memory),
            rational::format(&r.worst_load),
            rational::format(&r.formula_load),
            r.decode_failures.len(),
            if r.matches { "MATCH" } else { "MISMATCH" }
        );
        if let Some(f) = r.decode_failures.first() {
            let _ = writeln!(
                err,
                "  first failure: {} user {} (scheme decoder {}, generic decoder {}, rank test {})",
                f.scenario,
                f.user,
                ok_word(f.fast_ok),
                ok_word(f.generic_ok),
                ok_word(f.rank_ok)
            );
        }
        if !r.matches {
            code = 1;
        }
        json.push(serde_json::to_value(&r).expect("serializable"));
    }
    let mut text = serde_json::to_string_pretty(&json).expect("serializable");
    text.push('\n');
    write_output(c, &text, out)?;
    Ok(code)
}

fn ok_word(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "failed"
    }
}

pub const CSV_HEADER: [&str; 7] = ["scheme", "M_num", "M_den", "R_num", "R_den", "M_decimal", "R_decimal"];

/// One CSV row of a curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveRow {
    pub curve: String,
    pub point: TradeoffPoint,
}

fn csv_text(rows: &[CurveRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        let (m, r) = (&row.point.m, &row.point.r);
        w.write_record([
            row.curve.clone(),
            m.numer().to_string(),
            m.denom().to_string(),
            r.numer().to_string(),
            r.denom().to_string(),
            rational::to_decimal(m, 6),
            rational::to_decimal(r, 6),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
}

/// Reads CSV produced by `tradeoff` or `bounds`; the integer columns are authoritative.
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| Error::InvalidParams(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::InvalidParams(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::InvalidParams(e.to_string()))?;
        let frac = |i: usize| -> Result<Rational> {
            rational::parse(&format!("{}/{}", &rec[i], &rec[i + 1]))
                .ok_or_else(|| Error::InvalidParams(format!("bad rational in row {rec:?}")))
        };
        rows.push(CurveRow {
            curve: rec[0].to_string(),
            point: TradeoffPoint::new(frac(1)?, frac(3)?),
        });
    }
    Ok(rows)
}

fn sampled(curve: &str, ms: &[Rational], f: impl Fn(&Rational) -> Result<Rational>) -> Result<Vec<CurveRow>> {
    ms.iter()
        .map(|m| {
            Ok(CurveRow {
                curve: curve.to_string(),
                point: TradeoffPoint::new(m.clone(), f(m)?),
            })
        })
        .collect()
}

fn breakpoints(curve: &str, pts: &[TradeoffPoint]) -> Result<Vec<CurveRow>> {
    Ok(lower_convex_envelope(pts)?
        .breakpoints()
        .iter()
        .map(|p| CurveRow {
            curve: curve.to_string(),
            point: p.clone(),
        })
        .collect())
}

/// Envelope breakpoints per scheme, their union, and the converse and
/// decentralized curves on the grid.
pub fn tradeoff_rows(c: &RunConfig) -> Result<Vec<CurveRow>> {
    validate(c)?;
    let mut rows = Vec::new();
    let mut union = Vec::new();
    for kind in schemes_or_default(c) {
        if kind.admissible_t(c.k, c.kp, c.n).is_empty() {
            return Err(inadmissible(kind, c));
        }
        let pts = bounds::achievable_points(kind, c.k, c.kp, c.n)?;
        rows.extend(breakpoints(kind.name(), &pts)?);
        union.extend(pts);
    }
    rows.extend(breakpoints("envelope", &union)?);
    let ms = grid(&zero(), &int(c.n as i64), c.grid);
    let yma = YmaConverse::new(c.n, c.kp, c.alpha_steps)?;
    rows.extend(sampled("converse", &ms, |m| best_converse(m, c.n, c.kp, &yma))?);
    rows.extend(sampled("decentralized", &ms, |m| decentralized_load(m, c.n, c.kp))?);
    Ok(rows)
}

pub fn cmd_tradeoff(c: &RunConfig) -> Result<String> {
    Ok(csv_text(&tradeoff_rows(c)?))
}

/// Every converse that applies at `(K′, N)`, on the grid.
pub fn bounds_rows(c: &RunConfig) -> Result<Vec<CurveRow>> {
    validate(c)?;
    let ms = grid(&zero(), &int(c.n as i64), c.grid);
    let mut rows = sampled("cutset", &ms, |m| cutset_bound(m, c.n, c.kp))?;
    if c.kp == 2 && c.n == 2 {
        rows.extend(sampled("optimal_2x2", &ms, optimal_2x2)?);
    }
    if c.kp == 2 && c.n >= 3 {
        rows.extend(sampled("optimal_2user", &ms, |m| optimal_2user(m, c.n))?);
    }
    let yma = YmaConverse::new(c.n, c.kp, c.alpha_steps)?;
    rows.extend(sampled("yma_converse", &ms, |m| yma.eval(m))?);
    Ok(rows)
}

pub fn cmd_bounds(c: &RunConfig) -> Result<String> {
    Ok(csv_text(&bounds_rows(c)?))
}

fn cmd_gap(c: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    validate(c)?;
    let g = gap_certificate(c.k, c.kp, c.n, c.grid, c.alpha_steps)?;
    let line = format!(
        "max_ratio={} bound=2.00884 ok={}\n",
        rational::to_decimal(&g.max_ratio, 6),
        g.ok
    );
    write_output(c, &line, out)?;
    Ok(if g.ok { 0 } else { 1 })
}
