//! Exact certification of radial inequalities on the exterior `r >= 2M`.
//!
//! All arithmetic is over the rationals, so a verdict does not depend on
//! floating point rounding. Units are `M = 1`.
//!
//! An inequality `e >= 0` is split into pieces on which every `abs` has
//! fixed sign. On each piece `e = N/D` exactly; the finite part `[2, R]` is
//! handled directly and the tail through `u = 1/r` on `[0, 1/R]`. Points where
//! `N` vanishes for all parameter values are found exactly and divided out,
//! and the quotient is shown to keep its sign by interval bisection.

mod corpus;
pub mod expr;
pub mod interval;
pub mod poly;
mod search;

use std::fmt;
use std::time::Instant;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
pub use corpus::{certify_corpus, corpus, CorpusItem};
pub use expr::{frac, int, konst, param, r, Expr, RatFunc};
pub use interval::{rat, rat_int, RatInterval, Rational};
pub use search::{Saturation, Witness};
use search::{infimum_enclosure, Search, Status};

/// Default radius `R` splitting the bounded part from the tail.
pub const DEFAULT_RADIUS: i64 = 1000;
/// Default bisection depth per box.
pub const DEFAULT_DEPTH: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `e >= 0`
    NonNegative,
    /// `e <= 0`
    NonPositive,
}

#[derive(Debug, Clone)]
pub struct Inequality {
    pub label: String,
    pub expr: Expr,
    pub relation: Relation,
}

impl Inequality {
    pub fn ge0(label: impl Into<String>, expr: Expr) -> Self {
        Self {
            label: label.into(),
            expr,
            relation: Relation::NonNegative,
        }
    }

    pub fn le0(label: impl Into<String>, expr: Expr) -> Self {
        Self {
            label: label.into(),
            expr,
            relation: Relation::NonPositive,
        }
    }

    /// The expression whose nonnegativity is claimed.
    pub fn normalized(&self) -> Expr {
        match self.relation {
            Relation::NonNegative => self.expr.clone(),
            Relation::NonPositive => -self.expr.clone(),
        }
    }
}

/// `r in [2M, R]` together with the tail `r >= R`, and an optional
/// parameter range.
#[derive(Debug, Clone)]
pub struct Domain {
    pub radius: Rational,
    pub param: Option<(Rational, Rational)>,
    /// Radii checked exactly for saturation in addition to those found by
    /// root isolation.
    pub hints: Vec<Rational>,
}

impl Domain {
    pub fn exterior(radius: Rational) -> Self {
        Self {
            radius,
            param: None,
            hints: vec![rat_int(2), rat_int(3)],
        }
    }

    pub fn with_param(mut self, lo: Rational, hi: Rational) -> Self {
        self.param = Some((lo, hi));
        self
    }

    fn describe(&self) -> String {
        let mut s = format!("r in [2M, {}M] and tail u = M/r in [0, 1/{}]", self.radius, self.radius);
        if let Some((a, b)) = &self.param {
            s.push_str(&format!(", c in [{a}, {b}]"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Failed,
    InconclusiveAtDepth,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::Failed => "failed",
            Verdict::InconclusiveAtDepth => "inconclusive-at-depth",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub label: String,
    pub verdict: Verdict,
    /// Enclosure of the infimum of the normalized expression.
    pub margin: (Option<Rational>, Option<Rational>),
    pub saturations: Vec<Saturation>,
    pub witness: Option<Witness>,
    pub inconclusive_box: Option<((f64, f64), (f64, f64))>,
    pub subdivisions: usize,
}

#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub id: String,
    pub description: String,
    pub domain: String,
    pub verdict: Verdict,
    pub margin: (Option<Rational>, Option<Rational>),
    pub saturations: Vec<Saturation>,
    pub subdivisions: usize,
    pub wall_time: f64,
    pub conditions: Vec<ConditionReport>,
}

fn combine_verdicts(v: impl IntoIterator<Item = Verdict>) -> Verdict {
    v.into_iter().fold(Verdict::Certified, |acc, x| match (acc, x) {
        (Verdict::Failed, _) | (_, Verdict::Failed) => Verdict::Failed,
        (Verdict::InconclusiveAtDepth, _) | (_, Verdict::InconclusiveAtDepth) => Verdict::InconclusiveAtDepth,
        _ => Verdict::Certified,
    })
}

/// Smaller of two optional values, ignoring a missing one.
fn min_opt(a: &Option<Rational>, b: &Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y).clone()),
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (None, None) => None,
    }
}

/// Certifies one inequality over the domain.
pub fn certify(ineq: &Inequality, domain: &Domain, depth: usize) -> Result<ConditionReport> {
    let e = ineq.normalized();
    if e.has_sqrt() {
        return Err(Error::Expression(format!("{}: sqrt is not supported by exact certification", ineq.label)));
    }
    let has_param = domain.param.is_some();
    if e.uses_param() && !has_param {
        return Err(Error::Expression(format!("{}: parameter used without a parameter range", ineq.label)));
    }
    let two = rat_int(2);
    let big_r = domain.radius.clone();
    if big_r <= rat_int(3) {
        return Err(Error::Domain("certification radius must exceed 3M".into()));
    }
    let (rsplits, csplits) = e.abs_breakpoints()?;
    if rsplits.iter().any(|z| z >= &big_r) {
        return Err(Error::Domain("abs breakpoints must lie below the certification radius".into()));
    }
    let mut rcuts = vec![two.clone()];
    rcuts.extend(rsplits.iter().filter(|z| **z > two).cloned());
    rcuts.push(big_r.clone());
    let (plo, phi) = domain.param.clone().unwrap_or_else(|| (Rational::zero(), Rational::zero()));
    let mut pcuts = vec![plo.clone()];
    pcuts.extend(csplits.iter().filter(|z| **z > plo && **z < phi).cloned());
    pcuts.push(phi.clone());
    let p_pieces: Vec<RatInterval> = pcuts.windows(2).map(|w| RatInterval::new(w[0].clone(), w[1].clone())).collect();

    let mut hints = domain.hints.clone();
    hints.extend(rsplits.iter().cloned());
    let mut report = ConditionReport {
        label: ineq.label.clone(),
        verdict: Verdict::Certified,
        margin: (None, None),
        saturations: Vec::new(),
        witness: None,
        inconclusive_box: None,
        subdivisions: 0,
    };
    let mut lows: Vec<Option<Rational>> = Vec::new();
    let mut highs: Vec<Option<Rational>> = Vec::new();

    let mut run = |report: &mut ConditionReport,
                   f: &RatFunc,
                   n: &BiPolyPair,
                   xs: &RatInterval,
                   ps: &RatInterval,
                   tail: bool,
                   hints: &[Rational]| {
        let mut s = Search::new(f, tail, has_param, depth);
        let status = s.segment(&n.0, &n.1, xs, ps, hints);
        report.subdivisions += s.subdivisions;
        report.saturations.extend(s.saturations);
        match status {
            Status::Ok => {}
            Status::Failed(w) => {
                report.verdict = Verdict::Failed;
                report.witness.get_or_insert(w);
            }
            Status::Inconclusive { r, param } => {
                if report.verdict == Verdict::Certified {
                    report.verdict = Verdict::InconclusiveAtDepth;
                    report.inconclusive_box = Some((r, param));
                }
            }
        }
        if report.verdict != Verdict::Failed {
            let k = tail.then(|| f.den.deg_x() as i64 - f.num.deg_x() as i64);
            let (lo, hi) = infimum_enclosure(&n.0, &n.1, xs, ps, k, 200);
            lows.push(lo);
            highs.push(hi);
        }
    };

    for p in &p_pieces {
        for w in rcuts.windows(2) {
            let xs = RatInterval::new(w[0].clone(), w[1].clone());
            let f = e.to_rational(&xs.mid(), &p.mid())?.cancel(&hints);
            let pair = BiPolyPair(f.num.clone(), f.den.clone());
            run(&mut report, &f, &pair, &xs, p, false, &hints);
        }
        let f = e.to_rational(&(&big_r * rat_int(2)), &p.mid())?.cancel(&hints);
        let pair = BiPolyPair(f.num.reversed(), f.den.reversed());
        let us = RatInterval::new(Rational::zero(), big_r.recip());
        run(&mut report, &f, &pair, &us, p, true, &[Rational::zero()]);
    }

    report.saturations.sort();
    report.saturations.dedup();
    // A saturation for all parameters makes per-parameter copies redundant.
    let all: Vec<Option<Rational>> = report
        .saturations
        .iter()
        .filter(|s| s.param.is_none())
        .map(|s| s.r.clone())
        .collect();
    report.saturations.retain(|s| s.param.is_none() || !all.contains(&s.r));
    if report.verdict != Verdict::Failed {
        let mut lo = lows.iter().fold(Some(None), |acc: Option<Option<Rational>>, v| {
            let acc = acc?;
            let v = v.clone()?;
            Some(Some(match acc {
                Some(a) if a < v => a,
                _ => v,
            }))
        });
        let mut hi = highs.iter().fold(None, |acc, v| min_opt(&acc, v));
        if !report.saturations.is_empty() {
            hi = Some(Rational::zero());
        }
        if report.verdict == Verdict::Certified {
            // Nonnegativity is proved, so the enclosure can be clipped at 0.
            let clipped = match lo.clone().flatten() {
                Some(v) if v.is_positive() => v,
                _ => Rational::zero(),
            };
            lo = Some(Some(clipped));
        }
        report.margin = (lo.flatten(), hi);
    }
    Ok(report)
}

struct BiPolyPair(poly::BiPoly, poly::BiPoly);

/// Certifies every condition of one named claim and merges the results.
pub fn certify_all(
    id: &str,
    description: &str,
    conditions: &[Inequality],
    domain: &Domain,
    depth: usize,
) -> Result<CertificateReport> {
    let start = Instant::now();
    let reports = conditions
        .iter()
        .map(|c| certify(c, domain, depth))
        .collect::<Result<Vec<_>>>()?;
    let verdict = combine_verdicts(reports.iter().map(|r| r.verdict));
    let lo = reports.iter().fold(Some(None), |acc: Option<Option<Rational>>, r| {
        let acc = acc?;
        let v = r.margin.0.clone()?;
        Some(Some(match acc {
            Some(a) if a < v => a,
            _ => v,
        }))
    });
    let hi = reports.iter().fold(None, |acc, r| min_opt(&acc, &r.margin.1));
    let mut saturations: Vec<Saturation> = reports.iter().flat_map(|r| r.saturations.clone()).collect();
    saturations.sort();
    saturations.dedup();
    Ok(CertificateReport {
        id: id.to_string(),
        description: description.to_string(),
        domain: domain.describe(),
        verdict,
        margin: if verdict == Verdict::Failed { (None, None) } else { (lo.flatten(), hi) },
        saturations,
        subdivisions: reports.iter().map(|r| r.subdivisions).sum(),
        wall_time: start.elapsed().as_secs_f64(),
        conditions: reports,
    })
}

fn next_toward(x: f64, up: bool) -> f64 {
    if x.is_nan() || x.is_infinite() {
        return x;
    }
    if x == 0.0 {
        return if up { f64::from_bits(1) } else { -f64::from_bits(1) };
    }
    let bits = x.to_bits();
    let grow = (x > 0.0) == up;
    f64::from_bits(if grow { bits + 1 } else { bits - 1 })
}

/// Outward `f64` rounding of a rational: below when `up` is false.
pub fn round_out(x: &Rational, up: bool) -> f64 {
    let f = interval::to_f64(x);
    match interval::rat_from_f64(f) {
        Some(e) if (up && &e < x) || (!up && &e > x) => next_toward(f, up),
        Some(_) => f,
        None => {
            if up {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

impl fmt::Display for Saturation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.r {
            Some(r) => write!(f, "r = {r} M")?,
            None => write!(f, "r = inf")?,
        }
        if let Some(c) = &self.param {
            write!(f, " (c = {c})")?;
        }
        Ok(())
    }
}

fn fmt_margin(m: &(Option<Rational>, Option<Rational>)) -> String {
    let lo = m.0.as_ref().map_or("-inf".to_string(), |v| format!("{:.6e}", round_out(v, false)));
    let hi = m.1.as_ref().map_or("n/a".to_string(), |v| format!("{:.6e}", round_out(v, true)));
    format!("[{lo}, {hi}]")
}

impl CertificateReport {
    /// One summary line followed by one indented line per condition.
    pub fn to_text(&self) -> String {
        let sats: Vec<String> = self.saturations.iter().map(ToString::to_string).collect();
        let mut s = format!(
            "{} {} margin={} saturation={{{}}} subdivisions={} time={:.3}s :: {}\n",
            self.id,
            self.verdict,
            fmt_margin(&self.margin),
            sats.join("; "),
            self.subdivisions,
            self.wall_time,
            self.description,
        );
        for c in &self.conditions {
            s.push_str(&format!("    {} {} margin={}", c.label, c.verdict, fmt_margin(&c.margin)));
            if !c.saturations.is_empty() {
                let sats: Vec<String> = c.saturations.iter().map(ToString::to_string).collect();
                s.push_str(&format!(" saturation={{{}}}", sats.join("; ")));
            }
            if let Some(w) = &c.witness {
                s.push_str(&format!(" witness r in [{0}, {0}]", w.r));
                if let Some(p) = &w.param {
                    s.push_str(&format!(" c = {p}"));
                }
                s.push_str(&format!(" value = {}", w.value));
            }
            if let Some((r, p)) = &c.inconclusive_box {
                s.push_str(&format!(" undecided box r in [{}, {}] c in [{}, {}]", r.0, r.1, p.0, p.1));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Cond<'a> {
            label: &'a str,
            verdict: Verdict,
            #[serde(rename = "margin-lo")]
            margin_lo: Option<f64>,
            #[serde(rename = "margin-hi")]
            margin_hi: Option<f64>,
            subdivisions: usize,
            witness: Option<String>,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            id: &'a str,
            verdict: Verdict,
            #[serde(rename = "margin-lo")]
            margin_lo: Option<f64>,
            #[serde(rename = "margin-hi")]
            margin_hi: Option<f64>,
            subdivisions: usize,
            description: &'a str,
            domain: &'a str,
            saturation: Vec<String>,
            #[serde(rename = "wall-time-s")]
            wall_time: f64,
            conditions: Vec<Cond<'a>>,
        }
        let out = Out {
            id: &self.id,
            verdict: self.verdict,
            margin_lo: self.margin.0.as_ref().map(|v| round_out(v, false)),
            margin_hi: self.margin.1.as_ref().map(|v| round_out(v, true)),
            subdivisions: self.subdivisions,
            description: &self.description,
            domain: &self.domain,
            saturation: self.saturations.iter().map(ToString::to_string).collect(),
            wall_time: self.wall_time,
            conditions: self
                .conditions
                .iter()
                .map(|c| Cond {
                    label: &c.label,
                    verdict: c.verdict,
                    margin_lo: c.margin.0.as_ref().map(|v| round_out(v, false)),
                    margin_hi: c.margin.1.as_ref().map(|v| round_out(v, true)),
                    subdivisions: c.subdivisions,
                    witness: c.witness.as_ref().map(|w| format!("r = {}, value = {}", w.r, w.value)),
                })
                .collect(),
        };
        serde_json::to_value(out).expect("report serializes")
    }
}

/// Exact value of the normalized expression through the tail substitution,
/// `u^(deg D - deg N) N~(u) / D~(u)` at `u = 1/r`.
pub fn tail_value(ineq: &Inequality, radius: &Rational, r_value: &Rational, c: &Rational) -> Result<Rational> {
    let e = ineq.normalized();
    let f = e.to_rational(&(radius * rat_int(2)), c)?.cancel(&[rat_int(2), rat_int(3)]);
    let u = r_value.recip();
    let k = f.den.deg_x() as i64 - f.num.deg_x() as i64;
    let q = f.num.reversed().eval(&u, c) / f.den.reversed().eval(&u, c);
    let w = if k >= 0 {
        num_traits::pow(u, k as usize)
    } else {
        num_traits::pow(r_value.clone(), (-k) as usize)
    };
    Ok(q * w)
}
