//! Run orchestration behind the command-line subcommands.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::background::BackgroundModel;
use crate::certifier::{self, CertificateReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::{fi_residual, make_initial_data, Evolver, Family, InitialDataSpec, ModeState};
use crate::superenergy::{pairwise_sum, DerivedModeFields, ModeIntegrals, SliceDiagnostics};

pub const CSV_HEADER: &str =
    "t,E_xi,E_xi_Aq,bulk_deg_beta,bulk_Z,cumulative_bulk,constraint_residual,fi_residual";

/// `72/5`, the Morawetz constant.
pub const MORAWETZ_BOUND: f64 = 14.4;

/// Levels kept per mode for the Fackerell–Ipser residual.
const FI_LEVELS: usize = 5;

/// Several modes advanced in lockstep on one background, with RK-weighted
/// time integrals of the bulk and boundary-flux rates.
pub struct Simulation<'a> {
    bg: &'a BackgroundModel,
    states: Vec<ModeState>,
    evolvers: BTreeMap<u32, Evolver<'a>>,
    history: Vec<VecDeque<ModeState>>,
    /// Time integrals of the rates since `t = 0`.
    pub integrated: ModeIntegrals,
    /// Slice integrals of the state at the start of the last step.
    pub last_start: ModeIntegrals,
}

impl<'a> Simulation<'a> {
    pub fn new(bg: &'a BackgroundModel, states: Vec<ModeState>, cfl: f64) -> Result<Self> {
        let mut evolvers = BTreeMap::new();
        for s in &states {
            s.validate(bg)?;
            if !evolvers.contains_key(&s.mode.l) {
                evolvers.insert(s.mode.l, Evolver::new(bg, s.mode.l)?.with_cfl(cfl)?);
            }
        }
        let history = states.iter().map(|s| VecDeque::from([s.clone()])).collect();
        Ok(Self {
            bg,
            states,
            evolvers,
            history,
            integrated: ModeIntegrals::default(),
            last_start: ModeIntegrals::default(),
        })
    }

    pub fn states(&self) -> &[ModeState] {
        &self.states
    }

    pub fn time(&self) -> f64 {
        self.states.first().map_or(0.0, |s| s.t)
    }

    pub fn max_dt(&self) -> f64 {
        self.evolvers.values().map(|e| e.max_dt()).fold(f64::INFINITY, f64::min)
    }

    /// One RK4 step of every mode; modes run in parallel, and their
    /// contributions are reduced in mode order.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let bg = self.bg;
        let evolvers = &self.evolvers;
        let results: Vec<Result<(ModeState, ModeIntegrals, ModeIntegrals)>> = self
            .states
            .par_iter()
            .map(|s| {
                let ev = &evolvers[&s.mode.l];
                let mut acc = ModeIntegrals::default();
                let mut start = None;
                let mut failure = None;
                let next = ev.step_observed(s, dt, |stage, w| match ModeIntegrals::new(stage, bg) {
                    Ok(m) => {
                        if start.is_none() {
                            start = Some(m);
                        }
                        acc.add(&m.scaled(w));
                    }
                    Err(e) => failure = Some(e),
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                Ok((next, acc, start.unwrap_or_default()))
            })
            .collect();
        let mut rates = Vec::with_capacity(results.len());
        let mut starts = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            let (next, acc, start) = r?;
            self.states[i] = next;
            let h = &mut self.history[i];
            h.push_back(self.states[i].clone());
            if h.len() > FI_LEVELS {
                h.pop_front();
            }
            rates.push(acc);
            starts.push(start);
        }
        self.integrated.add(&ModeIntegrals::sum(&rates));
        self.last_start = ModeIntegrals::sum(&starts);
        Ok(())
    }

    pub fn diagnostics(&self) -> Result<SliceDiagnostics> {
        SliceDiagnostics::new(&self.states, self.bg)
    }

    /// Root-sum-square of the per-mode residuals; `None` when no radiative
    /// mode is present or fewer than five levels are stored.
    pub fn fi_residual(&self) -> Result<Option<f64>> {
        let mut squares = Vec::new();
        for h in &self.history {
            if h.len() < FI_LEVELS {
                return Ok(None);
            }
            let levels: Vec<ModeState> = h.iter().cloned().collect();
            if let Some(v) = fi_residual(&levels, self.bg)? {
                squares.push(v * v);
            }
        }
        if squares.is_empty() {
            return Ok(None);
        }
        Ok(Some(pairwise_sum(&squares).sqrt()))
    }
}

/// Step size that divides `cadence` evenly and respects the CFL cap.
pub fn step_size(max_dt: f64, cadence: f64) -> (f64, usize) {
    let per_output = (cadence / max_dt).ceil().max(1.0) as usize;
    (cadence / per_output as f64, per_output)
}

/// One row of the time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRow {
    pub diagnostics: SliceDiagnostics,
    pub cumulative_bulk: f64,
    pub fi_residual: Option<f64>,
}

impl SliceRow {
    pub fn csv_line(&self) -> String {
        let d = &self.diagnostics;
        let fi = self.fi_residual.map_or("nan".to_string(), |v| format!("{v:.16e}"));
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            d.t, d.e_xi, d.e_xi_aq, d.bulk_deg_beta, d.bulk_z, self.cumulative_bulk, d.constraint_residual, fi
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSummary {
    pub rows: Vec<SliceRow>,
    pub e_xi_initial: f64,
    /// Cumulative Morawetz bulk over `E_ξ(0)`; zero when `E_ξ(0) = 0`.
    pub morawetz_ratio: f64,
    pub max_constraint: f64,
    /// `|E_ξ(t) - E_ξ(0) + ∫ flux| / E_ξ(0)` at the final slice.
    pub energy_drift: f64,
    /// `|E_ξ+A,q(t) - E_ξ+A,q(0) + ∫ (flux + bulk)| / E_ξ(0)` at the final slice.
    pub flux_balance: f64,
    pub min_aq_ratio: f64,
    pub max_aq_ratio: f64,
    /// Largest per-step relative increase of `E_ξ+A,q`.
    pub max_aq_increase: f64,
    /// Violated invariants, empty on success.
    pub violations: Vec<String>,
}

/// Evolves `spec` on `bg` up to `t_final`, recording a row every `cadence`.
pub fn evolve(
    bg: &BackgroundModel,
    spec: &InitialDataSpec,
    t_final: f64,
    cadence: f64,
    cfl: f64,
) -> Result<EvolveSummary> {
    let states = make_initial_data(spec, bg)?;
    let mut sim = Simulation::new(bg, states, cfl)?;
    let (dt, per_output) = step_size(sim.max_dt(), cadence);
    let steps = (t_final / dt).round() as usize;

    let first = sim.diagnostics()?;
    let e0 = first.e_xi;
    let aq0 = first.e_xi_aq;
    let mut rows = vec![SliceRow {
        diagnostics: first,
        cumulative_bulk: 0.0,
        fi_residual: None,
    }];
    let mut prev_aq: Option<f64> = None;
    let mut max_increase: f64 = 0.0;
    for k in 1..=steps {
        sim.step(dt)?;
        let start_aq = sim.last_start.e_xi + sim.last_start.e_p;
        if let Some(p) = prev_aq {
            if p.abs() > 0.0 {
                max_increase = max_increase.max((start_aq - p) / p.abs());
            }
        }
        prev_aq = Some(start_aq);
        if k % per_output == 0 || k == steps {
            let d = sim.diagnostics()?;
            if let Some(p) = prev_aq {
                if p.abs() > 0.0 {
                    max_increase = max_increase.max((d.e_xi_aq - p) / p.abs());
                }
            }
            let cumulative = sim.integrated.deg_beta + sim.integrated.z_weighted;
            rows.push(SliceRow {
                diagnostics: d,
                cumulative_bulk: cumulative,
                fi_residual: sim.fi_residual()?,
            });
        }
    }
    Ok(summarize(rows, e0, aq0, &sim, max_increase))
}

fn summarize(rows: Vec<SliceRow>, e0: f64, aq0: f64, sim: &Simulation, max_increase: f64) -> EvolveSummary {
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    let last = rows.last().expect("at least the initial row");
    let morawetz_ratio = if e0 > 0.0 { last.cumulative_bulk / e0 } else { 0.0 };
    let mut max_constraint: f64 = 0.0;
    let (mut min_r, mut max_r) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut violations = Vec::new();
    for row in &rows {
        let d = &row.diagnostics;
        max_constraint = max_constraint.max(d.constraint_residual);
        if d.e_xi < 0.0 {
            violations.push(format!("E_xi negative at t = {}", d.t));
        }
        if d.e_xi > 0.0 {
            let ratio = d.e_xi_aq / d.e_xi;
            min_r = min_r.min(ratio);
            max_r = max_r.max(ratio);
        }
    }
    let total = &sim.integrated;
    let d = &last.diagnostics;
    let energy_drift = (d.e_xi - e0 + total.flux_xi).abs() / scale;
    let flux_balance = (d.e_xi_aq - aq0 + total.flux_aq + total.divp).abs() / scale;
    if min_r.is_finite() && (min_r < 0.1 * (1.0 - 1e-8) || max_r > 1.9 * (1.0 + 1e-8)) {
        violations.push(format!("E_xi_Aq / E_xi left [0.1, 1.9]: range [{min_r}, {max_r}]"));
    }
    if morawetz_ratio > MORAWETZ_BOUND {
        violations.push(format!("Morawetz ratio {morawetz_ratio} exceeds 72/5"));
    }
    EvolveSummary {
        rows,
        e_xi_initial: e0,
        morawetz_ratio,
        max_constraint,
        energy_drift,
        flux_balance,
        min_aq_ratio: if min_r.is_finite() { min_r } else { 1.0 },
        max_aq_ratio: if max_r.is_finite() { max_r } else { 1.0 },
        max_aq_increase: max_increase,
        violations,
    }
}

pub fn background_for(cfg: &RunConfig) -> Result<BackgroundModel> {
    BackgroundModel::new(cfg.mass, cfg.r_star_min, cfg.r_star_max, cfg.n_points)
}

pub fn write_csv(path: &Path, rows: &[SliceRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(f, "{}", r.csv_line())?;
    }
    f.flush()?;
    Ok(())
}

/// `evolve` subcommand: time series CSV plus a text summary.
pub fn run_evolve(cfg: &RunConfig, out_dir: &Path) -> Result<EvolveSummary> {
    let bg = background_for(cfg)?;
    let summary = evolve(&bg, &cfg.initial_data(), cfg.t_final, cfg.output_every, cfg.cfl)?;
    std::fs::create_dir_all(out_dir)?;
    write_csv(&out_dir.join("evolve.csv"), &summary.rows)?;
    Ok(summary)
}

pub fn format_summary(s: &EvolveSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "E_xi(0)                 {:.16e}", s.e_xi_initial);
    let _ = writeln!(out, "cumulative_bulk/E_xi(0) {:.16e} (bound 14.4)", s.morawetz_ratio);
    let _ = writeln!(out, "max constraint residual {:.16e}", s.max_constraint);
    let _ = writeln!(out, "E_xi flux-corrected drift {:.3e}", s.energy_drift);
    let _ = writeln!(out, "E_xi_Aq flux balance      {:.3e}", s.flux_balance);
    let _ = writeln!(out, "E_xi_Aq/E_xi range        [{:.6}, {:.6}]", s.min_aq_ratio, s.max_aq_ratio);
    let _ = writeln!(out, "max E_xi_Aq step increase {:.3e}", s.max_aq_increase);
    for v in &s.violations {
        let _ = writeln!(out, "VIOLATION: {v}");
    }
    out
}

/// Errors of one resolution in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionErrors {
    pub n_points: usize,
    pub energy_drift: f64,
    pub constraint: f64,
    pub fi_residual: f64,
    pub flux_balance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub levels: Vec<ResolutionErrors>,
    /// Per quantity, the orders between consecutive levels; `None` when a
    /// ratio is undefined (zero errors).
    pub orders: Vec<(&'static str, Vec<Option<f64>>)>,
    pub warnings: Vec<String>,
}

/// Constraint residuals below this are roundoff; the scheme preserves the
/// discrete constraint, so no order is claimed for them.
const CONSTRAINT_FLOOR: f64 = 1e-10;

fn order(coarse: f64, fine: f64, floor: f64) -> Option<f64> {
    (coarse > floor && fine > 0.0).then(|| (coarse / fine).log2())
}

/// Three nested resolutions `n`, `2(n-1)+1`, `4(n-1)+1`.
pub fn run_converge(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let mut levels = Vec::new();
    let mut warnings = Vec::new();
    for factor in [1, 2, 4] {
        let c = cfg.refined(factor);
        let bg = background_for(&c)?;
        if factor == 1 && c.family != Family::Coulomb && c.pulse_width < 4.0 * bg.dr_star {
            warnings.push(format!(
                "pulse width {} is under 4 grid spacings ({}); orders are not claimed",
                c.pulse_width,
                4.0 * bg.dr_star
            ));
        }
        let s = evolve(&bg, &c.initial_data(), c.t_final, c.t_final, c.cfl)?;
        let last = s.rows.last().expect("rows");
        levels.push(ResolutionErrors {
            n_points: c.n_points,
            energy_drift: s.energy_drift,
            constraint: last.diagnostics.constraint_residual,
            fi_residual: last.fi_residual.unwrap_or(0.0),
            flux_balance: s.flux_balance,
        });
    }
    let series = |get: fn(&ResolutionErrors) -> f64, floor: f64| -> Vec<Option<f64>> {
        levels.windows(2).map(|w| order(get(&w[0]), get(&w[1]), floor)).collect()
    };
    let orders = if warnings.is_empty() {
        vec![
            ("E_xi drift", series(|e| e.energy_drift, 0.0)),
            ("constraint", series(|e| e.constraint, CONSTRAINT_FLOOR)),
            ("fi_residual", series(|e| e.fi_residual, 0.0)),
            ("flux balance", series(|e| e.flux_balance, 0.0)),
        ]
    } else {
        Vec::new()
    };
    Ok(ConvergenceTable {
        levels,
        orders,
        warnings,
    })
}

pub fn format_convergence(t: &ConvergenceTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n_points,E_xi_drift,constraint,fi_residual,flux_balance");
    for l in &t.levels {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            l.n_points, l.energy_drift, l.constraint, l.fi_residual, l.flux_balance
        );
    }
    for (name, ords) in &t.orders {
        let text: Vec<String> = ords
            .iter()
            .map(|o| o.map_or("n/a".to_string(), |v| format!("{v:.3}")))
            .collect();
        let _ = writeln!(out, "order {name}: {}", text.join(" "));
    }
    for w in &t.warnings {
        let _ = writeln!(out, "WARNING: {w}");
    }
    out
}

/// Largest derived quantity seen while stepping a Coulomb field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombReport {
    pub steps: usize,
    pub max_theta: f64,
    pub max_beta: f64,
    pub max_energy: f64,
    pub max_bulk: f64,
    /// Largest change of `φ1` relative to its initial value.
    pub max_phi1_change: f64,
}

impl CoulombReport {
    pub fn worst(&self) -> f64 {
        self.max_theta.max(self.max_beta).max(self.max_energy).max(self.max_bulk)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.worst() <= tol && self.max_phi1_change <= tol
    }
}

pub fn run_coulomb_check(cfg: &RunConfig) -> Result<CoulombReport> {
    let (q_e, q_b) = if cfg.q_e == 0.0 && cfg.q_b == 0.0 { (1.0, 1.0) } else { (cfg.q_e, cfg.q_b) };
    let bg = background_for(cfg)?;
    let states = make_initial_data(&InitialDataSpec::coulomb(q_e, q_b), &bg)?;
    let initial = states[0].phi1.clone();
    let mut sim = Simulation::new(&bg, states, cfg.cfl)?;
    let dt = sim.max_dt();
    let mut rep = CoulombReport {
        steps: cfg.coulomb_steps,
        max_theta: 0.0,
        max_beta: 0.0,
        max_energy: 0.0,
        max_bulk: 0.0,
        max_phi1_change: 0.0,
    };
    for _ in 0..cfg.coulomb_steps {
        sim.step(dt)?;
        let m = &sim.last_start;
        rep.max_energy = rep.max_energy.max(m.e_xi.abs()).max((m.e_xi + m.e_p).abs());
        rep.max_bulk = rep.max_bulk.max(m.deg_beta.abs()).max(m.z_weighted.abs()).max(m.divp.abs());
    }
    let s = &sim.states()[0];
    let d = DerivedModeFields::new(s, &bg)?;
    let sup = |v: &[num_complex::Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    rep.max_theta = sup(&d.theta0).max(sup(&d.theta2));
    let b = &d.beta;
    rep.max_beta = [&b.t, &b.z, &b.l, &b.n, &b.m, &b.m_bar].iter().map(|v| sup(v)).fold(0.0, f64::max);
    let fin = sim.diagnostics()?;
    rep.max_energy = rep.max_energy.max(fin.e_xi.abs()).max(fin.e_xi_aq.abs());
    rep.max_bulk = rep.max_bulk.max(fin.bulk_deg_beta.abs()).max(fin.bulk_z.abs());
    rep.max_phi1_change = s
        .phi1
        .iter()
        .zip(&initial)
        .map(|(a, b)| (a - b).norm() / b.norm())
        .fold(0.0, f64::max);
    Ok(rep)
}

/// Maps library errors to process exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 2,
        _ => 1,
    }
}

/// `certify` subcommand: runs the corpus and writes `certify.txt` and
/// `certify.json` into `out_dir`.
pub fn run_certify(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<CertificateReport>> {
    let radius = certifier::interval::rat_from_f64(cfg.certify_radius)
        .ok_or_else(|| Error::config("certify_radius", "must be finite"))?;
    let reports = certifier::certify_corpus(radius, cfg.certify_depth)?;
    std::fs::create_dir_all(out_dir)?;
    let text: String = reports.iter().map(CertificateReport::to_text).collect();
    std::fs::write(out_dir.join("certify.txt"), &text)?;
    let json = serde_json::Value::Array(reports.iter().map(CertificateReport::to_json).collect());
    let body = serde_json::to_string_pretty(&json).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(out_dir.join("certify.json"), body + "\n")?;
    Ok(reports)
}
