//! Per-mode evolution of the three NP scalars on the tortoise grid.
//!
//! With `k = f^(1/2) sqrt(l(l+1)) / r`, `a = f/r + M/r^2` and `D = d/dr*`
//! the evolved system is
//!
//! ```text
//! ∂t φ0 =  D φ0 + a φ0 - k φ1
//! ∂t φ2 = -D φ2 - a φ2 + k φ1
//! ∂t φ1 =  k (φ0 - φ2) / 2
//! ```
//!
//! and the leftover radial relation
//! `C = r^-2 D(r^2 φ1) - k (φ0 + φ2) / 2` is monitored, not imposed.
//! It is preserved by the continuum flow, and `u = r^2 φ1` solves
//! `∂t² u - D² u + f l(l+1)/r² u = 0`.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::background::BackgroundModel;
use crate::error::{Error, Result};
use crate::modes::{gauss_legendre, ModeIndex};
use crate::sbp::{Sbp42, MIN_POINTS};

pub const DEFAULT_CFL: f64 = 0.25;
pub const MAX_CFL: f64 = 0.5;

/// Below this value of `r^2 k` the initial data are not projected onto the
/// discrete constraint (the division would amplify roundoff).
const PROJECTION_FLOOR: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One `(l, m)` harmonic of the field at a single time. The spin weight
/// carried by `mode` is that of `φ1` (zero); `φ0` and `φ2` have spin
/// `+1` and `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub mode: ModeIndex,
    pub t: f64,
    pub phi0: Vec<Complex64>,
    pub phi1: Vec<Complex64>,
    pub phi2: Vec<Complex64>,
}

impl ModeState {
    pub fn zeros(l: u32, m: i32, n: usize) -> Result<Self> {
        Ok(Self {
            mode: ModeIndex::new(l, m, 0)?,
            t: 0.0,
            phi0: vec![ZERO; n],
            phi1: vec![ZERO; n],
            phi2: vec![ZERO; n],
        })
    }

    /// Stationary Coulomb field `φ1 = (q_E + i q_B) / r^2` in the `l = 0`
    /// mode.
    pub fn coulomb(q_e: f64, q_b: f64, bg: &BackgroundModel) -> Self {
        let q = Complex64::new(q_e, q_b);
        let mut s = Self::zeros(0, 0, bg.n_points).expect("l = 0 is always valid");
        for (p, r) in s.phi1.iter_mut().zip(&bg.r) {
            *p = q / (r * r);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.phi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi1.is_empty()
    }

    pub fn l(&self) -> u32 {
        self.mode.l
    }

    pub fn validate(&self, bg: &BackgroundModel) -> Result<()> {
        let n = bg.n_points;
        if self.phi0.len() != n || self.phi1.len() != n || self.phi2.len() != n {
            return Err(Error::Shape(format!(
                "mode ({}, {}) arrays have lengths {}/{}/{}, grid has {n}",
                self.mode.l,
                self.mode.m,
                self.phi0.len(),
                self.phi1.len(),
                self.phi2.len()
            )));
        }
        if self.mode.l == 0 && (self.phi0.iter().chain(&self.phi2)).any(|z| *z != ZERO) {
            return Err(Error::Shape(
                "l = 0 mode has nonzero extreme components".into(),
            ));
        }
        Ok(())
    }

    fn axpy(&self, h: f64, d: &Derivatives) -> Self {
        let comb = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
            x.iter().zip(y).map(|(a, b)| a + b * h).collect()
        };
        Self {
            mode: self.mode,
            t: self.t + h,
            phi0: comb(&self.phi0, &d.phi0),
            phi1: comb(&self.phi1, &d.phi1),
            phi2: comb(&self.phi2, &d.phi2),
        }
    }
}

/// Time derivatives of the three scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub phi0: Vec<Complex64>,
    pub phi1: Vec<Complex64>,
    pub phi2: Vec<Complex64>,
}

impl Derivatives {
    fn zeros(n: usize) -> Self {
        Self {
            phi0: vec![ZERO; n],
            phi1: vec![ZERO; n],
            phi2: vec![ZERO; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Coulomb,
    Pulse,
    Mixed,
}

/// Amplitudes of the Gaussian extreme components in one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseMode {
    pub l: u32,
    pub m: i32,
    pub amplitude_phi0: Complex64,
    pub amplitude_phi2: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSpec {
    pub family: Family,
    pub q_e: f64,
    pub q_b: f64,
    pub center: f64,
    pub width: f64,
    pub modes: Vec<PulseMode>,
}

impl InitialDataSpec {
    pub fn coulomb(q_e: f64, q_b: f64) -> Self {
        Self {
            family: Family::Coulomb,
            q_e,
            q_b,
            center: 0.0,
            width: 1.0,
            modes: Vec::new(),
        }
    }

    fn gaussian(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        (-0.5 * z * z).exp()
    }

    fn validate(&self, bg: &BackgroundModel) -> Result<()> {
        if self.family == Family::Coulomb {
            return Ok(());
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InitialData(format!("pulse width must be positive, got {}", self.width)));
        }
        let margin = 4.0 * self.width;
        if self.center - margin < bg.r_star_min || self.center + margin > bg.r_star_max {
            return Err(Error::InitialData(format!(
                "pulse at r* = {} with width {} is closer than 4 widths to the grid edge [{}, {}]",
                self.center, self.width, bg.r_star_min, bg.r_star_max
            )));
        }
        for p in &self.modes {
            if p.l == 0 {
                return Err(Error::InitialData("pulse modes need l >= 1".into()));
            }
            ModeIndex::new(p.l, p.m, 0)?;
        }
        Ok(())
    }
}

/// Builds one state per mode. Charges live only in the `l = 0` Coulomb
/// mode; every pulse mode takes `r^2 φ1 = 0` at `r*_max`, and its middle
/// component comes from integrating the radial constraint inward.
pub fn make_initial_data(spec: &InitialDataSpec, bg: &BackgroundModel) -> Result<Vec<ModeState>> {
    spec.validate(bg)?;
    let mut out = Vec::new();
    if matches!(spec.family, Family::Coulomb | Family::Mixed) {
        out.push(ModeState::coulomb(spec.q_e, spec.q_b, bg));
    }
    if matches!(spec.family, Family::Pulse | Family::Mixed) {
        for p in &spec.modes {
            out.push(pulse_mode(spec, p, bg)?);
        }
    }
    Ok(out)
}

fn pulse_mode(spec: &InitialDataSpec, p: &PulseMode, bg: &BackgroundModel) -> Result<ModeState> {
    let n = bg.n_points;
    let mut state = ModeState::zeros(p.l, p.m, n)?;
    let (a0, a2) = (p.amplitude_phi0, p.amplitude_phi2);
    let root = (f64::from(p.l) * f64::from(p.l + 1)).sqrt();

    // u' = r^2 k (φ0 + φ2) / 2, integrated cell by cell with Gauss–Legendre
    // nodes from the outer edge where u = 0.
    let (nodes, weights) = gauss_legendre(6);
    let mut u = vec![ZERO; n];
    for i in (0..n - 1).rev() {
        let (x0, x1) = (bg.r_star[i], bg.r_star[i + 1]);
        let half = 0.5 * (x1 - x0);
        let mut cell = 0.0;
        for (s, w) in nodes.iter().zip(&weights) {
            let x = x0 + half * (1.0 + s);
            let g = spec.gaussian(x);
            if g == 0.0 {
                continue;
            }
            let pt = bg.geometry.invert_tortoise_point(x)?;
            let sqrt_f = (pt.excess / pt.r).sqrt();
            cell += w * 0.5 * pt.r * sqrt_f * root * g;
        }
        u[i] = u[i + 1] - (a0 + a2) * (cell * half);
    }

    let op = Sbp42::new(n, bg.dr_star);
    let mut du = vec![ZERO; n];
    op.apply(&u, &mut du);
    let k = bg.coupling(p.l);
    for i in 0..n {
        let g = spec.gaussian(bg.r_star[i]);
        let diff = (a0 - a2) * g;
        let r2k = bg.r[i] * bg.r[i] * k[i];
        let sum = if r2k > PROJECTION_FLOOR {
            du[i] * (2.0 / r2k)
        } else {
            (a0 + a2) * g
        };
        state.phi0[i] = 0.5 * (sum + diff);
        state.phi2[i] = 0.5 * (sum - diff);
        state.phi1[i] = u[i] / (bg.r[i] * bg.r[i]);
    }
    Ok(state)
}

/// Semi-discrete right-hand side with cached radial coefficients.
///
/// The scheme works with the rescaled fields `ψ0 = r f^(1/2) φ0`,
/// `u = r^2 φ1` and `ψ2 = r f^(1/2) φ2`, in which the system reads
///
/// ```text
/// ∂t ψ0 =  D ψ0 - w u
/// ∂t ψ2 = -D ψ2 + w u
/// ∂t u  =  s (ψ0 - ψ2) / 2
/// ```
///
/// with `s = sqrt(l(l+1))` and `w = s f / r^2`. The transport terms carry no
/// zeroth-order growth, so the SBP energy
/// `Σ H_i (|ψ0|^2 + |ψ2|^2 + 2 f |u|^2 / r^2)` can only decrease. In the
/// unscaled variables the horizon growth of `φ0` feeds spurious modes.
#[derive(Debug, Clone)]
pub struct Evolver<'a> {
    bg: &'a BackgroundModel,
    op: Sbp42,
    l: u32,
    root: f64,
    /// `r f^(1/2)`.
    scale: Vec<f64>,
    r2: Vec<f64>,
    /// `s f / r^2`.
    w: Vec<f64>,
    cfl: f64,
}

impl<'a> Evolver<'a> {
    pub fn new(bg: &'a BackgroundModel, l: u32) -> Result<Self> {
        if bg.n_points < MIN_POINTS {
            return Err(Error::Shape(format!("grid too small for the stencil: {}", bg.n_points)));
        }
        let root = (f64::from(l) * f64::from(l + 1)).sqrt();
        let r2: Vec<f64> = bg.r.iter().map(|r| r * r).collect();
        Ok(Self {
            bg,
            op: Sbp42::new(bg.n_points, bg.dr_star),
            l,
            root,
            scale: bg.r.iter().zip(&bg.sqrt_lapse).map(|(r, s)| r * s).collect(),
            w: bg.lapse.iter().zip(&r2).map(|(f, r2)| root * f / r2).collect(),
            r2,
            cfl: DEFAULT_CFL,
        })
    }

    pub fn with_cfl(mut self, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= MAX_CFL) {
            return Err(Error::config("cfl", format!("must lie in (0, {MAX_CFL}], got {cfl}")));
        }
        self.cfl = cfl;
        Ok(self)
    }

    pub fn background(&self) -> &BackgroundModel {
        self.bg
    }

    pub fn operator(&self) -> &Sbp42 {
        &self.op
    }

    pub fn cfl(&self) -> f64 {
        self.cfl
    }

    /// Largest admissible step.
    pub fn max_dt(&self) -> f64 {
        self.cfl * self.bg.dr_star
    }

    /// `(φ0, φ1, φ2)` to `(ψ0, u, ψ2)`, stored in the same slots.
    fn rescale(&self, s: &ModeState) -> ModeState {
        let mut out = s.clone();
        for i in 0..s.len() {
            out.phi0[i] *= self.scale[i];
            out.phi1[i] *= self.r2[i];
            out.phi2[i] *= self.scale[i];
        }
        out
    }

    fn unscale(&self, mut s: ModeState) -> ModeState {
        for i in 0..s.len() {
            s.phi0[i] /= self.scale[i];
            s.phi1[i] /= self.r2[i];
            s.phi2[i] /= self.scale[i];
        }
        s
    }

    fn rescaled_rhs(&self, s: &ModeState) -> Derivatives {
        let n = s.len();
        let mut d = Derivatives::zeros(n);
        self.op.apply(&s.phi0, &mut d.phi0);
        self.op.apply(&s.phi2, &mut d.phi2);
        for i in 0..n {
            let wu = self.w[i] * s.phi1[i];
            d.phi0[i] -= wu;
            d.phi2[i] = wu - d.phi2[i];
            d.phi1[i] = 0.5 * self.root * (s.phi0[i] - s.phi2[i]);
        }
        // Characteristic penalties: nothing enters through either edge.
        let tau = 1.0 / self.op.boundary_weight();
        d.phi0[n - 1] -= tau * s.phi0[n - 1];
        d.phi2[0] -= tau * s.phi2[0];
        d
    }

    /// `∂t (φ0, φ1, φ2)` of the semi-discrete scheme.
    pub fn rhs(&self, s: &ModeState) -> Derivatives {
        if self.l == 0 {
            return Derivatives::zeros(s.len());
        }
        let mut d = self.rescaled_rhs(&self.rescale(s));
        for i in 0..s.len() {
            d.phi0[i] /= self.scale[i];
            d.phi1[i] /= self.r2[i];
            d.phi2[i] /= self.scale[i];
        }
        d
    }

    /// One RK4 step.
    pub fn step(&self, s: &ModeState, dt: f64) -> Result<ModeState> {
        self.step_observed(s, dt, |_, _| {})
    }

    /// One RK4 step; `observe(stage, weight)` is called on each stage state
    /// with its quadrature weight, so that rates integrated with these
    /// weights share the step's accuracy.
    pub fn step_observed<F>(&self, s: &ModeState, dt: f64, mut observe: F) -> Result<ModeState>
    where
        F: FnMut(&ModeState, f64),
    {
        self.check_dt(dt)?;
        if s.mode.l != self.l {
            return Err(Error::Shape(format!("evolver built for l = {}, state has l = {}", self.l, s.mode.l)));
        }
        if s.len() != self.bg.n_points {
            return Err(Error::Shape(format!("state has {} points, grid {}", s.len(), self.bg.n_points)));
        }
        if self.l == 0 {
            observe(s, dt);
            let mut next = s.clone();
            next.t += dt;
            return Ok(next);
        }
        let y1 = self.rescale(s);
        let k1 = self.rescaled_rhs(&y1);
        observe(s, dt / 6.0);
        let y2 = y1.axpy(0.5 * dt, &k1);
        let k2 = self.rescaled_rhs(&y2);
        observe(&self.unscale(y2), dt / 3.0);
        let y3 = y1.axpy(0.5 * dt, &k2);
        let k3 = self.rescaled_rhs(&y3);
        observe(&self.unscale(y3), dt / 3.0);
        let y4 = y1.axpy(dt, &k3);
        let k4 = self.rescaled_rhs(&y4);
        observe(&self.unscale(y4), dt / 6.0);

        let mut next = y1;
        next.t = s.t + dt;
        let c = dt / 6.0;
        for i in 0..s.len() {
            next.phi0[i] += c * (k1.phi0[i] + 2.0 * (k2.phi0[i] + k3.phi0[i]) + k4.phi0[i]);
            next.phi1[i] += c * (k1.phi1[i] + 2.0 * (k2.phi1[i] + k3.phi1[i]) + k4.phi1[i]);
            next.phi2[i] += c * (k1.phi2[i] + 2.0 * (k2.phi2[i] + k3.phi2[i]) + k4.phi2[i]);
        }
        Ok(self.unscale(next))
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        let limit = self.max_dt();
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt,
                limit,
                cfl: self.cfl,
                dr: self.bg.dr_star,
            });
        }
        Ok(())
    }
}

/// `∂t (φ0, φ1, φ2)` for a single state.
pub fn reduced_rhs(state: &ModeState, bg: &BackgroundModel) -> Result<Derivatives> {
    state.validate(bg)?;
    Ok(Evolver::new(bg, state.mode.l)?.rhs(state))
}

/// Pointwise constraint `C = r^-2 D(r^2 φ1) - k (φ0 + φ2) / 2`.
pub fn constraint_field(state: &ModeState, bg: &BackgroundModel) -> Result<Vec<Complex64>> {
    state.validate(bg)?;
    let n = bg.n_points;
    let op = Sbp42::new(n, bg.dr_star);
    let u: Vec<Complex64> = state.phi1.iter().zip(&bg.r).map(|(p, r)| p * (r * r)).collect();
    let mut du = vec![ZERO; n];
    op.apply(&u, &mut du);
    let k = bg.coupling(state.mode.l);
    Ok((0..n)
        .map(|i| du[i] / (bg.r[i] * bg.r[i]) - 0.5 * k[i] * (state.phi0[i] + state.phi2[i]))
        .collect())
}

/// Grid `L2` norm of the constraint, `(Σ H_i |C_i|^2)^(1/2)`.
pub fn constraint_residual(state: &ModeState, bg: &BackgroundModel) -> Result<f64> {
    let c = constraint_field(state, bg)?;
    let op = Sbp42::new(bg.n_points, bg.dr_star);
    Ok(weighted_norm(&op, |i| c[i].norm_sqr()))
}

/// Scale against which constraint and evolution errors are measured:
/// `(Σ H_i (f|φ0|^2 + |φ1|^2 + f|φ2|^2))^(1/2)`. The lapse weights keep the
/// horizon growth of `φ0` in the symmetric frame from dominating.
pub fn data_norm(state: &ModeState, bg: &BackgroundModel) -> Result<f64> {
    state.validate(bg)?;
    let op = Sbp42::new(bg.n_points, bg.dr_star);
    Ok(weighted_norm(&op, |i| {
        bg.lapse[i] * (state.phi0[i].norm_sqr() + state.phi2[i].norm_sqr()) + state.phi1[i].norm_sqr()
    }))
}

fn weighted_norm<F: Fn(usize) -> f64>(op: &Sbp42, f: F) -> f64 {
    let terms: Vec<f64> = (0..op.len()).map(|i| op.norm_weight(i) * f(i)).collect();
    crate::superenergy::pairwise_sum(&terms).sqrt()
}

/// Residual of `∂t² u - D² u + V_l u` on `u = r^2 φ1`, evaluated at the
/// middle of the supplied levels, which must be equally spaced in time.
/// Five levels give a fourth-order time stencil, three a second-order one.
/// Points within `max(8, n/20)` of either edge are skipped. `None` for
/// `l = 0`, where the equation says nothing.
pub fn fi_residual(history: &[ModeState], bg: &BackgroundModel) -> Result<Option<f64>> {
    if history.len() < 3 {
        return Err(Error::MissingTimeLevel(format!(
            "need at least 3 stored levels, got {}",
            history.len()
        )));
    }
    let levels = if history.len() >= 5 {
        &history[history.len() - 5..]
    } else {
        &history[history.len() - 3..]
    };
    let l = levels[0].mode.l;
    for s in levels {
        s.validate(bg)?;
        if s.mode != levels[0].mode {
            return Err(Error::Shape("history mixes modes".into()));
        }
    }
    if l == 0 {
        return Ok(None);
    }
    let dt = levels[1].t - levels[0].t;
    for w in levels.windows(2) {
        let gap = w[1].t - w[0].t;
        if !(dt > 0.0) || (gap - dt).abs() > 1e-9 * dt {
            return Err(Error::MissingTimeLevel("stored levels are not equally spaced".into()));
        }
    }
    let weights: &[f64] = if levels.len() == 5 {
        &[-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0]
    } else {
        &[1.0, -2.0, 1.0]
    };
    let mid = levels.len() / 2;
    let n = bg.n_points;
    let r2: Vec<f64> = bg.r.iter().map(|r| r * r).collect();
    let u = |lev: usize, i: usize| levels[lev].phi1[i] * r2[i];
    let v = bg.fi_potential(l);
    let h = bg.dr_star;
    let margin = (n / 20).max(8);
    let mut terms = Vec::with_capacity(n);
    for i in margin..n - margin {
        let utt: Complex64 = weights.iter().enumerate().map(|(j, w)| u(j, i) * *w).sum::<Complex64>() / (dt * dt);
        let uxx = (-(u(mid, i - 2) + u(mid, i + 2)) / 12.0 + (u(mid, i - 1) + u(mid, i + 1)) * (4.0 / 3.0)
            - u(mid, i) * 2.5)
            / (h * h);
        let res = utt - uxx + v[i] * u(mid, i);
        terms.push(h * res.norm_sqr());
    }
    Ok(Some(crate::superenergy::pairwise_sum(&terms).sqrt()))
}

/// Writes a state as a text header followed by little-endian `f64` pairs
/// `(re, im)`, the arrays `φ0, φ1, φ2` stored one after another.
pub fn write_checkpoint<W: Write>(mut w: W, state: &ModeState, bg: &BackgroundModel) -> Result<()> {
    state.validate(bg)?;
    writeln!(w, "MAXWELL-CHECKPOINT v1")?;
    writeln!(w, "endianness = little")?;
    writeln!(w, "mass = {:?}", bg.mass())?;
    writeln!(w, "n_points = {}", bg.n_points)?;
    writeln!(w, "r_star_min = {:?}", bg.r_star_min)?;
    writeln!(w, "r_star_max = {:?}", bg.r_star_max)?;
    writeln!(w, "t = {:?}", state.t)?;
    writeln!(w, "l = {}", state.mode.l)?;
    writeln!(w, "m = {}", state.mode.m)?;
    writeln!(w, "arrays = phi0,phi1,phi2")?;
    writeln!(w, "layout = f64 re,im interleaved per point, arrays consecutive")?;
    writeln!(w, "end_header")?;
    for arr in [&state.phi0, &state.phi1, &state.phi2] {
        for z in arr.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Grid description stored in a checkpoint header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointGrid {
    pub mass: f64,
    pub n_points: usize,
    pub r_star_min: f64,
    pub r_star_max: f64,
}

pub fn read_checkpoint<R: BufRead>(mut rd: R) -> Result<(CheckpointGrid, ModeState)> {
    let mut line = String::new();
    rd.read_line(&mut line)?;
    if line.trim_end() != "MAXWELL-CHECKPOINT v1" {
        return Err(Error::Checkpoint(format!("bad magic line {:?}", line.trim_end())));
    }
    let mut fields = std::collections::HashMap::new();
    loop {
        line.clear();
        if rd.read_line(&mut line)? == 0 {
            return Err(Error::Checkpoint("header ended without end_header".into()));
        }
        let text = line.trim_end();
        if text == "end_header" {
            break;
        }
        let (k, v) = text
            .split_once(" = ")
            .ok_or_else(|| Error::Checkpoint(format!("malformed header line {text:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    fn get<T: std::str::FromStr>(f: &std::collections::HashMap<String, String>, k: &str) -> Result<T> {
        f.get(k)
            .ok_or_else(|| Error::Checkpoint(format!("missing header field {k}")))?
            .parse()
            .map_err(|_| Error::Checkpoint(format!("unparsable header field {k}")))
    }
    let endian: String = get(&fields, "endianness")?;
    if endian != "little" {
        return Err(Error::Checkpoint(format!("unsupported endianness {endian}")));
    }
    let grid = CheckpointGrid {
        mass: get(&fields, "mass")?,
        n_points: get(&fields, "n_points")?,
        r_star_min: get(&fields, "r_star_min")?,
        r_star_max: get(&fields, "r_star_max")?,
    };
    let mut state = ModeState::zeros(get(&fields, "l")?, get(&fields, "m")?, grid.n_points)?;
    state.t = get(&fields, "t")?;
    let mut buf = [0u8; 8];
    for arr in [&mut state.phi0, &mut state.phi1, &mut state.phi2] {
        for z in arr.iter_mut() {
            rd.read_exact(&mut buf)
                .map_err(|_| Error::Checkpoint("truncated array data".into()))?;
            let re = f64::from_le_bytes(buf);
            rd.read_exact(&mut buf)
                .map_err(|_| Error::Checkpoint("truncated array data".into()))?;
            *z = Complex64::new(re, f64::from_le_bytes(buf));
        }
    }
    Ok((grid, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> BackgroundModel {
        BackgroundModel::new(1.0, -60.0, 140.0, n).unwrap()
    }

    fn pulse(l: u32, a0: f64, a2: f64) -> InitialDataSpec {
        InitialDataSpec {
            family: Family::Pulse,
            q_e: 0.0,
            q_b: 0.0,
            center: 30.0,
            width: 2.0,
            modes: vec![PulseMode {
                l,
                m: 0,
                amplitude_phi0: Complex64::new(a0, 0.0),
                amplitude_phi2: Complex64::new(a2, 0.0),
            }],
        }
    }

    #[test]
    fn coulomb_is_a_fixed_point() {
        let bg = grid(801);
        let s = ModeState::coulomb(1.0, 0.5, &bg);
        let d = reduced_rhs(&s, &bg).unwrap();
        assert!(d.phi0.iter().chain(&d.phi1).chain(&d.phi2).all(|z| *z == ZERO));
        assert!(constraint_residual(&s, &bg).unwrap() < 1e-14);
        let ev = Evolver::new(&bg, 0).unwrap();
        let mut x = s.clone();
        for _ in 0..1000 {
            x = ev.step(&x, ev.max_dt()).unwrap();
        }
        assert_eq!(x.phi1, s.phi1);
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let bg = grid(401);
        let s = ModeState::zeros(2, 1, bg.n_points).unwrap();
        let d = reduced_rhs(&s, &bg).unwrap();
        assert!(d.phi0.iter().chain(&d.phi1).chain(&d.phi2).all(|z| *z == ZERO));
    }

    #[test]
    fn coulomb_initial_data() {
        let bg = grid(401);
        let states = make_initial_data(&InitialDataSpec::coulomb(1.0, 0.0), &bg).unwrap();
        assert_eq!(states.len(), 1);
        for (p, r) in states[0].phi1.iter().zip(&bg.r) {
            assert!((p.re - 1.0 / (r * r)).abs() < 1e-16 && p.im == 0.0);
        }
    }

    #[test]
    fn zero_pulse_gives_zero_state() {
        let bg = grid(401);
        let s = &make_initial_data(&pulse(1, 0.0, 0.0), &bg).unwrap()[0];
        assert!(s.phi0.iter().chain(&s.phi1).chain(&s.phi2).all(|z| *z == ZERO));
    }

    #[test]
    fn pulse_data_satisfy_the_constraint() {
        let bg = grid(2001);
        for (a0, a2) in [(1.0, 0.0), (0.0, 1.0), (1.0, -0.5)] {
            let s = &make_initial_data(&pulse(1, a0, a2), &bg).unwrap()[0];
            let res = constraint_residual(s, &bg).unwrap();
            let norm = data_norm(s, &bg).unwrap();
            assert!(res <= 1e-10 * norm, "{res} vs {norm}");
        }
    }

    #[test]
    fn rejects_pulse_near_edge_and_bad_width() {
        let bg = grid(401);
        let mut spec = pulse(1, 1.0, 0.0);
        spec.center = 135.0;
        assert!(make_initial_data(&spec, &bg).is_err());
        spec.center = 30.0;
        spec.width = 0.0;
        assert!(make_initial_data(&spec, &bg).is_err());
    }

    #[test]
    fn cfl_violation_is_refused() {
        let bg = grid(401);
        let ev = Evolver::new(&bg, 1).unwrap();
        let s = ModeState::zeros(1, 0, bg.n_points).unwrap();
        assert!(matches!(ev.step(&s, 2.0 * ev.max_dt()), Err(Error::Cfl { .. })));
        assert!(ev.step(&s, ev.max_dt()).is_ok());
        assert!(Evolver::new(&bg, 1).unwrap().with_cfl(0.7).is_err());
    }

    #[test]
    fn outgoing_packet_moves_at_unit_speed() {
        let bg = BackgroundModel::new(1.0, -20.0, 420.0, 4401).unwrap();
        let mut s = ModeState::zeros(1, 0, bg.n_points).unwrap();
        let (c, w) = (150.0, 3.0);
        for i in 0..bg.n_points {
            let z = (bg.r_star[i] - c) / w;
            s.phi2[i] = Complex64::new((-0.5 * z * z).exp(), 0.0);
        }
        let ev = Evolver::new(&bg, 1).unwrap();
        let dt = ev.max_dt();
        let steps = (100.0 / dt).round() as usize;
        for _ in 0..steps {
            s = ev.step(&s, dt).unwrap();
        }
        let peak = (0..bg.n_points)
            .max_by(|a, b| s.phi2[*a].norm().partial_cmp(&s.phi2[*b].norm()).unwrap())
            .unwrap();
        let moved = bg.r_star[peak] - c;
        assert!((moved - s.t).abs() < 2.0 * bg.dr_star, "moved {moved} in {}", s.t);
    }

    #[test]
    fn fi_residual_edge_cases() {
        let bg = grid(401);
        let c = ModeState::coulomb(1.0, 0.0, &bg);
        let mut hist = Vec::new();
        for j in 0..3 {
            let mut s = c.clone();
            s.t = j as f64;
            hist.push(s);
        }
        assert_eq!(fi_residual(&hist, &bg).unwrap(), None);
        assert!(matches!(fi_residual(&hist[..2], &bg), Err(Error::MissingTimeLevel(_))));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let bg = grid(201);
        let s = &make_initial_data(&pulse(2, 1.0, 0.3), &bg).unwrap()[0];
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, s, &bg).unwrap();
        let (g, back) = read_checkpoint(&bytes[..]).unwrap();
        assert_eq!(&back, s);
        assert_eq!(g.n_points, 201);
        assert_eq!(g.r_star_max, 140.0);
        let truncated = &bytes[..bytes.len() - 3];
        assert!(read_checkpoint(truncated).is_err());
    }
}
