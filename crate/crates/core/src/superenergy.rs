//! Derived fields, energies and Morawetz bulk terms.
//!
//! All slice quantities are per mode and already integrated over the
//! sphere (a factor `4π` from the harmonic normalisation). Radial
//! densities are per unit `r*`, so that `r^2 dr = r^2 f dr*`.
//!
//! With `κ1 = -r/3` the extreme components of `Θ` are
//! `Θ0 = (2r/3) φ0`, `Θ2 = -(2r/3) φ2`, and the middle scalar is
//! `Υ = (2r/3) φ1`. Frame components of `β = ∇Υ - U Υ` are
//!
//! ```text
//! β_T = f^(-1/2) ∂t Υ        β_Z = f^(-1/2) r^-1 D(r Υ)
//! β_m = -L Υ                 β_m̄ = +L Υ
//! ```
//!
//! so the Coulomb mode, where `r Υ` is constant, gives `β = 0` exactly.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::background::BackgroundModel;
use crate::error::{Error, Result};
use crate::evolution::{constraint_residual, reduced_rhs, ModeState};
use crate::modes::{hardy_ratio, ladder_factor_unchecked};
use crate::sbp::Sbp42;

const FOUR_PI: f64 = 4.0 * PI;

/// Deterministic pairwise (cascade) summation.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if x.len() <= LEAF {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `κ1` of the Killing spinor in the symmetric dyad.
pub fn kappa1(r: f64) -> f64 {
    -r / 3.0
}

/// `Θ0 = -2 κ1 φ0` and `Θ2 = 2 κ1 φ2`.
pub fn theta_from_phi(state: &ModeState, bg: &BackgroundModel) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    state.validate(bg)?;
    let t0 = state.phi0.iter().zip(&bg.r).map(|(p, r)| p * (-2.0 * kappa1(*r))).collect();
    let t2 = state.phi2.iter().zip(&bg.r).map(|(p, r)| p * (2.0 * kappa1(*r))).collect();
    Ok((t0, t2))
}

/// `Υ = κ^AB φ_AB = -2 κ1 φ1 = (2r/3) φ1`.
pub fn upsilon_from_phi(state: &ModeState, bg: &BackgroundModel) -> Result<Vec<Complex64>> {
    state.validate(bg)?;
    Ok(upsilon_of(&state.phi1, bg))
}

fn upsilon_of(phi1: &[Complex64], bg: &BackgroundModel) -> Vec<Complex64> {
    phi1.iter().zip(&bg.r).map(|(p, r)| p * (-2.0 * kappa1(*r))).collect()
}

/// Frame and null components of `β` for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFields {
    pub t: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub l: Vec<Complex64>,
    pub n: Vec<Complex64>,
    pub m: Vec<Complex64>,
    pub m_bar: Vec<Complex64>,
}

impl BetaFields {
    /// `|β_X|^2 + |β_Y|^2` after sphere integration (per `4π`).
    pub fn angular_sq(&self, i: usize) -> f64 {
        self.m[i].norm_sqr() + self.m_bar[i].norm_sqr()
    }
}

/// `β` from `Υ` and its time derivative (the latter taken from the
/// evolution right-hand side by the caller).
pub fn beta_from_upsilon(
    upsilon: &[Complex64],
    upsilon_dot: &[Complex64],
    l: u32,
    bg: &BackgroundModel,
) -> Result<BetaFields> {
    let n = bg.n_points;
    if upsilon.len() != n || upsilon_dot.len() != n {
        return Err(Error::MissingTimeLevel(format!(
            "Υ and ∂tΥ must both cover the grid ({n} points), got {} and {}",
            upsilon.len(),
            upsilon_dot.len()
        )));
    }
    let op = Sbp42::new(n, bg.dr_star);
    let r_up: Vec<Complex64> = upsilon.iter().zip(&bg.r).map(|(u, r)| u * r).collect();
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    op.apply(&r_up, &mut d);
    let mut out = BetaFields {
        t: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        l: Vec::with_capacity(n),
        n: Vec::with_capacity(n),
        m: Vec::with_capacity(n),
        m_bar: Vec::with_capacity(n),
    };
    for i in 0..n {
        let inv_sqrt_f = 1.0 / bg.sqrt_lapse[i];
        let bt = upsilon_dot[i] * inv_sqrt_f;
        let bz = d[i] * (inv_sqrt_f / bg.r[i]);
        let lad = if l == 0 { 0.0 } else { ladder_factor_unchecked(l, bg.r[i]) };
        out.t.push(bt);
        out.z.push(bz);
        out.l.push((bt + bz) / SQRT_2);
        out.n.push((bt - bz) / SQRT_2);
        out.m.push(-lad * upsilon[i]);
        out.m_bar.push(lad * upsilon[i]);
    }
    Ok(out)
}

/// Everything derived from one mode at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedModeFields {
    pub l: u32,
    pub theta0: Vec<Complex64>,
    pub theta2: Vec<Complex64>,
    pub upsilon: Vec<Complex64>,
    pub beta: BetaFields,
}

impl DerivedModeFields {
    pub fn new(state: &ModeState, bg: &BackgroundModel) -> Result<Self> {
        let (theta0, theta2) = theta_from_phi(state, bg)?;
        let upsilon = upsilon_from_phi(state, bg)?;
        let rates = reduced_rhs(state, bg)?;
        let upsilon_dot = upsilon_of(&rates.phi1, bg);
        // In l = 0 the constraint forces r Υ to be constant and ∂tΥ = 0,
        // so β vanishes identically; differencing would only return
        // roundoff amplified by f^(-1/2) near the horizon.
        let beta = if state.mode.l == 0 {
            let zero = vec![Complex64::new(0.0, 0.0); bg.n_points];
            beta_from_upsilon(&zero, &zero, 0, bg)?
        } else {
            beta_from_upsilon(&upsilon, &upsilon_dot, state.mode.l, bg)?
        };
        Ok(Self {
            l: state.mode.l,
            theta0,
            theta2,
            upsilon,
            beta,
        })
    }

    /// `W_TT = (|Θ0|^2 + |Θ2|^2) / 2`.
    pub fn w_tt(&self, i: usize) -> f64 {
        0.5 * (self.theta0[i].norm_sqr() + self.theta2[i].norm_sqr())
    }
}

/// Radial coefficient functions of the quadratic form `E1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFormCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl QuadraticFormCoeffs {
    pub fn new(b0: f64, b1: f64, b2: f64) -> Self {
        Self { b0, b1, b2 }
    }

    /// Coefficients left in the bulk term after the `g`-extraction with the
    /// chosen `A`, `q` and `c1 = 5/6`.
    pub fn morawetz_bulk(r: f64, m: f64) -> Self {
        let r5 = r.powi(5);
        let s = (r - 3.0 * m) * (r - 3.0 * m);
        Self {
            b0: s * (14.0 * m * m - 7.0 * m * r + 4.0 * r * r) / (16.0 * r5),
            b1: m * (90.0 * m.powi(3) - 105.0 * m * m * r + 28.0 * m * r * r + r.powi(3)) / (4.0 * r5),
            b2: s * (10.0 * m * m - 5.0 * m * r + 4.0 * r * r) / (16.0 * r5),
        }
    }

    /// Eigenvalues of the form: `b0+b1-b2, -b0+b2, b0+b2, b0+b2`.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let Self { b0, b1, b2 } = *self;
        [b0 + b1 - b2, -b0 + b2, b0 + b2, b0 + b2]
    }

    /// The pointwise conditions under which `E1 >= 0` for every argument.
    pub fn is_nonnegative(&self) -> bool {
        let Self { b0, b1, b2 } = *self;
        0.0 <= b1 && 0.0 <= b2 && (-b2).max(b2 - b1) <= b0 && b0 <= b2
    }
}

/// Frame components `(T, X, Y, Z)` of a complex vector.
pub type FrameVector = [Complex64; 4];

/// `E1[b0, b1, b2, ν]` in an orthonormal frame.
pub fn e1_form(c: &QuadraticFormCoeffs, nu: &FrameVector) -> f64 {
    let [t, x, y, z] = nu;
    (c.b2 - c.b0) * t.norm_sqr()
        + (c.b0 + c.b1 - c.b2) * z.norm_sqr()
        + (c.b0 + c.b2) * (x.norm_sqr() + y.norm_sqr())
}

/// Pointwise `-∇·P` from the expanded bulk identity, given the squared
/// frame components of `β` and `W_TT`.
pub fn divp_density(r: f64, m: f64, bt2: f64, bz2: f64, bang2: f64, w: f64) -> f64 {
    let r5 = r.powi(5);
    let e = r - 2.0 * m;
    let s = (r - 3.0 * m) * (r - 3.0 * m);
    m * bt2 * s * e / (8.0 * r5)
        + m * bz2 * e * (r * r + 66.0 * m * r - 99.0 * m * m) / (8.0 * r5)
        + bang2 * s * (2.0 * r * r - 3.0 * m * r + 6.0 * m * m) / (4.0 * r5)
        + 5.0 * m * (bt2 + bz2) * s * e / (8.0 * r5)
        - 27.0 * m * m * (r - 5.0 * m) * e * e / (2.0 * r.powi(8)) * w
}

/// `|β|^2_{1,deg}`.
pub fn degenerate_beta_sq(r: f64, m: f64, bt2: f64, bz2: f64, bang2: f64) -> f64 {
    let e = r - 2.0 * m;
    let s = (r - 3.0 * m) * (r - 3.0 * m);
    s / r.powi(3) * bang2 + m * e / r.powi(3) * bz2 + m * s * e / r.powi(5) * bt2
}

/// `|Z|^2_2 = (r - 2M)/r W_TT`.
pub fn z_norm_sq(r: f64, m: f64, w: f64) -> f64 {
    (r - 2.0 * m) / r * w
}

/// Radial densities (per `dr*`, sphere-integrated) for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDensities {
    /// `H(ξ, N)` on the `t`-slice.
    pub e_xi: Vec<f64>,
    /// `P(N)` with both `A` and `q`.
    pub e_p: Vec<f64>,
    /// `P(N)` with `q` set to zero.
    pub e_p_a_only: Vec<f64>,
    pub deg_beta: Vec<f64>,
    /// `(2M/25r^4) |Z|^2_2`.
    pub z_weighted: Vec<f64>,
    /// `-∇·P`.
    pub divp: Vec<f64>,
    /// Outward radial flux of `e_xi`.
    pub flux_xi: Vec<f64>,
    /// Outward radial flux of `e_p`.
    pub flux_p: Vec<f64>,
}

impl ModeDensities {
    pub fn new(d: &DerivedModeFields, bg: &BackgroundModel) -> Self {
        let n = bg.n_points;
        let m = bg.mass();
        let lad_root = (f64::from(d.l) * f64::from(d.l + 1)).sqrt();
        let mut out = Self {
            e_xi: Vec::with_capacity(n),
            e_p: Vec::with_capacity(n),
            e_p_a_only: Vec::with_capacity(n),
            deg_beta: Vec::with_capacity(n),
            z_weighted: Vec::with_capacity(n),
            divp: Vec::with_capacity(n),
            flux_xi: Vec::with_capacity(n),
            flux_p: Vec::with_capacity(n),
        };
        for i in 0..n {
            let (r, f, sf) = (bg.r[i], bg.lapse[i], bg.sqrt_lapse[i]);
            let jac = FOUR_PI * r * r * f;
            let (bt, bz) = (d.beta.t[i], d.beta.z[i]);
            let (bt2, bz2, bang2) = (bt.norm_sqr(), bz.norm_sqr(), d.beta.angular_sq(i));
            let (th0, th2, ups) = (d.theta0[i], d.theta2[i], d.upsilon[i]);
            let w = d.w_tt(i);
            let fa = bg.morawetz_a[i];
            let q = bg.morawetz_q[i];
            let dq = bg.morawetz_q_prime[i];
            let lad = lad_root / (SQRT_2 * r);
            let tz = (bt * bz.conj()).re;

            let a_t = fa / sf * tz;
            let q_t = q * lad / SQRT_2 * (ups.conj() * (th0 + th2)).re
                - 0.25 * sf * dq * (th0.norm_sqr() - th2.norm_sqr());
            let hzz = 0.5 * (bt2 + bz2 - bang2);
            let a_z = fa / sf * hzz;
            let q_z = q * lad / SQRT_2 * (ups.conj() * (th0 - th2)).re
                - 0.25 * sf * dq * (th0.norm_sqr() + th2.norm_sqr());

            let slice = FOUR_PI * r * r * sf;
            out.e_xi.push(0.5 * jac * (bt2 + bz2 + bang2));
            out.e_p.push(slice * (a_t + q_t));
            out.e_p_a_only.push(slice * a_t);
            out.deg_beta.push(jac * degenerate_beta_sq(r, m, bt2, bz2, bang2));
            out.z_weighted.push(jac * 2.0 * m / (25.0 * r.powi(4)) * z_norm_sq(r, m, w));
            out.divp.push(jac * divp_density(r, m, bt2, bz2, bang2, w));
            out.flux_xi.push(-jac * tz);
            out.flux_p.push(-slice * (a_z + q_z));
        }
        out
    }
}

/// Slice integral `Σ H_i x_i` with pairwise summation.
pub fn integrate(x: &[f64], bg: &BackgroundModel) -> f64 {
    let op = Sbp42::new(bg.n_points, bg.dr_star);
    let terms: Vec<f64> = x.iter().enumerate().map(|(i, v)| op.norm_weight(i) * v).collect();
    pairwise_sum(&terms)
}

/// Slice integrals of one mode's densities.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModeIntegrals {
    pub e_xi: f64,
    pub e_p: f64,
    pub e_p_a_only: f64,
    pub deg_beta: f64,
    pub z_weighted: f64,
    pub divp: f64,
    /// Net outward flux of `E_ξ` through both grid edges.
    pub flux_xi: f64,
    /// Net outward flux of `E_ξ+A,q` through both grid edges.
    pub flux_aq: f64,
}

impl ModeIntegrals {
    pub fn new(state: &ModeState, bg: &BackgroundModel) -> Result<Self> {
        let d = ModeDensities::new(&DerivedModeFields::new(state, bg)?, bg);
        let n = bg.n_points;
        let edge = |x: &[f64]| x[n - 1] - x[0];
        Ok(Self {
            e_xi: integrate(&d.e_xi, bg),
            e_p: integrate(&d.e_p, bg),
            e_p_a_only: integrate(&d.e_p_a_only, bg),
            deg_beta: integrate(&d.deg_beta, bg),
            z_weighted: integrate(&d.z_weighted, bg),
            divp: integrate(&d.divp, bg),
            flux_xi: edge(&d.flux_xi),
            flux_aq: edge(&d.flux_xi) + edge(&d.flux_p),
        })
    }

    /// Mode-by-mode pairwise sum, independent of thread scheduling.
    pub fn sum(items: &[Self]) -> Self {
        let col = |get: fn(&Self) -> f64| pairwise_sum(&items.iter().map(get).collect::<Vec<_>>());
        Self {
            e_xi: col(|m| m.e_xi),
            e_p: col(|m| m.e_p),
            e_p_a_only: col(|m| m.e_p_a_only),
            deg_beta: col(|m| m.deg_beta),
            z_weighted: col(|m| m.z_weighted),
            divp: col(|m| m.divp),
            flux_xi: col(|m| m.flux_xi),
            flux_aq: col(|m| m.flux_aq),
        }
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            e_xi: w * self.e_xi,
            e_p: w * self.e_p,
            e_p_a_only: w * self.e_p_a_only,
            deg_beta: w * self.deg_beta,
            z_weighted: w * self.z_weighted,
            divp: w * self.divp,
            flux_xi: w * self.flux_xi,
            flux_aq: w * self.flux_aq,
        }
    }

    pub fn add(&mut self, o: &Self) {
        self.e_xi += o.e_xi;
        self.e_p += o.e_p;
        self.e_p_a_only += o.e_p_a_only;
        self.deg_beta += o.deg_beta;
        self.z_weighted += o.z_weighted;
        self.divp += o.divp;
        self.flux_xi += o.flux_xi;
        self.flux_aq += o.flux_aq;
    }
}

/// Summary of one output slice, summed over modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDiagnostics {
    pub t: f64,
    pub e_xi: f64,
    pub e_xi_aq: f64,
    /// `E_ξ + ∫ P(N)` with `q = 0`.
    pub e_xi_a: f64,
    pub bulk_deg_beta: f64,
    pub bulk_z: f64,
    pub divp_bulk: f64,
    pub flux_xi: f64,
    pub flux_aq: f64,
    pub constraint_residual: f64,
    /// `(l, 2/(l(l+1)))` for every radiative mode present.
    pub hardy_ratios: Vec<(u32, f64)>,
}

impl SliceDiagnostics {
    pub fn new(states: &[ModeState], bg: &BackgroundModel) -> Result<Self> {
        let per_mode = states
            .iter()
            .map(|s| ModeIntegrals::new(s, bg))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(states, &ModeIntegrals::sum(&per_mode), bg)
    }

    pub fn from_parts(states: &[ModeState], total: &ModeIntegrals, bg: &BackgroundModel) -> Result<Self> {
        let mut hardy = Vec::new();
        let mut residual_sq = Vec::with_capacity(states.len());
        for s in states {
            residual_sq.push(constraint_residual(s, bg)?.powi(2));
            if s.mode.l >= 1 {
                hardy.push((s.mode.l, hardy_ratio(s.mode.l)?));
            }
        }
        Ok(Self {
            t: states.first().map_or(0.0, |s| s.t),
            e_xi: total.e_xi,
            e_xi_aq: total.e_xi + total.e_p,
            e_xi_a: total.e_xi + total.e_p_a_only,
            bulk_deg_beta: total.deg_beta,
            bulk_z: total.z_weighted,
            divp_bulk: total.divp,
            flux_xi: total.flux_xi,
            flux_aq: total.flux_aq,
            constraint_residual: pairwise_sum(&residual_sq).sqrt(),
            hardy_ratios: hardy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{Schwarzschild, MORAWETZ_C1};

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 499500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn theta_and_upsilon_values() {
        let bg = BackgroundModel::new(1.0, -10.0, 30.0, 101).unwrap();
        let mut s = ModeState::zeros(1, 0, bg.n_points).unwrap();
        let i = 50;
        s.phi0[i] = Complex64::new(1.0, 0.0);
        s.phi1[i] = Complex64::new(1.0, 0.0);
        let (t0, _) = theta_from_phi(&s, &bg).unwrap();
        assert!((t0[i].re - 2.0 * bg.r[i] / 3.0).abs() < 1e-14);
        assert!((-2.0 * kappa1(3.0) - 2.0).abs() < 1e-15);
        let ups = upsilon_from_phi(&s, &bg).unwrap();
        assert!((ups[i].re - 2.0 * bg.r[i] / 3.0).abs() < 1e-14);
        s.phi0[i] *= 2.0;
        let (t0b, _) = theta_from_phi(&s, &bg).unwrap();
        assert!((t0b[i] - 2.0 * t0[i]).norm() < 1e-15);
    }

    #[test]
    fn coulomb_beta_vanishes_exactly() {
        let bg = BackgroundModel::new(1.0, -40.0, 100.0, 701).unwrap();
        let s = ModeState::coulomb(1.0, 1.0, &bg);
        let ups = upsilon_from_phi(&s, &bg).unwrap();
        let dot = vec![Complex64::new(0.0, 0.0); bg.n_points];
        let generic = beta_from_upsilon(&ups, &dot, 0, &bg).unwrap();
        for i in 0..bg.n_points {
            assert_eq!(generic.t[i], Complex64::new(0.0, 0.0));
            let scaled = generic.z[i] * bg.sqrt_lapse[i] * bg.r[i];
            assert!(scaled.norm() < 1e-12, "{scaled}");
            assert_eq!(generic.angular_sq(i), 0.0);
        }
        let d = DerivedModeFields::new(&s, &bg).unwrap();
        assert!(d.beta.z.iter().chain(&d.beta.t).all(|z| z.norm() == 0.0));
        assert!(d.theta0.iter().chain(&d.theta2).all(|z| z.norm() == 0.0));
        let diag = SliceDiagnostics::new(&[s], &bg).unwrap();
        assert!(diag.e_xi.abs() < 1e-12 && diag.e_xi_aq.abs() < 1e-12);
    }

    #[test]
    fn e1_special_case_and_zero() {
        let c = QuadraticFormCoeffs::new(-0.5, 2.0, 0.5);
        let nu = [
            Complex64::new(0.3, -1.0),
            Complex64::new(2.0, 0.1),
            Complex64::new(-0.7, 0.4),
            Complex64::new(1.1, 0.9),
        ];
        let expect = nu[0].norm_sqr() + nu[3].norm_sqr();
        assert!((e1_form(&c, &nu) - expect).abs() < 1e-14);
        assert_eq!(e1_form(&c, &[Complex64::new(0.0, 0.0); 4]), 0.0);
    }

    /// The tuple obtained from general `(A, q)` with the `g` extraction must
    /// reproduce the displayed coefficients, and the sum with the extracted
    /// term must reproduce the expanded bulk.
    #[test]
    fn coefficient_audit() {
        let geo = Schwarzschild::new(1.0).unwrap();
        let m = 1.0;
        for k in 0..200 {
            let r = 2.0 + 0.013 + k as f64 * 0.37;
            let fa = geo.morawetz_a(r).unwrap();
            let dfa = geo.morawetz_a_prime(r);
            let q = geo.morawetz_q(r).unwrap();
            let g = MORAWETZ_C1 * 3.0 * m * (r - 3.0 * m).powi(2) * (r - 2.0 * m) / (4.0 * r.powi(5));
            let e = r - 2.0 * m;
            let general = QuadraticFormCoeffs::new(
                0.5 * g + q + fa * (r - m) / (2.0 * r * e) - 0.5 * dfa,
                -2.0 * g - 2.0 * m * fa / (e * r) + dfa,
                -0.5 * g + fa * (r - 3.0 * m) / (2.0 * e * r),
            );
            let shown = QuadraticFormCoeffs::morawetz_bulk(r, m);
            let scale = 1.0 / r.powi(3);
            assert!((general.b0 - shown.b0).abs() < 1e-12 * scale, "b0 at r={r}");
            assert!((general.b1 - shown.b1).abs() < 1e-12 * scale, "b1 at r={r}");
            assert!((general.b2 - shown.b2).abs() < 1e-12 * scale, "b2 at r={r}");

            let w_general = -(e) * geo.morawetz_q_prime(r) / (r * r) - e * geo.morawetz_q_second(r) / (2.0 * r);
            let w_shown = -27.0 * m * m * (r - 5.0 * m) * e * e / (2.0 * r.powi(8));
            assert!((w_general - w_shown).abs() < 1e-12 * scale);

            let (bt2, bz2, bx2, by2, w): (f64, f64, f64, f64, f64) = (0.7, 1.3, 0.4, 0.9, 2.1);
            let nu = [
                Complex64::new(bt2.sqrt(), 0.0),
                Complex64::new(bx2.sqrt(), 0.0),
                Complex64::new(0.0, by2.sqrt()),
                Complex64::new(bz2.sqrt(), 0.0),
            ];
            let lhs = e1_form(&shown, &nu) + g * (bt2 + bz2) + w_shown * w;
            let rhs = divp_density(r, m, bt2, bz2, bx2 + by2, w);
            assert!((lhs - rhs).abs() < 1e-12 * scale * 10.0, "r={r}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn degenerate_weights_vanish_where_expected() {
        let m = 1.0;
        assert_eq!(degenerate_beta_sq(3.0, m, 0.0, 0.0, 1.0), 0.0);
        assert_eq!(degenerate_beta_sq(2.0, m, 1.0, 1.0, 0.0), 0.0);
        assert!(degenerate_beta_sq(2.0, m, 0.0, 0.0, 1.0) > 0.0);
        assert_eq!(z_norm_sq(2.0, m, 1.0), 0.0);
    }
}
