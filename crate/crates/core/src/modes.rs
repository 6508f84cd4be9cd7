//! Spin-weighted spherical harmonic bookkeeping.
//!
//! Harmonics are unit-sphere objects normalised so that
//! `∫ |sY_lm|^2 dΩ = 4π`; the `1/r` of the angular derivatives lives in
//! [`ladder_factor`]. Ladder signs follow the Goldberg convention, in which
//!
//! ```text
//! ð' (1Y_lm)  = + L 0Y_lm      ð (-1Y_lm) = - L 0Y_lm
//! ð  (0Y_lm)  = - L 1Y_lm      ð' (0Y_lm) = + L -1Y_lm
//! ```
//!
//! with `L = sqrt(l(l+1)) / (sqrt(2) r)`, so `ð'ð` on spin 0 is
//! `-l(l+1)/(2r^2)`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex {
    pub l: u32,
    pub m: i32,
    pub spin: i32,
}

impl ModeIndex {
    pub fn new(l: u32, m: i32, spin: i32) -> Result<Self> {
        if !(-1..=1).contains(&spin) {
            return Err(Error::Domain(format!("spin weight {spin} not in {{-1, 0, 1}}")));
        }
        if (l as i64) < i64::from(spin.abs()) {
            return Err(Error::Domain(format!("l = {l} below |s| = {}", spin.abs())));
        }
        if i64::from(m.abs()) > l as i64 {
            return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        Ok(Self { l, m, spin })
    }
}

/// Harmonic coefficients of one spin-weighted field on a sphere of fixed
/// `(t, r)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SphereCoefficients {
    spin: i32,
    coefficients: BTreeMap<(u32, i32), Complex64>,
}

impl SphereCoefficients {
    pub fn new(spin: i32) -> Result<Self> {
        ModeIndex::new(1, 0, spin)?;
        Ok(Self {
            spin,
            coefficients: BTreeMap::new(),
        })
    }

    pub fn spin(&self) -> i32 {
        self.spin
    }

    pub fn insert(&mut self, l: u32, m: i32, value: Complex64) -> Result<()> {
        ModeIndex::new(l, m, self.spin)?;
        self.coefficients.insert((l, m), value);
        Ok(())
    }

    pub fn get(&self, l: u32, m: i32) -> Complex64 {
        self.coefficients.get(&(l, m)).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, i32), Complex64)> + '_ {
        self.coefficients.iter().map(|(k, v)| (*k, *v))
    }

    pub fn l_max(&self) -> u32 {
        self.coefficients.keys().map(|k| k.0).max().unwrap_or(0)
    }

    /// Field value at `(theta, phi)`.
    pub fn synthesize(&self, theta: f64, phi: f64) -> Complex64 {
        self.iter()
            .map(|((l, m), c)| c * evaluate_sy_unchecked(self.spin, l, m, theta, phi))
            .sum()
    }
}

/// Magnitude of the ladder action between spin ±1 and spin 0:
/// `sqrt(l(l+1)) / (sqrt(2) r)`.
pub fn ladder_factor(l: u32, r: f64) -> Result<f64> {
    if l < 1 {
        return Err(Error::Domain("ladder factor needs l >= 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("ladder factor needs r > 0, got {r}")));
    }
    Ok(ladder_factor_unchecked(l, r))
}

pub(crate) fn ladder_factor_unchecked(l: u32, r: f64) -> f64 {
    (f64::from(l) * f64::from(l + 1)).sqrt() / (SQRT_2 * r)
}

/// `∫ |φ|^2 dΩ = 4π Σ |c_lm|^2`.
pub fn sphere_l2(c: &SphereCoefficients) -> f64 {
    4.0 * PI * c.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>()
}

/// Per-mode ratio `∫|φ0|^2 / (r^2 ∫|ð'φ0|^2) = 2 / (l(l+1))`.
pub fn hardy_ratio(l: u32) -> Result<f64> {
    if l < 1 {
        return Err(Error::Domain(
            "extreme components have no l = 0 mode".into(),
        ));
    }
    Ok(2.0 / (f64::from(l) * f64::from(l + 1)))
}

/// `sY_lm(theta, phi)` normalised to `∫|Y|^2 dΩ = 4π`.
pub fn evaluate_sy(spin: i32, l: u32, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    ModeIndex::new(l, m, spin)?;
    Ok(evaluate_sy_unchecked(spin, l, m, theta, phi))
}

fn evaluate_sy_unchecked(s: i32, l: u32, m: i32, theta: f64, phi: f64) -> Complex64 {
    let l = l as i64;
    let (s, m) = (i64::from(s), i64::from(m));
    let norm = (factorial(l + m) * factorial(l - m) * (2 * l + 1) as f64
        / (factorial(l + s) * factorial(l - s)))
        .sqrt();
    let (sh, ch) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let mut sum = 0.0;
    for k in 0..=(l - s) {
        let j = k + s - m;
        if j < 0 || j > l + s {
            continue;
        }
        // sin^(2l)(θ/2) cot^(2k+s-m)(θ/2) with both exponents non-negative
        let cos_power = 2 * k + s - m;
        let sin_power = 2 * l - cos_power;
        let sign = if (l - k - s).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sum += sign
            * binomial(l - s, k)
            * binomial(l + s, j)
            * sh.powi(sin_power as i32)
            * ch.powi(cos_power as i32);
    }
    let phase = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Complex64::from_polar(phase * norm * sum, m as f64 * phi)
}

fn factorial(n: i64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Product quadrature on the unit sphere: Gauss–Legendre in `cos θ` times
/// the uniform rule in `φ`. Exact for band-limited integrands of degree
/// below `2 n_theta` in `cos θ` and `n_phi` in `φ`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    weights_theta: Vec<f64>,
    weight_phi: f64,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        Self {
            theta: x.iter().map(|c| c.acos()).collect(),
            phi: (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect(),
            weights_theta: w,
            weight_phi: 2.0 * PI / n_phi as f64,
        }
    }

    /// A rule exact for products of two harmonics with `l <= l_max`.
    pub fn for_band_limit(l_max: u32) -> Self {
        let n = 2 * l_max as usize + 2;
        Self::new(n, n)
    }

    pub fn integrate<F: Fn(f64, f64) -> Complex64>(&self, f: F) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (t, wt) in self.theta.iter().zip(&self.weights_theta) {
            let mut row = Complex64::new(0.0, 0.0);
            for p in &self.phi {
                row += f(*t, *p);
            }
            total += row * wt * self.weight_phi;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Goldberg ð acting on a spin-s function given as a closure, by
    /// central differences in θ; the φ dependence is exp(i m φ).
    fn eth_numeric(s: i32, l: u32, m: i32, theta: f64, lower: bool) -> Complex64 {
        let h = 1e-5;
        let y = |t: f64| evaluate_sy(s, l, m, t, 0.0).unwrap();
        let dtheta = (y(theta + h) - y(theta - h)) / (2.0 * h);
        let i_dphi = Complex64::new(0.0, 1.0) * Complex64::new(0.0, f64::from(m)) * y(theta);
        let cot = theta.cos() / theta.sin();
        let sc = f64::from(s) * cot * y(theta);
        let csc = 1.0 / theta.sin();
        if lower {
            -(dtheta - i_dphi * csc + sc)
        } else {
            -(dtheta + i_dphi * csc - sc)
        }
    }

    #[test]
    fn ladder_factor_values() {
        assert!((ladder_factor(1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((ladder_factor(2, 1.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        for l in 1..10 {
            let a = ladder_factor(l, 3.0).unwrap();
            let b = ladder_factor(l, 6.0).unwrap();
            assert!((b - a / 2.0).abs() < 1e-15);
        }
        assert!(ladder_factor(0, 1.0).is_err());
    }

    #[test]
    fn sphere_l2_values() {
        let mut c = SphereCoefficients::new(1).unwrap();
        assert_eq!(sphere_l2(&c), 0.0);
        c.insert(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((sphere_l2(&c) - 4.0 * PI).abs() < 1e-14);
        c.insert(2, -1, Complex64::new(0.0, 1.0)).unwrap();
        assert!((sphere_l2(&c) - 8.0 * PI).abs() < 1e-14);
        assert!(c.insert(0, 0, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn hardy_ratio_values() {
        assert_eq!(hardy_ratio(1).unwrap(), 1.0);
        assert!((hardy_ratio(2).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((hardy_ratio(10).unwrap() - 1.0 / 55.0).abs() < 1e-16);
        assert!(hardy_ratio(0).is_err());
    }

    #[test]
    fn monopole_is_one() {
        for &(t, p) in &[(0.3, 0.1), (1.2, 4.0), (2.9, 2.0)] {
            let y = evaluate_sy(0, 0, 0, t, p).unwrap();
            assert!((y - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let q = SphereQuadrature::for_band_limit(0);
        let total = q.integrate(|t, p| evaluate_sy(0, 0, 0, t, p).unwrap().norm_sqr().into());
        assert!((total.re - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn dipole_matches_closed_form() {
        for &t in &[0.2, 1.0, 2.5] {
            let y = evaluate_sy(0, 1, 0, t, 0.7).unwrap();
            assert!((y.re - 3f64.sqrt() * t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormality_under_quadrature() {
        let l_max = 8;
        let q = SphereQuadrature::for_band_limit(l_max);
        for s in -1i32..=1 {
            let modes: Vec<(u32, i32)> = (s.unsigned_abs()..=l_max)
                .flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m)))
                .collect();
            for &(l1, m1) in &modes {
                for &(l2, m2) in &modes {
                    let ip = q.integrate(|t, p| {
                        evaluate_sy(s, l1, m1, t, p).unwrap().conj()
                            * evaluate_sy(s, l2, m2, t, p).unwrap()
                    });
                    let expect = if (l1, m1) == (l2, m2) { 4.0 * PI } else { 0.0 };
                    assert!(
                        (ip - Complex64::new(expect, 0.0)).norm() < 1e-10,
                        "s={s} ({l1},{m1}) ({l2},{m2}): {ip}"
                    );
                }
            }
        }
    }

    #[test]
    fn real_synthesis_from_conjugate_symmetric_coefficients() {
        let mut c = SphereCoefficients::new(0).unwrap();
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for l in 0..=8u32 {
            c.insert(l, 0, Complex64::new(next(), 0.0)).unwrap();
            for m in 1..=l as i32 {
                let a = Complex64::new(next(), next());
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                c.insert(l, m, a).unwrap();
                c.insert(l, -m, sign * a.conj()).unwrap();
            }
        }
        for i in 0..20 {
            for j in 0..20 {
                let t = 0.05 + 3.0 * i as f64 / 20.0;
                let p = 2.0 * PI * j as f64 / 20.0;
                assert!(c.synthesize(t, p).im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_for_band_limited_fields() {
        let q = SphereQuadrature::for_band_limit(8);
        for s in -1i32..=1 {
            let mut c = SphereCoefficients::new(s).unwrap();
            for l in s.unsigned_abs()..=8u32 {
                for m in -(l as i32)..=l as i32 {
                    c.insert(l, m, Complex64::new(0.1 * l as f64 - 0.03 * m as f64, 0.02 * (l * l) as f64))
                        .unwrap();
                }
            }
            let direct = q.integrate(|t, p| c.synthesize(t, p).norm_sqr().into()).re;
            let parseval = sphere_l2(&c);
            assert!((direct - parseval).abs() < 1e-10 * parseval);
        }
    }

    #[test]
    fn eth_ladder_relations() {
        for l in 1..=4u32 {
            let root = (f64::from(l) * f64::from(l + 1)).sqrt();
            for m in -(l as i32)..=l as i32 {
                for &t in &[0.4, 1.1, 2.3] {
                    // ð 0Y = +sqrt(l(l+1)) 1Y and ð̄ 1Y = -sqrt(l(l+1)) 0Y
                    let up = eth_numeric(0, l, m, t, false);
                    let y1 = evaluate_sy(1, l, m, t, 0.0).unwrap();
                    assert!((up - root * y1).norm() < 1e-7, "l={l} m={m}");
                    let down = eth_numeric(1, l, m, t, true);
                    let y0 = evaluate_sy(0, l, m, t, 0.0).unwrap();
                    assert!((down + root * y0).norm() < 1e-7);
                    // ð -1Y = +sqrt(l(l+1)) 0Y and ð̄ 0Y = -sqrt(l(l+1)) -1Y
                    let up_m = eth_numeric(-1, l, m, t, false);
                    assert!((up_m - root * y0).norm() < 1e-7);
                    let down0 = eth_numeric(0, l, m, t, true);
                    let ym1 = evaluate_sy(-1, l, m, t, 0.0).unwrap();
                    assert!((down0 + root * ym1).norm() < 1e-7);
                    // eth then eth-prime on spin 0, in the 1/(sqrt2 r) scaled convention
                    let r = 2.5;
                    let lad = ladder_factor(l, r).unwrap();
                    let twice = -(-root * lad / root) * (-root * lad / root);
                    assert!((twice + f64::from(l * (l + 1)) / (2.0 * r * r)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn hardy_saturation_mode_wise() {
        for l in 1..=8u32 {
            let r = 3.7;
            let lad = ladder_factor(l, r).unwrap();
            let ratio = 1.0 / (r * r * lad * lad);
            assert!((ratio - hardy_ratio(l).unwrap()).abs() < 1e-14);
            assert!(ratio <= 1.0 + 1e-15);
        }
    }
}
