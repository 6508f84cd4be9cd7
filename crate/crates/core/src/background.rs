//! Schwarzschild exterior geometry on a uniform tortoise-coordinate grid.
//!
//! Every radial function used by the evolution and the energy diagnostics
//! lives here, in closed form. Near the horizon `r - 2M` underflows long
//! before `r*` does, so the grid stores the excess radius `r - 2M`
//! separately and the radial functions are evaluated from it.

use crate::error::{Error, Result};

const MAX_NEWTON_ITERATIONS: usize = 200;

/// A radius together with its horizon excess `r - 2M`, kept separately so
/// that the lapse stays accurate when `r` rounds to `2M` in floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPoint {
    pub r: f64,
    pub excess: f64,
}

/// Schwarzschild exterior of mass `M` in geometric units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schwarzschild {
    mass: f64,
}

impl Default for Schwarzschild {
    fn default() -> Self {
        Self { mass: 1.0 }
    }
}

impl Schwarzschild {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn horizon(&self) -> f64 {
        2.0 * self.mass
    }

    pub fn photon_sphere(&self) -> f64 {
        3.0 * self.mass
    }

    fn point_open(&self, r: f64) -> Result<RadialPoint> {
        if !(r > self.horizon()) || !r.is_finite() {
            return Err(Error::Domain(format!(
                "radius {r} is not in the exterior r > 2M = {}",
                self.horizon()
            )));
        }
        Ok(RadialPoint {
            r,
            excess: r - self.horizon(),
        })
    }

    fn point_closed(&self, r: f64) -> Result<RadialPoint> {
        if !(r >= self.horizon()) || !r.is_finite() {
            return Err(Error::Domain(format!(
                "radius {r} is below the horizon 2M = {}",
                self.horizon()
            )));
        }
        Ok(RadialPoint {
            r,
            excess: r - self.horizon(),
        })
    }

    /// `1 - 2M/r`. The horizon itself is accepted and gives zero.
    pub fn lapse(&self, r: f64) -> Result<f64> {
        let p = self.point_closed(r)?;
        Ok(lapse_at(p))
    }

    /// `r + 2M ln(r/2M - 1)`.
    pub fn tortoise(&self, r: f64) -> Result<f64> {
        let p = self.point_open(r)?;
        Ok(self.tortoise_at(p))
    }

    pub fn tortoise_at(&self, p: RadialPoint) -> f64 {
        let two_m = self.horizon();
        p.r + two_m * (p.excess / two_m).ln()
    }

    /// Inverse of [`Schwarzschild::tortoise`], returning the radius together
    /// with its horizon excess.
    ///
    /// Newton iteration on `s = ln(r/2M - 1)`, where the map
    /// `s -> e^s + s + 1` is convex and increasing; starting to the right of
    /// the root makes the iteration monotone.
    pub fn invert_tortoise_point(&self, r_star: f64) -> Result<RadialPoint> {
        if !r_star.is_finite() {
            return Err(Error::Domain(format!("r* must be finite, got {r_star}")));
        }
        let two_m = self.horizon();
        let x = r_star / two_m;
        let mut s = if x >= 1.0 { x.ln() } else { x - 1.0 };
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let es = s.exp();
            let h = es + s + 1.0 - x;
            let step = h / (es + 1.0);
            s -= step;
            if step.abs() <= 4.0 * f64::EPSILON * (1.0 + s.abs()) {
                let y = s.exp();
                return Ok(RadialPoint {
                    r: two_m * (1.0 + y),
                    excess: two_m * y,
                });
            }
        }
        Err(Error::NoConvergence {
            r_star,
            iterations: MAX_NEWTON_ITERATIONS,
        })
    }

    pub fn invert_tortoise(&self, r_star: f64) -> Result<f64> {
        self.invert_tortoise_point(r_star).map(|p| p.r)
    }

    /// Radial profile of the Morawetz vector field, `A = f(r) d/dr` with
    /// `f = (r - 3M)(r - 2M) / (2 r^2)`.
    pub fn morawetz_a(&self, r: f64) -> Result<f64> {
        Ok(self.morawetz_a_at(self.point_closed(r)?))
    }

    pub fn morawetz_a_at(&self, p: RadialPoint) -> f64 {
        let m = self.mass;
        (p.r - 3.0 * m) * p.excess / (2.0 * p.r * p.r)
    }

    /// `f'(r) = 5M/(2r^2) - 6M^2/r^3`.
    pub fn morawetz_a_prime(&self, r: f64) -> f64 {
        let m = self.mass;
        5.0 * m / (2.0 * r * r) - 6.0 * m * m / (r * r * r)
    }

    /// `q = 9M^2 (r - 2M)(2r - 3M) / (4 r^5)`.
    pub fn morawetz_q(&self, r: f64) -> Result<f64> {
        Ok(self.morawetz_q_at(self.point_closed(r)?))
    }

    pub fn morawetz_q_at(&self, p: RadialPoint) -> f64 {
        let m = self.mass;
        9.0 * m * m * p.excess * (2.0 * p.r - 3.0 * m) / (4.0 * p.r.powi(5))
    }

    /// `q'(r) = -9M^2 (3r^2 - 14Mr + 15M^2) / (2 r^6)`.
    pub fn morawetz_q_prime(&self, r: f64) -> f64 {
        let m = self.mass;
        -9.0 * m * m * (3.0 * r * r - 14.0 * m * r + 15.0 * m * m) / (2.0 * r.powi(6))
    }

    /// `q''(r) = 9M^2 (6r^2 - 35Mr + 45M^2) / r^7`.
    pub fn morawetz_q_second(&self, r: f64) -> f64 {
        let m = self.mass;
        9.0 * m * m * (6.0 * r * r - 35.0 * m * r + 45.0 * m * m) / r.powi(7)
    }

    /// The extracted weight `g = c1 3M (r - 3M)^2 (r - 2M) / (4 r^5)` with
    /// `c1 = 5/6`.
    pub fn morawetz_g(&self, r: f64) -> Result<f64> {
        Ok(self.morawetz_g_at(self.point_closed(r)?))
    }

    pub fn morawetz_g_at(&self, p: RadialPoint) -> f64 {
        let m = self.mass;
        let d = p.r - 3.0 * m;
        MORAWETZ_C1 * 3.0 * m * d * d * p.excess / (4.0 * p.r.powi(5))
    }

    /// `eps = r^(-3/2) (r - 2M)^(1/2)`.
    pub fn epsilon_weight(&self, r: f64) -> Result<f64> {
        let p = self.point_closed(r)?;
        Ok(p.excess.sqrt() / p.r.powf(1.5))
    }

    /// Potential of the reduced wave equation satisfied by `r^2 phi1` in the
    /// mode `l`: `(1 - 2M/r) l(l+1) / r^2`.
    pub fn fi_potential(&self, r: f64, l: u32) -> Result<f64> {
        if l < 1 {
            return Err(Error::Domain(
                "the reduced wave equation is only posed for l >= 1".into(),
            ));
        }
        let p = self.point_closed(r)?;
        Ok(fi_potential_at(p, l))
    }
}

/// Value of `c1` fixed in the choice of `g`.
pub const MORAWETZ_C1: f64 = 5.0 / 6.0;

pub fn lapse_at(p: RadialPoint) -> f64 {
    p.excess / p.r
}

pub fn fi_potential_at(p: RadialPoint, l: u32) -> f64 {
    let ll = f64::from(l) * f64::from(l + 1);
    lapse_at(p) * ll / (p.r * p.r)
}

/// Uniform tortoise grid with all radial functions cached at the nodes.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct BackgroundModel {
    pub geometry: Schwarzschild,
    pub r_star_min: f64,
    pub r_star_max: f64,
    pub n_points: usize,
    pub dr_star: f64,
    pub r_star: Vec<f64>,
    pub r: Vec<f64>,
    /// `r - 2M` at each node.
    pub excess: Vec<f64>,
    pub lapse: Vec<f64>,
    pub sqrt_lapse: Vec<f64>,
    pub morawetz_a: Vec<f64>,
    pub morawetz_q: Vec<f64>,
    pub morawetz_q_prime: Vec<f64>,
    pub morawetz_g: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl BackgroundModel {
    pub const MIN_POINTS: usize = 16;

    pub fn new(mass: f64, r_star_min: f64, r_star_max: f64, n_points: usize) -> Result<Self> {
        let geometry = Schwarzschild::new(mass)?;
        if !(r_star_min.is_finite() && r_star_max.is_finite() && r_star_max > r_star_min) {
            return Err(Error::Domain(format!(
                "need finite r_star_min < r_star_max, got [{r_star_min}, {r_star_max}]"
            )));
        }
        if n_points < Self::MIN_POINTS {
            return Err(Error::Domain(format!(
                "n_points must be at least {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        let dr_star = (r_star_max - r_star_min) / (n_points - 1) as f64;
        let r_star: Vec<f64> = (0..n_points)
            .map(|i| {
                if i == n_points - 1 {
                    r_star_max
                } else {
                    r_star_min + i as f64 * dr_star
                }
            })
            .collect();
        let points = r_star
            .iter()
            .map(|&x| geometry.invert_tortoise_point(x))
            .collect::<Result<Vec<_>>>()?;

        let r: Vec<f64> = points.iter().map(|p| p.r).collect();
        let excess: Vec<f64> = points.iter().map(|p| p.excess).collect();
        let lapse: Vec<f64> = points.iter().map(|&p| lapse_at(p)).collect();
        let sqrt_lapse = lapse.iter().map(|f| f.sqrt()).collect();
        let morawetz_a = points.iter().map(|&p| geometry.morawetz_a_at(p)).collect();
        let morawetz_q = points.iter().map(|&p| geometry.morawetz_q_at(p)).collect();
        let morawetz_q_prime = r.iter().map(|&x| geometry.morawetz_q_prime(x)).collect();
        let morawetz_g = points.iter().map(|&p| geometry.morawetz_g_at(p)).collect();
        let epsilon = points
            .iter()
            .map(|p| p.excess.sqrt() / p.r.powf(1.5))
            .collect();

        Ok(Self {
            geometry,
            r_star_min,
            r_star_max,
            n_points,
            dr_star,
            r_star,
            r,
            excess,
            lapse,
            sqrt_lapse,
            morawetz_a,
            morawetz_q,
            morawetz_q_prime,
            morawetz_g,
            epsilon,
        })
    }

    pub fn mass(&self) -> f64 {
        self.geometry.mass()
    }

    pub fn point(&self, i: usize) -> RadialPoint {
        RadialPoint {
            r: self.r[i],
            excess: self.excess[i],
        }
    }

    /// Coupling `k = f^(1/2) sqrt(l(l+1)) / r` of the reduced mode system.
    pub fn coupling(&self, l: u32) -> Vec<f64> {
        let root = (f64::from(l) * f64::from(l + 1)).sqrt();
        self.sqrt_lapse
            .iter()
            .zip(&self.r)
            .map(|(s, r)| s * root / r)
            .collect()
    }

    /// Transport damping `f/r + M/r^2` of the extreme components.
    pub fn transport_rate(&self) -> Vec<f64> {
        let m = self.mass();
        self.lapse
            .iter()
            .zip(&self.r)
            .map(|(f, r)| f / r + m / (r * r))
            .collect()
    }

    pub fn fi_potential(&self, l: u32) -> Vec<f64> {
        (0..self.n_points)
            .map(|i| fi_potential_at(self.point(i), l))
            .collect()
    }

    /// Index of the grid node closest to `r_star`.
    pub fn index_of(&self, r_star: f64) -> usize {
        let x = ((r_star - self.r_star_min) / self.dr_star).round();
        x.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bh() -> Schwarzschild {
        Schwarzschild::default()
    }

    #[test]
    fn lapse_values() {
        let s = bh();
        assert_eq!(s.lapse(2.0).unwrap(), 0.0);
        assert_eq!(s.lapse(4.0).unwrap(), 0.5);
        assert!((s.lapse(1e12).unwrap() - 1.0).abs() < 1e-11);
        assert!(s.lapse(1.9).is_err());
    }

    #[test]
    fn tortoise_values() {
        let s = bh();
        assert!((s.tortoise(4.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(s.tortoise(2.0).is_err());
        let mut last = f64::NEG_INFINITY;
        for i in 1..200 {
            let r = 2.0 + 0.05 * i as f64;
            let x = s.tortoise(r).unwrap();
            assert!(x > last);
            last = x;
        }
    }

    #[test]
    fn invert_tortoise_roundtrip() {
        let s = bh();
        assert!((s.invert_tortoise(4.0).unwrap() - 4.0).abs() < 1e-13);
        let x = s.tortoise(5.0).unwrap();
        assert!((s.invert_tortoise(x).unwrap() - 5.0).abs() < 1e-13);
        let x = s.tortoise(10.0).unwrap();
        assert!((s.invert_tortoise(x).unwrap() - 10.0).abs() < 1e-13);
        for &r in &[2.0 + 1e-9, 2.001, 2.5, 3.0, 7.0, 50.0, 1e4, 1e7] {
            let back = s.invert_tortoise(s.tortoise(r).unwrap()).unwrap();
            assert!((back - r).abs() <= 1e-13 * r.max(1.0), "r = {r}, back = {back}");
        }
    }

    #[test]
    fn horizon_limit_of_inverse() {
        let s = bh();
        let p = s.invert_tortoise_point(-400.0).unwrap();
        assert!(p.r >= 2.0);
        assert!(p.excess > 0.0 && p.excess < 1e-80);
        // the excess keeps the tortoise map invertible even though r == 2M in f64
        assert!((s.tortoise_at(p) + 400.0).abs() < 1e-10);
    }

    #[test]
    fn morawetz_a_values() {
        let s = bh();
        assert_eq!(s.morawetz_a(3.0).unwrap(), 0.0);
        assert_eq!(s.morawetz_a(2.0).unwrap(), 0.0);
        assert!((s.morawetz_a(6.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        for i in 1..400 {
            let r = 2.0 + 0.01 * i as f64;
            let a = s.morawetz_a(r).unwrap();
            assert_eq!(a.partial_cmp(&0.0), (r - 3.0).partial_cmp(&0.0), "r = {r}");
        }
    }

    #[test]
    fn morawetz_q_values() {
        let s = bh();
        assert_eq!(s.morawetz_q(2.0).unwrap(), 0.0);
        assert!((s.morawetz_q(3.0).unwrap() - 1.0 / 36.0).abs() < 1e-15);
        for i in 0..=9800 {
            let r = 2.0 + 0.01 * i as f64;
            assert!(s.morawetz_q(r).unwrap() >= 0.0);
        }
    }

    #[test]
    fn morawetz_g_values() {
        let s = bh();
        assert_eq!(s.morawetz_g(2.0).unwrap(), 0.0);
        assert_eq!(s.morawetz_g(3.0).unwrap(), 0.0);
        // (5/6) * 3 * 1 * 2 / (4 * 1024) evaluated independently
        let oracle = (5.0 / 6.0) * 3.0 * (4.0f64 - 3.0).powi(2) * (4.0 - 2.0) / (4.0 * 4.0f64.powi(5));
        assert!((s.morawetz_g(4.0).unwrap() - oracle).abs() < 1e-17);
        assert!((oracle - 5.0 / 4096.0).abs() < 1e-17);
    }

    #[test]
    fn epsilon_values() {
        let s = bh();
        assert_eq!(s.epsilon_weight(2.0).unwrap(), 0.0);
        let oracle = 2.0f64.sqrt() / 8.0;
        assert!((s.epsilon_weight(4.0).unwrap() - oracle).abs() < 1e-16);
        let r = 1e10;
        assert!((r * s.epsilon_weight(r).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fi_potential_values() {
        let s = bh();
        assert!(s.fi_potential(3.0, 0).is_err());
        for l in 1..6 {
            assert_eq!(s.fi_potential(2.0, l).unwrap(), 0.0);
            for &r in &[2.01, 3.0, 10.0] {
                assert!(s.fi_potential(r, l).unwrap() > 0.0);
            }
            let r = 1e9;
            let v = s.fi_potential(r, l).unwrap();
            let ll = f64::from(l * (l + 1));
            assert!((r * r * v / s.lapse(r).unwrap() - ll).abs() < 1e-9 * ll);
        }
    }

    #[test]
    fn derivative_of_tortoise_is_inverse_lapse() {
        let s = bh();
        for &r in &[2.5, 3.0, 6.0, 20.0] {
            let h = 1e-5;
            let d = (s.tortoise(r + h).unwrap() - s.tortoise(r - h).unwrap()) / (2.0 * h);
            assert!((d - 1.0 / s.lapse(r).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn q_derivatives_match_finite_differences() {
        let s = bh();
        for &r in &[2.3, 3.0, 4.5, 9.0, 30.0] {
            let h = 1e-4;
            let q = |x: f64| s.morawetz_q(x).unwrap();
            let d1 = (q(r + h) - q(r - h)) / (2.0 * h);
            let d2 = (q(r + h) - 2.0 * q(r) + q(r - h)) / (h * h);
            assert!((d1 - s.morawetz_q_prime(r)).abs() < 1e-8);
            assert!((d2 - s.morawetz_q_second(r)).abs() < 1e-5);
            let a = |x: f64| s.morawetz_a(x).unwrap();
            let da = (a(r + h) - a(r - h)) / (2.0 * h);
            assert!((da - s.morawetz_a_prime(r)).abs() < 1e-8);
        }
    }

    #[test]
    fn scale_covariance() {
        // (function, homogeneity degree in s)
        let base = bh();
        for &scale in &[0.5, 2.0, 10.0] {
            let scaled = Schwarzschild::new(scale).unwrap();
            for &r in &[2.2, 3.0, 5.5, 40.0] {
                let sr = scale * r;
                let pairs: [(f64, f64, i32); 7] = [
                    (base.lapse(r).unwrap(), scaled.lapse(sr).unwrap(), 0),
                    (base.tortoise(r).unwrap(), scaled.tortoise(sr).unwrap(), 1),
                    (base.morawetz_a(r).unwrap(), scaled.morawetz_a(sr).unwrap(), 0),
                    (base.morawetz_q(r).unwrap(), scaled.morawetz_q(sr).unwrap(), -1),
                    (base.morawetz_g(r).unwrap(), scaled.morawetz_g(sr).unwrap(), -1),
                    (base.epsilon_weight(r).unwrap(), scaled.epsilon_weight(sr).unwrap(), -1),
                    (base.fi_potential(r, 2).unwrap(), scaled.fi_potential(sr, 2).unwrap(), -2),
                ];
                for (k, (unit, big, degree)) in pairs.iter().enumerate() {
                    let expect = unit * scale.powi(*degree);
                    assert!(
                        (big - expect).abs() <= 1e-12 * expect.abs().max(1e-12),
                        "function {k} at r = {r}, s = {scale}: {big} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn grid_invariants() {
        let bg = BackgroundModel::new(1.0, -60.0, 120.0, 1001).unwrap();
        assert!(bg.lapse[0] < 1e-4);
        for i in 0..bg.n_points {
            assert!(bg.excess[i] > 0.0);
            assert!(bg.lapse[i] > 0.0 && bg.lapse[i] < 1.0);
            let back = bg.geometry.tortoise_at(bg.point(i));
            assert!((back - bg.r_star[i]).abs() < 1e-11 * bg.r_star[i].abs().max(1.0));
            if i > 0 {
                assert!(bg.r[i] > bg.r[i - 1] || bg.excess[i] > bg.excess[i - 1]);
            }
        }
        assert!(BackgroundModel::new(1.0, 5.0, 1.0, 100).is_err());
        assert!(BackgroundModel::new(-1.0, -5.0, 1.0, 100).is_err());
    }
}
