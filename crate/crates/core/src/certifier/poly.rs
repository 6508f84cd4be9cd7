//! Polynomials in the radial variable `x` whose coefficients are
//! polynomials in one parameter `p`, with exact rational coefficients.

use num_traits::{One, Zero};

use super::interval::{rat_int, to_f64, RatInterval, Rational};

/// A univariate polynomial, lowest degree first.
pub type Poly = Vec<Rational>;

fn trim(p: &mut Poly) {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

pub fn poly_eval(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

pub fn poly_eval_interval(p: &[Rational], x: &RatInterval) -> RatInterval {
    let mut acc = RatInterval::zero();
    for c in p.iter().rev() {
        acc = acc.mul(x).add(&RatInterval::point(c.clone()));
    }
    acc
}

pub fn poly_derivative(p: &[Rational]) -> Poly {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * rat_int(k as i64))
        .collect()
}

/// `Σ_{i,j} c[i][j] x^i p^j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BiPoly {
    c: Vec<Poly>,
}

impl BiPoly {
    pub fn zero() -> Self {
        Self { c: Vec::new() }
    }

    pub fn constant(k: Rational) -> Self {
        let mut p = Self { c: vec![vec![k]] };
        p.normalize();
        p
    }

    pub fn x() -> Self {
        Self {
            c: vec![vec![], vec![Rational::one()]],
        }
    }

    pub fn p() -> Self {
        Self {
            c: vec![vec![Rational::zero(), Rational::one()]],
        }
    }

    fn normalize(&mut self) {
        for row in &mut self.c {
            trim(row);
        }
        while self.c.last().is_some_and(|r| r.is_empty()) {
            self.c.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree in `x`; zero for the zero polynomial.
    pub fn deg_x(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn depends_on_p(&self) -> bool {
        self.c.iter().any(|r| r.len() > 1)
    }

    pub fn coefficient(&self, i: usize) -> &[Rational] {
        self.c.get(i).map_or(&[], |r| r.as_slice())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let mut c = vec![Vec::new(); n];
        for (i, row) in c.iter_mut().enumerate() {
            let a = self.coefficient(i);
            let b = o.coefficient(i);
            *row = (0..a.len().max(b.len()))
                .map(|j| a.get(j).cloned().unwrap_or_default() + b.get(j).cloned().unwrap_or_default())
                .collect();
        }
        let mut out = Self { c };
        out.normalize();
        out
    }

    pub fn neg(&self) -> Self {
        Self {
            c: self.c.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c: Vec<Poly> = vec![Vec::new(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (k, b) in o.c.iter().enumerate() {
                let row = &mut c[i + k];
                let need = a.len() + b.len();
                if row.len() < need {
                    row.resize(need, Rational::zero());
                }
                for (j, u) in a.iter().enumerate() {
                    for (l, v) in b.iter().enumerate() {
                        row[j + l] += u * v;
                    }
                }
            }
        }
        let mut out = Self { c };
        out.normalize();
        out
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::constant(Rational::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn scale(&self, k: &Rational) -> Self {
        let mut out = Self {
            c: self.c.iter().map(|r| r.iter().map(|v| v * k).collect()).collect(),
        };
        out.normalize();
        out
    }

    pub fn eval(&self, x: &Rational, p: &Rational) -> Rational {
        self.c
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, row| acc * x + poly_eval(row, p))
    }

    /// The polynomial in `p` obtained by fixing `x`.
    pub fn at_x(&self, x: &Rational) -> Poly {
        let width = self.c.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = vec![Rational::zero(); width];
        let mut power = Rational::one();
        for row in &self.c {
            for (j, v) in row.iter().enumerate() {
                out[j] += v * &power;
            }
            power = &power * x;
        }
        trim(&mut out);
        out
    }

    /// The polynomial in `x` obtained by fixing `p`.
    pub fn at_p(&self, p: &Rational) -> Self {
        let mut out = Self {
            c: self.c.iter().map(|r| vec![poly_eval(r, p)]).collect(),
        };
        out.normalize();
        out
    }

    /// Univariate view in `x`; only meaningful when `p` does not occur.
    pub fn as_univariate(&self) -> Poly {
        self.c.iter().map(|r| r.first().cloned().unwrap_or_default()).collect()
    }

    /// Interval Horner enclosure over a box.
    pub fn eval_interval(&self, x: &RatInterval, p: &RatInterval) -> RatInterval {
        let mut acc = RatInterval::zero();
        for row in self.c.iter().rev() {
            acc = acc.mul(x).add(&poly_eval_interval(row, p));
        }
        acc
    }

    pub fn derivative_p(&self) -> Self {
        let mut out = Self {
            c: self.c.iter().map(|r| poly_derivative(r)).collect(),
        };
        out.normalize();
        out
    }

    pub fn derivative_x(&self) -> Self {
        let mut out = Self {
            c: self
                .c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, r)| r.iter().map(|v| v * rat_int(k as i64)).collect())
                .collect(),
        };
        out.normalize();
        out
    }

    /// Whether the polynomial vanishes at `x = z` for every `p`.
    pub fn vanishes_at_x(&self, z: &Rational) -> bool {
        self.at_x(z).is_empty()
    }

    /// Exact quotient by `(x - z)`; the caller guarantees divisibility.
    pub fn div_linear(&self, z: &Rational) -> Self {
        let n = self.c.len();
        if n <= 1 {
            return Self::zero();
        }
        let mut q: Vec<Poly> = vec![Vec::new(); n - 1];
        let mut carry: Poly = Vec::new();
        for i in (1..n).rev() {
            let row = &self.c[i];
            let width = row.len().max(carry.len());
            let next: Poly = (0..width)
                .map(|j| {
                    row.get(j).cloned().unwrap_or_default() + carry.get(j).map(|v| v * z).unwrap_or_default()
                })
                .collect();
            q[i - 1] = next.clone();
            carry = next;
        }
        let mut out = Self { c: q };
        out.normalize();
        out
    }

    /// `x^d P(1/x)` with `d = deg_x`, the substitution used for the tail.
    pub fn reversed(&self) -> Self {
        let mut c = self.c.clone();
        c.reverse();
        let mut out = Self { c };
        out.normalize();
        out
    }
}

fn poly_rem(a: &[Rational], b: &[Rational]) -> Poly {
    let mut r: Poly = a.to_vec();
    trim(&mut r);
    let lead = b.last().expect("nonzero divisor");
    while r.len() >= b.len() && !r.is_empty() {
        let k = r.last().expect("nonempty") / lead;
        let shift = r.len() - b.len();
        for (i, v) in b.iter().enumerate() {
            r[shift + i] -= &k * v;
        }
        trim(&mut r);
    }
    r
}

/// Monic greatest common divisor over the rationals.
pub fn poly_gcd(a: &[Rational], b: &[Rational]) -> Poly {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(&a, &b);
        a = b;
        b = r;
    }
    if let Some(lead) = a.last().cloned() {
        for v in &mut a {
            *v = &*v / &lead;
        }
    }
    a
}

/// Approximate locations of sign changes of `p` on `[lo, hi]`.
pub fn sign_change_roots(p: &[Rational], lo: f64, hi: f64) -> Vec<f64> {
    let coeffs: Vec<f64> = p.iter().map(to_f64).collect();
    let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let n = 4000;
    let mut xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    if lo > 0.0 {
        let ratio = (hi / lo).ln();
        xs.extend((0..=n).map(|i| lo * (ratio * i as f64 / n as f64).exp()));
        xs.sort_by(f64::total_cmp);
    }
    let mut roots = Vec::new();
    for w in xs.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(m).signum() == f(a).signum() {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`.
pub fn convergents(x: f64, max_den: i64) -> Vec<Rational> {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        if !a.is_finite() || a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > i128::from(max_den) {
            break;
        }
        out.push(Rational::new(h2.into(), k2.into()));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a;
        if frac.abs() < 1e-300 {
            break;
        }
        y = 1.0 / frac;
    }
    out
}
