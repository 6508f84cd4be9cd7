//! Radial expression trees.
//!
//! An expression is built from `r`, one optional parameter `c`, rational
//! constants and `+ - * / ^ abs sqrt`. It can be enclosed on an interval, or
//! turned into an exact quotient of polynomials on a piece where every `abs`
//! argument has fixed sign.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::rc::Rc;

use num_traits::{One, Signed, Zero};

use super::interval::{rat, rat_int, RatInterval, Rational};
use super::poly::BiPoly;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(Rational),
    R,
    Param,
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, u32),
    Abs(Expr),
    Sqrt(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr(Rc<Node>);

pub fn r() -> Expr {
    Expr(Rc::new(Node::R))
}

/// The family parameter (for example `c` in `xi + c A`).
pub fn param() -> Expr {
    Expr(Rc::new(Node::Param))
}

pub fn int(n: i64) -> Expr {
    konst(rat_int(n))
}

pub fn frac(n: i64, d: i64) -> Expr {
    konst(rat(n, d))
}

pub fn konst(v: Rational) -> Expr {
    Expr(Rc::new(Node::Const(v)))
}

impl Expr {
    pub fn pow(&self, k: u32) -> Expr {
        Expr(Rc::new(Node::Pow(self.clone(), k)))
    }

    pub fn abs(&self) -> Expr {
        Expr(Rc::new(Node::Abs(self.clone())))
    }

    pub fn sqrt(&self) -> Expr {
        Expr(Rc::new(Node::Sqrt(self.clone())))
    }

    pub fn uses_param(&self) -> bool {
        match &*self.0 {
            Node::Param => true,
            Node::Const(_) | Node::R => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.uses_param() || b.uses_param()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Abs(a) | Node::Sqrt(a) => a.uses_param(),
        }
    }

    pub fn has_sqrt(&self) -> bool {
        match &*self.0 {
            Node::Sqrt(_) => true,
            Node::Const(_) | Node::R | Node::Param => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.has_sqrt() || b.has_sqrt(),
            Node::Neg(a) | Node::Pow(a, _) | Node::Abs(a) => a.has_sqrt(),
        }
    }

    /// Enclosure on an `r` interval; the parameter, if present, is taken as 0.
    pub fn eval_interval(&self, r: &RatInterval) -> Result<RatInterval> {
        self.eval_box(r, &RatInterval::zero())
    }

    /// Enclosure over `r x c`.
    pub fn eval_box(&self, r: &RatInterval, c: &RatInterval) -> Result<RatInterval> {
        Ok(match &*self.0 {
            Node::Const(v) => RatInterval::point(v.clone()),
            Node::R => r.clone(),
            Node::Param => c.clone(),
            Node::Add(a, b) => a.eval_box(r, c)?.add(&b.eval_box(r, c)?),
            Node::Sub(a, b) => a.eval_box(r, c)?.sub(&b.eval_box(r, c)?),
            Node::Mul(a, b) => a.eval_box(r, c)?.mul(&b.eval_box(r, c)?),
            Node::Div(a, b) => a.eval_box(r, c)?.div(&b.eval_box(r, c)?)?,
            Node::Neg(a) => a.eval_box(r, c)?.neg(),
            Node::Pow(a, k) => a.eval_box(r, c)?.powi(*k),
            Node::Abs(a) => a.eval_box(r, c)?.abs(),
            Node::Sqrt(a) => a.eval_box(r, c)?.sqrt()?,
        })
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, r: &Rational, c: &Rational) -> Result<Rational> {
        Ok(match &*self.0 {
            Node::Const(v) => v.clone(),
            Node::R => r.clone(),
            Node::Param => c.clone(),
            Node::Add(a, b) => a.eval_exact(r, c)? + b.eval_exact(r, c)?,
            Node::Sub(a, b) => a.eval_exact(r, c)? - b.eval_exact(r, c)?,
            Node::Mul(a, b) => a.eval_exact(r, c)? * b.eval_exact(r, c)?,
            Node::Div(a, b) => {
                let d = b.eval_exact(r, c)?;
                if d.is_zero() {
                    return Err(Error::Expression(format!("division by zero at r = {r}")));
                }
                a.eval_exact(r, c)? / d
            }
            Node::Neg(a) => -a.eval_exact(r, c)?,
            Node::Pow(a, k) => num_traits::pow(a.eval_exact(r, c)?, *k as usize),
            Node::Abs(a) => a.eval_exact(r, c)?.abs(),
            Node::Sqrt(a) => {
                let v = a.eval_exact(r, c)?;
                let s = RatInterval::point(v).sqrt()?;
                if s.is_point() {
                    s.lo
                } else {
                    return Err(Error::Expression("square root is not rational".into()));
                }
            }
        })
    }

    /// Points where some `abs` argument changes sign, in `r` and in `c`.
    ///
    /// Every `abs` argument must be affine in exactly one variable.
    pub fn abs_breakpoints(&self) -> Result<(Vec<Rational>, Vec<Rational>)> {
        let mut rs = Vec::new();
        let mut cs = Vec::new();
        self.collect_breakpoints(&mut rs, &mut cs)?;
        rs.sort();
        rs.dedup();
        cs.sort();
        cs.dedup();
        Ok((rs, cs))
    }

    fn collect_breakpoints(&self, rs: &mut Vec<Rational>, cs: &mut Vec<Rational>) -> Result<()> {
        match &*self.0 {
            Node::Const(_) | Node::R | Node::Param => Ok(()),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_breakpoints(rs, cs)?;
                b.collect_breakpoints(rs, cs)
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Sqrt(a) => a.collect_breakpoints(rs, cs),
            Node::Abs(a) => {
                let bad = || Error::Expression("abs argument must be affine in r or in the parameter alone".into());
                // Nested abs is not supported, so any sample point works.
                let f = a.to_rational(&Rational::one(), &Rational::zero())?;
                if f.den.deg_x() != 0 || f.den.depends_on_p() {
                    return Err(bad());
                }
                let n = &f.num;
                if n.depends_on_p() {
                    if n.deg_x() != 0 {
                        return Err(bad());
                    }
                    let row = n.coefficient(0);
                    if row.len() != 2 {
                        return Err(bad());
                    }
                    cs.push(-&row[0] / &row[1]);
                } else {
                    if n.deg_x() != 1 {
                        return Err(bad());
                    }
                    let c0 = n.coefficient(0).first().cloned().unwrap_or_default();
                    let c1 = n.coefficient(1)[0].clone();
                    rs.push(-c0 / c1);
                }
                Ok(())
            }
        }
    }

    /// Exact quotient of polynomials in `(r, c)` valid on the piece that
    /// contains the sample point `(r0, c0)`, which must not be a breakpoint.
    pub fn to_rational(&self, r0: &Rational, c0: &Rational) -> Result<RatFunc> {
        Ok(match &*self.0 {
            Node::Const(v) => RatFunc::poly(BiPoly::constant(v.clone())),
            Node::R => RatFunc::poly(BiPoly::x()),
            Node::Param => RatFunc::poly(BiPoly::p()),
            Node::Add(a, b) => a.to_rational(r0, c0)?.add(&b.to_rational(r0, c0)?),
            Node::Sub(a, b) => a.to_rational(r0, c0)?.sub(&b.to_rational(r0, c0)?),
            Node::Mul(a, b) => a.to_rational(r0, c0)?.mul(&b.to_rational(r0, c0)?),
            Node::Div(a, b) => a.to_rational(r0, c0)?.div(&b.to_rational(r0, c0)?)?,
            Node::Neg(a) => a.to_rational(r0, c0)?.neg(),
            Node::Pow(a, k) => a.to_rational(r0, c0)?.powi(*k),
            Node::Abs(a) => {
                let s = a.eval_exact(r0, c0)?;
                if s.is_zero() {
                    return Err(Error::Expression("abs sample point sits on a breakpoint".into()));
                }
                let f = a.to_rational(r0, c0)?;
                if s.is_negative() {
                    f.neg()
                } else {
                    f
                }
            }
            Node::Sqrt(_) => {
                return Err(Error::Expression("sqrt has no exact rational form".into()));
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(v) => write!(f, "{v}"),
            Node::R => write!(f, "r"),
            Node::Param => write!(f, "c"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::Pow(a, k) => write!(f, "{a}^{k}"),
            Node::Abs(a) => write!(f, "|{a}|"),
            Node::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $node:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr(Rc::new(Node::$node(self, o)))
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                Expr(Rc::new(Node::$node(self.clone(), o.clone())))
            }
        }
        impl $tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, o: i64) -> Expr {
                Expr(Rc::new(Node::$node(self, int(o))))
            }
        }
        impl $tr<Expr> for i64 {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr(Rc::new(Node::$node(int(self), o)))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr(Rc::new(Node::Neg(self)))
    }
}

/// `num / den` with polynomials in `(r, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatFunc {
    pub num: BiPoly,
    pub den: BiPoly,
}

/// `k x^n` with `k` free of the parameter, if the polynomial has that shape.
fn monomial(p: &BiPoly) -> Option<(usize, Rational)> {
    if p.depends_on_p() {
        return None;
    }
    let u = p.as_univariate();
    let mut found = None;
    for (i, v) in u.iter().enumerate() {
        if !v.is_zero() {
            if found.is_some() {
                return None;
            }
            found = Some((i, v.clone()));
        }
    }
    found
}

impl RatFunc {
    pub fn poly(num: BiPoly) -> Self {
        Self {
            num,
            den: BiPoly::constant(Rational::one()),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return Self {
                num: self.num.add(&o.num),
                den: self.den.clone(),
            };
        }
        // Monomial denominators combine through their lcm to keep degrees low.
        if let (Some((i, a)), Some((j, b))) = (monomial(&self.den), monomial(&o.den)) {
            let n = i.max(j);
            let xs = |k: usize| BiPoly::x().powi(k as u32);
            let lhs = self.num.mul(&xs(n - i)).scale(&a.recip());
            let rhs = o.num.mul(&xs(n - j)).scale(&b.recip());
            return Self {
                num: lhs.add(&rhs),
                den: xs(n),
            };
        }
        Self {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        if o.num.is_zero() {
            return Err(Error::Expression("division by the zero function".into()));
        }
        Ok(Self {
            num: self.num.mul(&o.den),
            den: self.den.mul(&o.num),
        })
    }

    pub fn powi(&self, k: u32) -> Self {
        Self {
            num: self.num.powi(k),
            den: self.den.powi(k),
        }
    }

    /// Removes common factors `(r - z)` for the given candidate roots.
    pub fn cancel(&self, candidates: &[Rational]) -> Self {
        let mut out = self.clone();
        if out.num.is_zero() {
            out.den = BiPoly::constant(Rational::one());
            return out;
        }
        for z in std::iter::once(&Rational::zero()).chain(candidates) {
            while out.num.vanishes_at_x(z) && out.den.vanishes_at_x(z) {
                out.num = out.num.div_linear(z);
                out.den = out.den.div_linear(z);
            }
        }
        out
    }

    pub fn eval(&self, x: &Rational, p: &Rational) -> Result<Rational> {
        let d = self.den.eval(x, p);
        if d.is_zero() {
            return Err(Error::Expression(format!("denominator vanishes at r = {x}")));
        }
        Ok(self.num.eval(x, p) / d)
    }
}
