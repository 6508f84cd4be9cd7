//! Sign certification of `N / D` on a box by exact factoring of saturation
//! roots followed by interval bisection.

use num_traits::{One, Signed, Zero};

use super::expr::RatFunc;
use super::interval::{RatInterval, Rational};
use super::poly::{convergents, poly_derivative, poly_gcd, sign_change_roots, BiPoly};
use super::interval::to_f64;

/// Where a nonnegativity claim stops being strict.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Saturation {
    /// `None` stands for `r = infinity`.
    pub r: Option<Rational>,
    /// `None` when the point is saturated for every parameter value.
    pub param: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub r: Rational,
    pub param: Option<Rational>,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(Witness),
    Inconclusive { r: (f64, f64), param: (f64, f64) },
}

impl Status {
    fn is_ok(&self) -> bool {
        matches!(self, Status::Ok)
    }
}

/// Upper limit on processed boxes per search, on top of the depth limit.
const NODE_BUDGET: usize = 2_000_000;

/// State for one piece of one inequality.
pub struct Search<'a> {
    /// The piece in `r`, used for witness values.
    pub piece: &'a RatFunc,
    /// Whether the box variable is `u = M/r`.
    pub tail: bool,
    pub has_param: bool,
    pub depth: usize,
    pub subdivisions: usize,
    pub saturations: Vec<Saturation>,
}

impl<'a> Search<'a> {
    pub fn new(piece: &'a RatFunc, tail: bool, has_param: bool, depth: usize) -> Self {
        Self {
            piece,
            tail,
            has_param,
            depth,
            subdivisions: 0,
            saturations: Vec::new(),
        }
    }

    fn radius_of(&self, x: &Rational) -> Option<Rational> {
        if !self.tail {
            Some(x.clone())
        } else if x.is_zero() {
            None
        } else {
            Some(x.recip())
        }
    }

    fn witness(&self, x: &Rational, p: &Rational) -> Option<Witness> {
        let r = self.radius_of(x)?;
        let value = self.piece.eval(&r, p).ok()?;
        Some(Witness {
            r,
            param: self.has_param.then(|| p.clone()),
            value,
        })
    }

    fn inconclusive(&self, bx: &RatInterval, bp: &RatInterval) -> Status {
        let (a, b) = (to_f64(&bx.lo), to_f64(&bx.hi));
        let r = if self.tail {
            (1.0 / b, if a == 0.0 { f64::INFINITY } else { 1.0 / a })
        } else {
            (a, b)
        };
        Status::Inconclusive {
            r,
            param: (to_f64(&bp.lo), to_f64(&bp.hi)),
        }
    }

    /// Constant nonzero sign of `d` on the box, if it can be shown.
    pub fn fixed_sign(&mut self, d: &BiPoly, xs: &RatInterval, ps: &RatInterval) -> Option<i8> {
        let mut sign = 0i8;
        let mut stack = vec![(xs.clone(), ps.clone(), 0usize)];
        while let Some((bx, bp, lvl)) = stack.pop() {
            self.subdivisions += 1;
            let e = d.eval_interval(&bx, &bp);
            let s = if e.lo.is_positive() {
                1
            } else if e.hi.is_negative() {
                -1
            } else {
                if lvl >= self.depth || d.eval(&bx.mid(), &bp.mid()).is_zero() {
                    return None;
                }
                split_box(&mut stack, bx, bp, lvl, xs, ps);
                continue;
            };
            if sign != 0 && sign != s {
                return None;
            }
            sign = s;
        }
        Some(sign)
    }

    /// Certifies `n / d >= 0` on `xs x ps`.
    pub fn segment(&mut self, n: &BiPoly, d: &BiPoly, xs: &RatInterval, ps: &RatInterval, hints: &[Rational]) -> Status {
        let Some(sd) = self.fixed_sign(d, xs, ps) else {
            return self.inconclusive(xs, ps);
        };
        let n = if sd < 0 { n.neg() } else { n.clone() };
        let p_label = |p: &RatInterval| (self.has_param && p.is_point()).then(|| p.lo.clone());
        if n.is_zero() {
            self.saturations.push(Saturation {
                r: self.radius_of(&xs.lo),
                param: p_label(ps),
            });
            return Status::Ok;
        }

        // Exact probes at the ends and at the hinted points.
        let mut probes: Vec<Rational> = vec![xs.lo.clone(), xs.hi.clone()];
        probes.extend(hints.iter().filter(|z| xs.contains(z)).cloned());
        for x in &probes {
            if self.tail && x.is_zero() {
                continue;
            }
            for p in [&ps.lo, &ps.hi] {
                if n.eval(x, p).is_negative() {
                    if let Some(w) = self.witness(x, p) {
                        return Status::Failed(w);
                    }
                }
            }
        }

        let zs = self.saturation_points(&n, xs, ps, &probes);
        let mut q = n;
        let mut roots: Vec<(Rational, u32)> = Vec::new();
        for z in zs {
            let mut m = 0;
            while q.vanishes_at_x(&z) && !q.is_zero() {
                q = q.div_linear(&z);
                m += 1;
            }
            if m > 0 {
                self.saturations.push(Saturation {
                    r: self.radius_of(&z),
                    param: p_label(ps),
                });
                roots.push((z, m));
            }
        }

        let mut cuts: Vec<Rational> = vec![xs.lo.clone(), xs.hi.clone()];
        cuts.extend(roots.iter().map(|(z, _)| z.clone()));
        cuts.sort();
        cuts.dedup();
        if cuts.len() == 1 {
            cuts.push(cuts[0].clone());
        }
        for w in cuts.windows(2) {
            let seg = RatInterval::new(w[0].clone(), w[1].clone());
            let mid = seg.mid();
            let mut sign = 1i8;
            let mut vanishes = false;
            for (z, m) in &roots {
                let t = &mid - z;
                if t.is_zero() {
                    vanishes = true;
                } else if t.is_negative() && m % 2 == 1 {
                    sign = -sign;
                }
            }
            if vanishes {
                continue;
            }
            let qs = if sign < 0 { q.neg() } else { q.clone() };
            let status = self.bisect(&qs, &seg, ps, hints);
            if !status.is_ok() {
                return status;
            }
        }
        Status::Ok
    }

    /// Rational `x` in `xs` where `n` vanishes for every parameter value:
    /// the probes plus rational repeated roots found through `gcd(n, n')`.
    fn saturation_points(&self, n: &BiPoly, xs: &RatInterval, ps: &RatInterval, probes: &[Rational]) -> Vec<Rational> {
        let mut out: Vec<Rational> = probes.iter().filter(|z| n.vanishes_at_x(z)).cloned().collect();
        let nu = n.at_p(&ps.mid()).as_univariate();
        let g = poly_gcd(&nu, &poly_derivative(&nu));
        if g.len() >= 2 && !xs.is_point() {
            for root in sign_change_roots(&g, to_f64(&xs.lo), to_f64(&xs.hi)) {
                for z in convergents(root, 1_000_000) {
                    if xs.contains(&z) && n.vanishes_at_x(&z) {
                        out.push(z);
                        break;
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Shows `q >= 0` on the box, where `q` has no saturation roots left in
    /// `x`. A box whose parameter derivative has fixed sign is reduced to
    /// the parameter endpoint where `q` is smallest.
    fn bisect(&mut self, q: &BiPoly, xs: &RatInterval, ps: &RatInterval, hints: &[Rational]) -> Status {
        let dq = q.derivative_p();
        let mut stack = vec![(xs.clone(), ps.clone(), 0usize)];
        while let Some((bx, bp, lvl)) = stack.pop() {
            self.subdivisions += 1;
            let e = q.eval_interval(&bx, &bp);
            if e.lo.is_positive() {
                continue;
            }
            let (mx, mp) = (bx.mid(), bp.mid());
            if q.eval(&mx, &mp).is_negative() {
                if let Some(w) = self.witness(&mx, &mp) {
                    return Status::Failed(w);
                }
            }
            if !bp.is_point() && !dq.is_zero() {
                let de = dq.eval_interval(&bx, &bp);
                let end = if !de.lo.is_negative() {
                    Some(bp.lo.clone())
                } else if !de.hi.is_positive() {
                    Some(bp.hi.clone())
                } else {
                    None
                };
                if let Some(end) = end {
                    let sub = q.at_p(&end);
                    let one = BiPoly::constant(Rational::one());
                    let status = self.segment(&sub, &one, &bx, &RatInterval::point(end), hints);
                    if !status.is_ok() {
                        return status;
                    }
                    continue;
                }
            }
            if lvl >= self.depth || self.subdivisions >= NODE_BUDGET {
                return self.inconclusive(&bx, &bp);
            }
            split_box(&mut stack, bx, bp, lvl, xs, ps);
        }
        Status::Ok
    }
}

/// Halves the box along its relatively wider side.
fn split_box(
    stack: &mut Vec<(RatInterval, RatInterval, usize)>,
    bx: RatInterval,
    bp: RatInterval,
    lvl: usize,
    xs: &RatInterval,
    ps: &RatInterval,
) {
    let split_x = if bp.is_point() {
        true
    } else if bx.is_point() {
        false
    } else {
        bx.width() / xs.width() >= bp.width() / ps.width()
    };
    if split_x {
        let (a, b) = bx.split();
        stack.push((b, bp.clone(), lvl + 1));
        stack.push((a, bp, lvl + 1));
    } else {
        let (a, b) = bp.split();
        stack.push((bx.clone(), b, lvl + 1));
        stack.push((bx, a, lvl + 1));
    }
}

/// `u^k` on `[a, b]` with `0 <= a`; `None` for an unbounded upper end.
fn power_enclosure(u: &RatInterval, k: i64) -> (Rational, Option<Rational>) {
    let pw = |x: &Rational, k: i64| -> Option<Rational> {
        if k >= 0 {
            Some(num_traits::pow(x.clone(), k as usize))
        } else if x.is_zero() {
            None
        } else {
            Some(num_traits::pow(x.recip(), (-k) as usize))
        }
    };
    if k >= 0 {
        (pw(&u.lo, k).unwrap_or_default(), pw(&u.hi, k))
    } else {
        (pw(&u.hi, k).unwrap_or_default(), pw(&u.lo, k))
    }
}

/// Two-sided enclosure of `inf (n/d) * u^k` by best-first refinement;
/// `k` is `None` away from the tail. The lower end is `None` when unbounded.
pub fn infimum_enclosure(
    n: &BiPoly,
    d: &BiPoly,
    xs: &RatInterval,
    ps: &RatInterval,
    k: Option<i64>,
    budget: usize,
) -> (Option<Rational>, Option<Rational>) {
    let lower_of = |bx: &RatInterval, bp: &RatInterval| -> Option<Rational> {
        let de = d.eval_interval(bx, bp);
        let q = n.eval_interval(bx, bp).div(&de).ok()?;
        match k {
            None => Some(q.lo),
            Some(k) => {
                let (wlo, whi) = power_enclosure(bx, k);
                if !q.lo.is_negative() {
                    Some(&q.lo * wlo)
                } else {
                    whi.map(|w| &q.lo * w)
                }
            }
        }
    };
    let value = |x: &Rational, p: &Rational| -> Option<Rational> {
        let dv = d.eval(x, p);
        if dv.is_zero() {
            return None;
        }
        let q = n.eval(x, p) / dv;
        match k {
            None => Some(q),
            Some(k) if x.is_zero() => (k == 0).then_some(q),
            Some(k) => Some(q * power_enclosure(&RatInterval::point(x.clone()), k).0),
        }
    };
    let mut best: Option<Rational> = None;
    let probe = |x: &Rational, p: &Rational, best: &mut Option<Rational>| {
        if let Some(v) = value(x, p) {
            if best.as_ref().is_none_or(|b| &v < b) {
                *best = Some(v);
            }
        }
    };
    for x in [&xs.lo, &xs.hi] {
        for p in [&ps.lo, &ps.hi] {
            probe(x, p, &mut best);
        }
    }
    let mut leaves: Vec<(Option<Rational>, RatInterval, RatInterval)> =
        vec![(lower_of(xs, ps), xs.clone(), ps.clone())];
    for _ in 0..budget {
        // Refine the leaf with the smallest lower bound.
        let (idx, _) = leaves
            .iter()
            .enumerate()
            .min_by(|a, b| match (&a.1 .0, &b.1 .0) {
                (None, None) => std::cmp::Ordering::Equal,
                (None, _) => std::cmp::Ordering::Less,
                (_, None) => std::cmp::Ordering::Greater,
                (Some(x), Some(y)) => x.cmp(y),
            })
            .expect("at least one leaf");
        if let (Some(lo), Some(hi)) = (&leaves[idx].0, &best) {
            if hi - lo <= hi.abs() * Rational::new(1.into(), 1000.into()) {
                break;
            }
        }
        let (_, bx, bp) = leaves.swap_remove(idx);
        probe(&bx.mid(), &bp.mid(), &mut best);
        let mut stack = Vec::new();
        split_box(&mut stack, bx, bp, 0, xs, ps);
        for (cx, cp, _) in stack {
            leaves.push((lower_of(&cx, &cp), cx, cp));
        }
    }
    let lo = leaves
        .iter()
        .map(|l| l.0.clone())
        .try_fold(None::<Rational>, |acc, v| {
            let v = v?;
            Some(Some(match acc {
                Some(a) if a < v => a,
                _ => v,
            }))
        })
        .flatten();
    (lo, best)
}
