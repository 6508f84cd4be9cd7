//! The fixed list of radial inequalities behind the energy and Morawetz
//! estimates, with `M = 1`.

use super::expr::{frac, int, param, r, Expr};
use super::interval::{rat, rat_int, Rational};
use super::{certify_all, CertificateReport, Domain, Inequality};
use crate::error::Result;

pub struct CorpusItem {
    pub id: &'static str,
    pub description: &'static str,
    pub conditions: Vec<Inequality>,
    /// Parameter range, if the item is a family.
    pub param: Option<(Rational, Rational)>,
}

fn lapse() -> Expr {
    (r() - 2) / r()
}

/// `f_A = (r - 3)(r - 2) / (2 r^2)`.
pub fn morawetz_a() -> Expr {
    (r() - 3) * (r() - 2) / (2 * r().pow(2))
}

pub fn morawetz_a_prime() -> Expr {
    frac(5, 2) / r().pow(2) - int(6) / r().pow(3)
}

pub fn morawetz_g() -> Expr {
    frac(5, 6) * 3 * (r() - 3).pow(2) * (r() - 2) / (4 * r().pow(5))
}

pub fn morawetz_q() -> Expr {
    int(9) * (r() - 2) * (2 * r() - 3) / (4 * r().pow(5))
}

/// Coefficients `(b0, b1, b2)` of the quadratic form in the Morawetz bulk.
pub fn bulk_coefficients() -> (Expr, Expr, Expr) {
    let s = (r() - 3).pow(2);
    let r5 = r().pow(5);
    (
        &s * &(int(14) - 7 * r() + 4 * r().pow(2)) / (16 * r5.clone()),
        (int(90) - 105 * r() + 28 * r().pow(2) + r().pow(3)) / (4 * r5.clone()),
        &s * &(int(10) - 5 * r() + 4 * r().pow(2)) / (16 * r5),
    )
}

/// `g(xi + c A, xi + c A)` for the static Killing field and the radial
/// field `A = f_A d/dr`.
fn causal_norm(alpha: Expr, c: Expr) -> Expr {
    let f = lapse();
    alpha.pow(2) * f.clone() - c.pow(2) * morawetz_a().pow(2) / f
}

pub fn corpus() -> Vec<CorpusItem> {
    let (b0, b1, b2) = bulk_coefficients();
    let deg_z = (r() - 2) / r().pow(3);
    let deg_ang = (r() - 3).pow(2) / r().pow(3);

    let f = morawetz_a();
    let fp = morawetz_a_prime();
    let g = morawetz_g();
    let q = morawetz_q();
    let hz = &f / &((r() - 2) * r());
    let half_fp = frac(1, 2) * fp;

    let bound = frac(9, 8) / r().pow(4) * (int(6) - 13 * r() + 6 * r().pow(2) + (r() - 3).abs() * (3 * r() - 5));
    let cubic = 5 * r().pow(3) - 84 * r().pow(2) + 423 * r() - 540;

    let alpha = int(1) - frac(2, 5) * param().abs();

    vec![
        CorpusItem {
            id: "a",
            description: "eigenvalue conditions for the bulk quadratic form and its degenerate lower bound",
            conditions: vec![
                Inequality::ge0("b1 >= 0", b1.clone()),
                Inequality::ge0("b2 >= 0", b2.clone()),
                Inequality::ge0("b0 + b2 >= 0", &b0 + &b2),
                Inequality::ge0("b0 - (b2 - b1) >= 0", &b0 - &(&b2 - &b1)),
                Inequality::ge0("b2 - b0 >= 0", &b2 - &b0),
                Inequality::ge0("b0 + b1 - b2 >= deg_Z / 8", &(&(&b0 + &b1) - &b2) - &(frac(1, 8) * deg_z)),
                Inequality::ge0("b0 + b2 >= deg_ang / 8", &(&b0 + &b2) - &(frac(1, 8) * deg_ang)),
            ],
            param: None,
        },
        CorpusItem {
            id: "b",
            description: "bounds on the weights g and q given the Morawetz profile f",
            conditions: vec![
                Inequality::ge0("g >= 0", g.clone()),
                Inequality::ge0("g <= f'/2 - M f/((r-2M) r)", &(&half_fp - &hz) - &g),
                Inequality::ge0("g <= f (r-3M)/((r-2M) r)", &(&hz * &(r() - 3)) - &g),
                Inequality::ge0("q >= g + M f/((r-2M) r) - f'/2", &q - &(&(&g + &hz) - &half_fp)),
                Inequality::ge0("q >= -f/r + f'/2", &q - &(&half_fp - &(&f / &r()))),
                Inequality::ge0("q <= -g - M f/((r-2M) r) + f'/2", &(&(&half_fp - &g) - &hz) - &q),
            ],
            param: None,
        },
        CorpusItem {
            id: "c",
            description: "(9/8) M^2 r^-4 (6M^2 - 13Mr + 6r^2 + |r-3M|(3r-5M)) <= 2/5",
            conditions: vec![Inequality::le0("bound <= 2/5", bound - frac(2, 5))],
            param: None,
        },
        CorpusItem {
            id: "d",
            description: "5r^3 - 84Mr^2 + 423M^2 r - 540M^3 >= r^3/25",
            conditions: vec![Inequality::ge0("cubic >= r^3/25", cubic - frac(1, 25) * r().pow(3))],
            param: None,
        },
        CorpusItem {
            id: "e",
            description: "xi + c A is causal and future directed for |c| <= 2",
            conditions: vec![Inequality::ge0("g(xi + cA, xi + cA) >= 0", causal_norm(int(1), param()))],
            param: Some((rat_int(-2), rat_int(2))),
        },
        CorpusItem {
            id: "f",
            description: "(1 - (2/5)|c1|) xi + c1 A is causal and future directed for |c1| <= 10/9",
            conditions: vec![
                Inequality::ge0("1 - (2/5)|c1| >= 0", alpha.clone()),
                Inequality::ge0("g(V, V) >= 0", causal_norm(alpha, param())),
            ],
            param: Some((rat(-10, 9), rat(10, 9))),
        },
    ]
}

/// Runs every corpus item with tail radius `radius` (in units of `M`).
pub fn certify_corpus(radius: Rational, depth: usize) -> Result<Vec<CertificateReport>> {
    corpus()
        .iter()
        .map(|item| {
            let mut domain = Domain::exterior(radius.clone());
            if let Some((lo, hi)) = &item.param {
                domain = domain.with_param(lo.clone(), hi.clone());
            }
            certify_all(item.id, item.description, &item.conditions, &domain, depth)
        })
        .collect()
}
