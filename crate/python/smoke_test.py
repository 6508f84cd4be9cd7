"""Smoke test for the Python bindings.

Build and install first, for example:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/maxwell_morawetz_py-*.whl
    python python/smoke_test.py
"""

import cmath
import json
import math

import maxwell_morawetz_py as mm


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok   {what}")


def main():
    bh = mm.Schwarzschild(1.0)
    check(bh.horizon() == 2.0 and bh.photon_sphere() == 3.0, "horizon and photon sphere")
    check(abs(bh.lapse(4.0) - 0.5) < 1e-15, "lapse at r = 4M")
    check(bh.morawetz_a(3.0) == 0.0 and bh.morawetz_a(5.0) > 0.0, "A vanishes at the photon sphere")
    r = bh.invert_tortoise(bh.tortoise(7.5))
    check(abs(r - 7.5) < 1e-12, "tortoise inversion")
    try:
        bh.lapse(1.0)
    except ValueError:
        check(True, "inside the horizon raises ValueError")
    else:
        raise SystemExit("FAIL: lapse(1.0) accepted")

    form = mm.QuadraticForm(0.5, 1.0, 1.0)
    check(form.is_nonnegative(), "nonnegative form")
    check(sorted(form.eigenvalues()) == [0.5, 0.5, 1.5, 1.5], "eigenvalues")
    check(abs(form.evaluate([1j, 0, 0, 0]) - 0.5) < 1e-15, "form on T")
    bulk = mm.QuadraticForm.morawetz_bulk(10.0)
    check(bulk.is_nonnegative(), "Morawetz bulk form at r = 10M")

    check(mm.hardy_ratio(1) == 1.0 and abs(mm.hardy_ratio(3) - 1 / 6) < 1e-16, "Hardy ratios")
    y = mm.spin_harmonic(0, 0, 0, 0.3, 0.1)
    check(abs(y - 1.0) < 1e-14, "Y00 normalised to one")
    check(isinstance(mm.spin_harmonic(1, 2, 1, 0.7, 1.1), complex), "spin harmonic is complex")
    check(abs(mm.ladder_factor(1, 2.0) - 0.5) < 1e-15, "ladder factor")

    cfg = mm.RunConfig("n_points = 513\nl_max = 1\nt_final = 10\noutput_every = 2\n")
    s = cfg.evolve()
    check(s.passed(), "short evolution has no violations")
    check(len(s.rows) == 6 and s.rows[0][0] == 0.0, "evolution rows")
    check(s.energy_drift < 1e-6 and 0.1 <= s.min_aq_ratio <= s.max_aq_ratio <= 1.9, "energy diagnostics")
    check(s.morawetz_ratio <= mm.MORAWETZ_BOUND, "Morawetz ratio below 72/5")

    coul = mm.RunConfig("family = coulomb\nq_e = 1\nq_b = 1\ncoulomb_steps = 50\n").coulomb_check()
    check(coul.passed(), "Coulomb field is annihilated")
    try:
        mm.RunConfig("mass = -1")
    except ValueError as e:
        check("mass" in str(e), "bad config raises ValueError")
    else:
        raise SystemExit("FAIL: bad config accepted")

    reports = mm.certify_corpus()
    check([r.id for r in reports] == list("abcdef"), "corpus ids")
    check(all(r.verdict == "certified" for r in reports), "corpus certified")
    b = next(r for r in reports if r.id == "b")
    check(b.saturations == ["r = 2 M", "r = 3 M"], "(b) saturates at 2M and 3M")
    c = next(r for r in reports if r.id == "c")
    check(c.margin[0] > 0.0, "(c) has a positive margin")
    check(json.loads(c.json)["id"] == "c", "JSON report")
    check(not math.isnan(c.wall_time) and cmath.isfinite(c.wall_time), "timing recorded")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
