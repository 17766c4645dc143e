import random

import pytest
from gmpy2 import mpq

from agrlab.exactnum import PFp, reduce_point, valuation
from agrlab.maps import (
    REDUCED_SINGULARITY,
    ExactSingularity,
    family_from_params,
    family_params,
    in_domain,
    is_autonomous,
    step_exact,
    step_kind,
    step_pair_rf,
    step_reduced,
    step_symbolic,
    validate_params,
)
from agrlab.polyfield import GF, QQ, RationalFunction, UniRF


QP3 = family_from_params("qp3", {"a": "1", "b": "3", "c": "2", "d": "6", "q": "4"})
QP4 = family_from_params("qp4", {"a": "1", "b": "2", "q": "4", "tau0": "2"})
HV = family_from_params("hv", {"a": "1"})


def rand_rational(rng, span=40):
    return mpq(rng.randrange(-span, span + 1), rng.randrange(1, 12))


def exact_orbit(family, n0, start, length, rng):
    """A random exact orbit, resampling the start on singularities."""
    while True:
        pt = start()
        orbit = [pt]
        try:
            for k in range(length):
                pt = step_exact(family, n0 + k, pt)
                orbit.append(pt)
            return orbit
        except ExactSingularity:
            continue


class TestStepExact:
    def test_hv_direct_substitution(self):
        assert step_exact(HV, 0, (1, 2)) == (mpq(0), mpq(1))

    def test_qrt_gamma0(self):
        fam = family_from_params("qrt", {"a": "2", "gamma": "0"})
        assert step_exact(fam, 0, (1, 1)) == (mpq(3), mpq(1))

    def test_qp3_exact_singularity_at_a(self):
        with pytest.raises(ExactSingularity):
            step_exact(QP3, 0, (mpq(1), mpq(5)))

    def test_qp4_exact_singularity_at_xy_one(self):
        with pytest.raises(ExactSingularity):
            step_exact(QP4, 2, (mpq(2), mpq(1, 2)))


class TestStepReduced:
    def test_qp3_singular_at_a(self):
        for yt in range(11):
            out = step_reduced(QP3, 0, (PFp.finite(1, 11), PFp.finite(yt, 11)), 11)
            assert out is REDUCED_SINGULARITY

    def test_hv_value_mod_7(self):
        out = step_reduced(HV, 0, (PFp.finite(3, 7), PFp.finite(2, 7)), 7)
        assert out == (PFp.finite(5, 7), PFp.finite(3, 7))

    def test_hv_singular_line(self):
        for yt in range(7):
            out = step_reduced(HV, 0, (PFp.finite(0, 7), PFp.finite(yt, 7)), 7)
            assert out is REDUCED_SINGULARITY

    def test_singular_exactly_off_domain_predicate(self):
        for fam, n, p in ((QP3, 2, 11), (QP4, 1, 11), (HV, 0, 7)):
            for xr in range(p):
                for yr in range(p):
                    pt = (PFp.finite(xr, p), PFp.finite(yr, p))
                    singular = step_reduced(fam, n, pt, p) is REDUCED_SINGULARITY
                    assert singular == (not in_domain(fam, n, pt, p))


class TestValidation:
    def test_qp3_spec_example_passes_at_7(self):
        fam = family_from_params("qp3", {"a": "1", "b": "2", "c": "3", "d": "4", "q": "5"})
        report = validate_params(fam, 7)
        assert report.ok
        assert report.assumptions  # q-unit requirement is recorded

    def test_qrt_fractional_a_fails(self):
        fam = family_from_params("qrt", {"a": "1/5", "gamma": "2"})
        report = validate_params(fam, 5)
        assert not report.ok and "valuation" in report.violations[0]

    def test_qp4_resonance_detected(self):
        fam = family_from_params("qp4", {"a": "2", "b": "3", "q": "2", "tau0": "1"})
        report = validate_params(fam, 7)  # 2 * 4 * 1 = 8 = 1 mod 7
        assert not report.ok
        assert any("q^2" in v for v in report.violations)

    def test_qp3_equal_parameters_rejected(self):
        fam = family_from_params("qp3", {"a": "1", "b": "1", "c": "3", "d": "4", "q": "5"})
        assert not validate_params(fam, 11).ok

    def test_qp4_cd_input_sugar(self):
        native = family_from_params("qp4", {"a": "6", "b": "12", "q": "3", "tau0": "1/2"})
        sugar = family_from_params(
            "qp4", {"a": "3", "b": "6", "c": "2", "d": "1", "q": "3"}
        )
        assert native == sugar

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ValueError):
            family_from_params("hv", {"a": "1", "zeta": "2"})


class TestOrbitIdentities:
    """Consecutive exact orbit values satisfy the scalar three-point forms."""

    def test_hv_three_point(self):
        rng = random.Random(11)
        for _ in range(25):
            orbit = exact_orbit(
                HV, 0, lambda: (rand_rational(rng), rand_rational(rng)), 6, rng
            )
            xs = [pt[0] for pt in orbit]
            for k in range(1, len(xs) - 1):
                assert xs[k + 1] + xs[k - 1] == xs[k] + HV.a / xs[k] ** 2

    def test_qp3_three_point(self):
        rng = random.Random(12)
        a, b, c, d, q = QP3.a, QP3.b, QP3.c, QP3.d, QP3.q
        for _ in range(25):
            orbit = exact_orbit(
                QP3, 0, lambda: (rand_rational(rng), rand_rational(rng)), 6, rng
            )
            xs = [pt[0] for pt in orbit]
            for k in range(1, len(xs) - 1):
                n = k  # orbit starts at index 0
                lhs = xs[k + 1] * xs[k - 1]
                rhs = (
                    a * b * (xs[k] - c * q**n) * (xs[k] - d * q**n)
                    / ((xs[k] - a) * (xs[k] - b))
                )
                assert lhs == rhs

    def test_qp4_three_point(self):
        rng = random.Random(13)
        a, b, q, t0 = QP4.a, QP4.b, QP4.q, QP4.tau0
        for _ in range(25):
            orbit = exact_orbit(
                QP4, 0, lambda: (rand_rational(rng), rand_rational(rng)), 6, rng
            )
            xs = [pt[0] for pt in orbit]
            for k in range(1, len(xs) - 1):
                tau = q**k * t0
                lhs = (xs[k + 1] * xs[k] - 1) * (xs[k] * xs[k - 1] - 1)
                rhs = tau**2 * (a * xs[k] ** 2 + b * xs[k] + a) / (xs[k] + tau)
                assert lhs == rhs

    def test_second_component_is_previous_x(self):
        rng = random.Random(14)
        for fam in (HV, QP3, QP4):
            pt = (rand_rational(rng) + 100, rand_rational(rng) + 99)
            nxt = step_exact(fam, 1, pt)
            assert nxt[1] == pt[0]


class TestGoodReduction:
    def test_commutes_off_singularities(self):
        rng = random.Random(15)
        p = 13
        for fam in (HV, QP3, QP4, family_from_params("qrt", {"a": "3", "gamma": "2"})):
            checked = 0
            while checked < 40:
                lift = (
                    mpq(rng.randrange(0, p)) + p * mpq(rng.randrange(1, 99), rng.randrange(1, 99)),
                    mpq(rng.randrange(0, p)) + p * mpq(rng.randrange(1, 99), rng.randrange(1, 99)),
                )
                if valuation(lift[0], p) < 0 or valuation(lift[1], p) < 0:
                    continue
                residue = reduce_point(lift, p)
                n = rng.randrange(-3, 4)
                reduced = step_reduced(fam, n, residue, p)
                if reduced is REDUCED_SINGULARITY:
                    continue
                try:
                    exact = step_exact(fam, n, lift)
                except ExactSingularity:
                    continue
                assert reduce_point(exact, p) == reduced
                checked += 1


class TestSymbolic:
    def test_qrt_step_is_its_own_formula(self):
        fam = family_from_params("qrt", {"a": "5", "gamma": "0"})
        fx, fy = step_pair_rf(fam, 0, None)
        x = RationalFunction.var_x(QQ)
        y = RationalFunction.var_y(QQ)
        assert fx == (5 * x + 1) / y
        assert fy == x

    def test_symbolic_matches_exact_pointwise(self):
        rng = random.Random(16)
        for fam in (HV, QP3, QP4):
            pair = step_pair_rf(fam, 2, None)
            checked = 0
            while checked < 50:
                pt = (rand_rational(rng), rand_rational(rng))
                try:
                    direct = step_exact(fam, 2, pt)
                except ExactSingularity:
                    continue
                den_x = pair[0].den.evaluate(*pt)
                den_y = pair[1].den.evaluate(*pt)
                if den_x == 0 or den_y == 0:
                    continue
                got = (
                    pair[0].num.evaluate(*pt) / den_x,
                    pair[1].num.evaluate(*pt) / den_y,
                )
                assert got == direct
                checked += 1

    def test_three_qp3_steps_along_line_reproduce_x_eq_a_recovery(self):
        # symbolic orbit from (a + t, y0) over F_p(t), then t -> 0
        p = 11
        K = GF(p)
        a, b, c, d, q = (v % p for v in (1, 3, 2, 6, 4))
        y0 = 5
        pt = (UniRF.const(a, K) + UniRF.var_t(K), UniRF.const(y0, K))
        for k in range(3):
            pt = step_symbolic(QP3, k, pt)
        value = (pt[0].value_at_zero(), pt[1].value_at_zero())
        num = a * (b - c * q * q) * (b - d * q * q) * y0
        den = b * (a - c) * (a - d) - (a - b) * (a + b - c * q - d * q) * y0
        expected = (
            PFp.finite(num * pow(den, -1, p), p),
            PFp.finite(b, p),
        )
        assert value == expected


class TestDomain:
    def test_qp4_excluded_line_moves_with_n(self):
        # q^n tau0 = 3 mod 7 for some n; the residue (-3, anything) is out
        fam = family_from_params("qp4", {"a": "1", "b": "2", "q": "2", "tau0": "3"})
        p = 7
        n = 0  # tau = 3
        for yt in range(p):
            assert not in_domain(fam, n, (PFp.finite(-3 % p, p), PFp.finite(yt, p)), p)
        # at n = 1 the excluded line moves to -q*tau0 = -6 = 1 mod 7
        assert in_domain(fam, 1, (PFp.finite(-3 % p, p), PFp.finite(1, p)), p)
        assert not in_domain(fam, 1, (PFp.finite(1, p), PFp.finite(3, p)), p)

    def test_hv_examples(self):
        assert not in_domain(HV, 0, (PFp.finite(0, 7), PFp.finite(5, 7)), 7)
        assert in_domain(HV, 0, (PFp.finite(1, 7), PFp.finite(0, 7)), 7)

    def test_qrt_gamma0_only_y(self):
        fam = family_from_params("qrt", {"a": "1", "gamma": "0"})
        assert in_domain(fam, 0, (PFp.finite(0, 7), PFp.finite(1, 7)), 7)
        assert not in_domain(fam, 0, (PFp.finite(3, 7), PFp.finite(0, 7)), 7)

    def test_exact_domain_requires_integrality(self):
        assert not in_domain(HV, 0, (mpq(1, 7), mpq(2)), 7)
        assert in_domain(HV, 0, (mpq(1, 3), mpq(2)), 7)
        assert not in_domain(QP3, 0, (QP3.a, mpq(5)), 11)

    def test_step_kind_classification(self):
        # (c, 0) is a 0/0 base point of the qp3 step at n = 0
        assert step_kind(QP3, 0, (PFp.finite(2, 11), PFp.finite(0, 11)), 11) == "base"
        assert step_kind(QP3, 0, (PFp.finite(1, 11), PFp.finite(5, 11)), 11) == "pole"
        assert step_kind(QP3, 0, (PFp.finite(4, 11), PFp.finite(5, 11)), 11) == "regular"
        for yt in range(7):
            assert step_kind(HV, 0, (PFp.finite(0, 7), PFp.finite(yt, 7)), 7) == "pole"


def test_family_metadata():
    assert is_autonomous(HV) and not is_autonomous(QP3)
    assert family_params(QP3) == {"a": "1", "b": "3", "c": "2", "d": "6", "q": "4"}
