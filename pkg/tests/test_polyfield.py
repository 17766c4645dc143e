import random

import pytest
from gmpy2 import mpq

from agrlab.exactnum import PFp
from agrlab.maps import family_from_params, step_exact, step_pair_rf
from agrlab.polyfield import (
    GF,
    INDETERMINATE,
    QQ,
    UNDEFINED,
    MultiPoly,
    RationalFunction,
    evaluate_rf,
    minimal_form,
    mp_divexact,
    perturbation_eval,
    poly_gcd,
    poly_ops,
    reduce_rf,
    rf_compose,
)


def x_(field=QQ):
    return MultiPoly.var_x(field)


def y_(field=QQ):
    return MultiPoly.var_y(field)


def rf(num, den=None, field=QQ):
    if den is None:
        den = MultiPoly.const(1, field)
    return RationalFunction.make(num, den)


class TestPolyOps:
    def test_difference_of_squares(self):
        assert poly_ops(x_() + y_(), x_() - y_(), "*") == x_() * x_() - y_() * y_()

    def test_additive_identity(self):
        a = x_() * y_() + MultiPoly.const(mpq(2, 3), QQ)
        assert poly_ops(a, MultiPoly.zero(QQ), "+") == a

    def test_binomial_cancellation(self):
        one = MultiPoly.const(1, QQ)
        xp1 = x_() + one
        two_x = MultiPoly.from_terms([(1, 0, 2)], QQ)
        assert poly_ops(xp1 * xp1, x_() * x_() + two_x, "-") == one


class TestPolyGcd:
    def test_linear_factor(self):
        g = poly_gcd(x_() * x_() - y_() * y_(), x_() - y_())
        assert g == x_() - y_()

    def test_coprime(self):
        one = MultiPoly.const(1, QQ)
        assert poly_gcd(x_() + y_(), one) == one

    def test_shared_powers_verified_by_exact_division(self):
        s = x_() + y_()
        t = x_() - y_() - y_()  # x - 2y
        a = s * s * s * t
        b = s * t * t
        g = poly_gcd(a, b)
        assert g == s * t
        qa = mp_divexact(a, g)
        qb = mp_divexact(b, g)
        assert qa * g == a and qb * g == b
        assert poly_gcd(qa, qb) == MultiPoly.const(1, QQ)

    @pytest.mark.parametrize("field", [QQ, GF(7)])
    def test_random_products(self, field):
        rng = random.Random(5)

        def rand_poly():
            terms = [
                (rng.randrange(3), rng.randrange(3), rng.randrange(-4, 5))
                for _ in range(4)
            ]
            return MultiPoly.from_terms(terms, field)

        for _ in range(25):
            f, g, h = rand_poly(), rand_poly(), rand_poly()
            if f.is_zero or g.is_zero or h.is_zero:
                continue
            d = poly_gcd(f * h, g * h)
            # h divides the gcd of the products, and d divides both
            mp_divexact(d, h)
            assert mp_divexact(f * h, d) * d == f * h
            assert mp_divexact(g * h, d) * d == g * h


class TestCompose:
    def test_identity(self):
        fam = family_from_params("hv", {"a": "3"})
        step = step_pair_rf(fam, 0, None)
        ident = (RationalFunction.var_x(QQ), RationalFunction.var_y(QQ))
        assert rf_compose(step, ident) == step
        assert rf_compose(ident, step) == step

    def test_qrt_gamma0_self_composition(self):
        a = mpq(2)
        fam = family_from_params("qrt", {"a": "2", "gamma": "0"})
        step = step_pair_rf(fam, 0, None)
        fx, fy = rf_compose(step, step)
        expected_x = rf(
            MultiPoly.from_terms([(1, 0, a * a), (0, 0, a), (0, 1, 1)], QQ),
            x_() * y_(),
        )
        assert fx == expected_x
        assert fy == step[0]
        rng = random.Random(1)
        for _ in range(20):
            pt = (mpq(rng.randrange(1, 50), rng.randrange(1, 20)),
                  mpq(rng.randrange(1, 50), rng.randrange(1, 20)))
            direct = step_exact(fam, 1, step_exact(fam, 0, pt))
            got_x = fx.num.evaluate(pt[0], pt[1]) / fx.den.evaluate(pt[0], pt[1])
            got_y = fy.num.evaluate(pt[0], pt[1]) / fy.den.evaluate(pt[0], pt[1])
            assert (got_x, got_y) == direct

    def test_hv_two_steps_pointwise(self):
        fam = family_from_params("hv", {"a": "1"})
        step = step_pair_rf(fam, 0, None)
        fx, fy = rf_compose(step, step)
        rng = random.Random(2)
        for _ in range(20):
            pt = (mpq(rng.randrange(1, 40), rng.randrange(1, 15)),
                  mpq(rng.randrange(-30, 40), rng.randrange(1, 15)))
            if pt[0] == 0:
                continue
            direct = step_exact(fam, 1, step_exact(fam, 0, pt))
            got = (
                fx.num.evaluate(*pt) / fx.den.evaluate(*pt),
                fy.num.evaluate(*pt) / fy.den.evaluate(*pt),
            )
            assert got == direct


class TestMinimalForm:
    def test_divide_through(self):
        f = rf(
            MultiPoly.from_terms([(1, 0, 5), (0, 0, 25)], QQ),
            MultiPoly.from_terms([(0, 1, 5)], QQ),
        )
        mf, witness = minimal_form(f, 5)
        assert mf.num == x_() + MultiPoly.const(5, QQ)
        assert mf.den == y_()
        assert witness.power_of_p == 0

    def test_multiply_through(self):
        f = rf(
            MultiPoly.from_terms([(1, 0, 1), (0, 0, mpq(1, 5))], QQ),
            MultiPoly.from_terms([(0, 1, 1)], QQ),
        )
        mf, witness = minimal_form(f, 5)
        assert mf.num == MultiPoly.from_terms([(1, 0, 5), (0, 0, 1)], QQ)
        assert mf.den == MultiPoly.from_terms([(0, 1, 5)], QQ)
        assert witness.power_of_p == 1
        assert witness.unit_coefficient_index == (0, 0)

    def test_idempotent_and_witness_invariants(self):
        from agrlab.polyfield import _val_q
        from gmpy2 import mpz

        rng = random.Random(3)
        for _ in range(20):
            num = MultiPoly.from_terms(
                [
                    (rng.randrange(3), rng.randrange(2),
                     mpq(rng.randrange(-50, 50), 5 ** rng.randrange(3)))
                    for _ in range(3)
                ],
                QQ,
            )
            den = MultiPoly.from_terms([(0, 1, mpq(rng.randrange(1, 30), 5))], QQ)
            if num.is_zero:
                continue
            f = rf(num, den)
            mf, witness = minimal_form(f, 5)
            vals = [
                _val_q(c, mpz(5))
                for poly in (mf.num, mf.den)
                for c in poly.coeffs.values()
            ]
            assert min(vals) == 0 and all(v >= 0 for v in vals)
            side = mf.num if witness.unit_coefficient_index in mf.num.coeffs else mf.den
            assert _val_q(side.coeffs[witness.unit_coefficient_index], mpz(5)) == 0
            # idempotence: min valuation 0 means a second pass scales by p**0,
            # and the computation is deterministic
            assert minimal_form(f, 5) == (mf, witness)


class TestReduce:
    def test_reduce_examples(self):
        f = rf(
            MultiPoly.from_terms([(1, 0, 1), (0, 0, 5)], QQ),
            MultiPoly.from_terms([(0, 1, 1)], QQ),
        )
        r = reduce_rf(f, 5)
        assert r == RationalFunction.make(x_(GF(5)), y_(GF(5)))

        g = rf(
            MultiPoly.from_terms([(1, 0, 1), (0, 0, 7)], QQ),
            MultiPoly.from_terms([(0, 1, 7)], QQ),
        )
        assert reduce_rf(g, 7) is UNDEFINED

    def test_qp3_step_reduces_with_nonzero_denominator(self):
        fam = family_from_params(
            "qp3", {"a": "1", "b": "3", "c": "2", "d": "6", "q": "4"}
        )
        for n in range(3):
            f, _ = step_pair_rf(fam, n, None)
            reduced = reduce_rf(f, 11)
            assert reduced is not UNDEFINED
            assert not reduced.den.is_zero
            assert reduced == step_pair_rf(fam, n, 11)[0]


class TestEvaluate:
    def test_x_over_y_at_mixed_infinity(self):
        K = GF(7)
        f = RationalFunction.make(x_(K), y_(K))
        assert evaluate_rf(f, (PFp.finite(3, 7), PFp.infinity(7))) == PFp.finite(0, 7)
        assert evaluate_rf(f, (PFp.infinity(7), PFp.finite(3, 7))) == PFp.infinity(7)

    def test_cancellation_precedes_evaluation(self):
        K = GF(7)
        xm2 = MultiPoly.from_terms([(1, 0, 1), (0, 0, -2)], K)
        f = RationalFunction.make(xm2, xm2)
        for yv in range(7):
            assert evaluate_rf(f, (PFp.finite(2, 7), PFp.finite(yv, 7))) == PFp.finite(1, 7)

    def test_indeterminate(self):
        K = GF(7)
        f = RationalFunction.make(MultiPoly.from_terms([(2, 0, 1)], K), y_(K))
        assert evaluate_rf(f, (PFp.finite(0, 7), PFp.finite(0, 7))) is INDETERMINATE

    def test_inversion_symmetry(self):
        # f(x, y) at (inf, b) equals the cleared x -> 1/u form at (0, b)
        K = GF(11)
        rng = random.Random(4)
        for _ in range(20):
            num = MultiPoly.from_terms(
                [(rng.randrange(3), rng.randrange(3), rng.randrange(11)) for _ in range(4)], K
            )
            den = MultiPoly.from_terms(
                [(rng.randrange(3), rng.randrange(3), rng.randrange(11)) for _ in range(4)], K
            )
            if num.is_zero or den.is_zero:
                continue
            f = RationalFunction.make(num, den)
            d = max(f.num.deg_x, f.den.deg_x)
            cleared = RationalFunction.make(f.num.reverse_x(d), f.den.reverse_x(d))
            for b in range(11):
                lhs = evaluate_rf(f, (PFp.infinity(11), PFp.finite(b, 11)))
                rhs = evaluate_rf(cleared, (PFp.finite(0, 11), PFp.finite(b, 11)))
                assert lhs == rhs


class TestPerturbation:
    def test_hv_four_steps(self):
        fam = family_from_params("hv", {"a": "1"})
        p = 7
        steps = [step_pair_rf(fam, n, p) for n in range(4)]
        for yt in range(p):
            base = (PFp.finite(0, p), PFp.finite(yt, p))
            for lam in (1, 2, 3):
                value = perturbation_eval(steps, base, lam)
                assert value == (PFp.finite(yt, p), PFp.finite(0, p))

    def test_qp3_three_steps_from_y_zero(self):
        fam = family_from_params(
            "qp3", {"a": "1", "b": "3", "c": "2", "d": "6", "q": "4"}
        )
        p = 11
        a, b = 1, 3
        steps = [step_pair_rf(fam, n, p) for n in range(3)]
        for xt in range(1, p):
            if xt in (2, 6):  # base points x = c*q^0, d*q^0
                continue
            if xt in (a, b):
                continue
            base = (PFp.finite(xt, p), PFp.finite(0, p))
            value = perturbation_eval(steps, base, [1, 2, 3])
            expected = (
                PFp.finite(0, p),
                PFp.finite(a * b * pow(xt, -1, p), p),
            )
            assert value == expected

    def test_identity_steps(self):
        K = GF(5)
        ident = (RationalFunction.var_x(K), RationalFunction.var_y(K))
        base = (PFp.finite(2, 5), PFp.finite(4, 5))
        assert perturbation_eval([ident] * 3, base, [1, 2]) == base
