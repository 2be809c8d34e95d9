import random

import pytest

from qdrh.errors import MismatchedAlgebra
from qdrh.framed import (
    AlgebraElement,
    DifferentialForm,
    Framing,
    VariableSpec,
    d_q,
    insertion_sign,
)
from qdrh.qarith import QQ, QSeries, q_integer_series, q_power_series, zmod

N = 6
R = zmod(5, 2)


def laurent1():
    return Framing.laurent(1)


def poly1(shift):
    return Framing.poly([shift])


def rand_series(rng, ring=R, prec=N):
    return QSeries(ring, [rng.randrange(25) for _ in range(prec)])


def rand_element(rng, framing, lo, hi, nterms=3, ring=R, prec=N):
    terms = {}
    for _ in range(nterms):
        exp = []
        for spec in framing.variables:
            low = lo if spec.kind == "laurent" else max(lo, 0)
            exp.append(rng.randint(low, hi))
        terms[tuple(exp)] = rand_series(rng, ring, prec)
    return AlgebraElement(framing, ring, prec, terms)


class TestFraming:
    def test_laurent_shift_rejected(self):
        with pytest.raises(ValueError):
            VariableSpec("laurent", 1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            VariableSpec("rational")

    def test_json_round_trip(self):
        fr = Framing((VariableSpec("poly", 2), VariableSpec("laurent")))
        assert Framing.from_json(fr.to_json()) == fr

    def test_negative_exponent_needs_laurent(self):
        with pytest.raises(ValueError):
            AlgebraElement(poly1(0), R, N, {(-1,): QSeries.one(R, N)})


class TestGamma:
    def test_gamma_on_coordinate_with_shift(self):
        # gamma(x) = q x + (q-1) c
        c = 3
        fr = poly1(c)
        x = AlgebraElement.monomial(fr, R, N, (1,))
        g = x.gamma(0)
        q = QSeries.q(R, N)
        t = QSeries.t(R, N)
        assert g.coefficient((1,)) == q
        assert g.coefficient((0,)) == t.scale_int(c)

    def test_gamma_multiplicative(self):
        rng = random.Random(1001)
        for fr in [laurent1(), poly1(0), poly1(1), poly1(2)]:
            for _ in range(6):
                f = rand_element(rng, fr, -3, 4)
                g = rand_element(rng, fr, -3, 4)
                assert (f * g).gamma(0) == f.gamma(0) * g.gamma(0)

    def test_gamma_laurent_is_q_power(self):
        fr = laurent1()
        for m in (-4, -1, 0, 2, 5):
            f = AlgebraElement.monomial(fr, R, N, (m,))
            assert f.gamma(0).coefficient((m,)) == q_power_series(m, R, N)

    def test_gammas_commute(self):
        fr = Framing((VariableSpec("poly", 1), VariableSpec("laurent")))
        rng = random.Random(7)
        for _ in range(5):
            f = rand_element(rng, fr, -3, 4)
            assert f.gamma(0).gamma(1) == f.gamma(1).gamma(0)


class TestNabla:
    def test_monomial_rule_laurent(self):
        fr = laurent1()
        for m in (-4, -1, 0, 1, 5):
            f = AlgebraElement.monomial(fr, R, N, (m,))
            df = f.nabla(0)
            if m == 0:
                assert df.is_zero()
            else:
                assert df.support() == [(m - 1,)]
                assert df.coefficient((m - 1,)) == q_integer_series(m, R, N)

    def test_monomial_rule_shifted(self):
        # nabla(T^m) = [m]_q T^(m-1) for T = x + c
        c = 2
        fr = poly1(c)
        T = AlgebraElement(fr, R, N, {(1,): QSeries.one(R, N),
                                      (0,): QSeries.from_int(R, c, N)})
        Tm = T * T * T
        expect = (T * T).scale(q_integer_series(3, R, N))
        assert Tm.nabla(0) == expect

    def test_q_leibniz(self):
        # nabla(fg) = g nabla(f) + gamma(f) nabla(g)
        rng = random.Random(2024)
        for fr in [laurent1(), poly1(0), poly1(1), poly1(3)]:
            for _ in range(8):
                f = rand_element(rng, fr, -3, 4)
                g = rand_element(rng, fr, -3, 4)
                lhs = (f * g).nabla(0)
                rhs = g * f.nabla(0) + f.gamma(0) * g.nabla(0)
                assert lhs == rhs, fr

    def test_specializes_to_classical_derivative(self):
        rng = random.Random(88)
        for fr in [laurent1(), poly1(2)]:
            for _ in range(6):
                f = rand_element(rng, fr, -3, 5)
                assert f.nabla(0).specialize_q_one() == \
                    f.classical_partial(0).specialize_q_one()

    def test_nabla_commute_mixed_framing(self):
        fr = Framing((VariableSpec("poly", 1), VariableSpec("laurent")))
        rng = random.Random(15)
        for _ in range(5):
            f = rand_element(rng, fr, -2, 3)
            assert f.nabla(0).nabla(1) == f.nabla(1).nabla(0)

    def test_dlog_component_diagonal(self):
        fr = laurent1()
        f = AlgebraElement.monomial(fr, R, N, (-3,))
        g = f.dlog_component(0)
        assert g.support() == [(-3,)]
        assert g.coefficient((-3,)) == q_integer_series(-3, R, N)


class TestFrobenius:
    def test_ring_homomorphism(self):
        rng = random.Random(99)
        for fr in [laurent1(), poly1(1)]:
            for _ in range(5):
                f = rand_element(rng, fr, -2, 3, nterms=2)
                g = rand_element(rng, fr, -2, 3, nterms=2)
                assert (f * g).phi_p(5) == f.phi_p(5) * g.phi_p(5)
                assert (f + g).phi_p(5) == f.phi_p(5) + g.phi_p(5)

    def test_sends_T_to_T_power_p(self):
        c = 1
        fr = poly1(c)
        T = AlgebraElement(fr, R, N, {(1,): QSeries.one(R, N),
                                      (0,): QSeries.from_int(R, c, N)})
        Tp = T.phi_p(3)
        assert Tp == T * T * T

    def test_twisted_chain_rule_on_dlog_line(self):
        # (T nabla)(phi f) = [p]_q * phi((T nabla) f) on Laurent monomials
        p = 5
        fr = laurent1()
        rng = random.Random(3)
        mult = q_integer_series(p, R, N)
        for _ in range(6):
            f = rand_element(rng, fr, -3, 3)
            lhs = f.phi_p(p).dlog_component(0)
            rhs = f.dlog_component(0).phi_p(p).scale(mult)
            assert lhs == rhs


class TestForms:
    def test_insertion_signs(self):
        assert insertion_sign(0, (1, 2)) == 1
        assert insertion_sign(1, (0, 2)) == -1
        assert insertion_sign(2, (0, 1)) == 1

    def test_d_squared_zero_two_vars(self):
        rng = random.Random(640)
        framings = [
            Framing.laurent(2),
            Framing.poly([0, 1]),
            Framing((VariableSpec("poly", 2), VariableSpec("laurent"))),
        ]
        for fr in framings:
            for _ in range(4):
                f = rand_element(rng, fr, -2, 3)
                w = DifferentialForm.from_element(f)
                assert d_q(d_q(w)).is_zero(), fr

    def test_d_squared_zero_three_vars(self):
        rng = random.Random(641)
        fr = Framing((VariableSpec("poly", 1), VariableSpec("laurent"),
                      VariableSpec("poly", 0)))
        f = rand_element(rng, fr, -2, 2, nterms=4)
        w = DifferentialForm.from_element(f)
        dw = d_q(w)
        assert d_q(dw).is_zero()
        # and from degree 1 with a handmade component
        w1 = DifferentialForm(fr, R, N, 1, {(1,): f})
        assert d_q(d_q(w1)).is_zero()

    def test_degree_one_components(self):
        fr = Framing((VariableSpec("poly", 0), VariableSpec("laurent")))
        f = AlgebraElement.monomial(fr, R, N, (2, -1))
        df = d_q(DifferentialForm.from_element(f))
        # dT direction: [2]_q x^1 y^-1 ; dlog direction: [-1]_q x^2 y^-1
        assert df.component((0,)).coefficient((1, -1)) == q_integer_series(2, R, N)
        assert df.component((1,)).coefficient((2, -1)) == q_integer_series(-1, R, N)

    def test_mismatched_components_rejected(self):
        fr = laurent1()
        other = Framing.laurent(2)
        f = AlgebraElement.monomial(other, R, N, (1, 0))
        with pytest.raises(MismatchedAlgebra):
            DifferentialForm(fr, R, N, 1, {(0,): f})


class TestJson:
    def test_element_round_trip(self):
        rng = random.Random(12)
        fr = Framing((VariableSpec("poly", 1), VariableSpec("laurent")))
        f = rand_element(rng, fr, -3, 4)
        assert AlgebraElement.from_json(f.to_json()) == f

    def test_rational_coefficients(self):
        fr = laurent1()
        f = AlgebraElement.monomial(fr, QQ, 4, (2,),
                                    QSeries(QQ, [QQ.from_str("1/2"), 0, 0, 0]))
        g = AlgebraElement.from_json(f.to_json())
        assert g == f
