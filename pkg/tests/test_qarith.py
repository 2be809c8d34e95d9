"""Tests for exact q-analogue arithmetic.

Expected values are either tiny hand-checkable identities or come from
independent oracles implemented inline (q-Pascal recursion, Mercator
series), never from the functions under test.
"""

import doctest
import random
from fractions import Fraction

import pytest

import qdrh.qarith as qarith
from qdrh.errors import DivisionNotExact, NotInvertible
from qdrh.qarith import (
    QQ,
    QPolynomial,
    QSeries,
    ZZ,
    binomial_int,
    cyclotomic_p,
    exp_series,
    log_q,
    log_q_over_t,
    q_binomial,
    q_factorial,
    q_integer,
    q_integer_series,
    q_power_series,
    zmod,
)


def qpascal_table(nmax, ring=ZZ):
    """Independent oracle: Gaussian binomials by the q-Pascal recursion

    binom(n, k)_q = binom(n-1, k-1)_q + q^k * binom(n-1, k)_q
    """
    q = QPolynomial.q(ring)
    table = {(0, 0): QPolynomial.one(ring)}
    for n in range(1, nmax + 1):
        for k in range(0, n + 1):
            left = table.get((n - 1, k - 1), QPolynomial.zero(ring))
            right = table.get((n - 1, k), QPolynomial.zero(ring))
            table[(n, k)] = left + (q ** k) * right
    return table


def test_doctests():
    failures, _ = doctest.testmod(qarith)
    assert failures == 0


def test_q_integer_small_values():
    assert q_integer(0).is_zero()
    assert q_integer(1).coeffs == (1,)
    assert q_integer(5).coeffs == (1, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        q_integer(-2)


def test_q_integer_evaluates_to_n_at_one():
    for n in range(0, 30):
        assert q_integer(n).evaluate_at_one() == n


def test_q_factorial_degree_and_value():
    # [n]_q! has degree n(n-1)/2 and value n! at q = 1
    import math

    for n in range(0, 8):
        f = q_factorial(n)
        assert f.degree == n * (n - 1) // 2
        assert f.evaluate_at_one() == math.factorial(n)


def test_q_binomial_against_pascal_oracle():
    table = qpascal_table(12)
    for (n, k), expected in table.items():
        assert q_binomial(n, k) == expected


def test_q_binomial_coefficients_nonnegative():
    for n in range(0, 13):
        for k in range(0, n + 1):
            assert all(c >= 0 for c in q_binomial(n, k).coeffs)


def test_q_binomial_known_value():
    assert q_binomial(4, 2).coeffs == (1, 1, 2, 1, 1)
    assert q_binomial(4, 2).evaluate_at_one() == 6


def test_q_binomial_out_of_range():
    assert q_binomial(3, 5).is_zero()
    assert q_binomial(3, -1).is_zero()


def test_multiplicativity_of_q_integers():
    # [mn]_q = [m]_q * [n]_{q^m}
    for m in range(1, 8):
        for n in range(1, 8):
            lhs = q_integer(m * n)
            rhs = q_integer(m) * q_integer(n).substitute_q_power(m)
            assert lhs == rhs


def test_cyclotomic_p():
    assert cyclotomic_p(3).coeffs == (1, 1, 1)
    assert cyclotomic_p(2).coeffs == (1, 1)
    with pytest.raises(ValueError):
        cyclotomic_p(4)


def test_polynomial_exact_division_error():
    q = QPolynomial.q(ZZ)
    with pytest.raises(DivisionNotExact):
        (q ** 2 + QPolynomial.one(ZZ)).exact_div(q + QPolynomial.one(ZZ))


def test_series_ring_arithmetic_random():
    rng = random.Random(2026)
    for ring in (ZZ, zmod(3, 2), QQ):
        for _ in range(40):
            n = rng.randint(1, 6)
            a = QSeries(ring, [rng.randint(-9, 9) for _ in range(n)])
            b = QSeries(ring, [rng.randint(-9, 9) for _ in range(n)])
            c = QSeries(ring, [rng.randint(-9, 9) for _ in range(n)])
            assert (a + b) * c == a * c + b * c
            assert a * b == b * a
            assert (a - a).is_zero()


def test_series_invert_round_trip():
    rng = random.Random(7)
    for _ in range(25):
        n = rng.randint(2, 7)
        coeffs = [rng.choice([1, -1])] + [rng.randint(-5, 5) for _ in range(n - 1)]
        s = QSeries(ZZ, coeffs)
        assert (s * s.invert()) == QSeries.one(ZZ, n)


def test_series_invert_not_a_unit():
    # over Z/9 the constant term of [3]_q is 3, not a unit
    s = q_integer_series(3, zmod(3, 2), 4)
    with pytest.raises(NotInvertible):
        s.invert()


def test_substitute_q_power_is_ring_hom():
    rng = random.Random(11)
    for a in (2, 3, -1, -2):
        for _ in range(20):
            n = rng.randint(2, 6)
            s = QSeries(ZZ, [rng.randint(-4, 4) for _ in range(n)])
            u = QSeries(ZZ, [rng.randint(-4, 4) for _ in range(n)])
            assert (s * u).substitute_q_power(a) == s.substitute_q_power(a) * u.substitute_q_power(a)
            assert (s + u).substitute_q_power(a) == s.substitute_q_power(a) + u.substitute_q_power(a)


def test_substitute_q_power_composition_law():
    rng = random.Random(13)
    for a, b in [(2, 3), (2, -1), (-2, -3), (5, 2)]:
        for _ in range(10):
            n = rng.randint(2, 6)
            s = QSeries(ZZ, [rng.randint(-4, 4) for _ in range(n)])
            assert s.substitute_q_power(a).substitute_q_power(b) == s.substitute_q_power(a * b)


def test_substitute_q_power_rejects_zero():
    s = QSeries.q(ZZ, 3)
    with pytest.raises(ValueError):
        s.substitute_q_power(0)
    with pytest.raises(ValueError):
        QPolynomial.q(ZZ).substitute_q_power(0)


def test_q_integer_series_matches_polynomial_expansion():
    for n in range(0, 12):
        for prec in (1, 3, 6):
            assert q_integer(n).to_series(prec) == q_integer_series(n, ZZ, prec)


def test_q_integer_series_negative_matches_inverse():
    # [-n]_q = -q^{-n} [n]_q
    for n in range(1, 8):
        prec = 6
        lhs = q_integer_series(-n, ZZ, prec)
        rhs = -(q_power_series(-n, ZZ, prec) * q_integer_series(n, ZZ, prec))
        assert lhs == rhs


def test_generalized_binomial_int():
    # row n = -1 alternates signs; matches (1+t)^(-1) expansion
    assert [binomial_int(-1, k) for k in range(5)] == [1, -1, 1, -1, 1]
    inv = QSeries.q(ZZ, 5).invert()
    assert q_power_series(-1, ZZ, 5) == inv


def test_log_q_against_mercator_oracle():
    # oracle: coefficients of log(1+t) are (-1)^(n+1)/n, computed inline
    prec = 9
    oracle = [Fraction(0)] + [Fraction((-1) ** (n + 1), n) for n in range(1, prec)]
    assert list(log_q(prec).coeffs) == oracle
    # and log(q)/(q-1) shifts them down with an exact leading 1
    assert list(log_q_over_t(prec).coeffs) == [Fraction((-1) ** k, k + 1) for k in range(prec)]


def test_exp_log_round_trip():
    prec = 8
    assert exp_series(log_q(prec)) == QSeries.q(QQ, prec)


def test_series_polynomial_conversion_is_hom():
    rng = random.Random(17)
    for _ in range(20):
        f = QPolynomial(ZZ, [rng.randint(-3, 3) for _ in range(rng.randint(1, 5))])
        g = QPolynomial(ZZ, [rng.randint(-3, 3) for _ in range(rng.randint(1, 5))])
        prec = 5
        assert (f * g).to_series(prec) == f.to_series(prec) * g.to_series(prec)
        assert (f + g).to_series(prec) == f.to_series(prec) + g.to_series(prec)


def test_at_q_one_matches_polynomial_evaluation():
    rng = random.Random(19)
    for _ in range(20):
        f = QPolynomial(ZZ, [rng.randint(-9, 9) for _ in range(rng.randint(1, 6))])
        assert f.to_series(4).at_q_one() == f.evaluate_at_one()


def test_json_round_trip():
    for obj in (
        q_binomial(5, 2),
        q_integer(7, zmod(3, 2)),
        QPolynomial(QQ, [Fraction(1, 2), Fraction(-2, 3)]),
        q_integer_series(-3, ZZ, 5),
        QSeries(zmod(2, 3), [1, 5, 7]),
        QSeries(QQ, [Fraction(1, 3), Fraction(0), Fraction(-7, 2)]),
    ):
        data = obj.to_json()
        assert type(obj).from_json(data) == obj


def test_zmod_reduction_consistency():
    # reducing a Z-computation mod p^M agrees with computing mod p^M throughout
    R = zmod(5, 2)
    f = q_binomial(8, 3)
    g = q_binomial(8, 3, R)
    assert f.map_ring(R) == g


def test_div_t_exact():
    s = QSeries(ZZ, [0, 0, 3, 1])
    assert s.div_t_exact(2).coeffs == (3, 1, 0, 0)
    with pytest.raises(DivisionNotExact):
        QSeries(ZZ, [1, 2]).div_t_exact()
