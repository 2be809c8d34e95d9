"""Exact q-analogue arithmetic: coefficient rings, polynomials in q, and
truncated power series in (q - 1).

Conventions
-----------
* ``[n]_q = 1 + q + ... + q^(n-1)`` is the q-analogue of the integer n.
* ``QPolynomial`` is a dense polynomial in q over an exact coefficient ring.
* ``QSeries`` is a truncated series in t = q - 1 of a fixed precision N:
  exactly N stored coefficients, arithmetic closed at that precision.
* Coefficient rings are Z, Q, or Z/p^M, all with exact integer arithmetic.

Every object here is immutable and hashable so matrix code can reuse
entries freely.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import DivisionNotExact, NotInvertible, UnsupportedRing


# ---------------------------------------------------------------------------
# coefficient rings
# ---------------------------------------------------------------------------

class CoeffRing:
    """Base class for exact coefficient rings (Z, Q, Z/p^M)."""

    kind = "abstract"

    def from_int(self, n: int):
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def is_zero(self, a) -> bool:
        raise NotImplementedError

    def is_unit(self, a) -> bool:
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def to_str(self, a) -> str:
        return str(a)

    def from_str(self, s: str):
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    @property
    def zero(self):
        return self.from_int(0)

    @property
    def one(self):
        return self.from_int(1)

    def __eq__(self, other):
        return isinstance(other, CoeffRing) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(tuple(sorted(self.descriptor().items())))

    def __repr__(self):
        return f"CoeffRing({self.descriptor()})"


class IntRing(CoeffRing):
    """The integers."""

    kind = "int"

    def from_int(self, n: int) -> int:
        return int(n)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def is_zero(self, a) -> bool:
        return a == 0

    def is_unit(self, a) -> bool:
        return a in (1, -1)

    def inv(self, a):
        if a in (1, -1):
            return a
        raise NotInvertible(f"{a} is not a unit in Z")

    def from_str(self, s: str) -> int:
        return int(s)

    def descriptor(self) -> dict:
        return {"kind": "int"}


class RatRing(CoeffRing):
    """The rationals, via fractions.Fraction."""

    kind = "rat"

    def from_int(self, n: int) -> Fraction:
        return Fraction(n)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def is_zero(self, a) -> bool:
        return a == 0

    def is_unit(self, a) -> bool:
        return a != 0

    def inv(self, a):
        if a == 0:
            raise NotInvertible("0 is not a unit in Q")
        return 1 / Fraction(a)

    def from_str(self, s: str) -> Fraction:
        return Fraction(s)

    def descriptor(self) -> dict:
        return {"kind": "rat"}


class ZModRing(CoeffRing):
    """Z/p^M for a prime p; elements are canonical ints in [0, p^M)."""

    kind = "zmod"

    def __init__(self, p: int, M: int):
        if M < 1:
            raise ValueError("M must be >= 1")
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.M = M
        self.modulus = p ** M

    def from_int(self, n: int) -> int:
        return n % self.modulus

    def add(self, a, b):
        return (a + b) % self.modulus

    def sub(self, a, b):
        return (a - b) % self.modulus

    def mul(self, a, b):
        return (a * b) % self.modulus

    def neg(self, a):
        return (-a) % self.modulus

    def is_zero(self, a) -> bool:
        return a % self.modulus == 0

    def is_unit(self, a) -> bool:
        return a % self.p != 0

    def inv(self, a):
        if a % self.p == 0:
            raise NotInvertible(f"{a} is not a unit mod {self.p}^{self.M}")
        return pow(a, -1, self.modulus)

    def valuation(self, a) -> int:
        """p-adic valuation of a, with val(0) = M."""
        a %= self.modulus
        if a == 0:
            return self.M
        v = 0
        while a % self.p == 0:
            a //= self.p
            v += 1
        return v

    def from_str(self, s: str) -> int:
        return int(s) % self.modulus

    def descriptor(self) -> dict:
        return {"kind": "zmod", "p": self.p, "M": self.M}


ZZ = IntRing()
QQ = RatRing()

_ZMOD_CACHE: dict = {}


def zmod(p: int, M: int) -> ZModRing:
    """Cached constructor for Z/p^M."""
    key = (p, M)
    if key not in _ZMOD_CACHE:
        _ZMOD_CACHE[key] = ZModRing(p, M)
    return _ZMOD_CACHE[key]


def ring_from_descriptor(desc: dict) -> CoeffRing:
    """Inverse of CoeffRing.descriptor()."""
    kind = desc.get("kind")
    if kind == "int":
        return ZZ
    if kind == "rat":
        return QQ
    if kind == "zmod":
        return zmod(desc["p"], desc["M"])
    raise UnsupportedRing(f"unknown ring descriptor {desc!r}")


def is_prime(n: int) -> bool:
    """Trial-division primality test; inputs here are tiny."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def binomial_int(n: int, k: int) -> int:
    """Binomial coefficient C(n, k) for any integer n and k >= 0.

    For negative n this is the generalized (integer-valued) binomial:

    >>> binomial_int(-1, 3)
    -1
    >>> binomial_int(-2, 2)
    3
    >>> binomial_int(5, 2)
    10
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if n >= 0:
        return math.comb(n, k)
    return (-1) ** k * math.comb(-n + k - 1, k)


# ---------------------------------------------------------------------------
# polynomials in q
# ---------------------------------------------------------------------------

class QPolynomial:
    """Dense polynomial in q with exact coefficients, lowest degree first.

    >>> f = QPolynomial(ZZ, [1, 1, 1])   # 1 + q + q^2
    >>> g = QPolynomial(ZZ, [1, 1])      # 1 + q
    >>> (f * g).coeffs
    (1, 2, 2, 1)
    >>> f.evaluate_at_one()
    3
    """

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: CoeffRing, coeffs):
        cs = [ring.from_int(c) if isinstance(c, int) else c for c in coeffs]
        while cs and ring.is_zero(cs[-1]):
            cs.pop()
        self.ring = ring
        self.coeffs = tuple(cs)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, ring: CoeffRing) -> "QPolynomial":
        return cls(ring, [])

    @classmethod
    def one(cls, ring: CoeffRing) -> "QPolynomial":
        return cls(ring, [1])

    @classmethod
    def q(cls, ring: CoeffRing) -> "QPolynomial":
        return cls(ring, [0, 1])

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial assigned -1."""
        return len(self.coeffs) - 1

    def leading(self):
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def coefficient(self, j: int):
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return self.ring.zero

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "QPolynomial"):
        if self.ring != other.ring:
            raise UnsupportedRing("mixed coefficient rings")

    def __add__(self, other: "QPolynomial") -> "QPolynomial":
        self._check(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return QPolynomial(
            self.ring,
            [self.ring.add(self.coefficient(j), other.coefficient(j)) for j in range(n)],
        )

    def __sub__(self, other: "QPolynomial") -> "QPolynomial":
        self._check(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return QPolynomial(
            self.ring,
            [self.ring.sub(self.coefficient(j), other.coefficient(j)) for j in range(n)],
        )

    def __neg__(self) -> "QPolynomial":
        return QPolynomial(self.ring, [self.ring.neg(c) for c in self.coeffs])

    def __mul__(self, other: "QPolynomial") -> "QPolynomial":
        self._check(other)
        if self.is_zero() or other.is_zero():
            return QPolynomial.zero(self.ring)
        R = self.ring
        out = [R.zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if R.is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = R.add(out[i + j], R.mul(a, b))
        return QPolynomial(R, out)

    def scale(self, c) -> "QPolynomial":
        return QPolynomial(self.ring, [self.ring.mul(c, a) for a in self.coeffs])

    def __pow__(self, n: int) -> "QPolynomial":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = QPolynomial.one(self.ring)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def divmod(self, other: "QPolynomial"):
        """Long division; requires the divisor's leading coefficient to be a unit."""
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        R = self.ring
        lead_inv = R.inv(other.leading())
        rem = list(self.coeffs)
        dq = other.degree
        quot = [R.zero] * max(len(rem) - dq, 0)
        for top in range(len(rem) - 1, dq - 1, -1):
            c = rem[top]
            if R.is_zero(c):
                continue
            factor = R.mul(c, lead_inv)
            quot[top - dq] = factor
            for j, b in enumerate(other.coeffs):
                rem[top - dq + j] = R.sub(rem[top - dq + j], R.mul(factor, b))
        return QPolynomial(R, quot), QPolynomial(R, rem)

    def exact_div(self, other: "QPolynomial") -> "QPolynomial":
        """Division asserting zero remainder; raises DivisionNotExact otherwise."""
        q, r = self.divmod(other)
        if not r.is_zero():
            raise DivisionNotExact(f"{self} is not divisible by {other}")
        return q

    # -- evaluation and substitution ----------------------------------------

    def evaluate(self, x):
        """Horner evaluation at a ring element x."""
        R = self.ring
        acc = R.zero
        for c in reversed(self.coeffs):
            acc = R.add(R.mul(acc, x), c)
        return acc

    def evaluate_at_one(self):
        return self.evaluate(self.ring.one)

    def substitute_q_power(self, a: int) -> "QPolynomial":
        """q -> q^a for a positive integer a (stays polynomial)."""
        if a == 0:
            raise ValueError("a must be nonzero")
        if a < 0:
            raise ValueError("negative a leaves the polynomial ring; use QSeries")
        R = self.ring
        if self.is_zero():
            return self
        out = [R.zero] * (a * self.degree + 1)
        for j, c in enumerate(self.coeffs):
            out[a * j] = c
        return QPolynomial(R, out)

    def map_ring(self, new_ring: CoeffRing) -> "QPolynomial":
        """Push coefficients along Z -> new ring (int-valued coefficients only)."""
        return QPolynomial(new_ring, [new_ring.from_int(int(c)) for c in self.coeffs])

    def to_series(self, precision: int, ring: CoeffRing | None = None) -> "QSeries":
        """Expand in powers of t = q - 1, truncated at the given precision."""
        R = ring if ring is not None else self.ring
        qs = QSeries.q(R, precision)
        acc = QSeries.zero(R, precision)
        for c in reversed(self.coeffs):
            cc = R.from_int(int(c)) if ring is not None else c
            acc = acc * qs + QSeries.constant(R, cc, precision)
        return acc

    # -- plumbing -----------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, QPolynomial)
            and self.ring == other.ring
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.ring, self.coeffs))

    def __str__(self):
        if not self.coeffs:
            return "0"
        R = self.ring
        parts = []
        for j in range(self.degree, -1, -1):
            c = self.coeffs[j]
            if R.is_zero(c):
                continue
            cs = R.to_str(c)
            if j == 0:
                parts.append(cs)
            else:
                var = "q" if j == 1 else f"q^{j}"
                parts.append(var if cs == "1" else f"{cs}*{var}")
        out = parts[0]
        for piece in parts[1:]:
            out += "+" + piece if not piece.startswith("-") else piece
        return out

    def __repr__(self):
        return f"QPolynomial({self})"

    def to_json(self) -> dict:
        return {
            "ring": self.ring.descriptor(),
            "coeffs": [self.ring.to_str(c) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "QPolynomial":
        ring = ring_from_descriptor(data["ring"])
        return cls(ring, [ring.from_str(s) for s in data["coeffs"]])


# ---------------------------------------------------------------------------
# truncated series in t = q - 1
# ---------------------------------------------------------------------------

class QSeries:
    """Truncated power series in t = q - 1 with a fixed precision.

    A QSeries of precision N stores exactly N coefficients and represents
    its value modulo (q-1)^N.  All arithmetic stays at precision N (or the
    minimum of the operand precisions when they differ).

    >>> s = QSeries.q(ZZ, 4)          # q = 1 + t
    >>> (s * s).coeffs                # q^2 = 1 + 2t + t^2
    (1, 2, 1, 0)
    >>> s.substitute_q_power(2).coeffs
    (1, 2, 1, 0)
    """

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: CoeffRing, coeffs):
        cs = tuple(ring.from_int(c) if isinstance(c, int) else c for c in coeffs)
        if not cs:
            raise ValueError("QSeries needs precision >= 1")
        self.ring = ring
        self.coeffs = cs

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, ring: CoeffRing, precision: int) -> "QSeries":
        return cls(ring, [ring.zero] * precision)

    @classmethod
    def one(cls, ring: CoeffRing, precision: int) -> "QSeries":
        return cls.constant(ring, ring.one, precision)

    @classmethod
    def constant(cls, ring: CoeffRing, c, precision: int) -> "QSeries":
        return cls(ring, [c] + [ring.zero] * (precision - 1))

    @classmethod
    def from_int(cls, ring: CoeffRing, n: int, precision: int) -> "QSeries":
        return cls.constant(ring, ring.from_int(n), precision)

    @classmethod
    def q(cls, ring: CoeffRing, precision: int) -> "QSeries":
        """The element q itself, i.e. 1 + t."""
        if precision == 1:
            return cls.one(ring, 1)
        return cls(ring, [1, 1] + [0] * (precision - 2))

    @classmethod
    def t(cls, ring: CoeffRing, precision: int) -> "QSeries":
        """The element q - 1."""
        if precision == 1:
            return cls.zero(ring, 1)
        return cls(ring, [0, 1] + [0] * (precision - 2))

    # -- structure ----------------------------------------------------------

    @property
    def precision(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return all(self.ring.is_zero(c) for c in self.coeffs)

    def at_q_one(self):
        """Constant coefficient, i.e. the specialization q = 1."""
        return self.coeffs[0]

    def coefficient(self, k: int):
        return self.coeffs[k] if k < len(self.coeffs) else self.ring.zero

    def valuation(self):
        """t-adic valuation, or None for the (truncated) zero series."""
        for k, c in enumerate(self.coeffs):
            if not self.ring.is_zero(c):
                return k
        return None

    def truncate(self, precision: int) -> "QSeries":
        if precision > len(self.coeffs):
            raise ValueError("cannot raise precision by truncation")
        return QSeries(self.ring, self.coeffs[:precision])

    # -- arithmetic ---------------------------------------------------------

    def _align(self, other: "QSeries"):
        if self.ring != other.ring:
            raise UnsupportedRing("mixed coefficient rings")
        n = min(len(self.coeffs), len(other.coeffs))
        return n

    def __add__(self, other: "QSeries") -> "QSeries":
        n = self._align(other)
        R = self.ring
        return QSeries(R, [R.add(self.coeffs[k], other.coeffs[k]) for k in range(n)])

    def __sub__(self, other: "QSeries") -> "QSeries":
        n = self._align(other)
        R = self.ring
        return QSeries(R, [R.sub(self.coeffs[k], other.coeffs[k]) for k in range(n)])

    def __neg__(self) -> "QSeries":
        return QSeries(self.ring, [self.ring.neg(c) for c in self.coeffs])

    def __mul__(self, other: "QSeries") -> "QSeries":
        n = self._align(other)
        R = self.ring
        out = [R.zero] * n
        for i, a in enumerate(self.coeffs[:n]):
            if R.is_zero(a):
                continue
            for j in range(n - i):
                b = other.coeffs[j]
                if not R.is_zero(b):
                    out[i + j] = R.add(out[i + j], R.mul(a, b))
        return QSeries(R, out)

    def scale(self, c) -> "QSeries":
        R = self.ring
        return QSeries(R, [R.mul(c, a) for a in self.coeffs])

    def scale_int(self, n: int) -> "QSeries":
        return self.scale(self.ring.from_int(n))

    def __pow__(self, n: int) -> "QSeries":
        if n < 0:
            return self.invert() ** (-n)
        out = QSeries.one(self.ring, self.precision)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def invert(self) -> "QSeries":
        """Multiplicative inverse; needs a unit constant term.

        >>> QSeries.q(ZZ, 3).invert().coeffs   # q^{-1} = 1 - t + t^2 - ...
        (1, -1, 1)
        """
        R = self.ring
        if not R.is_unit(self.coeffs[0]):
            raise NotInvertible(
                f"constant term {R.to_str(self.coeffs[0])} is not a unit"
            )
        n = self.precision
        inv0 = R.inv(self.coeffs[0])
        out = [inv0] + [R.zero] * (n - 1)
        for k in range(1, n):
            acc = R.zero
            for j in range(1, k + 1):
                acc = R.add(acc, R.mul(self.coeffs[j] if j < n else R.zero, out[k - j]))
            out[k] = R.neg(R.mul(inv0, acc))
        return QSeries(R, out)

    def mul_t_power(self, k: int) -> "QSeries":
        """Multiply by t^k (coefficients shift up; top ones fall off)."""
        if k < 0:
            raise ValueError("use div_t_exact for negative shifts")
        R = self.ring
        return QSeries(R, ([R.zero] * k + list(self.coeffs))[: self.precision])

    def div_t_exact(self, k: int = 1) -> "QSeries":
        """Divide by t^k when the low coefficients vanish.

        The result keeps the same precision; the top k coefficients are not
        determined by the input, so this is only offered where the caller
        tracks an exact representative.  Raises DivisionNotExact when a low
        coefficient is nonzero.
        """
        R = self.ring
        for j in range(k):
            if not R.is_zero(self.coeffs[j]):
                raise DivisionNotExact("series not divisible by (q-1)^k")
        return QSeries(R, list(self.coeffs[k:]) + [R.zero] * k)

    # -- substitution -------------------------------------------------------

    def compose(self, inner: "QSeries") -> "QSeries":
        """self(inner) for an inner series with zero constant term."""
        R = self.ring
        if not R.is_zero(inner.coeffs[0]):
            raise ValueError("composition needs a zero constant term")
        n = min(self.precision, inner.precision)
        acc = QSeries.zero(R, n)
        for c in reversed(self.coeffs[:n]):
            acc = acc * inner.truncate(n) + QSeries.constant(R, c, n)
        return acc

    def substitute_q_power(self, a: int) -> "QSeries":
        """Ring map q -> q^a for a nonzero integer a (negative allowed).

        Composition law: substituting a then b equals substituting a*b.
        """
        if a == 0:
            raise ValueError("a must be nonzero")
        if a == 1:
            return self
        inner = q_power_minus_one(a, self.ring, self.precision)
        return self.compose(inner)

    # -- plumbing -----------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, QSeries)
            and self.ring == other.ring
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.ring, self.coeffs))

    def __str__(self):
        R = self.ring
        parts = []
        for k, c in enumerate(self.coeffs):
            if R.is_zero(c):
                continue
            cs = R.to_str(c)
            if k == 0:
                parts.append(cs)
            else:
                var = "t" if k == 1 else f"t^{k}"
                parts.append(var if cs == "1" else f"{cs}*{var}")
        body = "+".join(parts).replace("+-", "-") if parts else "0"
        return f"{body} + O(t^{self.precision})"

    def __repr__(self):
        return f"QSeries({self})"

    def to_json(self) -> dict:
        return {
            "ring": self.ring.descriptor(),
            "coeffs": [self.ring.to_str(c) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "QSeries":
        ring = ring_from_descriptor(data["ring"])
        return cls(ring, [ring.from_str(s) for s in data["coeffs"]])


def substitute_q_power(s, a: int):
    """q -> q^a on either representation (same type out as in)."""
    return s.substitute_q_power(a)


# ---------------------------------------------------------------------------
# q-analogues
# ---------------------------------------------------------------------------

def q_integer(n: int, ring: CoeffRing = ZZ) -> QPolynomial:
    """[n]_q = 1 + q + ... + q^(n-1) as a polynomial; n must be >= 0.

    >>> str(q_integer(4))
    'q^3+q^2+q+1'
    >>> q_integer(0).is_zero()
    True
    """
    if n < 0:
        raise ValueError("q_integer needs n >= 0; use q_integer_series for any n")
    return QPolynomial(ring, [1] * n)


def q_integer_series(n: int, ring: CoeffRing, precision: int) -> QSeries:
    """[n]_q = (q^n - 1)/(q - 1) as a truncated series, any integer n.

    The binomial expansion (q^n - 1)/(q-1) = sum_k C(n, k+1) t^k holds for
    negative n too, with generalized binomial coefficients.

    >>> q_integer_series(3, ZZ, 3).coeffs
    (3, 3, 1)
    >>> q_integer_series(-1, ZZ, 3).coeffs   # -q^{-1}
    (-1, 1, -1)
    """
    return QSeries(ring, [binomial_int(n, k + 1) for k in range(precision)])


def q_power_series(a: int, ring: CoeffRing, precision: int) -> QSeries:
    """q^a = (1+t)^a as a truncated series, any integer a."""
    return QSeries(ring, [binomial_int(a, k) for k in range(precision)])


def q_power_minus_one(a: int, ring: CoeffRing, precision: int) -> QSeries:
    """q^a - 1, the substitution target for t under q -> q^a."""
    coeffs = [binomial_int(a, k) for k in range(precision)]
    coeffs[0] = 0
    return QSeries(ring, coeffs)


def q_factorial(n: int, ring: CoeffRing = ZZ) -> QPolynomial:
    """[n]_q! = [1]_q [2]_q ... [n]_q.

    >>> str(q_factorial(3))
    'q^3+2*q^2+2*q+1'
    """
    if n < 0:
        raise ValueError("q_factorial needs n >= 0")
    out = QPolynomial.one(ring)
    for i in range(1, n + 1):
        out = out * q_integer(i, ring)
    return out


def q_binomial(n: int, k: int, ring: CoeffRing = ZZ) -> QPolynomial:
    """Gaussian binomial [n choose k]_q via exact division of q-factorials.

    The division is verified exact (the factorials are monic, so the long
    division is defined over any coefficient ring); a nonzero remainder
    raises DivisionNotExact and would signal an implementation bug.

    >>> str(q_binomial(4, 2))
    'q^4+q^3+2*q^2+q+1'
    >>> q_binomial(4, 2).evaluate_at_one()
    6
    """
    if k < 0 or k > n:
        return QPolynomial.zero(ring)
    num = q_factorial(n, ring)
    den = q_factorial(k, ring) * q_factorial(n - k, ring)
    return num.exact_div(den)


def cyclotomic_p(p: int, ring: CoeffRing = ZZ) -> QPolynomial:
    """The p-th cyclotomic polynomial [p]_q = 1 + q + ... + q^(p-1), p prime."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    return q_integer(p, ring)


# ---------------------------------------------------------------------------
# logarithm and exponential over Q
# ---------------------------------------------------------------------------

def log_q(precision: int) -> QSeries:
    """log(q) = sum_{n>=1} (-1)^(n+1) (q-1)^n / n over Q, truncated.

    >>> log_q(4).coeffs
    (Fraction(0, 1), Fraction(1, 1), Fraction(-1, 2), Fraction(1, 3))
    """
    coeffs = [Fraction(0)] + [Fraction((-1) ** (n + 1), n) for n in range(1, precision)]
    return QSeries(QQ, coeffs)


def log_q_over_t(precision: int) -> QSeries:
    """log(q)/(q-1) = 1 - t/2 + t^2/3 - ..., exact at the stated precision."""
    coeffs = [Fraction((-1) ** k, k + 1) for k in range(precision)]
    return QSeries(QQ, coeffs)


def exp_series(s: QSeries) -> QSeries:
    """exp of a rational series with zero constant term."""
    if s.ring != QQ:
        raise UnsupportedRing("exp_series is defined over Q")
    if not s.ring.is_zero(s.coeffs[0]):
        raise ValueError("exp needs a zero constant term")
    n = s.precision
    acc = QSeries.one(QQ, n)
    term = QSeries.one(QQ, n)
    for k in range(1, n):
        term = term * s
        acc = acc + term.scale(Fraction(1, math.factorial(k)))
    return acc
