"""Framed coordinate algebras and their q-difference calculus.

A framing fixes, for each coordinate, whether it generates a polynomial or a
Laurent line and (for polynomial coordinates) an integer shift c.  Writing
T_i = x_i + c_i, the automorphism gamma_i scales T_i by q and fixes the other
coordinates, and the q-derivative in direction i is

    nabla_i(f) = (gamma_i(f) - f) / ((q - 1) T_i),

computed exactly: on the T-basis it multiplies T^m by the q-integer [m]_q and
lowers the exponent, so no series division ever happens.  Laurent coordinates
have c = 0 and allow negative exponents; their natural degree-1 components are
taken against dlog x = dx/x, where the operator x*nabla acts diagonally.

Elements are finite sums of monomials with truncated power series in t = q-1
as coefficients; everything is exact to the fixed precision.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MismatchedAlgebra
from .qarith import (
    CoeffRing,
    QSeries,
    binomial_int,
    q_integer_series,
    q_power_series,
    ring_from_descriptor,
)


@dataclass(frozen=True)
class VariableSpec:
    """One framed coordinate: polynomial or Laurent, with an integer shift."""

    kind: str
    shift: int = 0

    def __post_init__(self):
        if self.kind not in ("poly", "laurent"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "laurent" and self.shift != 0:
            raise ValueError("laurent coordinates do not take a shift")

    def to_json(self) -> dict:
        return {"kind": self.kind, "shift": self.shift}

    @classmethod
    def from_json(cls, data: dict) -> "VariableSpec":
        return cls(data["kind"], data.get("shift", 0))


@dataclass(frozen=True)
class Framing:
    """An ordered tuple of framed coordinates."""

    variables: tuple[VariableSpec, ...]

    @property
    def d(self) -> int:
        return len(self.variables)

    def spec(self, i: int) -> VariableSpec:
        return self.variables[i]

    @classmethod
    def laurent(cls, d: int) -> "Framing":
        return cls(tuple(VariableSpec("laurent") for _ in range(d)))

    @classmethod
    def poly(cls, shifts) -> "Framing":
        return cls(tuple(VariableSpec("poly", c) for c in shifts))

    def to_json(self) -> dict:
        return {"d": self.d, "vars": [v.to_json() for v in self.variables]}

    @classmethod
    def from_json(cls, data: dict) -> "Framing":
        return cls(tuple(VariableSpec.from_json(v) for v in data["vars"]))


class AlgebraElement:
    """Finite sum of monomials with QSeries coefficients, tied to a framing."""

    __slots__ = ("framing", "ring", "precision", "terms")

    def __init__(self, framing: Framing, ring: CoeffRing, precision: int, terms=None):
        self.framing = framing
        self.ring = ring
        self.precision = precision
        clean = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != framing.d:
                raise ValueError("exponent arity does not match the framing")
            for e, spec in zip(exp, framing.variables):
                if spec.kind == "poly" and e < 0:
                    raise ValueError("negative exponent on a polynomial coordinate")
            if coeff.ring != ring or coeff.precision != precision:
                raise MismatchedAlgebra("coefficient ring or precision mismatch")
            if not coeff.is_zero():
                clean[exp] = clean[exp] + coeff if exp in clean else coeff
        self.terms = {e: c for e, c in clean.items() if not c.is_zero()}

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, framing, ring, precision):
        return cls(framing, ring, precision)

    @classmethod
    def constant(cls, framing, ring, precision, value: QSeries):
        return cls(framing, ring, precision, {(0,) * framing.d: value})

    @classmethod
    def one(cls, framing, ring, precision):
        return cls.constant(framing, ring, precision, QSeries.one(ring, precision))

    @classmethod
    def monomial(cls, framing, ring, precision, exp, coeff: QSeries | None = None):
        c = coeff if coeff is not None else QSeries.one(ring, precision)
        return cls(framing, ring, precision, {tuple(exp): c})

    # structure --------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def support(self):
        return sorted(self.terms)

    def coefficient(self, exp) -> QSeries:
        return self.terms.get(tuple(exp), QSeries.zero(self.ring, self.precision))

    def _check(self, other: "AlgebraElement"):
        if (self.framing != other.framing or self.ring != other.ring
                or self.precision != other.precision):
            raise MismatchedAlgebra("elements live in different framed algebras")

    def __add__(self, other):
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms[e] + c if e in terms else c
        return AlgebraElement(self.framing, self.ring, self.precision, terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return AlgebraElement(self.framing, self.ring, self.precision,
                              {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        self._check(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                prod = c1 * c2
                terms[e] = terms[e] + prod if e in terms else prod
        return AlgebraElement(self.framing, self.ring, self.precision, terms)

    def scale(self, s: QSeries):
        return AlgebraElement(self.framing, self.ring, self.precision,
                              {e: c * s for e, c in self.terms.items()})

    def scale_int(self, n: int):
        return AlgebraElement(self.framing, self.ring, self.precision,
                              {e: c.scale_int(n) for e, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return (self.framing == other.framing and self.ring == other.ring
                and self.precision == other.precision
                and (self - other).is_zero())

    def __hash__(self):
        return hash((self.framing, len(self.terms)))

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for e in self.support():
            mono = "*".join(f"x{i}^{k}" for i, k in enumerate(e) if k)
            bits.append(f"({self.terms[e]})" + (f"*{mono}" if mono else ""))
        return " + ".join(bits)

    # per-variable linear operators -------------------------------------------

    def _map_variable(self, i: int, term_fn):
        """Rebuild from term_fn(m, coeff) -> iterable of (m', coeff')."""
        terms = {}
        for exp, coeff in self.terms.items():
            for m2, c2 in term_fn(exp[i], coeff):
                if c2.is_zero():
                    continue
                e2 = exp[:i] + (m2,) + exp[i + 1:]
                terms[e2] = terms[e2] + c2 if e2 in terms else c2
        return AlgebraElement(self.framing, self.ring, self.precision, terms)

    def _t_basis_transform(self, i: int, t_fn):
        """Conjugate a T-basis diagonal operation back to the x-basis.

        t_fn(m, coeff) yields (m', coeff') pairs on T-exponents.  Exact for
        polynomial coordinates with shift c via binomial conversion both ways;
        Laurent coordinates have T = x and skip the conversion.
        """
        c = self.framing.spec(i).shift
        if c == 0:
            return self._map_variable(i, t_fn)
        R = self.ring

        def fn(m, coeff):
            out = {}
            for j in range(m + 1):
                # x^m = sum_j C(m,j) (-c)^(m-j) T^j
                a = binomial_int(m, j) * (-c) ** (m - j)
                if a == 0:
                    continue
                for m2, c2 in t_fn(j, coeff.scale_int(a)):
                    if c2.is_zero():
                        continue
                    for l in range(m2 + 1):
                        # T^m2 = sum_l C(m2,l) c^(m2-l) x^l
                        b = binomial_int(m2, l) * c ** (m2 - l)
                        if b == 0:
                            continue
                        add = c2.scale_int(b)
                        out[l] = out[l] + add if l in out else add
            return out.items()

        return self._map_variable(i, fn)

    def gamma(self, i: int) -> "AlgebraElement":
        """The framing automorphism in direction i: T_i maps to q T_i."""
        R, N = self.ring, self.precision

        def t_fn(m, coeff):
            return [(m, coeff * q_power_series(m, R, N))]

        return self._t_basis_transform(i, t_fn)

    def gamma_all(self) -> "AlgebraElement":
        out = self
        for i in range(self.framing.d):
            out = out.gamma(i)
        return out

    def nabla(self, i: int) -> "AlgebraElement":
        """Jackson q-derivative in direction i: T^m maps to [m]_q T^(m-1)."""
        R, N = self.ring, self.precision

        def t_fn(m, coeff):
            if m == 0:
                return []
            return [(m - 1, coeff * q_integer_series(m, R, N))]

        return self._t_basis_transform(i, t_fn)

    def dlog_component(self, i: int) -> "AlgebraElement":
        """T_i * nabla_i, the dlog-normalized derivative (diagonal: [m]_q T^m)."""
        R, N = self.ring, self.precision

        def t_fn(m, coeff):
            if m == 0:
                return []
            return [(m, coeff * q_integer_series(m, R, N))]

        return self._t_basis_transform(i, t_fn)

    def classical_partial(self, i: int) -> "AlgebraElement":
        def fn(m, coeff):
            if m == 0:
                return []
            return [(m - 1, coeff.scale_int(m))]

        return self._map_variable(i, fn)

    def substitute_q_power(self, a: int) -> "AlgebraElement":
        """Coefficientwise q -> q^a; the monomials are untouched."""
        return AlgebraElement(self.framing, self.ring, self.precision,
                              {e: c.substitute_q_power(a) for e, c in self.terms.items()})

    def phi_p(self, p: int) -> "AlgebraElement":
        """Frobenius lift: q -> q^p on coefficients and T_i -> T_i^p."""
        out = self.substitute_q_power(p)

        def t_fn(m, coeff):
            return [(p * m, coeff)]

        for i in range(self.framing.d):
            out = out._t_basis_transform(i, t_fn)
        return out

    def specialize_q_one(self) -> dict:
        """Set q = 1: plain commutative polynomial data, exponent -> scalar."""
        out = {}
        for e, c in self.terms.items():
            v = c.at_q_one()
            if not self.ring.is_zero(v):
                out[e] = v
        return out

    def to_json(self) -> dict:
        return {
            "framing": self.framing.to_json(),
            "ring": self.ring.descriptor(),
            "precision": self.precision,
            "terms": [{"exp": list(e), "coeff": self.terms[e].to_json()}
                      for e in self.support()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "AlgebraElement":
        framing = Framing.from_json(data["framing"])
        ring = ring_from_descriptor(data["ring"])
        terms = {tuple(t["exp"]): QSeries.from_json(t["coeff"]) for t in data["terms"]}
        return cls(framing, ring, data["precision"], terms)


# ---------------------------------------------------------------------------
# differential forms
# ---------------------------------------------------------------------------

def insertion_sign(j: int, J: tuple) -> int:
    return -1 if sum(1 for l in J if l < j) % 2 else 1


class DifferentialForm:
    """Form with components indexed by strictly increasing direction tuples.

    The degree-1 basis covector in direction i is dT_i for a polynomial
    coordinate and dlog x_i for a Laurent coordinate; higher degrees are
    wedges in increasing order.
    """

    __slots__ = ("framing", "ring", "precision", "degree", "components")

    def __init__(self, framing, ring, precision, degree, components=None):
        self.framing = framing
        self.ring = ring
        self.precision = precision
        self.degree = degree
        comps = {}
        for J, f in (components or {}).items():
            J = tuple(J)
            if len(J) != degree or list(J) != sorted(set(J)):
                raise ValueError(f"bad direction tuple {J}")
            if any(j < 0 or j >= framing.d for j in J):
                raise ValueError(f"direction out of range in {J}")
            if f.framing != framing or f.ring != ring or f.precision != precision:
                raise MismatchedAlgebra("component in the wrong algebra")
            if not f.is_zero():
                comps[J] = comps[J] + f if J in comps else f
        self.components = {J: f for J, f in comps.items() if not f.is_zero()}

    @classmethod
    def from_element(cls, f: AlgebraElement) -> "DifferentialForm":
        return cls(f.framing, f.ring, f.precision, 0, {(): f})

    def component(self, J) -> AlgebraElement:
        return self.components.get(tuple(J),
                                   AlgebraElement.zero(self.framing, self.ring, self.precision))

    def is_zero(self) -> bool:
        return not self.components

    def __add__(self, other):
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        comps = dict(self.components)
        for J, f in other.components.items():
            comps[J] = comps[J] + f if J in comps else f
        return DifferentialForm(self.framing, self.ring, self.precision, self.degree, comps)

    def __sub__(self, other):
        return self + other.scale_int(-1)

    def scale_int(self, n: int):
        return DifferentialForm(self.framing, self.ring, self.precision, self.degree,
                                {J: f.scale_int(n) for J, f in self.components.items()})

    def __eq__(self, other):
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        return self.degree == other.degree and (self - other).is_zero()

    def __hash__(self):
        return hash((self.degree, len(self.components)))


def d_q(form: DifferentialForm) -> DifferentialForm:
    """q-de Rham differential with insertion signs.

    The component operator in direction i is nabla_i against dT_i for
    polynomial coordinates and T_i nabla_i against dlog x_i for Laurent
    coordinates; these commute pairwise, so d_q o d_q = 0.
    """
    framing = form.framing
    comps = {}
    for J, f in form.components.items():
        for i in range(framing.d):
            if i in J:
                continue
            if framing.spec(i).kind == "laurent":
                g = f.dlog_component(i)
            else:
                g = f.nabla(i)
            if g.is_zero():
                continue
            if insertion_sign(i, J) == -1:
                g = g.scale_int(-1)
            Jn = tuple(sorted(J + (i,)))
            comps[Jn] = comps[Jn] + g if Jn in comps else g
    return DifferentialForm(form.framing, form.ring, form.precision, form.degree + 1, comps)
