"""Exact homological algebra over the rings the workbench needs.

Matrix entries live in one of:

* Z, Q, F_p (= Z/p), Z/p^M        -- Smith normal form directly
* F_p[q], Q[q]                    -- Smith normal form (Euclidean)
* (Z/p^M)[q]/((q-1)^N)            -- "truncated": flattened to Z/p^M
* (Z/p^M)[q]/(f(q)), f monic      -- "quotient": flattened to Z/p^M

Homology of a complex of finite free modules is reported as
AbGroupInvariants: a free rank over the base plus a divisibility chain of
elementary divisors.  Over Z/p^M "free" counts the Z/p^M-free summands
(divisor exactly p^M); true torsion divisors are the p^k with k < M.

Smith normal form is computed by the classical divmod reduction over any
ring exposing a well-founded size function: absolute value on Z, degree on
polynomial rings, p-adic valuation on Z/p^M (a valuation ring, where any
two elements are comparable), the constant 1 on fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import (
    DivisionNotExact,
    InvalidF,
    NonCommuting,
    NotAComplex,
    NotChainMap,
    NotInvertible,
    UnsupportedRing,
)
from .qarith import (
    CoeffRing,
    QQ,
    QPolynomial,
    QSeries,
    ZZ,
    ZModRing,
    zmod,
)


# ---------------------------------------------------------------------------
# computational rings (matrix-entry level)
# ---------------------------------------------------------------------------

class CompRing:
    """Ring protocol for matrix entries.

    ``snf_capable`` rings also provide divmod/size/normalize for Smith
    reduction; ``flattenable`` rings are finite free Z/p^M-algebras and
    provide the multiplication matrix of an element over Z/p^M.
    """

    name = "ring"
    snf_capable = False
    flattenable = False

    def zero(self):
        raise NotImplementedError

    def one(self):
        return self.from_int(1)

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

    def eq(self, a, b) -> bool:
        return self.is_zero(self.sub(a, b))

    def is_unit(self, a) -> bool:
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def to_str(self, a) -> str:
        return str(a)

    # SNF protocol -----------------------------------------------------------

    def divmod(self, a, b):
        """a = q*b + r with r zero or size(r) < size(b)."""
        raise UnsupportedRing(f"{self.name} has no division algorithm")

    def size(self, a) -> int:
        raise UnsupportedRing(f"{self.name} has no size function")

    def normalize(self, a):
        """Return (canonical, u) with canonical = a*u and u a unit."""
        raise UnsupportedRing(f"{self.name} has no canonical associates")

    def divides(self, a, b) -> bool:
        """Whether a | b (a nonzero)."""
        _, r = self.divmod(b, a)
        return self.is_zero(r)

    def descriptor(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, CompRing) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(repr(sorted(self.descriptor().items(), key=str)))

    def __repr__(self):
        return f"CompRing({self.name})"


class IntegersRing(CompRing):
    """Z with symmetric-remainder division."""

    name = "Z"
    snf_capable = True

    def zero(self):
        return 0

    def from_int(self, n):
        return int(n)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def is_zero(self, a):
        return a == 0

    def is_unit(self, a):
        return a in (1, -1)

    def inv(self, a):
        if a in (1, -1):
            return a
        raise NotInvertible(f"{a} not a unit in Z")

    def divmod(self, a, b):
        # symmetric remainder keeps entries small during reduction
        r = a % abs(b)
        if 2 * r > abs(b):
            r -= abs(b)
        return (a - r) // b, r

    def size(self, a):
        return abs(a)

    def normalize(self, a):
        return (abs(a), 1 if a >= 0 else -1)

    def descriptor(self):
        return {"kind": "int"}


class FieldRing(CompRing):
    """A field presented through a CoeffRing (Q, or F_p as Z/p)."""

    name = "field"
    snf_capable = True

    def __init__(self, coeff: CoeffRing):
        if isinstance(coeff, ZModRing) and coeff.M != 1:
            raise UnsupportedRing("FieldRing over Z/p^M needs M = 1")
        self.coeff = coeff
        self.name = f"field({coeff.descriptor()})"

    def zero(self):
        return self.coeff.zero

    def from_int(self, n):
        return self.coeff.from_int(n)

    def add(self, a, b):
        return self.coeff.add(a, b)

    def sub(self, a, b):
        return self.coeff.sub(a, b)

    def mul(self, a, b):
        return self.coeff.mul(a, b)

    def neg(self, a):
        return self.coeff.neg(a)

    def is_zero(self, a):
        return self.coeff.is_zero(a)

    def is_unit(self, a):
        return not self.coeff.is_zero(a)

    def inv(self, a):
        return self.coeff.inv(a)

    def to_str(self, a):
        return self.coeff.to_str(a)

    def divmod(self, a, b):
        return self.coeff.mul(a, self.coeff.inv(b)), self.coeff.zero

    def size(self, a):
        return 1

    def normalize(self, a):
        if self.coeff.is_zero(a):
            return (a, self.coeff.one)
        return (self.coeff.one, self.coeff.inv(a))

    def descriptor(self):
        return {"kind": "field", "coeff": self.coeff.descriptor()}


class ZModPMRing(CompRing):
    """Z/p^M as a valuation ring: size is the p-adic valuation."""

    name = "zmodpm"
    snf_capable = True

    def __init__(self, p: int, M: int):
        self.cr = zmod(p, M)
        self.p = p
        self.M = M
        self.modulus = self.cr.modulus
        self.name = f"Z/{p}^{M}"

    def zero(self):
        return 0

    def from_int(self, n):
        return n % self.modulus

    def add(self, a, b):
        return (a + b) % self.modulus

    def sub(self, a, b):
        return (a - b) % self.modulus

    def mul(self, a, b):
        return (a * b) % self.modulus

    def neg(self, a):
        return (-a) % self.modulus

    def is_zero(self, a):
        return a % self.modulus == 0

    def is_unit(self, a):
        return a % self.p != 0

    def inv(self, a):
        return self.cr.inv(a)

    def valuation(self, a) -> int:
        return self.cr.valuation(a)

    def divmod(self, a, b):
        # any two elements are comparable: the smaller valuation divides
        va, vb = self.valuation(a), self.valuation(b)
        if va < vb:
            return 0, a
        unit_b = (b % self.modulus) // (self.p ** vb)
        q = (a // (self.p ** vb)) * pow(unit_b, -1, self.modulus)
        return q % self.modulus, 0

    def size(self, a):
        return self.valuation(a)

    def normalize(self, a):
        v = self.valuation(a)
        if v >= self.M:
            return (0, 1)
        unit = (a % self.modulus) // (self.p ** v)
        return (self.p ** v, pow(unit, -1, self.modulus))

    def descriptor(self):
        return {"kind": "zmodpm", "p": self.p, "M": self.M}


class PolyRing(CompRing):
    """Univariate polynomials over a field, entries stored as QPolynomial."""

    name = "poly"
    snf_capable = True

    def __init__(self, coeff: CoeffRing):
        if isinstance(coeff, ZModRing) and coeff.M != 1:
            raise UnsupportedRing("PolyRing needs field coefficients")
        self.coeff = coeff
        self.name = f"{coeff.descriptor()}[q]"

    def zero(self):
        return QPolynomial.zero(self.coeff)

    def from_int(self, n):
        return QPolynomial(self.coeff, [n])

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def is_zero(self, a):
        return a.is_zero()

    def is_unit(self, a):
        return a.degree == 0

    def inv(self, a):
        if a.degree != 0:
            raise NotInvertible(f"{a} not a unit in {self.name}")
        return QPolynomial(self.coeff, [self.coeff.inv(a.coeffs[0])])

    def to_str(self, a):
        return str(a)

    def divmod(self, a, b):
        return a.divmod(b)

    def size(self, a):
        return a.degree

    def normalize(self, a):
        if a.is_zero():
            return (a, self.from_int(1))
        u = QPolynomial(self.coeff, [self.coeff.inv(a.leading())])
        return (a * u, u)

    def descriptor(self):
        return {"kind": "poly", "coeff": self.coeff.descriptor()}


class TruncatedRing(CompRing):
    """S = (Z/p^M)[q] / ((q-1)^N), elements stored as QSeries in q-1."""

    name = "truncated"
    flattenable = True

    def __init__(self, p: int, M: int, N: int):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.p = p
        self.M = M
        self.N = N
        self.coeff = zmod(p, M)
        self.flat_rank = N
        self.name = f"(Z/{p}^{M})[q]/((q-1)^{N})"

    def zero(self):
        return QSeries.zero(self.coeff, self.N)

    def from_int(self, n):
        return QSeries.from_int(self.coeff, n, self.N)

    def from_series(self, s: QSeries) -> QSeries:
        if s.ring != self.coeff or s.precision != self.N:
            raise UnsupportedRing("series does not match the truncated ring")
        return s

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def is_zero(self, a):
        return a.is_zero()

    def is_unit(self, a):
        return self.coeff.is_unit(a.coeffs[0])

    def inv(self, a):
        return a.invert()

    def to_str(self, a):
        return str(a)

    def mult_matrix_int(self, a) -> list[list[int]]:
        """Multiplication by a on the basis 1, (q-1), ..., (q-1)^(N-1)."""
        cs = a.coeffs
        return [[int(cs[i - j]) if i >= j else 0 for j in range(self.N)] for i in range(self.N)]

    def descriptor(self):
        return {"kind": "truncated", "p": self.p, "M": self.M, "N": self.N}


class QuotientRing(CompRing):
    """(Z/p^M)[q] / (f(q)) for a monic modulus f, elements as reduced QPolynomial."""

    name = "quotient"
    flattenable = True

    def __init__(self, p: int, M: int, modulus: QPolynomial):
        self.p = p
        self.M = M
        self.coeff = zmod(p, M)
        if modulus.ring != self.coeff:
            modulus = modulus.map_ring(self.coeff)
        if modulus.is_zero() or modulus.leading() != 1:
            raise UnsupportedRing("quotient modulus must be monic")
        self.modulus = modulus
        self.flat_rank = modulus.degree
        self.name = f"(Z/{p}^{M})[q]/({modulus})"

    def reduce(self, a: QPolynomial) -> QPolynomial:
        if a.ring != self.coeff:
            a = a.map_ring(self.coeff)
        _, r = a.divmod(self.modulus)
        return r

    def zero(self):
        return QPolynomial.zero(self.coeff)

    def from_int(self, n):
        return self.reduce(QPolynomial(self.coeff, [n]))

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return self.reduce(a * b)

    def neg(self, a):
        return -a

    def is_zero(self, a):
        return a.is_zero()

    def to_str(self, a):
        return str(a)

    def mult_matrix_int(self, a) -> list[list[int]]:
        """Multiplication by a on the basis 1, q, ..., q^(deg f - 1)."""
        n = self.flat_rank
        cols = []
        qpow = QPolynomial.one(self.coeff)
        qgen = QPolynomial.q(self.coeff)
        for _ in range(n):
            col = self.mul(a, qpow)
            cols.append([int(col.coefficient(i)) for i in range(n)])
            qpow = self.mul(qpow, qgen)
        return [[cols[j][i] for j in range(n)] for i in range(n)]

    def descriptor(self):
        return {
            "kind": "quotient",
            "p": self.p,
            "M": self.M,
            "modulus": [str(c) for c in self.modulus.coeffs],
        }


ZRING = IntegersRing()
QRING = FieldRing(QQ)


def field_ring(p: int) -> FieldRing:
    return FieldRing(zmod(p, 1))


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

class Matrix:
    """Dense immutable matrix over a CompRing, acting on column vectors."""

    __slots__ = ("ring", "nrows", "ncols", "rows")

    def __init__(self, ring: CompRing, rows, ncols: int | None = None):
        self.ring = ring
        self.rows = tuple(tuple(r) for r in rows)
        self.nrows = len(self.rows)
        if self.nrows:
            self.ncols = len(self.rows[0])
        else:
            self.ncols = 0 if ncols is None else ncols
        for r in self.rows:
            if len(r) != self.ncols:
                raise ValueError("ragged matrix")

    @classmethod
    def zeros(cls, ring, nrows, ncols):
        z = ring.zero()
        return cls(ring, [[z] * ncols for _ in range(nrows)], ncols=ncols)

    @classmethod
    def identity(cls, ring, n):
        z, o = ring.zero(), ring.one()
        return cls(ring, [[o if i == j else z for j in range(n)] for i in range(n)])

    @classmethod
    def from_cols(cls, ring, cols, nrows=None):
        if not cols:
            return cls.zeros(ring, nrows or 0, 0)
        n = len(cols[0])
        return cls(ring, [[col[i] for col in cols] for i in range(n)])

    def entry(self, i, j):
        return self.rows[i][j]

    def col(self, j):
        return [r[j] for r in self.rows]

    def cols(self):
        return [self.col(j) for j in range(self.ncols)]

    def __mul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        R = self.ring
        out = []
        for i in range(self.nrows):
            row = []
            srow = self.rows[i]
            for j in range(other.ncols):
                acc = R.zero()
                for k in range(self.ncols):
                    a = srow[k]
                    if not R.is_zero(a):
                        acc = R.add(acc, R.mul(a, other.rows[k][j]))
                row.append(acc)
            out.append(row)
        return Matrix(R, out, ncols=other.ncols)

    def apply(self, vec):
        R = self.ring
        out = []
        for i in range(self.nrows):
            acc = R.zero()
            for k, a in enumerate(self.rows[i]):
                if not R.is_zero(a):
                    acc = R.add(acc, R.mul(a, vec[k]))
            out.append(acc)
        return out

    def __add__(self, other):
        R = self.ring
        return Matrix(R, [[R.add(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
                      ncols=self.ncols)

    def __sub__(self, other):
        R = self.ring
        return Matrix(R, [[R.sub(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
                      ncols=self.ncols)

    def __neg__(self):
        R = self.ring
        return Matrix(R, [[R.neg(a) for a in r] for r in self.rows], ncols=self.ncols)

    def scale(self, c):
        R = self.ring
        return Matrix(R, [[R.mul(c, a) for a in r] for r in self.rows], ncols=self.ncols)

    def transpose(self):
        return Matrix(self.ring, [[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)],
                      ncols=self.nrows)

    def hstack(self, other: "Matrix") -> "Matrix":
        if self.nrows != other.nrows:
            raise ValueError("row mismatch")
        return Matrix(self.ring, [r1 + r2 for r1, r2 in zip(self.rows, other.rows)],
                      ncols=self.ncols + other.ncols)

    def vstack(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.ncols:
            raise ValueError("col mismatch")
        return Matrix(self.ring, self.rows + other.rows, ncols=self.ncols)

    def submatrix(self, row_idx, col_idx):
        return Matrix(self.ring, [[self.rows[i][j] for j in col_idx] for i in row_idx],
                      ncols=len(col_idx))

    def is_zero(self) -> bool:
        R = self.ring
        return all(R.is_zero(a) for r in self.rows for a in r)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        if self.ring != other.ring or self.nrows != other.nrows or self.ncols != other.ncols:
            return False
        R = self.ring
        return all(R.eq(a, b) for r1, r2 in zip(self.rows, other.rows) for a, b in zip(r1, r2))

    def __hash__(self):
        return hash((self.nrows, self.ncols))

    def map_entries(self, fn, new_ring=None):
        return Matrix(new_ring or self.ring, [[fn(a) for a in r] for r in self.rows],
                      ncols=self.ncols)

    def to_int_rows(self) -> list[list[int]]:
        """Canonical integer lifts (Z and Z/p^M entries only)."""
        return [[int(a) for a in r] for r in self.rows]

    def __repr__(self):
        return f"Matrix({self.nrows}x{self.ncols} over {self.ring.name})"

    def to_json(self):
        return {
            "nrows": self.nrows,
            "ncols": self.ncols,
            "entries": [[self.ring.to_str(a) for a in r] for r in self.rows],
        }


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------

@dataclass
class SmithForm:
    """U*A*V = D diagonal with a divisibility chain; inverses tracked."""

    d: Matrix
    u: Matrix
    v: Matrix
    uinv: Matrix
    vinv: Matrix

    @property
    def diagonal(self):
        n = min(self.d.nrows, self.d.ncols)
        return [self.d.rows[i][i] for i in range(n)]

    @property
    def rank(self):
        R = self.d.ring
        return sum(0 if R.is_zero(x) else 1 for x in self.diagonal)


def smith_normal_form(A: Matrix) -> SmithForm:
    """Diagonalize A over an SNF-capable ring, tracking U, V and inverses."""
    R = A.ring
    if not R.snf_capable:
        raise UnsupportedRing(f"no Smith form over {R.name}")
    m, n = A.nrows, A.ncols
    D = [list(r) for r in A.rows]
    U = [[R.one() if i == j else R.zero() for j in range(m)] for i in range(m)]
    Ui = [[R.one() if i == j else R.zero() for j in range(m)] for i in range(m)]
    V = [[R.one() if i == j else R.zero() for j in range(n)] for i in range(n)]
    Vi = [[R.one() if i == j else R.zero() for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def swap_cols(i, j):
        for r in D:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def add_row(i, j, c):
        # row_i += c * row_j
        if R.is_zero(c):
            return
        for k in range(n):
            D[i][k] = R.add(D[i][k], R.mul(c, D[j][k]))
        for k in range(m):
            U[i][k] = R.add(U[i][k], R.mul(c, U[j][k]))
        for r in Ui:
            r[j] = R.sub(r[j], R.mul(c, r[i]))

    def add_col(i, j, c):
        # col_i += c * col_j
        if R.is_zero(c):
            return
        for r in D:
            r[i] = R.add(r[i], R.mul(c, r[j]))
        for r in V:
            r[i] = R.add(r[i], R.mul(c, r[j]))
        for k in range(n):
            Vi[j][k] = R.sub(Vi[j][k], R.mul(c, Vi[i][k]))

    def scale_col(j, u):
        for r in D:
            r[j] = R.mul(r[j], u)
        for r in V:
            r[j] = R.mul(r[j], u)
        ui = R.inv(u)
        for k in range(n):
            Vi[j][k] = R.mul(ui, Vi[j][k])

    def find_pivot(t):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if not R.is_zero(D[i][j]):
                    s = R.size(D[i][j])
                    if best is None or s < best[0]:
                        best = (s, i, j)
        return best

    t = 0
    while t < min(m, n):
        piv = find_pivot(t)
        if piv is None:
            break
        _, pi, pj = piv
        if pi != t:
            swap_rows(t, pi)
        if pj != t:
            swap_cols(t, pj)
        while True:
            # clear column t
            restart = False
            for i in range(m):
                if i == t or R.is_zero(D[i][t]):
                    continue
                qq, r = R.divmod(D[i][t], D[t][t])
                add_row(i, t, R.neg(qq))
                if not R.is_zero(D[i][t]):
                    swap_rows(t, i)  # remainder is strictly smaller
                    restart = True
                    break
            if restart:
                continue
            # clear row t
            for j in range(n):
                if j == t or R.is_zero(D[t][j]):
                    continue
                qq, r = R.divmod(D[t][j], D[t][t])
                add_col(j, t, R.neg(qq))
                if not R.is_zero(D[t][j]):
                    swap_cols(t, j)
                    restart = True
                    break
            if restart:
                continue
            # divisibility: pivot must divide every remaining entry
            offender = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if R.is_zero(D[i][j]):
                        continue
                    _, r = R.divmod(D[i][j], D[t][t])
                    if not R.is_zero(r):
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(t, offender, R.one())  # pulls the bad entry into row t
        canon, unit = R.normalize(D[t][t])
        if not R.eq(unit, R.one()):
            scale_col(t, unit)
        t += 1

    return SmithForm(
        d=Matrix(R, D, ncols=n), u=Matrix(R, U, ncols=m), v=Matrix(R, V, ncols=n),
        uinv=Matrix(R, Ui, ncols=m), vinv=Matrix(R, Vi, ncols=n),
    )


def kernel_basis(A: Matrix) -> Matrix:
    """Basis of ker(A) over a PID or field (columns of the result)."""
    snf = smith_normal_form(A)
    R = A.ring
    cols = []
    for j in range(A.ncols):
        diag = snf.d.rows[j][j] if j < min(A.nrows, A.ncols) else None
        if diag is None or R.is_zero(diag):
            cols.append(snf.v.col(j))
    return Matrix.from_cols(R, cols, nrows=A.ncols)


def solve_matrix(A: Matrix, B: Matrix):
    """Solve A X = B exactly over a PID or field; None if unsolvable."""
    R = A.ring
    snf = smith_normal_form(A)
    C = snf.u * B
    Y = [[R.zero()] * B.ncols for _ in range(A.ncols)]
    rank_bound = min(A.nrows, A.ncols)
    for i in range(A.nrows):
        diag = snf.d.rows[i][i] if i < rank_bound else R.zero()
        for j in range(B.ncols):
            c = C.rows[i][j]
            if R.is_zero(diag):
                if not R.is_zero(c):
                    return None
            else:
                qq, r = R.divmod(c, diag)
                if not R.is_zero(r):
                    return None
                if i < A.ncols:
                    Y[i][j] = qq
    return snf.v * Matrix(R, Y, ncols=B.ncols)


# ---------------------------------------------------------------------------
# free complexes
# ---------------------------------------------------------------------------

@dataclass
class FreeComplex:
    """Cochain complex of finite free modules; diffs[i] maps degree i to i+1."""

    ring: CompRing
    ranks: dict[int, int]
    diffs: dict[int, Matrix] = field(default_factory=dict)
    labels: dict[int, list] = field(default_factory=dict)

    @property
    def degrees(self):
        return sorted(self.ranks)

    def rank(self, i: int) -> int:
        return self.ranks.get(i, 0)

    def diff(self, i: int) -> Matrix:
        if i in self.diffs:
            return self.diffs[i]
        return Matrix.zeros(self.ring, self.rank(i + 1), self.rank(i))

    def shift_ranks(self):
        return {i - 1: r for i, r in self.ranks.items()}


def validate_complex(C: FreeComplex) -> None:
    """Check shapes and d o d = 0; raises NotAComplex with a witness."""
    for i in C.degrees:
        d = C.diff(i)
        if d.ncols != C.rank(i) or d.nrows != C.rank(i + 1):
            raise NotAComplex(f"differential at degree {i} has shape "
                              f"{d.nrows}x{d.ncols}, expected {C.rank(i+1)}x{C.rank(i)}")
    for i in C.degrees:
        if C.rank(i) and C.rank(i + 2):
            prod = C.diff(i + 1) * C.diff(i)
            if not prod.is_zero():
                raise NotAComplex(f"d o d != 0 from degree {i}")


def direct_sum_complex(cs: list[FreeComplex]) -> FreeComplex:
    """Degreewise direct sum (block-diagonal differentials)."""
    if not cs:
        raise ValueError("empty direct sum")
    ring = cs[0].ring
    degrees = sorted({i for c in cs for i in c.degrees})
    ranks = {i: sum(c.rank(i) for c in cs) for i in degrees}
    diffs = {}
    for i in degrees:
        blocks = [c.diff(i) for c in cs]
        total_rows = sum(b.nrows for b in blocks)
        total_cols = sum(b.ncols for b in blocks)
        z = ring.zero()
        grid = [[z] * total_cols for _ in range(total_rows)]
        row_off = col_off = 0
        for b in blocks:
            for r in range(b.nrows):
                for c2 in range(b.ncols):
                    grid[row_off + r][col_off + c2] = b.rows[r][c2]
            row_off += b.nrows
            col_off += b.ncols
        diffs[i] = Matrix(ring, grid, ncols=total_cols)
    return FreeComplex(ring=ring, ranks=ranks, diffs=diffs)


# ---------------------------------------------------------------------------
# homology invariants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbGroupInvariants:
    """Free rank over the base plus elementary divisors (divisibility chain)."""

    free_rank: int
    divisors: tuple = ()

    def to_json(self) -> dict:
        return {"free_rank": self.free_rank, "divisors": list(self.divisors)}

    @classmethod
    def from_json(cls, data: dict) -> "AbGroupInvariants":
        return cls(data["free_rank"], tuple(data["divisors"]))

    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.divisors

    @classmethod
    def from_p_power_multiset(cls, p: int, M: int, powers) -> "AbGroupInvariants":
        """Canonical form of a direct sum of Z/p^k pieces over the base Z/p^M.

        Exponents k == M count toward the free rank (free Z/p^M summands);
        k == 0 pieces vanish.  The divisor chain is the ascending sort.
        """
        free = sum(1 for k in powers if k >= M)
        divs = sorted(k for k in powers if 0 < k < M)
        return cls(free, tuple(str(p ** k) for k in divs))

    def direct_sum_p(self, other: "AbGroupInvariants", p: int, M: int) -> "AbGroupInvariants":
        def exps(inv):
            out = [M] * inv.free_rank
            for d in inv.divisors:
                n = int(d)
                k = 0
                while n > 1:
                    n //= p
                    k += 1
                out.append(k)
            return out
        return AbGroupInvariants.from_p_power_multiset(p, M, exps(self) + exps(other))


def _homology_pid(C: FreeComplex, i: int) -> AbGroupInvariants:
    R = C.ring
    A = C.diff(i)
    B = C.diff(i - 1)
    K = kernel_basis(A)
    k = K.ncols
    if k == 0:
        return AbGroupInvariants(0)
    if C.rank(i - 1):
        X = solve_matrix(K, B)
        if X is None:
            raise NotAComplex("image does not land in the kernel")
    else:
        X = Matrix.zeros(R, k, 0)
    if X.ncols == 0:
        return AbGroupInvariants(k)
    snf = smith_normal_form(X)
    divisors = []
    rank = 0
    for d in snf.diagonal:
        if R.is_zero(d):
            continue
        rank += 1
        if not R.is_unit(d):
            divisors.append(R.to_str(d))
    return AbGroupInvariants(k - rank, tuple(divisors))


def _kernel_data_zmodpm(R: ZModPMRing, A: Matrix):
    """SNF-driven description of ker(A) over Z/p^M.

    Returns (V, vinv, vals) where the kernel is generated by
    g_j = p^(M - vals[j]) * V e_j and the relation lattice in those
    generators is diag(p^vals[j]).
    """
    n = A.ncols
    if A.nrows == 0:
        return Matrix.identity(R, n), Matrix.identity(R, n), [R.M] * n
    snf = smith_normal_form(A)
    vals = []
    bound = min(A.nrows, n)
    for j in range(n):
        if j < bound:
            vals.append(R.valuation(snf.d.rows[j][j]))
        else:
            vals.append(R.M)
    return snf.v, snf.vinv, vals


def _homology_zmodpm(C: FreeComplex, i: int) -> AbGroupInvariants:
    """Homology over Z/p^M via valuation Smith forms (no integer lifting).

    ker(d_i) is generated by g_j = p^(M-v_j) V e_j where U d_i V is diagonal
    with valuations v_j; expressing the boundaries in those generators
    presents H^i as the cokernel of [coords | diag(p^(v_j))].
    """
    R: ZModPMRing = C.ring
    p, M = R.p, R.M
    A = C.diff(i)
    B = C.diff(i - 1)
    n = C.rank(i)
    if n == 0:
        return AbGroupInvariants(0)
    V, Vi, vals = _kernel_data_zmodpm(R, A)
    cols = []
    if C.rank(i - 1):
        W = Vi * B
        for col in range(W.ncols):
            c = []
            for j in range(n):
                w = W.rows[j][col]
                e = M - vals[j]
                # w is divisible by p^e because the column is a cycle
                if w % (p ** e) != 0:
                    raise NotAComplex("boundary is not a cycle mod p^M")
                c.append((w // (p ** e)) % R.modulus)
            cols.append(c)
    for j in range(n):
        rel = [0] * n
        rel[j] = (p ** vals[j]) % R.modulus
        cols.append(rel)
    P = Matrix.from_cols(R, cols, nrows=n)
    snf = smith_normal_form(P)
    powers = []
    for j in range(n):
        powers.append(R.valuation(snf.d.rows[j][j]))
    return AbGroupInvariants.from_p_power_multiset(p, M, powers)


def flatten_matrix(A: Matrix) -> Matrix:
    """Expand a matrix over a flattenable ring to blocks over Z/p^M."""
    R = A.ring
    if not R.flattenable:
        raise UnsupportedRing(f"{R.name} is not flattenable")
    base = ZModPMRing(R.p, R.M)
    fr = R.flat_rank
    out = [[0] * (A.ncols * fr) for _ in range(A.nrows * fr)]
    for i in range(A.nrows):
        for j in range(A.ncols):
            block = R.mult_matrix_int(A.rows[i][j])
            for bi in range(fr):
                orow = out[i * fr + bi]
                brow = block[bi]
                for bj in range(fr):
                    orow[j * fr + bj] = brow[bj]
    return Matrix(base, out, ncols=A.ncols * fr)


def flatten_complex(C: FreeComplex) -> FreeComplex:
    R = C.ring
    base = ZModPMRing(R.p, R.M)
    ranks = {i: r * R.flat_rank for i, r in C.ranks.items()}
    diffs = {i: flatten_matrix(d) for i, d in C.diffs.items()}
    return FreeComplex(ring=base, ranks=ranks, diffs=diffs)


def homology(C: FreeComplex, i: int) -> AbGroupInvariants:
    """Invariants of ker(d_i)/im(d_(i-1)) over the SNF base of C's ring."""
    R = C.ring
    if isinstance(R, ZModPMRing):
        return _homology_zmodpm(C, i)
    if R.snf_capable:
        return _homology_pid(C, i)
    if R.flattenable:
        return _homology_zmodpm(flatten_complex(C), i)
    raise UnsupportedRing(f"cannot compute homology over {R.name}")


def all_homology(C: FreeComplex) -> dict[int, AbGroupInvariants]:
    flat = flatten_complex(C) if (C.ring.flattenable and not C.ring.snf_capable) else C
    return {i: homology(flat, i) for i in C.degrees}


def coker_invariants(A: Matrix) -> AbGroupInvariants:
    """Invariants of coker(A) = R^rows / col-span over an SNF base."""
    R = A.ring
    if isinstance(R, ZModPMRing):
        snf = smith_normal_form(A)
        powers = []
        for j in range(A.nrows):
            if j < min(A.nrows, A.ncols):
                powers.append(R.valuation(snf.d.rows[j][j]))
            else:
                powers.append(R.M)
        return AbGroupInvariants.from_p_power_multiset(R.p, R.M, powers)
    if R.snf_capable:
        snf = smith_normal_form(A)
        divisors = []
        rank = 0
        for d in snf.diagonal:
            if R.is_zero(d):
                continue
            rank += 1
            if not R.is_unit(d):
                divisors.append(R.to_str(d))
        return AbGroupInvariants(A.nrows - rank, tuple(divisors))
    if R.flattenable:
        return coker_invariants(flatten_matrix(A))
    raise UnsupportedRing(f"cannot compute cokernel over {R.name}")


# ---------------------------------------------------------------------------
# decalage
# ---------------------------------------------------------------------------

def _preimage_lattice(A: Matrix, f) -> Matrix:
    """Basis of {y : A y in f*target} over a PID (full-rank square result)."""
    R = A.ring
    if A.nrows == 0:
        return Matrix.identity(R, A.ncols)
    fI = Matrix.identity(R, A.nrows).scale(f)
    K = kernel_basis(A.hstack(fI))
    # (y, z) with Ay + fz = 0; y determines z, so projecting keeps a basis
    proj = Matrix(R, K.rows[: A.ncols], ncols=K.ncols)
    if proj.ncols != A.ncols:
        raise InvalidF("preimage lattice is not full rank; is f a zero divisor?")
    return proj


def eta_f(C: FreeComplex, f) -> FreeComplex:
    """Decalage: degree i of the result is f^i * {y in C^i : dy in f C^(i+1)}.

    Works over SNF-capable domains with f a nonzero non-zero-divisor.  The
    construction is basis-level: N^i gets the basis K_i, and the new
    differential sends a basis vector y to (d y)/f expressed in K_(i+1).
    """
    R = C.ring
    if not R.snf_capable:
        raise UnsupportedRing("decalage needs an SNF-capable base ring")
    if R.is_zero(f):
        raise InvalidF("f must be nonzero")
    if isinstance(R, ZModPMRing):
        raise InvalidF("f is a zero divisor in Z/p^M")
    bases = {}
    for i in C.degrees:
        if C.rank(i) == 0:
            bases[i] = Matrix.zeros(R, 0, 0)
            continue
        bases[i] = _preimage_lattice(C.diff(i), f)
    diffs = {}
    for i in C.degrees:
        if C.rank(i) == 0 or C.rank(i + 1) == 0:
            continue
        dK = C.diff(i) * bases[i]
        quot_rows = []
        for r in dK.rows:
            row = []
            for a in r:
                qq, rem = R.divmod(a, f)
                if not R.is_zero(rem):
                    raise DivisionNotExact("image not divisible by f")
                row.append(qq)
            quot_rows.append(row)
        target = bases[i + 1]
        E = solve_matrix(target, Matrix(R, quot_rows))
        if E is None:
            raise InvalidF("quotient image misses the next-level lattice")
        diffs[i] = E
    out = FreeComplex(ring=R, ranks=dict(C.ranks), diffs=diffs)
    validate_complex(out)
    return out


# ---------------------------------------------------------------------------
# Koszul complexes and cones
# ---------------------------------------------------------------------------

def koszul_sign(j: int, J: tuple) -> int:
    """Sign for inserting index j into the strictly increasing set J."""
    return -1 if sum(1 for l in J if l < j) % 2 else 1


def koszul_complex(ops: list[Matrix]) -> FreeComplex:
    """Koszul cochain complex of commuting endomorphisms g_1..g_d.

    Degree k is rank r * C(d, k) on basis (J, m) with J a k-subset; the
    differential inserts indices with sign (-1)^|{l in J : l < j}| acting by
    g_j - 1.
    """
    if not ops:
        raise ValueError("need at least one operator")
    ring = ops[0].ring
    r = ops[0].nrows
    d = len(ops)
    for g in ops:
        if g.nrows != r or g.ncols != r or g.ring != ring:
            raise ValueError("operators must be square of equal size over one ring")
    for a in range(d):
        for b in range(a + 1, d):
            if ops[a] * ops[b] != ops[b] * ops[a]:
                raise NonCommuting(f"operators {a} and {b} do not commute")
    tminus = [g - Matrix.identity(ring, r) for g in ops]
    subsets = {k: list(itertools.combinations(range(d), k)) for k in range(d + 1)}
    index = {k: {J: pos for pos, J in enumerate(subsets[k])} for k in range(d + 1)}
    ranks = {k: r * len(subsets[k]) for k in range(d + 1)}
    labels = {k: [(J, m) for J in subsets[k] for m in range(r)] for k in range(d + 1)}
    diffs = {}
    z = ring.zero()
    for k in range(d):
        rows = [[z] * ranks[k] for _ in range(ranks[k + 1])]
        for Jpos, J in enumerate(subsets[k]):
            for j in range(d):
                if j in J:
                    continue
                Jn = tuple(sorted(J + (j,)))
                sgn = koszul_sign(j, J)
                block = tminus[j] if sgn == 1 else -tminus[j]
                tpos = index[k + 1][Jn]
                for a in range(r):
                    row = rows[tpos * r + a]
                    brow = block.rows[a]
                    for b in range(r):
                        if not ring.is_zero(brow[b]):
                            row[Jpos * r + b] = ring.add(row[Jpos * r + b], brow[b])
        diffs[k] = Matrix(ring, rows, ncols=ranks[k])
    out = FreeComplex(ring=ring, ranks=ranks, diffs=diffs, labels=labels)
    validate_complex(out)
    return out


@dataclass
class ChainMap:
    source: FreeComplex
    target: FreeComplex
    maps: dict[int, Matrix]

    def component(self, i: int) -> Matrix:
        if i in self.maps:
            return self.maps[i]
        return Matrix.zeros(self.source.ring, self.target.rank(i), self.source.rank(i))


def validate_chain_map(u: ChainMap) -> None:
    for i in u.source.degrees:
        lhs = u.target.diff(i) * u.component(i)
        rhs = u.component(i + 1) * u.source.diff(i)
        if lhs != rhs:
            raise NotChainMap(f"square at degree {i} does not commute")


def mapping_cone(u: ChainMap) -> FreeComplex:
    """Cone(u)^i = C^(i+1) + D^i with d(c, x) = (-dc, u(c) + dx)."""
    validate_chain_map(u)
    C, D = u.source, u.target
    ring = C.ring
    degrees = sorted(set([i - 1 for i in C.degrees] + list(D.degrees)))
    ranks = {i: C.rank(i + 1) + D.rank(i) for i in degrees}
    diffs = {}
    z = ring.zero()
    for i in degrees:
        rows_out = ranks.get(i + 1, C.rank(i + 2) + D.rank(i + 1))
        grid = [[z] * ranks[i] for _ in range(rows_out)]
        dc = C.diff(i + 1)
        for a in range(dc.nrows):
            for b in range(dc.ncols):
                grid[a][b] = ring.neg(dc.rows[a][b])
        ui = u.component(i + 1)
        for a in range(ui.nrows):
            for b in range(ui.ncols):
                grid[C.rank(i + 2) + a][b] = ui.rows[a][b]
        dd = D.diff(i)
        for a in range(dd.nrows):
            for b in range(dd.ncols):
                grid[C.rank(i + 2) + a][C.rank(i + 1) + b] = dd.rows[a][b]
        diffs[i] = Matrix(ring, grid, ncols=ranks[i])
    cone = FreeComplex(ring=ring, ranks=ranks, diffs=diffs)
    validate_complex(cone)
    return cone


def annihilator_check(C: FreeComplex, s) -> tuple[bool, int | None]:
    """Whether s * H^i(C) = 0 for every degree; returns (ok, witness degree).

    Over a flattenable ring the check runs on the flattened complex with s
    acting through its multiplication matrix; over Z/p^M directly.
    """
    R = C.ring
    if R.flattenable:
        flat = flatten_complex(C)
        base = flat.ring
        fr = R.flat_rank
        sblock = R.mult_matrix_int(s)
        for i in C.degrees:
            n = flat.rank(i)
            if n == 0:
                continue
            z = 0
            grid = [[z] * n for _ in range(n)]
            for b in range(C.rank(i)):
                for bi in range(fr):
                    for bj in range(fr):
                        grid[b * fr + bi][b * fr + bj] = sblock[bi][bj]
            Ms = Matrix(base, grid)
            if not _acts_trivially_zmodpm(flat, i, Ms):
                return False, i
        return True, None
    if isinstance(R, ZModPMRing):
        for i in C.degrees:
            n = C.rank(i)
            if n == 0:
                continue
            Ms = Matrix.identity(R, n).scale(s)
            if not _acts_trivially_zmodpm(C, i, Ms):
                return False, i
        return True, None
    if R.snf_capable:
        for i in C.degrees:
            K = kernel_basis(C.diff(i))
            if K.ncols == 0:
                continue
            target = K.scale(s)
            B = C.diff(i - 1)
            if C.rank(i - 1) == 0:
                if not target.is_zero():
                    return False, i
                continue
            if solve_matrix(B, target) is None:
                return False, i
        return True, None
    raise UnsupportedRing(f"cannot check annihilation over {R.name}")


def _acts_trivially_zmodpm(C: FreeComplex, i: int, Ms: Matrix) -> bool:
    """Whether the operator Ms kills H^i of a Z/p^M complex."""
    R: ZModPMRing = C.ring
    p, M = R.p, R.M
    n = C.rank(i)
    V, _, vals = _kernel_data_zmodpm(R, C.diff(i))
    B = C.diff(i - 1) if C.rank(i - 1) else Matrix.zeros(R, n, 0)
    B_rows = [list(r) for r in B.rows]
    for j in range(n):
        gen = [(x * (p ** (M - vals[j]))) % R.modulus for x in V.col(j)]
        target = Ms.apply(gen)
        if B.ncols == 0:
            if any(x % R.modulus for x in target):
                return False
        elif solve_zmod(p, M, B_rows, [[x] for x in target]) is None:
            return False
    return True


def solve_zmod(p: int, M: int, A: list[list[int]], B: list[list[int]]):
    """Solve A X = B over Z/p^M by valuation-pivot elimination.

    Deterministic: each pivot is the remaining entry of minimal p-adic
    valuation, ties broken by (row, col); free variables are set to zero.
    Returns X as a list of rows, or None when the system is unsolvable.
    """
    mod = p ** M
    m = len(A)
    n = len(A[0]) if m else 0
    rhs_cols = len(B[0]) if B else 0
    D = [[x % mod for x in row] for row in A]
    R = [[x % mod for x in row] for row in B]

    def val(x):
        x %= mod
        if x == 0:
            return M
        v = 0
        while x % p == 0:
            x //= p
            v += 1
        return v

    pivots = []  # (row, col) in discovery order
    used_rows, used_cols = set(), set()
    while True:
        best = None
        for i in range(m):
            if i in used_rows:
                continue
            for j in range(n):
                if j in used_cols or D[i][j] % mod == 0:
                    continue
                v = val(D[i][j])
                if best is None or (v, i, j) < best:
                    best = (v, i, j)
        if best is None:
            break
        vp, pi, pj = best
        used_rows.add(pi)
        used_cols.add(pj)
        pivots.append((pi, pj))
        upart = pow(D[pi][pj] // (p ** vp), -1, mod)
        for i in range(m):
            if i in used_rows or D[i][pj] % mod == 0:
                continue
            # exact because the pivot has minimal valuation among the rest
            factor = ((D[i][pj] // (p ** vp)) * upart) % mod
            for j in range(n):
                if D[pi][j]:
                    D[i][j] = (D[i][j] - factor * D[pi][j]) % mod
            for j in range(rhs_cols):
                if R[pi][j]:
                    R[i][j] = (R[i][j] - factor * R[pi][j]) % mod
    # rows that never held a pivot are entirely zero now
    for i in range(m):
        if i in used_rows:
            continue
        for j in range(rhs_cols):
            if R[i][j] % mod != 0:
                return None
    X = [[0] * rhs_cols for _ in range(n)]
    # pivot row k has zeros in earlier pivot columns; substitute in reverse
    for pi, pj in reversed(pivots):
        vp = val(D[pi][pj])
        upart = pow(D[pi][pj] // (p ** vp), -1, mod)
        for j in range(rhs_cols):
            acc = R[pi][j]
            for cj in range(n):
                if cj != pj and D[pi][cj] % mod != 0:
                    acc = (acc - D[pi][cj] * X[cj][j]) % mod
            if val(acc) < vp:
                return None
            X[pj][j] = ((acc // (p ** vp)) * upart) % mod
    return X
