"""
Exact linear algebra over Q and GF(p).

Matrices are plain numpy object arrays holding ``Fraction`` (over Q) or
reduced ``int`` (over GF(p)).  Every routine takes the field explicitly, so
the same arrays can be handed around without wrapper classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from gmpy2 import mpq

from .errors import InvariantViolation, StructuralError

__all__ = [
    "Field",
    "Rationals",
    "PrimeField",
    "QQ",
    "GF",
    "parse_ring",
    "rank",
    "inverse",
    "solve_affine",
    "solve_sparse",
    "GradedModule",
    "hom_mask",
    "ChainComplex",
    "ChainMap",
    "homology_dims",
    "mapping_cone",
    "is_quasi_iso",
]


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


class Field:
    """Common matrix helpers; subclasses supply the scalar arithmetic."""

    zero: object
    one: object
    name: str

    def zeros(self, rows: int, cols: int) -> np.ndarray:
        a = np.empty((rows, cols), dtype=object)
        a.fill(self.zero)
        return a

    def zero_vector(self, n: int) -> np.ndarray:
        a = np.empty(n, dtype=object)
        a.fill(self.zero)
        return a

    def eye(self, n: int) -> np.ndarray:
        a = self.zeros(n, n)
        for i in range(n):
            a[i, i] = self.one
        return a

    def array(self, rows) -> np.ndarray:
        a = np.array(rows, dtype=object)
        out = np.empty(a.shape, dtype=object)
        for idx in np.ndindex(a.shape):
            out[idx] = self.coerce(a[idx])
        return out

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.shape[-1] != b.shape[0]:
            raise StructuralError(f"cannot multiply {a.shape} by {b.shape}")
        if a.shape[-1] == 0:
            shape = a.shape[:-1] + b.shape[1:]
            out = np.empty(shape, dtype=object)
            out.fill(self.zero)
            return out
        return self.reduce(a.dot(b))

    def madd(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.reduce(a + b)

    def msub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.reduce(a - b)

    def mneg(self, a: np.ndarray) -> np.ndarray:
        return self.reduce(-a)

    def mscale(self, c, a: np.ndarray) -> np.ndarray:
        return self.reduce(a * self.coerce(c))

    @staticmethod
    def is_zero(a: np.ndarray) -> bool:
        return not bool(a.any())


@dataclass(frozen=True)
class Rationals(Field):
    """Q with gmpy2 ``mpq`` scalars (exact, several times faster than ``Fraction``)."""

    zero = mpq(0)
    one = mpq(1)
    name = "QQ"

    def coerce(self, x):
        if isinstance(x, str):
            return self.from_str(x)
        return mpq(x)

    def reduce(self, a):
        return a

    def add(self, x, y):
        return x + y

    def sub(self, x, y):
        return x - y

    def mul(self, x, y):
        return x * y

    def neg(self, x):
        return -x

    def inv(self, x):
        if x == 0:
            raise ZeroDivisionError("inverse of zero")
        return 1 / mpq(x)

    def random(self, rng: np.random.Generator, bound: int = 2):
        return mpq(int(rng.integers(-bound, bound + 1)))

    def random_nonzero(self, rng: np.random.Generator, bound: int = 2):
        v = int(rng.integers(1, bound + 1))
        return mpq(v if rng.integers(2) else -v)

    def to_str(self, x) -> str:
        x = mpq(x)
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"

    def from_str(self, s):
        if isinstance(s, int) and not isinstance(s, bool):
            return mpq(s)
        if not isinstance(s, str):
            raise StructuralError(f"rational scalar must be a string, got {s!r}")
        try:
            return mpq(Fraction(s.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise StructuralError(f"bad rational scalar {s!r}") from exc


@dataclass(frozen=True)
class PrimeField(Field):
    p: int

    def __post_init__(self):
        if not _is_prime(self.p):
            raise StructuralError(f"{self.p} is not prime")

    zero = 0
    one = 1

    @property
    def name(self) -> str:
        return f"GF({self.p})"

    def coerce(self, x) -> int:
        if isinstance(x, Fraction):
            return (x.numerator * pow(x.denominator, -1, self.p)) % self.p
        return int(x) % self.p

    def reduce(self, a):
        return a % self.p

    def add(self, x, y):
        return (x + y) % self.p

    def sub(self, x, y):
        return (x - y) % self.p

    def mul(self, x, y):
        return (x * y) % self.p

    def neg(self, x):
        return (-x) % self.p

    def inv(self, x):
        if x % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(int(x), -1, self.p)

    def random(self, rng: np.random.Generator, bound: int = 2) -> int:
        return int(rng.integers(0, self.p))

    def random_nonzero(self, rng: np.random.Generator, bound: int = 2) -> int:
        return int(rng.integers(1, self.p))

    def to_str(self, x) -> str:
        return str(int(x) % self.p)

    def from_str(self, s) -> int:
        try:
            v = int(s)
        except (TypeError, ValueError) as exc:
            raise StructuralError(f"bad GF({self.p}) scalar {s!r}") from exc
        if not 0 <= v < self.p:
            raise StructuralError(f"GF({self.p}) scalar {v} not in 0..{self.p - 1}")
        return v


QQ = Rationals()


def GF(p: int) -> PrimeField:
    return PrimeField(p)


def parse_ring(text: str) -> Field:
    text = text.strip()
    if text in ("QQ", "Q", "Rationals"):
        return QQ
    if text.startswith("GF(") and text.endswith(")"):
        try:
            return PrimeField(int(text[3:-1]))
        except ValueError as exc:
            raise StructuralError(f"bad ring {text!r}") from exc
    raise StructuralError(f"unknown ring {text!r}; expected 'QQ' or 'GF(p)'")


# ---------------------------------------------------------------------------
# elimination


def _reduce_row(field, pivots, row, b):
    # pivot rows have support >= their pivot column, so eliminating in
    # increasing column order terminates
    while True:
        hits = [c for c in row if c in pivots]
        if not hits:
            return row, b
        c = min(hits)
        prow, pb = pivots[c]
        f = row[c]
        for k, v in prow.items():
            nv = field.sub(row.get(k, field.zero), field.mul(f, v))
            if nv == 0:
                row.pop(k, None)
            else:
                row[k] = nv
        b = field.sub(b, field.mul(f, pb))


def _echelon(field, rows: Iterable[Mapping[int, object]], rhs: Optional[Iterable] = None):
    """Row-by-row elimination; pivot is the first nonzero column of each reduced row.

    Returns ``(pivots, consistent)`` where pivots maps column -> (row, rhs).
    """
    pivots: dict[int, tuple[dict, object]] = {}
    rhs = iter(rhs) if rhs is not None else None
    consistent = True
    for row in rows:
        b = next(rhs) if rhs is not None else field.zero
        row = {c: v for c, v in row.items() if v != 0}
        row, b = _reduce_row(field, pivots, row, b)
        if not row:
            if b != 0:
                consistent = False
            continue
        c = min(row)
        s = field.inv(row[c])
        pivots[c] = ({k: field.mul(s, v) for k, v in row.items()}, field.mul(s, b))
    return pivots, consistent


def _dense_rows(a: np.ndarray):
    for i in range(a.shape[0]):
        yield {j: a[i, j] for j in np.flatnonzero(a[i] != 0).tolist()}


def rank(field: Field, a: np.ndarray) -> int:
    if a.ndim != 2:
        raise StructuralError("rank expects a 2-d array")
    if a.size == 0:
        return 0
    pivots, _ = _echelon(field, _dense_rows(a))
    return len(pivots)


def solve_sparse(field: Field, rows: Sequence[Mapping[int, object]], rhs: Sequence, ncols: int):
    """Solve a sparse system given as column->value dicts; ``None`` if infeasible.

    Free variables are set to zero, so the answer is a deterministic function
    of the row order.
    """
    if len(rows) != len(rhs):
        raise StructuralError(f"{len(rows)} rows but {len(rhs)} right-hand sides")
    for row in rows:
        for c in row:
            if not 0 <= c < ncols:
                raise StructuralError(f"column {c} outside 0..{ncols - 1}")
    pivots, consistent = _echelon(field, rows, rhs)
    if not consistent:
        return None
    x = field.zero_vector(ncols)
    for c in sorted(pivots, reverse=True):
        prow, pb = pivots[c]
        val = pb
        for k, v in prow.items():
            if k != c:
                val = field.sub(val, field.mul(v, x[k]))
        x[c] = val
    return x


def solve_affine(field: Field, a: np.ndarray, b) -> Optional[np.ndarray]:
    """Return some x with ``a @ x == b`` or ``None`` when b is not in the image."""
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object).reshape(-1)
    if a.ndim != 2 or a.shape[0] != b.shape[0]:
        raise StructuralError(f"shape mismatch: matrix {a.shape}, vector {b.shape}")
    return solve_sparse(field, list(_dense_rows(a)), list(b), a.shape[1])


def inverse(field: Field, a: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse; raises ``ZeroDivisionError`` when singular."""
    n = a.shape[0]
    if a.shape != (n, n):
        raise StructuralError(f"inverse of non-square {a.shape}")
    m = np.concatenate([a.copy(), field.eye(n)], axis=1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r, c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        if piv != c:
            m[[c, piv]] = m[[piv, c]]
        m[c] = field.mscale(field.inv(m[c, c]), m[c])
        for r in range(n):
            if r != c and m[r, c] != 0:
                m[r] = field.msub(m[r], field.mscale(m[r, c], m[c]))
    return m[:, n:]


# ---------------------------------------------------------------------------
# graded modules and complexes


@dataclass(frozen=True)
class GradedModule:
    """Finitely supported graded free module: degree -> rank.

    Elements are column vectors in the total space, ordered by increasing
    degree.
    """

    dims: tuple = ()

    def __post_init__(self):
        clean = tuple(sorted((int(n), int(r)) for n, r in dict(self.dims).items() if int(r) != 0))
        if any(r < 0 for _, r in clean):
            raise StructuralError(f"negative rank in {self.dims}")
        object.__setattr__(self, "dims", clean)

    @classmethod
    def of(cls, mapping: Mapping[int, int]) -> "GradedModule":
        return cls(tuple(mapping.items()))

    def rank(self, n: int) -> int:
        return dict(self.dims).get(n, 0)

    @cached_property
    def total(self) -> int:
        return sum(r for _, r in self.dims)

    @property
    def degrees(self) -> list[int]:
        return [n for n, _ in self.dims]

    @cached_property
    def degree_of_index(self) -> np.ndarray:
        return np.array([n for n, r in self.dims for _ in range(r)], dtype=np.int64)

    @cached_property
    def _offsets(self) -> dict:
        out, pos = {}, 0
        for n, r in self.dims:
            out[n] = pos
            pos += r
        return out

    def span(self, n: int) -> slice:
        if n not in self._offsets:
            return slice(0, 0)
        start = self._offsets[n]
        return slice(start, start + self.rank(n))

    @property
    def min_degree(self) -> Optional[int]:
        return self.dims[0][0] if self.dims else None

    @property
    def max_degree(self) -> Optional[int]:
        return self.dims[-1][0] if self.dims else None

    def direct_sum(self, other: "GradedModule"):
        """Return ``(sum, idx_self, idx_other)``: positions of each summand in the sum."""
        total = GradedModule.of({n: self.rank(n) + other.rank(n) for n in set(self.degrees) | set(other.degrees)})
        idx_a, idx_b = [], []
        for n in total.degrees:
            s = total.span(n).start
            ra = self.rank(n)
            idx_a.extend(range(s, s + ra))
            idx_b.extend(range(s + ra, s + ra + other.rank(n)))
        return total, np.array(idx_a, dtype=np.int64), np.array(idx_b, dtype=np.int64)

    def to_json(self) -> dict:
        return {str(n): r for n, r in self.dims}


def hom_mask(source: GradedModule, target: GradedModule, q: int) -> np.ndarray:
    """Boolean (target.total, source.total) mask of entries allowed in a degree-q map."""
    return (target.degree_of_index[:, None] - source.degree_of_index[None, :]) == q


@dataclass
class ChainComplex:
    """Cochain complex with ``diffs[n]``: degree n -> degree n+1."""

    field: Field
    module: GradedModule
    diffs: dict

    def __post_init__(self):
        for n, d in self.diffs.items():
            shape = (self.module.rank(n + 1), self.module.rank(n))
            if d.shape != shape:
                raise StructuralError(f"d_{n} has shape {d.shape}, expected {shape}")

    def d(self, n: int) -> np.ndarray:
        got = self.diffs.get(n)
        if got is None:
            return self.field.zeros(self.module.rank(n + 1), self.module.rank(n))
        return got

    def support(self) -> list[int]:
        return self.module.degrees

    @classmethod
    def from_total(cls, field: Field, module: GradedModule, total: np.ndarray) -> "ChainComplex":
        if total.shape != (module.total, module.total):
            raise StructuralError(f"total differential {total.shape} vs rank {module.total}")
        mask = hom_mask(module, module, 1)
        if not Field.is_zero(np.where(mask, 0, total)):
            raise StructuralError("total differential is not homogeneous of degree 1")
        diffs = {n: total[module.span(n + 1), module.span(n)] for n in module.degrees if module.rank(n + 1)}
        return cls(field, module, diffs)

    def check(self) -> list[int]:
        """Degrees n where d_{n+1} d_n != 0."""
        bad = []
        for n in self.module.degrees:
            if self.module.rank(n + 2) and not Field.is_zero(self.field.matmul(self.d(n + 1), self.d(n))):
                bad.append(n)
        return bad


def homology_dims(c: ChainComplex) -> dict:
    bad = c.check()
    if bad:
        raise InvariantViolation(f"d^2 != 0 starting in degrees {bad}")
    out = {}
    for n in c.module.degrees:
        h = c.module.rank(n) - rank(c.field, c.d(n)) - rank(c.field, c.d(n - 1))
        out[n] = h
    return out


@dataclass
class ChainMap:
    source: ChainComplex
    target: ChainComplex
    components: dict

    def f(self, n: int) -> np.ndarray:
        got = self.components.get(n)
        if got is None:
            return self.source.field.zeros(self.target.module.rank(n), self.source.module.rank(n))
        return got

    @classmethod
    def from_total(cls, source: ChainComplex, target: ChainComplex, total: np.ndarray) -> "ChainMap":
        sm, tm = source.module, target.module
        if total.shape != (tm.total, sm.total):
            raise StructuralError(f"chain map {total.shape} vs ({tm.total}, {sm.total})")
        if not Field.is_zero(np.where(hom_mask(sm, tm, 0), 0, total)):
            raise StructuralError("chain map is not homogeneous of degree 0")
        return cls(source, target, {n: total[tm.span(n), sm.span(n)] for n in sm.degrees if tm.rank(n)})

    def defect_degrees(self) -> list[int]:
        fld = self.source.field
        bad = []
        degs = set(self.source.module.degrees) | set(self.target.module.degrees)
        for n in sorted(degs):
            lhs = fld.matmul(self.target.d(n), self.f(n))
            rhs = fld.matmul(self.f(n + 1), self.source.d(n))
            if not Field.is_zero(fld.msub(lhs, rhs)):
                bad.append(n)
        return bad


def mapping_cone(f: ChainMap) -> ChainComplex:
    """Cone^n = C^{n+1} + D^n with d(c, e) = (-d c, f c + d e)."""
    c, d = f.source, f.target
    fld = c.field
    degs = sorted({n - 1 for n in c.module.degrees} | set(d.module.degrees))
    module = GradedModule.of({n: c.module.rank(n + 1) + d.module.rank(n) for n in degs})
    diffs = {}
    for n in degs:
        rc1, rd = c.module.rank(n + 1), d.module.rank(n)
        rc2, rd1 = c.module.rank(n + 2), d.module.rank(n + 1)
        m = fld.zeros(rc2 + rd1, rc1 + rd)
        m[:rc2, :rc1] = fld.mneg(c.d(n + 1))
        m[rc2:, :rc1] = f.f(n + 1)
        m[rc2:, rc1:] = d.d(n)
        if m.shape[0]:
            diffs[n] = m
    return ChainComplex(fld, module, diffs)


def is_quasi_iso(f: ChainMap) -> bool:
    bad = f.defect_degrees()
    if bad:
        raise InvariantViolation(f"not a chain map in degrees {bad}")
    return all(h == 0 for h in homology_dims(mapping_cone(f)).values())
