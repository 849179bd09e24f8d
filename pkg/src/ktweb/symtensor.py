"""Exact symmetric contravariant tensor algebra on flat pseudo-Euclidean space.

Components are multivariate polynomials with rational coefficients, so
dimension counts coming out of the nullspace solver are exact integers and
never depend on a floating-point tolerance.

Conventions pinned here (and printed by the CLI ``--version``):

* Bracket normalization: for symmetric contravariant A (valence p) and
  B (valence q),

      [A,B]^(i1..i_{p+q-1}) = p * A^(k i1..i_{p-1}) d_k B^(i_p..)
                            - q * B^(k i1..i_{q-1}) d_k A^(i_q..)

  with round-bracket symmetrization over all free indices.  Any nonzero
  rescaling of this bracket has the same kernel, which is all downstream
  code depends on.
* A tensor is stored only under non-decreasing index tuples; lookups with
  permuted indices resolve to the canonical entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from math import comb

from .errors import InputError

RationalLike = Fraction | int

# Size guard for solve_gkt; larger problems are refused unless the caller
# opts in, since cost grows combinatorially in (m, n, p).
MAX_DIMENSION = 4
MAX_VALENCE = 4
MAX_ORDER = 3


def _as_fraction(value: RationalLike) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise InputError(f"expected a rational number, got {type(value).__name__}")


class MultiPoly:
    """Polynomial in m variables with Fraction coefficients.

    ``terms`` maps an exponent tuple of length m to a nonzero coefficient.
    Instances are treated as immutable.
    """

    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms: dict[tuple[int, ...], Fraction] | None = None):
        if m < 1:
            raise InputError("polynomial dimension must be positive")
        self.m = m
        clean: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in (terms or {}).items():
            coeff = _as_fraction(coeff)
            if coeff == 0:
                continue
            if len(expo) != m or any(e < 0 for e in expo):
                raise InputError(f"bad exponent tuple {expo} for dimension {m}")
            clean[tuple(expo)] = coeff
        self.terms = clean

    @classmethod
    def zero(cls, m: int) -> "MultiPoly":
        return cls(m)

    @classmethod
    def constant(cls, m: int, value: RationalLike) -> "MultiPoly":
        return cls(m, {(0,) * m: _as_fraction(value)})

    @classmethod
    def variable(cls, m: int, index: int) -> "MultiPoly":
        """x_index, with index in 1..m."""
        if not 1 <= index <= m:
            raise InputError(f"variable index {index} out of range 1..{m}")
        expo = tuple(1 if i == index - 1 else 0 for i in range(m))
        return cls(m, {expo: Fraction(1)})

    @classmethod
    def monomial(cls, m: int, expo: tuple[int, ...], coeff: RationalLike = 1) -> "MultiPoly":
        return cls(m, {tuple(expo): _as_fraction(coeff)})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        self._check(other)
        terms = dict(self.terms)
        for expo, coeff in other.terms.items():
            new = terms.get(expo, Fraction(0)) + coeff
            if new == 0:
                terms.pop(expo, None)
            else:
                terms[expo] = new
        return MultiPoly(self.m, terms)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.m, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        self._check(other)
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                new = terms.get(expo, Fraction(0)) + c1 * c2
                if new == 0:
                    terms.pop(expo, None)
                else:
                    terms[expo] = new
        return MultiPoly(self.m, terms)

    def scale(self, factor: RationalLike) -> "MultiPoly":
        factor = _as_fraction(factor)
        if factor == 0:
            return MultiPoly.zero(self.m)
        return MultiPoly(self.m, {e: c * factor for e, c in self.terms.items()})

    def diff(self, index: int) -> "MultiPoly":
        """Partial derivative with respect to x_index (1-based)."""
        i = index - 1
        terms: dict[tuple[int, ...], Fraction] = {}
        for expo, coeff in self.terms.items():
            if expo[i] == 0:
                continue
            new_expo = list(expo)
            new_expo[i] -= 1
            terms[tuple(new_expo)] = coeff * expo[i]
        return MultiPoly(self.m, terms)

    def evaluate(self, point) -> Fraction | float:
        """Evaluate at a point (sequence of length m, rational or float)."""
        total = None
        for expo, coeff in self.terms.items():
            value = 1
            for x, e in zip(point, expo):
                if e:
                    value = value * x**e
            term = coeff * value
            total = term if total is None else total + term
        if total is None:
            return Fraction(0) if not any(isinstance(x, float) for x in point) else 0.0
        return total

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda item: item[0])

    def to_text(self) -> str:
        """Render in the potential-expression grammar (explicit ``*``, ``^``)."""
        if not self.terms:
            return "0"
        pieces = []
        for expo, coeff in self.sorted_terms():
            factors = []
            for i, e in enumerate(expo):
                if e == 1:
                    factors.append(f"x{i + 1}")
                elif e > 1:
                    factors.append(f"x{i + 1}^{e}")
            mag = abs(coeff)
            if not factors or mag != 1:
                coeff_txt = str(mag) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
                factors.insert(0, coeff_txt)
            body = "*".join(factors)
            if not pieces:
                pieces.append(body if coeff > 0 else f"-{body}")
            else:
                pieces.append(f"+ {body}" if coeff > 0 else f"- {body}")
        return " ".join(pieces)

    def _check(self, other: "MultiPoly") -> None:
        if self.m != other.m:
            raise InputError(f"dimension mismatch: {self.m} vs {other.m}")

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiPoly) and self.m == other.m and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"MultiPoly({self.m}, {self.to_text()!r})"


@dataclass(frozen=True)
class FlatMetric:
    """Flat diagonal metric with entries +-1; g^ij = diag(signature)."""

    m: int
    signature: tuple[int, ...]

    def __post_init__(self):
        if self.m < 1:
            raise InputError("metric dimension must be positive")
        if len(self.signature) != self.m or any(s not in (1, -1) for s in self.signature):
            raise InputError(f"signature must be {self.m} entries of +1/-1")

    @classmethod
    def euclidean(cls, m: int) -> "FlatMetric":
        return cls(m, (1,) * m)

    def tensor(self) -> "SymPolyTensor":
        comps = {
            (i, i): MultiPoly.constant(self.m, s)
            for i, s in enumerate(self.signature, start=1)
        }
        return SymPolyTensor(self.m, 2, comps)


class SymPolyTensor:
    """Symmetric contravariant tensor with MultiPoly components.

    Components are keyed by non-decreasing 1-based index tuples of length
    ``valence``; a valence-0 tensor is a single polynomial keyed by ().
    """

    __slots__ = ("m", "valence", "components")

    def __init__(self, m: int, valence: int,
                 components: dict[tuple[int, ...], MultiPoly] | None = None):
        if valence < 0:
            raise InputError("valence must be non-negative")
        self.m = m
        self.valence = valence
        comps: dict[tuple[int, ...], MultiPoly] = {}
        for idx, poly in (components or {}).items():
            key = self._canonical(idx)
            if poly.m != m:
                raise InputError("component polynomial dimension mismatch")
            if not poly.is_zero():
                comps[key] = poly
        self.components = comps

    def _canonical(self, idx) -> tuple[int, ...]:
        key = tuple(sorted(idx))
        if len(key) != self.valence or any(not 1 <= i <= self.m for i in key):
            raise InputError(f"bad index tuple {idx} for valence {self.valence}, m={self.m}")
        return key

    @classmethod
    def zero(cls, m: int, valence: int) -> "SymPolyTensor":
        return cls(m, valence)

    def component(self, idx) -> MultiPoly:
        """Component for any index order; returns the canonical entry."""
        return self.components.get(self._canonical(idx), MultiPoly.zero(self.m))

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.components.values())

    def __add__(self, other: "SymPolyTensor") -> "SymPolyTensor":
        if (self.m, self.valence) != (other.m, other.valence):
            raise InputError("tensor shape mismatch in addition")
        comps = dict(self.components)
        for idx, poly in other.components.items():
            comps[idx] = comps.get(idx, MultiPoly.zero(self.m)) + poly
        return SymPolyTensor(self.m, self.valence, comps)

    def __sub__(self, other: "SymPolyTensor") -> "SymPolyTensor":
        return self + other.scale(-1)

    def scale(self, factor: RationalLike) -> "SymPolyTensor":
        return SymPolyTensor(
            self.m, self.valence,
            {idx: poly.scale(factor) for idx, poly in self.components.items()},
        )

    def index_tuples(self):
        return combinations_with_replacement(range(1, self.m + 1), self.valence)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SymPolyTensor)
                and (self.m, self.valence) == (other.m, other.valence)
                and self.components == other.components)

    def __repr__(self) -> str:
        body = {",".join(map(str, k)): p.to_text() for k, p in sorted(self.components.items())}
        return f"SymPolyTensor(m={self.m}, p={self.valence}, {body})"

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "p": self.valence,
            "components": {
                ",".join(map(str, idx)): poly.to_text()
                for idx, poly in sorted(self.components.items())
            },
        }


def schouten_bracket(a: SymPolyTensor, b: SymPolyTensor) -> SymPolyTensor:
    """Symmetric Schouten bracket in flat coordinates.

    Result valence is p+q-1.  The symmetrization over free indices is done
    by averaging over position splits rather than full permutations, which
    is equivalent and much cheaper.
    """
    if a.m != b.m:
        raise InputError(f"dimension mismatch: {a.m} vs {b.m}")
    m = a.m
    p, q = a.valence, b.valence
    if p + q < 1:
        raise InputError("bracket needs p + q >= 1")
    r = p + q - 1
    result: dict[tuple[int, ...], MultiPoly] = {}
    for idx in combinations_with_replacement(range(1, m + 1), r):
        acc = MultiPoly.zero(m)
        if p >= 1:
            weight = Fraction(p, comb(r, p - 1))
            for positions in combinations(range(r), p - 1):
                chosen = set(positions)
                a_part = tuple(idx[i] for i in positions)
                b_part = tuple(idx[i] for i in range(r) if i not in chosen)
                for k in range(1, m + 1):
                    a_comp = a.component((k,) + a_part)
                    if a_comp.is_zero():
                        continue
                    db = b.component(b_part).diff(k)
                    if db.is_zero():
                        continue
                    acc = acc + (a_comp * db).scale(weight)
        if q >= 1:
            weight = Fraction(q, comb(r, q - 1))
            for positions in combinations(range(r), q - 1):
                chosen = set(positions)
                b_part = tuple(idx[i] for i in positions)
                a_part = tuple(idx[i] for i in range(r) if i not in chosen)
                for k in range(1, m + 1):
                    b_comp = b.component((k,) + b_part)
                    if b_comp.is_zero():
                        continue
                    da = a.component(a_part).diff(k)
                    if da.is_zero():
                        continue
                    acc = acc - (b_comp * da).scale(weight)
        if not acc.is_zero():
            result[idx] = acc
    return SymPolyTensor(m, r, result)


def gkt_operator(k: SymPolyTensor, g: FlatMetric, n: int) -> SymPolyTensor:
    """n+1 nested brackets of k against the metric tensor."""
    if k.m != g.m:
        raise InputError(f"dimension mismatch: tensor m={k.m}, metric m={g.m}")
    if n < 0:
        raise InputError("order n must be non-negative")
    gt = g.tensor()
    out = k
    for _ in range(n + 1):
        out = schouten_bracket(out, gt)
    return out


def npe_dimension(m: int, n: int, p: int) -> int:
    """Closed-form dimension of the solution space on constant curvature.

    The product (n+1) * C(p+m-1, m-1) * C(p+n+m, m-1) is always divisible
    by m; this is asserted rather than assumed.
    """
    if m < 1 or n < 0 or p < 0:
        raise InputError("need m >= 1, n >= 0, p >= 0")
    product = (n + 1) * comb(p + m - 1, m - 1) * comb(p + n + m, m - 1)
    if product % m != 0:
        raise AssertionError(f"dimension formula not integral at (m={m}, n={n}, p={p})")
    return product // m


# ---------------------------------------------------------------------------
# exact sparse linear algebra
# ---------------------------------------------------------------------------

def rational_nullspace(rows: list[dict[int, Fraction]], ncols: int) -> list[dict[int, Fraction]]:
    """Nullspace basis of a sparse rational matrix.

    Gaussian elimination with partial pivoting: within each column the pivot
    row is the candidate whose entry maximizes |numerator * denominator|.
    Returns one sparse vector per free column, normalized so the free
    coordinate is 1.  Processing is strictly sequential so results are
    reproducible bit for bit.
    """
    active: dict[int, dict[int, Fraction]] = {i: dict(r) for i, r in enumerate(rows) if r}
    col_index: dict[int, set[int]] = {}
    for rid, row in active.items():
        for c in row:
            col_index.setdefault(c, set()).add(rid)

    def detach(rid: int, row: dict[int, Fraction]) -> None:
        for c in row:
            bucket = col_index.get(c)
            if bucket is not None:
                bucket.discard(rid)

    def attach(rid: int, row: dict[int, Fraction]) -> None:
        for c in row:
            col_index.setdefault(c, set()).add(rid)

    pivots: dict[int, dict[int, Fraction]] = {}
    for col in range(ncols):
        candidates = [rid for rid in col_index.get(col, ()) if rid in active]
        if not candidates:
            continue
        pivot_id = max(
            candidates,
            key=lambda rid: (abs(active[rid][col].numerator * active[rid][col].denominator), -rid),
        )
        pivot_row = active.pop(pivot_id)
        detach(pivot_id, pivot_row)
        inv = 1 / pivot_row[col]
        pivot_row = {c: v * inv for c, v in pivot_row.items()}
        for rid in sorted(col_index.get(col, set())):
            if rid not in active:
                continue
            row = active.pop(rid)
            detach(rid, row)
            factor = row[col]
            for c, v in pivot_row.items():
                new = row.get(c, Fraction(0)) - factor * v
                if new == 0:
                    row.pop(c, None)
                else:
                    row[c] = new
            if row:
                active[rid] = row
                attach(rid, row)
        pivots[col] = pivot_row

    # Back-substitute to reduced echelon form so free-column reads are direct.
    for col in sorted(pivots, reverse=True):
        prow = pivots[col]
        for other_col, orow in pivots.items():
            if other_col >= col or col not in orow:
                continue
            factor = orow.pop(col)
            for c, v in prow.items():
                if c == col:
                    continue
                new = orow.get(c, Fraction(0)) - factor * v
                if new == 0:
                    orow.pop(c, None)
                else:
                    orow[c] = new

    basis = []
    pivot_cols = set(pivots)
    for free in range(ncols):
        if free in pivot_cols:
            continue
        vec: dict[int, Fraction] = {free: Fraction(1)}
        for col, prow in pivots.items():
            coeff = prow.get(free)
            if coeff:
                vec[col] = -coeff
        basis.append(vec)
    return basis


# ---------------------------------------------------------------------------
# generalized Killing tensor solver
# ---------------------------------------------------------------------------

@dataclass
class GktSolution:
    """Nullspace of the bracket operator over a polynomial ansatz."""

    m: int
    n: int
    p: int
    metric: FlatMetric
    degree_bound: int
    basis: list[SymPolyTensor] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.basis)


def _monomials_up_to(m: int, degree: int):
    out = []
    for total in range(degree + 1):
        out.extend(_monomials_of_degree(m, total))
    return sorted(out)


def _monomials_of_degree(m: int, total: int):
    if m == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in _monomials_of_degree(m - 1, total - first):
            out.append((first,) + rest)
    return out


def solve_gkt(m: int, n: int, p: int,
              signature: tuple[int, ...] | None = None,
              degree_bound: int | None = None,
              allow_large: bool = False) -> GktSolution:
    """Solve the order-n bracket equation for valence-p tensors exactly.

    A monomial ansatz of total degree <= degree_bound (default p + n) over
    all independent components is reduced against the operator; the exact
    rational nullspace gives the solution basis.  Basis vectors are
    normalized so their first nonzero coefficient in lexicographic
    (component, monomial) order is 1.
    """
    if not allow_large and (m > MAX_DIMENSION or p > MAX_VALENCE or n > MAX_ORDER):
        raise InputError(
            f"(m={m}, n={n}, p={p}) exceeds the built-in size guard "
            f"(m <= {MAX_DIMENSION}, p <= {MAX_VALENCE}, n <= {MAX_ORDER}); "
            "pass allow_large=True to override")
    metric = FlatMetric(m, tuple(signature) if signature else (1,) * m)
    if degree_bound is None:
        degree_bound = p + n

    comp_tuples = list(combinations_with_replacement(range(1, m + 1), p))
    monos = _monomials_up_to(m, degree_bound)
    columns = [(ci, mi) for ci in range(len(comp_tuples)) for mi in range(len(monos))]
    col_of = {key: j for j, key in enumerate(columns)}

    rows: dict[tuple[tuple[int, ...], tuple[int, ...]], dict[int, Fraction]] = {}
    for (ci, mi) in columns:
        unit = SymPolyTensor(m, p, {comp_tuples[ci]: MultiPoly.monomial(m, monos[mi])})
        image = gkt_operator(unit, metric, n)
        j = col_of[(ci, mi)]
        for idx, poly in image.components.items():
            for expo, coeff in poly.terms.items():
                rows.setdefault((idx, expo), {})[j] = coeff

    row_list = [rows[key] for key in sorted(rows)]
    null_vectors = rational_nullspace(row_list, len(columns))

    basis = []
    for vec in null_vectors:
        # Normalize: first nonzero coefficient in column order becomes 1.
        lead = min(vec)
        inv = 1 / vec[lead]
        comps: dict[tuple[int, ...], MultiPoly] = {}
        for j, coeff in vec.items():
            ci, mi = columns[j]
            idx = comp_tuples[ci]
            poly = comps.get(idx, MultiPoly.zero(m)) + MultiPoly.monomial(m, monos[mi], coeff * inv)
            comps[idx] = poly
        basis.append(SymPolyTensor(m, p, comps))
    basis.sort(key=lambda t: sorted(
        (idx, expo) for idx, poly in t.components.items() for expo in poly.terms))
    return GktSolution(m=m, n=n, p=p, metric=metric, degree_bound=degree_bound, basis=basis)
