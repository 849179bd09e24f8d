"""Six-parameter Killing tensor space on the Euclidean plane.

A tensor is the parameter vector (b1..b6); its component matrix at a point
x = (x1, x2) is

    K11 = b1 + 2*b4*x2 + b6*x2^2
    K12 = b3 - b4*x1 - b5*x2 - b6*x1*x2     (entered unhalved)
    K22 = b2 + 2*b5*x1 + b6*x1^2

The proper isometry group acts on points by x~ = R x + p and on parameters
by pushforward: evaluate(act_on_params(g, K), g.x) == R evaluate(K, x) R^T.
This direction is pinned by an exact polynomial identity in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, SingularPointError, TrivialTensorError
from .symtensor import FlatMetric, MultiPoly, SymPolyTensor

TOL_EXACT = 1e-12
TOL_FLOAT = 1e-9


@dataclass(frozen=True)
class Point2:
    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise InputError("point coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    def to_json_dict(self) -> dict:
        return {"x": [self.x1, self.x2]}


@dataclass(frozen=True)
class IsometrySE2:
    """Orientation-preserving isometry: translation (p1, p2), rotation p3."""

    p1: float
    p2: float
    p3: float

    @classmethod
    def identity(cls) -> "IsometrySE2":
        return cls(0.0, 0.0, 0.0)

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.p3), math.sin(self.p3)
        return np.array([[c, -s], [s, c]])

    def compose(self, other: "IsometrySE2") -> "IsometrySE2":
        """self after other: (self @ other).x == self(other(x))."""
        c, s = math.cos(self.p3), math.sin(self.p3)
        return IsometrySE2(
            self.p1 + c * other.p1 - s * other.p2,
            self.p2 + s * other.p1 + c * other.p2,
            self.p3 + other.p3,
        )

    def inverse(self) -> "IsometrySE2":
        c, s = math.cos(self.p3), math.sin(self.p3)
        return IsometrySE2(-(c * self.p1 + s * self.p2),
                           -(-s * self.p1 + c * self.p2),
                           -self.p3)

    def to_json_dict(self) -> dict:
        return {"p": [self.p1, self.p2, self.p3]}


@dataclass(frozen=True)
class KillingTensorE2:
    """Parameter vector (b1..b6); optional exact-rational mirror for golden tests."""

    beta: tuple[float, float, float, float, float, float]
    beta_exact: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if len(self.beta) != 6:
            raise InputError("beta must have six entries")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @classmethod
    def from_rational(cls, values) -> "KillingTensorE2":
        exact = tuple(Fraction(v) for v in values)
        return cls(tuple(float(v) for v in exact), beta_exact=exact)

    def norm(self) -> float:
        return math.sqrt(sum(b * b for b in self.beta))

    def exact_tensor(self) -> SymPolyTensor:
        """Exact-rational mirror as a symmetric polynomial tensor on E^2.

        Uses beta_exact when present, otherwise the exact binary value of
        each float coefficient.
        """
        b1, b2, b3, b4, b5, b6 = self.beta_exact or tuple(Fraction(b) for b in self.beta)
        x1 = MultiPoly.variable(2, 1)
        x2 = MultiPoly.variable(2, 2)
        one = MultiPoly.constant(2, 1)
        return SymPolyTensor(2, 2, {
            (1, 1): one.scale(b1) + x2.scale(2 * b4) + (x2 * x2).scale(b6),
            (1, 2): one.scale(b3) + x1.scale(-b4) + x2.scale(-b5) + (x1 * x2).scale(-b6),
            (2, 2): one.scale(b2) + x1.scale(2 * b5) + (x1 * x1).scale(b6),
        })

    def to_json_dict(self) -> dict:
        return {"beta": list(self.beta)}


METRIC_E2 = FlatMetric.euclidean(2)


@dataclass(frozen=True)
class EigenFrame:
    """Ordered pointwise eigenstructure; lambda1 <= lambda2, e1 perp e2."""

    lambda1: float
    lambda2: float
    e1: np.ndarray
    e2: np.ndarray

    @property
    def gap(self) -> float:
        return self.lambda2 - self.lambda1


def evaluate(k: KillingTensorE2, x: Point2) -> np.ndarray:
    b1, b2, b3, b4, b5, b6 = k.beta
    k11 = b1 + 2 * b4 * x.x2 + b6 * x.x2 ** 2
    k12 = b3 - b4 * x.x1 - b5 * x.x2 - b6 * x.x1 * x.x2
    k22 = b2 + 2 * b5 * x.x1 + b6 * x.x1 ** 2
    return np.array([[k11, k12], [k12, k22]])


def act_on_point(g: IsometrySE2, x: Point2) -> Point2:
    c, s = math.cos(g.p3), math.sin(g.p3)
    return Point2(x.x1 * c - x.x2 * s + g.p1,
                  x.x1 * s + x.x2 * c + g.p2)


def act_on_params(g: IsometrySE2, k: KillingTensorE2) -> KillingTensorE2:
    """Parameter transformation matching the pushforward of the group action.

    Note the +2*b3*c*s term in the second row: the rotation block is the
    conjugation K -> R K R^T, which preserves b1 + b2 under pure rotations.
    """
    b1, b2, b3, b4, b5, b6 = k.beta
    p1, p2 = g.p1, g.p2
    c, s = math.cos(g.p3), math.sin(g.p3)
    t1 = b1 * c * c - 2 * b3 * c * s + b2 * s * s - 2 * p2 * b4 * c - 2 * p2 * b5 * s + b6 * p2 * p2
    t2 = b1 * s * s + 2 * b3 * c * s + b2 * c * c - 2 * p1 * b5 * c + 2 * p1 * b4 * s + b6 * p1 * p1
    t3 = ((b1 - b2) * s * c + b3 * (c * c - s * s)
          + (p1 * b4 + p2 * b5) * c + (p1 * b5 - p2 * b4) * s - b6 * p1 * p2)
    t4 = b4 * c + b5 * s - b6 * p2
    t5 = b5 * c - b4 * s - b6 * p1
    return KillingTensorE2((t1, t2, t3, t4, t5, b6))


def is_trivial(k: KillingTensorE2, tol: float = TOL_EXACT) -> bool:
    """True when K is a multiple of the metric (no web)."""
    b1, b2, b3, b4, b5, b6 = k.beta
    scale = tol * (1.0 + k.norm())
    return (abs(b1 - b2) <= scale and abs(b3) <= scale and abs(b4) <= scale
            and abs(b5) <= scale and abs(b6) <= scale)


def eigenframe(k: KillingTensorE2, x: Point2, tol: float = TOL_FLOAT) -> EigenFrame:
    """Closed-form eigendecomposition of the 2x2 component matrix at x.

    Eigenvector signs are fixed (first component >= 0, ties broken on the
    second) so repeated calls are deterministic; continuity along paths is
    the caller's concern.
    """
    mat = evaluate(k, x)
    a, b, c = mat[0, 0], mat[0, 1], mat[1, 1]
    mean = 0.5 * (a + c)
    half_diff = 0.5 * (a - c)
    radius = math.hypot(half_diff, b)
    scale = float(np.linalg.norm(mat)) + 1.0
    if 2.0 * radius <= tol * scale:
        raise SingularPointError(
            f"eigenvalues coincide at ({x.x1}, {x.x2}) (gap {2 * radius:.3e})")
    lam1, lam2 = mean - radius, mean + radius
    # Eigenvector of lam2, built from the numerically larger residual column.
    v_a = np.array([b, lam2 - a])
    v_b = np.array([lam2 - c, b])
    v2 = v_a if np.dot(v_a, v_a) >= np.dot(v_b, v_b) else v_b
    v2 = v2 / np.linalg.norm(v2)
    v1 = np.array([-v2[1], v2[0]])
    return EigenFrame(lam1, lam2, _fix_sign(v1), _fix_sign(v2))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        return -v
    return v


def _eig_difference_polys(k: KillingTensorE2):
    """Coefficients of K11-K22 and K12 in the two coordinates.

    K11-K22 = (b1-b2) + 2*b4*x2 - 2*b5*x1 + b6*(x2^2 - x1^2)
    K12     = b3 - b4*x1 - b5*x2 - b6*x1*x2
    """
    b1, b2, b3, b4, b5, b6 = k.beta

    def p_val(x1, x2):
        return (b1 - b2) + 2 * b4 * x2 - 2 * b5 * x1 + b6 * (x2 * x2 - x1 * x1)

    def q_val(x1, x2):
        return b3 - b4 * x1 - b5 * x2 - b6 * x1 * x2

    return p_val, q_val


def _real_roots(coeffs: list[float], scale: float) -> list[float]:
    """Real roots of a univariate polynomial given by descending coefficients.

    Near-zero leading coefficients are stripped relative to the coefficient
    scale; close-to-real companion-matrix roots are kept.
    """
    tol = 1e-12 * (scale + max((abs(c) for c in coeffs), default=0.0))
    cut = list(coeffs)
    while cut and abs(cut[0]) <= tol:
        cut.pop(0)
    if len(cut) <= 1:
        return []
    roots = np.roots(cut)
    out = []
    for r in roots:
        bound = 1e-7 * (1.0 + abs(r))
        if abs(r.imag) <= bound:
            out.append(float(r.real))
    return out


def singular_points(k: KillingTensorE2, tol: float = TOL_FLOAT) -> list[Point2]:
    """All real solutions of {K11 - K22 = 0, K12 = 0}.

    Both coordinates are eliminated by resultants, giving degree <= 4
    univariate polynomials whose companion-matrix roots seed a Newton
    refinement; candidates with residuals above 1e-9 * (1 + |beta|) are
    rejected.  An empty list is a valid result (cartesian webs).
    """
    if is_trivial(k):
        raise TrivialTensorError("singular points are undefined for multiples of the metric")
    b1, b2, b3, b4, b5, b6 = k.beta
    norm = k.norm()
    p_val, q_val = _eig_difference_polys(k)

    # Polar-family tensors have a single doubly-degenerate root at the web
    # center, where Newton cannot sharpen a seed; the center is exact there.
    # Thresholds are relative with the invariants' homogeneity degrees so the
    # branch decision does not change under rescaling the tensor.
    d3 = (b6 * (b1 - b2) - b4 * b4 + b5 * b5) ** 2 + 4.0 * (b6 * b3 + b4 * b5) ** 2
    if abs(b6) > TOL_EXACT * norm and d3 <= TOL_EXACT * norm ** 4:
        return [Point2(-b5 / b6, -b4 / b6)]

    candidates: list[tuple[float, float]] = []

    # Eliminate x2: P = b6*x2^2 + 2*b4*x2 + p0(x1), Q = q1(x1)*x2 + q0(x1).
    def elim(second: bool):
        # Role swap implements the x1 elimination with the same algebra.
        if not second:
            pa, pb = b6, 2 * b4
            p0 = [-b6, -2 * b5, b1 - b2]          # in x1, descending
            q1 = [-b6, -b5]                        # -b5 - b6*x1
            q0 = [-b4, b3]                         # b3 - b4*x1
        else:
            pa, pb = -b6, -2 * b5
            p0 = [b6, 2 * b4, b1 - b2]             # in x2, descending
            q1 = [-b6, -b4]
            q0 = [-b5, b3]

        def poly_mul(u, v):
            out = [0.0] * (len(u) + len(v) - 1)
            for i, ui in enumerate(u):
                for j, vj in enumerate(v):
                    out[i + j] += ui * vj
            return out

        def poly_add(u, v):
            n = max(len(u), len(v))
            u = [0.0] * (n - len(u)) + list(u)
            v = [0.0] * (n - len(v)) + list(v)
            return [a + b for a, b in zip(u, v)]

        res = poly_add(
            poly_add(poly_mul([pa], poly_mul(q0, q0)),
                     poly_mul([-pb], poly_mul(q1, q0))),
            poly_mul(p0, poly_mul(q1, q1)))
        for t in _real_roots(res, norm):
            q1_t = q1[0] * t + q1[1]
            q0_t = q0[0] * t + q0[1]
            if abs(q1_t) > 1e-9 * (1.0 + norm) * (1.0 + abs(t)):
                other = -q0_t / q1_t
                candidates.append((t, other) if not second else (other, t))
            else:
                # Q degenerates on this line; solve the quadratic P branch.
                quad = [pa, pb, p0[0] * t * t + p0[1] * t + p0[2]]
                for u in _real_roots(quad, norm):
                    candidates.append((t, u) if not second else (u, t))

    elim(False)
    elim(True)

    # Constant-Q corner: b5 = b6 = 0 handled by the x1-elimination only if
    # b4 != 0; when Q is identically constant the system is linear.
    if abs(b5) <= 1e-15 * (1 + norm) and abs(b6) <= 1e-15 * (1 + norm):
        if abs(b4) > 1e-12 * (1 + norm):
            candidates.append((b3 / b4, (b2 - b1) / (2 * b4)))

    refined: list[Point2] = []
    resid_tol = 1e-9 * (1.0 + norm)
    for x1, x2 in candidates:
        x1, x2 = _newton_refine(k, x1, x2)
        local = resid_tol * (1.0 + x1 * x1 + x2 * x2)
        if abs(p_val(x1, x2)) > local or abs(q_val(x1, x2)) > local:
            continue
        point = Point2(x1, x2)
        if not any(math.hypot(p.x1 - x1, p.x2 - x2) <= 1e-7 * (1 + math.hypot(x1, x2))
                   for p in refined):
            refined.append(point)
    refined.sort(key=lambda p: (p.x1, p.x2))
    return refined


def _newton_refine(k: KillingTensorE2, x1: float, x2: float, iterations: int = 6):
    b1, b2, b3, b4, b5, b6 = k.beta
    for _ in range(iterations):
        p = (b1 - b2) + 2 * b4 * x2 - 2 * b5 * x1 + b6 * (x2 * x2 - x1 * x1)
        q = b3 - b4 * x1 - b5 * x2 - b6 * x1 * x2
        j11 = -2 * b5 - 2 * b6 * x1
        j12 = 2 * b4 + 2 * b6 * x2
        j21 = -b4 - b6 * x2
        j22 = -b5 - b6 * x1
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-14 * (1 + k.norm()) ** 2 * (1 + x1 * x1 + x2 * x2):
            break
        dx1 = (p * j22 - q * j12) / det
        dx2 = (q * j11 - p * j21) / det
        x1, x2 = x1 - dx1, x2 - dx2
    return x1, x2
