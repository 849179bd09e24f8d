"""Algebraic invariants, web classification, foci, joint invariants.

The three fundamental invariants of a parameter vector b are

    d1 = b6
    d2 = b6*(b1 + b2) - b4^2 - b5^2
    d3 = (b6*(b1 - b2) - b4^2 + b5^2)^2 + 4*(b6*b3 + b4*b5)^2

Zero tests against d1, d2, d3 use degree-weighted tolerances (degrees 1, 2,
4 in b) so scaled tensors classify consistently.

Focus labeling for a pair of tensors is canonicalized so that d8 = |F1-F3|^2
is the smallest of the four cross-pair squared distances.  That labeling is
preserved when both tensors are moved by the same rigid motion (away from
tie configurations), which is what makes all ten joint quantities invariant;
per-tensor labelings are not stable under rotations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .e2core import (
    TOL_EXACT,
    TOL_FLOAT,
    IsometrySE2,
    KillingTensorE2,
    Point2,
    act_on_params,
    act_on_point,
    eigenframe,
    evaluate,
    is_trivial,
    singular_points,
)
from .errors import (
    CoincidentFociError,
    DegenerateClassError,
    DegenerateOrbitError,
    NumericError,
    SingularPointError,
)


class WebClass(enum.Enum):
    CARTESIAN = "cartesian"
    POLAR = "polar"
    PARABOLIC = "parabolic"
    ELLIPTIC_HYPERBOLIC = "elliptic-hyperbolic"
    TRIVIAL = "trivial"


@dataclass(frozen=True)
class InvariantTriple:
    d1: float
    d2: float
    d3: float

    def to_json_dict(self) -> dict:
        return {"d1": self.d1, "d2": self.d2, "d3": self.d3}


@dataclass(frozen=True)
class FociPair:
    """Both entries satisfy the singular-point residuals; f1 <= f2 lexicographically."""

    f1: Point2
    f2: Point2

    def to_json_dict(self) -> dict:
        return {"f1": [self.f1.x1, self.f1.x2], "f2": [self.f2.x1, self.f2.x2]}


@dataclass(frozen=True)
class JointInvariantVector:
    """d1..d3: invariants of the second tensor, d4..d6: of the first,
    d7..d10: squared distances across the two focus pairs."""

    d1: float
    d2: float
    d3: float
    d4: float
    d5: float
    d6: float
    d7: float
    d8: float
    d9: float
    d10: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.d1, self.d2, self.d3, self.d4, self.d5,
                self.d6, self.d7, self.d8, self.d9, self.d10)

    def to_json_dict(self) -> dict:
        return {f"d{i}": v for i, v in enumerate(self.as_tuple(), start=1)}


@dataclass(frozen=True)
class FrameInvariants:
    delta1: float
    delta2: float

    def to_json_dict(self) -> dict:
        return {"delta1": self.delta1, "delta2": self.delta2}


def fundamental_invariants(k: KillingTensorE2) -> InvariantTriple:
    b1, b2, b3, b4, b5, b6 = k.beta
    d1 = b6
    d2 = b6 * (b1 + b2) - b4 * b4 - b5 * b5
    d3 = (b6 * (b1 - b2) - b4 * b4 + b5 * b5) ** 2 + 4.0 * (b6 * b3 + b4 * b5) ** 2
    return InvariantTriple(d1, d2, d3)


def classify(k: KillingTensorE2, tol: float = TOL_EXACT) -> WebClass:
    """Web class from degree-weighted relative zero tests.

    The invariants are homogeneous of degrees 1, 2, 4 in the parameters, so
    the thresholds scale as |b|^degree; that keeps the answer invariant
    under rescaling the tensor (the zero tensor is caught by is_trivial).
    """
    if is_trivial(k, tol):
        return WebClass.TRIVIAL
    inv = fundamental_invariants(k)
    norm = k.norm()
    d1_zero = abs(inv.d1) <= tol * norm
    d2_zero = abs(inv.d2) <= tol * norm ** 2
    d3_zero = abs(inv.d3) <= tol * norm ** 4
    if d1_zero:
        return WebClass.CARTESIAN if d2_zero else WebClass.PARABOLIC
    return WebClass.POLAR if d3_zero else WebClass.ELLIPTIC_HYPERBOLIC


def k_squared(k: KillingTensorE2) -> float:
    """sqrt(d3) / d1^2: the squared half-distance between the foci."""
    if classify(k) is not WebClass.ELLIPTIC_HYPERBOLIC:
        raise DegenerateClassError("k^2 requires an elliptic-hyperbolic tensor")
    inv = fundamental_invariants(k)
    return math.sqrt(inv.d3) / inv.d1 ** 2


def _web_center(k: KillingTensorE2) -> tuple[float, float]:
    b6 = k.beta[5]
    return (-k.beta[4] / b6, -k.beta[3] / b6)


def foci(k: KillingTensorE2, resid_tol: float = 1e-8) -> FociPair:
    """Foci of the elliptic-hyperbolic web via the closed-form offsets.

    The formula determines the offsets (a, b) only up to sign, and the
    printed branch is wrong for some sign patterns of the parameters, so all
    four sign combinations are screened against the singular-point residual;
    the surviving two points are returned in ascending lexicographic order.
    Falls back to the polynomial-system oracle if screening fails.
    """
    if classify(k) is not WebClass.ELLIPTIC_HYPERBOLIC:
        raise DegenerateClassError("foci require an elliptic-hyperbolic tensor")
    b1, b2, b3, b4, b5, b6 = k.beta
    norm = k.norm()
    inv = fundamental_invariants(k)
    sigma = b4 * b4 - b5 * b5 + b6 * (b2 - b1)
    root = math.sqrt(inv.d3)
    a = math.sqrt(max(0.0, 0.5 * (root - sigma)))
    b = math.sqrt(max(0.0, 0.5 * (root + sigma)))
    cx, cy = _web_center(k)

    def residual(x1: float, x2: float) -> float:
        p = (b1 - b2) + 2 * b4 * x2 - 2 * b5 * x1 + b6 * (x2 * x2 - x1 * x1)
        q = b3 - b4 * x1 - b5 * x2 - b6 * x1 * x2
        return max(abs(p), abs(q)) / (1.0 + norm) / (1.0 + x1 * x1 + x2 * x2)

    seen = set()
    passing = []
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            x1 = cx + sx * a / b6
            x2 = cy + sy * b / b6
            key = (round(x1, 12), round(x2, 12))
            if key in seen:
                continue
            seen.add(key)
            if residual(x1, x2) <= resid_tol:
                passing.append((x1, x2))
    if len(passing) != 2:
        oracle = singular_points(k)
        if len(oracle) != 2:
            raise NumericError(
                f"focus branch resolution failed: {len(passing)} formula candidates, "
                f"{len(oracle)} oracle points")
        passing = [(p.x1, p.x2) for p in oracle]
    passing.sort()
    return FociPair(Point2(*passing[0]), Point2(*passing[1]))


def _require_nondegenerate_pair(k1: KillingTensorE2, k2: KillingTensorE2) -> None:
    for name, k in (("first", k1), ("second", k2)):
        if classify(k) is not WebClass.ELLIPTIC_HYPERBOLIC:
            raise DegenerateOrbitError(f"{name} tensor does not lie on a non-degenerate orbit")


def joint_foci(k1: KillingTensorE2, k2: KillingTensorE2):
    """Canonically labeled focus quadruple (F1, F2 from k1; F3, F4 from k2).

    The labeling minimizes |F1 - F3|^2 over the four cross pairings, with a
    fixed enumeration order breaking exact ties.
    """
    _require_nondegenerate_pair(k1, k2)
    pa = foci(k1)
    pb = foci(k2)
    a, b = pa.f1.as_array(), pa.f2.as_array()
    c, d = pb.f1.as_array(), pb.f2.as_array()

    def sq(u, v):
        return float(np.dot(u - v, u - v))

    options = [
        (sq(a, c), (a, b, c, d)),
        (sq(a, d), (a, b, d, c)),
        (sq(b, c), (b, a, c, d)),
        (sq(b, d), (b, a, d, c)),
    ]
    best = min(options, key=lambda item: item[0])
    f1, f2, f3, f4 = best[1]
    return (Point2(*f1), Point2(*f2), Point2(*f3), Point2(*f4))


def joint_invariants(k1: KillingTensorE2, k2: KillingTensorE2) -> JointInvariantVector:
    f1, f2, f3, f4 = joint_foci(k1, k2)
    inv2 = fundamental_invariants(k2)
    inv1 = fundamental_invariants(k1)

    def sq(p: Point2, q: Point2) -> float:
        return float((p.x1 - q.x1) ** 2 + (p.x2 - q.x2) ** 2)

    return JointInvariantVector(
        d1=inv2.d1, d2=inv2.d2, d3=inv2.d3,
        d4=inv1.d1, d5=inv1.d2, d6=inv1.d3,
        d7=sq(f2, f3), d8=sq(f1, f3), d9=sq(f2, f4), d10=sq(f1, f4),
    )


def resultant(k1: KillingTensorE2, k2: KillingTensorE2,
              tol: float = TOL_FLOAT) -> tuple[float, bool]:
    """Smallest cross-pair squared focus distance and its vanishing flag.

    Taking the minimum over all four pairings makes the value independent of
    how the foci are labeled; it vanishes exactly when the webs share a focus.
    """
    jv = joint_invariants(k1, k2)
    value = min(jv.d7, jv.d8, jv.d9, jv.d10)
    scale = (1.0 + max(k_squared(k1), k_squared(k2))) ** 2
    return value, value < tol * scale


def angle_invariant(k1: KillingTensorE2, k2: KillingTensorE2,
                    tol: float = TOL_FLOAT) -> float:
    """Cosine of the angle at F1 between the directions to F3 and to F2."""
    f1, f2, f3, _ = joint_foci(k1, k2)
    v13 = f3.as_array() - f1.as_array()
    v12 = f2.as_array() - f1.as_array()
    n13 = float(np.linalg.norm(v13))
    n12 = float(np.linalg.norm(v12))
    scale = 1.0 + max(abs(f1.x1), abs(f1.x2), abs(f2.x1), abs(f3.x1))
    if n13 <= tol * scale or n12 <= tol * scale:
        raise CoincidentFociError("angle undefined: coincident foci")
    return float(np.dot(v13, v12)) / (n13 * n12)


def canonical_form(k: KillingTensorE2) -> tuple[KillingTensorE2, IsometrySE2]:
    """Move the web center to the origin and the focal axis onto the x1-axis.

    Returns (Kc, g) with Kc = act_on_params(g, K); the original tensor is
    recovered as act_on_params(g.inverse(), Kc).
    """
    if classify(k) is not WebClass.ELLIPTIC_HYPERBOLIC:
        raise DegenerateClassError("canonical form requires an elliptic-hyperbolic tensor")
    pair = foci(k)
    cx, cy = _web_center(k)
    axis = math.atan2(pair.f2.x2 - pair.f1.x2, pair.f2.x1 - pair.f1.x1)
    c, s = math.cos(-axis), math.sin(-axis)
    g = IsometrySE2(-(c * cx - s * cy), -(s * cx + c * cy), -axis)
    return act_on_params(g, k), g


def frame_invariants(k: KillingTensorE2, x: Point2,
                     h: float | None = None) -> FrameInvariants:
    """Connection components of the eigenframe by central differences.

    delta1 = -Gamma_12^1 and delta2 = -Gamma_22^1, where Gamma_ab^c are the
    components of the flat connection in the orthonormal eigenframe ordered
    by ascending eigenvalue.  Eigenvector signs at displaced points are
    aligned with the frame at x before differencing.
    """
    if h is None:
        h = 1e-5 * (1.0 + math.hypot(x.x1, x.x2))
    frame = eigenframe(k, x)
    if frame.gap <= 100.0 * h:
        raise SingularPointError(
            f"frame invariants need eigenvalue gap > {100 * h:.2e}, got {frame.gap:.2e}")
    basis = (frame.e1, frame.e2)

    def e2_at(px: np.ndarray) -> np.ndarray:
        f = eigenframe(k, Point2(px[0], px[1]))
        v = f.e2
        return v if np.dot(v, frame.e2) >= 0 else -v

    x0 = x.as_array()
    gammas = []
    for a in (0, 1):
        direction = basis[a]
        deriv = (e2_at(x0 + h * direction) - e2_at(x0 - h * direction)) / (2.0 * h)
        gammas.append(float(np.dot(deriv, frame.e1)))
    return FrameInvariants(delta1=-gammas[0], delta2=-gammas[1])


def _match_to_reference(pair: FociPair, ref: tuple[np.ndarray, np.ndarray]):
    """Order a focus pair to follow a reference labeling continuously."""
    u, v = pair.f1.as_array(), pair.f2.as_array()
    direct = np.dot(u - ref[0], u - ref[0]) + np.dot(v - ref[1], v - ref[1])
    swapped = np.dot(v - ref[0], v - ref[0]) + np.dot(u - ref[1], u - ref[1])
    return (u, v) if direct <= swapped else (v, u)


def joint_jacobian(k1: KillingTensorE2, k2: KillingTensorE2,
                   h: float = 1e-5) -> np.ndarray:
    """9x12 central-difference Jacobian of the nine joint invariants.

    Parameters are ordered second tensor first, then the first; steps are
    h * (1 + |value|) per parameter.  The focus labeling is fixed at the
    base pair and tracked by proximity during differencing, so a single
    smooth branch is differentiated even at symmetric configurations where
    the canonical labeling has ties.
    """
    _require_nondegenerate_pair(k1, k2)
    f1, f2, f3, f4 = joint_foci(k1, k2)
    ref1 = (f1.as_array(), f2.as_array())
    ref2 = (f3.as_array(), f4.as_array())

    def vector(params: np.ndarray) -> np.ndarray:
        ka = KillingTensorE2(tuple(params[:6]))
        kb = KillingTensorE2(tuple(params[6:]))
        inv_a = fundamental_invariants(ka)
        inv_b = fundamental_invariants(kb)
        g1, g2 = _match_to_reference(foci(kb), ref1)
        g3, g4 = _match_to_reference(foci(ka), ref2)

        def sq(u, v):
            return float(np.dot(u - v, u - v))

        return np.array([
            inv_a.d1, inv_a.d2, inv_a.d3,
            inv_b.d1, inv_b.d2, inv_b.d3,
            sq(g2, g3), sq(g1, g3), sq(g2, g4),
        ])

    base = np.array(list(k2.beta) + list(k1.beta))
    jac = np.zeros((9, 12))
    for j in range(12):
        step = h * (1.0 + abs(base[j]))
        up = base.copy()
        dn = base.copy()
        up[j] += step
        dn[j] -= step
        jac[:, j] = (vector(up) - vector(dn)) / (2.0 * step)
    return jac


def jacobian_singular_values(k1: KillingTensorE2, k2: KillingTensorE2,
                             h: float = 1e-5) -> np.ndarray:
    """Singular values of the row-preconditioned joint-invariant Jacobian.

    Rows are scaled to unit norm before the SVD so the quartic invariants do
    not drown the distance rows; rows whose norm sits below 1e-3 of the
    largest (identically-vanishing functions plus differencing noise) are
    left small rather than amplified.
    """
    jac = joint_jacobian(k1, k2, h=h)
    norms = np.linalg.norm(jac, axis=1, keepdims=True)
    floor = 1e-3 * norms.max()
    jac = jac / np.maximum(norms, floor)
    return np.linalg.svd(jac, compute_uv=False)


def independence_rank(k1: KillingTensorE2, k2: KillingTensorE2,
                      h: float = 1e-5,
                      threshold: float = 1e-7) -> int:
    """Numerical rank of the joint-invariant Jacobian.

    Counts singular values above threshold * sigma_max; equals nine away
    from degenerate strata, and drops on the coincident-web stratum where
    two of the cross distances sit at quadratic minima.
    """
    sigma = jacobian_singular_values(k1, k2, h=h)
    return int(np.sum(sigma > threshold * sigma[0]))
