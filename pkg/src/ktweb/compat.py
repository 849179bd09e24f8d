"""Bertrand-Darboux compatibility between Killing tensors and potentials.

A natural Hamiltonian H = (p1^2 + p2^2)/2 + V(x) admits a first integral
F = K^ij p_i p_j + U(x) exactly when K is a Killing tensor and the one-form
K_hat dV is closed; then dU = 2 * K_hat dV (the factor 2 comes from the
linear-in-momentum part of the Poisson bracket with this normalization of F,
and is pinned by the conservation tests).

The residual of the closedness condition, expanded over the six-parameter
tensor family, is

    r(b; V; x) = -3*(b4 + b6*x2)*V1 + 3*(b5 + b6*x1)*V2
                 + K12(x)*(V11 - V22) + (K22 - K11)(x)*V12

which is linear in b; compatible tensors for a fixed V form the nullspace of
the sampled residual matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .e2core import KillingTensorE2, Point2, evaluate
from .errors import (
    CompatibilityError,
    DegenerateSamplingError,
    EvaluationSingularityError,
    InputError,
)
from .exprlang import Expr, parse_expr
from .invariants import WebClass, classify, foci, resultant

KEPLER_TEXT = "1/sqrt(x1^2 + x2^2)"


@dataclass(frozen=True)
class Potential:
    """Expression with its symbolic gradient and Hessian, built once."""

    expr: Expr
    grad: tuple[Expr, Expr]
    hess: tuple[tuple[Expr, Expr], tuple[Expr, Expr]]

    @classmethod
    def from_expr(cls, expr: Expr) -> "Potential":
        g1, g2 = expr.diff(1), expr.diff(2)
        h11, h12 = g1.diff(1), g1.diff(2)
        h22 = g2.diff(2)
        return cls(expr=expr, grad=(g1, g2), hess=((h11, h12), (h12, h22)))

    def value(self, x: Point2) -> float:
        return self.expr.evaluate(x.x1, x.x2)

    def gradient(self, x: Point2) -> np.ndarray:
        return np.array([self.grad[0].evaluate(x.x1, x.x2),
                         self.grad[1].evaluate(x.x1, x.x2)])

    def hessian(self, x: Point2) -> np.ndarray:
        h11 = self.hess[0][0].evaluate(x.x1, x.x2)
        h12 = self.hess[0][1].evaluate(x.x1, x.x2)
        h22 = self.hess[1][1].evaluate(x.x1, x.x2)
        return np.array([[h11, h12], [h12, h22]])

    def to_json_dict(self) -> dict:
        return {"expr": self.expr.to_text()}


def parse_potential(text: str) -> Potential:
    return Potential.from_expr(parse_expr(text))


def kepler_potential() -> Potential:
    return parse_potential(KEPLER_TEXT)


def bd_residual(k: KillingTensorE2, v: Potential, x: Point2) -> float:
    """Closedness defect d1(K dV)_2 - d2(K dV)_1 at x; linear in the parameters."""
    b1, b2, b3, b4, b5, b6 = k.beta
    g = v.gradient(x)
    h = v.hessian(x)
    k12 = b3 - b4 * x.x1 - b5 * x.x2 - b6 * x.x1 * x.x2
    k22_minus_k11 = (b2 - b1) + 2 * b5 * x.x1 - 2 * b4 * x.x2 + b6 * (x.x1 ** 2 - x.x2 ** 2)
    return float(-3.0 * (b4 + b6 * x.x2) * g[0]
                 + 3.0 * (b5 + b6 * x.x1) * g[1]
                 + k12 * (h[0, 0] - h[1, 1])
                 + k22_minus_k11 * h[0, 1])


_BASIS = [KillingTensorE2(tuple(1.0 if i == j else 0.0 for i in range(6))) for j in range(6)]


def default_samples(count: int = 16) -> list[Point2]:
    """Sample points on two concentric circles, axes avoided."""
    half = count // 2
    points = []
    for radius in (1.0, math.e):
        for j in range(half):
            theta = math.pi * (2 * j + 1) / count
            points.append(Point2(radius * math.cos(theta), radius * math.sin(theta)))
    return points


@dataclass
class CompatibleSubspace:
    basis: list[KillingTensorE2]
    singular_values: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.basis)


def compatible_subspace(v: Potential,
                        samples: list[Point2] | None = None,
                        svd_tol: float = 1e-10,
                        rng_seed: int = 0,
                        check_resample: bool = True) -> CompatibleSubspace:
    """Nullspace of the sampled residual map over the six-parameter family.

    Needs at least 8 generic sample points away from singularities of V; the
    result is cross-checked by re-solving with 4 extra random points, and a
    dimension change raises DegenerateSamplingError.
    """
    if samples is None:
        samples = default_samples()
    if len(samples) < 8:
        raise InputError("compatible_subspace needs at least 8 sample points")

    def solve(points: list[Point2]):
        matrix = np.array([[bd_residual(e, v, x) for e in _BASIS] for x in points])
        _, sigma, vt = np.linalg.svd(matrix)
        keep = sigma > svd_tol * sigma[0] if sigma[0] > 0 else np.zeros_like(sigma, bool)
        rank = int(keep.sum())
        rows = vt[rank:]
        # Deterministic sign: largest-magnitude coordinate positive.
        fixed = []
        for row in rows:
            lead = np.argmax(np.abs(row))
            fixed.append(row if row[lead] >= 0 else -row)
        return fixed, sigma

    rows, sigma = solve(samples)
    if check_resample:
        rng = np.random.default_rng(rng_seed)
        extra = []
        while len(extra) < 4:
            candidate = Point2(rng.uniform(0.5, 2.5) * math.cos(rng.uniform(0.2, math.pi - 0.2)),
                               rng.uniform(0.5, 2.5) * math.sin(rng.uniform(0.2, math.pi - 0.2)))
            try:
                v.gradient(candidate)
                v.hessian(candidate)
            except EvaluationSingularityError:
                continue
            extra.append(candidate)
        rows2, _ = solve(list(samples) + extra)
        if len(rows2) != len(rows):
            raise DegenerateSamplingError(
                f"nullspace dimension changed under resampling: {len(rows)} vs {len(rows2)}")
    basis = [KillingTensorE2(tuple(float(c) for c in row)) for row in rows]
    return CompatibleSubspace(basis=basis, singular_values=sigma)


def pde_residuals(v: Potential, x: Point2) -> tuple[float, float, float, float]:
    """Residuals of the four scalar conditions carved out of the residual map.

    The first comes from the polar tensor (b6 alone), the second and third
    from the two parabolic tensors (b5 alone, b4 alone), the fourth is the
    rotational-symmetry condition implied by the first three.
    """
    g = v.gradient(x)
    h = v.hessian(x)
    v1, v2 = g[0], g[1]
    d = h[1, 1] - h[0, 0]  # V22 - V11
    x1, x2 = x.x1, x.x2
    r1 = 2 * x2 * v1 - 2 * x1 * v2 - x1 * x2 * d + (x2 * x2 - x1 * x1) * h[0, 1]
    r2 = 3 * v2 + x2 * d + 2 * x1 * h[0, 1]
    r3 = 3 * v1 - x1 * d + 2 * x2 * h[0, 1]
    r4 = x2 * v1 - x1 * v2
    return (float(r1), float(r2), float(r3), float(r4))


# ---------------------------------------------------------------------------
# line-integral reconstruction of U and trajectory checks
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _one_form(k: KillingTensorE2, v: Potential, x1: float, x2: float) -> np.ndarray:
    point = Point2(x1, x2)
    mat = evaluate(k, point)
    return 2.0 * (mat @ v.gradient(point))


def _segment_integral(k: KillingTensorE2, v: Potential,
                      start: np.ndarray, end: np.ndarray) -> float:
    delta = end - start
    total = 0.0
    for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
        t = 0.5 * (node + 1.0)
        p = start + t * delta
        omega = _one_form(k, v, p[0], p[1])
        value = float(np.dot(omega, delta))
        if not math.isfinite(value):
            raise EvaluationSingularityError("one-form not finite on integration path")
        total += weight * value
    return 0.5 * total


def reconstruct_U(k: KillingTensorE2, v: Potential, base: Point2, x: Point2,
                  resid_tol: float = 1e-8, path_tol: float = 1e-7) -> float:
    """Potential part of the first integral: U(x) = int 2*K dV from base to x.

    The Bertrand-Darboux residual is checked at the quadrature nodes of the
    direct segment first; path independence is then asserted by comparing
    against an L-shaped path through (x.x1, base.x2).
    """
    start = base.as_array()
    end = x.as_array()
    scale = 1.0 + k.norm()
    for node in _GL_NODES:
        t = 0.5 * (node + 1.0)
        p = start + t * (end - start)
        resid = bd_residual(k, v, Point2(p[0], p[1]))
        if abs(resid) > resid_tol * scale:
            raise CompatibilityError(
                f"compatibility residual {resid:.3e} exceeds {resid_tol:.1e} on path")
    direct = _segment_integral(k, v, start, end)
    corner = np.array([end[0], start[1]])
    bent = (_segment_integral(k, v, start, corner)
            + _segment_integral(k, v, corner, end))
    if abs(direct - bent) > path_tol * (1.0 + abs(direct)):
        raise CompatibilityError(
            f"path dependence detected: straight {direct:.10e} vs bent {bent:.10e}")
    return direct


@dataclass(frozen=True)
class FirstIntegral:
    """F(x, p) = K^ij p_i p_j + U(x), with U given as a callable."""

    k: KillingTensorE2
    u: object = None  # callable Point2 -> float; None means U == 0
    label: str = "F"

    def __call__(self, x: Point2, p: np.ndarray) -> float:
        quad = float(p @ evaluate(self.k, x) @ p)
        if self.u is None:
            return quad
        return quad + self.u(x)

    @classmethod
    def from_potential(cls, k: KillingTensorE2, v: Potential, base: Point2,
                       label: str = "F") -> "FirstIntegral":
        return cls(k=k, u=lambda x: reconstruct_U(k, v, base, x), label=label)


@dataclass
class TrajectoryReport:
    times: np.ndarray
    states: np.ndarray  # rows (x1, x2, p1, p2)
    drift_h: float
    drift_f: list[float]
    integral_labels: list[str]
    aborted: bool = False
    step: float = 0.0
    horizon: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "states": self.states.tolist(),
            "drift_H": self.drift_h,
            "drift_F": dict(zip(self.integral_labels, self.drift_f)),
            "aborted": self.aborted,
            "step": self.step,
            "horizon": self.horizon,
        }


def hamiltonian_flow(v: Potential, x0: Point2, p0: tuple[float, float],
                     step: float, horizon: float,
                     integrals: list[FirstIntegral] = (),
                     record_every: int = 1) -> TrajectoryReport:
    """Classical fixed-step RK4 on dx/dt = p, dp/dt = -grad V.

    Aborts with a partial report when the state leaves the finite range or
    |V| exceeds 1e3 * max(1, |H0|), the proxy for coming within ~1e-3 of a
    potential singularity at unit normalization.
    """
    if step <= 0 or horizon <= 0:
        raise InputError("step and horizon must be positive")
    n_steps = int(round(horizon / step))

    def rhs(z: np.ndarray) -> np.ndarray:
        g = v.gradient(Point2(z[0], z[1]))
        return np.array([z[2], z[3], -g[0], -g[1]])

    def hamiltonian(z: np.ndarray) -> float:
        return 0.5 * (z[2] ** 2 + z[3] ** 2) + v.value(Point2(z[0], z[1]))

    z = np.array([x0.x1, x0.x2, p0[0], p0[1]], dtype=float)
    h0 = hamiltonian(z)
    f0 = [f(Point2(z[0], z[1]), z[2:]) for f in integrals]
    v_abort = 1e3 * max(1.0, abs(h0))

    times = [0.0]
    states = [z.copy()]
    drift_h = 0.0
    drift_f = [0.0] * len(integrals)
    aborted = False
    for i in range(1, n_steps + 1):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * step * k1)
        k3 = rhs(z + 0.5 * step * k2)
        k4 = rhs(z + step * k3)
        z = z + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(z)):
            aborted = True
            break
        try:
            value = v.value(Point2(z[0], z[1]))
        except EvaluationSingularityError:
            aborted = True
            break
        if abs(value) > v_abort:
            aborted = True
            break
        drift_h = max(drift_h, abs(hamiltonian(z) - h0) / max(1.0, abs(h0)))
        if drift_h > 1e-2:
            # Fixed-step RK4 stepped across a singularity; the energy blowup
            # is the reliable witness when the pole itself was jumped over.
            aborted = True
            break
        for j, f in enumerate(integrals):
            fj = f(Point2(z[0], z[1]), z[2:])
            drift_f[j] = max(drift_f[j], abs(fj - f0[j]) / max(1.0, abs(f0[j])))
        if i % record_every == 0 or i == n_steps:
            times.append(i * step)
            states.append(z.copy())
    return TrajectoryReport(
        times=np.array(times), states=np.array(states),
        drift_h=drift_h, drift_f=drift_f,
        integral_labels=[f.label for f in integrals],
        aborted=aborted, step=step, horizon=horizon)


# ---------------------------------------------------------------------------
# Kepler characterization
# ---------------------------------------------------------------------------

@dataclass
class TheoremCheck:
    name: str
    passed: bool
    detail: str

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class KeplerReport:
    checks: list[TheoremCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.checks.append(TheoremCheck(name, bool(passed), detail))

    def to_json_dict(self) -> dict:
        return {"passed": self.all_passed,
                "checks": [c.to_json_dict() for c in self.checks]}


def verify_kepler_theorem(constraint_tol: float = 1e-8,
                          pde_tol: float = 1e-12,
                          focus_tol: float = 1e-9) -> KeplerReport:
    """Numerical witness of the vanishing-resultant characterization.

    Checks, in order: the compatible subspace of the attracting-center
    potential is four-dimensional and pinned by b1 = b2, b3 = 0; two generic
    members of the compatible family are elliptic-hyperbolic with foci at
    the center and at (-2*b5/b6, -2*b4/b6), sharing the focus at the origin
    (vanishing resultant); the scalar compatibility conditions vanish; a
    perturbed potential loses the four-dimensional subspace.
    """
    report = KeplerReport()
    kepler = kepler_potential()

    sub = compatible_subspace(kepler)
    report.add("subspace_dimension", sub.dimension == 4,
               f"dimension {sub.dimension} (expected 4)")
    sigma = sub.singular_values
    gap = sigma[1] / sigma[2] if len(sigma) > 2 and sigma[2] > 0 else math.inf
    report.add("singular_value_gap", gap > 1e6,
               f"sigma_rank/sigma_rank+1 = {gap:.3e} (needs > 1e6)")
    worst = 0.0
    for member in sub.basis:
        b = member.beta
        worst = max(worst, abs(b[0] - b[1]), abs(b[2]))
    report.add("subspace_constraints", worst < constraint_tol,
               f"max |b1-b2|, |b3| = {worst:.3e} (tol {constraint_tol:.1e})")

    members = [KillingTensorE2((0, 0, 0, 0, 1, 1)), KillingTensorE2((0, 0, 0, 1, 0, 2))]
    detail = []
    members_ok = True
    for i, member in enumerate(members, start=1):
        cls = classify(member)
        members_ok &= cls is WebClass.ELLIPTIC_HYPERBOLIC
        pair = foci(member)
        b4, b5, b6 = member.beta[3], member.beta[4], member.beta[5]
        expected = sorted([(0.0, 0.0), (-2 * b5 / b6, -2 * b4 / b6)])
        got = sorted([(pair.f1.x1, pair.f1.x2), (pair.f2.x1, pair.f2.x2)])
        err = max(abs(a - b) for p, q in zip(expected, got) for a, b in zip(p, q))
        members_ok &= err < focus_tol
        detail.append(f"member {i}: class {cls.value}, focus error {err:.2e}")
    invariant_ratio = (members[0].beta[3] ** 2 + members[0].beta[4] ** 2) / members[0].beta[5]
    invariant_ratio2 = (members[1].beta[3] ** 2 + members[1].beta[4] ** 2) / members[1].beta[5]
    members_ok &= abs(invariant_ratio - invariant_ratio2) > 1e-9
    report.add("family_members", members_ok, "; ".join(detail))

    value, vanishing = resultant(*members)
    shared_origin = min(
        math.hypot(p.x1, p.x2)
        for member in members for p in (foci(member).f1, foci(member).f2))
    report.add("vanishing_resultant", vanishing and value < focus_tol
               and shared_origin < focus_tol,
               f"resultant {value:.3e}, common focus within {shared_origin:.2e} of origin")

    worst_pde = 0.0
    rng = np.random.default_rng(0)
    for _ in range(20):
        radius = rng.uniform(0.5, 2.5)
        theta = rng.uniform(0.15, 2 * math.pi)
        x = Point2(radius * math.cos(theta), radius * math.sin(theta))
        worst_pde = max(worst_pde, max(abs(r) for r in pde_residuals(kepler, x)))
    report.add("pde_residuals", worst_pde < pde_tol,
               f"max residual {worst_pde:.3e} over 20 points (tol {pde_tol:.1e})")

    perturbed = parse_potential(f"{KEPLER_TEXT} + 0.1*x1")
    sub_p = compatible_subspace(perturbed)
    report.add("perturbed_dimension_drops", sub_p.dimension < 4,
               f"perturbed dimension {sub_p.dimension} (expected < 4)")
    return report
