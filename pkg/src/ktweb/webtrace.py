"""Orthogonal coordinate web tracing and SVG output.

The two curve families are the integral curves of the two eigenvector
fields of the tensor, ordered by ascending eigenvalue; each family is
orthogonal to the other everywhere, and the leaves of one foliation are the
curves of the other.  Family labels 1/2 follow the eigenvalue order (which
classical family they correspond to depends on the tensor, so figure
metadata records the convention).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .e2core import KillingTensorE2, Point2, eigenframe, is_trivial, singular_points
from .errors import InputError, SingularPointError, TrivialTensorError
from .invariants import WebClass, classify, foci, fundamental_invariants

MAX_STEPS = 100_000


@dataclass(frozen=True)
class Viewport:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise InputError("viewport must have positive extent")

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def to_json_dict(self) -> dict:
        return {"xmin": self.xmin, "xmax": self.xmax, "ymin": self.ymin, "ymax": self.ymax}


@dataclass
class WebCurve:
    family: int
    points: np.ndarray  # polyline, shape (n, 2)
    terminated_by: str  # bounds | singular_point | step_limit | closed

    def to_json_dict(self) -> dict:
        return {"family": self.family,
                "points": self.points.tolist(),
                "terminated_by": self.terminated_by}


@dataclass
class WebFigure:
    curves: list[WebCurve]
    markers: list[Point2]
    viewport: Viewport
    web_class: WebClass
    invariants: tuple[float, float, float]
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "curves": [c.to_json_dict() for c in self.curves],
            "markers": [[m.x1, m.x2] for m in self.markers],
            "viewport": self.viewport.to_json_dict(),
            "class": self.web_class.value,
            "invariants": list(self.invariants),
            "metadata": self.metadata,
        }


def _unit_field(k: KillingTensorE2, family: int):
    index = family - 1

    def at(x: float, y: float, reference: np.ndarray) -> np.ndarray:
        frame = eigenframe(k, Point2(x, y))
        v = frame.e1 if index == 0 else frame.e2
        # Eigenvectors are defined up to sign; follow the reference direction.
        return v if float(np.dot(v, reference)) >= 0.0 else -v

    return at


def trace_curve(k: KillingTensorE2, seed: Point2, family: int,
                step: float, bounds: Viewport,
                max_steps: int = MAX_STEPS) -> WebCurve:
    """Integral curve of one unit eigenvector field through the seed.

    RK4 in both directions, with per-evaluation sign continuity against the
    previous direction.  Stops at the viewport, within 5*step of a singular
    point, on closing up, or at the step budget.
    """
    if family not in (1, 2):
        raise InputError("family must be 1 or 2")
    if not bounds.contains(seed.x1, seed.x2):
        raise InputError("seed must lie inside the bounds")
    singulars = [] if is_trivial(k) else singular_points(k)
    for s in singulars:
        if math.hypot(seed.x1 - s.x1, seed.x2 - s.x2) < 10.0 * step:
            raise SingularPointError("seed too close to a singular point")
    field_at = _unit_field(k, family)

    def near_singular(x: float, y: float) -> bool:
        return any(math.hypot(x - s.x1, y - s.x2) < 5.0 * step for s in singulars)

    def march(direction_sign: float):
        points = [np.array([seed.x1, seed.x2])]
        frame = eigenframe(k, seed)
        reference = (frame.e1 if family == 1 else frame.e2) * direction_sign
        reason = "step_limit"
        z = points[0].copy()
        for i in range(max_steps):
            try:
                k1 = field_at(z[0], z[1], reference)
                k2 = field_at(*(z + 0.5 * step * k1), k1)
                k3 = field_at(*(z + 0.5 * step * k2), k2)
                k4 = field_at(*(z + step * k3), k3)
            except SingularPointError:
                reason = "singular_point"
                break
            z = z + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            reference = k4
            points.append(z.copy())
            if not bounds.contains(z[0], z[1]):
                reason = "bounds"
                break
            if near_singular(z[0], z[1]):
                reason = "singular_point"
                break
            if i > 10 and np.hypot(*(z - points[0])) < 0.5 * step:
                points.append(points[0].copy())
                reason = "closed"
                break
        return points, reason

    forward, reason_f = march(+1.0)
    if reason_f == "closed":
        return WebCurve(family=family, points=np.array(forward), terminated_by="closed")
    backward, reason_b = march(-1.0)
    polyline = list(reversed(backward[1:])) + forward
    # Report the stronger termination cause of the two ends.
    priority = {"singular_point": 3, "bounds": 2, "closed": 1, "step_limit": 0}
    reason = reason_f if priority[reason_f] >= priority[reason_b] else reason_b
    return WebCurve(family=family, points=np.array(polyline), terminated_by=reason)


def _sampled_hausdorff(a: np.ndarray, b: np.ndarray, probes: int = 32) -> float:
    def directed(u: np.ndarray, v: np.ndarray) -> float:
        idx = np.linspace(0, len(u) - 1, min(probes, len(u))).astype(int)
        worst = 0.0
        for i in idx:
            d = np.min(np.hypot(v[:, 0] - u[i, 0], v[:, 1] - u[i, 1]))
            worst = max(worst, float(d))
        return worst

    return max(directed(a, b), directed(b, a))


def build_web(k: KillingTensorE2, bounds: Viewport, density: int = 6,
              step: float | None = None) -> WebFigure:
    """Trace both families from a density x density seed grid.

    Curves of the same family closer than one step in sampled Hausdorff
    distance are deduplicated (grid seeding over-covers closed leaves);
    markers come from the closed-form foci when available, otherwise from
    the singular-point solver.
    """
    if is_trivial(k):
        raise TrivialTensorError("trivial tensors generate no web")
    if density < 1:
        raise InputError("density must be positive")
    if step is None:
        step = min(bounds.width, bounds.height) / 256.0

    seeds = []
    for i in range(density):
        for j in range(density):
            seeds.append(Point2(
                bounds.xmin + (i + 0.5) * bounds.width / density,
                bounds.ymin + (j + 0.5) * bounds.height / density))

    web_class = classify(k)
    if web_class is WebClass.ELLIPTIC_HYPERBOLIC:
        pair = foci(k)
        markers = [pair.f1, pair.f2]
    elif web_class is WebClass.CARTESIAN:
        markers = []
    else:
        markers = singular_points(k)

    curves: list[WebCurve] = []
    for family in (1, 2):
        kept: list[WebCurve] = []
        for seed in seeds:
            try:
                curve = trace_curve(k, seed, family, step, bounds)
            except (SingularPointError, InputError):
                continue
            if len(curve.points) < 4:
                continue
            if any(_sampled_hausdorff(curve.points, other.points) < step for other in kept):
                continue
            kept.append(curve)
        curves.extend(kept)

    inv = fundamental_invariants(k)
    return WebFigure(
        curves=curves, markers=markers, viewport=bounds,
        web_class=web_class, invariants=(inv.d1, inv.d2, inv.d3),
        metadata={"beta": list(k.beta), "step": step, "density": density,
                  "families": "1: smaller eigenvalue, 2: larger eigenvalue"})


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.3f}".rstrip("0").rstrip(".")


def render_svg(figure: WebFigure, width_px: int = 640, height_px: int = 640) -> str:
    """Deterministic SVG 1.1 document: solid family 1, dashed family 2,
    circles at the markers, invariants embedded in the title."""
    if width_px <= 0 or height_px <= 0:
        raise InputError("pixel dimensions must be positive")
    vp = figure.viewport
    pad = 8.0

    def to_px(x: float, y: float) -> tuple[float, float]:
        px = pad + (x - vp.xmin) / vp.width * (width_px - 2 * pad)
        py = pad + (vp.ymax - y) / vp.height * (height_px - 2 * pad)
        return px, py

    d1, d2, d3 = figure.invariants
    title = (f"{figure.web_class.value} web; invariants "
             f"d1={d1:.6g} d2={d2:.6g} d3={d3:.6g}")
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px}" height="{height_px}" '
        f'viewBox="0 0 {width_px} {height_px}">',
        f"  <title>{title}</title>",
        f'  <rect x="{_fmt(pad)}" y="{_fmt(pad)}" width="{_fmt(width_px - 2 * pad)}" '
        f'height="{_fmt(height_px - 2 * pad)}" fill="white" stroke="black" stroke-width="1"/>',
    ]
    styles = {
        1: 'fill="none" stroke="#1f4e79" stroke-width="1.2"',
        2: 'fill="none" stroke="#a33e3e" stroke-width="1.2" stroke-dasharray="6 4"',
    }
    for curve in figure.curves:
        coords = " ".join(
            ("M" if i == 0 else "L") + f"{_fmt(px)},{_fmt(py)}"
            for i, (px, py) in enumerate(to_px(x, y) for x, y in curve.points))
        lines.append(f'  <path d="{coords}" {styles[curve.family]}/>')
    for marker in figure.markers:
        px, py = to_px(marker.x1, marker.x2)
        lines.append(f'  <circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4" '
                     f'fill="black" stroke="none"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def figure_json(figure: WebFigure) -> str:
    return json.dumps(figure.to_json_dict())
