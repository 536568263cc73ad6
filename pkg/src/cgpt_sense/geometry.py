"""Target shapes, boundary discretisation and rigid motions.

Every boundary is a closed curve ``t -> z(t)``, ``t in [0, 2*pi)``, stored
as a finite complex Fourier series.  Smooth shapes (circle, ellipse, bean)
are trigonometric polynomials.  Shapes with corners (triangle, shield,
triangular shield) start from a closed polyline parametrised by arclength
whose Fourier coefficients are known in closed form; the coefficients are
damped by a Gaussian of width ``corner_rounding`` (in arclength), which is
the same as convolving the polyline with a Gaussian along its length.  The
result is real-analytic, so the periodic trapezoidal rule and the Nyström
schemes in :mod:`cgpt_sense.boundary_ops` converge spectrally.

Curves are sampled at ``N`` equispaced parameter values and carry nodes,
outward unit normals, arclength weights ``|z'(t)| * 2*pi/N``, speed and
signed curvature (positive on convex parts for counter-clockwise curves).
"""

from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

__all__ = [
    "ShapeKind",
    "ShapeSpec",
    "RigidMotion",
    "Curve",
    "ConductivityTarget",
    "GeometryError",
    "FourierCurve",
    "shape_parametrization",
    "build_curve",
    "build_target",
    "apply_motion",
    "move_target",
    "curve_diameter",
    "is_simple",
    "points_inside",
    "shape_spec_schema",
]

DEFAULT_CORNER_ROUNDING = 0.05
DEFAULT_COATING_RATIO = 0.5

# Gaussian damping is cut where exp(-x^2/2) < exp(-40).
_DAMPING_CUTOFF = math.sqrt(80.0)


class GeometryError(ValueError):
    """Invalid shape parameters or an inconsistent curve configuration."""


class ShapeKind(str, enum.Enum):
    CIRCLE = "Circle"
    ELLIPSE = "Ellipse"
    TRIANGLE = "Triangle"
    BEAN = "Bean"
    SHIELD = "Shield"
    TRIANGULAR_SHIELD = "TriangularShield"


_DEFAULT_PARAMS: dict[ShapeKind, dict[str, float]] = {
    ShapeKind.CIRCLE: {"radius": 1.0},
    ShapeKind.ELLIPSE: {"a": 1.0, "b": 0.5},
    ShapeKind.TRIANGLE: {"radius": 1.0, "corner_rounding": DEFAULT_CORNER_ROUNDING},
    ShapeKind.BEAN: {"scale": 1.0},
    ShapeKind.SHIELD: {"scale": 1.0, "corner_rounding": DEFAULT_CORNER_ROUNDING},
    ShapeKind.TRIANGULAR_SHIELD: {
        "scale": 1.0,
        "corner_rounding": DEFAULT_CORNER_ROUNDING,
    },
}


@dataclass(frozen=True)
class ShapeSpec:
    """A dictionary-style target: shape, optional coating, conductivities.

    ``coated`` is ``None`` for a homogeneous target.  For a coated target it
    is a mapping with ``ratio`` (homothety ratio of the inner boundary about
    the outer centroid) and optionally ``inner`` = ``{"kind", "params"}``
    when the inner shape differs from the outer one.
    """

    kind: ShapeKind
    params: dict[str, float] = field(default_factory=dict)
    k1: float = 2.0
    k2: float | None = None
    coated: dict[str, Any] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        merged = dict(_DEFAULT_PARAMS[self.kind])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise GeometryError(
                f"unknown parameters for {self.kind.value}: {sorted(unknown)}"
            )
        merged.update({k: float(v) for k, v in self.params.items()})
        object.__setattr__(self, "params", merged)
        _check_conductivity(self.k1, "k1")
        if self.coated is not None:
            coated = dict(self.coated)
            coated.setdefault("ratio", DEFAULT_COATING_RATIO)
            if not 0.0 < float(coated["ratio"]) < 1.0:
                raise GeometryError("coating ratio must lie in (0, 1)")
            if self.k2 is None:
                raise GeometryError("coated target needs an inner conductivity k2")
            _check_conductivity(self.k2, "k2")
            object.__setattr__(self, "coated", coated)
        elif self.k2 is not None:
            raise GeometryError("k2 given for a target without coating")

    @property
    def is_coated(self) -> bool:
        return self.coated is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "params": dict(self.params),
            "coated": None if self.coated is None else dict(self.coated),
            "k1": self.k1,
            "k2": self.k2,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ShapeSpec":
        try:
            jsonschema.validate(data, shape_spec_schema())
        except jsonschema.ValidationError as exc:
            raise GeometryError(f"invalid shape spec: {exc.message}") from exc
        return cls(
            kind=data["kind"],
            params=dict(data.get("params") or {}),
            k1=float(data["k1"]),
            k2=None if data.get("k2") is None else float(data["k2"]),
            coated=data.get("coated"),
        )


@functools.cache
def shape_spec_schema() -> dict:
    """JSON schema of the serialised :class:`ShapeSpec`."""
    text = resources.files("cgpt_sense").joinpath("schemas/shape_spec.schema.json").read_text()
    return json.loads(text)


def _check_conductivity(k, name):
    if not (np.isfinite(k) and k > 0.0):
        raise GeometryError(f"{name} must be a positive finite number, got {k}")
    if abs(k - 1.0) < 1e-12:
        raise GeometryError(f"{name} = 1 gives no contrast with the background")


@dataclass(frozen=True)
class RigidMotion:
    """``x -> z + s * R(theta) x``."""

    z: tuple[float, float] = (0.0, 0.0)
    theta: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if not self.s > 0.0:
            raise GeometryError("scale s must be positive")
        object.__setattr__(self, "z", (float(self.z[0]), float(self.z[1])))

    @property
    def w(self) -> complex:
        return self.s * complex(math.cos(self.theta), math.sin(self.theta))

    @property
    def z_complex(self) -> complex:
        return complex(*self.z)

    def is_identity(self) -> bool:
        return self.z == (0.0, 0.0) and self.theta == 0.0 and self.s == 1.0

    def inverse(self) -> "RigidMotion":
        winv = 1.0 / self.w
        zinv = -self.z_complex * winv
        return RigidMotion((zinv.real, zinv.imag), -self.theta, 1.0 / self.s)

    def apply_complex(self, pts):
        return self.z_complex + self.w * np.asarray(pts)


class FourierCurve:
    """``z(t) = sum_k c_k exp(i k t)`` for ``k = -kmax..kmax``."""

    def __init__(self, coeffs, tag: str):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 1 or coeffs.size % 2 != 1:
            raise ValueError("need 2*kmax+1 coefficients")
        self.coeffs = coeffs
        self.kmax = coeffs.size // 2
        self.tag = tag

    @property
    def wavenumbers(self):
        return np.arange(-self.kmax, self.kmax + 1)

    def evaluate(self, t):
        """Return ``z, z', z''`` at parameter values ``t``."""
        k = self.wavenumbers
        E = np.exp(1j * np.outer(t, k))
        z = E @ self.coeffs
        dz = E @ (1j * k * self.coeffs)
        ddz = E @ (-(k * k) * self.coeffs)
        return z, dz, ddz

    def shifted(self, c: complex) -> "FourierCurve":
        coeffs = self.coeffs.copy()
        coeffs[self.kmax] += c
        return FourierCurve(coeffs, self.tag)

    def scaled(self, ratio: float, about: complex) -> "FourierCurve":
        coeffs = ratio * self.coeffs
        coeffs[self.kmax] += (1.0 - ratio) * about
        return FourierCurve(coeffs, self.tag)

    def reversed(self) -> "FourierCurve":
        return FourierCurve(self.coeffs[::-1].copy(), self.tag)

    def area_and_centroid(self, n: int = 4096):
        t = 2.0 * np.pi * np.arange(n) / n
        z, dz, _ = self.evaluate(t)
        h = 2.0 * np.pi / n
        x, y = z.real, z.imag
        dx, dy = dz.real, dz.imag
        area = 0.5 * h * np.sum(x * dy - y * dx)
        cx = h * np.sum(0.5 * x * x * dy) / area
        cy = -h * np.sum(0.5 * y * y * dx) / area
        return area, complex(cx, cy)


def _trig_coeffs(fn, kmax: int) -> np.ndarray:
    # exact for trigonometric polynomials of degree <= kmax
    n = 4 * kmax + 4
    t = 2.0 * np.pi * np.arange(n) / n
    c = np.fft.fft(fn(t)) / n
    k = np.arange(-kmax, kmax + 1)
    out = c[k % n]
    out[np.abs(out) < 1e-15] = 0.0
    return out


def _polyline_coeffs(vertices, rounding: float) -> np.ndarray:
    """Gaussian-smoothed Fourier coefficients of a closed polyline."""
    v = np.asarray(vertices, dtype=complex)
    seg = np.roll(v, -1) - v
    lengths = np.abs(seg)
    if np.any(lengths <= 0.0):
        raise GeometryError("polyline has repeated vertices")
    perimeter = lengths.sum()
    t_nodes = 2.0 * np.pi * np.concatenate([[0.0], np.cumsum(lengths)[:-1]]) / perimeter
    dt = 2.0 * np.pi * lengths / perimeter
    slope = seg / dt
    jump = slope - np.roll(slope, 1)
    sigma_t = 2.0 * np.pi * rounding / perimeter
    kmax = int(math.ceil(_DAMPING_CUTOFF / sigma_t))
    k = np.arange(-kmax, kmax + 1)
    nz = k != 0
    coeffs = np.zeros(k.size, dtype=complex)
    phase = np.exp(-1j * np.outer(k[nz], t_nodes))
    coeffs[nz] = -(phase @ jump) / (2.0 * np.pi * k[nz] ** 2)
    coeffs[~nz] = np.sum(dt * (v + np.roll(v, -1)) / 2.0) / (2.0 * np.pi)
    coeffs *= np.exp(-0.5 * (sigma_t * k) ** 2)
    return coeffs


def _quad_bezier(p0, p1, p2, n):
    s = np.linspace(0.0, 1.0, n, endpoint=False)
    return (1 - s) ** 2 * p0 + 2 * (1 - s) * s * p1 + s * s * p2


def _triangle_vertices(radius):
    ang = np.pi / 2 + 2.0 * np.pi * np.arange(3) / 3
    return radius * np.exp(1j * ang)


def _shield_vertices(scale):
    # flat top, vertical shoulders, convex flanks meeting in a bottom tip
    top_l, top_r = complex(-0.75, 0.7), complex(0.75, 0.7)
    sh_l, sh_r = complex(-0.75, 0.0), complex(0.75, 0.0)
    tip = complex(0.0, -1.0)
    pts = np.concatenate(
        [
            [top_r, top_l],
            _quad_bezier(sh_l, complex(-0.75, -0.6), tip, 24),
            _quad_bezier(tip, complex(0.75, -0.6), sh_r, 24),
            [sh_r],
        ]
    )
    return scale * pts


def _triangular_shield_vertices(scale):
    # inverted triangle whose top edge bulges outwards
    tl, tr, tip = complex(-0.9, 0.55), complex(0.9, 0.55), complex(0.0, -1.0)
    top = _quad_bezier(tr, complex(0.0, 1.15), tl, 32)
    pts = np.concatenate([top, [tl, tip]])
    return scale * pts


def shape_parametrization(kind: ShapeKind, params: dict[str, float]) -> FourierCurve:
    """Counter-clockwise Fourier parametrisation centred at the area centroid."""
    kind = ShapeKind(kind)
    p = dict(_DEFAULT_PARAMS[kind])
    p.update(params)
    if kind is ShapeKind.CIRCLE:
        r = p["radius"]
        if r <= 0:
            raise GeometryError("radius must be positive")
        curve = FourierCurve(np.array([0.0, 0.0, r]), "circle")
    elif kind is ShapeKind.ELLIPSE:
        a, b = p["a"], p["b"]
        if a <= 0 or b <= 0:
            raise GeometryError("semi-axes must be positive")
        curve = FourierCurve(np.array([(a - b) / 2, 0.0, (a + b) / 2]), "ellipse")
    elif kind is ShapeKind.BEAN:
        sc = p["scale"]
        if sc <= 0:
            raise GeometryError("scale must be positive")
        curve = FourierCurve(
            _trig_coeffs(
                lambda t: sc * (np.cos(t) + 1j * (0.5 * np.sin(t) + 0.4 * np.cos(2 * t))),
                2,
            ),
            "bean",
        )
    else:
        rounding = p["corner_rounding"]
        if rounding <= 0:
            raise GeometryError("corner_rounding must be positive")
        if kind is ShapeKind.TRIANGLE:
            if p["radius"] <= 0:
                raise GeometryError("radius must be positive")
            verts = _triangle_vertices(p["radius"])
            tag = "triangle"
        elif kind is ShapeKind.SHIELD:
            if p["scale"] <= 0:
                raise GeometryError("scale must be positive")
            verts = _shield_vertices(p["scale"])
            tag = "shield"
        else:
            if p["scale"] <= 0:
                raise GeometryError("scale must be positive")
            verts = _triangular_shield_vertices(p["scale"])
            tag = "triangular_shield"
        if _signed_area(verts) < 0:
            verts = verts[::-1]
        curve = FourierCurve(_polyline_coeffs(verts, rounding), tag)
        if abs(curve.area_and_centroid()[0]) < 0.5 * _signed_area(verts):
            raise GeometryError("corner_rounding too large: smoothing swallows the shape")
    area, centroid = curve.area_and_centroid()
    if area < 0:
        curve = curve.reversed()
    return curve.shifted(-centroid)


def _signed_area(v):
    v = np.asarray(v)
    return 0.5 * np.sum((v.conj() * np.roll(v, -1)).imag)


@dataclass(frozen=True, eq=False)
class Curve:
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray
    parametrization_id: str

    def __post_init__(self):
        for name in ("nodes", "normals", "weights", "speed", "curvature"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def z(self) -> np.ndarray:
        """Nodes as complex numbers."""
        return self.nodes[:, 0] + 1j * self.nodes[:, 1]

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())

    @property
    def area(self) -> float:
        # divergence theorem with x . n
        return 0.5 * float(np.sum(np.einsum("ij,ij->i", self.nodes, self.normals) * self.weights))

    @property
    def centroid(self) -> np.ndarray:
        a = self.area
        cx = 0.5 * np.sum(self.nodes[:, 0] ** 2 * self.normals[:, 0] * self.weights) / a
        cy = 0.5 * np.sum(self.nodes[:, 1] ** 2 * self.normals[:, 1] * self.weights) / a
        return np.array([cx, cy])

    @property
    def max_spacing(self) -> float:
        return float(self.weights.max())


def _curve_from_parametrization(par: FourierCurve, n: int) -> Curve:
    t = 2.0 * np.pi * np.arange(n) / n
    z, dz, ddz = par.evaluate(t)
    speed = np.abs(dz)
    if np.any(speed < 1e-12):
        raise GeometryError("parametrisation has vanishing speed")
    tangent = dz / speed
    normal = -1j * tangent
    curvature = (np.conj(dz) * ddz).imag / speed**3
    return Curve(
        nodes=np.column_stack([z.real, z.imag]),
        normals=np.column_stack([normal.real, normal.imag]),
        weights=speed * (2.0 * np.pi / n),
        speed=speed,
        curvature=curvature,
        parametrization_id=par.tag,
    )


def _segments_cross(a0, a1, b0, b1):
    """Proper crossings between segment sets a (m) and b (k), as (m, k) bools."""

    def orient(p, q, r):
        return np.sign(
            (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
            - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])
        )

    A0, A1 = a0[:, None, :], a1[:, None, :]
    B0, B1 = b0[None, :, :], b1[None, :, :]
    o1 = orient(A0, A1, B0)
    o2 = orient(A0, A1, B1)
    o3 = orient(B0, B1, A0)
    o4 = orient(B0, B1, A1)
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def is_simple(nodes: np.ndarray) -> bool:
    """Segment-intersection scan of the closed polygon through ``nodes``."""
    p0 = np.asarray(nodes)
    p1 = np.roll(p0, -1, axis=0)
    n = len(p0)
    cross = _segments_cross(p0, p1, p0, p1)
    i, j = np.nonzero(cross)
    gap = np.abs(i - j)
    # neighbouring segments share an endpoint and cannot cross properly
    return not np.any((gap > 1) & (gap < n - 1))


def points_inside(curve: Curve, pts) -> np.ndarray:
    """Even-odd ray casting against the node polygon of ``curve``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x0, y0 = curve.nodes[:, 0], curve.nodes[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    px, py = pts[:, 0, None], pts[:, 1, None]
    straddle = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (px < xcross)
    return np.count_nonzero(hits, axis=1) % 2 == 1


def _check_nested(outer: Curve, inner: Curve):
    if not np.all(points_inside(outer, inner.nodes)):
        raise GeometryError("inner curve is not strictly contained in the outer curve")
    a0, b0 = outer.nodes, inner.nodes
    if np.any(_segments_cross(a0, np.roll(a0, -1, 0), b0, np.roll(b0, -1, 0))):
        raise GeometryError("inner curve intersects the outer curve")


def build_curve(spec: ShapeSpec, n_nodes: int) -> Curve | tuple[Curve, Curve]:
    """Discretise ``spec``; coated specs return ``(outer, inner)``."""
    if n_nodes < 16 or n_nodes % 2:
        raise GeometryError("n_nodes must be even and at least 16")
    outer_par = shape_parametrization(spec.kind, spec.params)
    outer = _curve_from_parametrization(outer_par, n_nodes)
    if not is_simple(outer.nodes):
        raise GeometryError(f"{spec.kind.value} parameters give a self-intersecting curve")
    if not spec.is_coated:
        return outer
    ratio = float(spec.coated["ratio"])
    inner_def = spec.coated.get("inner")
    if inner_def is None:
        inner_par = outer_par.scaled(ratio, 0.0)
    else:
        base = shape_parametrization(inner_def["kind"], inner_def.get("params") or {})
        inner_par = base.scaled(ratio, 0.0)
    inner = _curve_from_parametrization(inner_par, n_nodes)
    if not is_simple(inner.nodes):
        raise GeometryError("inner curve self-intersects")
    _check_nested(outer, inner)
    return outer, inner


def apply_motion(curve: Curve, m: RigidMotion) -> Curve:
    """Image of ``curve`` under ``x -> z + s R(theta) x``."""
    if m.is_identity():
        return curve
    c, s_ = math.cos(m.theta), math.sin(m.theta)
    rot = np.array([[c, -s_], [s_, c]])
    nodes = m.s * (curve.nodes @ rot.T) + np.asarray(m.z)
    return Curve(
        nodes=nodes,
        normals=curve.normals @ rot.T,
        weights=m.s * curve.weights,
        speed=m.s * curve.speed,
        curvature=curve.curvature / m.s,
        parametrization_id=curve.parametrization_id,
    )


def curve_diameter(curve: Curve) -> float:
    """Largest node-to-node distance."""
    if curve.n < 2:
        raise GeometryError("need at least two nodes")
    z = curve.z
    best = 0.0
    # blocked to keep memory bounded for large N
    for start in range(0, len(z), 512):
        d = np.abs(z[start : start + 512, None] - z[None, :])
        best = max(best, float(d.max()))
    return best


@dataclass(frozen=True, eq=False)
class ConductivityTarget:
    """Piecewise-constant conductivity: ``k1`` inside ``outer``, ``k2`` inside ``inner``."""

    outer: Curve
    k1: float
    inner: Curve | None = None
    k2: float | None = None
    label: str = ""

    def __post_init__(self):
        _check_conductivity(self.k1, "k1")
        if (self.inner is None) != (self.k2 is None):
            raise GeometryError("inner curve and k2 must be given together")
        if self.k2 is not None:
            if not (np.isfinite(self.k2) and self.k2 > 0):
                raise GeometryError("k2 must be positive")

    @property
    def curves(self) -> list[Curve]:
        return [self.outer] if self.inner is None else [self.outer, self.inner]

    @property
    def is_coated(self) -> bool:
        return self.inner is not None

    def centroid(self) -> np.ndarray:
        return self.outer.centroid


def build_target(
    spec: ShapeSpec, n_nodes: int = 512, motion: RigidMotion | None = None, label: str = ""
) -> ConductivityTarget:
    curves = build_curve(spec, n_nodes)
    if isinstance(curves, Curve):
        curves = (curves,)
    if motion is not None:
        curves = tuple(apply_motion(c, motion) for c in curves)
    if spec.is_coated:
        return ConductivityTarget(curves[0], spec.k1, curves[1], spec.k2, label)
    return ConductivityTarget(curves[0], spec.k1, label=label)


def move_target(target: ConductivityTarget, motion: RigidMotion) -> ConductivityTarget:
    return ConductivityTarget(
        apply_motion(target.outer, motion),
        target.k1,
        None if target.inner is None else apply_motion(target.inner, motion),
        target.k2,
        target.label,
    )
