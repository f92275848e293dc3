"""Closed planar curves, arc-length sampling and signed curvature.

Every curve is stored as a trigonometric polynomial in a raw parameter
``t`` on ``[0, 2*pi)``; circles and ellipses are just short coefficient
lists. That keeps all derivatives (up to fourth order) analytic.

Curvature sign convention::

    gamma = x'' y' - x' y''      (derivatives in arc length)

so a counter-clockwise circle of radius ``R`` has ``gamma = -1/R``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateSpeed,
    GeometryError,
    NotClosed,
    OffsetTooLarge,
    SelfIntersecting,
    TooFewSamples,
)

TWO_PI = 2.0 * np.pi

CLOSURE_RTOL = 1e-10
MIN_SPEED = 1e-12
MIN_SAMPLES = 16
SERIES_FLOOR = 1e-15
# pairwise scans are O(n^2); larger profiles are decimated to this size
MAX_SCAN_POINTS = 2048


@dataclass(frozen=True)
class Curve:
    """Closed curve ``t -> (x(t), y(t))`` given by Fourier coefficients.

    ``x(t) = sum_k x_cos[k] cos(k t) + x_sin[k] sin(k t)`` and likewise
    for ``y``. ``x_sin[0]`` and ``y_sin[0]`` are ignored.
    """

    x_cos: np.ndarray
    x_sin: np.ndarray
    y_cos: np.ndarray
    y_sin: np.ndarray
    kind: str = "fourier"
    params: dict = field(default_factory=dict)
    orientation: str = "ccw"
    period: float = TWO_PI

    def __post_init__(self):
        n = max(len(self.x_cos), len(self.x_sin), len(self.y_cos), len(self.y_sin))
        for name in ("x_cos", "x_sin", "y_cos", "y_sin"):
            c = np.zeros(n)
            v = np.asarray(getattr(self, name), dtype=float)
            c[: len(v)] = v
            object.__setattr__(self, name, c)

    @property
    def n_harmonics(self) -> int:
        return len(self.x_cos) - 1

    def derivative(self, t, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(x^(m)(t), y^(m)(t))`` for derivative order ``m``."""
        t = np.asarray(t, dtype=float)
        k = np.arange(len(self.x_cos), dtype=float)
        phase = np.multiply.outer(t, k) + order * np.pi / 2
        c, s = np.cos(phase), np.sin(phase)
        kp = k**order
        x = c @ (kp * self.x_cos) + s @ (kp * self.x_sin)
        y = c @ (kp * self.y_cos) + s @ (kp * self.y_sin)
        return x, y

    def __call__(self, t):
        return self.derivative(t, 0)

    def signed_area(self) -> float:
        # area = 1/2 * integral of (x y' - y x') dt, exact for trig polynomials
        k = np.arange(len(self.x_cos))
        return float(np.pi * np.sum(k * (self.x_cos * self.y_sin - self.x_sin * self.y_cos)))

    def reversed(self) -> "Curve":
        """The same trace run in the opposite direction (``t -> -t``)."""
        flip = "cw" if self.orientation == "ccw" else "ccw"
        return Curve(self.x_cos, -self.x_sin, self.y_cos, -self.y_sin,
                     kind=self.kind, params=dict(self.params), orientation=flip)


def circle(radius: float = 1.0, center=(0.0, 0.0), orientation: str = "ccw") -> Curve:
    if radius <= 0:
        raise GeometryError(f"circle radius must be positive, got {radius}")
    cv = Curve([center[0], radius], [0.0, 0.0], [center[1], 0.0], [0.0, radius],
               kind="circle", params={"radius": float(radius)})
    return _orient(cv, orientation)


def ellipse(A: float, B: float, center=(0.0, 0.0), orientation: str = "ccw") -> Curve:
    """Ellipse ``(A cos t, B sin t)``."""
    if A <= 0 or B <= 0:
        raise GeometryError(f"semi-axes must be positive, got {(A, B)}")
    cv = Curve([center[0], A], [0.0, 0.0], [center[1], 0.0], [0.0, B],
               kind="ellipse", params={"A": float(A), "B": float(B)})
    return _orient(cv, orientation)


def fourier_curve(x_cos: Sequence[float], x_sin: Sequence[float],
                  y_cos: Sequence[float], y_sin: Sequence[float],
                  orientation: Optional[str] = None) -> Curve:
    """Curve from raw coefficients.

    With ``orientation=None`` the coefficients are taken as given;
    otherwise the parametrization is reversed if needed so that the
    curve runs in the requested direction.
    """
    cv = Curve(x_cos, x_sin, y_cos, y_sin, kind="fourier")
    natural = "ccw" if cv.signed_area() > 0 else "cw"
    object.__setattr__(cv, "orientation", natural)
    if orientation is None:
        return cv
    return _orient(cv, orientation)


def _orient(cv: Curve, orientation: str) -> Curve:
    if orientation not in ("ccw", "cw"):
        raise GeometryError(f"orientation must be 'ccw' or 'cw', got {orientation!r}")
    return cv if cv.orientation == orientation else cv.reversed()


def curve_from_config(cfg: dict) -> Curve:
    """Build a curve from a mapping such as ``{"kind": "circle", "radius": 2}``."""
    kind = cfg.get("kind")
    orientation = cfg.get("orientation", "ccw")
    if kind == "circle":
        return circle(float(cfg.get("radius", 1.0)), tuple(cfg.get("center", (0.0, 0.0))),
                      orientation)
    if kind == "ellipse":
        A, B = cfg["semi_axes"]
        return ellipse(float(A), float(B), tuple(cfg.get("center", (0.0, 0.0))), orientation)
    if kind == "fourier":
        return fourier_curve(cfg["x_cos"], cfg["x_sin"], cfg["y_cos"], cfg["y_sin"],
                             cfg.get("orientation"))
    raise GeometryError(f"unknown curve kind {kind!r}")


# ---------------------------------------------------------------------------
# arc length

@dataclass(frozen=True)
class ArcLengthMap:
    """``s(t) = c0 * t + periodic part``, stored through its Fourier series."""

    curve: Curve
    length: float
    # coefficients of the speed |Gamma'(t)| = sum_k speed_hat[k] e^{ikt}, k >= 0
    speed_hat: np.ndarray
    s: np.ndarray
    t: np.ndarray

    def s_of_t(self, t):
        t = np.asarray(t, dtype=float)
        k = np.arange(1, len(self.speed_hat))
        out = self.speed_hat[0].real * t
        if not len(k):
            return out
        w = self.speed_hat[1:] / (1j * k)
        flat, res = t.reshape(-1), out.reshape(-1)
        # integral of 2 Re(c e^{ikt}) from 0 to t, chunked to bound memory
        for i in range(0, flat.size, 4096):
            z = np.exp(1j * np.multiply.outer(flat[i:i + 4096], k)) - 1.0
            res[i:i + 4096] += 2.0 * np.real(z @ w)
        return res.reshape(t.shape)

    def t_of_s(self, s, tol: float = 1e-14, max_iter: int = 50):
        """Invert ``s(t)`` by Newton's method (``s'(t)`` is the speed)."""
        s = np.asarray(s, dtype=float)
        turns = np.floor(s / self.length)
        r = s - turns * self.length
        t = r / self.length * TWO_PI
        for _ in range(max_iter):
            f = self.s_of_t(t) - r
            dx, dy = self.curve.derivative(t, 1)
            step = f / np.hypot(dx, dy)
            t = t - step
            if np.all(np.abs(step) < tol):
                break
        return t + turns * TWO_PI


def _speed_coefficients(curve: Curve, n_min: int) -> np.ndarray:
    m = max(256, 4 * n_min, 8 * (curve.n_harmonics + 1))
    m = 1 << int(np.ceil(np.log2(m)))
    while True:
        t = np.arange(m) * TWO_PI / m
        dx, dy = curve.derivative(t, 1)
        v = np.hypot(dx, dy)
        if v.min() < MIN_SPEED:
            raise DegenerateSpeed(f"|Gamma'(t)| = {v.min():.3e} below {MIN_SPEED}")
        c = np.fft.rfft(v) / m
        tail = np.abs(c[-max(4, m // 16):]).max()
        if tail < SERIES_FLOOR * abs(c[0]) or m >= 1 << 20:
            break
        m *= 2
    # everything below the floor is roundoff
    keep = np.nonzero(np.abs(c) > SERIES_FLOOR * abs(c[0]))[0]
    return c[: keep[-1] + 1]


def arc_length_reparametrize(curve: Curve, n_samples: int) -> ArcLengthMap:
    """Raw parameters ``t_i`` of ``n_samples`` points equally spaced in arc length."""
    c = _speed_coefficients(curve, n_samples)
    length = TWO_PI * c[0].real
    s = np.arange(n_samples) * length / n_samples
    amap = ArcLengthMap(curve, length, c, s, np.zeros(n_samples))
    t = amap.t_of_s(s)
    t[0] = 0.0
    if np.any(np.diff(t) <= 0) or t[-1] >= TWO_PI:
        raise DegenerateSpeed("arc-length map is not strictly increasing")
    return ArcLengthMap(curve, length, c, s, t)


# ---------------------------------------------------------------------------
# profile

@dataclass(frozen=True)
class GeometryProfile:
    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    ddx: np.ndarray
    ddy: np.ndarray
    gamma: np.ndarray
    gamma_prime: np.ndarray
    gamma_double_prime: np.ndarray
    length: float
    gamma_plus: float
    max_halfwidth: float
    curve: Curve = field(repr=False)
    arc_map: ArcLengthMap = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def ds(self) -> float:
        return self.length / self.n

    def resample(self, n_samples: int) -> "GeometryProfile":
        if n_samples == self.n:
            return self
        return build_profile(self.curve, n_samples)

    def curvature_at(self, s) -> np.ndarray:
        t = self.arc_map.t_of_s(s)
        return _curvature_from_t(self.curve, t)[0]

    def summary(self) -> dict:
        return {
            "kind": self.curve.kind,
            "params": self.curve.params,
            "orientation": self.curve.orientation,
            "n_samples": self.n,
            "length": self.length,
            "gamma_plus": self.gamma_plus,
            "max_halfwidth": self.max_halfwidth,
        }


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _curvature_from_t(curve: Curve, t):
    """Curvature and its first two arc-length derivatives from raw-parameter derivatives."""
    x1, y1 = curve.derivative(t, 1)
    x2, y2 = curve.derivative(t, 2)
    x3, y3 = curve.derivative(t, 3)
    x4, y4 = curve.derivative(t, 4)
    w = x1 * x1 + y1 * y1
    w1 = 2 * (x1 * x2 + y1 * y2)
    w2 = 2 * (x2 * x2 + y2 * y2 + x1 * x3 + y1 * y3)
    N = _cross(x2, y2, x1, y1)
    N1 = _cross(x3, y3, x1, y1)
    N2 = _cross(x4, y4, x1, y1) + _cross(x3, y3, x2, y2)
    v = np.sqrt(w)
    f = N * w**-1.5
    f1 = N1 * w**-1.5 - 1.5 * N * w**-2.5 * w1
    f2 = (N2 * w**-1.5 - 3.0 * N1 * w**-2.5 * w1
          + 3.75 * N * w**-3.5 * w1**2 - 1.5 * N * w**-2.5 * w2)
    v1 = w1 / (2 * v)
    g1 = f1 / v
    g2 = f2 / w - f1 * v1 / v**3
    return f, g1, g2


def _scan_indices(n: int) -> np.ndarray:
    step = max(1, int(np.ceil(n / MAX_SCAN_POINTS)))
    return np.arange(0, n, step)


def _far_pair_min_distance(x, y, s, length, min_sep) -> float:
    """Smallest distance between samples whose arc separation exceeds ``min_sep``."""
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    d = np.hypot(dx, dy)
    sep = np.abs(s[:, None] - s[None, :])
    sep = np.minimum(sep, length - sep)
    d[sep <= min_sep] = np.inf
    return float(d.min())


def check_simple(x, y, s, length) -> None:
    """Reject self-intersections with a pairwise scan.

    Pairs closer than one grid spacing in the plane while more than four
    spacings apart along the curve are flagged.
    """
    idx = _scan_indices(len(s))
    h = length / len(idx)
    dmin = _far_pair_min_distance(x[idx], y[idx], s[idx], length, 4 * h)
    if dmin < h:
        raise SelfIntersecting(
            f"points {dmin:.3e} apart but more than {4 * h:.3e} apart along the curve")


def max_injectivity_halfwidth(profile_or_data, *, x=None, y=None, s=None,
                              length=None, gamma_plus=None) -> float:
    """Conservative half-width for which the tube map is injective.

    Returns ``min(1 / (2 gamma_plus), d / 2)`` where ``d`` is the smallest
    distance between curve points more than ``pi / gamma_plus`` apart in
    arc length (half the circumference of the tightest osculating circle).
    That guarantees ``1 + u gamma(s) >= 1/2`` for ``|u| <= a``.
    """
    if isinstance(profile_or_data, GeometryProfile):
        p = profile_or_data
        x, y, s, length, gamma_plus = p.x, p.y, p.s, p.length, p.gamma_plus
    cap = np.inf if gamma_plus == 0 else 1.0 / (2.0 * gamma_plus)
    min_sep = min(np.pi / gamma_plus if gamma_plus > 0 else length / 4, length / 2)
    idx = _scan_indices(len(s))
    # allow for grid resolution so the antipodal pairs of a circle survive
    h = length / len(idx)
    dmin = _far_pair_min_distance(x[idx], y[idx], s[idx], length, min_sep - 0.5 * h)
    return float(min(cap, 0.5 * dmin))


def _check_closed(curve: Curve) -> None:
    for m in range(5):
        a = np.array(curve.derivative(0.0, m))
        b = np.array(curve.derivative(curve.period, m))
        scale = max(1.0, float(np.abs(a).max()))
        if np.abs(a - b).max() > CLOSURE_RTOL * scale:
            raise NotClosed(f"derivative of order {m} does not match at the seam")


def build_profile(curve: Curve, n_samples: int) -> GeometryProfile:
    """Sample the curve at ``n_samples`` points equally spaced in arc length."""
    if n_samples < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    _check_closed(curve)
    amap = arc_length_reparametrize(curve, n_samples)
    t = amap.t
    x, y = curve(t)
    x1, y1 = curve.derivative(t, 1)
    x2, y2 = curve.derivative(t, 2)
    w = x1 * x1 + y1 * y1
    v = np.sqrt(w)
    dx, dy = x1 / v, y1 / v
    proj = (x1 * x2 + y1 * y2) / w
    ddx, ddy = (x2 - proj * x1) / w, (y2 - proj * y1) / w
    gamma, gp, gpp = _curvature_from_t(curve, t)
    gamma_plus = float(np.abs(gamma).max())
    check_simple(x, y, amap.s, amap.length)
    amax = max_injectivity_halfwidth(None, x=x, y=y, s=amap.s, length=amap.length,
                                     gamma_plus=gamma_plus)
    return GeometryProfile(amap.s, t, x, y, dx, dy, ddx, ddy, gamma, gp, gpp,
                           amap.length, gamma_plus, amax, curve, amap)


# ---------------------------------------------------------------------------
# tube coordinates

def tube_map(profile: GeometryProfile, s, u):
    """Point ``Gamma(s) + u * (Gamma_2'(s), -Gamma_1'(s))``.

    For a counter-clockwise curve the offset direction is the outer
    normal. The area element of this map is ``1 - u*gamma``; the
    transformed forms are written with ``g = 1 + u*gamma``, which is the
    same geometry after the reflection ``u -> -u``.
    """
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= profile.max_halfwidth):
        raise OffsetTooLarge(f"|u| must stay below {profile.max_halfwidth:.6g}")
    t = profile.arc_map.t_of_s(s)
    x, y = profile.curve(t)
    x1, y1 = profile.curve.derivative(t, 1)
    v = np.hypot(x1, y1)
    return x + u * y1 / v, y - u * x1 / v


def metric_factor(profile: GeometryProfile, s, u):
    """``g(s, u) = 1 + u * gamma(s)``."""
    return 1.0 + np.asarray(u) * profile.curvature_at(s)


def profile_to_csv(profile: GeometryProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "gamma", "gamma_prime", "gamma_double_prime"])
        for row in zip(profile.s, profile.gamma, profile.gamma_prime,
                       profile.gamma_double_prime):
            w.writerow([repr(float(v)) for v in row])
