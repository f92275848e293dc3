"""Periodic 1D Schroedinger operators along the loop.

Operators of the form ``-c d^2/ds^2 + V(s)`` on ``[0, L)`` with periodic
boundary conditions:

* ``S``   : ``c = 1``, ``V = -gamma^2 / 4``
* ``S0``  : ``c = 1``, ``V = 0`` (answered in closed form)
* ``U+``  : ``c = (1 - a gp)^-2``, ``V = a (gamma'')_+ / (2 (1 - a gp)^3) - gamma^2 / (4 (1 + a gp)^2)``
* ``U-``  : ``c = (1 + a gp)^-2``,
  ``V = -a (gamma'')_+ / (2 (1 - a gp)^3) - 5 (a (gamma')_+)^2 / (4 (1 - a gp)^4) - gamma^2 / (4 (1 - a gp)^2)``

with ``gp = sup |gamma|``. The discretization is Fourier-Galerkin in the
real basis ``{1, cos(k w s), sin(k w s)}``; a second-order finite
difference solver is kept as an independent cross-check.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from ._arpack import start_vector
from .errors import ConvergenceFailure, GridTooCoarse, HalfwidthTooLarge
from .geometry import GeometryProfile

RESIDUAL_TOL = 1e-9
MULTIPLET_RTOL = 1e-8
# above this size the dense solve switches to Lanczos
DENSE_LIMIT = 8192


@dataclass(frozen=True)
class Operator1DSpec:
    kind: str
    halfwidth: float
    prefactor: float
    potential: np.ndarray
    length: float
    profile: GeometryProfile = field(repr=False, compare=False)

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "halfwidth": self.halfwidth,
            "prefactor": self.prefactor,
            "length": self.length,
            "n_samples": len(self.potential),
            "curve": self.profile.summary(),
        }


@dataclass(frozen=True)
class Spectrum1D:
    eigenvalues: np.ndarray
    n_modes: int
    n_grid: int
    kind: str = ""
    metadata: dict = field(default_factory=dict)

    def multiplets(self, rtol: float = MULTIPLET_RTOL) -> list[list[int]]:
        """Group indices of (numerically) degenerate eigenvalues."""
        groups: list[list[int]] = []
        for i, lam in enumerate(self.eigenvalues):
            if groups:
                prev = self.eigenvalues[groups[-1][-1]]
                if abs(lam - prev) <= rtol * max(1.0, abs(lam)):
                    groups[-1].append(i)
                    continue
            groups.append([i])
        return groups

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_modes": self.n_modes,
            "n_grid": self.n_grid,
            "metadata": self.metadata,
            "eigenvalues": [float(v) for v in self.eigenvalues],
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "eigenvalue"])
            for j, v in enumerate(self.eigenvalues, start=1):
                w.writerow([j, repr(float(v))])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# operator construction

def build_s(profile: GeometryProfile) -> Operator1DSpec:
    return Operator1DSpec("S", 0.0, 1.0, -0.25 * profile.gamma**2, profile.length, profile)


def build_s0(profile: GeometryProfile) -> Operator1DSpec:
    return Operator1DSpec("S0", 0.0, 1.0, np.zeros(profile.n), profile.length, profile)


def _check_halfwidth(profile: GeometryProfile, a: float) -> float:
    gp = profile.gamma_plus
    if a <= 0:
        raise HalfwidthTooLarge(f"half-width must be positive, got {a}")
    if gp > 0 and a >= 1.0 / (2.0 * gp):
        raise HalfwidthTooLarge(f"need a < 1/(2 gamma_plus) = {1 / (2 * gp):.6g}, got {a}")
    return gp


def build_u_plus(profile: GeometryProfile, a: float) -> Operator1DSpec:
    gp = _check_halfwidth(profile, a)
    gpp_pos = np.maximum(profile.gamma_double_prime, 0.0)
    V = a * gpp_pos / (2 * (1 - a * gp) ** 3) - profile.gamma**2 / (4 * (1 + a * gp) ** 2)
    return Operator1DSpec("U_plus", a, (1 - a * gp) ** -2, V, profile.length, profile)


def build_u_minus(profile: GeometryProfile, a: float) -> Operator1DSpec:
    gp = _check_halfwidth(profile, a)
    gpp_pos = np.maximum(profile.gamma_double_prime, 0.0)
    gp_pos = np.maximum(profile.gamma_prime, 0.0)
    V = (-a * gpp_pos / (2 * (1 - a * gp) ** 3)
         - 5 * (a * gp_pos) ** 2 / (4 * (1 - a * gp) ** 4)
         - profile.gamma**2 / (4 * (1 - a * gp) ** 2))
    return Operator1DSpec("U_minus", a, (1 + a * gp) ** -2, V, profile.length, profile)


def build_operator(profile: GeometryProfile, kind: str, a: float = 0.0) -> Operator1DSpec:
    builders = {"S": build_s, "S0": build_s0}
    if kind in builders:
        return builders[kind](profile)
    if kind == "U_plus":
        return build_u_plus(profile, a)
    if kind == "U_minus":
        return build_u_minus(profile, a)
    raise ValueError(f"unknown operator kind {kind!r}")


# ---------------------------------------------------------------------------
# solvers

def free_eigenvalues(length: float, n_modes: int) -> np.ndarray:
    """``4 floor(j/2)^2 pi^2 / L^2`` for ``j = 1..n_modes``."""
    j = np.arange(1, n_modes + 1)
    return 4.0 * (j // 2) ** 2 * np.pi**2 / length**2


def _potential_coefficients(V: np.ndarray, m_max: int) -> np.ndarray:
    """Complex Fourier coefficients ``V_m = (1/L) int V e^{-i m w s}`` for ``0 <= m <= m_max``."""
    n = len(V)
    c = np.fft.rfft(V) / n
    if n % 2 == 0:
        c[-1] *= 0.5  # Nyquist mode is shared between +n/2 and -n/2
    out = np.zeros(m_max + 1, dtype=complex)
    k = min(m_max, len(c) - 1)
    out[: k + 1] = c[: k + 1]
    return out


def galerkin_matrix(spec: Operator1DSpec, n_grid: int) -> np.ndarray:
    """Real symmetric Galerkin matrix in the orthonormal basis ``1, cos k, sin k, ...``.

    ``n_grid`` is rounded up to the odd size ``2K + 1``.
    """
    K = n_grid // 2
    w = 2 * np.pi / spec.length
    Vh = _potential_coefficients(spec.potential, 2 * K)
    re, im = Vh.real, Vh.imag

    k = np.arange(1, K + 1)
    kk, ll = np.meshgrid(k, k, indexing="ij")
    dif, tot = np.abs(kk - ll), kk + ll
    sgn = np.sign(ll - kk)

    cc = re[dif] + re[tot]
    ss = re[dif] - re[tot]
    # <cos k|V|sin l> = -Im V_{l+k} - Im V_{l-k}, Im V_{-m} = -Im V_m
    cs = -im[tot] - sgn * im[dif]

    n = 2 * K + 1
    H = np.empty((n, n))
    H[0, 0] = re[0]
    H[0, 1::2] = H[1::2, 0] = np.sqrt(2) * re[k]
    H[0, 2::2] = H[2::2, 0] = -np.sqrt(2) * im[k]
    H[1::2, 1::2] = cc
    H[2::2, 2::2] = ss
    H[1::2, 2::2] = cs
    H[2::2, 1::2] = cs.T
    kin = spec.prefactor * (k * w) ** 2
    H[np.arange(1, n, 2), np.arange(1, n, 2)] += kin
    H[np.arange(2, n, 2), np.arange(2, n, 2)] += kin
    return H


def _check_residuals(H, vals, vecs) -> None:
    scale = max(1.0, float(np.abs(np.diag(H)).max()))
    res = np.linalg.norm(H @ vecs - vecs * vals, axis=0)
    worst = float(res.max()) / scale
    if worst > RESIDUAL_TOL:
        raise ConvergenceFailure(f"eigen-residual {worst:.3e} exceeds {RESIDUAL_TOL}")


def solve_periodic(spec: Operator1DSpec, n_modes: int, n_grid: int | None = None) -> Spectrum1D:
    """Lowest ``n_modes`` eigenvalues of the periodic operator ``spec``."""
    if n_grid is None:
        n_grid = max(4 * n_modes, len(spec.potential) // 2) + 1
    if n_grid < 4 * n_modes:
        raise GridTooCoarse(f"n_grid={n_grid} must be at least 4*n_modes={4 * n_modes}")
    meta = spec.metadata()
    if spec.kind == "S0":
        return Spectrum1D(free_eigenvalues(spec.length, n_modes), n_modes, 0, "S0", meta)

    H = galerkin_matrix(spec, n_grid)
    if H.shape[0] <= DENSE_LIMIT:
        vals, vecs = sl.eigh(H, subset_by_index=[0, n_modes - 1])
    else:
        vals, vecs = eigsh(H, k=n_modes, which="SA", tol=0, v0=start_vector(H.shape[0]))
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    _check_residuals(H, vals, vecs)
    return Spectrum1D(vals, n_modes, H.shape[0], spec.kind, meta)


def solve_periodic_fd(spec: Operator1DSpec, n_modes: int) -> np.ndarray:
    """Second-order finite differences on the sample grid of ``spec``.

    Independent of the Galerkin path; used to cross-check it.
    """
    n = len(spec.potential)
    h = spec.length / n
    main = 2.0 * spec.prefactor / h**2 + spec.potential
    off = -spec.prefactor / h**2 * np.ones(n)
    T = sp.diags([off[:-1], main, off[:-1]], [-1, 0, 1], format="lil")
    T[0, n - 1] = T[n - 1, 0] = -spec.prefactor / h**2
    T = T.tocsc()
    sigma = float(spec.potential.min()) - 1.0
    vals = eigsh(T, k=n_modes, sigma=sigma, which="LM", return_eigenvectors=False,
                 v0=start_vector(n))
    return np.sort(vals)
