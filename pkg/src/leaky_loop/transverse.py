"""Transverse problems on ``(-a, 0) U (0, a)``.

Two outer boundary variants:

* Dirichlet, ``f(+-a) = 0``: the negative eigenvalue ``-kappa^2`` solves
  ``kappa = (2/beta) tanh(kappa a)``.
* Robin, ``f'(+-a) = -+gp f(+-a)``: with ``Z = (kappa - gp)/(kappa + gp)``
  the condition is ``kappa = (2/beta) (1 + Z e^{-2 kappa a}) / (1 - Z e^{-2 kappa a})``.

Both roots are found by bisection on a monotone reformulation followed by
Newton polishing. :func:`discretize_transverse` assembles the quadratic
form with P1 elements and a duplicated node at ``u = 0`` instead; it is the
independent route used to cross-check the roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp
from scipy.optimize import bisect
from scipy.sparse.linalg import eigsh

from ._arpack import start_vector
from .errors import ConvergenceFailure, CouplingTooWeak, GridTooCoarse, NoNegativeEigenvalue

ROOT_RTOL = 1e-12
MIN_CELLS = 32
# pencils larger than this use shift-invert Lanczos when few eigenvalues are wanted
SPARSE_FROM = 600


@dataclass(frozen=True)
class TransverseProblem:
    """One fibre ``T(s)``.

    ``jump_sign`` multiplies the ``gamma(s)/2 (|f(0+)|^2 - |f(0-)|^2)`` term:
    ``+1`` in the upper (Dirichlet) form, ``-1`` in the lower (Robin) one.
    """

    halfwidth: float
    beta: float
    boundary: str = "dirichlet"
    gamma_plus: float = 0.0
    gamma_s: float = 0.0
    jump_sign: float | None = None

    def __post_init__(self):
        if self.halfwidth <= 0 or self.beta <= 0:
            raise ValueError("halfwidth and beta must be positive")
        if self.boundary not in ("dirichlet", "robin"):
            raise ValueError(f"boundary must be 'dirichlet' or 'robin', got {self.boundary!r}")
        if self.jump_sign is None:
            object.__setattr__(self, "jump_sign", 1.0 if self.boundary == "dirichlet" else -1.0)

    @property
    def dirichlet_condition(self) -> bool:
        """``beta < 2a``: a negative Dirichlet eigenvalue exists."""
        return self.beta < 2 * self.halfwidth

    @property
    def robin_condition(self) -> bool:
        return 2.0 / self.beta > self.gamma_plus


@dataclass(frozen=True)
class TransverseRoot:
    kappa: float
    kappa_asymptotic: float
    residual: float
    boundary: str
    halfwidth: float
    beta: float

    @property
    def eigenvalue(self) -> float:
        return -self.kappa**2

    def as_row(self) -> dict:
        return {
            "beta": self.beta,
            "a": self.halfwidth,
            "boundary": self.boundary,
            "kappa_root": self.kappa,
            "kappa_asym": self.kappa_asymptotic,
            "residual": self.residual,
        }


def _tanhc(x):
    """``tanh(x) / x`` with the removable singularity filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    return np.where(small, 1 - x * x / 3, np.tanh(xs) / xs)


def _polish(f, df, x, lo, hi, steps=2):
    for _ in range(steps):
        d = df(x)
        if d == 0:
            break
        nx = x - f(x) / d
        if not lo <= nx <= hi:
            break
        x = nx
    return x


def solve_dirichlet_root(a: float, beta: float) -> TransverseRoot:
    """Unique root of ``kappa = (2/beta) tanh(kappa a)`` in ``(0, 2/beta)``."""
    if beta >= 2 * a:
        raise NoNegativeEigenvalue(f"beta={beta} >= 2a={2 * a}: no negative eigenvalue")
    k0 = 2.0 / beta

    # beta - (2/kappa) tanh(kappa a) increases from beta - 2a < 0 to a positive value at 2/beta
    def g(k):
        return beta - 2 * a * float(_tanhc(k * a))

    if g(k0) <= 0:
        # tanh(2a/beta) rounds to 1: the root is 2/beta to double precision
        k = k0
    else:
        k = bisect(g, 0.0, k0, xtol=1e-13 * k0, maxiter=500)

    def f(k):
        return k - k0 * np.tanh(k * a)

    def df(k):
        return 1 - k0 * a / np.cosh(k * a) ** 2

    k = _polish(f, df, k, 0.0, k0)
    residual = abs(f(k)) / k
    if residual > ROOT_RTOL:
        raise ConvergenceFailure(f"Dirichlet root residual {residual:.3e}")
    asym = k0 - 2 * k0 * np.exp(-4 * a / beta)
    return TransverseRoot(float(k), float(asym), float(residual), "dirichlet", a, beta)


def _robin_xi(k, a, gp):
    Z = (k - gp) / (k + gp)
    e = np.exp(-2 * k * a)
    xi = Z * e
    dxi = e * (2 * gp / (k + gp) ** 2 - 2 * a * Z)
    return xi, dxi


def solve_robin_root(a: float, beta: float, gamma_plus: float) -> TransverseRoot:
    """Unique root of the Robin spectral condition, larger than ``2/beta``."""
    k0 = 2.0 / beta
    if k0 <= gamma_plus:
        raise CouplingTooWeak(f"2/beta={k0} must exceed gamma_plus={gamma_plus}")

    def g(k):
        xi, _ = _robin_xi(k, a, gamma_plus)
        return beta - (2.0 / k) * (1 + xi) / (1 - xi)

    hi = 2 * k0
    while g(hi) <= 0:
        hi *= 2
    if g(k0) >= 0:
        # e^{-4a/beta} is below roundoff: the root is 2/beta to double precision
        k = k0
    else:
        k = bisect(g, k0, hi, xtol=1e-13 * k0, maxiter=500)

    def f(k):
        xi, _ = _robin_xi(k, a, gamma_plus)
        return k * (1 - xi) - k0 * (1 + xi)

    def df(k):
        xi, dxi = _robin_xi(k, a, gamma_plus)
        return (1 - xi) - k * dxi - k0 * dxi

    k = _polish(f, df, k, k0, hi)
    residual = abs(f(k)) / k
    if residual > ROOT_RTOL:
        raise ConvergenceFailure(f"Robin root residual {residual:.3e}")
    ratio = (2 - beta * gamma_plus) / (2 + beta * gamma_plus)
    asym = k0 + 2 * k0 * ratio * np.exp(-4 * a / beta)
    return TransverseRoot(float(k), float(asym), float(residual), "robin", a, beta)


def robin_gap_bound(a: float, beta: float, gamma_plus: float) -> float:
    """Lower edge of the eigenvalue-free window ``[0, min(gp/(2a), (pi/(4a))^2))``."""
    if not 0 < beta < 2 * a:
        raise ValueError(f"the gap bound needs 0 < beta < 2a, got beta={beta}, a={a}")
    return min(gamma_plus / (2 * a), (np.pi / (4 * a)) ** 2)


# ---------------------------------------------------------------------------
# P1 discretization

def graded_nodes(a: float, n_cells: int, grading: float = 0.0) -> np.ndarray:
    """Nodes ``0 = u_0 < ... < u_n = a`` clustered towards ``u = 0``.

    ``grading = 0`` is uniform; larger values shrink the cells next to the
    interface exponentially.
    """
    xi = np.linspace(0.0, 1.0, n_cells + 1)
    if grading == 0:
        return a * xi
    return a * np.expm1(grading * xi) / np.expm1(grading)


def p1_matrices(nodes: np.ndarray):
    """Stiffness, consistent mass and lumped mass of P1 elements on ``nodes``."""
    h = np.diff(nodes)
    n = len(nodes)
    k_main = np.zeros(n)
    k_main[:-1] += 1 / h
    k_main[1:] += 1 / h
    m_main = np.zeros(n)
    m_main[:-1] += h / 3
    m_main[1:] += h / 3
    K = sp.diags([-1 / h, k_main, -1 / h], [-1, 0, 1])
    M = sp.diags([h / 6, m_main, h / 6], [-1, 0, 1])
    lumped = np.zeros(n)
    lumped[:-1] += h / 2
    lumped[1:] += h / 2
    return K.tocsr(), M.tocsr(), lumped


@dataclass(frozen=True)
class TransverseMesh:
    """Nodes of both half-intervals; index ``n`` is ``0-`` and ``n + 1`` is ``0+``."""

    u: np.ndarray
    minus: int
    plus: int
    keep: np.ndarray


def transverse_pencil(problem: TransverseProblem, n_grid: int, grading: float = 0.0):
    """Form matrix ``A``, mass ``B`` and the mesh, boundary DOFs already removed."""
    if n_grid < MIN_CELLS:
        raise GridTooCoarse(f"need at least {MIN_CELLS} cells per half, got {n_grid}")
    a, beta = problem.halfwidth, problem.beta
    x = graded_nodes(a, n_grid, grading)
    u = np.concatenate([-x[::-1], x])
    Kh, Mh, _ = p1_matrices(x)
    rev = np.arange(n_grid, -1, -1)
    K = sp.block_diag([Kh[rev][:, rev], Kh]).tolil()
    M = sp.block_diag([Mh[rev][:, rev], Mh]).tocsr()
    m, p = n_grid, n_grid + 1

    K[m, m] -= 1 / beta
    K[p, p] -= 1 / beta
    K[m, p] += 1 / beta
    K[p, m] += 1 / beta
    half_g = 0.5 * problem.jump_sign * problem.gamma_s
    K[p, p] += half_g
    K[m, m] -= half_g

    keep = np.ones(len(u), dtype=bool)
    if problem.boundary == "dirichlet":
        keep[0] = keep[-1] = False
    else:
        # f'(+-a) = -+gp f(+-a) contributes +gp |f(+-a)|^2 to the form
        K[0, 0] += problem.gamma_plus
        K[-1, -1] += problem.gamma_plus
    idx = np.nonzero(keep)[0]
    A = K.tocsr()[idx][:, idx]
    B = M[idx][:, idx]
    mesh = TransverseMesh(u, m, p, keep)
    return A, B, mesh


def _lowest_sparse(A, B, k, problem):
    # every eigenvalue of the form lies above -(2/beta + |gamma_s| + gp)^2
    bound = 2.0 / problem.beta + abs(problem.gamma_s) + problem.gamma_plus + 1.0
    sigma = -2.0 * bound**2
    vals, vecs = eigsh(A.tocsc(), k=k, M=B.tocsc(), sigma=sigma, which="LM", tol=0,
                       v0=start_vector(A.shape[0]))
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def discretize_transverse(problem: TransverseProblem, n_grid: int, grading: float = 0.0,
                          n_eigs: int | None = None, return_vectors: bool = False):
    """Eigenvalues of the discretized transverse form, ascending.

    ``n_grid`` is the number of cells on each half-interval. With
    ``return_vectors`` the eigenvectors are returned as well, expanded to
    all nodes of the mesh (zeros on Dirichlet edges).
    """
    A, B, mesh = transverse_pencil(problem, n_grid, grading)
    if n_eigs is not None and A.shape[0] > SPARSE_FROM and n_eigs <= 20:
        vals, vecs = _lowest_sparse(A, B, n_eigs, problem)
        if not return_vectors:
            return vals
        full = np.zeros((len(mesh.u), n_eigs))
        full[mesh.keep] = vecs
        return vals, full, mesh
    subset = None if n_eigs is None else [0, n_eigs - 1]
    if not return_vectors:
        return sl.eigh(A.toarray(), B.toarray(), eigvals_only=True, subset_by_index=subset)
    vals, vecs = sl.eigh(A.toarray(), B.toarray(), subset_by_index=subset)
    full = np.zeros((len(mesh.u), vecs.shape[1]))
    full[mesh.keep] = vecs
    return vals, full, mesh
