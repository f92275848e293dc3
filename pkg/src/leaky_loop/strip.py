"""Two-dimensional check on the tube ``(0, L) x ((-a, 0) U (0, a))``.

The transformed quadratic forms are discretized directly:

    q_D[f] = ||d_s f / g||^2 + ||d_u f||^2 + (f, V f)
             - 1/beta int |f(s,0+) - f(s,0-)|^2 ds
             + 1/2 int gamma (|f(s,0+)|^2 - |f(s,0-)|^2) ds

with ``g = 1 + u gamma`` and
``V = u gamma'' / (2 g^3) - 5 (u gamma')^2 / (4 g^4) - gamma^2 / (4 g^2)``.
The Neumann variant adds the outer-edge terms

    - int gamma / (2 (1 + a gamma)) |f(s,a)|^2 ds + int gamma / (2 (1 - a gamma)) |f(s,-a)|^2 ds.

Discretization: periodic second-order differences in ``s`` (coefficient
``1/g^2`` sampled at cell midpoints), P1 elements in ``u`` on a mesh graded
towards the interface, two node layers at ``u = 0``. The measure is
``ds du``, so ``B`` is a plain mass matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from ._arpack import start_vector
from .errors import (
    ConvergenceFailure,
    FactorizationFailure,
    HalfwidthTooLarge,
    MeshTooCoarse,
)
from .geometry import GeometryProfile, build_profile
from .transverse import graded_nodes, p1_matrices

MIN_NS, MIN_NU = 32, 16
RESIDUAL_TOL = 1e-8
DEFAULT_GRADING = 2.0


@dataclass(frozen=True)
class StripMesh:
    n_s: int
    n_u: int
    a: float
    s: np.ndarray
    u: np.ndarray  # all u-nodes, 0- at index n_u and 0+ at n_u + 1
    g: np.ndarray  # (n_s, n_nodes)
    V: np.ndarray  # (n_s, n_nodes)
    gamma: np.ndarray
    grading: float
    keep: np.ndarray  # u-nodes carrying unknowns

    @property
    def n_nodes(self) -> int:
        return len(self.u)

    @property
    def minus(self) -> int:
        return self.n_u

    @property
    def plus(self) -> int:
        return self.n_u + 1

    def metadata(self) -> dict:
        return {"n_s": self.n_s, "n_u": self.n_u, "a": self.a, "grading": self.grading}


@dataclass
class StripPencil:
    A: sp.csr_matrix
    B: sp.csr_matrix
    mesh: StripMesh
    boundary: str
    beta: float

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass
class StripSpectrum:
    boundary: str
    eigenvalues: np.ndarray
    residuals: np.ndarray
    mesh: dict
    beta: float
    vectors: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "boundary": self.boundary,
            "beta": self.beta,
            "mesh": self.mesh,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residuals": [float(v) for v in self.residuals],
        }


def _geometric_potential(u, gamma, gp, gpp):
    g = 1.0 + u * gamma
    return g, u * gpp / (2 * g**3) - 5 * (u * gp) ** 2 / (4 * g**4) - gamma**2 / (4 * g**2)


def build_mesh(profile: GeometryProfile, a: float, n_s: int, n_u: int,
               grading: float = DEFAULT_GRADING, boundary: str = "dirichlet") -> StripMesh:
    if n_s < MIN_NS or n_u < MIN_NU:
        raise MeshTooCoarse(f"mesh ({n_s}, {n_u}) below the minimum ({MIN_NS}, {MIN_NU})")
    if a > profile.max_halfwidth:
        raise HalfwidthTooLarge(f"a={a} exceeds the injectivity half-width {profile.max_halfwidth:.6g}")
    prof = profile.resample(n_s)
    x = graded_nodes(a, n_u, grading)
    u = np.concatenate([-x[::-1], x])
    gamma = prof.gamma[:, None]
    g, V = _geometric_potential(u[None, :], gamma, prof.gamma_prime[:, None],
                                prof.gamma_double_prime[:, None])
    keep = np.ones(len(u), dtype=bool)
    if boundary == "dirichlet":
        keep[0] = keep[-1] = False
    return StripMesh(n_s, n_u, a, prof.s, u, g, V, prof.gamma, grading, keep)


def assemble_form(profile: GeometryProfile, beta: float, a: float, n_s: int, n_u: int,
                  boundary: str = "dirichlet", grading: float = DEFAULT_GRADING,
                  edge_sign: float = 1.0, jump_sign: float = 1.0) -> StripPencil:
    """Sparse symmetric pencil ``(A, B)`` of the Dirichlet or Neumann form.

    ``edge_sign`` flips the two outer-edge integrals of the Neumann form
    and ``jump_sign`` the ``gamma/2`` interface term; both default to the
    forms as written above.
    """
    if boundary not in ("dirichlet", "neumann"):
        raise ValueError(f"boundary must be 'dirichlet' or 'neumann', got {boundary!r}")
    mesh = build_mesh(profile, a, n_s, n_u, grading, boundary)
    nn = mesh.n_nodes
    hs = profile.length / n_s

    x = graded_nodes(a, n_u, grading)
    Kh, Mh, lh = p1_matrices(x)
    rev = np.arange(n_u, -1, -1)
    Ku = sp.block_diag([Kh[rev][:, rev], Kh]).tocsr()
    Mu = sp.block_diag([Mh[rev][:, rev], Mh]).tocsr()
    lumped = np.concatenate([lh[::-1], lh])

    Is = sp.identity(n_s, format="csr")
    A = hs * sp.kron(Is, Ku)
    B = hs * sp.kron(Is, Mu)

    # ||d_s f / g||^2 with 1/g^2 at s-midpoints, lumped weights in u
    mid = build_profile(profile.curve, 2 * n_s).gamma[1::2]
    w_mid = 1.0 / (1.0 + mid[:, None] * mesh.u[None, :]) ** 2
    D = sp.diags([-np.ones(n_s), np.ones(n_s - 1)], [0, 1], shape=(n_s, n_s)).tolil()
    D[n_s - 1, 0] = 1.0
    Dfull = sp.kron(D.tocsr(), sp.identity(nn, format="csr"))
    W = sp.diags((w_mid * lumped[None, :]).ravel() / hs)
    A = A + Dfull.T @ W @ Dfull

    # potential, lumped
    A = A + sp.diags((hs * mesh.V * lumped[None, :]).ravel())

    # interface and outer-edge terms (trapezoid rule in s)
    i = np.arange(n_s)
    m, p = i * nn + mesh.minus, i * nn + mesh.plus
    half_g = 0.5 * jump_sign * mesh.gamma
    rows = np.concatenate([m, p, m, p, m, p])
    cols = np.concatenate([m, p, p, m, m, p])
    vals = hs * np.concatenate([
        -np.ones(n_s) / beta, -np.ones(n_s) / beta, np.ones(n_s) / beta, np.ones(n_s) / beta,
        -half_g, half_g,
    ])
    if boundary == "neumann":
        top, bot = i * nn + nn - 1, i * nn
        gm = mesh.gamma
        rows = np.concatenate([rows, top, bot])
        cols = np.concatenate([cols, top, bot])
        vals = np.concatenate([vals, hs * edge_sign * np.concatenate([
            -gm / (2 * (1 + a * gm)), gm / (2 * (1 - a * gm))])])
    A = A + sp.coo_matrix((vals, (rows, cols)), shape=A.shape)

    idx = np.nonzero(np.tile(mesh.keep, n_s))[0]
    A = A.tocsr()[idx][:, idx]
    B = B.tocsr()[idx][:, idx]
    # exact symmetry: every contribution above is symmetric up to summation order
    A = ((A + A.T) * 0.5).tocsr()
    B = ((B + B.T) * 0.5).tocsr()
    return StripPencil(A, B, mesh, boundary, beta)


def solve_strip(pencil: StripPencil, n_modes: int, sigma: Optional[float] = None,
                return_vectors: bool = False) -> StripSpectrum:
    """Lowest ``n_modes`` eigenpairs by shift-invert Lanczos below the spectrum."""
    if n_modes > 0.1 * pencil.dim:
        raise ValueError(f"n_modes={n_modes} exceeds 10% of the pencil size {pencil.dim}")
    beta = pencil.beta
    if sigma is None:
        # the eigenvalues of interest cluster at -4/beta^2; start safely below
        sigma = -4.0 / beta**2 * 1.2 - 10.0
    for _ in range(8):
        try:
            vals, vecs = eigsh(pencil.A.tocsc(), k=n_modes, M=pencil.B.tocsc(),
                               sigma=sigma, which="LM", tol=0, v0=start_vector(pencil.dim))
        except RuntimeError as exc:
            raise FactorizationFailure(str(exc)) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        if vals[0] > sigma:
            break
        sigma = vals[0] - abs(vals[0]) * 0.2 - 10.0
    else:
        raise ConvergenceFailure("could not place the shift below the spectrum")

    Av = pencil.A @ vecs
    Bv = pencil.B @ vecs
    res = np.linalg.norm(Av - Bv * vals, axis=0) / np.linalg.norm(Bv, axis=0)
    scale = np.maximum(1.0, np.abs(vals))
    if np.any(res / scale > RESIDUAL_TOL):
        raise ConvergenceFailure(f"strip residual {float((res / scale).max()):.3e}")
    full = None
    if return_vectors:
        full = np.zeros((pencil.mesh.n_s * pencil.mesh.n_nodes, n_modes))
        full[np.tile(pencil.mesh.keep, pencil.mesh.n_s)] = vecs
    return StripSpectrum(pencil.boundary, vals, res, pencil.mesh.metadata(), beta, full)


def count_negative_strip(pencil: StripPencil, start: int = 16) -> int:
    """Number of negative eigenvalues of the pencil."""
    k = start
    while True:
        k = min(k, pencil.dim - 2)
        vals = solve_strip(pencil, k).eigenvalues if k <= 0.1 * pencil.dim else None
        if vals is None:
            raise ConvergenceFailure("negative eigenvalues exceed 10% of the pencil size")
        if vals[-1] >= 0:
            return int(np.sum(vals < 0))
        k *= 2


def interface_traces(spectrum: StripSpectrum, mode: int = 0):
    """``(f(s, 0-), f(s, 0+))`` of one eigenvector, shape ``(n_s,)`` each."""
    if spectrum.vectors is None:
        raise ValueError("solve with return_vectors=True to inspect eigenvectors")
    n_s, n_u = spectrum.mesh["n_s"], spectrum.mesh["n_u"]
    f = spectrum.vectors[:, mode].reshape(n_s, 2 * (n_u + 1))
    return f[:, n_u], f[:, n_u + 1]


def export_triplets(pencil: StripPencil, path_prefix) -> None:
    """Write ``A`` and ``B`` as ``row col value`` text files."""
    for name, M in (("A", pencil.A), ("B", pencil.B)):
        coo = M.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(f"{path_prefix}_{name}.txt", "w") as fh:
            fh.write(f"# {M.shape[0]} {M.shape[1]} {coo.nnz}\n")
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r} {c} {float(v)!r}\n")


def spectrum_to_json(spectrum: StripSpectrum, path) -> None:
    with open(path, "w") as fh:
        json.dump(spectrum.to_dict(), fh, indent=2, sort_keys=True)


def strip_brackets(profile: GeometryProfile, beta: float, a: float, n_modes: int,
                   fine: tuple[int, int] = (256, 128), coarse: tuple[int, int] = (128, 64),
                   grading: float = DEFAULT_GRADING, edge_sign: float = 1.0,
                   jump_sign: float = 1.0) -> dict:
    """``xi_-^j`` and ``xi_+^j`` on the fine mesh with a refinement error bar.

    ``tol`` is the largest change of any reported eigenvalue between the
    coarse and the fine mesh.
    """
    out = {"beta": beta, "a": a, "fine": list(fine), "coarse": list(coarse)}
    tol = 0.0
    for kind, key in (("neumann", "xi_minus"), ("dirichlet", "xi_plus")):
        vals = {}
        for mesh in (coarse, fine):
            pencil = assemble_form(profile, beta, a, mesh[0], mesh[1], kind, grading,
                                   edge_sign, jump_sign)
            vals[mesh] = solve_strip(pencil, n_modes).eigenvalues
        out[key] = [float(v) for v in vals[fine]]
        tol = max(tol, float(np.max(np.abs(vals[fine] - vals[coarse]))))
    out["tol"] = tol
    return out
