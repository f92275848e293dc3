"""Independent reference computations used by the tests.

Nothing here imports the package under test. Each function solves the
same mathematical problem by a different route (closed forms, adaptive
quadrature, Brent's method, Bessel functions, finite differences).
"""

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh
from scipy.special import ive, kve


def ellipse_curvature(A, B, t):
    """Unsigned curvature of ``(A cos t, B sin t)``."""
    return A * B / (A**2 * np.sin(t) ** 2 + B**2 * np.cos(t) ** 2) ** 1.5


def ellipse_point(A, B, t):
    return A * np.cos(t), B * np.sin(t)


def ellipse_length(A, B):
    val, _ = quad(lambda t: np.hypot(A * np.sin(t), B * np.cos(t)), 0, 2 * np.pi,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def dirichlet_root(a, beta):
    return brentq(lambda k: k - (2 / beta) * np.tanh(k * a), 1e-9, 2 / beta, xtol=1e-15)


def robin_root(a, beta, gp):
    def F(k):
        e = (k - gp) / (k + gp) * np.exp(-2 * k * a)
        return k - (2 / beta) * (1 + e) / (1 - e)

    return brentq(F, 2 / beta, 4 / beta, xtol=1e-15)


def dirichlet_root_with_jump(a, beta, gamma):
    """Ground state of the Dirichlet fibre whose form carries ``gamma/2 (|f+|^2 - |f-|^2)``.

    Separating ``f = A sinh(k(a-u))`` on ``u > 0`` and ``B sinh(k(a+u))``
    on ``u < 0`` in the natural interface conditions of the form gives
    ``k coth(k a) = 1/beta + sqrt(1/beta^2 + gamma^2/4)``.
    """
    rhs = 1 / beta + np.sqrt(1 / beta**2 + gamma**2 / 4)
    return brentq(lambda k: k / np.tanh(k * a) - rhs, 1e-6, 2 * rhs, xtol=1e-15)


def circle_delta_prime_eigenvalue(m, beta, radius=1.0):
    """Exact negative eigenvalue with angular number ``m`` for the unit-circle interaction.

    Inside ``A I_m(k r)``, outside ``B K_m(k r)``; the normal derivative is
    continuous and the jump of the function equals ``beta`` times it, so
    ``1/lK - 1/lI = -beta`` with ``lI, lK`` the logarithmic radial derivatives.
    """
    def F(k):
        x = k * radius
        lI = k * (ive(m - 1, x) + ive(m + 1, x)) / (2 * ive(m, x))
        lK = -k * (kve(m - 1, x) + kve(m + 1, x)) / (2 * kve(m, x))
        return 1 / lK - 1 / lI + beta

    k = brentq(F, 0.5 / beta, 4 / beta, xtol=1e-14)
    return -k * k


def periodic_fd_lowest(potential, length, n_modes, prefactor=1.0):
    """Lowest eigenvalues of ``-c d^2/ds^2 + V`` by periodic second-order differences."""
    n = len(potential)
    h = length / n
    off = -prefactor / h**2
    T = sp.diags([np.full(n - 1, off), 2 * prefactor / h**2 + potential, np.full(n - 1, off)],
                 [-1, 0, 1], format="lil")
    T[0, n - 1] = T[n - 1, 0] = off
    vals = eigsh(T.tocsc(), k=n_modes, sigma=float(np.min(potential)) - 1.0, which="LM",
                 return_eigenvectors=False)
    return np.sort(vals)


def ellipse_arc_samples(A, B, n):
    """Curvature of the ellipse at ``n`` equally spaced arc-length points, via quad and brentq."""
    L = ellipse_length(A, B)
    ts = []
    for s in np.arange(n) * L / n:
        if s == 0:
            ts.append(0.0)
            continue
        g = lambda t: quad(lambda x: np.hypot(A * np.sin(x), B * np.cos(x)), 0, t,
                           epsabs=1e-13)[0] - s
        ts.append(brentq(g, 0, 2 * np.pi, xtol=1e-14))
    return L, np.array(ts)
