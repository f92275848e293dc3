"""Spectral asymptotics of a strongly coupled delta-prime interaction on a planar loop.

The package computes the eigenvalues of the two separated operators that
bracket ``-Delta`` with a delta-prime interaction of strength ``beta`` on a
smooth closed curve, the comparison operator ``-d^2/ds^2 - gamma^2/4``
along the curve, and a direct 2D discretization on a tube around it.
"""

from importlib.metadata import PackageNotFoundError, version

from .bracketing import (
    BracketingReport,
    assemble_bracket,
    count_negative,
    halfwidth_schedule,
    theorem1_verdict,
    theorem2_verdict,
)
from .geometry import (
    Curve,
    GeometryProfile,
    build_profile,
    circle,
    curve_from_config,
    ellipse,
    fourier_curve,
    max_injectivity_halfwidth,
    tube_map,
)
from .longitudinal import build_operator, solve_periodic
from .strip import assemble_form, solve_strip, strip_brackets
from .transverse import (
    TransverseProblem,
    discretize_transverse,
    solve_dirichlet_root,
    solve_robin_root,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "BracketingReport",
    "Curve",
    "GeometryProfile",
    "TransverseProblem",
    "assemble_bracket",
    "assemble_form",
    "build_operator",
    "build_profile",
    "circle",
    "count_negative",
    "curve_from_config",
    "discretize_transverse",
    "ellipse",
    "fourier_curve",
    "halfwidth_schedule",
    "max_injectivity_halfwidth",
    "solve_dirichlet_root",
    "solve_periodic",
    "solve_robin_root",
    "solve_strip",
    "strip_brackets",
    "theorem1_verdict",
    "theorem2_verdict",
    "tube_map",
    "__version__",
]
