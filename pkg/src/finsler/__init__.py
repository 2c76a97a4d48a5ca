"""Numerical Finsler geometry: jets, metrics, sprays, curvatures, flows.

The public surface mirrors the layer structure:

* :mod:`finsler.jets` - truncated multivariate Taylor arithmetic
* :mod:`finsler.metrics` - metric catalog and the fundamental tensor
* :mod:`finsler.spray` - geodesic coefficients, Berwald connection, curvature
* :mod:`finsler.scalar` - Legendre transforms, gradients, Laplacians,
  level-set (transnormal/isoparametric) checker
* :mod:`finsler.hyper` - hypersurfaces, unit normals, shape operators
* :mod:`finsler.flows` - geodesics, Jacobi fields, Riccati evolution,
  distances, comparison functions
* :mod:`finsler.experiments` / :mod:`finsler.cli` - named verification
  experiments and the command-line harness
"""

__version__ = "0.1.0"

from . import duality, experiments, flows, hyper, jets, metrics, scalar, spray  # noqa: F401, E402
