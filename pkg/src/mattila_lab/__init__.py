"""Numerical laboratory for group-correlation Mattila integrals.

Submodules: :mod:`measures` (point clouds, IFS, mollification),
:mod:`fourier` (transforms and energies), :mod:`groups` (Haar windows),
:mod:`configmaps` (configuration maps and pushforwards), :mod:`identity`
(both sides of the identities and the SL2 experiments) and
:mod:`experiments` / :mod:`cli` (batch drivers).
"""

from .common import (CapacityError, DegenerateMeasureError, Estimate, PreconditionError,
                     stage_seed)
from .measures import (FrostmanFit, GridDensity, IFSMap, IFSSpec, Mollifier, PointMassMeasure,
                       ball_mass, cantor_dust_spec, convolve, frostman_fit, ifs_generate,
                       middle_thirds, mollify, product_measure)

__version__ = "0.1.0"
