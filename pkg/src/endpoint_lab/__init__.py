"""Numerical laboratory for endpoint estimates of pseudo-differential operators on the line.

The package is organised bottom-up:

- `grid` : uniform periodic grid, Fourier transform convention, norms
- `littlewood_paley` : partition of unity, dyadic pieces, H^1 norm, atoms
- `symbols` : symbol abstraction, the three lacunary/oscillatory constructions,
  finite-difference class checker
- `kernels` : closed-form and quadrature routes for the kernel of symbol A
- `operator` : application of T_a, kernels, dyadic pieces, operator norms
- `experiments` : rate experiments with explicit tolerances
- `cli` : command-line front end
"""

from .grid import (
    Grid,
    SampledFunction,
    Spectrum,
    forward_transform,
    inverse_transform,
    lp_norm,
    weak_l1_quasinorm,
    direct_apply_oracle,
)

__all__ = [
    "Grid",
    "SampledFunction",
    "Spectrum",
    "forward_transform",
    "inverse_transform",
    "lp_norm",
    "weak_l1_quasinorm",
    "direct_apply_oracle",
]

__version__ = "0.1.0"
