"""Parabolic Anderson model driven by fractional noise on the Heisenberg group.

Modules
-------
group        group law, dilations, rotations, homogeneous gauge
brownian     Brownian motion with exact Levy area
heat_kernel  heat kernel by two independent quadratures
spectral     Schrodinger-representation Fourier analysis
green        Riesz-type kernels G_alpha and their mollifications
noise        fractional noise covariances and samplers
pam          existence criteria, chaos bounds and second moments
cli          batch front end
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowupError,
    ConfigError,
    DimensionError,
    DomainError,
    HeisenbergError,
    NonPSDError,
    QuadratureError,
    SingularInputError,
)
from .estimates import MomentEstimate  # noqa: E402
from .group import Dilation, GroupPoint, Rotation  # noqa: E402

__all__ = [
    "__version__",
    "BlowupError",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "HeisenbergError",
    "NonPSDError",
    "QuadratureError",
    "SingularInputError",
    "MomentEstimate",
    "Dilation",
    "GroupPoint",
    "Rotation",
]
