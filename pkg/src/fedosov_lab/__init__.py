"""fedosov-lab: exact Wick-type Fedosov quantization on Kähler charts.

Verification toolkit for the interplay between deformation quantization and
geometric quantization: Fedosov connections and star products in exact
arithmetic, degree-1 quantizable function classification, quantum
Hamiltonians and moment maps, and operator identities on H^0(CP^1, O(k)).
"""

from .scalars import RAT, Scalar, rat
from .rings import (
    ChartFunction,
    JetAccuracyError,
    JetChartRing,
    JetFunction,
    RationalChartRing,
)
from .geometry import (
    GeometryError,
    KahlerGeometry,
    LieAlgebraAction,
    VectorField,
    hamiltonian_vf,
    laplacian,
    lie_compat,
    make_geometry,
    poisson,
    su2_action,
)

__version__ = "0.1.0"
