"""Geodesic X-ray transforms of tensor-mode integrands on the unit disc,
and their explicit approximate inversion.

The package traces unit-speed geodesics of conformally Euclidean metrics,
computes the ray transforms I_k and I_{k,perp} on the influx boundary, and
inverts them by a boundary-operator Neumann series.  Supporting pieces:
Jacobi fields and the intertwining kernel (`jacobi`), the fiberwise Hilbert
transform (`hilbert`), synthetic phantoms (`phantoms`), and an exact
fiber-mode calculus used for cross-checks (`fibercalc`).
"""

from .errors import ConfigError, SingularB, TrappedRay, ZeroReference
from .geodesics import (GeodesicPath, InfluxGrid, make_influx_grid,
                        trace_backward_to_influx, trace_forward,
                        trace_from_influx)
from .grids import ScalarGrid, cartesian_grid, relative_L2_error
from .hilbert import (ExtendedFiberData, parity_extend, restrict_to_influx,
                      shifted_hilbert, sigma_parity)
from .jacobi import (JacobiPair, apply_Wk_adjoint_transport, apply_Wk_kernel,
                     apply_Wk_transport, const_curvature_ab, dump_kernel_csv,
                     jacobi_fields, kernel_qk, polar_area_integral,
                     wk_norm_estimate)
from .metrics import (MetricModel, const_curv_neg, const_curv_pos, euclidean,
                      lens, parse_metric)
from .phantoms import (GaussianBump, PhantomSpec, default_bumps,
                       default_phantom, make_phantom)
from .reconstruction import (ErrorHistory, ReconstructionConfig,
                             TransportTable, approx_inverse_f,
                             approx_inverse_h, neumann_invert, regime_tag)
from .transforms import (Sinogram, forward_Ik, forward_Ikperp,
                         ray_integral_general, read_sinogram, write_sinogram)

__version__ = "1.0.0"

__all__ = [
    "ConfigError", "SingularB", "TrappedRay", "ZeroReference",
    "GeodesicPath", "InfluxGrid", "make_influx_grid",
    "trace_backward_to_influx", "trace_forward", "trace_from_influx",
    "ScalarGrid", "cartesian_grid", "relative_L2_error",
    "ExtendedFiberData", "parity_extend", "restrict_to_influx",
    "shifted_hilbert", "sigma_parity",
    "JacobiPair", "apply_Wk_adjoint_transport", "apply_Wk_kernel",
    "apply_Wk_transport", "const_curvature_ab", "dump_kernel_csv",
    "jacobi_fields", "kernel_qk", "polar_area_integral", "wk_norm_estimate",
    "MetricModel", "const_curv_neg", "const_curv_pos", "euclidean",
    "lens", "parse_metric",
    "GaussianBump", "PhantomSpec", "default_bumps", "default_phantom",
    "make_phantom",
    "ErrorHistory", "ReconstructionConfig", "TransportTable",
    "approx_inverse_f", "approx_inverse_h", "neumann_invert", "regime_tag",
    "Sinogram", "forward_Ik", "forward_Ikperp", "ray_integral_general",
    "read_sinogram", "write_sinogram",
    "__version__",
]
