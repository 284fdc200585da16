"""Augmented-tree networks of self-similar sets, effective resistance and critical exponents."""
from .augtree import AugmentedTree, build, kappa_select
from .catalog import get_fractal
from .critical import (ClassifyConfig, classify, exponent_report, gagliardo_compare, geodesic_decay_check,
                       harmonic_extend_finite, lambda_star_bisect, level_resistance_series)
from .ifs import IfsSpec, InvalidInput, Similitude, moran_exponent
from .network import Network, energy, from_augtree
from .reduction import (closed_form_R, delta_to_y, fixed_point_exists, fixed_point_threshold, parallel,
                        rayleigh_bounds, series)
from .solver import DirichletProblem, effective_resistance, level_by_level_trace, schur_trace
from .walk import WalkConfig, hitting_histogram

__version__ = "0.1.0"

__all__ = [
    "AugmentedTree", "build", "kappa_select", "get_fractal",
    "ClassifyConfig", "classify", "exponent_report", "gagliardo_compare", "geodesic_decay_check",
    "harmonic_extend_finite", "lambda_star_bisect", "level_resistance_series",
    "IfsSpec", "InvalidInput", "Similitude", "moran_exponent",
    "Network", "energy", "from_augtree",
    "closed_form_R", "delta_to_y", "fixed_point_exists", "fixed_point_threshold", "parallel",
    "rayleigh_bounds", "series",
    "DirichletProblem", "effective_resistance", "level_by_level_trace", "schur_trace",
    "WalkConfig", "hitting_histogram",
]
