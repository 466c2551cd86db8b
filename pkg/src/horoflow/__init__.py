"""Horocycle and geodesic flows on hyperbolic surfaces, horocycle return experiments on covers,
and a combinatorial model of the Hirsch foliation."""

from .config import TOL, GridSpec, KeyLemmaConfig, DensityConfig, Tolerances
from .core import (
    INFINITY,
    I,
    Frame,
    GeodesicLine,
    HPoint,
    Isometry,
    MoebiusMap,
    affine_act,
    axis_data,
    busemann,
    classify_isometry,
    geodesic_flow,
    horocycle_flow,
    hyp_angle,
    hyp_distance,
    moebius_apply,
    translation_length,
)
from .fuchsian import (
    GroupElement,
    GroupPresentation,
    builtin_group,
    closed_geodesics_in_band,
    dirichlet_reduce,
    enumerate_elements,
    genus2_octagon_group,
    load_group_spec,
)

__version__ = "0.1.0"
