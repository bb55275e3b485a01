"""Pseudospherical nets on finite time scales via a quaternionic Lax pair."""
from .timescale import GridDomain, TimeScale1D, construct_timescale, delta_derivative
from .laxpair import CoefficientField, WaveField, propagate, vacuum
from .surface import SurfaceNet, gauss_curvature_dot, sym_surface
from .backlund import DarbouxParams, build_projector, darboux_chain, transform_surface

__version__ = "0.1.0"
