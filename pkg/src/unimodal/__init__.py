"""Smooth unimodal interval maps: Schwarzian calculus, cross-ratio distortion,
box mappings, decay of geometry, renormalization and attractor classification."""
from .boxmaps import (
    BoxMapping,
    Branch,
    DecayTower,
    HypothesisError,
    NestedPair,
    central_domain,
    decay_tower,
    fill_in,
    first_entry_map,
    first_return_map,
    is_regularly_returning,
    symmetric_regularly_returning,
)
from .classify import AttractorReport, InducedMap, away_from_critical_summary, classify_attractor, induce_expansion
from .conjugation import ConjugationParams, build_conjugacy, conjugation_residual, phi_s, search_conjugacy
from .distortion import Quadruple, cross_ratio, gauge_estimate, kappa, kernel_K, koebe_check, rho
from .jets import Jet3
from .map_model import (
    AffineConjugate,
    Interval,
    LogisticMap,
    SineMap,
    UnimodalMap,
    make_family,
    nu,
    schwarzian,
)
from .orbits import PeriodicOrbit, find_periodic_orbit, iterate_ensemble, lyapunov_exponent
from .renorm import RenormTower, feigenbaum_point, renorm_tower

__version__ = "0.1.0"

__all__ = [
    "AffineConjugate",
    "AttractorReport",
    "away_from_critical_summary",
    "BoxMapping",
    "Branch",
    "build_conjugacy",
    "central_domain",
    "classify_attractor",
    "conjugation_residual",
    "ConjugationParams",
    "cross_ratio",
    "decay_tower",
    "DecayTower",
    "feigenbaum_point",
    "fill_in",
    "find_periodic_orbit",
    "first_entry_map",
    "first_return_map",
    "gauge_estimate",
    "HypothesisError",
    "induce_expansion",
    "InducedMap",
    "Interval",
    "is_regularly_returning",
    "iterate_ensemble",
    "Jet3",
    "kappa",
    "kernel_K",
    "koebe_check",
    "LogisticMap",
    "lyapunov_exponent",
    "make_family",
    "NestedPair",
    "nu",
    "PeriodicOrbit",
    "phi_s",
    "Quadruple",
    "renorm_tower",
    "RenormTower",
    "rho",
    "schwarzian",
    "search_conjugacy",
    "SineMap",
    "symmetric_regularly_returning",
    "UnimodalMap",
]
