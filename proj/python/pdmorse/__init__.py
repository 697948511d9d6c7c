"""Poisson-Delaunay mosaics: circumradius Morse intervals and their intensities."""

import json as _json

from ._pdmorse import (  # noqa: F401
    ConfigError,
    DegenerateInput,
    DegenerateSimplex,
    Error,
    MarginTooSmall,
    PartitionViolation,
    TorusTooSparse,
    Unsupported,
    UnsupportedDimension,
    constant_C,
    constant_C_exact,
    constant_D,
    constant_D_exact,
    factor_f,
    interval_census,
    radius_cdf_interval,
    radius_cdf_simplex,
    sample_poisson,
    set_thread_limit,
    spherical_expectation,
    triple_circle_moment,
)
from . import _pdmorse

__all__ = [name for name in dir(_pdmorse) if not name.startswith("_")] + [
    "closed_form_constants",
    "estimate_spherical_expectation",
    "wendel_check",
    "bp_identity_check",
    "estimate_constants_empirical",
]


def closed_form_constants(n):
    """Closed-form C[ell][k] and D[j] tables with exact strings."""
    return _json.loads(_pdmorse._constants_json(n))


def estimate_spherical_expectation(ell, k, n, samples=10**6, seed=1, method="reduced"):
    """Monte Carlo E_{ell,k}^n as a dict with value, stderr and samples."""
    value, stderr, count = _pdmorse._sphere_estimate(ell, k, n, samples, seed, method)
    return {"value": value, "stderr": stderr, "samples": count}


def wendel_check(k, samples=10**6, seed=1):
    """Fraction of (k+1)-tuples on S^{k-1} whose hull contains the origin."""
    value, stderr, count = _pdmorse._wendel(k, samples, seed)
    return {"value": value, "stderr": stderr, "samples": count}


def bp_identity_check(k, n, samples=10**6, seed=1):
    """Both sides of the spherical Blaschke-Petkantschin identity."""
    return _json.loads(_pdmorse._bp_json(k, n, samples, seed))


def estimate_constants_empirical(n, density=1.0, side=20.0, trials=2, seed=1):
    """Per-trial torus censuses normalized to intensities, with invariants."""
    return _json.loads(_pdmorse._mosaic_constants_json(n, density, side, trials, seed))
