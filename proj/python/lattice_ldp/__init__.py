"""Lattice FitzHugh-Nagumo networks with spatially correlated noise."""

from ._core import (
    __version__,
    build_kernel,
    resolve_config,
    sample_noise,
    scaling,
    simulate,
    verify,
    wilson_interval,
)

__all__ = [
    "__version__",
    "build_kernel",
    "resolve_config",
    "sample_noise",
    "scaling",
    "simulate",
    "verify",
    "wilson_interval",
]
