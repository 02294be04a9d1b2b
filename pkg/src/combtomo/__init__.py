"""Tomography of multi-time quantum processes (combs) on the Stiefel manifold.

Submodules: ``linalg`` (dense helpers), ``stiefel`` (Cayley ADAM optimizer),
``comb`` (isometry chains and Choi matrices), ``lowrank`` (rank-truncation
error bounds), ``instruments``, ``tomography`` (experiment design and
step-by-step recovery), ``metrics``, ``io`` and ``cli``.
"""

from .io import __version__

__all__ = ["__version__"]
