"""Simulation and verification laboratory for random planar geometry.

Exact peeling of Boltzmann triangulations with a boundary, discrete
Brownian-snake constructions of Brownian disks, and statistical verification
of the closed-form laws that connect them.
"""

from ._kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
