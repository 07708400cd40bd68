"""Linearized message passing laboratory for phase retrieval with
subsampled orthogonal sensing.

Subpackages and modules:

* ``sensing`` -- matrix-free Hadamard-Walsh / Haar sensing operators and
  the centered Gram operator;
* ``lamp`` -- the linearized iteration and the spectral denoiser with
  its tuning-parameter calibration;
* ``state_evolution`` -- the deterministic scalar recursion predicting
  the dynamics;
* ``oracles`` -- brute-force verification of the combinatorial and
  probabilistic toolbox (partitions, matrix moments, kernel expansions,
  alternating products);
* ``experiments`` -- reproducible universality experiments with CSV and
  SVG emission;
* ``verify`` -- the numerical check suite;
* ``cli`` -- the ``lamplab`` command.
"""

from . import experiments, lamp, oracles, sensing, signals, state_evolution, verify
from .fwht import fwht, fwht_inplace, hadamard_matrix, using_numba
from .quadrature import QuadratureRule, hermite_coeff
from .rng import derive_seed, substream

__version__ = "0.1.0"

__all__ = [
    "QuadratureRule",
    "derive_seed",
    "experiments",
    "fwht",
    "fwht_inplace",
    "hadamard_matrix",
    "hermite_coeff",
    "lamp",
    "oracles",
    "sensing",
    "signals",
    "state_evolution",
    "substream",
    "using_numba",
    "verify",
]
