"""Uncertainty quantification for bistable piezo-magneto-elastic harvesters.

Layers, bottom to top:

* :mod:`behuq.dynamics` -- the oscillator model, RK4 integration, mean
  dissipated power, equilibria.
* :mod:`behuq.classify` -- motion regimes (intrawell / interwell / chaotic)
  via well-crossing counts and the 0-1 chaos test.
* :mod:`behuq.probability` -- maximum-entropy uniform inputs and the
  standardisation maps used by the surrogate.
* :mod:`behuq.pce` -- orthonormal Legendre polynomial-chaos surrogates fit
  by least squares, with leave-one-out validation.
* :mod:`behuq.stats` -- densities, modality, conditional maps, event
  probabilities, time-domain confidence bands.
* :mod:`behuq.config` / :mod:`behuq.runner` / :mod:`behuq.cli` -- the
  reproducible experiment layer.
"""

__version__ = "0.1.0"
