"""Motion-regime classification for harvester trajectories.

A bistable harvester settles into one of three qualitatively different
steady states, and which one it lands in drives the harvested power far
more than any parameter nuance:

* **intrawell** -- small oscillation trapped in a single potential well;
* **interwell** -- regular (periodic) swinging across both wells, the
  high-energy regime;
* **chaotic** -- aperiodic cross-well snapping.

Two ingredients decide the label.  Well crossings of the displacement
about the saddle point separate trapped from cross-well motion, and the
0-1 test for chaos separates regular from chaotic dynamics.  Both expect
the post-transient window only; hand them ``traj.steady_window()``.

A practical note on window length: near the onset of chaos the 0-1 test
needs a few thousand downsampled points to converge.  At the default
forcing frequency, 10 points per period and a half-discarded run,
``t_end = 4000`` puts the test safely in its converged regime, whereas
2000 leaves K hovering around the threshold for marginally chaotic
parameter sets.  The experiment layer therefore integrates a longer
trajectory for labeling than it needs for power averages.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dynamics import HarvesterParams, Trajectory, equilibria


class TooShortError(ValueError):
    """Not enough samples to classify reliably."""


class MotionKind(str, enum.Enum):
    INTRAWELL = "intrawell"
    INTERWELL = "interwell"
    CHAOTIC = "chaotic"

    def __str__(self) -> str:  # keep CSV/CLI output bare
        return self.value


@dataclass(frozen=True)
class MotionLabel:
    """Classification outcome with the evidence behind it."""

    kind: MotionKind
    crossings: int
    k_statistic: float


def count_well_crossings(x, saddle_x: float) -> int:
    """Number of times the displacement crosses the potential barrier.

    Counts sign changes of ``x - saddle_x``; samples landing exactly on
    the saddle are dropped first so that a grazing touch does not count
    as two crossings.  Accepts a :class:`Trajectory` or a plain array.
    """
    x = np.asarray(getattr(x, "x", x), dtype=float)
    s = np.sign(x - saddle_x)
    s = s[s != 0.0]
    if len(s) < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def zero_one_test(series: np.ndarray,
                  rng: np.random.Generator | int,
                  n_phases: int = 64,
                  msd_fraction: float = 0.1) -> float:
    """0-1 test for chaos; returns ``K`` in ``[0, 1]``.

    ``K`` near 1 flags chaotic dynamics, near 0 regular dynamics.  The
    series should be steady-state data downsampled to roughly 10 points
    per forcing period -- the test assumes map-like samples, and heavily
    oversampled continuous signals bias ``K`` low -- with at least 1000
    points left after downsampling.

    For each phase ``c`` drawn uniformly from ``(pi/5, 4*pi/5)`` (away
    from the resonant values 0 and pi), the series drives a planar walk::

        p_n = sum_{j<=n} x_j cos(j c),   q_n = sum_{j<=n} x_j sin(j c)

    Regular motion keeps the walk bounded; chaos makes it diffuse.  The
    mean-square displacement over lags up to ``msd_fraction`` of the
    series, corrected by the bounded oscillatory term
    ``mean(x)^2 (1 - cos(n c)) / (1 - cos c)``, is correlated against the
    lag; that correlation is this phase's K.  The reported statistic is
    the median over ``n_phases`` random phases, clipped to ``[0, 1]``.

    The phase RNG is an argument, never global state, so a given seed
    reproduces the same K bit-for-bit.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"series must be 1-D, got shape {x.shape}")
    n = len(x)
    if n < 1000:
        raise TooShortError(
            f"0-1 test needs at least 1000 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if not 0.0 < msd_fraction <= 0.5:
        raise ValueError(
            f"msd_fraction must be in (0, 0.5], got {msd_fraction}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)

    ncut = max(1, int(n * msd_fraction))
    lags = np.arange(1, ncut + 1)
    xbar = x.mean()
    j = np.arange(n)

    ks = np.empty(n_phases)
    for m in range(n_phases):
        c = rng.uniform(np.pi / 5.0, 4.0 * np.pi / 5.0)
        p = np.cumsum(x * np.cos(j * c))
        q = np.cumsum(x * np.sin(j * c))
        msd = np.empty(ncut)
        for i, lag in enumerate(lags):
            dp = p[lag:] - p[:-lag]
            dq = q[lag:] - q[:-lag]
            msd[i] = np.mean(dp * dp + dq * dq)
        msd -= xbar * xbar * (1.0 - np.cos(lags * c)) / (1.0 - np.cos(c))
        sd = msd.std()
        if sd == 0.0:
            ks[m] = 0.0
        else:
            ks[m] = np.corrcoef(lags, msd)[0, 1]
    k = float(np.median(ks))
    return min(1.0, max(0.0, k))


def classification_series(traj: Trajectory,
                          params: HarvesterParams | None = None,
                          points_per_period: float = 10.0) -> np.ndarray:
    """Displacement downsampled to ``points_per_period`` forcing periods."""
    params = params if params is not None else traj.params
    stride = max(1, int(round(
        2.0 * np.pi / (params.omega * points_per_period * traj.dt))))
    return traj.x[::stride]


def classify_motion(traj: Trajectory,
                    params: HarvesterParams | None = None,
                    *,
                    rng: np.random.Generator | int,
                    k_threshold: float = 0.5,
                    points_per_period: float = 10.0,
                    n_phases: int = 64) -> MotionLabel:
    """Label a steady-state trajectory intrawell / interwell / chaotic.

    ``traj`` must already be the steady-state window (see
    :meth:`Trajectory.steady_window`); crossings are counted over all of
    it.  ``params`` defaults to the trajectory's own parameter set.

    When the potential is bistable the rules fire in order: no saddle
    crossings -> intrawell; crossings with ``K < k_threshold`` ->
    interwell (regular); otherwise chaotic.  When the potential has a
    single well there is no barrier to cross, so the crossing count is
    zero by definition and the label degenerates to chaotic when
    ``K >= k_threshold``, intrawell otherwise.
    """
    params = params if params is not None else traj.params
    series = classification_series(traj, params, points_per_period)
    k = zero_one_test(series, rng, n_phases=n_phases)

    saddles = [xe for xe, stable in equilibria(params) if not stable]
    if saddles:
        crossings = count_well_crossings(traj.x, saddles[0])
        if crossings == 0:
            kind = MotionKind.INTRAWELL
        elif k < k_threshold:
            kind = MotionKind.INTERWELL
        else:
            kind = MotionKind.CHAOTIC
    else:
        crossings = 0
        kind = (MotionKind.CHAOTIC if k >= k_threshold
                else MotionKind.INTRAWELL)
    return MotionLabel(kind=kind, crossings=crossings, k_statistic=k)
