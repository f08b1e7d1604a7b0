"""Sample-cloud statistics: densities, conditional structure, bands.

Everything here consumes clouds of (input, mean-power) samples — whether
they came from the surrogate or from direct model runs — and produces the
probabilistic summaries the experiments report:

* normalized histogram/KDE densities of mean power and their modality (the
  bimodal-to-unimodal transition tracks the monostable/bistable split);
* joint conditional CDF maps, i.e. how the power distribution moves as one
  parameter varies while *all* parameters stay random;
* conditional probabilities of beating the nominal power by a given gain
  when a parameter is pushed into an event region (the Table-style
  domains: 10%-increase events plus asymmetry-magnitude events);
* time-domain confidence bands from the raw power ensembles.

Estimators are empirical throughout — quantile bins, empirical CDFs,
Wilson intervals, quantile bands — because the power distributions are
skewed and often bimodal, and moment-based shortcuts would quietly assume
them away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateSpreadError(ValueError):
    """Samples have zero spread; normalization is undefined."""


class EmptyInputError(ValueError):
    """Too few samples for a density estimate."""


class TooFewSamplesError(ValueError):
    """Not enough samples per conditioning bin."""


class EmptyEventError(ValueError):
    """No sample satisfies the conditioning event."""


class GridMismatchError(ValueError):
    """Ensemble members do not share one time grid."""


@dataclass(frozen=True)
class QoISamples:
    """A cloud of mean-power samples with the inputs that produced them.

    ``names`` labels the columns of ``inputs``; ``nominal_power`` is the
    model's mean power at the all-nominal parameter point, the reference
    every improvement probability is measured against.
    """

    values: np.ndarray
    inputs: np.ndarray
    names: tuple[str, ...]
    nominal_power: float

    def __post_init__(self):
        object.__setattr__(self, "values",
                           np.asarray(self.values, dtype=float))
        object.__setattr__(self, "inputs",
                           np.atleast_2d(np.asarray(self.inputs, dtype=float)))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.values) != self.inputs.shape[0]:
            raise ValueError(
                f"{len(self.values)} values vs {self.inputs.shape[0]} "
                "input rows")
        if self.inputs.shape[1] != len(self.names):
            raise ValueError(
                f"{self.inputs.shape[1]} input columns vs "
                f"{len(self.names)} names")

    def column(self, name: str) -> np.ndarray:
        return self.inputs[:, self.names.index(name)]

    def __len__(self) -> int:
        return len(self.values)


def normalize(values: np.ndarray) -> np.ndarray:
    """Shift/scale to zero mean and unit sample standard deviation.

    The standard deviation uses the n-1 (sample) convention, so
    ``normalize([1, 3])`` gives ``(-1/sqrt(2), +1/sqrt(2))``.  Raises
    :class:`DegenerateSpreadError` when all values coincide.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        raise ValueError(f"need at least 2 values, got {len(v)}")
    sd = float(np.std(v, ddof=1))
    if sd == 0.0:
        raise DegenerateSpreadError("all values equal; spread is zero")
    return (v - np.mean(v)) / sd


def silverman_bandwidth(values: np.ndarray) -> float:
    """Silverman's rule: ``0.9 * min(std, IQR/1.34) * n^(-1/5)``.

    Robust variant: when heavy ties drive the IQR to zero the rule falls
    back to the standard deviation alone rather than collapsing the
    bandwidth to zero.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    sd = float(np.std(v, ddof=1))
    if sd == 0.0:
        raise DegenerateSpreadError("all values equal; bandwidth is zero")
    q75, q25 = np.quantile(v, [0.75, 0.25])
    iqr = float(q75 - q25)
    width = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    return 0.9 * width * n ** (-0.2)


def kde(values: np.ndarray,
        grid: np.ndarray | None = None,
        bandwidth: float | None = None,
        grid_size: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density estimate; returns ``(grid, density)``.

    With no grid given, evaluation covers ``[min - 3h, max + 3h]`` with
    ``grid_size`` points, wide enough that the trapezoid integral of the
    density is 1 to about 1e-3 (three bandwidths truncate only ~0.3% of
    each tail kernel).  Bandwidth defaults to
    :func:`silverman_bandwidth`.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 10:
        raise EmptyInputError(
            f"density estimate needs at least 10 samples, got {len(v)}")
    h = silverman_bandwidth(v) if bandwidth is None else float(bandwidth)
    if h <= 0.0:
        raise ValueError(f"bandwidth must be > 0, got {h}")
    if grid is None:
        grid = np.linspace(v.min() - 3.0 * h, v.max() + 3.0 * h, grid_size)
    else:
        grid = np.asarray(grid, dtype=float)

    # accumulate kernel sums in sample chunks to keep the (grid x sample)
    # intermediate small for big clouds
    density = np.zeros_like(grid)
    norm = 1.0 / (len(v) * h * math.sqrt(2.0 * math.pi))
    for a in range(0, len(v), 4096):
        z = (grid[:, None] - v[None, a:a + 4096]) / h
        density += np.exp(-0.5 * z * z).sum(axis=1)
    return grid, density * norm


def modality(density: np.ndarray) -> int:
    """Count strict interior local maxima of a tabulated density.

    Runs of exactly equal values are merged first, so a flat-topped peak
    counts once and a plateau touching the boundary counts zero.
    """
    d = np.asarray(density, dtype=float)
    if len(d) < 5:
        raise ValueError(f"need at least 5 grid points, got {len(d)}")
    keep = np.empty(len(d), dtype=bool)
    keep[0] = True
    keep[1:] = d[1:] != d[:-1]
    levels = d[keep]
    interior = levels[1:-1]
    return int(np.count_nonzero(
        (interior > levels[:-2]) & (interior > levels[2:])))


@dataclass(frozen=True)
class ConditionalMap:
    """Empirical surface ``F(power <= y | parameter in bin)``.

    ``cdf[k, j]`` is the CDF at ``power_grid[k]`` within parameter bin
    ``j`` (centered at ``param_grid[j]``); every column is a valid CDF:
    nondecreasing, within [0, 1], ending at 1.
    """

    parameter: str
    param_grid: np.ndarray
    power_grid: np.ndarray
    cdf: np.ndarray


def conditional_cdf_map(q: QoISamples, parameter: str,
                        n_param_bins: int = 20,
                        n_power_grid: int = 200) -> ConditionalMap:
    """Bucket the cloud by one parameter; empirical power CDF per bucket.

    Buckets are equal-probability (quantile) bins of the conditioning
    parameter, all other parameters left random — the map shows marginal
    association, not a one-at-a-time sensitivity.  Requires an average of
    at least 50 samples per bin (:class:`TooFewSamplesError`).
    """
    if n_param_bins < 2:
        raise ValueError(f"need at least 2 bins, got {n_param_bins}")
    if n_power_grid < 2:
        raise ValueError(f"need at least 2 grid points, got {n_power_grid}")
    x = q.column(parameter)
    y = q.values
    if len(y) < 50 * n_param_bins:
        raise TooFewSamplesError(
            f"{len(y)} samples across {n_param_bins} bins is fewer than "
            "50 per bin on average")

    edges = np.quantile(x, np.linspace(0.0, 1.0, n_param_bins + 1))
    which = np.clip(np.searchsorted(edges[1:-1], x, side="right"),
                    0, n_param_bins - 1)
    param_grid = 0.5 * (edges[:-1] + edges[1:])
    power_grid = np.linspace(y.min(), y.max(), n_power_grid)

    cdf = np.empty((n_power_grid, n_param_bins))
    for j in range(n_param_bins):
        yj = np.sort(y[which == j])
        if len(yj) == 0:
            raise TooFewSamplesError(
                f"parameter bin {j} of {parameter!r} is empty")
        cdf[:, j] = np.searchsorted(yj, power_grid, side="right") / len(yj)
    return ConditionalMap(parameter=parameter, param_grid=param_grid,
                          power_grid=power_grid, cdf=cdf)


@dataclass(frozen=True)
class EventDomain:
    """One-parameter conditioning event on the sample cloud.

    Three shapes cover all the domain tables: a relative-increase event
    ``X >= threshold`` (threshold already resolved to ``c * nominal``),
    and the asymmetry-magnitude events ``|X| >= c`` and ``|X| <= c``.
    """

    parameter: str
    kind: str  # "ge" | "abs_ge" | "abs_le"
    threshold: float

    _KINDS = ("ge", "abs_ge", "abs_le")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}, "
                             f"got {self.kind!r}")

    @classmethod
    def increase(cls, parameter: str, nominal: float,
                 factor: float = 1.1) -> "EventDomain":
        """The '10% increase' event ``X >= factor * nominal``."""
        return cls(parameter, "ge", factor * nominal)

    @classmethod
    def magnitude_at_least(cls, parameter: str, c: float) -> "EventDomain":
        return cls(parameter, "abs_ge", c)

    @classmethod
    def magnitude_at_most(cls, parameter: str, c: float) -> "EventDomain":
        return cls(parameter, "abs_le", c)

    def mask(self, q: QoISamples) -> np.ndarray:
        x = q.column(self.parameter)
        if self.kind == "ge":
            return x >= self.threshold
        if self.kind == "abs_ge":
            return np.abs(x) >= self.threshold
        return np.abs(x) <= self.threshold

    def describe(self) -> str:
        sym = {"ge": ">=", "abs_ge": "|.| >=", "abs_le": "|.| <="}[self.kind]
        return f"{self.parameter} {sym} {self.threshold:g}"


@dataclass(frozen=True)
class ConditionalProbability:
    """Estimated P(power >= (1+gain)*nominal | event), with a Wilson CI.

    ``low_support`` marks events holding fewer than 100 samples; the
    estimate is still reported, the interval is just wide.
    """

    probability: float
    ci_low: float
    ci_high: float
    n_event: int
    n_success: int
    low_support: bool


def wilson_interval(k: int, n: int,
                    z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if n < 1:
        raise ValueError("need at least one trial")
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n
                                   + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def cond_prob_increase(q: QoISamples, domain: EventDomain,
                       gain: float = 0.5) -> ConditionalProbability:
    """Probability of beating nominal power by ``gain``, given the event.

    Empirical ``P(power >= (1+gain) * nominal_power | domain holds)`` on
    the cloud, with a 95% Wilson interval.  Raises
    :class:`EmptyEventError` when nothing satisfies the event; fewer than
    100 event samples only sets ``low_support``.
    """
    mask = domain.mask(q)
    n_event = int(np.count_nonzero(mask))
    if n_event == 0:
        raise EmptyEventError(f"no sample satisfies {domain.describe()}")
    threshold = (1.0 + gain) * q.nominal_power
    n_success = int(np.count_nonzero(q.values[mask] >= threshold))
    ci_low, ci_high = wilson_interval(n_success, n_event)
    return ConditionalProbability(
        probability=n_success / n_event, ci_low=ci_low, ci_high=ci_high,
        n_event=n_event, n_success=n_success, low_support=n_event < 100)


@dataclass(frozen=True)
class CurvePoint:
    """One (amplitude, parameter) point of a probability curve."""

    f_nominal: float
    parameter: str
    probability: float  # NaN when the event was empty
    ci_low: float
    ci_high: float
    motion: str
    note: str = ""


def cond_prob_curve(cases) -> list[CurvePoint]:
    """Assemble probability curves across a sweep.

    ``cases`` yields ``(f_nominal, q, motion, domains, gain)`` with
    ``domains`` a ``{parameter: EventDomain}`` mapping for that amplitude.
    An empty event flags its point (NaN probability, note set) instead of
    failing the whole curve.
    """
    points: list[CurvePoint] = []
    for f_nominal, q, motion, domains, gain in cases:
        for parameter, domain in domains.items():
            try:
                r = cond_prob_increase(q, domain, gain)
            except EmptyEventError:
                points.append(CurvePoint(
                    f_nominal=f_nominal, parameter=parameter,
                    probability=math.nan, ci_low=math.nan, ci_high=math.nan,
                    motion=str(motion), note="empty-event"))
                continue
            points.append(CurvePoint(
                f_nominal=f_nominal, parameter=parameter,
                probability=r.probability, ci_low=r.ci_low,
                ci_high=r.ci_high, motion=str(motion),
                note="low-support" if r.low_support else ""))
    return points


@dataclass(frozen=True)
class Band:
    """Pointwise quantile envelope of a power-series ensemble."""

    t: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    nominal: np.ndarray
    level: float

    def width_integral(self) -> float:
        """Time integral of the band width — a scalar 'how uncertain'."""
        return float(np.trapezoid(self.upper - self.lower, self.t))


def confidence_band(t: np.ndarray, ensemble: np.ndarray,
                    nominal: np.ndarray, level: float = 0.95) -> Band:
    """Empirical pointwise quantile band of an aligned ensemble.

    ``ensemble`` has one row per member, columns on the grid ``t``; the
    band spans the ``(1-level)/2`` and ``(1+level)/2`` empirical
    quantiles at each time sample.  Quantiles, not mean +/- multiples of
    sigma: the ensembles here are skewed and sometimes bimodal.  Needs at
    least 40 members; mismatched grids raise :class:`GridMismatchError`.
    """
    t = np.asarray(t, dtype=float)
    ens = np.atleast_2d(np.asarray(ensemble, dtype=float))
    nominal = np.asarray(nominal, dtype=float)
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if ens.shape[1] != len(t) or len(nominal) != len(t):
        raise GridMismatchError(
            f"grid has {len(t)} samples, ensemble rows have "
            f"{ens.shape[1]}, nominal has {len(nominal)}")
    if ens.shape[0] < 40:
        raise TooFewSamplesError(
            f"need at least 40 ensemble members, got {ens.shape[0]}")
    alpha = (1.0 - level) / 2.0
    lower = np.quantile(ens, alpha, axis=0)
    upper = np.quantile(ens, 1.0 - alpha, axis=0)
    return Band(t=t, lower=lower, upper=upper, nominal=nominal, level=level)
