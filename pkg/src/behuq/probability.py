"""Maximum-entropy input model: uniform intervals, sampling, standardisation.

The uncertain parameters are known only through a nominal value and a
spread; the honest prior given nothing but support knowledge is the one
that maximises Shannon entropy, which on a bounded interval is the uniform
distribution.  Independence between parameters follows from the same
argument applied jointly.  This module owns that input model: interval
construction, entropy on tabulated densities (so the optimality claim is
checkable, not folklore), i.i.d. sampling, and the affine maps onto the
``[-1, 1]`` reference interval the polynomial basis lives on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PARAM_NAMES, HarvesterParams


class BadSupportError(ValueError):
    """Interval bounds are not strictly increasing."""


class NotNormalizedError(ValueError):
    """A tabulated density does not integrate to 1 on its grid."""


class ZeroNominalError(ValueError):
    """A relative spread cannot produce an interval around zero."""


class OutOfSupportError(ValueError):
    """A value lies outside the interval it is being standardised on."""


@dataclass(frozen=True)
class UniformInterval:
    """Uniform distribution on ``[a, b]``, the entropy maximizer there.

    Among all densities supported on ``[a, b]`` the uniform attains the
    largest differential entropy ``ln(b - a)``; see :func:`entropy` for
    the checkable statement.
    """

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise BadSupportError(
                f"bounds must be finite, got [{self.a}, {self.b}]")
        if not self.a < self.b:
            raise BadSupportError(
                f"need a < b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def density(self) -> float:
        """Constant pdf value on the support."""
        return 1.0 / (self.b - self.a)

    def contains(self, x, slack: float = 0.0) -> bool:
        return bool(np.all((self.a - slack <= np.asarray(x))
                           & (np.asarray(x) <= self.b + slack)))

    def grid(self, n: int = 1001) -> np.ndarray:
        return np.linspace(self.a, self.b, n)

    def pdf(self, grid: np.ndarray) -> np.ndarray:
        """Tabulated density on ``grid`` (zero outside the support)."""
        grid = np.asarray(grid, dtype=float)
        return np.where((grid >= self.a) & (grid <= self.b),
                        self.density, 0.0)


def maxent_uniform(a: float, b: float) -> UniformInterval:
    """The entropy-maximising distribution on ``[a, b]``: the uniform.

    Knowing only that a parameter lies in ``[a, b]``, any non-uniform
    density encodes information nobody has; the uniform is the unique
    maximizer of :func:`entropy` under the normalization constraint.
    """
    return UniformInterval(a, b)


def entropy(grid: np.ndarray, density: np.ndarray) -> float:
    """Differential entropy ``-∫ p ln p`` of a tabulated density.

    Both the normalization check and the entropy integral use the
    trapezoid rule on ``grid``.  ``0 * ln 0`` is taken as 0 (the integrand
    extends continuously).  Raises :class:`NotNormalizedError` when the
    density does not integrate to 1 within 1e-8.
    """
    grid = np.asarray(grid, dtype=float)
    p = np.asarray(density, dtype=float)
    if grid.shape != p.shape or grid.ndim != 1:
        raise ValueError("grid and density must be matching 1-D arrays")
    if len(grid) < 2:
        raise ValueError("need at least 2 grid points")
    if np.any(p < 0.0):
        raise ValueError("density must be nonnegative")
    total = float(np.trapezoid(p, grid))
    if abs(total - 1.0) > 1e-8:
        raise NotNormalizedError(
            f"density integrates to {total!r}, expected 1 within 1e-8")
    integrand = np.where(p > 0.0, -p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return float(np.trapezoid(integrand, grid))


def interval_from_nominal(nominal: float, spread: float,
                          half_width: float | None = None) -> UniformInterval:
    """Interval ``[nominal*(1-spread), nominal*(1+spread)]``.

    ``spread`` is the relative half-width (0.2 means +/-20% around the
    nominal).  A zero nominal cannot carry a relative spread; supply an
    absolute ``half_width`` instead or get :class:`ZeroNominalError`.
    Negative nominals get the same relative width with bounds ordered.
    """
    if half_width is not None:
        if half_width <= 0.0:
            raise BadSupportError(
                f"half_width must be > 0, got {half_width}")
        return UniformInterval(nominal - half_width, nominal + half_width)
    if not 0.0 < spread < 1.0:
        raise ValueError(f"spread must be in (0, 1), got {spread}")
    if nominal == 0.0:
        raise ZeroNominalError(
            "relative spread around a zero nominal is empty; "
            "pass an absolute half_width")
    lo = nominal * (1.0 - spread)
    hi = nominal * (1.0 + spread)
    return UniformInterval(min(lo, hi), max(lo, hi))


@dataclass(frozen=True)
class RandomInputSpec:
    """Which parameters are random, on what supports, in what order.

    ``entries`` fixes the coordinate order of every sample matrix and
    every surrogate multi-index downstream; ``fixed`` carries the
    remaining model parameters.  Together they must cover each
    :data:`~behuq.dynamics.PARAM_NAMES` exactly once.
    """

    entries: tuple[tuple[str, UniformInterval], ...]
    fixed: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        names = [name for name, _ in self.entries]
        dup = set(names) & set(self.fixed)
        if dup:
            raise ValueError(f"parameters both random and fixed: {sorted(dup)}")
        covered = set(names) | set(self.fixed)
        missing = set(PARAM_NAMES) - covered
        extra = covered - set(PARAM_NAMES)
        if missing:
            raise ValueError(f"parameters not covered: {sorted(missing)}")
        if extra:
            raise ValueError(f"unknown parameters: {sorted(extra)}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    @property
    def dimension(self) -> int:
        return len(self.entries)

    def interval(self, name: str) -> UniformInterval:
        for n, iv in self.entries:
            if n == name:
                return iv
        raise KeyError(f"{name!r} is not a random parameter")

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.entries):
            if n == name:
                return i
        raise KeyError(f"{name!r} is not a random parameter")

    def params_from_row(self, row) -> HarvesterParams:
        """Assemble a full parameter set from one sample row."""
        values = dict(self.fixed)
        for (name, _), x in zip(self.entries, row):
            values[name] = float(x)
        values["lam"] = values.pop("lambda")
        return HarvesterParams(**values)

    def kernel_matrix(self, X: np.ndarray) -> np.ndarray:
        """Expand an ``(n, M)`` sample matrix to kernel parameter rows.

        Columns follow the compiled-kernel layout; ``phi`` and ``p``
        collapse into the gravity forcing term ``p*sin(phi)``.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        if X.shape[1] != self.dimension:
            raise ValueError(
                f"expected {self.dimension} columns, got {X.shape[1]}")
        cols = {}
        for jname in PARAM_NAMES:
            if jname in self.fixed:
                cols[jname] = np.full(n, self.fixed[jname])
            else:
                cols[jname] = X[:, self.index(jname)]
        out = np.empty((n, 9))
        out[:, 0] = cols["xi"]
        out[:, 1] = cols["chi"]
        out[:, 2] = cols["lambda"]
        out[:, 3] = cols["kappa"]
        out[:, 4] = cols["f"]
        out[:, 5] = cols["omega"]
        out[:, 6] = cols["beta"]
        out[:, 7] = cols["delta"]
        out[:, 8] = cols["p"] * np.sin(cols["phi"])
        return out


def sample(spec: RandomInputSpec, n: int,
           rng: np.random.Generator | int) -> np.ndarray:
    """Draw ``n`` i.i.d. rows; column ``j`` is uniform on ``entries[j]``.

    Deterministic per seed.  For parallel workers, derive disjoint child
    seeds with ``numpy.random.SeedSequence.spawn`` and concatenate; the
    merged sample is then independent of the worker count.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    lo = np.array([iv.a for _, iv in spec.entries])
    hi = np.array([iv.b for _, iv in spec.entries])
    return rng.uniform(lo, hi, size=(n, spec.dimension))


def to_standard(x, iv: UniformInterval):
    """Affine map of ``[a, b]`` onto ``[-1, 1]``:  ``(2x - a - b)/(b - a)``.

    The polynomial basis is orthonormal under the uniform weight on
    ``[-1, 1]``; physical samples pass through this map before touching
    the basis.  Endpoints land exactly on +/-1 and the computed midpoint
    exactly on 0.  Values outside the support (beyond a 1e-12 relative
    slack) raise :class:`OutOfSupportError`.
    """
    x = np.asarray(x, dtype=float)
    slack = 1e-12 * max(1.0, abs(iv.a), abs(iv.b))
    if not iv.contains(x, slack):
        raise OutOfSupportError(
            f"value(s) outside [{iv.a}, {iv.b}]")
    xi = (2.0 * x - (iv.a + iv.b)) / (iv.b - iv.a)
    xi = np.where(x == iv.a, -1.0, np.where(x == iv.b, 1.0, xi))
    xi = np.clip(xi, -1.0, 1.0)
    return float(xi) if xi.ndim == 0 else xi


def from_standard(xi, iv: UniformInterval):
    """Inverse of :func:`to_standard` (up to roundoff)."""
    xi = np.asarray(xi, dtype=float)
    x = 0.5 * (xi * (iv.b - iv.a) + (iv.a + iv.b))
    x = np.where(xi == -1.0, iv.a, np.where(xi == 1.0, iv.b, x))
    return float(x) if x.ndim == 0 else x


def standardize(spec: RandomInputSpec, X: np.ndarray) -> np.ndarray:
    """Column-wise :func:`to_standard` of a sample matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty_like(X)
    for j, (_, iv) in enumerate(spec.entries):
        out[:, j] = to_standard(X[:, j], iv)
    return out


def destandardize(spec: RandomInputSpec, Xi: np.ndarray) -> np.ndarray:
    """Column-wise :func:`from_standard` of a standardized matrix."""
    Xi = np.atleast_2d(np.asarray(Xi, dtype=float))
    out = np.empty_like(Xi)
    for j, (_, iv) in enumerate(spec.entries):
        out[:, j] = from_standard(Xi[:, j], iv)
    return out
