"""Harvester model: parameters, integration, power, equilibria.

The device is a bistable piezo-magneto-elastic oscillator in dimensionless
form.  With displacement ``x``, velocity ``xdot`` and voltage ``v`` the
governing equations are::

    xddot + 2*xi*xdot - 0.5*x*(1 + 2*delta*x - x**2)
        - (1 + beta*|x|)*chi*v = f*cos(omega*t) + p*sin(phi)
    vdot + lam*v + (1 + beta*|x|)*kappa*xdot = 0

``delta`` skews the potential, ``phi`` tilts the device against gravity
(``p`` is the gravity constant), and ``beta`` makes the piezoelectric
coupling grow with deflection.  Setting ``beta = delta = phi = 0`` recovers
the classical symmetric harvester with linear coupling.

Instantaneous dissipated power is ``lam*v**2``; the quantity of interest
everywhere else in the package is its time average over the post-transient
window.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels

#: Model parameter names in canonical order.  ``lambda`` is spelled out in
#: user-facing places (config files, CSV headers) but stored as ``lam`` on
#: :class:`HarvesterParams` because of the Python keyword.
PARAM_NAMES = ("xi", "chi", "lambda", "kappa", "f", "omega",
               "beta", "delta", "phi", "p")

_ATTR_FOR_NAME = {name: ("lam" if name == "lambda" else name)
                  for name in PARAM_NAMES}


class NonFiniteError(RuntimeError):
    """Integration produced a non-finite state.

    Carries ``t_fail``, the time of the first bad sample.
    """

    def __init__(self, t_fail: float):
        super().__init__(f"state became non-finite at t = {t_fail:g}")
        self.t_fail = t_fail


class EmptyWindowError(ValueError):
    """The requested averaging window contains fewer than two samples."""


class State(NamedTuple):
    """Phase-space point ``(x, xdot, v)``."""

    x: float
    xdot: float
    v: float


@dataclass(frozen=True)
class HarvesterParams:
    """Immutable parameter set for one harvester configuration.

    ``phi`` is in radians.  ``p`` multiplies ``sin(phi)``, so it is inert
    whenever ``phi`` is zero.
    """

    xi: float
    chi: float
    lam: float
    kappa: float
    f: float
    omega: float
    beta: float = 0.0
    delta: float = 0.0
    phi: float = 0.0
    p: float = 0.0

    def __post_init__(self):
        for name in ("xi", "chi", "lam", "kappa", "f", "omega",
                     "beta", "delta", "phi", "p"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.xi < 0:
            raise ValueError(f"xi must be >= 0, got {self.xi}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")

    def get(self, name: str) -> float:
        """Value by canonical name (accepts ``"lambda"``)."""
        return getattr(self, _ATTR_FOR_NAME[name])

    def replace(self, **changes) -> "HarvesterParams":
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        return dataclasses.replace(self, **changes)

    @property
    def variant(self) -> str:
        """Which of the three model families these values fall in."""
        if self.delta != 0.0 or self.phi != 0.0:
            return "asymmetric"
        if self.beta != 0.0:
            return "sym-nonlinear"
        return "sym-linear"

    def kernel_row(self) -> np.ndarray:
        """Pack into the 9-column layout the compiled kernels expect."""
        return np.array([self.xi, self.chi, self.lam, self.kappa,
                         self.f, self.omega, self.beta, self.delta,
                         self.p * math.sin(self.phi)])


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution on a uniform time grid.

    ``power`` is ``lam*v*v`` evaluated at the stored samples (that exact
    operation order), so ``power[i]`` and ``v[i]`` always satisfy the
    dissipation identity bit-for-bit.
    """

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    v: np.ndarray
    power: np.ndarray
    dt: float
    params: HarvesterParams

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> State:
        return State(self.x[i], self.xdot[i], self.v[i])

    def steady_window(self, transient_fraction: float = 0.5) -> "Trajectory":
        """Drop the leading transient, keeping the final stretch.

        The cut index follows the same rule as :func:`mean_power`, so the
        returned trajectory is exactly the averaging window.
        """
        i0 = transient_cut(len(self.t) - 1, transient_fraction)
        return Trajectory(t=self.t[i0:], x=self.x[i0:], xdot=self.xdot[i0:],
                          v=self.v[i0:], power=self.power[i0:], dt=self.dt,
                          params=self.params)


def transient_cut(n_steps: int, transient_fraction: float) -> int:
    """Index of the first retained sample when discarding the transient."""
    if not 0.0 <= transient_fraction < 1.0:
        raise ValueError(
            f"transient_fraction must be in [0, 1), got {transient_fraction}")
    return int(round(transient_fraction * n_steps))


def rhs(state: State, t: float, params: HarvesterParams) -> State:
    """Right-hand side of the first-order system at ``(state, t)``.

    Returned as ``(dx, dxdot, dv)``.  This is the reference statement of
    the model; the compiled kernels inline the same expressions.
    """
    x, xd, v = state
    pr = params
    coupling = (1.0 + pr.beta * abs(x)) * pr.chi
    dxd = (-2.0 * pr.xi * xd
           + 0.5 * x * (1.0 + 2.0 * pr.delta * x - x * x)
           + coupling * v
           + pr.f * math.cos(pr.omega * t)
           + pr.p * math.sin(pr.phi))
    dv = -pr.lam * v - (1.0 + pr.beta * abs(x)) * pr.kappa * xd
    return State(xd, dxd, dv)


def integrate(params: HarvesterParams,
              ic: State = State(1.0, 0.0, 0.0),
              t_end: float = 2000.0,
              dt: float = 0.01) -> Trajectory:
    """Fixed-step RK4 solution from ``t = 0`` to ``t_end``.

    The step count is ``round(t_end/dt)``; ``t_end`` is snapped onto the
    grid rather than split into a short final step, keeping the grid
    uniform.  Raises :class:`NonFiniteError` if the state blows up.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if t_end <= 0.0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ValueError(f"t_end = {t_end} is shorter than one step")

    xs, xds, vs, n_bad = _kernels.run_states(
        params.kernel_row(), ic.x, ic.xdot, ic.v, dt, n_steps)
    if n_bad >= 0:
        raise NonFiniteError(n_bad * dt)

    t = np.arange(n_steps + 1) * dt
    power = params.lam * vs * vs
    return Trajectory(t=t, x=xs, xdot=xds, v=vs, power=power, dt=dt,
                      params=params)


def mean_power(traj: Trajectory, transient_fraction: float = 0.5) -> float:
    """Trapezoid average of the dissipated power over the retained window."""
    i0 = transient_cut(len(traj.t) - 1, transient_fraction)
    t = traj.t[i0:]
    p = traj.power[i0:]
    if len(t) < 2:
        raise EmptyWindowError(
            f"averaging window has {len(t)} sample(s); need at least 2")
    return float(np.trapezoid(p, t) / (t[-1] - t[0]))


def equilibria(params: HarvesterParams) -> list[tuple[float, bool]]:
    """Rest points of the unforced system, each tagged stable/unstable.

    Solves ``0.5*x*(1 + 2*delta*x - x**2) + p*sin(phi) = 0``; a root is
    stable when the restoring-force slope ``0.5 + 2*delta*x - 1.5*x**2`` is
    negative there.  Returns the real roots sorted ascending: three for a
    bistable potential (outer two stable, middle one the saddle), one when
    the static tilt has swallowed a well.
    """
    coeffs = [-0.5, params.delta, 0.5, params.p * math.sin(params.phi)]
    roots = np.roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = np.sort(roots[np.abs(roots.imag) < 1e-9 * scale].real)

    out: list[tuple[float, bool]] = []
    for r in real:
        if out and abs(r - out[-1][0]) < 1e-9 * scale:
            continue  # double root from a degenerate potential
        slope = 0.5 + 2.0 * params.delta * r - 1.5 * r * r
        out.append((float(r), bool(slope < 0.0)))
    return out


def batch_mean_power(rows: np.ndarray,
                     ic: State = State(1.0, 0.0, 0.0),
                     t_end: float = 2000.0,
                     dt: float = 0.01,
                     transient_fraction: float = 0.5) -> np.ndarray:
    """Mean power for many parameter rows at once.

    ``rows`` is ``(n, 9)`` in kernel layout (see
    :meth:`HarvesterParams.kernel_row`).  Lanes whose state blows up come
    back as NaN instead of raising, so one divergent sample cannot abort a
    Monte Carlo sweep; callers decide how to treat them.  Each row's states
    are bit-identical to an :func:`integrate` run of the same row; the
    averaged power matches :func:`mean_power` to rounding error (the two
    paths bracket the same trapezoid sum differently).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    n_steps = int(round(t_end / dt))
    i_cut = transient_cut(n_steps, transient_fraction)
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    return _kernels.batch_mean_power(rows, ic.x, ic.xdot, ic.v,
                                     dt, n_steps, i_cut)


def batch_power_series(rows: np.ndarray,
                       ic: State = State(1.0, 0.0, 0.0),
                       t_end: float = 2000.0,
                       dt: float = 0.01,
                       stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Instantaneous power histories for many rows, subsampled by ``stride``.

    Returns ``(t, P)`` with ``P`` of shape ``(n, len(t))`` and
    ``t[k] = k*stride*dt``.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n_steps = int(round(t_end / dt))
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    series = _kernels.batch_power_series(rows, ic.x, ic.xdot, ic.v,
                                         dt, n_steps, stride)
    t = np.arange(series.shape[1]) * (stride * dt)
    return t, series
