"""Polynomial-chaos surrogates on uniform inputs.

The mean power responds smoothly to the uncertain parameters inside a
dynamical regime, so a low-degree polynomial in the standardized inputs
captures it with a few thousand model runs.  The basis is the orthonormal
Legendre family (the polynomials orthonormal under the uniform density the
inputs actually follow), truncated by total degree; coefficients come from
least squares on sampled model output.  Orthonormality is what makes the
surrogate more than a curve fit: the constant coefficient *is* the response
mean and the remaining sum of squares *is* the variance.

Every fit carries diagnostics.  The condition estimate flags an unlucky or
too-small design, and the leave-one-out error — computed exactly from the
fit's own factorization, no refitting — measures out-of-sample validity.
Near regime boundaries the parameter-to-power map turns rough and no
polynomial is honest; callers watch the leave-one-out error and fall back
to direct Monte Carlo past a threshold rather than trusting a smooth
surrogate of a non-smooth map.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .probability import (RandomInputSpec, UniformInterval, destandardize,
                          sample, standardize)


class UnderdeterminedError(ValueError):
    """Fewer samples than the oversampling rule requires."""


class IllConditionedWarning(UserWarning):
    """Design-matrix condition estimate exceeds the trust limit."""


def legendre_1d(n: int, xi):
    """Orthonormal Legendre value ``sqrt(2n+1) * P_n(xi)``.

    Orthonormal under the uniform density 1/2 on ``[-1, 1]``:
    ``∫ psi_m psi_n dxi/2 = delta_mn``.  Uses the three-term recurrence
    ``(k+1) P_{k+1} = (2k+1) xi P_k - k P_{k-1}``; accepts scalars or
    arrays.  ``xi`` is expected in ``[-1, 1]`` (the caller standardizes).
    """
    if n < 0:
        raise ValueError(f"degree must be >= 0, got {n}")
    xi = np.asarray(xi, dtype=float)
    pkm1 = np.ones_like(xi)
    if n == 0:
        out = pkm1
    else:
        pk = xi.copy()
        for k in range(1, n):
            pkm1, pk = pk, ((2 * k + 1) * xi * pk - k * pkm1) / (k + 1)
        out = pk
    out = math.sqrt(2 * n + 1) * out
    return float(out) if out.ndim == 0 else out


def legendre_table(max_degree: int, xi: np.ndarray) -> np.ndarray:
    """All orthonormal Legendre values up to ``max_degree`` at once.

    Returns shape ``(len(xi), max_degree + 1)``; column ``n`` equals
    ``legendre_1d(n, xi)``.
    """
    xi = np.asarray(xi, dtype=float)
    table = np.empty((len(xi), max_degree + 1))
    table[:, 0] = 1.0
    if max_degree >= 1:
        table[:, 1] = xi
    for k in range(1, max_degree):
        table[:, k + 1] = ((2 * k + 1) * xi * table[:, k]
                           - k * table[:, k - 1]) / (k + 1)
    for n in range(max_degree + 1):
        table[:, n] *= math.sqrt(2 * n + 1)
    return table


def total_degree_set(M: int, p: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices in ``M`` dimensions with total degree <= ``p``.

    Graded order: sorted by total degree first, lexicographically within
    a degree; the all-zeros index is first.  The count is the binomial
    ``C(M + p, p)``.
    """
    if M < 1:
        raise ValueError(f"dimension must be >= 1, got {M}")
    if p < 0:
        raise ValueError(f"degree must be >= 0, got {p}")
    indices = [idx for idx in itertools.product(range(p + 1), repeat=M)
               if sum(idx) <= p]
    indices.sort(key=lambda idx: (sum(idx), idx))
    return tuple(indices)


def basis_eval(idx: tuple[int, ...], xi_vec):
    """Tensor-product basis value: product of 1-d values per coordinate.

    ``xi_vec`` is one standardized point of length ``M`` (or an
    ``(n, M)`` batch; then a length-``n`` vector comes back).
    """
    xi_vec = np.atleast_2d(np.asarray(xi_vec, dtype=float))
    if xi_vec.shape[1] != len(idx):
        raise ValueError(
            f"index has {len(idx)} coordinates, point has {xi_vec.shape[1]}")
    out = np.ones(xi_vec.shape[0])
    for j, n in enumerate(idx):
        if n > 0:
            out *= legendre_1d(n, xi_vec[:, j])
    return float(out[0]) if len(out) == 1 else out


def design_matrix(indices, Xi: np.ndarray) -> np.ndarray:
    """Basis values at every standardized sample: ``Psi[i, k] = psi_k(Xi_i)``."""
    Xi = np.atleast_2d(np.asarray(Xi, dtype=float))
    max_degree = max(max(idx) for idx in indices)
    tables = [legendre_table(max_degree, Xi[:, j])
              for j in range(Xi.shape[1])]
    Psi = np.ones((Xi.shape[0], len(indices)))
    for k, idx in enumerate(indices):
        for j, n in enumerate(idx):
            if n > 0:
                Psi[:, k] *= tables[j][:, n]
    return Psi


@dataclass(frozen=True)
class FitDiagnostics:
    """Health report of a least-squares fit."""

    condition: float
    loo_error: float
    n_samples: int
    rank: int


@dataclass(frozen=True)
class PceSurrogate:
    """Fitted polynomial-chaos expansion.

    ``indices[0]`` is always the all-zeros index, so ``coeffs[0]`` is the
    response mean; the sum of the squares of the remaining coefficients is
    the response variance (orthonormal basis).
    """

    spec: RandomInputSpec
    degree: int
    indices: tuple[tuple[int, ...], ...]
    coeffs: np.ndarray
    diagnostics: FitDiagnostics

    def __post_init__(self):
        if any(self.indices[0]):
            raise ValueError("indices[0] must be the all-zeros index")
        if len(self.indices) != len(self.coeffs):
            raise ValueError("one coefficient per index required")


def fit_least_squares(spec: RandomInputSpec, X: np.ndarray, y: np.ndarray,
                      degree: int,
                      oversampling: float = 2.0) -> PceSurrogate:
    """Fit surrogate coefficients by least squares on model output.

    ``X`` is an ``(n, M)`` physical-space sample, ``y`` the model output at
    those samples.  Requires ``n >= oversampling * C(M+degree, degree)``
    (:class:`UnderdeterminedError` otherwise).  The system is solved
    through a singular-value decomposition — a rank-revealing orthogonal
    factorization; normal equations would square the condition number —
    and the same factorization yields the condition estimate and the exact
    leave-one-out error.  A condition estimate beyond 1e8 emits
    :class:`IllConditionedWarning`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    if len(y) != n:
        raise ValueError(f"X has {n} rows but y has {len(y)} values")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    indices = total_degree_set(spec.dimension, degree)
    n_basis = len(indices)
    if n < oversampling * n_basis:
        raise UnderdeterminedError(
            f"{n} samples for {n_basis} basis terms; need at least "
            f"{math.ceil(oversampling * n_basis)} "
            f"(oversampling {oversampling})")

    Xi = standardize(spec, X)
    Psi = design_matrix(indices, Xi)

    U, s, Vt = np.linalg.svd(Psi, full_matrices=False)
    cutoff = s[0] * max(Psi.shape) * np.finfo(float).eps
    kept = s > cutoff
    rank = int(np.count_nonzero(kept))
    condition = float(s[0] / s[kept][-1]) if rank else math.inf
    if condition > 1e8:
        warnings.warn(
            f"design matrix condition estimate {condition:.3e} exceeds 1e8; "
            "coefficients may be unreliable (more samples or lower degree "
            "advised)", IllConditionedWarning, stacklevel=2)

    uty = U.T @ y
    coeffs = Vt[kept].T @ (uty[kept] / s[kept])

    # Exact leave-one-out residuals from the hat-matrix diagonal
    # h_i = sum_k U[i,k]^2: e_loo_i = e_i / (1 - h_i), no refitting.
    resid = y - Psi @ coeffs
    h = np.sum(U[:, kept] ** 2, axis=1)
    denom = np.maximum(1.0 - h, 1e-12)
    loo_sq = np.mean((resid / denom) ** 2)
    var_y = float(np.var(y, ddof=1)) if n > 1 else 0.0
    if var_y > 0.0:
        loo = float(loo_sq / var_y)
    else:
        loo = 0.0 if np.allclose(resid, 0.0) else math.inf

    diag = FitDiagnostics(condition=condition, loo_error=loo,
                          n_samples=n, rank=rank)
    return PceSurrogate(spec=spec, degree=degree, indices=indices,
                        coeffs=coeffs, diagnostics=diag)


def predict(s: PceSurrogate, x):
    """Surrogate value(s) at physical-space point(s) within the supports."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xi = standardize(s.spec, np.atleast_2d(x))
    Psi = design_matrix(s.indices, Xi)
    out = Psi @ s.coeffs
    return float(out[0]) if single else out


def mean(s: PceSurrogate) -> float:
    """Response mean: the coefficient of the constant basis term."""
    return float(s.coeffs[0])


def variance(s: PceSurrogate) -> float:
    """Response variance: sum of squared non-constant coefficients."""
    return float(np.sum(s.coeffs[1:] ** 2))


def std(s: PceSurrogate) -> float:
    return math.sqrt(variance(s))


def loo_error(s: PceSurrogate) -> float:
    """Normalized leave-one-out error of the fit (0 = perfect, ~1 = noise)."""
    return s.diagnostics.loo_error


def sample_response(s: PceSurrogate, n: int,
                    rng: np.random.Generator | int) -> np.ndarray:
    """Draw ``n`` fresh input samples and evaluate the surrogate on them."""
    X = sample(s.spec, n, rng)
    return predict(s, X)


def to_dict(s: PceSurrogate) -> dict:
    """Plain-data form of a surrogate (JSON-ready, bit-exact floats)."""
    return {
        "format": "pce-surrogate",
        "version": 1,
        "spec": {
            "entries": [{"name": name, "a": iv.a, "b": iv.b}
                        for name, iv in s.spec.entries],
            "fixed": dict(s.spec.fixed),
        },
        "degree": s.degree,
        "indices": [list(idx) for idx in s.indices],
        "coeffs": [float(c) for c in s.coeffs],
        "diagnostics": {
            "condition": s.diagnostics.condition,
            "loo_error": s.diagnostics.loo_error,
            "n_samples": s.diagnostics.n_samples,
            "rank": s.diagnostics.rank,
        },
    }


def from_dict(doc: dict) -> PceSurrogate:
    if doc.get("format") != "pce-surrogate":
        raise ValueError("not a surrogate document")
    spec = RandomInputSpec(
        entries=tuple((e["name"], UniformInterval(e["a"], e["b"]))
                      for e in doc["spec"]["entries"]),
        fixed={k: float(v) for k, v in doc["spec"]["fixed"].items()},
    )
    d = doc["diagnostics"]
    return PceSurrogate(
        spec=spec,
        degree=int(doc["degree"]),
        indices=tuple(tuple(int(i) for i in idx) for idx in doc["indices"]),
        coeffs=np.array(doc["coeffs"], dtype=float),
        diagnostics=FitDiagnostics(
            condition=float(d["condition"]), loo_error=float(d["loo_error"]),
            n_samples=int(d["n_samples"]), rank=int(d["rank"])),
    )


def save(s: PceSurrogate, path) -> None:
    """Write the surrogate as JSON; coefficients round-trip bit-exactly.

    Floats are emitted in Python's shortest-round-trip decimal form
    (at most 17 significant digits), so ``load(save(s))`` reproduces every
    coefficient bit for bit.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_dict(s), indent=2) + "\n",
                    encoding="utf-8")


def load(path) -> PceSurrogate:
    return from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
