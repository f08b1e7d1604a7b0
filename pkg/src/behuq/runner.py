"""Experiment orchestration: cases, sweeps, artifacts, manifests.

This layer turns a validated :class:`~behuq.config.ExperimentConfig` into
the reproduction bundle: per-amplitude surrogate fits and sample clouds,
densities, conditional maps, probability curves, time-domain bands, and a
manifest tying every artifact to the seed and config hash that made it.

Reproducibility scheme: every random stream is derived from the master
seed through ``numpy.random.SeedSequence(seed, spawn_key=(purpose,
f_bits...))``, where ``purpose`` separates design sampling, surrogate
draws, chaos-test phases, band ensembles and Monte Carlo fallbacks, and
``f_bits`` are the IEEE bits of the case amplitude.  Streams therefore
depend only on (seed, amplitude, purpose) — never on execution order or
worker count — which is what makes the output tree byte-identical across
reruns and ``--jobs`` settings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classify, dynamics, pce, stats
from .config import ExperimentConfig
from .probability import RandomInputSpec, sample

# Stream purposes for seed derivation; values are part of the
# reproducibility contract (renumbering changes every artifact).
_PURPOSE_DESIGN = 1
_PURPOSE_CLOUD = 2
_PURPOSE_PHASES = 3
_PURPOSE_BAND = 4
_PURPOSE_MC = 5

#: Table-style magnitude thresholds for the asymmetry events.
DELTA_EVENT_MAGNITUDE = 0.1
PHI_EVENT_MAGNITUDE = math.radians(10.0)


class NumericalFailure(RuntimeError):
    """A model evaluation batch produced too many non-finite samples."""


def case_rng(seed: int, f: float, purpose: int) -> np.random.Generator:
    """Deterministic stream for one (seed, amplitude, purpose) triple."""
    bits = int(np.float64(f).view(np.uint64))
    ss = np.random.SeedSequence(
        entropy=seed, spawn_key=(purpose, bits >> 32, bits & 0xFFFFFFFF))
    return np.random.default_rng(ss)


def model_cloud(cfg: ExperimentConfig, spec: RandomInputSpec,
                X: np.ndarray) -> np.ndarray:
    """Mean power from direct model runs at every sample row.

    A handful of divergent lanes are tolerated (dropped by the caller via
    NaN); more than 1% aborts with :class:`NumericalFailure`, since a
    cloud that loses weight stops being a sample of the input law.
    """
    y = dynamics.batch_mean_power(
        spec.kernel_matrix(X), ic=cfg.ic, t_end=cfg.t_end, dt=cfg.dt,
        transient_fraction=cfg.transient_fraction)
    bad = ~np.isfinite(y)
    if np.count_nonzero(bad) > 0.01 * len(y):
        raise NumericalFailure(
            f"{np.count_nonzero(bad)} of {len(y)} model runs diverged")
    return y


def nominal_power(cfg: ExperimentConfig, f: float | None = None) -> float:
    """Mean power at the all-nominal point (batch path, one row)."""
    row = cfg.nominal_params(f).kernel_row()[None, :]
    value = dynamics.batch_mean_power(
        row, ic=cfg.ic, t_end=cfg.t_end, dt=cfg.dt,
        transient_fraction=cfg.transient_fraction)[0]
    if not np.isfinite(value):
        raise NumericalFailure("nominal trajectory diverged")
    return float(value)


def label_nominal(cfg: ExperimentConfig,
                  f: float | None = None) -> classify.MotionLabel:
    """Motion label of the nominal trajectory at amplitude ``f``.

    Integrates over ``classify_t_end`` (longer than the power window; the
    0-1 test needs the extra samples near regime boundaries).
    """
    fv = cfg.f if f is None else f
    traj = dynamics.integrate(cfg.nominal_params(fv), ic=cfg.ic,
                              t_end=cfg.classify_t_end, dt=cfg.dt)
    return classify.classify_motion(
        traj.steady_window(cfg.transient_fraction),
        rng=case_rng(cfg.seed, fv, _PURPOSE_PHASES),
        k_threshold=cfg.k_threshold)


@dataclass(frozen=True)
class FitResult:
    """Design runs plus the surrogate fitted to them."""

    f: float
    label: classify.MotionLabel
    nominal_power: float
    surrogate: pce.PceSurrogate
    design: stats.QoISamples


@dataclass(frozen=True)
class CaseResult:
    """Everything one (variant, amplitude) case produces."""

    f: float
    label: classify.MotionLabel
    nominal_power: float
    surrogate: pce.PceSurrogate
    design: stats.QoISamples
    cloud: stats.QoISamples
    used_mc: bool


def fit_case(cfg: ExperimentConfig, f: float) -> FitResult:
    """Model runs at the design sample and the least-squares surrogate."""
    spec = cfg.input_spec(f)
    X = sample(spec, cfg.n_samples, case_rng(cfg.seed, f, _PURPOSE_DESIGN))
    y = model_cloud(cfg, spec, X)
    keep = np.isfinite(y)
    p_nom = nominal_power(cfg, f)
    design = stats.QoISamples(values=y[keep], inputs=X[keep],
                              names=spec.names, nominal_power=p_nom)
    surrogate = pce.fit_least_squares(spec, X[keep], y[keep], cfg.degree,
                                      cfg.oversampling)
    return FitResult(f=f, label=label_nominal(cfg, f), nominal_power=p_nom,
                     surrogate=surrogate, design=design)


def run_case(cfg: ExperimentConfig, f: float,
             force_mc: bool = False) -> CaseResult:
    """Design runs, surrogate fit, and the analysis cloud for one amplitude.

    The analysis cloud comes from the surrogate (``surrogate_draws``
    predictions — cheap) unless its leave-one-out error exceeds
    ``loo_threshold`` or ``force_mc`` is set; then ``mc_draws`` direct
    model runs take its place.  Near regime boundaries the power map is
    not smooth and a polynomial cloud would be wishful thinking.
    """
    fr = fit_case(cfg, f)
    spec = cfg.input_spec(f)
    used_mc = force_mc or pce.loo_error(fr.surrogate) > cfg.loo_threshold
    if used_mc:
        Xc = sample(spec, cfg.mc_draws, case_rng(cfg.seed, f, _PURPOSE_MC))
        yc = model_cloud(cfg, spec, Xc)
        keep = np.isfinite(yc)
        Xc, yc = Xc[keep], yc[keep]
    else:
        Xc = sample(spec, cfg.surrogate_draws,
                    case_rng(cfg.seed, f, _PURPOSE_CLOUD))
        # Mean dissipated power cannot be negative; truncate the polynomial
        # tails at the physical lower bound so the distribution statistics
        # do not inherit impossible values.
        yc = np.maximum(pce.predict(fr.surrogate, Xc), 0.0)
    cloud = stats.QoISamples(values=yc, inputs=Xc, names=spec.names,
                             nominal_power=fr.nominal_power)
    return CaseResult(f=f, label=fr.label, nominal_power=fr.nominal_power,
                      surrogate=fr.surrogate, design=fr.design, cloud=cloud,
                      used_mc=used_mc)


def run_band(cfg: ExperimentConfig, parameter: str, f: float | None = None,
             members: int | None = None) -> stats.Band:
    """Confidence band of the power series with one parameter random.

    Bands isolate a single parameter's influence (all others pinned at
    nominal) and always come from direct integrations — the surrogate
    models the scalar mean power, not the time series.
    """
    fv = cfg.f if f is None else f
    n_members = cfg.band_members if members is None else members
    spec = cfg.input_spec(fv, random_params=(parameter,))
    X = sample(spec, n_members, case_rng(cfg.seed, fv, _PURPOSE_BAND))
    t, ensemble = dynamics.batch_power_series(
        spec.kernel_matrix(X), ic=cfg.ic, t_end=cfg.t_end, dt=cfg.dt,
        stride=cfg.band_stride)
    _, nominal = dynamics.batch_power_series(
        cfg.nominal_params(fv).kernel_row()[None, :], ic=cfg.ic,
        t_end=cfg.t_end, dt=cfg.dt, stride=cfg.band_stride)
    if not (np.all(np.isfinite(ensemble)) and np.all(np.isfinite(nominal))):
        raise NumericalFailure("band ensemble contains divergent members")
    return stats.confidence_band(t, ensemble, nominal[0], cfg.level)


def event_domains(cfg: ExperimentConfig,
                  f: float | None = None) -> dict[str, stats.EventDomain]:
    """Conditioning events for every random parameter at amplitude ``f``.

    The scale parameters get the 10%-increase event ``X >= 1.1 * nominal``
    in both families; the asymmetry parameters get magnitude events —
    ``|delta| >= 0.1`` / ``|phi| >= 10 deg`` under ``D1`` (strong
    asymmetry), the complementary ``<=`` events under ``D2`` (weak).
    """
    spec_names = cfg.input_spec(f).names
    out: dict[str, stats.EventDomain] = {}
    for name in spec_names:
        if name == "delta":
            out[name] = (
                stats.EventDomain.magnitude_at_least(
                    name, DELTA_EVENT_MAGNITUDE)
                if cfg.domain == "D1"
                else stats.EventDomain.magnitude_at_most(
                    name, DELTA_EVENT_MAGNITUDE))
        elif name == "phi":
            out[name] = (
                stats.EventDomain.magnitude_at_least(
                    name, PHI_EVENT_MAGNITUDE)
                if cfg.domain == "D1"
                else stats.EventDomain.magnitude_at_most(
                    name, PHI_EVENT_MAGNITUDE))
        else:
            out[name] = stats.EventDomain.increase(
                name, cfg.nominal(name, f))
    return out


def sweep_curve(cfg: ExperimentConfig,
                results: list[CaseResult]) -> list[stats.CurvePoint]:
    """Probability curves over the sweep from already-run cases."""
    return stats.cond_prob_curve(
        (r.f, r.cloud, r.label.kind, event_domains(cfg, r.f), cfg.gain)
        for r in results)


# -- artifact writing ------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: list[str], rows) -> None:
    """Comma-separated, header row, LF endings, floats at 17 digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_json(path, doc: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def write_trajectory_csv(path, traj: dynamics.Trajectory) -> None:
    write_csv(path, ["t", "x", "xdot", "v", "P"],
              zip(traj.t, traj.x, traj.xdot, traj.v, traj.power))


def write_samples_csv(path, q: stats.QoISamples) -> None:
    write_csv(path, list(q.names) + ["mean_power"],
              (tuple(row) + (val,)
               for row, val in zip(q.inputs, q.values)))


def write_kde_csv(path, grid: np.ndarray, density: np.ndarray) -> None:
    write_csv(path, ["power_norm", "density"], zip(grid, density))


def write_map_csv(path, cmap: stats.ConditionalMap) -> None:
    rows = ((cmap.param_grid[j], cmap.power_grid[k], cmap.cdf[k, j])
            for j in range(len(cmap.param_grid))
            for k in range(len(cmap.power_grid)))
    write_csv(path, ["param_value", "power_value", "cdf"], rows)


def write_curve_csv(path, points: list[stats.CurvePoint]) -> None:
    write_csv(path,
              ["f_nominal", "parameter", "probability", "ci_lo", "ci_hi",
               "motion"],
              ((p.f_nominal, p.parameter, p.probability, p.ci_low,
                p.ci_high, p.motion) for p in points))


def write_band_csv(path, band: stats.Band) -> None:
    write_csv(path, ["t", "lower", "nominal", "upper"],
              zip(band.t, band.lower, band.nominal, band.upper))


def diagnostics_doc(r: CaseResult | FitResult) -> dict:
    d = r.surrogate.diagnostics
    doc = {
        "f": r.f,
        "motion": str(r.label.kind),
        "crossings": r.label.crossings,
        "k_statistic": r.label.k_statistic,
        "nominal_power": r.nominal_power,
        "condition": d.condition,
        "loo_error": d.loo_error,
        "n_samples": d.n_samples,
        "rank": d.rank,
        "degree": r.surrogate.degree,
    }
    if isinstance(r, CaseResult):
        doc["cloud"] = "mc" if r.used_mc else "surrogate"
        doc["cloud_size"] = len(r.cloud)
    return doc


# -- the sweep --------------------------------------------------------------

def case_dirname(f: float) -> str:
    return f"f_{f:.3f}"

_BAND_AMPLITUDES = (0.041, 0.091, 0.250)


def run_sweep(cfg: ExperimentConfig, out_dir, force_mc: bool = False,
              jobs: int = 1) -> dict:
    """Run every sweep amplitude and write the full artifact bundle.

    Layout under ``out_dir``::

        config_resolved.ini
        manifest.json
        f_<amp>/design.csv        model-run design sample (inputs + power)
        f_<amp>/surrogate.json    fitted expansion, bit-exact round-trip
        f_<amp>/diagnostics.json  fit health + motion label
        f_<amp>/kde.csv           normalized mean-power density
        f_<amp>/map_<param>.csv   conditional CDF surface per parameter
        condprob_<domain>.csv     probability curves over the sweep
        bands_f<amp>_<param>.csv  time-domain bands at the anchor
                                  amplitudes (band amplitudes are taken
                                  from the sweep where present)

    Failed cases are recorded in the manifest and skipped; the function
    returns the manifest dict (``failures`` non-empty on partial failure).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_resolved.ini").write_text(cfg.resolved_ini(),
                                             encoding="utf-8")
    artifacts: list[dict] = []
    failures: list[dict] = []

    def note(path: Path, kind: str, f: float | None = None) -> None:
        entry = {"path": str(path.relative_to(out)), "kind": kind,
                 "seed": cfg.seed, "config": cfg.config_hash()}
        if f is not None:
            entry["f"] = f
        artifacts.append(entry)

    results: list[CaseResult] = []
    case_list = list(cfg.f_sweep)
    if jobs > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_case, cfg, f, force_mc): f
                       for f in case_list}
            done = {}
            for fut in cf.as_completed(futures):
                f = futures[fut]
                try:
                    done[f] = fut.result()
                except Exception as exc:  # noqa: BLE001 - recorded, not lost
                    failures.append({"f": f, "error": str(exc)})
            results = [done[f] for f in case_list if f in done]
    else:
        for f in case_list:
            try:
                results.append(run_case(cfg, f, force_mc))
            except Exception as exc:  # noqa: BLE001 - recorded, not lost
                failures.append({"f": f, "error": str(exc)})

    for r in results:
        d = out / case_dirname(r.f)
        write_samples_csv(d / "design.csv", r.design)
        note(d / "design.csv", "design", r.f)
        pce.save(r.surrogate, d / "surrogate.json")
        note(d / "surrogate.json", "surrogate", r.f)

        # Fixed +-3 sigma display window: every amplitude's density lands on
        # the same normalized axis, and far outliers cannot stretch the grid
        # until the bulk loses resolution.
        grid, density = stats.kde(stats.normalize(r.cloud.values),
                                  grid=np.linspace(-3.0, 3.0,
                                                   cfg.kde_grid_size))
        write_kde_csv(d / "kde.csv", grid, density)
        note(d / "kde.csv", "kde", r.f)

        doc = diagnostics_doc(r)
        doc["modality"] = stats.modality(density)
        write_json(d / "diagnostics.json", doc)
        note(d / "diagnostics.json", "diagnostics", r.f)

        for name in r.cloud.names:
            cmap = stats.conditional_cdf_map(
                r.cloud, name, cfg.n_param_bins, cfg.n_power_grid)
            write_map_csv(d / f"map_{name}.csv", cmap)
            note(d / f"map_{name}.csv", "map", r.f)

    if results:
        points = sweep_curve(cfg, results)
        curve_path = out / f"condprob_{cfg.domain}.csv"
        write_curve_csv(curve_path, points)
        note(curve_path, "condprob")

    band_fs = [f for f in _BAND_AMPLITUDES if f in case_list] or case_list[:1]
    for f in band_fs:
        for name in cfg.random_params:
            try:
                band = run_band(cfg, name, f)
            except Exception as exc:  # noqa: BLE001 - recorded, not lost
                failures.append(
                    {"f": f, "band": name, "error": str(exc)})
                continue
            path = out / f"bands_f{f:.3f}_{name}.csv"
            write_band_csv(path, band)
            note(path, "band", f)

    manifest = {
        "tool": "behuq",
        "variant": cfg.variant,
        "seed": cfg.seed,
        "config": cfg.config_hash(),
        "amplitudes": case_list,
        "artifacts": artifacts,
        "failures": failures,
    }
    write_json(out / "manifest.json", manifest)
    return manifest
