"""Command-line front end.

Eight subcommands cover the experiment surface::

    simulate   one nominal trajectory -> CSV + motion label
    classify   motion label of the nominal trajectory
    sample     draw an input sample matrix -> CSV
    fit        design runs + surrogate fit -> surrogate & diagnostics JSON
    maps       conditional-CDF CSVs per parameter (per amplitude)
    condprob   probability curves over the sweep -> CSV
    bands      one-parameter confidence band -> CSV
    sweep      the full reproduction bundle with a manifest

Common flags: ``--config PATH`` (INI file), ``--seed N``, ``--out DIR``,
``--mc`` (direct Monte Carlo instead of surrogate clouds), ``--jobs N``,
and ``--set section.key=value`` for any config override.  Exit codes:
0 success, 1 usage/config/IO error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import classify, dynamics, pce, runner, stats
from .config import (ConfigError, ExperimentConfig, load_config,
                     parse_cli_sets)
from .probability import sample as draw_sample

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="INI config file")
    p.add_argument("--seed", type=int, metavar="N",
                   help="master seed (overrides config)")
    p.add_argument("--out", metavar="DIR", default=".",
                   help="output directory (default: current)")
    p.add_argument("--variant", choices=("sym-linear", "sym-nonlinear",
                                         "asymmetric"),
                   help="model family (overrides config)")
    p.add_argument("--f", type=float, metavar="AMP",
                   help="nominal excitation amplitude (overrides config)")
    p.add_argument("--mc", action="store_true",
                   help="use direct Monte Carlo clouds, never the surrogate")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="parallel workers for the sweep (results identical)")
    p.add_argument("--set", action="append", default=[], metavar="S.K=V",
                   help="override any config key, e.g. --set pce.degree=4")


def _build_config(args) -> ExperimentConfig:
    overrides = parse_cli_sets(args.set)
    if args.variant is not None:
        overrides[("model", "variant")] = args.variant
    if args.f is not None:
        overrides[("model", "f")] = repr(args.f)
    if args.seed is not None:
        overrides[("random", "seed")] = str(args.seed)
    for name in ("kappa", "x0", "xd0", "v0"):
        value = getattr(args, name, None)
        if value is not None:
            section = "model" if name == "kappa" else "integrator"
            overrides[(section, name)] = repr(value)
    return load_config(args.config, overrides)


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    traj = dynamics.integrate(cfg.nominal_params(), ic=cfg.ic,
                              t_end=cfg.t_end, dt=cfg.dt)
    out = Path(args.out)
    runner.write_trajectory_csv(out / "trajectory.csv", traj)
    label = runner.label_nominal(cfg)
    power = dynamics.mean_power(traj, cfg.transient_fraction)
    print(f"motion={label.kind}")
    print(f"crossings={label.crossings}")
    print(f"k_statistic={label.k_statistic:.17g}")
    print(f"mean_power={power:.17g}")
    print(f"wrote {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _build_config(args)
    label = runner.label_nominal(cfg)
    print(f"motion={label.kind}")
    print(f"crossings={label.crossings}")
    print(f"k_statistic={label.k_statistic:.17g}")
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _build_config(args)
    spec = cfg.input_spec()
    rng = runner.case_rng(cfg.seed, cfg.f, 1)
    X = draw_sample(spec, args.n or cfg.n_samples, rng)
    out = Path(args.out)
    runner.write_csv(out / "samples.csv", list(spec.names), X)
    print(f"wrote {out / 'samples.csv'} ({X.shape[0]} rows)")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _build_config(args)
    fr = runner.fit_case(cfg, cfg.f)
    out = Path(args.out)
    pce.save(fr.surrogate, out / "surrogate.json")
    runner.write_json(out / "diagnostics.json", runner.diagnostics_doc(fr))
    d = fr.surrogate.diagnostics
    print(f"loo_error={d.loo_error:.17g}")
    print(f"condition={d.condition:.17g}")
    print(f"wrote {out / 'surrogate.json'}")
    print(f"wrote {out / 'diagnostics.json'}")
    return EXIT_OK


def cmd_maps(args) -> int:
    cfg = _build_config(args)
    amplitudes = [cfg.f] if args.f is not None else list(cfg.f_sweep)
    out = Path(args.out)
    for f in amplitudes:
        case = runner.run_case(cfg, f, force_mc=args.mc)
        for name in case.cloud.names:
            cmap = stats.conditional_cdf_map(
                case.cloud, name, cfg.n_param_bins, cfg.n_power_grid)
            path = out / runner.case_dirname(f) / f"map_{name}.csv"
            runner.write_map_csv(path, cmap)
            print(f"wrote {path}")
    return EXIT_OK


def cmd_condprob(args) -> int:
    cfg = _build_config(args)
    if args.domain is not None:
        cfg = cfg.with_overrides(domain=args.domain)
    results = [runner.run_case(cfg, f, force_mc=args.mc)
               for f in cfg.f_sweep]
    points = runner.sweep_curve(cfg, results)
    out = Path(args.out)
    path = out / f"condprob_{cfg.domain}.csv"
    runner.write_curve_csv(path, points)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_bands(args) -> int:
    cfg = _build_config(args)
    band = runner.run_band(cfg, args.param, cfg.f)
    out = Path(args.out)
    path = out / f"bands_f{cfg.f:.3f}_{args.param}.csv"
    runner.write_band_csv(path, band)
    print(f"width_integral={band.width_integral():.17g}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    manifest = runner.run_sweep(cfg, args.out, force_mc=args.mc,
                                jobs=args.jobs)
    n_art = len(manifest["artifacts"])
    print(f"artifacts={n_art}")
    print(f"config={manifest['config']}")
    if manifest["failures"]:
        for failure in manifest["failures"]:
            print(f"FAILED: {failure}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="behuq",
                     description="Uncertainty quantification for bistable "
                                 "piezo-magneto-elastic energy harvesters")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the nominal trajectory")
    _add_common(p)
    p.add_argument("--kappa", type=float, help="override [model] kappa")
    p.add_argument("--x0", type=float, help="initial displacement")
    p.add_argument("--xd0", type=float, help="initial velocity")
    p.add_argument("--v0", type=float, help="initial voltage")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="motion label of the nominal run")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sample", help="draw an input sample matrix")
    _add_common(p)
    p.add_argument("--n", type=int, help="number of rows "
                                         "(default: pce n_samples)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit the mean-power surrogate")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("maps", help="conditional-CDF maps per parameter")
    _add_common(p)
    p.set_defaults(func=cmd_maps)

    p = sub.add_parser("condprob", help="improvement-probability curves")
    _add_common(p)
    p.add_argument("--domain", choices=("D1", "D2"),
                   help="conditioning family (overrides config)")
    p.set_defaults(func=cmd_condprob)

    p = sub.add_parser("bands", help="one-parameter confidence band")
    _add_common(p)
    p.add_argument("--param", required=True,
                   choices=("lambda", "kappa", "f", "omega", "beta",
                            "delta", "phi"),
                   help="the single random parameter")
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("sweep", help="full bundle over the amplitude sweep")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (dynamics.NonFiniteError, runner.NumericalFailure,
            classify.TooShortError, stats.EmptyEventError,
            stats.TooFewSamplesError, pce.UnderdeterminedError,
            ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
