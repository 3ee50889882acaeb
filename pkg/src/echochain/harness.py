"""Command-line front end: runs, persistence, and plot-ready data files.

Subcommands
-----------
magnetization    branch magnetization curves through one echo (CSV)
coherence-scan   C(2*tau0) curves per channel plus rate fits (CSV + JSON)
noise-check      autocorrelation of the noise model against its target
fit              refit a stored coherence curve
analytic         print the closed-form rates and coherence values

Every output file has a JSON metadata sidecar embedding the complete
resolved configuration, the master seed and the code version, so any
figure is regenerable from its sidecar alone.  CSV files are UTF-8 with
LF line endings, deterministic column order and 17-significant-digit
floats; with a fixed master seed reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import DephasingParams, anderson_weiss, gamma_i_estimate, \
    gamma_n, protection_ratio
from .coherence import CoherenceCurve, coherence_scan, point_from_dict
from .config import RunConfig, load_config
from .dynamics import IntegrationError, magnetization_records
from .fitting import FitError, fit_exponential_tail, fit_linear_early
from .noise import autocorrelation_estimate, sample_realization, \
    write_trace_csv
from .seeding import child_seed
from .spinchain import ConfigError

# seed-stream tags; 0 and 1 belong to the coherence channels
_STREAM_MAGNETIZATION = 2
_STREAM_TRACE = 3


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _metadata(config: RunConfig, **extra) -> dict:
    doc = {"config": config.to_dict(), "version": __version__}
    doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# subcommands


def cmd_magnetization(config: RunConfig) -> dict:
    """Branch <M_z>(t) curves through one echo.

    With n_realizations = 1 this is one noise trajectory (the usual
    decay/revival picture); with more, per-realization files are written
    alongside an ensemble-mean pair.  Each run also lands as a structured
    JSON record (all parameters, seed, code version).
    """
    config.validate()
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    n_real = config.n_realizations
    paths: dict = {}
    collected = {"up": [], "down": []}
    seeds = []
    for r in range(n_real):
        seed = child_seed(config.master_seed, _STREAM_MAGNETIZATION, r)
        seeds.append(seed)
        noise = sample_realization(config.noise_model(), seed)
        rec_up, rec_down = magnetization_records(
            config.n_spins_single, config.couplings(), noise,
            config.schedule())
        suffix = "" if n_real == 1 else f"_r{r:03d}"
        for tag, rec in (("up", rec_up), ("down", rec_down)):
            path = outdir / f"magnetization_{tag}{suffix}.csv"
            write_csv(path, ["t", "mz", "norm"],
                      zip(rec.times, rec.mz_series, rec.norm_series))
            paths[f"{tag}{suffix}"] = str(path)
            record_doc = rec.to_dict()
            record_doc["version"] = __version__
            write_json(outdir / f"echo_record_{tag}{suffix}.json", record_doc)
            collected[tag].append(rec)
    if n_real > 1:
        for tag, records in collected.items():
            path = outdir / f"magnetization_{tag}_mean.csv"
            write_csv(path, ["t", "mz", "norm"],
                      zip(records[0].times,
                          np.mean([r.mz_series for r in records], axis=0),
                          np.mean([r.norm_series for r in records], axis=0)))
            paths[f"{tag}_mean"] = str(path)
    last_up, last_down = collected["up"][-1], collected["down"][-1]
    meta = _metadata(
        config, seeds=seeds, files=paths,
        summary={
            "mz_initial": [last_up.mz_series[0], last_down.mz_series[0]],
            "mz_final": [last_up.mz_series[-1], last_down.mz_series[-1]],
            "c_phi_sq": [last_up.c_phi_sq, last_down.c_phi_sq],
        })
    write_json(outdir / "magnetization_meta.json", meta)
    return paths


def _point_path(outdir: Path, n_spins: int, channel: str, idx: int) -> Path:
    return outdir / "points" / f"ns{n_spins}_{channel}_t{idx:03d}.json"


def _load_existing_points(outdir: Path, cfg: RunConfig, resume: bool) -> dict:
    existing = {}
    n = cfg.n_spins_single
    chash = cfg.content_hash()
    for channel in ("interacting", "noninteracting"):
        for idx in range(len(cfg.tau0_grid)):
            path = _point_path(outdir, n, channel, idx)
            if not path.exists():
                continue
            if not resume:
                raise ConfigError(
                    f"{path} exists from a previous scan; pass --resume to "
                    "continue it or use a fresh output directory")
            with open(path) as fh:
                payload = json.load(fh)
            if payload.get("config_hash") != chash:
                raise ConfigError(
                    f"{path} was produced by a different configuration; "
                    "use a fresh output directory")
            existing[(channel, idx)] = payload
    return existing


def cmd_coherence_scan(config: RunConfig, resume: bool = False) -> dict:
    """Coherence curves and rate fits for every configured chain size."""
    config.validate()
    outdir = Path(config.output_dir)
    (outdir / "points").mkdir(parents=True, exist_ok=True)

    rate_rows = []
    rates_doc: dict = {}
    files: dict = {}
    for n in config.n_spins:
        cfg = config.with_overrides(n_spins=(int(n),))
        chash = cfg.content_hash()
        existing = _load_existing_points(outdir, cfg, resume)

        def on_point(channel, idx, payload, _n=int(n), _hash=chash):
            payload = dict(payload)
            payload["config_hash"] = _hash
            payload["n_spins"] = _n
            write_json(_point_path(outdir, _n, channel, idx), payload)

        curves = coherence_scan(cfg, existing=existing, on_point=on_point)
        for channel, curve in curves.items():
            path = outdir / f"coherence_ns{n}_{channel}.csv"
            write_csv(path,
                      ["tau0", "c_value", "std_error", "n_realizations",
                       "channel"],
                      [(p.tau0, p.c_value, p.std_error, p.n_realizations,
                        p.channel) for p in curve.points])
            write_json(outdir / f"coherence_ns{n}_{channel}_meta.json",
                       _metadata(cfg, channel=channel))
            files[f"ns{n}_{channel}"] = str(path)

            fitter = (fit_linear_early if channel == "interacting"
                      else fit_exponential_tail)
            try:
                fit = fitter(curve)
                rates_doc[f"ns{n}_{channel}"] = fit.to_dict()
                rate_rows.append((int(n), channel, fit.rate, fit.rate_err,
                                  fit.prefactor, fit.window[0], fit.window[1]))
            except FitError as exc:
                rates_doc[f"ns{n}_{channel}"] = {"error": str(exc)}

    rates_path = outdir / "rates.csv"
    write_csv(rates_path,
              ["n_spins", "channel", "rate", "rate_err", "prefactor",
               "window_lo", "window_hi"], rate_rows)
    write_json(outdir / "rates.json", _metadata(config, rates=rates_doc))
    files["rates"] = str(rates_path)
    return files


def cmd_noise_check(config: RunConfig, n_seeds: int = 1000, t_max: float = 20.0,
                    n_lags: int = 41, trace: bool = False) -> dict:
    """Ensemble autocorrelation of h(t) against h_rms**2 exp(-gamma t)."""
    config.validate()
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    model = config.noise_model()
    lags = np.linspace(0.0, t_max, n_lags)
    estimates, std_errors = autocorrelation_estimate(
        model, lags, n_seeds, master_seed=config.master_seed)
    targets = model.target_correlation(lags)
    path = outdir / "noise_autocorrelation.csv"
    write_csv(path, ["t", "estimate", "std_error", "target"],
              zip(lags, estimates, std_errors, targets))
    files = {"autocorrelation": str(path)}
    if trace:
        seed = child_seed(config.master_seed, _STREAM_TRACE, 0)
        trace_path = outdir / "noise_trace.csv"
        write_trace_csv(sample_realization(model, seed),
                        np.arange(0.0, t_max + 1e-12, 0.1), trace_path)
        files["trace"] = str(trace_path)
    write_json(outdir / "noise_check_meta.json",
               _metadata(config, n_seeds=n_seeds, files=files))
    return files


def read_curve_csv(path, parameters: dict | None = None) -> CoherenceCurve:
    """Rebuild a CoherenceCurve from a CSV written by coherence-scan."""
    points = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            points.append(point_from_dict({
                "tau0": float(row["tau0"]),
                "c_value": float(row["c_value"]),
                "std_error": float(row["std_error"]),
                "n_realizations": int(row["n_realizations"]),
                "channel": row["channel"],
            }))
    if parameters is None:
        meta_path = Path(str(path).replace(".csv", "_meta.json"))
        parameters = {}
        if meta_path.exists():
            with open(meta_path) as fh:
                parameters = json.load(fh).get("config", {})
    return CoherenceCurve(tuple(points), parameters)


def cmd_fit(curve_path, kind: str = "auto", window=None, output=None) -> dict:
    """Refit a stored coherence curve; prints the RateFit as JSON."""
    curve = read_curve_csv(curve_path)
    if kind == "auto":
        kind = ("linear_early" if curve.channel == "interacting"
                else "exponential_tail")
    fitter = (fit_linear_early if kind == "linear_early"
              else fit_exponential_tail)
    fit = fitter(curve, window=window)
    doc = {"curve": str(curve_path), "channel": curve.channel,
           "fit": fit.to_dict(), "version": __version__}
    if output:
        write_json(Path(output), doc)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return doc


def cmd_analytic(config: RunConfig, output=None) -> dict:
    """Closed-form rates and coherence values for the configured sizes."""
    config.validate()
    model = config.noise_model()
    j_eff = config.couplings().j_eff
    doc: dict = {"version": __version__, "j_eff": j_eff,
                 "per_size": {}}
    for n in config.n_spins:
        params = DephasingParams(n_spins=int(n), noise=model)
        doc["per_size"][str(int(n))] = {
            "gamma_n": gamma_n(params),
            "gamma_i_estimate": gamma_i_estimate(int(n), config.h_rms, j_eff),
            "protection_ratio": protection_ratio(int(n), j_eff, config.gamma),
            "coherence_noninteracting": {
                str(t): anderson_weiss(params, 2.0 * t)
                for t in config.tau0_grid},
        }
    if output:
        write_json(Path(output), doc)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return doc


# ---------------------------------------------------------------------------
# argument parsing


def _add_override_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON configuration file")
    sub.add_argument("--output", dest="output_dir", help="output directory")
    sub.add_argument("--n-spins", type=int, nargs="+", dest="n_spins")
    sub.add_argument("--jx", type=float, dest="j_x")
    sub.add_argument("--jy", type=float, dest="j_y")
    sub.add_argument("--jz", type=float, dest="j_z")
    sub.add_argument("--h-rms", type=float, dest="h_rms")
    sub.add_argument("--gamma", type=float, dest="gamma")
    sub.add_argument("--delta-omega", type=float, dest="delta_omega")
    sub.add_argument("--j-max", type=int, dest="j_max")
    sub.add_argument("--dt", type=float, dest="dt")
    sub.add_argument("--tau0", type=float, dest="tau0")
    sub.add_argument("--tau0-grid", type=float, nargs="+", dest="tau0_grid")
    sub.add_argument("--record-stride", type=int, dest="record_stride")
    sub.add_argument("--reversal-error", type=float, dest="reversal_error")
    sub.add_argument("--renormalize", action="store_const", const=True,
                     dest="renormalize")
    sub.add_argument("--n-realizations", type=int, dest="n_realizations")
    sub.add_argument("--n-phase-samples", type=int, dest="n_phase_samples")
    sub.add_argument("--master-seed", type=int, dest="master_seed")
    sub.add_argument("--channel",
                     choices=["interacting", "noninteracting", "both"])
    sub.add_argument("--workers", type=int, dest="workers")
    sub.add_argument("--allow-strong-noise", action="store_const", const=True,
                     dest="allow_strong_noise")


_OVERRIDE_KEYS = [
    "output_dir", "n_spins", "j_x", "j_y", "j_z", "h_rms", "gamma",
    "delta_omega", "j_max", "dt", "tau0", "tau0_grid", "record_stride",
    "reversal_error", "renormalize", "n_realizations", "n_phase_samples",
    "master_seed", "channel", "workers", "allow_strong_noise",
]


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {key: getattr(args, key, None) for key in _OVERRIDE_KEYS}
    return config.with_overrides(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echochain",
        description="Loschmidt-echo coherence protection simulator")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name, doc in [("magnetization", cmd_magnetization.__doc__),
                      ("coherence-scan", cmd_coherence_scan.__doc__),
                      ("noise-check", cmd_noise_check.__doc__),
                      ("analytic", cmd_analytic.__doc__)]:
        sub = subs.add_parser(name, help=doc)
        _add_override_flags(sub)
        if name == "coherence-scan":
            sub.add_argument("--resume", action="store_true")
        if name == "noise-check":
            sub.add_argument("--n-seeds", type=int, default=1000)
            sub.add_argument("--t-max", type=float, default=20.0)
            sub.add_argument("--n-lags", type=int, default=41)
            sub.add_argument("--trace", action="store_true")
        if name == "analytic":
            sub.add_argument("--json-output", help="write JSON here")

    fit = subs.add_parser("fit", help=cmd_fit.__doc__)
    fit.add_argument("curve", help="coherence curve CSV")
    fit.add_argument("--kind", choices=["auto", "linear_early",
                                        "exponential_tail"], default="auto")
    fit.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    fit.add_argument("--json-output", help="write JSON here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "magnetization":
            cmd_magnetization(_resolve_config(args))
        elif args.command == "coherence-scan":
            cmd_coherence_scan(_resolve_config(args), resume=args.resume)
        elif args.command == "noise-check":
            cmd_noise_check(_resolve_config(args), n_seeds=args.n_seeds,
                            t_max=args.t_max, n_lags=args.n_lags,
                            trace=args.trace)
        elif args.command == "fit":
            window = tuple(args.window) if args.window else None
            cmd_fit(args.curve, kind=args.kind, window=window,
                    output=args.json_output)
        elif args.command == "analytic":
            cmd_analytic(_resolve_config(args), output=args.json_output)
        return 0
    except (ConfigError, FitError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
