"""Command-line interface: sweeps, spectra, verification, figure datasets.

Outputs are CSV files with a versioned schema comment line and a canonical
parameter line, written with fixed 17-significant-digit scientific
formatting so identical configs give byte-identical files.  Wall-clock
timings and file lists go into a JSON run manifest next to the data (never
into the CSVs themselves).

Exit codes: 0 success, 1 configuration error (bad flags, bad config file),
2 numeric failure (unstable parameters, eigensolver breakdown, fit
failure), 3 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as la

from . import __version__, analytic
from .dynamics import (
    FitError,
    fit_ttcf_model,
    power_spectrum_numeric,
    steady_moments_numeric,
    ttcf_semiclassical,
)
from .fock import FockCutoffs
from .model import GainModel, SystemParams, build_generator
from .superop import assemble, sector_matrix
from .sweep import SweepSpec, ep_scan, refine_ep
from .verify import run_checks, summarize

_FLOAT = "%.16e"          # 17 significant digits: float64 round-trips


class ConfigError(Exception):
    """Bad command line or config file; maps to exit code 1."""


# the physical rates must always be spelled out -- a silently defaulted
# rate is a physics mistake waiting to happen.  omega_c is the documented
# exception (0 = rotating frame); cutoffs and model are numerical choices.
_REQUIRED_RATES = ("kappa", "gain", "c1", "c2", "gamma1", "gamma2")


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    cutoffs: FockCutoffs
    model: GainModel

    def canonical(self) -> dict:
        p = self.params
        return {
            "kappa": p.kappa, "gain": p.gain, "c1": p.c1, "c2": p.c2,
            "gamma1": p.gamma1, "gamma2": p.gamma2, "omega_c": p.omega_c,
            "saturation": p.saturation,
            "cutoffs": [self.cutoffs.n1_max, self.cutoffs.n2_max],
            "model": self.model.value,
        }

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


def _preset(name: str) -> RunConfig:
    """Bundled parameter sets, named after the datasets they reproduce."""
    strong = dict(gain=30.1, c1=30.0, c2=0.1, gamma1=1.0, gamma2=1.0)
    table = {
        "fig2": (dict(kappa=0.3, **strong), (1, 1)),
        "fig3": (dict(kappa=0.3, **strong), (1, 1)),
        "fig4": (dict(kappa=0.3, **strong), (1, 1)),
        "fig5": (dict(kappa=0.3, **strong), (1, 1)),
        "fig6": (dict(kappa=7.3, gain=0.01, c1=30.0, c2=0.1,
                      gamma1=1.0, gamma2=1.0), (1, 1)),
        "fig7": (dict(kappa=7.3, gain=0.5, c1=30.0, c2=0.1,
                      gamma1=1.0, gamma2=1.0), (8, 8)),
    }
    rates, cut = table[name]
    return RunConfig(params=SystemParams(**rates),
                     cutoffs=FockCutoffs(*cut), model=GainModel.LINEAR)


def _load_config_file(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")

    known = set(_REQUIRED_RATES) | {"omega_c", "saturation", "cutoffs", "model"}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {', '.join(unknown)}")
    missing = sorted(set(_REQUIRED_RATES) - set(obj))
    if missing:
        raise ConfigError(
            f"{path}: missing required rate(s) {', '.join(missing)} "
            "(all physical rates must be explicit)")

    model_name = obj.get("model", "linear")
    try:
        model = GainModel(model_name)
    except ValueError:
        allowed = ", ".join(m.value for m in GainModel)
        raise ConfigError(f"{path}: field model: must be one of {allowed}") from None
    if model is not GainModel.LINEAR and "saturation" not in obj:
        raise ConfigError(
            f"{path}: missing required rate saturation (model {model_name!r})")

    rates = {}
    for key in (*_REQUIRED_RATES, "omega_c", "saturation"):
        value = obj.get(key, 0.0)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: field {key}: expected a number, "
                              f"got {value!r}")
        rates[key] = float(value)

    raw_cut = obj.get("cutoffs", [1, 1])
    if (not isinstance(raw_cut, list) or len(raw_cut) != 2
            or not all(isinstance(c, int) and not isinstance(c, bool)
                       and c >= 1 for c in raw_cut)):
        raise ConfigError(
            f"{path}: field cutoffs: expected [n1, n2] with integers >= 1")

    try:
        params = SystemParams(**rates)
        cutoffs = FockCutoffs(*raw_cut)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return RunConfig(params=params, cutoffs=cutoffs, model=model)


def _resolve_params(spec: str) -> RunConfig:
    """A --params value is either a bundled preset name or a JSON path."""
    if spec in ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7"):
        return _preset(spec)
    if Path(spec).exists():
        return _load_config_file(spec)
    raise ConfigError(
        f"--params {spec!r}: not a preset (fig2..fig7) and no such file")


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(value) -> str:
    return _FLOAT % float(value)


def _write_csv(path: Path, subcommand: str, cfg: RunConfig,
               header: list[str], rows) -> None:
    lines = [f"# epdimer {subcommand} schema v1",
             "# config " + json.dumps(cfg.canonical(), sort_keys=True),
             ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class _Manifest:
    def __init__(self, subcommand: str, cfg: RunConfig):
        self.data = {
            "command": subcommand,
            "config": cfg.canonical(),
            "config_sha256": cfg.digest(),
            "version": __version__,
            "outputs": [],
            "wall_time_s": None,
            "wall_time_per_point_s": None,
            "meta": {},
        }
        self._t0 = time.monotonic()

    def add(self, path: Path) -> None:
        self.data["outputs"].append(path.name)

    def write(self, out_dir: Path, stem: str) -> Path:
        self.data["wall_time_s"] = time.monotonic() - self._t0
        path = out_dir / f"{stem}_manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


def _pmap(fn, items, workers: int) -> list:
    """Ordered map over independent grid points, optionally threaded.

    LAPACK releases the GIL, so threads genuinely overlap; results are
    merged in input order, keeping output independent of worker count.
    """
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _parse_grid(text: str) -> np.ndarray:
    """Parse "start:stop:count" into an inclusive linear grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid {text!r}: expected start:stop:count")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"grid {text!r}: {exc}") from exc
    if count < 2 or stop <= start:
        raise ConfigError(f"grid {text!r}: need stop > start and count >= 2")
    return np.linspace(start, stop, count)


def _safe_tag(value: float) -> str:
    return np.format_float_positional(value, trim="-").replace(".", "p")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_spectrum(args, cfg: RunConfig, out: Path) -> int:
    man = _Manifest("spectrum", cfg)
    sup = assemble(build_generator(cfg.params, cfg.cutoffs, cfg.model),
                   sparse=cfg.cutoffs.dim > 64)
    if args.sector is not None:
        matrix, _ = sector_matrix(sup, args.sector)
    elif sup.is_sparse:
        raise ConfigError(
            f"cutoffs {cfg.cutoffs.n1_max},{cfg.cutoffs.n2_max} give a "
            f"{cfg.cutoffs.dim ** 2}-dimensional generator; pass --sector")
    else:
        matrix = sup.dense()
    w = la.eigvals(matrix)
    w = w[np.lexsort((-w.imag, -w.real))]
    rows = [(i, z.real, z.imag) for i, z in enumerate(w)]
    path = out / "spectrum.csv"
    _write_csv(path, "spectrum", cfg, ["index", "re", "im"], rows)
    man.add(path)
    man.data["meta"]["sector"] = args.sector
    man.write(out, "spectrum")
    return 0


def _steady_row(cfg: RunConfig, kappa: float) -> tuple:
    p = cfg.params.with_kappa(kappa)
    closed = analytic.steady_moments_closed(p)
    numeric = steady_moments_numeric(p)
    return (kappa, closed.n1, closed.n2, closed.cross.real, closed.cross.imag,
            numeric[0].real, numeric[1].real,
            numeric[2].real, numeric[2].imag)


_STEADY_HEADER = ["kappa", "n1", "n2", "cross_re", "cross_im",
                  "n1_numeric", "n2_numeric",
                  "cross_numeric_re", "cross_numeric_im"]


def _cmd_steady(args, cfg: RunConfig, out: Path) -> int:
    man = _Manifest("steady", cfg)
    if args.kappa_grid is not None:
        grid = _parse_grid(args.kappa_grid)
    else:
        grid = np.array([cfg.params.kappa if args.kappa is None else args.kappa])
    t0 = time.monotonic()
    rows = _pmap(lambda k: _steady_row(cfg, float(k)), grid, args.workers)
    per_point = (time.monotonic() - t0) / len(grid)
    path = out / "steady.csv"
    _write_csv(path, "steady", cfg, _STEADY_HEADER, rows)
    man.add(path)
    man.data["wall_time_per_point_s"] = per_point
    man.write(out, "steady")
    return 0


def _ttcf_series(cfg: RunConfig, kappa: float, tau: np.ndarray):
    return ttcf_semiclassical(cfg.params.with_kappa(kappa), tau)


_TTCF_HEADER = ["tau", "active_re", "active_im", "active_abs",
                "passive_re", "passive_im", "passive_abs"]


def _ttcf_rows(series) -> list[tuple]:
    return [(t, a.real, a.imag, abs(a), b.real, b.imag, abs(b))
            for t, a, b in zip(series.tau, series.active, series.passive)]


def _cmd_ttcf(args, cfg: RunConfig, out: Path) -> int:
    man = _Manifest("ttcf", cfg)
    kappa = cfg.params.kappa if args.kappa is None else args.kappa
    tau = np.linspace(0.0, args.tau_max, args.tau_points)
    series = _ttcf_series(cfg, kappa, tau)
    path = out / "ttcf.csv"
    _write_csv(path, "ttcf", cfg, _TTCF_HEADER, _ttcf_rows(series))
    man.add(path)
    man.data["meta"]["kappa"] = kappa
    if args.fit:
        fit = fit_ttcf_model(tau, series.active)
        man.data["meta"]["fit"] = {
            "model": fit.model, "degree": fit.degree,
            "rates_re": [r.real for r in fit.rates],
            "rates_im": [r.imag for r in fit.rates],
            "residual": fit.residual,
        }
    man.write(out, "ttcf")
    return 0


def _cmd_powerspec(args, cfg: RunConfig, out: Path) -> int:
    man = _Manifest("powerspec", cfg)
    written = []
    if args.kappa_grid is not None:
        # peak-position table over a coupling grid, with the bifurcation
        # couplings (single peak -> split peaks) recorded in the manifest
        grid = _parse_grid(args.kappa_grid)
        t0 = time.monotonic()

        def row(k: float) -> tuple:
            p = cfg.params.with_kappa(float(k))
            (up1, lo1), (up2, lo2) = analytic.spectral_peaks(p)
            nu_plus, nu_minus = analytic.drift_eigenvalues(p)
            return (float(k), up1, lo1, up2, lo2,
                    nu_plus.real, nu_plus.imag, nu_minus.real, nu_minus.imag)

        rows = _pmap(row, grid, args.workers)
        man.data["wall_time_per_point_s"] = (time.monotonic() - t0) / len(grid)
        path = out / "powerspec_peaks.csv"
        _write_csv(path, "powerspec", cfg,
                   ["kappa", "active_peak_upper", "active_peak_lower",
                    "passive_peak_upper", "passive_peak_lower",
                    "drift_plus_re", "drift_plus_im",
                    "drift_minus_re", "drift_minus_im"], rows)
        written.append(path)
        k1, k2 = analytic.spectral_bifurcations(cfg.params)
        man.data["meta"]["peak_splitting_onsets"] = [k1, k2]
    else:
        kappa = cfg.params.kappa if args.kappa is None else args.kappa
        p = cfg.params.with_kappa(kappa)
        delta = _parse_grid(args.delta_grid)
        s1, s2 = analytic.spectra_closed(p, delta)
        path = out / "powerspec_spectra.csv"
        _write_csv(path, "powerspec", cfg, ["delta", "active", "passive"],
                   zip(delta, s1, s2))
        written.append(path)
        man.data["meta"]["kappa"] = kappa
    for path in written:
        man.add(path)
    man.write(out, "powerspec")
    return 0


_EPSCAN_GAP_HEADER = ["kappa", "min_gap", "track_a", "track_b", "failed"]
_EPSCAN_REPORT_HEADER = ["location", "eigen_gap", "coalescence",
                         "order_estimate", "analytic_match", "candidate"]


def _cmd_ep_scan(args, cfg: RunConfig, out: Path) -> int:
    man = _Manifest("ep-scan", cfg)
    grid = _parse_grid(args.kappa_grid)
    spec = SweepSpec(grid=tuple(float(g) for g in grid),
                     base_params=cfg.params, cutoffs=cfg.cutoffs,
                     model=cfg.model)
    t0 = time.monotonic()
    result = ep_scan(spec, sector=args.sector,
                     coalescence_threshold=args.threshold,
                     max_probes=args.max_probes)
    man.data["wall_time_per_point_s"] = (time.monotonic() - t0) / len(grid)
    gap_rows = [(r.value, r.min_gap, r.gap_pair[0], r.gap_pair[1],
                 int(r.failed)) for r in result.records]
    path = out / "epscan_gaps.csv"
    _write_csv(path, "ep-scan", cfg, _EPSCAN_GAP_HEADER, gap_rows)
    man.add(path)
    report_rows = [(p.location, p.eigen_gap, p.coalescence, p.order_estimate,
                    np.nan if p.analytic_match is None else p.analytic_match,
                    int(p in result.candidates)) for p in result.probed]
    path = out / "epscan_reports.csv"
    _write_csv(path, "ep-scan", cfg, _EPSCAN_REPORT_HEADER, report_rows)
    man.add(path)
    man.data["meta"]["sector"] = args.sector
    man.data["meta"]["candidates"] = [p.location for p in result.candidates]
    man.write(out, "ep-scan")
    return 0


def _cmd_verify(args, cfg: RunConfig, out: Path) -> int:
    results = run_checks(cfg.params, model=cfg.model)
    for r in results:
        print(f"{r.label:4s} {r.name}: {r.detail}")
    passed, failed, skipped = summarize(results)
    print(f"{passed} passed, {failed} failed, {skipped} skipped")
    return 3 if failed else 0


def _cmd_refine(args, cfg: RunConfig, out: Path) -> int:
    report = refine_ep(cfg.params, (args.bracket[0], args.bracket[1]),
                       args.target, cutoffs=cfg.cutoffs, model=cfg.model)
    print(f"{args.target} at {report.location!r}")
    print(f"  eigen_gap      {report.eigen_gap:.6e}")
    print(f"  coalescence    {report.coalescence:.12f}")
    print(f"  order_estimate {report.order_estimate}")
    if report.analytic_match is not None:
        print(f"  closed_form    {report.analytic_match!r}")
    return 0


# ---------------------------------------------------------------------------
# figure datasets: every one regenerated from its caption parameters


def _figure_2(args, out: Path) -> tuple[RunConfig, list[Path], dict]:
    cfg = _preset("fig2")
    grid = np.linspace(0.0, 50.0, 1001)
    rows = _pmap(lambda k: _steady_row(cfg, float(k)), grid, args.workers)
    path = out / "figure2_steady.csv"
    _write_csv(path, "figure", cfg, _STEADY_HEADER, rows)
    return cfg, [path], {}


def _figure_3(args, out: Path) -> tuple[RunConfig, list[Path], dict]:
    cfg = _preset("fig3")
    tau = np.linspace(0.0, 15.0, 1501)
    written = []
    for kappa in (0.01, 0.0501, 0.1, 0.5):
        series = _ttcf_series(cfg, kappa, tau)
        path = out / f"figure3_ttcf_kappa{_safe_tag(kappa)}.csv"
        sub = RunConfig(params=cfg.params.with_kappa(kappa),
                        cutoffs=cfg.cutoffs, model=cfg.model)
        _write_csv(path, "figure", sub, _TTCF_HEADER, _ttcf_rows(series))
        written.append(path)
    return cfg, written, {"kappas": [0.01, 0.0501, 0.1, 0.5]}


def _figure_4(args, out: Path) -> tuple[RunConfig, list[Path], dict]:
    cfg = _preset("fig4")
    delta = np.linspace(-8.0, 8.0, 3201)
    written = []
    for kappa in (0.1, 0.278, 0.5, 5.0):
        p = cfg.params.with_kappa(kappa)
        s1, s2 = analytic.spectra_closed(p, delta)
        path = out / f"figure4_spectra_kappa{_safe_tag(kappa)}.csv"
        sub = RunConfig(params=p, cutoffs=cfg.cutoffs, model=cfg.model)
        _write_csv(path, "figure", sub, ["delta", "active", "passive"],
                   zip(delta, s1, s2))
        written.append(path)
    k1, k2 = analytic.spectral_bifurcations(cfg.params)
    return cfg, written, {"peak_splitting_onsets": [k1, k2]}


def _figure_5(args, out: Path) -> tuple[RunConfig, list[Path], dict]:
    cfg = _preset("fig5")
    grid = np.linspace(0.0, 2.0, 2001)

    def row(k: float) -> tuple:
        p = cfg.params.with_kappa(float(k))
        (up1, lo1), (up2, lo2) = analytic.spectral_peaks(p)
        nu_plus, nu_minus = analytic.drift_eigenvalues(p)
        return (float(k), up1, lo1, up2, lo2,
                nu_plus.real, nu_plus.imag, nu_minus.real, nu_minus.imag)

    rows = _pmap(row, grid, args.workers)
    path = out / "figure5_peaks.csv"
    _write_csv(path, "figure", cfg,
               ["kappa", "active_peak_upper", "active_peak_lower",
                "passive_peak_upper", "passive_peak_lower",
                "drift_plus_re", "drift_plus_im",
                "drift_minus_re", "drift_minus_im"], rows)
    k1, k2 = analytic.spectral_bifurcations(cfg.params)
    return cfg, [path], {"peak_splitting_onsets": [k1, k2],
                         "hep_kappa": analytic.hep_kappa(cfg.params)}


def _figure_6(args, out: Path) -> tuple[RunConfig, list[Path], dict]:
    cfg = _preset("fig6")
    grid = np.linspace(0.0, 10.0, 2001)

    def row(k: float) -> tuple:
        p = cfg.params.with_kappa(float(k))
        lams = analytic.liouvillian_eigenvalues_closed(p)
        return (float(k), *lams.real)

    rows = _pmap(row, grid, args.workers)
    path = out / "figure6_eigenvalues.csv"
    header = ["kappa"] + [f"re_lam{i}" for i in range(16)]
    _write_csv(path, "figure", cfg, header, rows)
    meta = {"hep_kappa": analytic.hep_kappa(cfg.params),
            "lep1_kappa": analytic.lep1_kappa(cfg.params),
            "lep2_kappa": analytic.lep2_kappa(cfg.params)}
    return cfg, [path], meta


def _figure_7(args, out: Path) -> tuple[RunConfig, list[Path], dict]:
    cfg = _preset("fig7")
    grid = np.linspace(7.0, 8.0, 101)
    spec = SweepSpec(grid=tuple(float(g) for g in grid),
                     base_params=cfg.params, cutoffs=cfg.cutoffs,
                     model=cfg.model)
    result = ep_scan(spec, sector=0)
    gap_rows = [(r.value, r.min_gap, r.gap_pair[0], r.gap_pair[1],
                 int(r.failed)) for r in result.records]
    path_g = out / "figure7_gaps.csv"
    _write_csv(path_g, "figure", cfg, _EPSCAN_GAP_HEADER, gap_rows)
    report_rows = [(p.location, p.eigen_gap, p.coalescence, p.order_estimate,
                    np.nan if p.analytic_match is None else p.analytic_match,
                    int(p in result.candidates)) for p in result.probed]
    path_r = out / "figure7_reports.csv"
    _write_csv(path_r, "figure", cfg, _EPSCAN_REPORT_HEADER, report_rows)
    meta = {"sector": 0, "candidates": [p.location for p in result.candidates],
            "hep_kappa": analytic.hep_kappa(cfg.params),
            "lep1_kappa": analytic.lep1_kappa(cfg.params)}
    return cfg, [path_g, path_r], meta


_FIGURES = {2: _figure_2, 3: _figure_3, 4: _figure_4, 5: _figure_5,
            6: _figure_6, 7: _figure_7}


def _cmd_figure(args, cfg_unused, out: Path) -> int:
    try:
        builder = _FIGURES[args.number]
    except KeyError:
        raise ConfigError(
            f"figure {args.number}: known datasets are 2..7") from None
    t0 = time.monotonic()
    cfg, written, meta = builder(args, out)
    man = _Manifest("figure", cfg)
    man._t0 = t0
    for path in written:
        man.add(path)
    man.data["meta"] = {"number": args.number, **meta}
    man.write(out, f"figure{args.number}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):          # argparse would exit(2); keep 2 for
        raise ConfigError(message)     # numeric failures only


def _add_params_arg(sub, required: bool = True):
    sub.add_argument("--params", required=required,
                     help="preset name (fig2..fig7) or path to a JSON config")


def _build_parser() -> _Parser:
    parser = _Parser(prog="epdimer",
                     description="coupled active/passive cavity dimer: "
                                 "spectra, correlations, exceptional points")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker threads for independent grid points")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("spectrum", help="generator eigenvalue table")
    _add_params_arg(sub)
    sub.add_argument("--kappa", type=float, default=None)
    sub.add_argument("--sector", type=int, default=None,
                     help="restrict to one excitation-imbalance sector")

    sub = subs.add_parser("steady", help="stationary second moments vs coupling")
    _add_params_arg(sub)
    sub.add_argument("--kappa", type=float, default=None)
    sub.add_argument("--kappa-grid", default=None, metavar="START:STOP:COUNT")

    sub = subs.add_parser("ttcf", help="stationary two-time correlation series")
    _add_params_arg(sub)
    sub.add_argument("--kappa", type=float, default=None)
    sub.add_argument("--tau-max", type=float, default=15.0)
    sub.add_argument("--tau-points", type=int, default=1501)
    sub.add_argument("--fit", action="store_true",
                     help="classify the decay shape and record it in the manifest")

    sub = subs.add_parser("powerspec", help="emission spectra or peak table")
    _add_params_arg(sub)
    sub.add_argument("--kappa", type=float, default=None)
    sub.add_argument("--delta-grid", default="-8:8:3201", metavar="START:STOP:COUNT")
    sub.add_argument("--kappa-grid", default=None, metavar="START:STOP:COUNT",
                     help="emit the peak-position table over this grid instead")

    sub = subs.add_parser("ep-scan", help="gap dips and coalescence candidates")
    _add_params_arg(sub)
    sub.add_argument("--kappa-grid", required=True, metavar="START:STOP:COUNT")
    sub.add_argument("--sector", type=int, default=None)
    sub.add_argument("--threshold", type=float, default=0.9)
    sub.add_argument("--max-probes", type=int, default=8)

    sub = subs.add_parser("refine", help="bisect one exceptional point")
    _add_params_arg(sub)
    sub.add_argument("--target", required=True, choices=["hep", "lep1", "lep2"])
    sub.add_argument("--bracket", type=float, nargs=2, required=True,
                     metavar=("LO", "HI"))

    sub = subs.add_parser("verify", help="closed forms vs numerics, pass/fail")
    _add_params_arg(sub)

    sub = subs.add_parser("figure", help="emit a bundled dataset by number")
    sub.add_argument("number", type=int)

    return parser


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "steady": _cmd_steady,
    "ttcf": _cmd_ttcf,
    "powerspec": _cmd_powerspec,
    "ep-scan": _cmd_ep_scan,
    "refine": _cmd_refine,
    "verify": _cmd_verify,
    "figure": _cmd_figure,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg = None
        if getattr(args, "params", None) is not None:
            cfg = _resolve_params(args.params)
        if getattr(args, "kappa", None) is not None and cfg is not None:
            cfg = RunConfig(params=cfg.params.with_kappa(args.kappa),
                            cutoffs=cfg.cutoffs, model=cfg.model)
        return _DISPATCH[args.command](args, cfg, out)
    except ConfigError as exc:
        print(f"epdimer: config error: {exc}", file=sys.stderr)
        return 1
    except (FitError, la.LinAlgError) as exc:
        print(f"epdimer: numeric failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"epdimer: numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
