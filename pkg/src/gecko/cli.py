"""Command-line interface: ``gecko <subcommand> [options]``.

Subcommands
-----------
solve           random pulse + fidelity restoration, writes a pulse file
gecko           level-set optimisation of a pulse file, writes pulse + trace CSV
spectrum        per-mode sine-transform power of a pulse (optionally vs a reference)
robust-sweep    fidelity against a constant amplitude offset
baseline-gauss  refine, Gaussian-smooth and restore a pulse
fig4-study      multi-seed GECKO vs Gaussian smoothing comparison

Options may also come from a JSON file given with ``--config``; keys are the
long option names with dashes replaced by underscores.  Flags on the command
line win over the file.

Exit codes: 0 success, 2 usage or input error, 3 fidelity constraint or
restoration failure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .engine import GeckoConfig, default_restorer, gecko_run, refine_and_smooth, TRACE_COLUMNS
from .errors import BudgetError, FormatError, InputError, NumericalError, RestoreFailedError
from .experiments import (
    DEFAULT_AMPLITUDE,
    FIG4_COLUMNS,
    SPECTRUM_COLUMNS,
    SWEEP_COLUMNS,
    SolveSettings,
    baseline_gauss,
    fig4_study,
    fmt,
    robust_sweep_rows,
    solve_pulse,
    spectrum_rows,
)
from .pulse import fidelity
from .pulse_io import load_pulse, save_pulse
from .quality import (
    CompositeQuality,
    DriftQuality,
    FilterQuality,
    PathQuality,
    RobustQuality,
    RobustSpec,
    SmoothQuality,
)
from .spectral import make_filter

log = logging.getLogger("gecko")

EXIT_OK, EXIT_USAGE, EXIT_CONSTRAINT, EXIT_NUMERICAL = 0, 2, 3, 4

QUALITIES = ("filter", "smooth", "robust", "path", "drift", "composite")

# Values used when neither the command line nor the config file sets an option.
DEFAULTS = {
    "seed": 0,
    "out": None,
    "eps": 1e-7,
    "step": 0.01,
    "iters": 100,
    "quality": "smooth",
    "mode": "project_gradient",
    "filter": "lowpass",
    "cutoff": None,
    "center": None,
    "width": None,
    "steepness": 4,
    "delta": 0.05,
    "grid": 5,
    "channels": "0",
    "weights": None,
    "restore_every": None,
    "restore_iters": 5000,
    "refine_rounds": None,
    "model": "tfim1_h2zero",
    "target": "CZ",
    "L": 4,
    "dt": 1.0,
    "g": 1.0,
    "amplitude": DEFAULT_AMPLITUDE,
    "trace": None,
    "reference": None,
    "delta_max": 0.1,
    "points": 21,
    "sigma": 8.0,
    "subdivide": 64,
    "pad": 0,
    "seeds": 10,
    "workers": 1,
    "rounds": 5,
}


class UsageError(Exception):
    pass


def _common(p):
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--out", help="output path (CSV commands print to stdout when omitted)")
    p.add_argument("--eps", type=float, help="fidelity tolerance epsilon (default 1e-7)")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _model_args(p):
    p.add_argument("--model", help="tfim1, tfim1_h2zero or tfim2 (default tfim1_h2zero)")
    p.add_argument("--target", help="CZ or CNOT (default CZ)")
    p.add_argument("--L", type=int, help="number of segments (default 4)")
    p.add_argument("--dt", type=float, help="segment duration in units of 1/g (default 1)")
    p.add_argument("--g", type=float, help="drift coupling (default 1)")
    p.add_argument("--amplitude", type=float, help="initial amplitudes drawn from [-a g, a g] (default 4)")
    p.add_argument("--restore-iters", type=int, help="restoration iteration cap (default 5000)")


def _quality_args(p):
    p.add_argument("--quality", choices=QUALITIES, help="quality to minimise (default smooth)")
    p.add_argument("--step", type=float, help="step size s (default 0.01)")
    p.add_argument("--iters", type=int, help="maximum iterations (default 100)")
    p.add_argument("--mode", choices=("project_gradient", "direct_solve"))
    p.add_argument("--restore-every", type=int, help="restore on a fixed schedule instead of on violation")
    p.add_argument("--refine-rounds", type=int, help="refine-and-smooth rounds (doubling L each round)")
    p.add_argument("--filter", choices=("lowpass", "highpass", "bandstop"), help="filter kind (default lowpass)")
    p.add_argument("--cutoff", type=float, help="filter cutoff as dimensionless f*T")
    p.add_argument("--center", type=float, help="band-stop centre as dimensionless f*T")
    p.add_argument("--width", type=float, help="band-stop width as dimensionless f*T")
    p.add_argument("--steepness", type=int, help="low/high-pass order p (default 4)")
    p.add_argument("--delta", type=float, help="robust offset half-range (default 0.05)")
    p.add_argument("--grid", type=int, help="robust grid points per channel S (default 5)")
    p.add_argument("--channels", help="comma-separated robust channel indices (default 0)")
    p.add_argument("--weights", help="composite weights, e.g. 'smooth=1,filter=0.5'")
    p.add_argument("--restore-iters", type=int, help="restoration iteration cap (default 5000)")
    p.add_argument("--trace", help="trace CSV path (default: <out>.trace.csv)")


def build_parser():
    parser = argparse.ArgumentParser(prog="gecko", description="Level-set quantum pulse optimisation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find a pulse implementing the target gate")
    _common(p)
    _model_args(p)

    p = sub.add_parser("gecko", help="optimise a quality along the fidelity level set")
    p.add_argument("pulse", help="input pulse file")
    _common(p)
    _quality_args(p)

    p = sub.add_parser("spectrum", help="per-mode power of a pulse")
    p.add_argument("pulse")
    _common(p)
    p.add_argument("--reference", help="pulse file for the power_before column")
    p.add_argument("--filter", choices=("lowpass", "highpass", "bandstop"))
    p.add_argument("--cutoff", type=float)
    p.add_argument("--center", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--steepness", type=int)

    p = sub.add_parser("robust-sweep", help="fidelity versus constant amplitude offset")
    p.add_argument("pulse")
    _common(p)
    p.add_argument("--delta-max", type=float, help="largest offset (default 0.1)")
    p.add_argument("--points", type=int, help="number of offsets (default 21)")
    p.add_argument("--channels", help="comma-separated channel indices (default 0)")

    p = sub.add_parser("baseline-gauss", help="Gaussian-smoothing baseline")
    p.add_argument("pulse")
    _common(p)
    p.add_argument("--sigma", type=float, help="kernel width in segments (default 8)")
    p.add_argument("--subdivide", type=int, help="refinement factor (default 64)")
    p.add_argument("--pad", type=int, help="zero padding in segments (default 0)")
    p.add_argument("--restore-iters", type=int)

    p = sub.add_parser("fig4-study", help="multi-seed smoothing comparison (tfim2, CNOT)")
    _common(p)
    p.add_argument("--seeds", type=int, help="number of seeds (default 10)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--L", type=int, help="initial segments (default 10)")
    p.add_argument("--rounds", type=int, help="doubling rounds (default 5, giving L=320)")
    p.add_argument("--step", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--amplitude", type=float)
    return parser


class Options:
    """Command-line values layered over a config file layered over defaults."""

    def __init__(self, ns, explicit, config):
        self._ns = ns
        self._explicit = explicit
        self._config = config

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        if name in self._explicit:
            return self._explicit[name]
        if name in self._config:
            return self._config[name]
        if name in DEFAULTS:
            return DEFAULTS[name]
        return getattr(self._ns, name)

    def given(self, name):
        return name in self._explicit or name in self._config


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must contain a JSON object")
    cfg = {str(k).replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gecko-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _channels(text):
    try:
        return tuple(int(c) for c in str(text).split(",") if c.strip())
    except ValueError as exc:
        raise UsageError(f"bad channel list {text!r}") from exc


def _frequency_filter(opt, pulse):
    T = pulse.T
    kind = opt.filter

    def scaled(v):
        return None if v is None else float(v) / T

    if kind in ("lowpass", "highpass") and opt.cutoff is None:
        raise UsageError(f"--filter {kind} needs --cutoff")
    if kind == "bandstop" and (opt.center is None or opt.width is None):
        raise UsageError("--filter bandstop needs --center and --width")
    return make_filter(kind, pulse.L, pulse.dt, cutoff=scaled(opt.cutoff), center=scaled(opt.center),
                       width=scaled(opt.width), steepness=int(opt.steepness))


def _single_quality(name, opt, spec, pulse):
    if name == "filter":
        return FilterQuality(_frequency_filter(opt, pulse))
    if name == "smooth":
        return SmoothQuality()
    if name == "robust":
        return RobustQuality(RobustSpec(_channels(opt.channels), float(opt.delta), int(opt.grid)))
    if name == "path":
        return PathQuality()
    if name == "drift":
        return DriftQuality()
    raise UsageError(f"unknown quality {name!r}")


def _parse_weights(text):
    out = []
    for part in str(text).split(","):
        if not part.strip():
            continue
        name, _, w = part.partition("=")
        name = name.strip()
        if name not in QUALITIES or name == "composite":
            raise UsageError(f"unknown composite term {name!r}")
        try:
            out.append((name, float(w)))
        except ValueError as exc:
            raise UsageError(f"bad weight in {part!r}") from exc
    if not out:
        raise UsageError("--weights lists no terms")
    return out


def _quality(opt, spec, pulse):
    if opt.quality != "composite":
        return _single_quality(opt.quality, opt, spec, pulse)
    if opt.weights is None:
        raise UsageError("--quality composite needs --weights")
    terms = [(w, _single_quality(n, opt, spec, pulse)) for n, w in _parse_weights(opt.weights)]
    return CompositeQuality(tuple(terms))


def _needs_free_dt(opt):
    names = [opt.quality]
    if opt.quality == "composite" and opt.weights:
        names = [n for n, _ in _parse_weights(opt.weights)]
    return any(n in ("path", "drift") for n in names)


# -- subcommands -------------------------------------------------------------


def cmd_solve(opt):
    settings = SolveSettings(model=opt.model, target=opt.target, L=int(opt.L), dt=float(opt.dt), g=float(opt.g),
                             epsilon=float(opt.eps), amplitude=float(opt.amplitude), max_iters=int(opt.restore_iters))
    spec, target, pulse = solve_pulse(settings, int(opt.seed))
    F = fidelity(spec, pulse, target)
    meta = {"fidelity": F, "seed": int(opt.seed), "model": opt.model, "epsilon": float(opt.eps)}
    save_pulse(opt.out or "pulse.json", pulse, spec, target, meta)
    log.info("solve: F=%.15g written to %s", F, opt.out or "pulse.json")
    return EXIT_OK


def _load_with_target(path):
    pulse, spec, target, meta = load_pulse(path)
    if target is None:
        raise UsageError(f"{path} carries no target gate")
    return pulse, spec, target, meta


def cmd_gecko(opt):
    pulse, spec, target, meta = _load_with_target(opt.pulse)
    eps = float(opt.eps)
    F0 = fidelity(spec, pulse, target)
    if not F0 > 1 - eps:
        raise RestoreFailedError(f"input pulse has F={F0:.12g}, not above 1 - eps = {1 - eps:.12g}")
    if _needs_free_dt(opt):
        pulse = pulse.replace(optimize_dt=True)
    cfg = GeckoConfig(step_size=float(opt.step), max_iters=int(opt.iters), epsilon=eps,
                      restore_every=opt.restore_every, mode=opt.mode)
    restorer = default_restorer(eps, max_iters=int(opt.restore_iters), seed=int(opt.seed))
    if opt.refine_rounds is not None:
        if opt.quality != "smooth":
            raise UsageError("--refine-rounds only combines with --quality smooth")
        mode = opt.mode if opt.given("mode") else "direct_solve"
        cfg = GeckoConfig(step_size=float(opt.step), max_iters=int(opt.iters), epsilon=eps,
                          restore_every=opt.restore_every, mode=mode)
        trace = refine_and_smooth(spec, pulse, target, int(opt.refine_rounds), cfg, restorer)
        quality = SmoothQuality()
    else:
        quality = _quality(opt, spec, pulse)
        trace = gecko_run(spec, pulse, target, quality, cfg, restorer)
    final = trace.pulse
    F = fidelity(spec, final, target)
    out = opt.out or "gecko.json"
    meta = {
        "fidelity": F,
        "seed": int(opt.seed),
        "quality": {**quality.describe(), "value": quality.value(spec, final, target)},
        "T": final.T,
        "status": trace.status,
    }
    save_pulse(out, final, spec, target, meta)
    rows = [[r.iter, fmt(r.Q), fmt(r.F), r.R, fmt(r.step_norm), int(r.restored)] for r in trace.records]
    trace_path = opt.trace or os.path.splitext(out)[0] + ".trace.csv"
    _write_text(trace_path, _csv_text(TRACE_COLUMNS, rows))
    log.info("gecko: %s, %d iterations, F=%.15g, T=%.10g", trace.status, len(trace), F, final.T)
    return EXIT_OK


def cmd_spectrum(opt):
    pulse, spec, target, _ = load_pulse(opt.pulse)
    before = pulse
    if opt.reference:
        before, *_ = load_pulse(opt.reference)
        if before.L != pulse.L:
            raise UsageError(f"reference has L={before.L}, pulse has L={pulse.L}")
    weights = None
    if opt.given("filter"):
        weights = _frequency_filter(opt, pulse).weights
    rows = spectrum_rows(before, pulse, weights)
    _write_text(opt.out, _csv_text(SPECTRUM_COLUMNS, rows))
    return EXIT_OK


def cmd_robust_sweep(opt):
    pulse, spec, target, _ = _load_with_target(opt.pulse)
    rows = robust_sweep_rows(spec, pulse, target, _channels(opt.channels), float(opt.delta_max), int(opt.points))
    _write_text(opt.out, _csv_text(SWEEP_COLUMNS, rows))
    return EXIT_OK


def cmd_baseline_gauss(opt):
    pulse, spec, target, _ = _load_with_target(opt.pulse)
    if float(opt.sigma) <= 0:
        raise UsageError("--sigma must be positive")
    result = baseline_gauss(spec, pulse, target, float(opt.sigma), int(opt.subdivide), int(opt.pad),
                            float(opt.eps), int(opt.restore_iters))
    F = fidelity(spec, result, target)
    meta = {"fidelity": F, "sigma": float(opt.sigma), "subdivide": int(opt.subdivide), "pad": int(opt.pad)}
    save_pulse(opt.out or "gauss.json", result, spec, target, meta)
    return EXIT_OK


def cmd_fig4_study(opt):
    eps = float(opt.eps) if opt.given("eps") else 1e-4
    L = int(opt.L) if opt.given("L") else 10
    step = float(opt.step) if opt.given("step") else 1.0
    iters = int(opt.iters) if opt.given("iters") else 15
    rows, per_seed = fig4_study(int(opt.seeds), int(opt.seed), eps, L, int(opt.rounds),
                                amplitude=float(opt.amplitude), gecko_step=step, gecko_iters=iters,
                                workers=int(opt.workers))
    failed = sum(1 for r in per_seed.values() if r is None)
    if failed:
        log.warning("fig4-study: %d of %d seeds failed to solve", failed, len(per_seed))
    _write_text(opt.out, _csv_text(FIG4_COLUMNS, rows))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "gecko": cmd_gecko,
    "spectrum": cmd_spectrum,
    "robust-sweep": cmd_robust_sweep,
    "baseline-gauss": cmd_baseline_gauss,
    "fig4-study": cmd_fig4_study,
}


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(ns.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    explicit = {
        k: v for k, v in vars(ns).items()
        if v is not None and k not in ("command", "config", "verbose", "pulse")
    }
    try:
        opt = Options(ns, explicit, _load_config(ns.config))
        return COMMANDS[ns.command](opt)
    except (UsageError, InputError, FormatError, BudgetError, OSError) as exc:
        print(f"gecko {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RestoreFailedError as exc:
        print(f"gecko {ns.command}: constraint failure: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"gecko {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
