"""Command-line front end.

Settings resolve as: command-line flags, then the config file given by
``--config``, then built-in defaults. ``RC_LAB_OUTPUT_DIR`` stands in for
``--output-dir`` when neither flags nor file set it.

A config file is flat ``key = value`` text, one key per line, keys named
after the long flags (``output-dir`` and ``output_dir`` both work); ``#``
starts a comment and ``n`` takes a comma-separated list. Unknown keys are
errors.

Examples::

    rc-lab --command sweep --n 1000 --n 10000 --n 100000 --n 1000000
    rc-lab --command falk-check --epsilon 1 --n 1000000 --trials 10000
    rc-lab --command dist-check --epsilon 1 --format json
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from rc_lab import seeding
from rc_lab.dist import PaperDistribution, quadrature_moments
from rc_lab.errors import RcLabError, UsageError
from rc_lab.order_stats import OrderStatSpec, ceil_cube_root, falk_constants, normality_diagnostic
from rc_lab.scaling import (
    SweepError,
    SweepPlan,
    fit_exponent,
    m_rule,
    run_sweep,
    upper_bound_reference,
)
from rc_lab.sim import Policy, simulate_trials, summarize

COMMANDS = ("simulate", "sweep", "falk-check", "dist-check")
FORMATS = ("csv", "json", "both")
DEFAULT_GRID = (10**3, 10**4, 10**5, 10**6)
DEFAULT_SIMULATE_N = (10**4,)
DEFAULT_OUTPUT_DIR = "rc_lab_out"
ENV_OUTPUT_DIR = "RC_LAB_OUTPUT_DIR"

# settings that change how a run executes but never what it computes;
# they are left out of the configuration echoed into output files
EXECUTION_KEYS = ("output_dir", "threads", "config")


def _version():
    from rc_lab import __version__

    return __version__


@dataclass
class ExperimentConfig:
    command: str = "sweep"
    n: list = None
    m: int = None
    epsilon: float = 0.3
    delta: float = None
    beta: float = 1.0
    noise: float = 1.0
    trials: int = 10_000
    seed: int = 42
    policy: str = "TopM"
    oracle_mode: bool = False
    output_dir: str = DEFAULT_OUTPUT_DIR
    format: str = "both"
    threads: int = 1
    dump_trials: bool = False
    config: str = None

    def effective(self):
        """Resolved settings that determine results."""
        d = asdict(self)
        if d["delta"] is None:
            d["delta"] = self.epsilon / 3.0
        for key in EXECUTION_KEYS:
            d.pop(key, None)
        return d

    def plan(self):
        return SweepPlan(
            n_grid=tuple(self.n),
            epsilon=self.epsilon,
            delta=self.delta,
            beta=self.beta,
            noise=self.noise,
            trials=self.trials,
            seed=self.seed,
            policy=Policy(self.policy),
            oracle_mode=self.oracle_mode,
            m=self.m,
        )


def _int(text):
    text = str(text).strip()
    try:
        return int(text)
    except ValueError:
        pass
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _grid(text):
    return [_int(part) for part in re.split(r"[,\s]+", str(text).strip()) if part]


CONVERTERS = {
    "command": str,
    "n": _grid,
    "m": _int,
    "epsilon": float,
    "delta": float,
    "beta": float,
    "noise": float,
    "trials": _int,
    "seed": _int,
    "policy": str,
    "oracle_mode": _bool,
    "output_dir": str,
    "format": str,
    "threads": _int,
    "dump_trials": _bool,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        found = re.search(r"argument (--[\w-]+)", message)
        key = found.group(1).lstrip("-").replace("-", "_") if found else "args"
        raise UsageError(key, message)


def _typed(key):
    convert = CONVERTERS[key]

    def parse(text):
        try:
            return convert(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    parse.__name__ = key
    return parse


def build_parser():
    p = _Parser(prog="rc-lab", description=__doc__.split("\n\n")[0],
                argument_default=argparse.SUPPRESS)
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--n", action="append", type=_typed("n"),
                   help="network size; repeat for a grid")
    p.add_argument("--m", type=_typed("m"), help="fixed number of active pairs")
    p.add_argument("--epsilon", type=_typed("epsilon"))
    p.add_argument("--delta", type=_typed("delta"), help="default: epsilon / 3")
    p.add_argument("--beta", type=_typed("beta"))
    p.add_argument("--noise", type=_typed("noise"))
    p.add_argument("--trials", type=_typed("trials"))
    p.add_argument("--seed", type=_typed("seed"))
    p.add_argument("--policy", choices=[x.value for x in Policy])
    p.add_argument("--oracle-mode", dest="oracle_mode", action="store_true")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--threads", type=_typed("threads"))
    p.add_argument("--dump-trials", dest="dump_trials", action="store_true",
                   help="simulate: write per-trial CSV")
    p.add_argument("--config", help="flat key = value config file")
    return p


def read_config_file(path):
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError("config", f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in CONVERTERS:
            raise UsageError(key, f"unknown key in {path}:{lineno}")
        try:
            values[key] = CONVERTERS[key](value)
        except ValueError as exc:
            raise UsageError(key, str(exc)) from None
    return values


def parse_config(args=None, file=None, env=None):
    """Resolve flags, config file and defaults into an ExperimentConfig."""
    env = os.environ if env is None else env
    flags = vars(build_parser().parse_args([] if args is None else list(args)))
    if "n" in flags:
        flags["n"] = [v for chunk in flags["n"] for v in chunk]
    file = flags.get("config", file)
    from_file = read_config_file(file) if file else {}

    merged = {**from_file, **flags}
    if file:
        merged["config"] = str(file)
    if "output_dir" not in merged and env.get(ENV_OUTPUT_DIR):
        merged["output_dir"] = env[ENV_OUTPUT_DIR]
    cfg = ExperimentConfig(**merged)
    if cfg.n is None:
        cfg.n = list(DEFAULT_SIMULATE_N if cfg.command == "simulate" else DEFAULT_GRID)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.command not in COMMANDS:
        raise UsageError("command", f"must be one of {COMMANDS}, got {cfg.command!r}")
    if cfg.format not in FORMATS:
        raise UsageError("format", f"must be one of {FORMATS}, got {cfg.format!r}")
    try:
        Policy(cfg.policy)
    except ValueError:
        raise UsageError("policy", f"unknown policy {cfg.policy!r}") from None
    if not cfg.n:
        raise UsageError("n", "grid is empty")
    if any(n < 2 for n in cfg.n):
        raise UsageError("n", "every n must be at least 2")
    if any(b <= a for a, b in zip(cfg.n, cfg.n[1:])):
        raise UsageError("n", f"grid must be strictly ascending, got {cfg.n}")
    if not (cfg.epsilon > 0.0 and math.isfinite(cfg.epsilon)):
        raise UsageError("epsilon", f"must be strictly positive, got {cfg.epsilon}")
    if not cfg.beta > 0.0:
        raise UsageError("beta", f"must be positive, got {cfg.beta}")
    if not cfg.noise >= 0.0:
        raise UsageError("noise", f"must be nonnegative, got {cfg.noise}")
    if cfg.trials < 1:
        raise UsageError("trials", f"must be positive, got {cfg.trials}")
    if not 0 <= cfg.seed <= seeding.MASK64:
        raise UsageError("seed", f"must be a 64-bit unsigned integer, got {cfg.seed}")
    if cfg.threads < 1:
        raise UsageError("threads", f"must be positive, got {cfg.threads}")
    if cfg.m is not None and not 1 <= cfg.m <= cfg.n[0]:
        raise UsageError("m", f"need 1 <= m <= n for every n, got m={cfg.m}")

    if cfg.delta is not None and not 0.0 < cfg.delta < 1.0 / 3.0:
        raise UsageError("delta", f"must lie in (0, 1/3), got {cfg.delta}")
    if cfg.command in ("simulate", "sweep") and cfg.m is None:
        delta = cfg.epsilon / 3.0 if cfg.delta is None else cfg.delta
        if not 0.0 < delta < 1.0 / 3.0:
            raise UsageError(
                "delta",
                f"default delta = epsilon/3 = {delta} is not below 1/3; set --delta",
            )
        for n in cfg.n:
            m_rule(n, delta)


def fmt(value):
    """CSV cell: reals to 17 significant digits, ints verbatim, None empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Writer:
    """Writes outputs into one directory and records them for the manifest."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.dir = Path(cfg.output_dir)
        self.files = []
        self.header = {"artifact": "rc_lab", "version": _version(), "config": cfg.effective()}

    @property
    def csv(self):
        return self.cfg.format in ("csv", "both")

    @property
    def json(self):
        return self.cfg.format in ("json", "both")

    def _write(self, name, text):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.files.append({"name": name, "sha256": hashlib.sha256(data).hexdigest()})

    def write_csv(self, name, columns, rows):
        buf = io.StringIO()
        buf.write(f"# rc_lab {_version()}\n")
        buf.write("# config " + json.dumps(_jsonable(self.header["config"]), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        self._write(name, buf.getvalue())

    def write_json(self, name, payload):
        body = {**self.header, **payload}
        self._write(name, json.dumps(_jsonable(body), indent=2, sort_keys=False) + "\n")

    def manifest(self, status, error=None):
        body = {**self.header, "command": self.cfg.command, "status": status,
                "files": self.files, "error": error}
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "manifest.json").write_text(
            json.dumps(_jsonable(body), indent=2) + "\n", encoding="utf-8"
        )


def _estimate_record(est):
    return {"mean_M": est.mean_M, "std_error": est.std_error, "trials": est.trials,
            "success_rate": est.success_rate, "degenerate": est.degenerate}


def run_simulate(cfg, out):
    plan = cfg.plan()
    records = []
    trial_rows = []
    for index, n in enumerate(plan.n_grid):
        net = plan.config_for(index)
        outcomes = simulate_trials(net, cfg.threads)
        est = summarize(outcomes, net.m)
        records.append({"n": n, "m": net.m, "seed": net.seed, **_estimate_record(est)})
        if cfg.dump_trials:
            for t, o in enumerate(outcomes):
                for rank in range(net.m):
                    trial_rows.append([n, t, rank + 1, o.direct_gains[rank], o.sinr[rank],
                                       int(o.sinr[rank] >= net.beta)])
    notes = {"roles": "sources and destinations are disjoint; no self-link",
             "noiseless_extension": cfg.noise == 0.0}
    if out.csv:
        cols = ["n", "m", "trials", "mean_M", "std_error", "success_rate"]
        out.write_csv("simulate.csv", cols, [[r[c] for c in cols] for r in records])
        if cfg.dump_trials:
            out.write_csv("trials.csv",
                          ["n", "trial", "rank", "direct_gain", "sinr", "success"], trial_rows)
    if out.json:
        out.write_json("simulate.json", {"results": records, "notes": notes})


SWEEP_COLUMNS = ["n", "m", "trials", "mean_M", "std_error", "success_rate",
                 "markov_event_prob", "markov_bound", "tail_event_prob", "quarter_ratio"]


def _sweep_row(row):
    e, b = row.estimate, row.bounds
    bounds = [None] * 4 if b is None else [b.markov_event_prob, b.markov_bound,
                                          b.tail_event_prob, b.quarter_ratio]
    return [row.n, row.m, e.trials, e.mean_M, e.std_error, e.success_rate, *bounds]


def run_sweep_command(cfg, out):
    plan = cfg.plan()
    error = None
    try:
        rows = run_sweep(plan, threads=cfg.threads)
    except SweepError as exc:
        rows, error = exc.rows, exc
    if out.csv:
        out.write_csv("sweep.csv", SWEEP_COLUMNS, [_sweep_row(r) for r in rows])
    if out.json:
        fit = None
        fit_note = None
        try:
            f = fit_exponent([(r.n, r.estimate.mean_M) for r in rows])
            fit = asdict(f)
        except RcLabError as exc:
            fit_note = str(exc)
        out.write_json("sweep_fit.json", {
            "plan": plan.describe(),
            "fit": fit,
            "fit_note": fit_note,
            "target_exponent": 1.0 / 3.0 - plan.delta,
            "upper_bound_reference": [
                {"n": n, "value": v} for n, v in upper_bound_reference(plan.n_grid)
            ],
            "rows": [dict(zip(SWEEP_COLUMNS, _sweep_row(r))) for r in rows],
            "partial": error is not None,
        })
    if error is not None:
        raise error


def run_falk_check(cfg, out):
    d = PaperDistribution(cfg.epsilon)
    results = []
    samples = []
    for index, n in enumerate(cfg.n):
        spec = OrderStatSpec(n, ceil_cube_root(n))
        norm = falk_constants(d, spec)
        ks, normalized = normality_diagnostic(d, spec, cfg.trials,
                                              seeding.child_stream(cfg.seed, index))
        results.append({"n": n, "i": spec.i, "a_n": norm.a_n, "b_n": norm.b_n,
                        "replicates": cfg.trials, "ks": ks,
                        "ks_null_scale": 1.0 / math.sqrt(cfg.trials)})
        samples.extend([n, spec.i, k, v] for k, v in enumerate(normalized))
    if out.csv:
        out.write_csv("falk_samples.csv", ["n", "i", "replicate", "normalized"], samples)
    if out.json:
        out.write_json("falk_check.json", {"distribution": d.describe(), "results": results})


def dist_report(d, samples, grid_points=10_001):
    """Round-trip, moment and von Mises diagnostics for a distribution."""
    u = np.linspace(0.0, 1.0 - 1e-9, grid_points)
    x = d.quantile(u)
    roundtrip = float(np.max(np.abs(d.cumulative(x) - u)))
    mean, var = d.moments()
    q_mean, q_var = quadrature_moments(d)
    k = samples.size
    s_mean = float(np.mean(samples))
    s_var = float(np.var(samples, ddof=1))
    m4 = float(np.mean((samples - s_mean) ** 4))
    xs = [10.0**p for p in range(2, 9)]
    ratios = [float(d.von_mises_ratio(v)) for v in xs]
    return {
        "distribution": d.describe(),
        "mean": mean,
        "variance": var,
        "quadrature_mean": q_mean,
        "quadrature_variance": q_var,
        "roundtrip_max_error": roundtrip,
        "cumulative_monotone": bool(np.all(np.diff(d.cumulative(x)) >= 0)),
        "quantile_monotone": bool(np.all(np.diff(x) >= 0)),
        "samples": k,
        "sample_mean": s_mean,
        "sample_mean_stderr": math.sqrt(s_var / k),
        "sample_variance": s_var,
        "sample_variance_stderr": math.sqrt(max(m4 - s_var**2, 0.0) / k),
        "von_mises": [{"x": v, "ratio": r} for v, r in zip(xs, ratios)],
        "von_mises_limit_estimate": ratios[-1],
    }


def run_dist_check(cfg, out):
    d = PaperDistribution(cfg.epsilon)
    samples = d.sample_iid(cfg.trials, seeding.child_stream(cfg.seed, 0))
    report = dist_report(d, samples)
    if out.csv:
        out.write_csv("dist_check.csv", ["x", "von_mises_ratio"],
                      [[r["x"], r["ratio"]] for r in report["von_mises"]])
    if out.json:
        out.write_json("dist_check.json", report)


HANDLERS = {
    "simulate": run_simulate,
    "sweep": run_sweep_command,
    "falk-check": run_falk_check,
    "dist-check": run_dist_check,
}


def _error_record(exc):
    return {"type": type(exc).__name__, "message": str(exc),
            "key": getattr(exc, "key", None)}


def dispatch(cfg):
    """Run one command and write its outputs. Returns the exit status."""
    out = Writer(cfg)
    try:
        HANDLERS[cfg.command](cfg, out)
    except (RcLabError, ValueError, ArithmeticError) as exc:
        record = _error_record(exc)
        status = "partial" if out.files else "error"
        out.manifest(status, record)
        print(json.dumps({"error": record, "status": status}), file=sys.stderr)
        return 1
    out.manifest("ok")
    return 0


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(json.dumps({"error": _error_record(exc), "status": "usage"}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": _error_record(exc), "status": "usage"}), file=sys.stderr)
        return 2
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
