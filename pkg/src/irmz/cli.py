"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical
validation failure.  Every number is written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import closed_form as cf
from .channels import BranchChannel, apply, beamsplitter_channel
from .errors import IrmzError, NonMonotone
from .estimation import empirical_sensitivity, sample_counts
from .moments import delta_phi_at, plain_sensitivity, recycled_sensitivity, RECYCLED, PLAIN
from .states import NumberCorrelatedState, nt_moments, nt_variance, squeezed_from_mean, squeezed_vacuum, twin_fock
from . import validation

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 2, 3
OUTPUT_DIR_ENV = "IRMZ_OUTPUT_DIR"
FIG2_COLUMNS = (
    "q", "delta_phi_tf_plain", "delta_phi_sq_plain", "delta_phi_recycled_tf",
    "delta_phi_recycled_sq", "qnl", "heisenberg",
)
SUMMARY_KEYS = (
    "phi_true", "rmse", "predicted", "ratio", "shots_per_estimate",
    "n_estimates", "seed", "signal", "clamped",
)
# engine vs closed form, relative; squeezed inputs are truncation-limited
RESIDUAL_TOL = 1e-6


class ConfigError(Exception):
    pass


class ValidationFailure(Exception):
    pass


@dataclass
class RunConfig:
    state: str = "twin-fock"
    n_t: float | None = None
    r: float | None = None
    theta: float = 0.0
    tail_tol: float = 1e-12
    state_file: str | None = None
    q: float | None = None
    channel_file: str | None = None
    signal: str = RECYCLED
    phi: float = 0.1
    phi_grid: list[float] | None = None
    q_grid: list[float] | None = None
    shots: int = 100
    n_estimates: int = 1000
    seed: int = 0
    output: str | None = None
    format: str = "text"
    extra: dict = field(default_factory=dict)

    def validate(self, need_state: bool = True) -> None:
        if need_state:
            self._validate_state()
        self._validate_rest()

    def _validate_state(self) -> None:
        if self.state not in ("twin-fock", "squeezed", "file"):
            raise ConfigError(f"unknown state kind {self.state!r}")
        specs = [self.n_t is not None, self.r is not None, self.state_file is not None]
        if self.state == "file" and not (self.state_file and not specs[0] and not specs[1]):
            raise ConfigError("state 'file' needs --state-file and no --nt/--r")
        if self.state == "twin-fock" and (self.n_t is None or specs[1] or specs[2]):
            raise ConfigError("twin-fock needs exactly --nt")
        if self.state == "squeezed" and sum(specs) != 1 or self.state == "squeezed" and specs[2]:
            raise ConfigError("squeezed needs exactly one of --nt or --r")

    def _validate_rest(self) -> None:
        if self.q is not None and self.channel_file is not None:
            raise ConfigError("give --q or --channel-file, not both")
        if self.q is not None and not 0.0 <= self.q <= 1.0:
            raise ConfigError("q must lie in [0, 1]")
        if self.signal not in (RECYCLED, PLAIN):
            raise ConfigError(f"signal must be {RECYCLED!r} or {PLAIN!r}")
        for name in ("phi_grid", "q_grid"):
            grid = getattr(self, name)
            if grid is not None and (len(grid) == 0 or np.any(np.diff(grid) <= 0)):
                raise ConfigError(f"{name} must be non-empty and strictly increasing")
        if self.q_grid is not None and (min(self.q_grid) < 0.0 or max(self.q_grid) > 1.0):
            raise ConfigError("q grid must lie in [0, 1]")
        if self.format not in ("text", "json", "csv"):
            raise ConfigError("format must be text, json or csv")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    if x is None:
        return "null"
    return json.dumps(x)


def dumps(obj) -> str:
    """JSON with floats at 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    return fmt(obj)


def parse_grid(text: str) -> list[float]:
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {what} {path!r}: {exc}") from exc


def build_config(args: argparse.Namespace, need_state: bool = True) -> RunConfig:
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)}
    if getattr(args, "config", None):
        doc = _load_json(args.config, "config")
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        for key, value in doc.items():
            key = key.replace("-", "_")
            if key not in names or key == "extra":
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    for name in ("phi_grid", "q_grid"):
        grid = getattr(cfg, name)
        if isinstance(grid, str):
            setattr(cfg, name, parse_grid(grid))
    cfg.validate(need_state)
    return cfg


def make_state(cfg: RunConfig) -> NumberCorrelatedState:
    try:
        if cfg.state == "twin-fock":
            if float(cfg.n_t) != int(cfg.n_t):
                raise ConfigError("twin-fock total must be an integer")
            return twin_fock(int(cfg.n_t))
        if cfg.state == "squeezed":
            if cfg.r is not None:
                return squeezed_vacuum(cfg.r, cfg.theta, cfg.tail_tol)
            return squeezed_from_mean(cfg.n_t, cfg.theta, cfg.tail_tol)
        return NumberCorrelatedState.from_json(_load_json(cfg.state_file, "state file"))
    except (ValueError, KeyError, TypeError, IrmzError) as exc:
        raise ConfigError(f"invalid state: {exc}") from exc


def make_channel(cfg: RunConfig, n_max: int) -> BranchChannel:
    if cfg.channel_file is not None:
        try:
            ch = BranchChannel.from_json(_load_json(cfg.channel_file, "channel file"))
        except (ValueError, KeyError, TypeError, IndexError, IrmzError) as exc:
            raise ConfigError(f"invalid channel file: {exc}") from exc
        if ch.n_max < n_max:
            raise ConfigError(f"channel n_max {ch.n_max} below state n_max {n_max}")
        return ch
    if cfg.q is None:
        raise ConfigError("need --q or --channel-file")
    return beamsplitter_channel(cfg.q, n_max)


def _output_path(cfg: RunConfig, default_name: str) -> Path | None:
    if cfg.output:
        return Path(cfg.output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    return Path(base) / default_name if base else None


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def sensitivity_report(cfg: RunConfig, q: float | None = None) -> dict:
    state = make_state(cfg)
    if q is not None:
        cfg = RunConfig(**{**cfg.__dict__, "q": q})
    channel = make_channel(cfg, state.n_max)
    joint = apply(channel, state)
    recycled = cfg.signal == RECYCLED
    try:
        rep = recycled_sensitivity(joint) if recycled else plain_sensitivity(joint)
    except IrmzError as exc:
        raise ConfigError(f"sensitivity undefined: {exc}") from exc
    n_t = float(nt_moments(state, 1))
    v_nt = float(nt_variance(state))
    f_b = cf.fisher_donor(v_nt, n_t)
    out = {
        "state": cfg.state,
        "signal": cfg.signal,
        "q": channel.q,
        "n_t": n_t,
        "n_a": rep.n_a,
        "delta_phi_engine": rep.delta_phi,
        "delta_phi_closed_form": None,
        "phi_opt": rep.phi_opt,
        "f_b": f_b,
        "f_a": None,
        "heisenberg": rep.bound_heisenberg,
        "qcrb_engine": rep.qcrb,
        "residual_closed_form": None,
        "residual_qcrb": None,
    }
    if channel.q is not None:
        q_val = channel.q
        f_a = cf.fisher_acceptor_bs(f_b, q_val * n_t, q_val)
        out["f_a"] = f_a
        if recycled:
            closed = cf.delta_phi_recycled_bs(v_nt, n_t, q_val)
        elif cfg.state == "twin-fock":
            closed = cf.plain_closed_form_tf(q_val * n_t, q_val)
        elif cfg.state == "squeezed":
            closed = cf.plain_closed_form_sq(q_val * n_t, q_val)
        else:
            closed = cf.plain_closed_form_general([nt_moments(state, k) for k in (1, 2, 3, 4)], q_val)
        out["delta_phi_closed_form"] = closed
        out["residual_closed_form"] = abs(rep.delta_phi - closed) / closed
        if rep.qcrb is not None and f_a > 0:
            out["residual_qcrb"] = abs(rep.qcrb - 1.0 / math.sqrt(f_a)) * math.sqrt(f_a)
    if cfg.phi_grid is not None:
        out["phi_grid"] = list(cfg.phi_grid)
        out["delta_phi_at_phi"] = [delta_phi_at(joint, p, recycled) for p in cfg.phi_grid]
    return out


def _check_residuals(report: dict) -> None:
    for key in ("residual_closed_form", "residual_qcrb"):
        val = report.get(key)
        if val is not None and not val <= RESIDUAL_TOL:
            raise ValidationFailure(f"{key} = {fmt(val)} exceeds {RESIDUAL_TOL:g}")


def cmd_sensitivity(cfg: RunConfig) -> int:
    if cfg.q_grid is not None:
        rows = [sensitivity_report(cfg, q) for q in cfg.q_grid if q > 0.0]
        cols = ("q", "n_a", "delta_phi_engine", "delta_phi_closed_form", "phi_opt", "f_a", "residual_closed_form")
        text = ",".join(cols) + "\n" + "".join(",".join(fmt(r[c]) for c in cols) + "\n" for r in rows)
        _emit(text, _output_path(cfg, "sensitivity.csv"))
        for r in rows:
            _check_residuals(r)
        return EXIT_OK
    report = sensitivity_report(cfg)
    if cfg.format == "json":
        text = dumps(report) + "\n"
    else:
        text = "".join(f"{k} {dumps(v)}\n" for k, v in report.items())
    _emit(text, Path(cfg.output) if cfg.output else None)
    _check_residuals(report)
    return EXIT_OK


def fig2_rows(n_t: float, q_grid) -> list[tuple]:
    v_sq = n_t * (n_t + 2.0)
    rows = []
    for q in q_grid:
        n_a = q * n_t
        rows.append((
            q,
            cf.plain_closed_form_tf(n_a, q),
            cf.plain_closed_form_sq(n_a, q),
            cf.delta_phi_recycled_bs(0.0, n_t, q),
            cf.delta_phi_recycled_bs(v_sq, n_t, q),
            1.0 / math.sqrt(n_a),
            1.0 / n_a,
        ))
    return rows


def cmd_fig2(cfg: RunConfig) -> int:
    n_t = 1e4 if cfg.n_t is None else float(cfg.n_t)
    if not n_t > 0:
        raise ConfigError("n_t must be positive")
    grid = cfg.q_grid if cfg.q_grid is not None else parse_grid("0.01:1:100")
    if grid[0] <= 0.0:
        raise ConfigError("fig2 q grid must start above 0")
    text = ",".join(FIG2_COLUMNS) + "\n"
    text += "".join(",".join(fmt(v) for v in row) + "\n" for row in fig2_rows(n_t, grid))
    _emit(text, _output_path(cfg, "fig2.csv"))
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    if int(cfg.shots) < 1 or int(cfg.n_estimates) < 1:
        raise ConfigError("shots and n_estimates must be at least 1")
    state = make_state(cfg)
    joint = apply(make_channel(cfg, state.n_max), state)
    recycled = cfg.signal == RECYCLED
    total = int(cfg.shots) * int(cfg.n_estimates)
    records = sample_counts(joint, cfg.phi, total, int(cfg.seed))
    try:
        run = empirical_sensitivity(joint, cfg.phi, int(cfg.shots), int(cfg.n_estimates), int(cfg.seed),
                                    recycled, records=records)
    except NonMonotone as exc:
        raise ValidationFailure(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not math.isfinite(run.rmse):
        raise ValidationFailure("non-finite rmse")
    out_dir = Path(cfg.output) if cfg.output else Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "records.csv", "w") as fh:
        records.write_csv(fh, recycled)
    summary = run.summary()
    text = dumps({k: summary[k] for k in SUMMARY_KEYS}) + "\n"
    (out_dir / "summary.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, inject_fault: bool = False) -> int:
    extra = None
    if cfg.channel_file is not None:
        try:
            extra = BranchChannel.from_json(_load_json(cfg.channel_file, "channel file"))
        except (ValueError, KeyError, TypeError, IndexError, IrmzError) as exc:
            raise ConfigError(f"invalid channel file: {exc}") from exc
    if inject_fault:
        with validation.perturbed_coefficient():
            results = validation.run_all(extra)
    else:
        results = validation.run_all(extra)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"first failing check: {failed[0].name}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--state", choices=("twin-fock", "squeezed", "file"))
    p.add_argument("--nt", dest="n_t", type=float, help="mean total donor number")
    p.add_argument("--r", type=float, help="squeezing magnitude")
    p.add_argument("--theta", type=float)
    p.add_argument("--tail-tol", dest="tail_tol", type=float)
    p.add_argument("--state-file", dest="state_file")
    p.add_argument("--q", type=float, help="beamsplitter transfer efficiency")
    p.add_argument("--channel-file", dest="channel_file")
    p.add_argument("--signal", choices=(RECYCLED, PLAIN))
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=("text", "json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irmz", description="Donor-enhanced interferometry with information recycling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sensitivity", help="phase sensitivity: engine vs closed form")
    _add_common(p)
    p.add_argument("--phi-grid", dest="phi_grid", help="start:stop:num or comma list")
    p.add_argument("--q-grid", dest="q_grid", help="sweep q; writes CSV")

    p = sub.add_parser("fig2", help="closed-form sensitivity curves versus q")
    _add_common(p)
    p.add_argument("--q-grid", dest="q_grid")

    p = sub.add_parser("sample", help="Monte Carlo counting and phase estimation")
    _add_common(p)
    p.add_argument("--phi", type=float)
    p.add_argument("--shots", type=int, help="shots per estimate")
    p.add_argument("--n-estimates", dest="n_estimates", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("validate", help="engine-vs-oracle and invariant self-check")
    p.add_argument("--config")
    p.add_argument("--channel-file", dest="channel_file")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "validate":
            return cmd_validate(build_config(args, need_state=False), args.inject_fault)
        cfg = build_config(args, need_state=args.command != "fig2")
        handler = {"sensitivity": cmd_sensitivity, "fig2": cmd_fig2, "sample": cmd_sample}[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
