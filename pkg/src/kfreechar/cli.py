"""Command-line entry point: one experiment per invocation, CSV tables plus a
JSON run record.

Exit codes: 0 success, 1 invalid input or configuration, 2 computation error
(region, pole, capacity) or a failed check.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import EvalBudget
from .characters import ModifiedCharacter, f_values, modified_values, parse_character
from .coefficients import factor_coefficients, nu_values, psi_values, verify_factorization
from .errors import ComputationError, ConfigError, KFreeError, ValidationError
from .experiments import (ProofSplitConfig, ab_split_sums, direct_partial_sum, f_partial_sums,
                          fit_exponent, growth_ratio_check, l_over_s_integral, perron_check,
                          second_moment_L, tail_decay_experiment)
from .sieves import KFreeParams, build_sieve, kfree_indicator, mobius_values

COMMANDS = ("sieve-stats", "dump-coeffs", "verify-identity", "sums", "fit", "ab-split",
            "perron-check", "tail-decay", "moments", "report")
OUTPUT_DIR_ENV = "KFREE_OUTPUT_DIR"


class CheckFailed(ComputationError):
    """A verification ran to completion and its check did not hold."""


# number parsing: scientific notation allowed for sizes and heights

def parse_int(text) -> int:
    if isinstance(text, (int, np.integer)) and not isinstance(text, bool):
        return int(text)
    s = str(text).strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        v = float(s)
    except ValueError:
        raise ValidationError(f"expected an integer, got {text!r}") from None
    if not math.isfinite(v) or v != int(v):
        raise ValidationError(f"expected an integer, got {text!r}")
    return int(v)


def parse_real(text) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ValidationError(f"expected a real number, got {text!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"expected a finite number, got {text!r}")
    return v


def parse_complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ValidationError(f"expected a complex number like 0.6+10j, got {text!r}") from None


def parse_list(text, item=parse_real) -> list:
    if isinstance(text, (list, tuple)):
        return [item(v) for v in text]
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValidationError(f"expected a comma-separated list, got {text!r}")
    return [item(p) for p in parts]


@dataclass
class ExperimentConfig:
    command: str
    k: int = 2
    character: str = "d=-3"
    sign: int = 1
    n: int | None = None
    x_max: int | None = None
    x: float | None = None
    y: float | None = None
    t: float | None = None
    sigma0: float | None = None
    sigma: float = 0.5
    beta: float = 0.55
    epsilon_slack: float = 0.05
    abs_err: float = 1e-10
    max_t: float = 1e3
    step: float | None = None
    window_fraction: float = 0.5
    which: str = "f"
    kind: str = "second"
    s: list = field(default_factory=lambda: ["0.6+10j"])
    y_values: list = field(default_factory=lambda: [1e2, 1e3, 1e4, 1e5])
    t_values: list = field(default_factory=lambda: [50.0, 100.0, 200.0, 400.0])
    out: str | None = None
    out_dir: str | None = None

    _PARSERS = {
        "k": parse_int, "sign": parse_int, "n": parse_int, "x_max": parse_int,
        "x": parse_real, "y": parse_real, "t": parse_real, "sigma0": parse_real,
        "sigma": parse_real, "beta": parse_real, "epsilon_slack": parse_real,
        "abs_err": parse_real, "max_t": parse_real, "step": parse_real,
        "window_fraction": parse_real,
        "s": lambda v: [str(parse_complex(z)) for z in parse_list(v, str)],
        "y_values": parse_list, "t_values": parse_list,
    }

    @classmethod
    def build(cls, command: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
        """Defaults, then the JSON config file, then explicit flags."""
        known = {f.name for f in fields(cls)} - {"command"}
        merged = {}
        for source in (file_values, flag_values):
            for key, val in source.items():
                key = key.replace("-", "_")
                if key == "command":
                    continue
                if key not in known:
                    raise ConfigError(f"unknown config key {key!r}; known keys: {', '.join(sorted(known))}")
                if val is None:
                    continue
                parse = cls._PARSERS.get(key)
                merged[key] = parse(val) if parse else val
        cfg = cls(command=command, **merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        KFreeParams(self.k)
        if self.sign not in (1, -1):
            raise ConfigError(f"--sign must be 1 or -1, got {self.sign}")
        EvalBudget(target_abs_error=self.abs_err, max_t=self.max_t)
        need = {
            "sieve-stats": ["n"], "dump-coeffs": ["n"], "verify-identity": ["n"],
            "sums": ["x_max"], "fit": ["x_max"], "ab-split": ["x"], "perron-check": ["x", "t"],
        }.get(self.command, [])
        for name in need:
            if getattr(self, name) is None:
                raise ConfigError(f"{self.command} needs --{name.replace('_', '-')}")
        if self.n is not None and self.n < 1:
            raise ConfigError(f"--n must be >= 1, got {self.n}")
        if self.x_max is not None and self.x_max < 100:
            raise ConfigError(f"--x-max must be >= 100, got {self.x_max}")
        if self.command == "perron-check":
            if self.x - math.floor(self.x) != 0.5:
                raise ConfigError(f"--x must be a half-integer such as 100.5 so that n = x never occurs, got {self.x}")
            if not self.t > 0:
                raise ConfigError(f"--t must be positive, got {self.t}")
        if self.command == "dump-coeffs" and self.which not in DUMPABLE:
            raise ConfigError(f"--which must be one of {', '.join(DUMPABLE)}, got {self.which!r}")
        if self.command == "moments" and self.kind not in ("second", "l-over-s"):
            raise ConfigError(f"--kind must be 'second' or 'l-over-s', got {self.kind!r}")

    @property
    def budget(self) -> EvalBudget:
        return EvalBudget(target_abs_error=self.abs_err, max_t=self.max_t)

    def output_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUTPUT_DIR_ENV) or ".")

    def csv_path(self, suffix: str = "") -> Path:
        base = Path(self.out) if self.out else self.output_dir() / f"{self.command}.csv"
        return base.with_name(f"{base.stem}{suffix}{base.suffix or '.csv'}") if suffix else base

    def record_path(self) -> Path:
        if self.out:
            return Path(self.out).with_suffix(".record.json")
        return self.output_dir() / f"{self.command}.record.json"


@dataclass
class RunRecord:
    command: str
    config: dict
    version: str = __version__
    started: str = ""
    wall_time: float = 0.0
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    exit_code: int = 0
    messages: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return repr(float(v))


# commands

def _character(cfg):
    return parse_character(cfg.character)


def _sieve_stats(cfg, rec):
    N = cfg.n
    table = build_sieve(N)
    mu = mobius_values(table, N).as_array()
    ind = kfree_indicator(table, cfg.k, N).as_array()
    rec.summary.update(N=N, prime_count=table.prime_count(N), mertens=int(mu.sum()),
                       squarefree_count=int(np.count_nonzero(mu)), k=cfg.k, kfree_count=int(ind.sum()))
    rec.messages.append(f"pi({N}) = {rec.summary['prime_count']}, "
                        f"{cfg.k}-free count = {rec.summary['kfree_count']}, M({N}) = {rec.summary['mertens']}")


DUMPABLE = ("f", "g", "chi", "mu", "kfree", "h", "nu", "psi")


def _dump_coeffs(cfg, rec):
    N, which = cfg.n, cfg.which
    chi = _character(cfg) if which in ("f", "g", "chi", "h", "psi") else None
    if which in ("f", "g", "mu", "kfree"):
        table = build_sieve(N)
    if which == "f":
        seq = f_values(cfg.k, ModifiedCharacter(chi, cfg.sign), table, N)
    elif which == "g":
        seq = modified_values(ModifiedCharacter(chi, cfg.sign), table, N)
    elif which == "chi":
        seq = chi.sequence(N)
    elif which == "mu":
        seq = mobius_values(table, N)
    elif which == "kfree":
        seq = kfree_indicator(table, cfg.k, N)
    elif which == "h":
        seq = factor_coefficients(cfg.k, chi, N, sign=cfg.sign)
    elif which == "nu":
        seq = nu_values(cfg.k, N)
    else:
        seq = psi_values(cfg.k, chi, N)
    path = write_csv(cfg.csv_path(), ["n", "value"], seq.items())
    rec.outputs.append(str(path))
    rec.summary.update(which=which, N=N, stored=int(seq.support.size), sparse=seq.is_sparse)


def _verify_identity(cfg, rec):
    chi = _character(cfg)
    report = verify_factorization(cfg.k, chi, ModifiedCharacter(chi, cfg.sign), cfg.n)
    rec.summary.update(identity=report.summary(), ok=report.ok, form=report.form,
                       first_mismatch=report.first_mismatch, lhs=report.lhs, rhs=report.rhs)
    rec.messages.append(report.summary())
    if not report.ok:
        raise CheckFailed(report.summary())


def _series(cfg):
    chi = _character(cfg)
    return f_partial_sums(cfg.k, ModifiedCharacter(chi, cfg.sign), cfg.x_max)


def _sums(cfg, rec):
    series = _series(cfg)
    path = write_csv(cfg.csv_path(), ["x", "partial_sum", "running_max"], series.rows())
    rec.outputs.append(str(path))
    rec.summary.update(x_max=series.x_max, final_sum=int(series.partial_sum[-1]),
                       running_max=int(series.running_max[-1]), checkpoints=int(series.checkpoints.size))
    rec.messages.append(f"S({series.x_max}) = {series.partial_sum[-1]}, running max = {series.running_max[-1]}")


def _fit(cfg, rec):
    series = _series(cfg)
    if cfg.out:
        rec.outputs.append(str(write_csv(cfg.csv_path(), ["x", "partial_sum", "running_max"], series.rows())))
    fit = fit_exponent(series, cfg.window_fraction)
    growth = growth_ratio_check(series, cfg.k, cfg.epsilon_slack)
    rec.summary.update(fit=asdict(fit), reference_exponents={"1/(2k)": 1 / (2 * cfg.k), "1/(k+1)": 1 / (cfg.k + 1)},
                       growth_exponent=growth.exponent, growth_non_increasing=growth.non_increasing,
                       growth_worst_rise=growth.worst_rise,
                       growth_ratio_first=float(growth.ratios[0]), growth_ratio_last=float(growth.ratios[-1]))
    rec.messages.append(f"slope = {fit.slope:.4f} (r^2 = {fit.r_squared:.4f}, window {fit.window}); "
                        f"1/(2k) = {1 / (2 * cfg.k):.4f}, 1/(k+1) = {1 / (cfg.k + 1):.4f}")


def _ab_split(cfg, rec):
    chi = _character(cfg)
    split_cfg = ProofSplitConfig(cfg.k, chi, cfg.x, beta=cfg.beta, epsilon_slack=cfg.epsilon_slack, y=cfg.y)
    coeffs = factor_coefficients(cfg.k, chi, int(math.floor(cfg.x)), sign=cfg.sign)
    split = ab_split_sums(split_cfg, coeffs)
    direct = direct_partial_sum(cfg.k, ModifiedCharacter(chi, cfg.sign), cfg.x)
    rec.summary.update(x=cfg.x, y=split_cfg.y, A=split.A, B=split.B, total=split.total, direct=direct,
                       exact=split.total == direct)
    rec.messages.append(f"A = {split.A}, B = {split.B}, A + B = {split.total}, direct = {direct}")
    if split.total != direct:
        raise CheckFailed(f"A + B = {split.total} differs from the direct sum {direct}")


def _perron(cfg, rec):
    res = perron_check(cfg.k, _character(cfg), cfg.x, cfg.t, sigma0=cfg.sigma0, budget=cfg.budget,
                       step=cfg.step, sign=cfg.sign)
    rec.summary.update({k: v for k, v in asdict(res).items()}, passed=res.passed)
    rec.messages.append(res.line())
    if not res.passed:
        raise CheckFailed(res.line())


def _tail_decay(cfg, rec):
    s_list = [parse_complex(z) for z in cfg.s]
    res = tail_decay_experiment(cfg.k, _character(cfg), s_list, cfg.y_values, cfg.budget, sign=cfg.sign)
    slopes = []
    for i, s in enumerate(s_list):
        rows = [(y, abs(H), H.real, H.imag) for (s_r, y, H) in res.rows if s_r == s]
        suffix = f"_s{i}" if len(s_list) > 1 else ""
        rec.outputs.append(str(write_csv(cfg.csv_path(suffix), ["y", "abs_H", "re_H", "im_H"], rows)))
        slopes.append({"s": str(s), "slope": res.slopes.get(s), "predicted": res.predicted[s]})
        if s in res.slopes:
            rec.messages.append(f"s = {s}: slope {res.slopes[s]:.4f}, predicted {res.predicted[s]:.4f}")
    rec.summary.update(slopes=slopes)


def _moments(cfg, rec):
    chi = _character(cfg)
    fn = second_moment_L if cfg.kind == "second" else l_over_s_integral
    kw = {} if cfg.step is None else {"step": cfg.step}
    results = [fn(chi, cfg.sigma, T, cfg.budget, **kw) for T in cfg.t_values]
    rows = [(r.T, r.integral, r.ratio) for r in results]
    rec.outputs.append(str(write_csv(cfg.csv_path(), ["T", "integral", "ratio"], rows)))
    ratios = [r.ratio for r in results]
    steps = [max(a, b) / min(a, b) for a, b in zip(ratios, ratios[1:])]
    rec.summary.update(kind=cfg.kind, sigma=cfg.sigma, ratios=ratios,
                       max_consecutive_factor=max(steps) if steps else 1.0)
    for r in results:
        rec.messages.append(f"T = {r.T:g}: integral {r.integral:.6f}, ratio {r.ratio:.6f}")


def _report(cfg, rec):
    out_dir = cfg.output_dir()
    records = []
    for path in sorted(out_dir.glob("*.record.json")):
        if path.name == "report.record.json":
            continue
        try:
            records.append((path, json.loads(path.read_text())))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read run record {path}: {exc}") from None
    lines = ["# Run report", "", f"{len(records)} run record(s) in `{out_dir}`.", "",
             "| record | command | exit | wall time (s) | result |", "|---|---|---|---|---|"]
    for path, r in records:
        result = "; ".join(r.get("messages", [])) or "; ".join(e.get("message", "") for e in r.get("errors", []))
        lines.append(f"| {path.name} | {r.get('command')} | {r.get('exit_code')} | "
                     f"{r.get('wall_time', 0):.3f} | {result.replace('|', '/')} |")
    target = Path(cfg.out) if cfg.out else out_dir / "report.md"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    rec.outputs.append(str(target))
    rec.summary.update(records=len(records))


HANDLERS = {
    "sieve-stats": _sieve_stats, "dump-coeffs": _dump_coeffs, "verify-identity": _verify_identity,
    "sums": _sums, "fit": _fit, "ab-split": _ab_split, "perron-check": _perron,
    "tail-decay": _tail_decay, "moments": _moments, "report": _report,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ValidationError):
        return 1
    return 2


def run(cfg: ExperimentConfig) -> RunRecord:
    """Run one experiment and write its record; errors are captured in the record."""
    rec = RunRecord(command=cfg.command, config=asdict(cfg),
                    started=time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    t0 = time.perf_counter()
    try:
        HANDLERS[cfg.command](cfg, rec)
    except (KFreeError, OSError) as exc:
        rec.exit_code = exit_code_for(exc) if isinstance(exc, KFreeError) else 2
        rec.errors.append({"type": type(exc).__name__, "message": str(exc)})
    rec.wall_time = time.perf_counter() - t0
    path = cfg.record_path()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(rec.to_json() + "\n", encoding="utf-8")
        rec.outputs.append(str(path))
    except OSError as exc:
        rec.errors.append({"type": type(exc).__name__, "message": f"could not write run record: {exc}"})
        rec.exit_code = rec.exit_code or 2
    return rec


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--k", help="k-free exponent (integer >= 2, default 2)")
    common.add_argument("--character", help="d=<fundamental discriminant> or table=<json path> (default d=-3)")
    common.add_argument("--sign", help="value of g at primes dividing q: 1 (default) or -1")
    common.add_argument("--out", help="CSV output path (the run record goes next to it)")
    common.add_argument("--out-dir", dest="out_dir", help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
    common.add_argument("--config", help="JSON config file; flags take precedence")
    common.add_argument("--abs-err", dest="abs_err", help="target absolute error for zeta/L evaluation")
    common.add_argument("--max-t", dest="max_t", help="largest |t| accepted by the analytic engine")

    ap = _Parser(prog="kfreechar", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, argument_default=argparse.SUPPRESS)

    add("sieve-stats", "prime, k-free and Mobius counts up to N").add_argument("--n")
    p = add("dump-coeffs", "write a coefficient sequence as n,value rows")
    p.add_argument("--n")
    p.add_argument("--which", choices=DUMPABLE, help="sequence to dump (default f; h means htilde for odd k)")
    add("verify-identity", "check f = chi*h (k even) or chi*htilde (k odd) up to N").add_argument("--n")
    add("sums", "partial sums and running maxima on a geometric grid").add_argument("--x-max", dest="x_max")
    p = add("fit", "fit the growth exponent of the running maximum")
    p.add_argument("--x-max", dest="x_max")
    p.add_argument("--window-fraction", dest="window_fraction")
    p.add_argument("--epsilon-slack", dest="epsilon_slack")
    p = add("ab-split", "A/B decomposition of the partial sum at x")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--beta")
    p.add_argument("--epsilon-slack", dest="epsilon_slack")
    p = add("perron-check", "compare the partial sum with the truncated Perron integral")
    p.add_argument("--x")
    p.add_argument("--t")
    p.add_argument("--sigma0")
    p.add_argument("--step")
    p = add("tail-decay", "decay of the tail function in y")
    p.add_argument("--s", action="append", help="point s (repeatable), e.g. 0.6+10j")
    p.add_argument("--y-values", dest="y_values", help="comma-separated y values")
    p = add("moments", "moment integrals of L on a vertical line")
    p.add_argument("--sigma")
    p.add_argument("--t-values", dest="t_values", help="comma-separated heights T")
    p.add_argument("--kind", choices=("second", "l-over-s"))
    p.add_argument("--step")
    add("report", "collect run records from the output directory into report.md")
    return ap


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def main(argv=None) -> int:
    try:
        ns = vars(build_parser().parse_args(argv))
        command = ns.pop("command")
        file_values = load_config_file(ns.pop("config")) if "config" in ns else {}
        cfg = ExperimentConfig.build(command, file_values, ns)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rec = run(cfg)
    for line in rec.messages:
        print(line)
    for err in rec.errors:
        print(f"error: {err['type']}: {err['message']}", file=sys.stderr)
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
