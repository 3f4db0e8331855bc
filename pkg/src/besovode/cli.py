"""Batch front end: config-driven solves and inequality verification,
plus a direct norm readout for CSV signals.

Config files are flat ``key = value`` text with dotted sections and
``#`` comments.  Every numeric field is validated before any
computation starts and unknown keys are rejected, so a malformed config
exits with code 2 and writes nothing.  Outputs are written atomically
(temp file + rename) inside the configured output directory only;
reports carry no timestamps, so a fixed seed reproduces byte-identical
artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BesovodeError, ConfigError
from .expressions import compile_expression
from .fractional_ops import FractionalOrder
from .grid_signal import Grid, Signal, read_signal_csv, write_signal_csv
from .inequality_lab import EXPERIMENT_NAMES, default_specs, run_experiment
from .littlewood_paley import BesovIndex, besov_norm_interval
from .picard_solver import SolverConfig, solve
from .rhs_operators import (
    RhsOperator,
    VolterraKernel,
    composition_operator,
    fractional_product_operator,
    series_operator,
    volterra_operator,
)

__all__ = ["RunConfig", "parse_config", "run", "main"]

OUTPUT_DIR_ENV = "BESOVODE_OUT"


# ---------------------------------------------------------------------------
# config document


def _parse_document(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in values:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        if len(value) >= 2 and value[0] == value[-1] == '"':
            value = value[1:-1]
        values[key] = value
    return values


class _KeyReader:
    def __init__(self, raw: dict[str, str]):
        self.raw = dict(raw)

    def take(self, key: str, kind: str, default=None, required: bool = False):
        if key not in self.raw:
            if required:
                raise ConfigError(key, "required key is missing")
            return default
        text = self.raw.pop(key)
        try:
            if kind == "str":
                return text
            if kind == "int":
                return int(text)
            if kind == "float":
                return float("inf") if text.lower() in ("inf", "infinity") else float(text)
            if kind == "bool":
                if text.lower() in ("true", "yes", "1"):
                    return True
                if text.lower() in ("false", "no", "0"):
                    return False
                raise ValueError(text)
            if kind == "float_list":
                return [float(part.strip()) for part in text.split(",") if part.strip()]
            if kind == "str_list":
                return [part.strip() for part in text.split(",") if part.strip()]
        except ValueError:
            raise ConfigError(key, f"cannot parse {text!r} as {kind}") from None
        raise ConfigError(key, f"unknown schema kind {kind}")

    def reject_leftovers(self) -> None:
        if self.raw:
            key = sorted(self.raw)[0]
            raise ConfigError(key, "unknown key")


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description: exactly one mode."""

    mode: str
    output_dir: str
    problem: dict | None = None
    solver: SolverConfig | None = None
    verify: dict | None = None
    besov: dict | None = None
    base_dir: str = "."


def _positive(key: str, value, kind: str = "value"):
    if not (value > 0):
        raise ConfigError(key, f"{kind} must be positive, got {value}")
    return value


def _parse_solver_block(reader: _KeyReader) -> SolverConfig:
    tol = _positive("solver.tol", reader.take("solver.tol", "float", 1e-10))
    max_iter = int(_positive("solver.max_iter", reader.take("solver.max_iter", "int", 80)))
    target = reader.take("solver.target_contraction", "float", 0.5)
    if not (0.0 < target < 1.0):
        raise ConfigError("solver.target_contraction", f"must lie in (0, 1), got {target}")
    shrink = reader.take("solver.window_shrink", "float", 0.5)
    if not (0.0 < shrink < 1.0):
        raise ConfigError("solver.window_shrink", f"must lie in (0, 1), got {shrink}")
    min_window = reader.take("solver.min_window", "float", None)
    if min_window is not None:
        _positive("solver.min_window", min_window)
    rho = reader.take("solver.rho", "float", math.inf)
    _positive("solver.rho", rho)
    alpha = reader.take("solver.alpha", "float", 0.25)
    eta = reader.take("solver.eta", "float", 0.75)
    if not (0.0 < alpha < eta < 1.0):
        raise ConfigError("solver.eta", f"eta must satisfy alpha < eta < 1 (alpha={alpha}, eta={eta})")
    p = reader.take("solver.p", "float", 2.0)
    q = reader.take("solver.q", "float", 2.0)
    for key, r in (("solver.p", p), ("solver.q", q)):
        if not r >= 1:
            raise ConfigError(key, f"must satisfy 1 <= value <= inf, got {r}")
    seed = reader.take("solver.seed", "int", 0)
    probe_pairs = int(_positive("solver.probe_pairs", reader.take("solver.probe_pairs", "int", 20)))
    return SolverConfig(
        tol=tol,
        max_iter=max_iter,
        target_contraction=target,
        window_shrink=shrink,
        min_window=min_window,
        ball_radius=rho,
        alpha=alpha,
        eta=eta,
        p=p,
        q=q,
        seed=seed,
        probe_pairs=probe_pairs,
    )


def _parse_problem_block(reader: _KeyReader) -> dict:
    operator = reader.take("problem.operator", "str", required=True)
    if operator not in ("composition", "fractional", "volterra", "series"):
        raise ConfigError(
            "problem.operator",
            f"must be one of composition, fractional, volterra, series; got {operator!r}",
        )
    T = _positive("problem.T", reader.take("problem.T", "float", required=True), "horizon")
    n = reader.take("problem.n", "int", required=True)
    if n < 16 or (n & (n - 1)) != 0:
        raise ConfigError("problem.n", f"must be a power of two >= 16, got {n}")
    d = reader.take("problem.d", "int", 1)
    if d < 1:
        raise ConfigError("problem.d", f"state dimension must be >= 1, got {d}")
    u0 = reader.take("problem.u0", "float_list", required=True)
    if len(u0) != d:
        raise ConfigError("problem.u0", f"needs {d} components, got {len(u0)}")
    problem: dict = {"operator": operator, "T": T, "n": n, "d": d, "u0": u0}
    if operator == "composition":
        problem["f"] = reader.take("problem.f", "str", required=True)
        problem["lipschitz"] = _positive(
            "problem.lipschitz", reader.take("problem.lipschitz", "float", 1.0)
        )
    elif operator == "fractional":
        kind = reader.take("problem.kind", "str", "caputo")
        if kind not in ("caputo", "riemann_liouville"):
            raise ConfigError("problem.kind", f"must be caputo or riemann_liouville, got {kind!r}")
        betas = reader.take("problem.beta", "float_list", required=True)
        if len(betas) not in (1, d):
            raise ConfigError("problem.beta", f"needs 1 or {d} components, got {len(betas)}")
        for b in betas:
            if not (0.0 < b < 1.0):
                raise ConfigError("problem.beta", f"orders must lie in (0, 1), got {b}")
            if kind == "riemann_liouville" and b >= 0.5:
                raise ConfigError(
                    "problem.beta",
                    f"kind = riemann_liouville requires 0 < beta < 1/2, got {b}",
                )
        problem["kind"] = kind
        problem["beta"] = betas
        problem["A"] = reader.take("problem.A", "str", None)
    elif operator == "volterra":
        kernel = reader.take("problem.kernel", "str", None)
        kernel_csv = reader.take("problem.kernel_csv", "str", None)
        if (kernel is None) == (kernel_csv is None):
            raise ConfigError(
                "problem.kernel", "exactly one of problem.kernel / problem.kernel_csv is required"
            )
        problem["kernel"] = kernel
        problem["kernel_csv"] = kernel_csv
    else:  # series
        count = reader.take("problem.series_count", "int", required=True)
        if count < 0:
            raise ConfigError("problem.series_count", f"must be >= 0, got {count}")
        terms = []
        for i in range(count):
            terms.append(
                {
                    "f": reader.take(f"problem.series_f{i}", "str", required=True),
                    "psi": reader.take(f"problem.series_psi{i}", "str", required=True),
                    "lipschitz": reader.take(f"problem.series_lip{i}", "float", 1.0),
                }
            )
        problem["terms"] = terms
        sigma = reader.take("problem.coefficient_smoothness", "float", 0.3)
        s = reader.take("problem.input_smoothness", "float", 0.8)
        problem["coefficient_smoothness"] = sigma
        problem["input_smoothness"] = s
    return problem


def _parse_verify_block(reader: _KeyReader) -> dict:
    names = reader.take("verify.experiments", "str_list", ["all"])
    if names == ["all"]:
        names = list(EXPERIMENT_NAMES)
    for name in names:
        if name not in EXPERIMENT_NAMES:
            raise ConfigError(
                "verify.experiments",
                f"unknown experiment {name!r}; known: {', '.join(EXPERIMENT_NAMES)}",
            )
    seed = reader.take("verify.seed", "int", 20240901)
    n = reader.take("verify.n", "int", 4096)
    if n < 16 or (n & (n - 1)) != 0:
        raise ConfigError("verify.n", f"must be a power of two >= 16, got {n}")
    T = _positive("verify.T", reader.take("verify.T", "float", 1.0), "horizon")
    sample_count = int(
        _positive("verify.sample_count", reader.take("verify.sample_count", "int", 20))
    )
    return {"experiments": names, "seed": seed, "n": n, "T": T, "sample_count": sample_count}


def _parse_besov_block(reader: _KeyReader) -> dict:
    return {
        "input": reader.take("besov.input", "str", required=True),
        "s": reader.take("besov.s", "float_list", required=True),
        "p": reader.take("besov.p", "float_list", required=True),
        "q": reader.take("besov.q", "float_list", required=True),
        "t": reader.take("besov.t", "float", None),
    }


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Validate a config document completely; raises ConfigError."""
    reader = _KeyReader(_parse_document(text))
    mode = reader.take("mode", "str", required=True)
    if mode not in ("solve", "verify", "besov-norm"):
        raise ConfigError("mode", f"must be solve, verify, or besov-norm, got {mode!r}")
    output_dir = reader.take("output.dir", "str", "out")
    problem = solver = verify = besov = None
    if mode == "solve":
        problem = _parse_problem_block(reader)
        solver = _parse_solver_block(reader)
    elif mode == "verify":
        verify = _parse_verify_block(reader)
    else:
        besov = _parse_besov_block(reader)
    reader.reject_leftovers()
    return RunConfig(
        mode=mode,
        output_dir=output_dir,
        problem=problem,
        solver=solver,
        verify=verify,
        besov=besov,
        base_dir=base_dir,
    )


# ---------------------------------------------------------------------------
# operator construction


def _component_expressions(src: str, d: int, key: str, variables: tuple[str, ...]):
    parts = [part.strip() for part in src.split(";")]
    if len(parts) == 1 and d > 1:
        parts = parts * d
    if len(parts) != d:
        raise ConfigError(key, f"needs {d} ';'-separated expressions, got {len(parts)}")
    try:
        return [compile_expression(part, variables) for part in parts]
    except BesovodeError as err:
        raise ConfigError(key, str(err)) from None


def _state_variables(d: int) -> tuple[str, ...]:
    names = [f"x{i}" for i in range(d)]
    if d == 1:
        names.append("x")  # convenience alias for scalar problems
    return tuple(names)


def _state_env(values: np.ndarray) -> dict:
    env = {f"x{i}": values[:, i] for i in range(values.shape[1])}
    if values.shape[1] == 1:
        env["x"] = values[:, 0]
    return env


def build_operator(problem: dict, grid: Grid, base_dir: str = ".") -> RhsOperator:
    d = problem["d"]
    kind = problem["operator"]
    if kind == "composition":
        fns = _component_expressions(problem["f"], d, "problem.f", _state_variables(d))

        def f(values: np.ndarray) -> np.ndarray:
            env = _state_env(values)
            return np.column_stack([np.broadcast_to(fn(env), (values.shape[0],)) for fn in fns])

        return composition_operator(f, lip_f=problem["lipschitz"])
    if kind == "fractional":
        order = FractionalOrder(tuple(problem["beta"]))
        if problem["A"] is None:
            entries = None
        else:
            entries = _component_expressions(
                problem["A"], d * d, "problem.A", _state_variables(d)
            )

        def A(values: np.ndarray) -> np.ndarray:
            n = values.shape[0]
            if entries is None:
                return np.broadcast_to(np.eye(d), (n, d, d)).copy()
            env = _state_env(values)
            cols = [np.broadcast_to(fn(env), (n,)) for fn in entries]
            return np.stack(cols, axis=1).reshape(n, d, d)

        return fractional_product_operator(A, order, kind=problem["kind"])
    if kind == "volterra":
        if problem["kernel"] is not None:
            fn = compile_expression(problem["kernel"], ("s", "t"))
            kernel = VolterraKernel.from_function(lambda ss, tt: np.broadcast_to(
                fn({"s": ss, "t": tt}), ss.shape
            ))
        else:
            kernel = VolterraKernel.from_csv(Path(base_dir) / problem["kernel_csv"])
        return volterra_operator(kernel)
    # series
    sigma = problem["coefficient_smoothness"]
    s = problem["input_smoothness"]
    times = grid.times()
    terms = []
    for i, term in enumerate(problem["terms"]):
        fns = _component_expressions(term["f"], d, f"problem.series_f{i}", _state_variables(d))

        def f(values: np.ndarray, fns=fns) -> np.ndarray:
            env = _state_env(values)
            return np.column_stack([np.broadcast_to(fn(env), (values.shape[0],)) for fn in fns])

        psi_fn = compile_expression(term["psi"], ("t",))
        psi = Signal(grid, np.broadcast_to(psi_fn({"t": times}), (grid.n,)).copy())
        terms.append((f, term["lipschitz"], psi))
    return series_operator(
        terms,
        psi_index=BesovIndex(sigma, 2.0, 2.0),
        input_index=BesovIndex(s, 2.0, 2.0),
    )


# ---------------------------------------------------------------------------
# execution


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _run_solve(config: RunConfig, out: Path) -> int:
    grid = Grid(config.problem["T"], config.problem["n"])
    op = build_operator(config.problem, grid, config.base_dir)
    report = solve(op, np.asarray(config.problem["u0"]), config.solver, grid)
    out.mkdir(parents=True, exist_ok=True)
    csv_name = "solution.csv"
    tmp = out / (csv_name + ".tmp")
    write_signal_csv(report.solution, tmp)
    os.replace(tmp, out / csv_name)
    _write_atomic(out / "report.json", json.dumps(report.to_dict(csv_name), indent=2, sort_keys=True) + "\n")
    return 0 if report.converged else 1


def _run_verify(config: RunConfig, out: Path) -> int:
    block = config.verify
    specs = default_specs(
        seed=block["seed"], T=block["T"], n=block["n"], sample_count=block["sample_count"]
    )
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    all_passed = True
    for name in block["experiments"]:
        report = run_experiment(specs[name])
        summary[name] = report.status
        all_passed = all_passed and report.passed
        _write_atomic(out / f"{name}.report.json", report.to_json() + "\n")
        _write_atomic(out / f"{name}.points.csv", report.to_csv())
        _write_atomic(out / f"{name}.txt", report.to_text())
    _write_atomic(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0 if all_passed else 1


def _run_besov_norm(config: RunConfig) -> int:
    block = config.besov
    u = read_signal_csv(Path(config.base_dir) / block["input"])
    t = block["t"] if block["t"] is not None else u.grid.T
    combos = []
    for s in block["s"]:
        for p in block["p"]:
            for q in block["q"]:
                combos.append(BesovIndex(s, p, q))
    rows = [("s", "p", "q", "t", "norm")]
    for idx in combos:
        norm = besov_norm_interval(u, t, idx)
        rows.append((f"{idx.s:g}", f"{idx.p:g}", f"{idx.q:g}", f"{t:g}", repr(norm)))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    for row in rows:
        print("  ".join(cell.ljust(width) for cell, width in zip(row, widths)))
    return 0


def run(config: RunConfig, output_dir: str | None = None) -> int:
    """Execute a validated config; returns the process exit code."""
    out = Path(output_dir or os.environ.get(OUTPUT_DIR_ENV) or config.output_dir)
    try:
        if config.mode == "solve":
            return _run_solve(config, out)
        if config.mode == "verify":
            return _run_verify(config, out)
        return _run_besov_norm(config)
    except BesovodeError as err:
        print(f"error [{type(err).__module__}.{type(err).__name__}]: {err}", file=sys.stderr)
        return 1


def _load_config(path: str) -> RunConfig:
    cfg_path = Path(path)
    try:
        text = cfg_path.read_text()
    except OSError as err:
        raise ConfigError("config", f"cannot read {path!r}: {err}") from None
    return parse_config(text, base_dir=str(cfg_path.parent))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="besovode",
        description="Solve u' = H(u) for derivative-losing right-hand sides and "
        "verify the underlying norm inequalities numerically.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in ("solve", "verify"):
        cmd = sub.add_parser(mode, help=f"run a {mode} config")
        cmd.add_argument("--config", required=True, help="path to a key = value config file")
        cmd.add_argument("--output-dir", default=None, help=f"override output dir (or ${OUTPUT_DIR_ENV})")
    norm_cmd = sub.add_parser("besov-norm", help="print norms of a CSV signal")
    norm_cmd.add_argument("--input", required=True, help="signal CSV with header t,x0,...")
    norm_cmd.add_argument("--s", required=True, help="smoothness values, comma separated")
    norm_cmd.add_argument("--p", required=True, help="integrability values (reals or inf)")
    norm_cmd.add_argument("--q", required=True, help="summation values (reals or inf)")
    norm_cmd.add_argument("--t", default=None, help="interval end (defaults to the horizon)")
    args = parser.parse_args(argv)

    try:
        if args.command in ("solve", "verify"):
            config = _load_config(args.config)
            if config.mode != args.command:
                raise ConfigError("mode", f"config says {config.mode!r} but command is {args.command!r}")
            return run(config, output_dir=args.output_dir)
        raw = {
            "mode": "besov-norm",
            "besov.input": args.input,
            "besov.s": args.s,
            "besov.p": args.p,
            "besov.q": args.q,
        }
        if args.t is not None:
            raw["besov.t"] = args.t
        reader = _KeyReader(raw)
        reader.take("mode", "str")
        config = RunConfig(mode="besov-norm", output_dir="out", besov=_parse_besov_block(reader))
        return run(config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
