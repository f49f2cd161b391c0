"""Command-line front end: ``dgap solve``, ``dgap verify`` and ``dgap check``.

Exit codes::

    solve   0 Solved, 2 MaxIters, 3 LineSearchFailed, 1 input error
    verify  0 pass, 4 fail, 1 input error
    check   0 every clause holds at every sample, 1 otherwise

Every artifact written to a file gets a sidecar ``<file>.manifest.json``
recording the command line, the resolved configuration, the problem hash,
the seed, the tool version and the wall time. Artifact bodies themselves
carry no timing, so reruns with the same flags are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from dgap import __version__
from dgap.errors import CapabilityError, ConfigError, DGapError, InputError
from dgap.gap import GapParams, basic_property_report, fab_value
from dgap.problems import problem_hash, resolve_problem
from dgap.solver import (
    LINE_SEARCH_FAILED,
    MAX_ITERS,
    SOLVED,
    SolverConfig,
    check_config,
    diagnostics,
    solve,
)
from dgap.subdiff import central_fd_gradient, grad_fab
from dgap.verify import ball_region, error_bound_check, kl_check, mu_check, sample_region

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_ITERS = 2
EXIT_LINE_SEARCH = 3
EXIT_VERIFY_FAIL = 4

SOLVE_EXIT = {SOLVED: EXIT_OK, MAX_ITERS: EXIT_MAX_ITERS, LINE_SEARCH_FAILED: EXIT_LINE_SEARCH}
X0_RANDOM_HALF_WIDTH = 2.0
AUTO_CENTER_STOP = 1e-24


def _jsonable(v):
    """Replace non-finite floats by None and arrays by lists, recursively."""
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _write(path, text: str, manifest: dict):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    p.write_text(text)
    manifest = dict(manifest, artifact=p.name, wall_time_s=time.perf_counter() - manifest.pop("_t0"))
    Path(str(p) + ".manifest.json").write_text(dumps(manifest))


def _manifest(argv, problem, config: dict, seed=None) -> dict:
    return {
        "_t0": time.perf_counter(),
        "command": ["dgap", *argv],
        "config": config,
        "problem": {"name": problem.name, "hash": problem_hash(problem), "source": problem.source},
        "seed": seed,
        "version": __version__,
    }


def _vector(text: str, n: int, name: str) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")], dtype=float)
    except ValueError:
        raise InputError(f"--{name}: expected {n} comma-separated numbers, got {text!r}") from None
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise InputError(f"--{name}: expected {n} finite comma-separated numbers, got {text!r}")
    return v


def parse_x0(text: str, n: int) -> np.ndarray:
    """``"x1,...,xn"`` or ``"random:<seed>"`` (uniform on ``[-2, 2]^n``)."""
    if text.startswith("random:"):
        try:
            seed = int(text[len("random:"):])
        except ValueError:
            raise InputError(f"--x0: bad seed in {text!r}") from None
        rng = np.random.default_rng(seed)
        return rng.uniform(-X0_RANDOM_HALF_WIDTH, X0_RANDOM_HALF_WIDTH, n)
    return _vector(text, n, "x0")


def _params(args, problem) -> GapParams:
    d = problem.default_params
    a = args.a if args.a is not None else (d.a if d else None)
    b = args.b if args.b is not None else (d.b if d else None)
    if a is None or b is None:
        raise InputError("--a/--b: the problem has no default parameters; pass both")
    return GapParams(a, b)


def _solver_config(args, problem, params) -> SolverConfig:
    over = {k: getattr(args, k) for k in ("rho", "alpha", "beta", "tau") if getattr(args, k, None) is not None}
    if getattr(args, "tol", None) is not None:
        over["stop_fab"] = args.tol
    if getattr(args, "max_iters", None) is not None:
        over["max_iters"] = args.max_iters
    return SolverConfig.default_for(problem, params, **over)


def _config_echo(cfg: SolverConfig) -> dict:
    return {
        "a": cfg.params.a, "b": cfg.params.b, "rho": cfg.rho, "alpha": cfg.alpha, "beta": cfg.beta,
        "tau": cfg.tau, "m_max": cfg.m_max, "stop_fab": cfg.stop_fab, "max_iters": cfg.max_iters,
    }


def cmd_solve(args, argv) -> int:
    problem = resolve_problem(args.problem)
    params = _params(args, problem)
    cfg = _solver_config(args, problem, params)
    x0 = parse_x0(args.x0, problem.dim) if args.x0 else np.zeros(problem.dim)
    chk = check_config(cfg, problem)
    if chk.violations and not args.allow_unverified_config:
        raise ConfigError(chk.violations)
    for msg in chk.violations:
        print(f"warning: parameter condition violated (override given): {msg}", file=sys.stderr)
    for msg in chk.unverified:
        print(f"warning: not verifiable: {msg}", file=sys.stderr)
    traj = solve(problem, cfg, x0, check=False)
    seed = int(args.x0.split(":")[1]) if args.x0 and args.x0.startswith("random:") else None
    echo = dict(_config_echo(cfg), x0=x0)
    _write(args.out, traj.to_csv(), _manifest(argv, problem, echo, seed))
    if args.diagnostics:
        if len(traj.records) >= 2:
            body = diagnostics(traj, cfg, problem.lipschitz_L).to_dict()
        else:
            body = {"all_pass": None, "reason": "fewer than two iterations"}
        _write(args.diagnostics, dumps(body), _manifest(argv, problem, echo, seed))
    x = ",".join(repr(float(v)) for v in traj.x_final)
    summary = f"status={traj.status} iters={len(traj.records)} fab={traj.fab_final!r} x={x}"
    print(summary, file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return SOLVE_EXIT[traj.status]


def _auto_center(problem, params) -> np.ndarray:
    cfg = SolverConfig.default_for(problem, params, stop_fab=AUTO_CENTER_STOP, max_iters=5000)
    return solve(problem, cfg, np.zeros(problem.dim), check=False).x_final


def cmd_verify(args, argv) -> int:
    problem = resolve_problem(args.problem)
    params = _params(args, problem)
    if args.center in (None, "auto"):
        center = _auto_center(problem, params)
    else:
        center = _vector(args.center, problem.dim, "center")
    region = ball_region(center, args.radius)
    if args.mode == "kl":
        rep = kl_check(problem, params, center, args.radius, args.nu, args.samples, args.seed)
    elif args.mode == "errorbound":
        rep = error_bound_check(problem, params, region, args.samples, args.seed, args.epsilon)
    else:
        rep = mu_check(problem, params, region, args.samples, args.seed)
    cfg = {"mode": args.mode, "a": params.a, "b": params.b, "center": center, "radius": args.radius,
           "nu": args.nu, "epsilon": args.epsilon, "samples": args.samples}
    _write(args.report, rep.to_json(), _manifest(argv, problem, cfg, args.seed))
    verdict = "pass" if rep.passed else "FAIL"
    print(f"{rep.kind}: {verdict} min_ratio={rep.min_ratio!r} bound={rep.theoretical_bound!r} "
          f"active={rep.n_active}/{rep.n_samples}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VERIFY_FAIL


def _gradient_ok(problem, params, x) -> bool | None:
    """Analytic gradient vs central differences; None where F has no Jacobian.

    A mismatch must persist at two step sizes, which screens out stencils
    that straddle a kink of the projection.
    """
    try:
        g = grad_fab(problem, params, x)
    except CapabilityError:
        return None
    f = lambda y: fab_value(problem, params, y)
    tol = 1e-5 * (1 + float(np.linalg.norm(g)))
    for h in (1e-6, 1e-7):
        if np.linalg.norm(central_fd_gradient(f, x, h) - g) <= tol:
            return True
    return False


def cmd_check(args, argv) -> int:
    problem = resolve_problem(args.problem)
    params = _params(args, problem)
    rng = np.random.default_rng(args.seed)
    region = ball_region(np.zeros(problem.dim), args.radius)
    X = sample_region(region, args.samples, rng)
    failures = []
    n_grad = 0
    for x in X:
        rep = basic_property_report(problem, params, x)
        for name in rep.failed():
            failures.append((name, x))
        ok = _gradient_ok(problem, params, x)
        if ok is not None:
            n_grad += 1
            if not ok:
                failures.append(("gradient", x))
    lines = [f"problem={problem.name} a={params.a!r} b={params.b!r} samples={args.samples} seed={args.seed}",
             f"gradient_points={n_grad} failures={len(failures)}"]
    for name, x in failures:
        lines.append(f"FAIL {name} at x=[{', '.join(repr(float(v)) for v in x)}]")
    lines.append("result=" + ("pass" if not failures else "FAIL"))
    cfg = {"a": params.a, "b": params.b, "samples": args.samples, "radius": args.radius}
    _write(args.report, "\n".join(lines) + "\n", _manifest(argv, problem, cfg, args.seed))
    return EXIT_OK if not failures else EXIT_INPUT


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dgap", description="D-gap descent and certificate checks for variational inequalities.")
    p.add_argument("--version", action="version", version=f"dgap {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--problem", required=True, help="builtin:<id> or path to a dgap-vi/1 JSON file")
        sp.add_argument("--a", type=float, help="inner parameter (default: problem default)")
        sp.add_argument("--b", type=float, help="outer parameter (default: problem default)")

    s = sub.add_parser("solve", help="run the descent method")
    common(s)
    s.add_argument("--rho", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--x0", help="comma-separated start or random:<seed> (default: origin)")
    s.add_argument("--tol", type=float, help="stop once f_ab <= tol (default 1e-12)")
    s.add_argument("--max-iters", type=int)
    s.add_argument("--out", help="trajectory CSV (default: stdout)")
    s.add_argument("--diagnostics", help="diagnostics JSON path")
    s.add_argument("--allow-unverified-config", action="store_true",
                   help="run even if the step parameters violate the admissibility conditions")

    v = sub.add_parser("verify", help="sampling certificate")
    common(v)
    v.add_argument("--mode", required=True, choices=("kl", "errorbound", "mu"))
    v.add_argument("--center", default="auto", help="comma-separated point or 'auto' (solve from the origin)")
    v.add_argument("--radius", type=float, default=1.0)
    v.add_argument("--nu", type=float, help="KL level (default: just above the largest sampled f_ab)")
    v.add_argument("--samples", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--epsilon", type=float, help="error-bound level (default: largest sampled f_ab)")
    v.add_argument("--report", help="report JSON (default: stdout)")

    c = sub.add_parser("check", help="basic properties and gradient formula at random points")
    common(c)
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--radius", type=float, default=2.0, help="sample the ball of this radius about the origin")
    c.add_argument("--report", help="text report (default: stdout)")
    return p


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "check": cmd_check}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # bad flags, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return COMMANDS[args.command](args, argv)
    except (DGapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
