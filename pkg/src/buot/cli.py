"""Command-line driver.

Commands: ``solve``, ``sweep-alpha``, ``mesh-study``, ``color-transfer``,
``oracle-check``.  Result tables are CSV; run summaries are JSON lines; images
are PGM/PPM.  Each output directory also gets ``manifest.json`` (command,
resolved configuration, input digests, versions, timestamp).  The manifest
is the only file that changes between identical runs.

Exit codes: 0 success, 2 usage, 3 I/O, 4 validation, 5 non-convergence,
6 oracle check failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

import buot
from buot import _backend
from buot.generators import GENERATORS, generate
from buot.grid import ScalarField, make_grid, norm_h2
from buot.pdhg import MassMismatchError, SolverConfig, compare_solutions, solve

log = logging.getLogger("buot")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_NONCONVERGENCE = 5
EXIT_CHECK_FAILED = 6

DEFAULTS = {
    "alpha": None,
    "p": 2,
    "tol": 1e-6,
    "max_iters": 300_000,
    "mu": None,
    "tau": None,
    "seed": 0,
    "out": "buot-out",
}

MANIFEST = "manifest.json"

_ARGV: list = []  # arguments of the current invocation, for the manifest


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------- config

def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Keys use flag names."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {path}: {exc}") from exc
    conf = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(EXIT_USAGE, f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        conf[key.replace("-", "_")] = value
    return conf


def _float_or_inf(text):
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t in ("inf", "infinity", "ot"):
        return math.inf
    return float(t)


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [_float_or_inf(x) for x in str(text).replace(",", " ").split()]


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(",", " ").split()]


_CASTS = {
    "alpha": _float_or_inf, "p": int, "tol": float, "max_iters": int, "mu": float,
    "tau": float, "seed": int, "out": str,
}


def resolve_options(args) -> dict:
    """Merge flags > config file > defaults for the shared options."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    opts = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            opts[key] = flag
        elif key in conf:
            try:
                opts[key] = _CASTS[key](conf[key])
            except ValueError as exc:
                raise CliError(EXIT_USAGE, f"config value for {key!r}: {exc}") from exc
        else:
            opts[key] = default
    # command-specific keys pass through from the config file when the flag is unset
    for key, value in conf.items():
        if key not in opts and getattr(args, key, None) is None:
            setattr(args, key, value)
    return opts


# --------------------------------------------------------------------------- outputs

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _versions() -> dict:
    return {
        "buot": buot.__version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "backend": _backend.NAME,
    }


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


class Run:
    """Output directory bookkeeping for one command invocation."""

    def __init__(self, command, opts, extra=None, inputs=()):
        self.command = command
        self.out = Path(opts["out"])
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot create output directory {self.out}: {exc}") from exc
        self.config = dict(opts, **(extra or {}))
        self.inputs = {}
        for item in inputs:
            p = Path(item)
            self.inputs[str(item)] = _sha256(p) if p.is_file() else "generator"
        self.files = []

    def _write(self, name, data: bytes):
        path = self.out / name
        try:
            path.write_bytes(data)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc
        self.files.append(name)
        return path

    def write_csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(f"# manifest={MANIFEST}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return self._write(name, buf.getvalue().encode())

    def write_records(self, name, records):
        lines = [json.dumps(dict(_jsonable(r), manifest=MANIFEST), sort_keys=True)
                 for r in records]
        return self._write(name, ("\n".join(lines) + "\n").encode())

    def write_bytes(self, name, data):
        return self._write(name, data)

    def finish(self):
        manifest = {
            "command": self.command,
            "argv": list(_ARGV),
            "config": _jsonable(self.config),
            "inputs": self.inputs,
            "outputs": {f: _sha256(self.out / f) for f in self.files},
            "versions": _versions(),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        (self.out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    return v


# --------------------------------------------------------------------------- inputs

def _load_pair(args, opts, N=None):
    """Densities from ``--rho0/--rho1`` images or a ``--generator``."""
    from buot.imaging import load_density, read_image

    if args.generator:
        n = N if N is not None else (int(args.n) if args.n else (16 if GENERATORS.get(
            args.generator, (1,))[0] == 1 else 32))
        try:
            return generate(args.generator, n, float(args.length)), [f"{args.generator}:N={n}"]
        except ValueError as exc:
            raise CliError(EXIT_USAGE, str(exc)) from exc
    if not (args.rho0 and args.rho1):
        raise CliError(EXIT_USAGE, "give --rho0 and --rho1 images, or --generator")
    if str(args.rho0).endswith(".npy") or str(args.rho1).endswith(".npy"):
        return _load_arrays(args), [args.rho0, args.rho1]
    try:
        img0 = read_image(args.rho0)
        img1 = read_image(args.rho1)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read input image: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_IO, str(exc)) from exc
    if (img0.height, img0.width) != (img1.height, img1.width):
        raise CliError(EXIT_VALIDATION, "input images have different sizes")
    if img0.height != img0.width:
        raise CliError(EXIT_VALIDATION, "input images must be square (N+1)x(N+1)")
    grid = make_grid(2, float(args.length), img0.width - 1)
    try:
        pair = (load_density(img0, grid), load_density(img1, grid))
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc
    return pair, [args.rho0, args.rho1]


def _load_arrays(args):
    """Raw densities from ``.npy`` files, used as given (no normalization).

    An array of shape ``(N+1,) * d`` defines a ``d``-dimensional grid on ``[0, L]^d``.
    """
    arrays = []
    for path in (args.rho0, args.rho1):
        try:
            arrays.append(np.load(path, allow_pickle=False))
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
    a0, a1 = arrays
    if a0.shape != a1.shape:
        raise CliError(EXIT_VALIDATION, f"density shapes differ: {a0.shape} vs {a1.shape}")
    if a0.ndim == 0 or min(a0.shape) < 2 or len(set(a0.shape)) != 1:
        raise CliError(EXIT_VALIDATION, f"density arrays must be (N+1)^d with N >= 1, got {a0.shape}")
    grid = make_grid(a0.ndim, float(args.length), a0.shape[0] - 1)
    try:
        return ScalarField(grid, a0), ScalarField(grid, a1)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc


def _config(opts, alpha=None, **over) -> SolverConfig:
    a = opts["alpha"] if alpha is None else alpha
    try:
        return SolverConfig(alpha=math.inf if a is None else a, p=opts["p"], mu=opts["mu"],
                            tau=opts["tau"], tol=opts["tol"], max_iters=opts["max_iters"], **over)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("BUOT_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    """Ordered map, parallel over processes when ``BUOT_THREADS > 1``."""
    items = list(items)
    n = min(_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _solve_task(task):
    rho0, rho1, cfg = task
    return solve(rho0, rho1, cfg)


# --------------------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    opts = resolve_options(args)
    if args.ot:
        opts["alpha"] = math.inf
    elif opts["alpha"] is None:
        raise CliError(EXIT_USAGE, "solve needs --alpha A or --ot")
    (rho0, rho1), inputs = _load_pair(args, opts)
    cfg = _config(opts)
    try:
        sol = solve(rho0, rho1, cfg)
    except MassMismatchError as exc:
        raise CliError(EXIT_VALIDATION, f"mass mismatch: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from exc
    run = Run("solve", opts, {"generator": args.generator, "length": float(args.length)}, inputs)
    g = sol.grid
    record = dict(sol.summary(), d=g.d, N=g.sizes[0], L=g.lengths[0])
    run.write_records("solve.jsonl", [record])
    if args.dump_fields:
        for name, arr in (("m", sol.m.as_array()), ("eta", sol.eta.as_array()),
                          ("phi", sol.phi.as_array())):
            buf = io.BytesIO()
            np.save(buf, arr)
            run.write_bytes(f"{name}.npy", buf.getvalue())
    run.finish()
    print(json.dumps(_jsonable(record), sort_keys=True))
    if not sol.converged:
        print(f"error: not converged (gap {sol.gap:.3e} > tol {cfg.tol:g})", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


DEFAULT_SWEEP = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def sweep_alpha(rho0, rho1, alphas, base: SolverConfig):
    """UOT for each alpha plus one OT solve, all with the same step sizes.

    Returns ``(rows, ot_solution, uot_solutions)``; each row is
    ``(alpha, m_dif, eta_dif, objective, iters, converged)``.
    """
    g = rho0.grid
    # one (mu, tau) pair valid for every alpha and for OT
    steps = SolverConfig(alpha=1.0, p=base.p, mu=base.mu, tau=base.tau, tol=base.tol,
                         max_iters=base.max_iters).resolve(g)
    common = dict(p=base.p, mu=steps.mu, tau=steps.tau, tol=base.tol, max_iters=base.max_iters)
    tasks = [(rho0, rho1, SolverConfig(alpha=math.inf, **common))]
    tasks += [(rho0, rho1, SolverConfig(alpha=a, **common)) for a in alphas]
    sols = _map(_solve_task, tasks)
    ot = sols[0]
    rows = []
    for a, sol in zip(alphas, sols[1:]):
        m_dif, eta_dif = compare_solutions(sol, ot)
        rows.append((a, m_dif, eta_dif, sol.objective, sol.iters, sol.converged))
    return rows, ot, sols[1:]


def cmd_sweep_alpha(args) -> int:
    opts = resolve_options(args)
    alphas = _float_list(args.alphas) if args.alphas else DEFAULT_SWEEP
    (rho0, rho1), inputs = _load_pair(args, opts)
    if abs(rho0.total() - rho1.total()) > 1e-9:
        raise CliError(EXIT_VALIDATION, "sweep-alpha needs equal-mass inputs")
    base = _config(opts, alpha=1.0)
    rows, ot, _ = sweep_alpha(rho0, rho1, alphas, base)
    run = Run("sweep-alpha", opts, {"alphas": alphas, "generator": args.generator}, inputs)
    run.write_csv("sweep.csv", ["alpha", "m_dif", "eta_dif", "objective", "iters", "converged"],
                  rows)
    records = [dict(zip(["alpha", "m_dif", "eta_dif", "objective", "iters", "converged"], r))
               for r in rows]
    records.append({"alpha": "inf", "objective": ot.objective, "iters": ot.iters,
                    "converged": ot.converged})
    run.write_records("sweep.jsonl", records)
    run.finish()
    for r in rows:
        print(f"alpha={r[0]:<6g} m_dif={r[1]:.4e} eta_dif={r[2]:.4e} obj={r[3]:.6f} iters={r[4]}")
    converged = ot.converged and all(r[5] for r in rows)
    return EXIT_OK if converged else EXIT_NONCONVERGENCE


DEFAULT_MESH_ALPHAS = [0.1, 0.4, 0.6, 0.63, 1.0]


def mesh_study(pairs, alphas, base: SolverConfig):
    """``table[alpha][N] = ||eta*||_{h,2}`` over densities at several resolutions."""
    tasks, keys = [], []
    for a in alphas:
        for rho0, rho1 in pairs:
            cfg = SolverConfig(alpha=a, p=base.p, mu=base.mu, tau=base.tau, tol=base.tol,
                               max_iters=base.max_iters)
            tasks.append((rho0, rho1, cfg))
            keys.append((a, rho0.grid.sizes[0]))
    sols = _map(_solve_task, tasks)
    table, solutions = {}, {}
    for (a, n), sol in zip(keys, sols):
        table.setdefault(a, {})[n] = norm_h2(sol.eta)
        solutions[(a, n)] = sol
    return table, solutions


def cmd_mesh_study(args) -> int:
    opts = resolve_options(args)
    alphas = _float_list(args.alphas) if args.alphas else DEFAULT_MESH_ALPHAS
    pairs, inputs = [], []
    if args.generator:
        sizes = _int_list(args.sizes) if args.sizes else [16, 32, 64]
        for n in sizes:
            pair, names = _load_pair(args, opts, N=n)
            pairs.append(pair)
            inputs += names
    else:
        rho0s = args.rho0_list or []
        rho1s = args.rho1_list or []
        if not rho0s or len(rho0s) != len(rho1s):
            raise CliError(EXIT_USAGE, "mesh-study needs --generator or matching "
                                       "--rho0-list/--rho1-list image lists")
        for f0, f1 in zip(rho0s, rho1s):
            args.rho0, args.rho1 = f0, f1
            pair, names = _load_pair(args, opts)
            pairs.append(pair)
            inputs += names
    sizes = [p[0].grid.sizes[0] for p in pairs]
    table, sols = mesh_study(pairs, alphas, _config(opts, alpha=1.0))
    run = Run("mesh-study", opts, {"alphas": alphas, "sizes": sizes,
                                   "generator": args.generator}, inputs)
    header = ["alpha"] + [f"N={n}" for n in sizes]
    rows = [[a] + [table[a][n] for n in sizes] for a in alphas]
    run.write_csv("mesh_study.csv", header, rows)
    run.write_records("mesh_study.jsonl", [
        {"alpha": a, "N": n, "eta_norm": table[a][n], "iters": sols[(a, n)].iters,
         "converged": sols[(a, n)].converged} for a in alphas for n in sizes])
    run.finish()
    print(" ".join(f"{h:>12}" for h in header))
    for row in rows:
        print(" ".join(f"{v:>12.4g}" for v in row))
    return EXIT_OK if all(s.converged for s in sols.values()) else EXIT_NONCONVERGENCE


def cmd_color_transfer(args) -> int:
    from buot.imaging import read_image, run_color_transfer, synthetic_image, write_netpbm

    opts = resolve_options(args)
    alphas = _float_list(args.alphas) if args.alphas else (
        [opts["alpha"]] if opts["alpha"] is not None else [0.05, 0.1, 0.2, 0.5])
    inputs = []
    images = {}
    for role, path in (("src", args.src), ("tgt", args.tgt)):
        if path is None:
            raise CliError(EXIT_USAGE, f"color-transfer needs --{role}")
        if path.startswith("synthetic:"):
            kind, _, seed = path[len("synthetic:"):].partition(":")
            try:
                images[role] = synthetic_image(kind, int(args.size), int(seed or 0))
            except ValueError as exc:
                raise CliError(EXIT_USAGE, str(exc)) from exc
        else:
            try:
                images[role] = read_image(path)
            except (OSError, ValueError) as exc:
                raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc
        if images[role].channels != 3:
            raise CliError(EXIT_VALIDATION, f"--{role} must be a color (3-channel) image")
        inputs.append(path)
    bins, eps, steps = int(args.bins), float(args.epsilon), int(args.steps)
    run = Run("color-transfer", opts, {"alphas": alphas, "bins": bins, "epsilon": eps,
                                       "steps": steps, "recolor": args.recolor}, inputs)
    hist_rows, diag_rows = [], []
    converged = True
    for a in alphas:
        cfg = SolverConfig(alpha=a, p=opts["p"], mu=opts["mu"], tau=opts["tau"],
                           tol=min(opts["tol"], 1e-9), max_iters=opts["max_iters"])
        res = run_color_transfer(images["src"], images["tgt"], a, cfg, bins=bins, epsilon=eps,
                                 steps=steps, recolor=args.recolor)
        name = f"transfer_alpha_{a:g}.ppm"
        path = run.out / name
        write_netpbm(path, res.image)
        run.files.append(name)
        for ch in ("a", "b"):
            h0, h1, h_out = res.histograms[ch]
            for i in range(bins):
                hist_rows.append((a, ch, i, h0.bins[i], h1.bins[i], h_out.bins[i]))
            before, after = res.w1[ch]
            sol = res.maps[ch].solution
            converged &= sol.converged
            diag_rows.append((a, ch, before, after, sol.objective, sol.iters))
    run.write_csv("histograms.csv", ["alpha", "channel", "bin", "moving", "reference", "output"],
                  hist_rows)
    run.write_csv("diagnostics.csv", ["alpha", "channel", "w1_before", "w1_after",
                                      "objective", "iters"], diag_rows)
    run.finish()
    for r in diag_rows:
        print(f"alpha={r[0]:<5g} channel={r[1]} W1 {r[2]:.4f} -> {r[3]:.4f}")
    return EXIT_OK if converged else EXIT_NONCONVERGENCE


def cmd_oracle_check(args) -> int:
    from buot.oracle import oracle_suite

    opts = resolve_options(args)
    dims = tuple(_int_list(args.dims)) if args.dims else (1, 2)
    alphas = tuple(_float_list(args.alphas)) if args.alphas else (0.2, 0.5, 2.0, math.inf)
    reports = oracle_suite(seed=opts["seed"], cases=int(args.cases), max_n=int(args.max_n),
                           dims=dims, alphas=alphas, mismatched=int(args.mismatched))
    lines = [r.line() for r in reports]
    failed = sum(not r.passed for r in reports)
    lines.append(f"{len(reports) - failed}/{len(reports)} passed")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out or opts["out"] != DEFAULTS["out"]:
        run = Run("oracle-check", opts, {"cases": int(args.cases), "max_n": int(args.max_n),
                                         "dims": list(dims), "alphas": list(alphas),
                                         "mismatched": int(args.mismatched)})
        run.write_bytes("oracle.txt", text.encode())
        run.finish()
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--alpha", type=_float_or_inf, default=None,
                        help="source weight (inf = balanced OT)")
    shared.add_argument("--p", type=int, choices=(1, 2), default=None, help="flux norm")
    shared.add_argument("--tol", type=float, default=None, help="gap tolerance (default 1e-6)")
    shared.add_argument("--max-iters", dest="max_iters", type=int, default=None,
                        help="iteration cap (default 300000)")
    shared.add_argument("--mu", type=float, default=None, help="primal step")
    shared.add_argument("--tau", type=float, default=None, help="dual step")
    shared.add_argument("--seed", type=int, default=None)
    shared.add_argument("--out", default=None, help="output directory (default ./buot-out)")
    shared.add_argument("--config", default=None, help="key = value config file")
    shared.add_argument("-v", "--verbose", action="store_true")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--rho0", help="initial density: grayscale PGM/PNG (normalized) or .npy")
    inputs.add_argument("--rho1", help="final density, same format as --rho0")
    inputs.add_argument("--generator", choices=sorted(GENERATORS), default=None)
    inputs.add_argument("--n", type=int, default=None, help="cells per axis for --generator")
    inputs.add_argument("--length", type=float, default=1.0, help="domain side length L")

    parser = argparse.ArgumentParser(prog="buot", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"buot {buot.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[shared, inputs], help="solve one OT/UOT problem")
    p.add_argument("--ot", action="store_true", help="balanced transport")
    p.add_argument("--dump-fields", action="store_true", help="write m/eta/phi as .npy")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep-alpha", parents=[shared, inputs],
                       help="eta_dif / m_dif against OT over a list of alphas")
    p.add_argument("--alphas", default=None, help="comma-separated alphas")
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("mesh-study", parents=[shared, inputs],
                       help="||eta*|| over alpha x resolution")
    p.add_argument("--alphas", default=None)
    p.add_argument("--sizes", default=None, help="cells per axis for --generator")
    p.add_argument("--rho0-list", dest="rho0_list", nargs="+", default=None)
    p.add_argument("--rho1-list", dest="rho1_list", nargs="+", default=None)
    p.set_defaults(func=cmd_mesh_study)

    p = sub.add_parser("color-transfer", parents=[shared],
                       help="partial color transfer between two PPM images")
    p.add_argument("--src", help="PPM/PNG, or synthetic:KIND[:SEED]")
    p.add_argument("--tgt", help="PPM/PNG, or synthetic:KIND[:SEED]")
    p.add_argument("--alphas", default=None, help="default 0.05,0.1,0.2,0.5")
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--steps", type=int, default=64, help="forward Euler steps")
    p.add_argument("--size", type=int, default=64, help="side of synthetic images")
    p.add_argument("--recolor", choices=("target", "source"), default="target")
    p.set_defaults(func=cmd_color_transfer)

    p = sub.add_parser("oracle-check", parents=[shared],
                       help="randomized PDHG vs exact LP comparison")
    p.add_argument("--cases", type=int, default=30)
    p.add_argument("--max-n", dest="max_n", type=int, default=16)
    p.add_argument("--dims", default=None, help="e.g. 1,2")
    p.add_argument("--alphas", default=None, help="default 0.2,0.5,2,inf")
    p.add_argument("--mismatched", type=int, default=5,
                   help="extra unbalanced cases with unequal masses")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    _ARGV[:] = argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except MassMismatchError as exc:
        print(f"error: mass mismatch: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
