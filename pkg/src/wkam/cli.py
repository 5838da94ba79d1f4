"""Command-line front end.

Usage::

    wkam [global flags] <command> [command flags]

Commands are ``solve``, ``alpha``, ``aubry``, ``peierls``, ``commute-check``,
``regularize`` and ``cache {inspect,clear}``.  A run is fully described by a
config file (sections of ``key = value`` lines) plus the global flags, which
override the ``[run]`` section.  Unknown sections or keys are rejected
before any computation starts.

Exit codes: 0 success, 2 invalid configuration, 3 solver non-convergence,
4 commute-check verdicts differing from the declared expectations.  Every
failure prints one line ``wkam: exit=<code> reason=<text>`` on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .commute import DEFAULT_LADDER, PairTolerances, THEOREMS, run_pair_suite
from .io import KernelCache, atomic_write, write_csv, write_grid, write_mask
from .kernel import build_kernel, set_threads
from .model import NonTonelliError, TorusGrid, torus_distance
from .registry import RegistryError, build_model
from .regularize import (NotSubsolutionError, RegularizationSchedule, lasry_lions,
                         smoothness_profile)
from .structures import (aubry_from_pairs, aubry_from_peierls, compare_flats,
                         hausdorff_nodes, mather_alpha, peierls_barrier)
from .transform import MomentumWindowError, legendre
from .weakkam import (KARP_MAX_NODES, check_subsolution, critical_value_karp, pair_solutions,
                      project_subsolution, solve_weak_kam)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERDICT = 0, 2, 3, 4
PROFILES = ("solve", "alpha", "aubry", "peierls", "commute-check", "regularize")


class CliError(Exception):
    def __init__(self, code: int, reason: str):
        super().__init__(reason)
        self.code = code
        self.reason = reason


# ------------------------------------------------------------------ config


def _int(v):
    return int(v)


def _pos_int(v):
    i = int(v)
    if i < 1:
        raise ValueError("must be positive")
    return i


def _pos_float(v):
    f = float(v)
    if not f > 0 or not np.isfinite(f):
        raise ValueError("must be positive")
    return f


def _choice(*opts):
    def conv(v):
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return v
    return conv


def _ladder(v):
    out = []
    for item in v.split(","):
        n, _, t = item.strip().partition(":")
        out.append((_pos_int(n), _pos_float(t)))
    return tuple(out)


def _floats(v):
    return tuple(float(s) for s in v.split(","))


SCHEMA = {
    "run": {"profile": _choice(*PROFILES), "n": _pos_int, "tau": _pos_float,
            "tol": _pos_float, "max_iter": _pos_int, "n_p": _pos_int, "n_v": _pos_int,
            "out": str, "cache": str, "threads": _int, "format": _choice("csv", "bin")},
    "model": {"name": str, "partner": str},
    "tolerances": {"tol_flat": _pos_float, "eps_aubry": _pos_float, "kernel": _pos_float,
                   "cross": _pos_float, "repair": _pos_float, "peierls": _pos_float,
                   "aubry_nodes": _pos_float},
    "ladder": {"levels": _ladder, "horizon": _pos_float},
    "alpha": {"c_min": float, "c_max": float, "c_count": _pos_int, "direction": _floats,
              "flat_level": _int},
    "regularize": {"rounds": _pos_int, "first": _pos_int, "seed": _choice("zero", "uminus"),
                   "admit_tol": _pos_float},
    "aubry": {"cones": _int},
}
PAIR_KEYS = {"g": str, "h": str, "expect": str}

DEFAULTS = {
    "run": {"n": 128, "tau": 0.05, "tol": 1e-10, "max_iter": 200000, "n_p": 513, "n_v": 513,
            "out": "wkam-out", "cache": None, "threads": 1, "format": "bin", "profile": None},
    "model": {"name": "pendulum(1)", "partner": None},
    "tolerances": {},
    "ladder": {"levels": DEFAULT_LADDER, "horizon": None},
    "alpha": {"c_min": -2.0, "c_max": 2.0, "c_count": 33, "direction": None, "flat_level": 0},
    "regularize": {"rounds": 5, "first": 10, "seed": "zero", "admit_tol": 1e-9},
    "aubry": {"cones": 4},
}

DEFAULT_PAIRS = (
    ("identical", "pendulum(1)", "pendulum(1)", "pass"),
    ("composed", "pendulum(1)", "composed(pendulum(1),quad(1))", "pass"),
    ("control", "pendulum(1)", "pendulum(1,2)", "commutation=fail"),
)


@dataclass
class PairSpec:
    name: str
    G: str
    H: str
    expect: dict


@dataclass
class RunConfig:
    values: dict
    pairs: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def get(self, section, key):
        return self.values[section][key]


def _parse_expect(text: str) -> dict:
    text = text.strip()
    if text == "pass":
        return {k: "pass" for k in THEOREMS if k != "flats"}
    if text == "fail":
        return {"commutation": "fail"}
    out = {}
    for item in text.split(","):
        k, _, v = item.strip().partition("=")
        if k not in THEOREMS or v not in ("pass", "fail", "inconclusive"):
            raise ValueError(f"bad expectation {item!r}")
        out[k] = v
    return out


def load_config(path) -> RunConfig:
    values = {s: dict(d) for s, d in DEFAULTS.items()}
    pairs = []
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise CliError(EXIT_CONFIG, "config: not found")
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            cp.read_string(p.read_text(), source=str(p))
        except configparser.Error as exc:
            raise CliError(EXIT_CONFIG, f"config: parse error ({exc.__class__.__name__})")
        for sec in cp.sections():
            if sec.startswith("pair "):
                name = sec[5:].strip()
                keys = dict(cp[sec])
                bad = set(keys) - set(PAIR_KEYS)
                if bad:
                    raise CliError(EXIT_CONFIG, f"config: unknown key {sec}.{sorted(bad)[0]}")
                if "g" not in keys or "h" not in keys:
                    raise CliError(EXIT_CONFIG, f"config: {sec} needs G and H")
                try:
                    expect = _parse_expect(keys.get("expect", "pass"))
                except ValueError as exc:
                    raise CliError(EXIT_CONFIG, f"config: {sec}.expect {exc}")
                pairs.append(PairSpec(name, keys["g"], keys["h"], expect))
                continue
            if sec not in SCHEMA:
                raise CliError(EXIT_CONFIG, f"config: unknown section {sec}")
            for key, raw in cp[sec].items():
                conv = SCHEMA[sec].get(key)
                if conv is None:
                    raise CliError(EXIT_CONFIG, f"config: unknown key {sec}.{key}")
                try:
                    values[sec][key] = conv(raw.strip())
                except ValueError as exc:
                    raise CliError(EXIT_CONFIG, f"config: bad value {sec}.{key} ({exc})")
    return RunConfig(values, pairs)


def _apply_flags(cfg: RunConfig, args) -> None:
    run = cfg.values["run"]
    for flag, key in (("grid", "n"), ("tau", "tau"), ("tol", "tol"), ("threads", "threads"),
                      ("out", "out"), ("format", "format")):
        v = getattr(args, flag, None)
        if v is not None:
            run[key] = v
    if getattr(args, "no_cache", False):
        run["cache"] = False
    prof = run.get("profile")
    if prof is not None and prof != args.command:
        raise CliError(EXIT_CONFIG, f"config: profile {prof} does not match command {args.command}")


def _model(spec: str):
    try:
        return build_model(spec)
    except (RegistryError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"model: {exc}")


# ---------------------------------------------------------------- helpers


class _Kernels:
    """Kernel factory backed by the optional on-disk cache."""

    def __init__(self, cfg: RunConfig):
        run = cfg.values["run"]
        self.n_p, self.n_v = run["n_p"], run["n_v"]
        self.cache = None if run["cache"] is False else KernelCache(run["cache"])
        self.tables = {}

    def table(self, model, grid):
        k = (model.label, grid.shape, tuple(model.p_center))
        if k not in self.tables:
            self.tables[k] = legendre(model, grid, self.n_p, self.n_v)
        return self.tables[k]

    def get(self, model, grid, tau, direction="negative"):
        key = None
        if self.cache is not None:
            key = KernelCache.key(model.label, grid, tau, model.p_window, model.v_window,
                                  direction, n_p=self.n_p, n_v=self.n_v,
                                  p_center=tuple(model.p_center.tolist()))
            K = self.cache.load(key)
            if K is not None:
                return K
        K = build_kernel(self.table(model, grid), tau, direction)
        if self.cache is not None:
            self.cache.store(key, K)
        return K


def _write_field(out: Path, name: str, u, grid: TorusGrid, fmt: str, label: str,
                 alpha: float = float("nan"), anchor: int = 0):
    if fmt == "bin":
        write_grid(u, out / f"{name}.bin", grid.spacing, label, alpha, anchor)
    else:
        x = grid.coords().reshape(-1, grid.dim)
        header = [f"x{i + 1}" for i in range(grid.dim)] if grid.dim > 1 else ["x"]
        rows = [list(xi) + [v] for xi, v in zip(x, np.asarray(u).reshape(-1))]
        write_csv(out / f"{name}.csv", header + [name], rows)


def _write_summary(out: Path, items: dict, name: str = "summary.txt"):
    lines = []
    for k, v in items.items():
        if isinstance(v, (float, np.floating)):
            v = repr(float(v))
        lines.append(f"{k}={v}")
    atomic_write(out / name, ("\n".join(lines) + "\n").encode())


def _history_csv(out: Path, name: str, res):
    write_csv(out / name, ["iteration", "shift", "sup_defect"],
              [(h[0], h[1], h[2]) for h in res.history])


def _grid(cfg, model):
    return TorusGrid.regular(cfg.get("run", "n"), model.dim)


# ---------------------------------------------------------------- commands


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    run = cfg.values["run"]
    model = _model(cfg.get("model", "name"))
    grid = _grid(cfg, model)
    kf = _Kernels(cfg)
    Km = kf.get(model, grid, run["tau"])
    Kp = kf.get(model, grid, run["tau"], "positive")
    zero = np.zeros(grid.shape)
    um = solve_weak_kam(Km, zero, run["tol"], run["max_iter"])
    up = solve_weak_kam(Kp, zero, run["tol"], run["max_iter"])
    fmt = run["format"]
    _write_field(out, "u_minus", um.u, grid, fmt, model.label, um.alpha, um.anchor)
    _write_field(out, "u_plus", up.u, grid, fmt, model.label, up.alpha, up.anchor)
    _history_csv(out, "history_minus.csv", um)
    _history_csv(out, "history_plus.csv", up)
    summary = {"command": "solve", "model": model.label, "n": grid.shape[0], "dim": grid.dim,
               "tau": run["tau"], "alpha": um.alpha, "alpha_plus": up.alpha,
               "iterations": um.iterations, "residual": um.residual,
               "converged": um.converged and up.converged}
    if grid.size <= KARP_MAX_NODES:
        summary["alpha_karp"] = critical_value_karp(Km)
    _write_summary(out, summary)
    if not (um.converged and up.converged):
        raise CliError(EXIT_SOLVER, f"solver: not converged after {run['max_iter']} iterations")
    return EXIT_OK


def _c_nodes(cfg, dim):
    a = cfg.values["alpha"]
    t = np.linspace(a["c_min"], a["c_max"], a["c_count"])
    if dim == 1:
        return t
    d = np.asarray(a["direction"] or (1.0, 0.0), dtype=float)
    if d.shape != (dim,) or not np.linalg.norm(d) > 0:
        raise CliError(EXIT_CONFIG, "config: alpha.direction must have one entry per axis")
    return t[:, None] * (d / np.linalg.norm(d))[None, :]


def cmd_alpha(cfg: RunConfig, out: Path) -> int:
    run = cfg.values["run"]
    model = _model(cfg.get("model", "name"))
    grid = _grid(cfg, model)
    c = _c_nodes(cfg, model.dim)
    tf = cfg.values["tolerances"].get("tol_flat")
    A = mather_alpha(model, c, grid, run["tau"], run["n_p"], run["n_v"], tol_flat=tf)
    cols = ["c"] if model.dim == 1 else [f"c{i + 1}" for i in range(model.dim)]
    write_csv(out / "alpha.csv", cols + ["alpha"],
              [list(ci) + [a] for ci, a in zip(A.c_nodes, A.alpha)])
    summary = {"command": "alpha", "model": model.label, "n": grid.shape[0], "tau": run["tau"],
               "tol_flat": A.tol_flat, "flats": len(A.flats), "missing": len(A.errors)}
    for i, f in enumerate(A.flats):
        lo, hi = A.flat_extent(f)
        summary[f"flat{i}.lo"] = lo
        summary[f"flat{i}.hi"] = hi
        summary[f"flat{i}.alpha"] = float(np.mean(A.alpha[f]))
    partner = cfg.get("model", "partner")
    if partner:
        B = mather_alpha(_model(partner), c, grid, run["tau"], run["n_p"], run["n_v"])
        rep = compare_flats(A, B)
        summary["partner"] = B.label
        summary["compare.passed"] = rep.passed
        summary["compare.defects"] = ",".join(f"{d:.6g}" for d in rep.defects)
    _write_summary(out, summary)
    return EXIT_OK


def cmd_peierls(cfg: RunConfig, out: Path) -> int:
    run = cfg.values["run"]
    model = _model(cfg.get("model", "name"))
    grid = _grid(cfg, model)
    K = _Kernels(cfg).get(model, grid, run["tau"])
    res = solve_weak_kam(K, np.zeros(grid.shape), run["tol"], run["max_iter"])
    alpha = critical_value_karp(K) if grid.size <= KARP_MAX_NODES else res.alpha
    B = peierls_barrier(K, alpha, max(run["tol"], 1e-12))
    if run["format"] == "bin":
        write_grid(B.h, out / "barrier.bin", label=model.label, alpha=alpha)
    else:
        n = grid.size
        write_csv(out / "barrier.csv", ["x", "y", "h"],
                  [(i, j, B.h[i, j]) for i in range(n) for j in range(n)])
    _write_field(out, "barrier_diagonal", B.diagonal, grid, "csv", model.label, alpha)
    _write_summary(out, {"command": "peierls", "model": model.label, "n": grid.shape[0],
                         "tau": run["tau"], "alpha": alpha, "horizon": B.horizon,
                         "converged": B.converged,
                         "min_diagonal": float(B.diagonal.min())})
    if not B.converged:
        raise CliError(EXIT_SOLVER, "peierls: not converged by k_max")
    return EXIT_OK


def cmd_aubry(cfg: RunConfig, out: Path) -> int:
    run = cfg.values["run"]
    model = _model(cfg.get("model", "name"))
    grid = _grid(cfg, model)
    kf = _Kernels(cfg)
    Km = kf.get(model, grid, run["tau"])
    Kp = kf.get(model, grid, run["tau"], "positive")
    res = solve_weak_kam(Km, np.zeros(grid.shape), run["tol"], run["max_iter"])
    alpha = critical_value_karp(Km) if grid.size <= KARP_MAX_NODES else res.alpha
    B = peierls_barrier(Km, alpha, max(run["tol"], 1e-12))
    eps = cfg.values["tolerances"].get("eps_aubry")
    try:
        A1 = aubry_from_peierls(B, eps)
    except ValueError as exc:
        raise CliError(EXIT_SOLVER, f"aubry: {exc}")
    seeds = [("zero", np.zeros(grid.shape))]
    cone_nodes = np.linspace(0, grid.size, cfg.get("aubry", "cones"), endpoint=False).astype(int)
    coords = grid.coords().reshape(-1, grid.dim)
    for j in cone_nodes:
        cone = torus_distance(grid, coords[j])
        seeds.append((f"cone{j}", project_subsolution(cone, Km, alpha)))
    pairs = [pair_solutions(Km, Kp, s, run["tol"], run["max_iter"], name, alpha)
             for name, s in seeds]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        A2 = aubry_from_pairs(pairs, eps if eps is not None else A1.epsilon)
    write_mask(out / "aubry_peierls.txt", A1.mask)
    write_mask(out / "aubry_pairs.txt", A2.mask)
    write_mask(out / "mane_pairs_approx.txt", A2.union)
    _write_summary(out, {"command": "aubry", "model": model.label, "n": grid.shape[0],
                         "tau": run["tau"], "alpha": alpha, "eps": A1.epsilon,
                         "peierls_nodes": ",".join(map(str, A1.nodes)),
                         "pairs_nodes": ",".join(map(str, A2.nodes)),
                         "pairs_approximation": A2.approximation,
                         "hausdorff_nodes": hausdorff_nodes(A1.mask, A2.mask),
                         "pairs_consistent": all(p.consistent for p in pairs)})
    if A2.flagged:
        raise CliError(EXIT_SOLVER, "aubry: empty pair intersection")
    return EXIT_OK


def cmd_regularize(cfg: RunConfig, out: Path) -> int:
    run = cfg.values["run"]
    reg = cfg.values["regularize"]
    model = _model(cfg.get("model", "name"))
    grid = _grid(cfg, model)
    kf = _Kernels(cfg)
    Km = kf.get(model, grid, run["tau"])
    res = solve_weak_kam(Km, np.zeros(grid.shape), run["tol"], run["max_iter"])
    alpha = res.alpha
    others = []
    partner = cfg.get("model", "partner")
    if partner:
        P = _model(partner)
        KH = kf.get(P, grid, run["tau"])
        aH = solve_weak_kam(KH, np.zeros(grid.shape), run["tol"], run["max_iter"]).alpha
        others.append((KH, aH))
    seed = np.zeros(grid.shape) if reg["seed"] == "zero" else res.u
    schedule = RegularizationSchedule.geometric(reg["rounds"], reg["first"])
    Kp = kf.get(model, grid, run["tau"], "positive")
    try:
        u = lasry_lions(seed, Km, Kp, alpha, schedule, [(Km, alpha)] + others, reg["admit_tol"])
    except NotSubsolutionError as exc:
        raise CliError(EXIT_CONFIG, f"regularize: {exc}")
    _write_field(out, "u_regularized", u, grid, run["format"], model.label, alpha)
    before = smoothness_profile(seed)
    after = smoothness_profile(u)
    write_csv(out / "smoothness.csv", ["stage", "lip", "semi_cc", "semi_cv"],
              [("before",) + before, ("after",) + after])
    summary = {"command": "regularize", "model": model.label, "n": grid.shape[0],
               "tau": run["tau"], "alpha": alpha, "schedule": ",".join(map(str, schedule.steps)),
               "violation_in": check_subsolution(seed, Km, alpha),
               "violation_out": check_subsolution(u, Km, alpha),
               "distance_to_seed": float(np.abs(u - seed).max())}
    for i, (KH, aH) in enumerate(others):
        summary[f"partner{i}.violation_in"] = check_subsolution(seed, KH, aH)
        summary[f"partner{i}.violation_out"] = check_subsolution(u, KH, aH)
    _write_summary(out, summary)
    return EXIT_OK


def cmd_commute(cfg: RunConfig, out: Path) -> int:
    run = cfg.values["run"]
    pairs = list(cfg.pairs) or [PairSpec(n, g, h, _parse_expect(e)) for n, g, h, e in DEFAULT_PAIRS]
    if not any(p.expect.get("commutation") == "fail" for p in pairs):
        n, g, h, e = DEFAULT_PAIRS[-1]
        pairs.append(PairSpec(n, g, h, _parse_expect(e)))
        cfg.notes.append("negative control added")
    tol_kw = {k: v for k, v in cfg.values["tolerances"].items()
              if k in ("kernel", "cross", "repair", "peierls", "aubry_nodes", "tol_flat")}
    tol = PairTolerances(solver=run["tol"], solver_floor=max(10 * run["tol"], 1e-9),
                         max_iter=run["max_iter"], **tol_kw)
    lad = cfg.get("ladder", "levels")
    models = [(p, _model(p.G), _model(p.H)) for p in pairs]
    mismatches = []
    summary = {"command": "commute-check", "pairs": ",".join(p.name for p in pairs)}
    for note in cfg.notes:
        summary.setdefault("notes", note)
    for spec, G, H in models:
        if G.dim != H.dim:
            raise CliError(EXIT_CONFIG, f"config: pair {spec.name} mixes dimensions")
        c = _c_nodes(cfg, G.dim)
        try:
            rep = run_pair_suite(G, H, lad, tol, cfg.get("ladder", "horizon"), c,
                                 cfg.get("alpha", "flat_level"), run["n_p"], run["n_v"])
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, f"commute-check: {spec.name}: {exc}")
        atomic_write(out / f"report_{spec.name}.txt", (rep.text() + "\n").encode())
        atomic_write(out / f"summary_{spec.name}.txt",
                     ("\n".join(rep.summary_lines()) + "\n").encode())
        for k, want in spec.expect.items():
            got = rep.verdicts[k]
            summary[f"{spec.name}.{k}"] = f"{got} (expected {want})"
            if got != want:
                mismatches.append(f"{spec.name}.{k}={got}")
    summary["mismatches"] = len(mismatches)
    _write_summary(out, summary)
    if mismatches:
        raise CliError(EXIT_VERDICT, "commute-check: verdict mismatch " + ",".join(mismatches))
    return EXIT_OK


def cmd_cache(cfg: RunConfig, out: Path, action: str) -> int:
    root = cfg.get("run", "cache")
    cache = KernelCache(None if root in (None, False) else root)
    if action == "clear":
        print(f"removed={cache.clear()}")
        return EXIT_OK
    entries = cache.entries()
    print(f"root={cache.root}")
    print(f"entries={len(entries)}")
    for e in entries:
        print(f"{e['key'][:16]} label={e.get('label')} grid={e.get('grid')} tau={e.get('tau')} "
              f"band={e.get('band')} direction={e.get('direction')} bytes={e['bytes']}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "alpha": cmd_alpha, "aubry": cmd_aubry, "peierls": cmd_peierls,
            "commute-check": cmd_commute, "regularize": cmd_regularize}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS)
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS)
    common.add_argument("--grid", metavar="N", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tau", metavar="T", type=float, default=argparse.SUPPRESS)
    common.add_argument("--tol", metavar="X", type=float, default=argparse.SUPPRESS)
    common.add_argument("--threads", metavar="K", type=int, default=argparse.SUPPRESS,
                        help="worker threads, 0 = one per CPU")
    common.add_argument("--no-cache", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "bin"), default=argparse.SUPPRESS)
    p = argparse.ArgumentParser(prog="wkam", parents=[common],
                                description="Discrete weak KAM toolkit on the flat torus.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    c = sub.add_parser("cache", parents=[common])
    c.add_argument("action", choices=("inspect", "clear"))
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            print("wkam: exit=2 reason=usage: bad arguments", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    try:
        cfg = load_config(getattr(args, "config", None))
        _apply_flags(cfg, args)
        if len(cfg.get("ladder", "levels")) < 3:
            raise CliError(EXIT_CONFIG, "config: ladder needs at least 3 levels")
        set_threads(cfg.get("run", "threads"))
        if args.command == "cache":
            return cmd_cache(cfg, None, args.action)
        out = Path(cfg.get("run", "out"))
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return COMMANDS[args.command](cfg, out)
    except CliError as exc:
        print(f"wkam: exit={exc.code} reason={exc.reason}", file=sys.stderr)
        return exc.code
    except (MomentumWindowError, NonTonelliError, RegistryError) as exc:
        print(f"wkam: exit=2 reason=model: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
