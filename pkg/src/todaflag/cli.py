"""
``toda-flag``: build cells, run flows, verify invariants, export polytopes.

Every command reads flags, optionally layered over a JSON config file
(``--config``; flags win).  Output goes to ``--out`` or stdout.  Exit codes:
0 success, 1 an invariant failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import fktflow as fk
from .linalg import flag_minor, matrix_to_json
from .momentpoly import MomentMap, bruhat_interval_polytope, default_sample_plan
from .serialize import dumps_csv, dumps_json
from .symgroup import Permutation, ReducedWord, bruhat_leq, reduced_word_of
from .symtoda import SymmetricTodaFlow
from .tnncell import CellPoint, Spectrum, build_g, default_spectrum, random_params
from .validation import PRECISION_ENV, check_spectrum
from .verify import lax_residuals, run_suite

DEFAULTS = {
    "n": None,
    "v": None,
    "v_word": None,
    "w": None,
    "w_word": None,
    "params": "random:0",
    "spectrum": "default",
    "t_min": -10.0,
    "t_max": 10.0,
    "t_num": 21,
    "times": None,
    "tol": 1e-6,
    "precision": None,
    "kind": "fkt",
    "embedding": "moment",
    "out": None,
    "trajectory": None,
    "inject_fault": None,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    cell: CellPoint
    spectrum: Spectrum
    seed: int | None
    times: np.ndarray
    tol: float
    precision: str
    kind: str
    embedding: str
    out: str | None
    trajectory: str | None
    inject_fault: str | None


def _int_list(x) -> list[int]:
    if x is None:
        return None
    if isinstance(x, str):
        x = [a for a in x.replace(" ", ",").split(",") if a]
    return [int(a) for a in x]


def _perm(one_line, word, n) -> Permutation | None:
    if one_line is not None:
        return Permutation(_int_list(one_line))
    if word is not None:
        if n is None:
            raise ConfigError("--n is required when a permutation is given as a word")
        return Permutation.from_word(_int_list(word), n)
    return None


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, the JSON config file and explicit flags, then validate."""
    merged = dict(DEFAULTS)
    if ns.config:
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    for key in DEFAULTS:
        val = getattr(ns, key, None)
        if val is not None:
            merged[key] = val
    try:
        return _build_config(merged)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build_config(c: dict) -> RunConfig:
    n = int(c["n"]) if c["n"] is not None else None
    if c["w_word"] is not None:
        letters = _int_list(c["w_word"])
        if n is None:
            n = max(letters, default=0) + 1
        w_word = ReducedWord.from_letters(letters, n)
    elif c["w"] is not None:
        w_word = reduced_word_of(Permutation(_int_list(c["w"])))
    else:
        raise ConfigError("w is required (--w one-line or --w-word letters)")
    n = w_word.n
    v = _perm(c["v"], c["v_word"], n) or Permutation(range(1, n + 1))
    if v.n != n:
        raise ConfigError("v and w have different sizes")
    if not bruhat_leq(v, w_word.target):
        raise ConfigError(f"v={list(v)} is not below w={list(w_word.target)} in Bruhat order")
    m = w_word.target.length() - v.length()
    params, seed = c["params"], None
    if isinstance(params, str) and params.startswith("random"):
        _, _, s = params.partition(":")
        seed = int(s) if s else 0
        params = random_params(np.random.default_rng(seed), m)
    elif isinstance(params, str):
        params = [Fraction(a) for a in params.replace(" ", ",").split(",") if a]
    else:
        params = [Fraction(str(a)) for a in params]
    cell = CellPoint(v, w_word, tuple(params))
    spec = c["spectrum"]
    if spec in (None, "default"):
        spectrum = default_spectrum(n)
    else:
        if isinstance(spec, str):
            spec = [a for a in spec.replace(" ", ",").split(",") if a]
        spectrum = check_spectrum([Fraction(a) if isinstance(a, str) else a for a in spec])
    if spectrum.n != n:
        raise ConfigError(f"spectrum has {spectrum.n} values, expected {n}")
    if c["times"] is not None:
        raw = c["times"]
        if isinstance(raw, str):
            raw = [a for a in raw.replace(" ", ",").split(",") if a]
        times = np.array([float(a) for a in raw])
    else:
        num = int(c["t_num"])
        if num < 1:
            raise ConfigError("empty time grid (t_num must be at least 1)")
        times = np.linspace(float(c["t_min"]), float(c["t_max"]), num)
    if times.size == 0:
        raise ConfigError("empty time grid")
    if not np.all(np.isfinite(times)):
        raise ConfigError("times must be finite")
    precision = c["precision"] or os.environ.get(PRECISION_ENV, "double")
    if precision not in ("double", "extended"):
        raise ConfigError(f"precision must be double or extended, got {precision!r}")
    if c["kind"] not in ("fkt", "sym", "both"):
        raise ConfigError(f"kind must be fkt, sym or both, got {c['kind']!r}")
    if c["embedding"] not in ("moment", "appendix"):
        raise ConfigError(f"embedding must be moment or appendix, got {c['embedding']!r}")
    if c["inject_fault"] not in (None, "sign-flip"):
        raise ConfigError(f"unknown fault {c['inject_fault']!r}")
    return RunConfig(
        cell, spectrum, seed, times, float(c["tol"]), precision, c["kind"],
        c["embedding"], c["out"], c["trajectory"], c["inject_fault"],
    )


def _header(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "seed": cfg.seed,
        "cell": cfg.cell.to_json(),
        "w": list(cfg.cell.w),
        "spectrum": cfg.spectrum.to_json(),
        "precision": cfg.precision,
    }


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_cell(cfg: RunConfig) -> int:
    g = build_g(cfg.cell)
    n = cfg.cell.n
    import itertools

    pos = zero = neg = 0
    for k in range(1, n + 1):
        for I in itertools.combinations(range(1, n + 1), k):
            d = flag_minor(g, I, k)
            pos, zero, neg = pos + (d > 0), zero + (d == 0), neg + (d < 0)
    sub = cfg.cell.subexpr
    out = {
        **_header(cfg, "cell"),
        "pds": {
            "mask": sub.pretty(),
            "Jplus": sorted(sub.Jplus),
            "Jcirc": sorted(sub.Jcirc),
            "Jbullet": sorted(sub.Jbullet),
        },
        "g": matrix_to_json(g),
        "flag_minors": {"positive": pos, "zero": zero, "negative": neg, "nonnegative": neg == 0},
    }
    _emit(dumps_json(out), cfg.out)
    return 0 if neg == 0 else 1


def _fkt_columns(n: int, prefix: str = "") -> list[str]:
    cols = [f"{prefix}a_{k}_{k}" for k in range(1, n + 1)] + [f"{prefix}lower_norm"]
    return cols + [f"{prefix}log_tau_{k}" for k in range(1, n)]


def cmd_flow(cfg: RunConfig) -> int:
    g = build_g(cfg.cell)
    n = cfg.cell.n
    header = [f"t_{m}" for m in range(1, n)]
    flows = []
    if cfg.kind in ("fkt", "both"):
        flows.append(("", fk.KostantTodaFlow(spectrum=cfg.spectrum, precision=cfg.precision).fit(g)))
        header += _fkt_columns(n) + ["lax_residual"]
    if cfg.kind in ("sym", "both"):
        flows.append(("sym_", SymmetricTodaFlow(spectrum=cfg.spectrum, precision=cfg.precision).fit(g)))
        header += _fkt_columns(n, "sym_")
    rows, ok = [], True
    for t1 in cfg.times:
        t = np.zeros(n - 1)
        t[0] = t1
        row = list(t.astype(float))
        for prefix, f in flows:
            L = f.lax(t).astype(float)
            taus = f.log_tau(t)[: n - 1]
            ok &= bool(np.all(np.isfinite(taus)))
            row += list(np.diag(L)) + [fk.strict_lower_norm(L)] + list(taus)
            if not prefix:
                row.append(lax_residuals(f, t, hs=(1e-4,))[0])
        rows.append([float(x) for x in row])
    rep = fk.asymptotic_check(g, cfg.spectrum, tol=cfg.tol)
    ok &= rep.passed
    comments = [f"toda-flag flow schema_version=1 seed={cfg.seed} precision={cfg.precision}",
                f"cell={json.dumps(cfg.cell.to_json())} spectrum={json.dumps(cfg.spectrum.to_json())}"]
    trailer = "# asymptotic " + json.dumps(rep.to_json()) + "\n"
    _emit(dumps_csv(header, rows, comments) + trailer, cfg.out)
    return 0 if ok else 1


def cmd_verify(cfg: RunConfig) -> int:
    g = build_g(cfg.cell)
    if cfg.inject_fault == "sign-flip":
        # negate the row carrying the leading coordinate Delta_{v(1)}
        g = g.copy()
        r = cfg.cell.v(1) - 1
        g[r, :] = -g[r, :]
    report = run_suite(cfg.cell, cfg.spectrum, cfg.times, tol=cfg.tol, g=g)
    out = {**_header(cfg, "verify"), "injected_fault": cfg.inject_fault, **report.to_json()}
    _emit(dumps_json(out), cfg.out)
    return 0 if report.passed else 1


def cmd_polytope(cfg: RunConfig) -> int:
    g = build_g(cfg.cell)
    v, w = cfg.cell.v, cfg.cell.w
    P = bruhat_interval_polytope(v, w, cfg.embedding)
    mm = MomentMap(spectrum=cfg.spectrum).fit(g)
    S = mm.polytope()
    Pm = P if cfg.embedding == "moment" else bruhat_interval_polytope(v, w, "moment")
    ok = S.same_as(Pm)
    out = {
        **_header(cfg, "polytope"),
        "polytope": P.to_json(),
        "n_vertices": len(P.vertices),
        "n_edges": len(P.edges),
        "minkowski_matches": ok,
    }
    _emit(dumps_json(out), cfg.out)
    if cfg.trajectory:
        n = cfg.cell.n
        header = [f"t_{m}" for m in range(1, n)] + [f"phi_{i}" for i in range(1, n + 1)]
        rows = []
        for t1 in cfg.times:
            t = np.zeros(n - 1)
            t[0] = t1
            rows.append([float(x) for x in t] + [float(x) for x in mm.point(t)])
        plan = default_sample_plan(cfg.spectrum, v, w)
        for z in plan["interval"]:
            c = fk.direction_to_fixed_point(z, cfg.spectrum)
            for s in plan["ray_scales"]:
                rows.append([float(x) for x in s * c] + [float(x) for x in mm.point(s * c)])
        comments = [f"toda-flag polytope trajectory schema_version=1 seed={cfg.seed}"]
        with open(cfg.trajectory, "w", newline="") as fh:
            fh.write(dumps_csv(header, rows, comments))
    return 0 if ok else 1


COMMANDS = {"cell": cmd_cell, "flow": cmd_flow, "verify": cmd_verify, "polytope": cmd_polytope}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with any of the options below")
    common.add_argument("--n", type=int)
    common.add_argument("--v", help="v in one-line notation, e.g. 1,3,5,2,4")
    common.add_argument("--v-word", dest="v_word", help="v as a word in simple reflections")
    common.add_argument("--w", help="w in one-line notation (a reduced word is chosen)")
    common.add_argument("--w-word", dest="w_word", help="reduced word for w, e.g. 2,3,1,4,3,2")
    common.add_argument("--params", help="comma separated positive rationals or random:SEED")
    common.add_argument("--spectrum", help="'default' or comma separated eigenvalues")
    common.add_argument("--t-min", dest="t_min", type=float)
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--t-num", dest="t_num", type=int)
    common.add_argument("--times", help="explicit comma separated t_1 values")
    common.add_argument("--tol", type=float)
    common.add_argument("--precision", choices=["double", "extended"],
                        help=f"float precision (default from ${PRECISION_ENV} or double)")
    common.add_argument("--out", help="output path (default stdout)")
    parser = argparse.ArgumentParser(prog="toda-flag", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("cell", parents=[common], help="build g and report its PDS and minors")
    p = sub.add_parser("flow", parents=[common], help="sample the flow on a t_1 grid (CSV)")
    p.add_argument("--kind", choices=["fkt", "sym", "both"])
    p = sub.add_parser("verify", parents=[common], help="run all invariant checks (JSON)")
    p.add_argument("--inject-fault", dest="inject_fault", choices=["sign-flip"],
                   help="corrupt g to exercise the failure path")
    p = sub.add_parser("polytope", parents=[common], help="interval polytope JSON and moment trajectory")
    p.add_argument("--embedding", choices=["moment", "appendix"])
    p.add_argument("--trajectory", help="CSV path for moment-map samples")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
    except ConfigError as exc:
        print(f"toda-flag: error: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[ns.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
