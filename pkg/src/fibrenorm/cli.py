"""Command-line front end.

Every command produces a table plus a metadata block and writes it as CSV or
JSON.  Parameters come from flags, then a ``key=value`` config file, then
defaults; the resolved parameters are hashed into the metadata.  Worker count
and output location never affect the bytes written.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .fibword import (
    bispecial_lengths,
    complexity,
    cylinder_interval,
    factors,
    is_factor_exact,
    is_factor_fast,
    rho_prefix,
    special_words,
    substitute,
)
from .golden import GoldenRational, fib, mod1
from .metric import (
    KTail,
    PeriodicTail,
    Point,
    RhoTail,
    check_H_preserves_closest,
    check_no_accident,
    coincidence_length,
)
from .renorm import (
    Constant,
    Potential,
    TildeDensity,
    convergence_experiment,
    fixed_point_check_exact,
    integrate_density,
    iterate_R_closed,
    iterate_R_direct,
    mu_K_cylinder,
)
from .thermo import (
    DEFAULT_BETAC_TOL,
    DEFAULT_L,
    DEFAULT_TOL,
    MARKER,
    beta_c,
    enumerate_returns,
    pressure_curve,
)

log = logging.getLogger("fibrenorm")

ENV_OUTPUT_DIR = "FIBRENORM_OUTPUT_DIR"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_TRUNCATED = 3

# parameters that must not change the output bytes
_NOT_HASHED = {"threads", "output", "verbose", "strict", "config"}

_COMMON = {"format": None, "seed": 0, "threads": 1, "output": None}
DEFAULTS = {
    "words": {"n": 10},
    "selftest": {},
    "renorm": {"alpha": 1.0, "density": "tilde", "density_value": 1.0,
               "point": "0110|rho", "k_max": 18},
    "pressure": {"betas": "0,1,2,3,4,5", "L": DEFAULT_L, "tol": DEFAULT_TOL},
    "betac": {"L": DEFAULT_L, "tol": DEFAULT_BETAC_TOL},
}
_DEFAULT_FORMAT = {"betac": "json"}


class UsageError(Exception):
    pass


@dataclass
class Result:
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)
    payload: Optional[dict] = None  # JSON body replacing the table, if set
    truncated: bool = False
    exit_code: int = EXIT_OK


# -- parsing helpers ----------------------------------------------------------

def _positive_int(text) -> int:
    v = int(text)
    if v < 0:
        raise ValueError(f"expected a non-negative integer, got {text}")
    return v


def _float_list(text) -> list[float]:
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad beta list {text!r}") from exc
    if not vals:
        raise UsageError("beta list is empty")
    if any(b2 < b1 for b1, b2 in zip(vals, vals[1:])):
        raise UsageError("beta grid must be sorted")
    if vals[0] < 0 or not all(math.isfinite(v) for v in vals):
        raise UsageError("betas must be finite and non-negative")
    return vals


def parse_point(spec: str) -> Point:
    """``PREFIX|rho``, ``PREFIX|per:P`` or ``PREFIX|k:A,B`` (circle coordinate A + B*gamma)."""
    prefix, sep, tail = spec.partition("|")
    if not sep:
        raise UsageError(f"point {spec!r} needs a tail after '|'")
    try:
        if tail == "rho":
            return Point(prefix, RhoTail())
        if tail.startswith("per:"):
            return Point(prefix, PeriodicTail(tail[4:]))
        if tail.startswith("k:"):
            a, b = tail[2:].split(",")
            return Point(prefix, KTail(mod1(GoldenRational(Fraction(a), Fraction(b)))))
    except ValueError as exc:
        raise UsageError(f"bad point {spec!r}: {exc}") from exc
    raise UsageError(f"unknown tail {tail!r}")


def read_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            out[key.strip()] = value.strip()
    return out


_TYPES: dict[str, Callable[[Any], Any]] = {
    "n": _positive_int,
    "alpha": float,
    "density": str,
    "density_value": float,
    "point": str,
    "k_max": _positive_int,
    "betas": str,
    "L": int,
    "tol": float,
    "format": str,
    "seed": int,
    "threads": int,
    "output": str,
}


def resolve(command: str, flags: dict) -> dict:
    """Merge flags > config file > defaults for one command."""
    allowed = dict(_COMMON, **DEFAULTS[command])
    params = dict(allowed)
    if flags.get("config"):
        try:
            cfg = read_config(flags["config"])
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        unknown = sorted(set(cfg) - set(allowed))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        params.update(cfg)
    for key in allowed:
        if flags.get(key) is not None:
            params[key] = flags[key]
    try:
        params = {k: (_TYPES[k](v) if v is not None else None) for k, v in params.items()}
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if params["format"] is None:
        params["format"] = _DEFAULT_FORMAT.get(command, "csv")
    if params["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if params["threads"] < 1:
        raise UsageError("threads must be >= 1")
    return params


def _metadata(command: str, params: dict, extra: dict) -> dict:
    hashed = {k: v for k, v in sorted(params.items()) if k not in _NOT_HASHED}
    digest = hashlib.sha256(json.dumps(hashed, sort_keys=True).encode()).hexdigest()[:16]
    meta = {"version": __version__, "command": command, "config_hash": digest}
    meta.update({k: v for k, v in hashed.items() if k != "format"})
    meta.update(extra)
    return meta


# -- commands -----------------------------------------------------------------

def cmd_words(p: dict) -> Result:
    n = p["n"]
    bis = set(bispecial_lengths(n))
    # row 0 is the empty word: complexity 1, special on both sides
    rows = [[0, 1, "", "", 0]]
    for k in range(1, n + 1):
        sw = special_words(k)
        rows.append([k, complexity(k), sw.left, sw.right, int(k in bis)])
    return Result(["n", "complexity", "left_special", "right_special", "bispecial"], rows,
                  {"rho_prefix": rho_prefix(n)})


def _random_point(rng: random.Random) -> Point:
    while True:
        prefix = "".join(rng.choice("01") for _ in range(rng.randrange(1, 7)))
        kind = rng.randrange(3)
        if kind == 0:
            tail = KTail(mod1(GoldenRational(Fraction(rng.randrange(-50, 50), rng.randrange(1, 12)),
                                             rng.randrange(-6, 6))))
        elif kind == 1:
            tail = PeriodicTail("".join(rng.choice("01") for _ in range(rng.randrange(1, 4))))
        else:
            tail = RhoTail()
        x = Point(prefix, tail)
        if not x.in_K():
            return x


def _selftest_checks(seed: int):
    rng = random.Random(seed)

    def complexity_law():
        bad = [n for n in range(31) if complexity(n) != n + 1]
        return not bad, f"complexity(n) != n+1 at n={bad[:5]}"

    def bispecial():
        got = bispecial_lengths(100)
        want = [fib(m) - 2 for m in range(3, 13) if fib(m) - 2 <= 100]
        return got == want, f"bispecial lengths {got}"

    def oracles():
        for k in range(1, 11):
            for w in itertools.product("01", repeat=k):
                w = "".join(w)
                if is_factor_exact(w) != is_factor_fast(w):
                    return False, f"factor oracles disagree on {w}"
        return True, ""

    def fixed_point():
        bad = [(a, b, s) for a in range(51) for b in range(51) for s in "01"
               if not fixed_point_check_exact(a, b, s)]
        return not bad, f"fixed point fails at {bad[:3]}"

    def measures():
        for m in range(1, 9):
            total = GoldenRational(0)
            for w in factors(m):
                total = total + mu_K_cylinder(w)
            if total != 1:
                return False, f"cylinder masses of length {m} sum to {total}"
        ok = integrate_density(TildeDensity()) == 1 and cylinder_interval("11").empty
        return ok, "density integral or empty cylinder wrong"

    def closed_form():
        pts = [_random_point(rng) for _ in range(5)]
        V = Potential(1.0, TildeDensity())
        for x in pts:
            for n in range(6):
                a, b = iterate_R_closed(V, n, x), iterate_R_direct(V, n, x)
                if abs(a - b) > 1e-10:
                    return False, f"closed form {a} != direct {b} at n={n}, x={x}"
        return True, ""

    def coincidence():
        for w in ("", "0", "10", "0100"):
            for n in range(6):
                x, y = Point(w + "0", PeriodicTail("1")), Point(w + "1", RhoTail())
                want = len(substitute(w, n)) + fib(n + 2) - 2
                if coincidence_length(x, y, n) != want:
                    return False, f"coincidence length wrong for w={w!r}, n={n}"
        for x in (_random_point(rng) for _ in range(4)):
            for n in range(6):
                if not check_no_accident(x, n):
                    return False, f"accident in H^{n}({x})"
                if not check_H_preserves_closest(x, n):
                    return False, f"closest point not preserved by H^{n} at {x}"
        return True, ""

    def returns():
        for rw in enumerate_returns(12):
            w = rw.word
            hits = [i for i in range(len(w) - 1) if w.startswith(MARKER, i)]
            if hits[:2] != [0, rw.n]:
                return False, f"bad return word {w}"
        return True, ""

    return [
        ("complexity", complexity_law),
        ("bispecial", bispecial),
        ("factor-oracles", oracles),
        ("fixed-point", fixed_point),
        ("measures", measures),
        ("closed-form", closed_form),
        ("coincidence", coincidence),
        ("return-words", returns),
    ]


def cmd_selftest(p: dict, verbose: bool = False) -> Result:
    rows = []
    failed = False
    for name, check in _selftest_checks(p["seed"]):
        t0 = time.perf_counter()
        try:
            ok, why = check()
        except Exception as exc:  # a crash is a failure of that invariant
            ok, why = False, f"{type(exc).__name__}: {exc}"
        dt = time.perf_counter() - t0
        if verbose:
            print(f"  {name} {dt:.3f}s", file=sys.stderr)
        rows.append([name, "pass" if ok else "fail", "" if ok else why])
        failed |= not ok
    return Result(["check", "result", "detail"], rows, exit_code=EXIT_FAILURE if failed else EXIT_OK)


def cmd_renorm(p: dict) -> Result:
    if p["density"] == "tilde":
        g = TildeDensity()
    elif p["density"] == "const":
        if not p["density_value"] > 0:
            raise UsageError("density_value must be positive")
        g = Constant(p["density_value"])
    else:
        raise UsageError("density must be 'tilde' or 'const'")
    if not p["alpha"] > 0:
        raise UsageError("alpha must be positive")
    x = parse_point(p["point"])
    if x.in_K():
        raise UsageError("the point lies in K; R^k V vanishes there")
    try:
        rows = convergence_experiment(Potential(p["alpha"], g), x, p["k_max"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = [[r.k, r.value, "" if r.target is None else r.target, "" if r.ratio is None else r.ratio]
           for r in rows]
    return Result(["k", "value", "target", "ratio"], out)


def cmd_pressure(p: dict) -> Result:
    betas = _float_list(p["betas"])
    if p["L"] < 1 or not p["tol"] > 0:
        raise UsageError("L must be >= 1 and tol positive")
    samples = pressure_curve(betas, p["L"], p["tol"], threads=p["threads"])
    rows = [[s.beta, s.pressure, s.lambda0, s.L, s.tail_estimate, s.status] for s in samples]
    res = Result(["beta", "pressure", "lambda0", "L", "tail", "status"], rows,
                 {"truncation_L": p["L"], "root_tol": p["tol"]})
    res.truncated = any(not s.converged for s in samples)
    return res


def cmd_betac(p: dict) -> Result:
    if p["L"] < 1 or not p["tol"] > 0:
        raise UsageError("L must be >= 1 and tol positive")
    b = beta_c(p["L"], p["tol"], threads=p["threads"])
    diag = {"L": b.L, "lambda_lo": b.lambda_lo, "tail_lo": b.tail_lo,
            "lambda_hi": b.lambda_hi, "tail_hi": b.tail_hi, "width": b.width, "status": b.status}
    res = Result(["lo", "hi"] + list(diag), [[b.lo, b.hi] + list(diag.values())],
                 {"truncation_L": p["L"], "bracket_tol": p["tol"]},
                 payload={"lo": b.lo, "hi": b.hi, "diagnostics": diag})
    res.truncated = b.status != "converged"
    return res


# -- output -------------------------------------------------------------------

def _is_float(v) -> bool:
    return isinstance(v, (float, np.floating))


def _cell(v) -> Any:
    if _is_float(v):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    return v


def _json_value(v):
    if _is_float(v):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_json_value(x) for x in v]
    return v


def render(res: Result, fmt: str) -> str:
    if fmt == "json":
        body = res.payload if res.payload is not None else {"columns": res.columns, "rows": res.rows}
        doc = {"metadata": res.metadata}
        doc.update(body)
        return json.dumps(_json_value(doc), indent=2, ensure_ascii=False) + "\n"
    buf = io.StringIO()
    for k, v in res.metadata.items():
        buf.write(f"# {k}={_cell(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(res.columns)
    for row in res.rows:
        w.writerow([_cell(c) for c in row])
    return buf.getvalue()


def _output_path(command: str, params: dict) -> Optional[str]:
    out = params["output"]
    env_dir = os.environ.get(ENV_OUTPUT_DIR)
    if env_dir:
        name = os.path.basename(out) if out else f"{command}.{params['format']}"
        return os.path.join(env_dir, name)
    return out


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags take precedence")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", help=f"output file (default stdout; ${ENV_OUTPUT_DIR} overrides the directory)")
    common.add_argument("--threads", type=int, help="worker processes (default 1)")
    common.add_argument("--seed", type=int, help="seed for randomized checks (default 0)")
    common.add_argument("--strict", action="store_true", help="exit 3 on truncation-limited results")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fibrenorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("words", parents=[common], help="rho prefix, complexity and special words")
    p.add_argument("--n", type=int)

    sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")

    p = sub.add_parser("renorm", parents=[common], help="iterate R on g/n^alpha at a point")
    p.add_argument("--alpha", type=float)
    p.add_argument("--density", choices=("tilde", "const"))
    p.add_argument("--density-value", dest="density_value", type=float)
    p.add_argument("--point", help="PREFIX|rho, PREFIX|per:P or PREFIX|k:A,B")
    p.add_argument("--k-max", dest="k_max", type=int)

    p = sub.add_parser("pressure", parents=[common], help="pressure on a beta grid")
    p.add_argument("--betas", help="sorted comma-separated list")
    p.add_argument("--L", type=int, help="maximal return time")
    p.add_argument("--tol", type=float)

    p = sub.add_parser("betac", parents=[common], help="bracket the freezing point")
    p.add_argument("--L", type=int, help="maximal return time")
    p.add_argument("--tol", type=float)
    return parser


_COMMANDS = {
    "words": cmd_words,
    "renorm": cmd_renorm,
    "pressure": cmd_pressure,
    "betac": cmd_betac,
}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = vars(args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    command = args.command
    try:
        params = resolve(command, flags)
        if command == "selftest":
            res = cmd_selftest(params, args.verbose)
        else:
            res = _COMMANDS[command](params)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fibrenorm {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    res.metadata = _metadata(command, params, res.metadata)
    text = render(res, params["format"])
    path = _output_path(command, params)
    if path:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)
    if res.exit_code:
        failed = [r[0] for r in res.rows if r[1] == "fail"]
        print(f"selftest failed: {', '.join(failed)}", file=sys.stderr)
        return res.exit_code
    if args.strict and res.truncated:
        print("result is truncation-limited", file=sys.stderr)
        return EXIT_TRUNCATED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
