"""Command-line front end: compute module answers, verify, print charts.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 internal consistency failure.  The MORAVA_THREADS environment variable
caps worker parallelism in the underlying rank computations.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from itertools import groupby

from . import answer, km2, numerology, ss_engine
from .graded_algebra import (
    E,
    E_BAR,
    Factor,
    GAMMA,
    GAMMA_TRUNC,
    Generator,
    P,
    TP,
    TP_BAR,
    TensorExpression,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    p: int
    n: int
    variance: str
    lo: int
    hi: int
    v_cap: int | None
    j_max: int
    fmt: str
    suite: str
    localize: bool


_SUITES = (
    "numerology",
    "qn",
    "e2",
    "oracle",
    "pairing",
    "uct",
    "bockstein",
    "localization",
)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="morava-k2",
        description="Connective Morava K-theory of K(Z_p, 2).",
    )
    sub = top.add_subparsers(dest="command", required=True)
    for name in ("compute", "verify", "table"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--p", type=int)
        cmd.add_argument("--n", type=int)
        cmd.add_argument("--variance", choices=("cohomology", "homology"))
        cmd.add_argument("--min-degree", type=int, dest="lo")
        cmd.add_argument("--max-degree", type=int, dest="hi")
        cmd.add_argument("--v-cap", type=int, dest="v_cap")
        cmd.add_argument("--j-max", type=int, dest="j_max")
        cmd.add_argument("--format", choices=("json", "tsv", "text"), dest="fmt")
        cmd.add_argument("--suite", choices=_SUITES + ("all",))
        cmd.add_argument("--localize", action="store_true", default=None)
        cmd.add_argument("--config", help="JSON file with the same keys; flags win")
    return top


def _build_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return data.get(key, default)

    p = pick(args.p, "p", 3)
    n = pick(args.n, "n", 1)
    if not isinstance(p, int) or not _is_prime(p):
        raise ConfigError("p must be prime")
    if not isinstance(n, int) or n < 1:
        raise ConfigError("n must be a positive integer")
    variance = pick(args.variance, "variance", "cohomology")
    if variance not in ("cohomology", "homology"):
        raise ConfigError("variance must be cohomology or homology")
    hi = pick(args.hi, "max_degree", km2.default_window(n))
    lo = pick(args.lo, "min_degree", 0)
    if lo > hi:
        raise ConfigError("min-degree exceeds max-degree")
    if hi < 2:
        raise ConfigError("max-degree must be at least 2")
    v_cap = pick(args.v_cap, "v_cap", None)
    if v_cap is not None and v_cap < 1:
        raise ConfigError("v-cap must be positive")
    j_max = pick(args.j_max, "j_max", n + 3)
    if j_max < n + 2:
        raise ConfigError("j-max must be at least n + 2")
    fmt = pick(args.fmt, "format", "text")
    if fmt not in ("json", "tsv", "text"):
        raise ConfigError("format must be json, tsv or text")
    suite = pick(args.suite, "suite", "all")
    if suite not in _SUITES + ("all",):
        raise ConfigError(f"unknown suite {suite!r}")
    localize = bool(pick(args.localize, "localize", False))
    return RunConfig(
        args.command, p, n, variance, lo, hi, v_cap, j_max, fmt, suite, localize
    )


# ---------------------------------------------------------------------------
# answer serialization

_PLAIN_KINDS = {"P": P, "E": E, "Ebar": E_BAR, "Gamma": GAMMA}
_SIZED_KINDS = {"TP": TP, "TPbar": TP_BAR, "Gamma": GAMMA_TRUNC}

_ID_V = 1
_ID_Y = 100
_ID_W = 1000
_ID_Z = 5000
_ID_PROD = 9000


def _factor_dict(f: Factor) -> dict:
    kind = f.label().split("[", 1)[0]
    return {"factor_kind": kind, "generator": f.gen.name, "degree": f.gen.degree}


def _resolve_generator(name: str, degree: int) -> Generator:
    base = name[:-1] if name.endswith("*") else name
    if base == "v":
        gid = _ID_V
    elif " " in base:
        gid = _ID_PROD + int(base.split(" ")[0].split("_")[1])
    elif base.startswith("y_"):
        gid = _ID_Y + int(base[2:])
    elif base.startswith("z_"):
        gid = _ID_Z + int(base[2:])
    elif base.startswith("w_"):
        body = base[2:]
        gid = _ID_W + (int(body[:-2]) if body.endswith("/2") else 2 * int(body))
    else:
        raise ConfigError(f"unrecognized generator name {name!r}")
    return Generator(gid, name, degree)


def _parse_factor(entry: dict) -> Factor:
    kind = entry["factor_kind"]
    gen = _resolve_generator(entry["generator"], entry["degree"])
    if "_" in kind:
        prefix, height = kind.rsplit("_", 1)
        return Factor(_SIZED_KINDS[prefix], gen, int(height))
    return Factor(_PLAIN_KINDS[kind], gen)


def serialize_answer(a: answer.AnswerModule, lo: int = 0) -> dict:
    hi = a.window[1]
    series = answer.poincare_answer(a, (lo, hi)).total
    torsion = []
    for f in a.torsion_families:
        fs = f.expression.poincare(0, hi)
        torsion.append(
            {
                "order": f.order,
                "generator_degree": f.base_degree,
                "cofactor": [_factor_dict(x) for x in f.expression.factors],
                "count_in_window": sum(fs.dim(d) for d in range(hi + 1)),
            }
        )
    return {
        "p": a.p,
        "n": a.n,
        "variance": a.variance,
        "window": list(a.window),
        "free": [_factor_dict(x) for x in a.free_part.factors],
        "torsion": torsion,
        "zp_family": [{"degree": d, "count": c} for d, c in a.zp_family],
        "poincare": [{"degree": d, "dim": series.dim(d)} for d in range(lo, hi + 1)],
        "names_nominal": True,
    }


def _family_identity(p: int, n: int, variance: str, order: int, base: int) -> tuple[int, str]:
    """Recover (j, kind) of a family from its order and base parity.

    y-family bases are w-degrees (odd) in cohomology and y-degrees (even) in
    homology; half-family bases the other parity either way.
    """
    odd_base = base % 2 == 1
    kind = ("y" if odd_base else "half") if variance == "cohomology" else (
        "half" if odd_base else "y"
    )
    fn = numerology.r if kind == "y" else numerology.rprime
    j = 1 if (kind == "y" or p == 2) else 0
    while fn(j, p, n) < order:
        j += 1
    if fn(j, p, n) != order:
        raise ConfigError(f"no schedule stage has order {order}")
    return j, kind


def parse_answer(data: dict) -> answer.AnswerModule:
    """Rebuild an AnswerModule from its JSON form."""
    p, n, variance = data["p"], data["n"], data["variance"]
    families = []
    for entry in data["torsion"]:
        j, kind = _family_identity(
            p, n, variance, entry["order"], entry["generator_degree"]
        )
        families.append(
            answer.TorsionFamily(
                j,
                kind,
                entry["order"],
                entry["generator_degree"],
                TensorExpression(tuple(_parse_factor(x) for x in entry["cofactor"])),
            )
        )
    return answer.AnswerModule(
        p=p,
        n=n,
        variance=variance,
        window=tuple(data["window"]),
        free_part=TensorExpression(tuple(_parse_factor(x) for x in data["free"])),
        torsion_families=tuple(families),
        zp_family=tuple((e["degree"], e["count"]) for e in data["zp_family"]),
        localized=not data["torsion"] and not data["zp_family"],
    )


# ---------------------------------------------------------------------------
# commands


def cmd_compute(cfg: RunConfig, out) -> int:
    a = answer.closed_form(cfg.p, cfg.n, cfg.variance, (0, cfg.hi))
    if cfg.localize:
        a = answer.localize(a)
    series = answer.poincare_answer(a, (cfg.lo, cfg.hi)).total
    chart = answer.to_page(a).chart_series()
    if any(series.dim(d) != chart.dim(d) for d in range(0, cfg.hi + 1)):
        print("internal consistency failure: series readers disagree", file=sys.stderr)
        return 3
    if cfg.fmt == "json":
        print(json.dumps(serialize_answer(a, cfg.lo)), file=out)
    elif cfg.fmt == "tsv":
        print("degree\tdim", file=out)
        for d in range(cfg.lo, cfg.hi + 1):
            print(f"{d}\t{series.dim(d)}", file=out)
    else:
        name = "k(n)_*" if cfg.variance == "homology" else "k(n)^*"
        print(
            f"{name}(K_2) at p={cfg.p}, n={cfg.n} on [{cfg.lo}, {cfg.hi}]"
            + (" after inverting v" if a.localized else ""),
            file=out,
        )
        print(f"free part: {a.free_part.label()}", file=out)
        for f in a.torsion_families:
            print(
                f"v-torsion of order {f.order} from degree {f.base_degree}: "
                f"{f.expression.label()}",
                file=out,
            )
        zp_total = sum(c for _d, c in a.zp_family)
        print(f"Z_p family: {zp_total} classes in window", file=out)
    return 0


def _run_suite(name: str, cfg: RunConfig):
    p, n, variance, hi = cfg.p, cfg.n, cfg.variance, cfg.hi
    if name == "numerology":
        failures = numerology.identity_suite(p, n, cfg.j_max)
        return not failures, (
            f"stage identities hold through j = {cfg.j_max}"
            if not failures
            else f"first failure: {failures[0]}"
        )
    if name == "qn":
        checked, failures = km2.qn_square_check(p, n, hi, mixed_samples=500)
        return not failures, (
            f"Q_n squared to zero on {checked} monomials"
            if not failures
            else f"Q_n^2 != 0 on exponent vector {failures[0]}"
        )
    if name == "e2":
        page = ss_engine.e2_closed_form(p, n, variance, hi)
        rest = TensorExpression(
            tuple(f for f in page.v_free.factors if f.gen.name != "v")
        )
        series = rest.poincare(0, hi)
        trivial = km2.qn_homology(p, n, variance, hi).trivial_series()
        bad = [d for d in range(hi + 1) if series.dim(d) != trivial.dim(d)]
        return not bad, (
            f"E2 matches the Q_n-homology on [0, {hi}]"
            if not bad
            else f"E2 dimension differs at degree {bad[0]}"
        )
    if name == "oracle":
        closed = ss_engine.run_closed_form(
            ss_engine.e2_closed_form(p, n, variance, hi),
            ss_engine.window_schedule(p, n, hi, variance),
        )
        brute = ss_engine.run_bruteforce(p, n, variance, hi, v_cap=cfg.v_cap)
        return ss_engine.oracle_match(closed, brute)
    if name == "pairing":
        rep = ss_engine.pairing_check(
            ss_engine.run_bruteforce(p, n, "cohomology", hi),
            ss_engine.run_bruteforce(p, n, "homology", hi),
        )
        return rep.ok, rep.detail
    if name == "uct":
        return ss_engine.uct_matches(
            ss_engine.run_bruteforce(p, n, "homology", hi),
            ss_engine.run_bruteforce(p, n, "cohomology", hi),
        )
    if name == "bockstein":
        return answer.bockstein_check(answer.closed_form(p, n, variance, (0, hi)))
    if name == "localization":
        loc = answer.localize(answer.closed_form(p, n, variance, (0, hi)))
        label = loc.free_part.label()
        if n == 1:
            if label != "P[v]":
                return False, f"localized module is {label}, expected P[v]"
            if variance == "cohomology":
                series = answer.poincare_answer(loc, (1, hi)).total
                bad = [d for d in range(1, hi + 1) if series.dim(d)]
                if bad:
                    return False, f"localized class survives in degree {bad[0]}"
            return True, "inverting v leaves P[v] alone"
        want = f"TP_{p}[z_1]" if variance == "cohomology" else f"Gamma_{p}[z_1*]"
        if want not in label:
            return False, f"localized module {label} misses {want}"
        return True, f"inverting v leaves {label}"
    raise ConfigError(f"unknown suite {name!r}")


def cmd_verify(cfg: RunConfig, out) -> int:
    names = _SUITES if cfg.suite == "all" else (cfg.suite,)
    first_failure = None
    for name in names:
        ok, detail = _run_suite(name, cfg)
        print(f"{'PASS' if ok else 'FAIL'}\t{name}\t{detail}", file=out)
        if not ok and first_failure is None:
            first_failure = (name, detail)
    if first_failure:
        print(f"verification failed in {first_failure[0]}: {first_failure[1]}", file=sys.stderr)
        return 1
    return 0


def _render_grid(page, out) -> None:
    chart = page.chart_dims()
    lo, hi = page.window
    if hi - lo > 90:
        dims = page.chart_series()
        row = " ".join(str(dims.dim(d)) for d in range(lo, hi + 1))
        print(f"window too wide for a grid; dims by degree: {row}", file=out)
        return
    if not chart:
        print("(empty grid)", file=out)
        return
    smax = max(s for _d, s in chart)
    width = max(len(str(c)) for c in chart.values())
    for s in range(smax, -1, -1):
        cells = [
            str(chart.get((d, s), 0)).rjust(width) if chart.get((d, s)) else "." * width
            for d in range(lo, hi + 1)
        ]
        print(f"s={s:>3} | " + " ".join(cells), file=out)
    print("      +" + "-" * ((width + 1) * (hi - lo + 1)), file=out)
    print(f"        degrees {lo} through {hi}, left to right", file=out)


def cmd_table(cfg: RunConfig, out) -> int:
    sched = [
        e
        for e in ss_engine.window_schedule(cfg.p, cfg.n, cfg.hi, cfg.variance)
        if min(e.source_degree, e.target_degree) <= cfg.hi
    ]
    page = ss_engine.e2_closed_form(cfg.p, cfg.n, cfg.variance, cfg.hi)
    arrow = "d^" if cfg.variance == "cohomology" else "d_"
    print(
        f"Adams chart for {cfg.variance} at p={cfg.p}, n={cfg.n}, window [0, {cfg.hi}]",
        file=out,
    )
    if not sched:
        print("no differentials reach the window; the E2 grid is final", file=out)
        _render_grid(page, out)
        return 0
    for stage, group in groupby(sched, key=lambda e: e.stage):
        entries = list(group)
        print(f"\nE_{stage} page, stage r={stage}:", file=out)
        _render_grid(page, out)
        for e in entries:
            print(
                f"  {arrow}{stage}({e.source}) = v^{stage} {e.target}"
                f"   [{e.source_degree} -> {e.target_degree}]",
                file=out,
            )
        page = ss_engine.run_closed_form(
            ss_engine.e2_closed_form(cfg.p, cfg.n, cfg.variance, cfg.hi),
            [
                x
                for x in ss_engine.window_schedule(cfg.p, cfg.n, cfg.hi, cfg.variance)
                if x.stage <= stage
            ],
        )
    print("\nfinal page:", file=out)
    _render_grid(page, out)
    return 0


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        cfg = _build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.command == "compute":
            return cmd_compute(cfg, sys.stdout)
        if cfg.command == "verify":
            return cmd_verify(cfg, sys.stdout)
        return cmd_table(cfg, sys.stdout)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
