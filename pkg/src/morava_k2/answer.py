"""Closed-form module answers for k(n) of K(Z_p, 2).

closed_form writes the final k(n)^*- resp. k(n)_*-module down directly as a
free part, a list of v-torsion families and the filtration-0 Z_p family,
without running the spectral sequence.  to_page converts the result so the
ss_engine comparators can check it against an actual run.  poincare_answer,
localize and bockstein_check read dimensions off the module description.

The p = 2 homology answer is not written down independently anywhere; it is
produced here by transporting the p = 2 cohomology module: free summands keep
their degree, an order-r family moves down by 1 + 2r(2^n - 1) onto the dual
of its differential's source, and the Z_2 family moves down by 2^{n+1} - 1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

from . import km2, numerology, ss_engine
from .graded_algebra import (
    E,
    E_BAR,
    Factor,
    GAMMA,
    GAMMA_TRUNC,
    Generator,
    P,
    PoincareSeries,
    TP,
    TP_BAR,
    TensorExpression,
)
from .km2 import WindowError
from .ss_engine import INF, Page, TowerSummand, degree_step, v_degree, zp_family_counts

_ID_V = 1
_ID_Y = 100
_ID_W = 1000
_ID_Z = 5000
_ID_PROD = 9000  # the p = 2 product sources y_j w_{n+j}


def _gv(p: int, n: int, variance: str) -> Generator:
    return Generator(_ID_V, "v", v_degree(p, n, variance))


def _gy(j: int, p: int, star: str) -> Generator:
    return Generator(_ID_Y + j, f"y_{j}{star}", numerology.degree_y(j, p))


def _gw(index2: int, p: int, n: int, star: str) -> Generator:
    return Generator(_ID_W + index2, km2.w_name(index2) + star, numerology.degree_w(index2, p, n))


def _gz(i: int, p: int, star: str) -> Generator:
    return Generator(_ID_Z + i, f"z_{i}{star}", numerology.degree_z(i, p))


def _poly(gen: Generator, variance: str) -> Factor:
    return Factor(P if variance == "cohomology" else GAMMA, gen)


def _trunc(gen: Generator, height: int, variance: str) -> Factor | None:
    if height < 2:
        return None
    return Factor(TP if variance == "cohomology" else GAMMA_TRUNC, gen, height)


def _norm_window(n: int, window) -> tuple[int, int]:
    if window is None:
        return (0, km2.default_window(n))
    if isinstance(window, int):
        window = (0, window)
    lo, hi = window
    if lo != 0 or hi < 2:
        raise ValueError("window must be [0, hi] with hi >= 2")
    return (lo, hi)


@dataclass(frozen=True)
class TorsionFamily:
    """One v-torsion summand family TP_order[v] (x) expression.

    kind "y" families are indexed by the differential on y_j (order r(j)),
    kind "half" families by the one hitting z_{n+j+1} (order r'(j)).  The
    expression contains every non-v tensor cofactor, with its lowest basis
    element in degree base_degree; families whose base lies above the window
    still appear when their differential's source is inside it, carrying no
    in-window generators.
    """

    j: int
    kind: str
    order: int
    base_degree: int
    expression: TensorExpression


@dataclass(frozen=True)
class AnswerModule:
    p: int
    n: int
    variance: str
    window: tuple[int, int]
    free_part: TensorExpression
    torsion_families: tuple[TorsionFamily, ...]
    zp_family: tuple[tuple[int, int], ...]
    localized: bool = False

    def __post_init__(self):
        for f in self.torsion_families:
            want = (
                numerology.r(f.j, self.p, self.n)
                if f.kind == "y"
                else numerology.rprime(f.j, self.p, self.n)
            )
            if f.order != want:
                raise ValueError(f"family ({f.kind}, {f.j}) must have order {want}, got {f.order}")


def _head_factors(p: int, n: int, variance: str, star: str) -> list[Factor]:
    out = []
    for i in range(1, n):
        f = _trunc(_gz(n - i, p, star), p**i, variance)
        if f is not None:
            out.append(f)
    return out


def _z_tail(p: int, n: int, start: int, hi: int, variance: str, star: str) -> list[Factor]:
    out = []
    i = start
    while numerology.degree_z(i, p) <= hi:
        f = _trunc(_gz(i, p, star), p**n, variance)
        if f is not None:
            out.append(f)
        i += 1
    return out


def _families(p: int, n: int, variance: str, hi: int) -> list[TorsionFamily]:
    star = "" if variance == "cohomology" else "*"
    head = _head_factors(p, n, variance, star)
    out: list[TorsionFamily] = []

    j = 1
    while numerology.degree_y(j, p) <= hi:
        order = numerology.r(j, p, n)
        factors = [_poly(_gy(j + 1, p, star), variance)]
        if variance == "cohomology":
            t = _trunc(_gy(j, p, star), p - 1, variance)
            if t is not None:
                factors.append(t)
            factors.append(Factor(E_BAR, _gw(2 * (n + j), p, n, star)))
            base = numerology.degree_w(2 * (n + j), p, n)
        else:
            factors.append(Factor(TP_BAR, _gy(j, p, star), p))
            base = numerology.degree_y(j, p)
        for i in range(1, n + 1):
            factors.append(Factor(E, _gw(2 * (n + j + i), p, n, star)))
        factors += _z_tail(p, n, n + j + 1, hi, variance, star)
        out.append(TorsionFamily(j, "y", order, base, TensorExpression(tuple(factors + head))))
        j += 1

    j = 0 if p != 2 else 1
    while True:
        if p == 2 and numerology.p2_special_range(j, p, n):
            src_deg = numerology.degree_y(j, p) + numerology.degree_w(2 * (n + j), p, n)
            src = Generator(
                _ID_PROD + j,
                f"y_{j} {km2.w_name(2 * (n + j))}{star}",
                src_deg,
            )
        else:
            src = _gw(2 * (n + j) + 1, p, n, star)
            src_deg = src.degree
        if src_deg > hi:
            break
        order = numerology.rprime(j, p, n)
        factors = [_poly(_gy(j + 1, p, star), variance)]
        if variance == "cohomology":
            factors.append(Factor(TP_BAR, _gz(n + j + 1, p, star), p**n))
            base = numerology.degree_z(n + j + 1, p)
        else:
            factors.append(Factor(E_BAR, src))
            t = _trunc(_gz(n + j + 1, p, star), p**n - 1, variance)
            if t is not None:
                factors.append(t)
            base = src_deg
        for i in range(1, n + 1):
            factors.append(Factor(E, _gw(2 * (n + j + i), p, n, star)))
        factors += _z_tail(p, n, n + j + 2, hi, variance, star)
        out.append(TorsionFamily(j, "half", order, base, TensorExpression(tuple(factors + head))))
        j += 1

    out.sort(key=lambda f: (f.order, 0 if f.kind == "y" else 1, f.j))
    return out


def closed_form(p: int, n: int, variance: str = "cohomology", window=None) -> AnswerModule:
    """The k(n) module of K(Z_p, 2) assembled from its displayed summands.

    A family enters the list while its differential's source degree lies in
    the window; the infinite z tensor tails are cut once their generator
    degree leaves it.
    """
    km2.build(p, n, variance)  # validates p prime, n >= 1, variance spelling
    lo, hi = _norm_window(n, window)
    star = "" if variance == "cohomology" else "*"
    head = [f for f in _head_factors(p, n, variance, star) if f.gen.degree <= hi]
    free = TensorExpression((Factor(P, _gv(p, n, variance)), *head))
    return AnswerModule(
        p=p,
        n=n,
        variance=variance,
        window=(lo, hi),
        free_part=free,
        torsion_families=tuple(_families(p, n, variance, hi)),
        zp_family=zp_family_counts(p, n, variance, hi),
    )


def localize(a: AnswerModule) -> AnswerModule:
    """Invert v: every torsion family and the Z_p family die."""
    return replace(a, torsion_families=(), zp_family=(), localized=True)


def to_page(a: AnswerModule) -> Page:
    """Expand the family description into a per-degree tower page so the
    ss_engine comparators (oracle_match, pairing_check, uct_matches) apply."""
    hi = a.window[1]
    summands = []
    for f in a.torsion_families:
        series = f.expression.poincare(0, hi)
        for d in range(series.lo, series.hi + 1):
            if series.dim(d):
                summands.append(TowerSummand(f.expression, d, f.order, series.dim(d)))
    stage = max((f.order for f in a.torsion_families), default=1) + 1
    return Page(
        p=a.p,
        n=a.n,
        variance=a.variance,
        stage=stage,
        window=a.window,
        v_free=a.free_part,
        torsion=tuple(summands),
        zp_family=a.zp_family,
        names_nominal=True,
        history=("closed-form module answer",),
    )


@dataclass(frozen=True)
class AnswerSeries:
    total: PoincareSeries
    by_v_power: tuple[tuple[int, PoincareSeries], ...]

    def power(self, s: int) -> PoincareSeries:
        for k, series in self.by_v_power:
            if k == s:
                return series
        lo, hi = self.total.lo, self.total.hi
        return PoincareSeries(lo, hi, (0,) * (hi - lo + 1))


def poincare_answer(a: AnswerModule, window=None) -> AnswerSeries:
    """Per-degree F_p dimensions of the module, total and per v-power.

    A TP_r[v] tower on a degree-d generator counts r classes at d, d + |v|,
    ..., d + (r-1)|v|; the window may reach into negative degrees, where only
    the v-free part lives in cohomology.
    """
    if window is None:
        window = a.window
    if isinstance(window, int):
        window = (min(0, window), max(0, window))
    lo, hi = window
    if lo > hi:
        raise WindowError(f"empty window [{lo}, {hi}]")
    if hi > a.window[1]:
        raise WindowError(f"window top {hi} exceeds the computed range {a.window[1]}")
    dv = v_degree(a.p, a.n, a.variance)
    rows: dict[int, Counter] = {}

    def tower(g: int, count: int, order) -> None:
        e = 0
        while order == INF or e < order:
            d = g + e * dv
            if (dv < 0 and d < lo) or (dv > 0 and d > hi):
                break
            if lo <= d <= hi:
                rows.setdefault(e, Counter())[d] += count
            e += 1

    rest = TensorExpression(tuple(f for f in a.free_part.factors if f.gen.name != "v"))
    series = rest.poincare(0, a.window[1])
    for d in range(series.lo, series.hi + 1):
        if series.dim(d):
            tower(d, series.dim(d), INF)
    for f in a.torsion_families:
        fs = f.expression.poincare(0, a.window[1])
        for d in range(fs.lo, fs.hi + 1):
            if fs.dim(d):
                tower(d, fs.dim(d), f.order)
    for d, c in a.zp_family:
        if lo <= d <= hi:
            rows.setdefault(0, Counter())[d] += c

    width = hi - lo + 1
    total = [0] * width
    by_power = []
    for s in sorted(rows):
        dims = [0] * width
        for d, c in rows[s].items():
            dims[d - lo] += c
            total[d - lo] += c
        by_power.append((s, PoincareSeries(lo, hi, tuple(dims))))
    return AnswerSeries(PoincareSeries(lo, hi, tuple(total)), tuple(by_power))


def bockstein_check(a: AnswerModule, max_degree: int | None = None) -> tuple[bool, str]:
    """Mod-p cohomology dimensions from the module, degree by degree.

    The cofiber sequence of multiplication by v gives, for every degree d,
    dim H^d(K_2) = dim coker(v)_d + dim ker(v)_{d'} with d' offset from d by
    2p^n - 1: upward in cohomology, downward in homology.  The orientation is
    confirmed on degrees 0..2p^n before the full window is asserted, so a
    global off-by-one cannot slip through.
    """
    if a.localized:
        raise ValueError("bockstein_check needs the torsion the localized module drops")
    p, n = a.p, a.n
    hi = a.window[1] if max_degree is None else max_degree
    if hi > a.window[1]:
        raise WindowError(f"max_degree {hi} exceeds the computed range {a.window[1]}")
    q2 = 2 * (p**n - 1)
    dq = q2 + 1
    coh = a.variance == "cohomology"

    cok: Counter = Counter()
    kerv: Counter = Counter()
    rest = TensorExpression(tuple(f for f in a.free_part.factors if f.gen.name != "v"))
    series = rest.poincare(0, hi)
    for d in range(series.lo, series.hi + 1):
        cok[d] += series.dim(d)
    # the Z_p classes die under v and miss its image; cohomology kernels
    # reach one Q_n-degree above the module's window
    ker_top = hi + dq if coh else hi
    zp = list(a.zp_family)
    if coh and ker_top > a.window[1]:
        zp += [
            (d, c)
            for d, c in zp_family_counts(p, n, a.variance, ker_top)
            if d > a.window[1]
        ]
    for d, c in zp:
        if d <= hi:
            cok[d] += c
        if d <= ker_top:
            kerv[d] += c
    for f in a.torsion_families:
        # kernel slots sit q2*(order-1) away from their generators, on the
        # far side of the window in cohomology
        gen_top = max(hi, ker_top + q2 * (f.order - 1)) if coh else hi
        fs = f.expression.poincare(0, gen_top)
        for g in range(fs.lo, fs.hi + 1):
            c = fs.dim(g)
            if not c:
                continue
            if g <= hi:
                cok[g] += c
            top = g - q2 * (f.order - 1) if coh else g + q2 * (f.order - 1)
            if 0 <= top <= ker_top:
                kerv[top] += c

    h_dims = km2.total_dims(km2.build(p, n, a.variance), hi)

    def mismatch(offset: int, lim: int) -> int | None:
        for d in range(lim + 1):
            e = d + offset
            predicted = cok[d] + (kerv[e] if e >= 0 else 0)
            if predicted != h_dims[d]:
                return d
        return None

    derived = dq if coh else -dq
    small = min(hi, 2 * p**n)
    offset = derived
    note = ""
    if mismatch(derived, small) is not None:
        if mismatch(-derived, small) is None:
            offset = -derived
            note = " (orientation flipped by the self-test)"
        else:
            d = mismatch(derived, small)
            return False, f"no orientation fits: first failure at degree {d}"
    bad = mismatch(offset, hi)
    if bad is not None:
        e = bad + offset
        predicted = cok[bad] + (kerv[e] if e >= 0 else 0)
        return False, (
            f"degree {bad}: H has dimension {h_dims[bad]} but coker(v) + ker(v) "
            f"gives {predicted}"
        )
    return True, f"coker/ker counts match dim H^d for all d in [0, {hi}]{note}"
