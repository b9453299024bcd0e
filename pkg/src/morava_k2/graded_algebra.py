"""Graded tensor expressions over F_p and their Poincare series.

Everything downstream (cohomology presentations, E2 pages, final answers) is
a tensor product of single-generator factors: polynomial, exterior, truncated
polynomial, divided power, and the reduced (augmentation-complement) variants
of the last two kinds used by torsion summands.  A factor constrains the
exponent range of its generator; a TensorExpression is an ordered list of
factors; bases and series are enumerated per degree inside a window.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import count

P = "P"
E = "E"
E_BAR = "Ebar"
TP = "TP"
TP_BAR = "TPbar"
GAMMA = "Gamma"
GAMMA_TRUNC = "GammaTrunc"

_KINDS = {P, E, E_BAR, TP, TP_BAR, GAMMA, GAMMA_TRUNC}
_NEED_HEIGHT = {TP, TP_BAR, GAMMA_TRUNC}


@dataclass(frozen=True, order=True)
class Generator:
    """A named generator of nonzero degree; id gives the canonical sort order."""

    id: int
    name: str
    degree: int

    def __post_init__(self) -> None:
        if self.degree == 0:
            raise ValueError(f"generator {self.name} has degree 0")


@dataclass(frozen=True)
class Factor:
    """One tensor factor: a generator with an exponent-range kind.

    kind P allows any exponent >= 0, E only 0..1, TP(height h) 0..h-1, with
    the barred variants dropping exponent 0.  Gamma is the divided power
    algebra (one class gamma_e per e >= 0, same series as P) and GammaTrunc
    its height-h truncation gamma_0..gamma_{h-1}.
    """

    kind: str
    gen: Generator
    height: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind in _NEED_HEIGHT:
            if self.height is None or self.height < 2:
                raise ValueError(f"{self.kind} factor needs height >= 2")
        elif self.height is not None:
            raise ValueError(f"{self.kind} factor takes no height")

    def exponent_range(self, limit: int) -> range:
        lo = 1 if self.kind in (E_BAR, TP_BAR) else 0
        if self.kind in (P, GAMMA):
            hi = limit
        elif self.kind in (E, E_BAR):
            hi = 1
        else:
            hi = self.height - 1
        return range(lo, min(hi, limit) + 1)

    def label(self) -> str:
        if self.kind == P:
            return f"P[{self.gen.name}]"
        if self.kind == E:
            return f"E[{self.gen.name}]"
        if self.kind == E_BAR:
            return f"Ebar[{self.gen.name}]"
        if self.kind == TP:
            return f"TP_{self.height}[{self.gen.name}]"
        if self.kind == TP_BAR:
            return f"TPbar_{self.height}[{self.gen.name}]"
        if self.kind == GAMMA:
            return f"Gamma[{self.gen.name}]"
        return f"Gamma_{self.height}[{self.gen.name}]"


@dataclass(frozen=True)
class Monomial:
    """Exponent vector over a TensorExpression's factors, with its degree."""

    exponents: tuple[int, ...]
    degree: int

    def sort_key(self, expr: "TensorExpression") -> tuple:
        return (self.degree,) + tuple(
            (f.gen.id, e) for f, e in zip(expr.factors, self.exponents) if e
        )


@dataclass(frozen=True)
class PoincareSeries:
    """Per-degree dimensions over a closed window [lo, hi]."""

    lo: int
    hi: int
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.dims) != self.hi - self.lo + 1:
            raise ValueError("dims length does not match window")

    def dim(self, d: int) -> int:
        if d < self.lo or d > self.hi:
            return 0
        return self.dims[d - self.lo]

    def add(self, other: "PoincareSeries") -> "PoincareSeries":
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        dims = [self.dim(d) + other.dim(d) for d in range(lo, hi + 1)]
        return PoincareSeries(lo, hi, tuple(dims))

    def mul(self, other: "PoincareSeries") -> "PoincareSeries":
        """Product series, truncated to the window both factors can reach."""
        lo, hi = self.lo + other.lo, self.hi + other.hi
        dims = [0] * (hi - lo + 1)
        for i, a in enumerate(self.dims):
            if a:
                for j, b in enumerate(other.dims):
                    if b:
                        dims[i + j] += a * b
        return PoincareSeries(lo, hi, tuple(dims))

    def restrict(self, lo: int, hi: int) -> "PoincareSeries":
        return PoincareSeries(lo, hi, tuple(self.dim(d) for d in range(lo, hi + 1)))


def series_one(lo: int, hi: int) -> PoincareSeries:
    dims = [0] * (hi - lo + 1)
    if lo <= 0 <= hi:
        dims[-lo] = 1
    return PoincareSeries(lo, hi, tuple(dims))


def _factor_series(f: Factor, lo: int, hi: int) -> PoincareSeries:
    dims = [0] * (hi - lo + 1)
    d = f.gen.degree
    for e in f.exponent_range(_exponent_limit(f, lo, hi)):
        deg = e * d
        if lo <= deg <= hi:
            dims[deg - lo] += 1
    return PoincareSeries(lo, hi, tuple(dims))


def _exponent_limit(f: Factor, lo: int, hi: int) -> int:
    d = f.gen.degree
    bound = hi if d > 0 else lo
    if d > 0:
        return max(bound // d, 0)
    return max(bound // d, 0) if bound < 0 else 0


@dataclass(frozen=True)
class TensorExpression:
    factors: tuple[Factor, ...]

    def tensor(self, other: "TensorExpression") -> "TensorExpression":
        return TensorExpression(self.factors + other.factors)

    def label(self) -> str:
        if not self.factors:
            return "F_p"
        return " @ ".join(f.label() for f in self.factors)

    def poincare(self, lo: int, hi: int) -> PoincareSeries:
        """Per-degree dimensions on [lo, hi] by windowed factor convolution."""
        out = series_one(min(lo, 0), max(hi, 0))
        for f in self.factors:
            out = out.mul(_factor_series(f, min(lo, 0), max(hi, 0))).restrict(
                min(lo, 0), max(hi, 0)
            )
        return out.restrict(lo, hi)

    def enumerate_basis(self, lo: int, hi: int) -> list[Monomial]:
        """All monomials with degree in [lo, hi], sorted canonically.

        Only usable when every factor has degree of one sign or a bounded
        exponent range; mixed-sign unbounded factors would make degree
        windows infinite.
        """
        pos = [f for f in self.factors if f.gen.degree > 0]
        neg = [f for f in self.factors if f.gen.degree < 0]
        out: list[tuple[tuple[int, ...], int]] = []
        order = pos + neg
        index = {id(f): k for k, f in enumerate(order)}

        def rec(k: int, exps: list[int], deg: int) -> None:
            if k == len(order):
                if lo <= deg <= hi:
                    out.append((tuple(exps), deg))
                return
            f = order[k]
            d = f.gen.degree
            if d > 0:
                cap = hi - deg
                for e in f.exponent_range(max(cap // d, 0)):
                    if deg + e * d > hi:
                        break
                    exps[k] = e
                    rec(k + 1, exps, deg + e * d)
                exps[k] = 0
            else:
                cap = deg - lo
                for e in f.exponent_range(max(cap // (-d), 0)):
                    if deg + e * d < lo:
                        break
                    exps[k] = e
                    rec(k + 1, exps, deg + e * d)
                exps[k] = 0

        rec(0, [0] * len(order), 0)
        # restore the expression's own factor order for the exponent tuples
        back = [index[id(f)] for f in self.factors]
        monos = [
            Monomial(tuple(exps[b] for b in back), deg) for exps, deg in out
        ]
        monos.sort(key=lambda m: m.sort_key(self))
        return monos


def expand_divided_powers(expr: TensorExpression, lo: int, hi: int, p: int) -> TensorExpression:
    """Replace each Gamma-kind factor by its truncated-polynomial expansion.

    Gamma[x] = tensor of TP_p[gamma_{p^k}(x)] over k >= 0, and Gamma_h[x]
    (h a power of p) keeps the k with p^k < h.  Expansion generators get
    fresh ids above the existing ones.
    """
    ids = count(max((f.gen.id for f in expr.factors), default=0) + 1)
    out: list[Factor] = []
    for f in expr.factors:
        if f.kind not in (GAMMA, GAMMA_TRUNC):
            out.append(f)
            continue
        height = None if f.kind == GAMMA else f.height
        if height is not None:
            h = height
            while h > 1:
                if h % p:
                    raise ValueError(
                        f"Gamma_{height}[{f.gen.name}] needs a p-power height to expand at p={p}"
                    )
                h //= p
        k = 0
        while True:
            step = p**k
            if height is not None and step >= height:
                break
            deg = f.gen.degree * step
            if abs(deg) > max(abs(lo), abs(hi)):
                break
            gen = Generator(next(ids), f"gamma_{step}({f.gen.name})", deg)
            out.append(Factor(TP, gen, height=p))
            k += 1
    return TensorExpression(tuple(out))
