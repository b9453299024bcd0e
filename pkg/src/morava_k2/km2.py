"""H*K(Z_p, 2) with the Milnor primitive Q_n, and its Q_n-homology.

The presentation is polynomial-tensor-exterior on ι₂ (written i2), the even
classes z_i and the odd classes u_i at odd primes; at p = 2 everything is
polynomial on i2 and the u_i, with u_i² playing the role of z_{i+1}.  Q_n is
the tabulated map on generators extended as a derivation with Koszul signs.

Q_n-homology is computed two independent ways: a direct per-degree
kernel/image computation on the full monomial basis (small windows), and a
factored route that splits the algebra into the tensor components coupled by
Q_n and handles each separately (large windows).  At p = 2 the components are
infinite polynomial chains, processed by repeatedly adjoining one generator
at a time: adjoining u with Q_n(u) = m turns homology into cokernel and
kernel blocks of multiplication by m on the previous stage, and the needed
multiplication operators are carried along through each stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._pmap import pmap
from .graded_algebra import PoincareSeries


class WindowError(ValueError):
    """A computation needs basis data beyond the configured degree window."""


# ---------------------------------------------------------------------------
# linear algebra over F_p


def rref_modp(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p; returns (matrix copy, pivot columns)."""
    a = np.array(a, dtype=np.int64) % p
    rows, cols = a.shape
    piv: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        a[r] = (a[r] * pow(int(a[r, c]), p - 2, p)) % p
        hits = np.nonzero(a[:, c])[0]
        for j in hits:
            if j != r:
                a[j] = (a[j] - a[j, c] * a[r]) % p
        piv.append(c)
        r += 1
    return a, piv


def rank_modp(a: np.ndarray, p: int) -> int:
    if a.size == 0:
        return 0
    return len(rref_modp(a, p)[1])


def nullspace_modp(a: np.ndarray, p: int) -> np.ndarray:
    """Columns form a basis of ker(a) over F_p."""
    rows, cols = a.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=np.int64)
    r, piv = rref_modp(a, p)
    free = [c for c in range(cols) if c not in piv]
    out = np.zeros((cols, len(free)), dtype=np.int64)
    for k, c in enumerate(free):
        out[c, k] = 1
        for i, pc in enumerate(piv):
            out[pc, k] = (-int(r[i, c])) % p
    return out


def solve_modp(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Solve a @ x = b (columns of b) given that a has independent columns."""
    rows, cols = a.shape
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    aug = np.concatenate([a, b], axis=1) % p
    r, piv = rref_modp(aug, p)
    x = np.zeros((cols, b.shape[1]), dtype=np.int64)
    for i, pc in enumerate(piv):
        if pc >= cols:
            raise ValueError("inconsistent linear system")
        x[pc] = r[i, cols:]
    return x


# ---------------------------------------------------------------------------
# presentation


@dataclass(frozen=True)
class PresGenerator:
    name: str
    degree: int
    exp_kind: str  # "P" unbounded exponent, "E" exponent at most 1
    family: str  # "i2", "z" or "u"
    index: int


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class Presentation:
    """Generators and Q_n images for H*K(Z_p, 2) (or its homology dual).

    The homology variant has the same per-degree dimensions (graded dual)
    and its Q_n matrices are the transposes of the cohomology ones, so the
    generator list is shared; only the variance tag and the direction of
    the matrices differ downstream.
    """

    p: int
    n: int
    variance: str

    @property
    def qn_degree(self) -> int:
        return 2 * self.p**self.n - 1

    def generators(self, max_degree: int) -> list[PresGenerator]:
        p = self.p
        gens = [PresGenerator("i2", 2, "P", "i2", 0)]
        if p == 2:
            i = 0
            while 2 * 2**i + 1 <= max_degree:
                gens.append(PresGenerator(f"u_{i}", 2 * 2**i + 1, "P", "u", i))
                i += 1
        else:
            i = 1
            while 2 * (p**i + 1) <= max_degree:
                gens.append(PresGenerator(f"z_{i}", 2 * (p**i + 1), "P", "z", i))
                i += 1
            i = 0
            while 2 * p**i + 1 <= max_degree:
                gens.append(PresGenerator(f"u_{i}", 2 * p**i + 1, "E", "u", i))
                i += 1
        return gens

    def qn_on_generator(self, name: str) -> tuple[str, int] | None:
        """Image of a generator as (target name, exponent), or None for zero."""
        p, n = self.p, self.n
        if name == "i2":
            return (f"u_{n}", 1)
        family, idx = name.split("_")
        i = int(idx)
        if family == "z":
            return None
        if family != "u":
            raise ValueError(f"unknown generator {name!r}")
        if p == 2:
            if i < n:
                return (f"u_{n - i - 1}", 2 ** (i + 1))
            if i == n:
                return None
            return (f"u_{i - n - 1}", 2 ** (n + 1))
        if i < n:
            return (f"z_{n - i}", p**i)
        if i == n:
            return None
        return (f"z_{i - n}", p**n)


def build(p: int, n: int, variance: str = "cohomology") -> Presentation:
    if not _is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if variance not in ("cohomology", "homology"):
        raise ValueError(f"variance must be cohomology or homology, got {variance!r}")
    return Presentation(p, n, variance)


# ---------------------------------------------------------------------------
# the derivation on monomials


class DerivationContext:
    """Q_n on exponent tuples over a fixed ordered generator list.

    Monomials are written in list order; a Leibniz term that inserts an odd
    generator picks up, besides the (-1)^(prefix degree) of the Koszul rule,
    the reordering sign for moving the inserted factor to its canonical slot.
    """

    def __init__(
        self,
        pres: Presentation,
        max_degree: int,
        gens: list[PresGenerator] | None = None,
        missing_as_zero: bool = False,
    ):
        self.pres = pres
        self.p = pres.p
        self.max_degree = max_degree
        self.gens = list(gens) if gens is not None else pres.generators(max_degree)
        self.index = {g.name: k for k, g in enumerate(self.gens)}
        self.images: list[tuple[int, int] | None] = []
        for g in self.gens:
            img = pres.qn_on_generator(g.name)
            if img is None:
                self.images.append(None)
            else:
                tname, texp = img
                if tname in self.index:
                    self.images.append((self.index[tname], texp))
                elif missing_as_zero:
                    # sources whose image needs the absent generator all sit
                    # above the degrees the caller reads, so drop the image
                    self.images.append(None)
                else:
                    # target generator outside this context; flagged lazily
                    self.images.append((-1, texp))

    def degree(self, exps: tuple[int, ...]) -> int:
        return sum(e * g.degree for e, g in zip(exps, self.gens))

    def qn_monomial(self, exps: tuple[int, ...]) -> dict[tuple[int, ...], int]:
        p = self.p
        out: dict[tuple[int, ...], int] = {}
        prefix = 0
        for k, g in enumerate(self.gens):
            e = exps[k]
            if e:
                img = self.images[k]
                if img is not None:
                    c = e % p
                    if c and p != 2 and prefix % 2 == 1:
                        c = p - c
                    if c:
                        tpos, texp = img
                        if tpos < 0:
                            raise WindowError(
                                f"image of {g.name} needs a generator beyond degree "
                                f"{self.max_degree}"
                            )
                        ne = list(exps)
                        ne[k] -= 1
                        ne[tpos] += texp
                        tg = self.gens[tpos]
                        if not (tg.exp_kind == "E" and ne[tpos] > 1):
                            if p != 2 and tg.degree % 2 == 1:
                                if tpos < k:
                                    raise AssertionError("odd image inserted leftward")
                                s = sum(
                                    1
                                    for t in range(k + 1, tpos)
                                    if ne[t] and self.gens[t].degree % 2 == 1
                                )
                                if s % 2:
                                    c = p - c
                            key = tuple(ne)
                            v = (out.get(key, 0) + c) % p
                            if v:
                                out[key] = v
                            else:
                                out.pop(key, None)
                prefix += e * g.degree
        return out

    def qn_poly(self, poly: dict[tuple[int, ...], int]) -> dict[tuple[int, ...], int]:
        out: dict[tuple[int, ...], int] = {}
        for exps, coeff in poly.items():
            for m, c in self.qn_monomial(exps).items():
                v = (out.get(m, 0) + coeff * c) % self.p
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return out

    def mul_poly(
        self, a: dict[tuple[int, ...], int], b: dict[tuple[int, ...], int]
    ) -> dict[tuple[int, ...], int]:
        p = self.p
        odd_pos = [k for k, g in enumerate(self.gens) if g.degree % 2 == 1]
        out: dict[tuple[int, ...], int] = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                dead = False
                sign = 1
                if p != 2:
                    # merge sign: odd factors of the left monomial hop over
                    # odd factors of the right one sitting at earlier slots
                    for s in odd_pos:
                        if ea[s]:
                            for t in odd_pos:
                                if t < s and eb[t]:
                                    sign = -sign
                ne = []
                for k, g in enumerate(self.gens):
                    tot = ea[k] + eb[k]
                    if g.exp_kind == "E" and tot > 1:
                        dead = True
                        break
                    ne.append(tot)
                if dead:
                    continue
                key = tuple(ne)
                v = (out.get(key, 0) + sign * ca * cb) % p
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return out

    def render(self, exps: tuple[int, ...]) -> str:
        parts = []
        for e, g in zip(exps, self.gens):
            if e == 1:
                parts.append(g.name)
            elif e:
                parts.append(f"{g.name}^{e}")
        return " ".join(parts) if parts else "1"


def window_bases(gens: list[PresGenerator], hi: int) -> list[list[tuple[int, ...]]]:
    """Monomial bases for every degree 0..hi, in deterministic order."""
    buckets: list[list[tuple[int, ...]]] = [[] for _ in range(hi + 1)]
    exps = [0] * len(gens)

    def rec(k: int, deg: int) -> None:
        if k == len(gens):
            buckets[deg].append(tuple(exps))
            return
        g = gens[k]
        cap = (hi - deg) // g.degree
        if g.exp_kind == "E":
            cap = min(cap, 1)
        for e in range(cap + 1):
            exps[k] = e
            rec(k + 1, deg + e * g.degree)
        exps[k] = 0

    rec(0, 0)
    return buckets


def qn_matrix(pres: Presentation, d: int, max_degree: int) -> np.ndarray:
    """Matrix of Q_n out of degree d over the full monomial basis.

    Cohomology maps degree d to d + (2p^n - 1); homology is the transpose
    going down.  The window must contain both endpoint degrees.
    """
    dq = pres.qn_degree
    if pres.variance == "cohomology":
        if not 0 <= d <= d + dq <= max_degree:
            raise WindowError(f"degrees {d} and {d + dq} must both lie in [0, {max_degree}]")
        ctx = DerivationContext(pres, max_degree)
        buckets = window_bases(ctx.gens, max_degree)
        return _qn_block(ctx, buckets[d], buckets[d + dq])
    if not 0 <= d <= max_degree:
        raise WindowError(f"degree {d} must lie in [0, {max_degree}]")
    ctx = DerivationContext(pres, max_degree)
    buckets = window_bases(ctx.gens, max_degree)
    if d < dq:
        return np.zeros((0, len(buckets[d])), dtype=np.int64)
    return _qn_block(ctx, buckets[d - dq], buckets[d]).T % pres.p


def _qn_block(
    ctx: DerivationContext,
    src: list[tuple[int, ...]],
    tgt: list[tuple[int, ...]],
) -> np.ndarray:
    pos = {m: i for i, m in enumerate(tgt)}
    a = np.zeros((len(tgt), len(src)), dtype=np.int64)
    for j, m in enumerate(src):
        for t, c in ctx.qn_monomial(m).items():
            a[pos[t], j] = c
    return a


# ---------------------------------------------------------------------------
# direct-mode homology

_DIRECT_STATE: dict = {}


def _direct_rank_worker(d: int) -> tuple[int, int]:
    ctx = _DIRECT_STATE["ctx"]
    buckets = _DIRECT_STATE["buckets"]
    dq = ctx.pres.qn_degree
    a = _qn_block(ctx, buckets[d], buckets[d + dq])
    return d, rank_modp(a, ctx.p)


def _direct_trivial(
    pres: Presentation, hi: int, with_reps: bool
) -> tuple[list[int], dict[int, list[str]] | None]:
    dq = pres.qn_degree
    ctx = DerivationContext(pres, hi + dq)
    buckets = window_bases(ctx.gens, hi + dq)
    _DIRECT_STATE["ctx"] = ctx
    _DIRECT_STATE["buckets"] = buckets
    try:
        ranks = dict(pmap(_direct_rank_worker, range(hi + 1)))
    finally:
        _DIRECT_STATE.clear()
    triv = []
    for d in range(hi + 1):
        rank_out = ranks[d]
        rank_in = ranks.get(d - dq, 0)
        triv.append(len(buckets[d]) - rank_out - rank_in)
    if not with_reps:
        return triv, None
    reps: dict[int, list[str]] = {}
    transpose = pres.variance == "homology"
    for d in range(hi + 1):
        if triv[d] == 0:
            reps[d] = []
            continue
        out_block = _qn_block(ctx, buckets[d], buckets[d + dq])
        in_block = (
            _qn_block(ctx, buckets[d - dq], buckets[d]) if d >= dq
            else np.zeros((len(buckets[d]), 0), dtype=np.int64)
        )
        if transpose:
            out_block, in_block = in_block.T % pres.p, out_block.T % pres.p
        reps[d] = _choose_reps(ctx, buckets[d], out_block, in_block, triv[d], transpose)
    return triv, reps


def _choose_reps(
    ctx: DerivationContext,
    basis: list[tuple[int, ...]],
    out_block: np.ndarray,
    in_block: np.ndarray,
    count: int,
    dual: bool,
) -> list[str]:
    """Kernel-mod-image representatives, preferring single cycle monomials."""
    p = ctx.p
    dim = len(basis)
    ker = nullspace_modp(out_block, p)
    units = []
    for i in range(dim):
        if not out_block[:, i].any():
            e = np.zeros((dim, 1), dtype=np.int64)
            e[i, 0] = 1
            units.append(e)
    cand = np.concatenate([in_block] + units + [ker], axis=1)
    _, piv = rref_modp(cand, p)
    chosen = [c for c in piv if c >= in_block.shape[1]]
    if len(chosen) != count:
        raise AssertionError("representative count disagrees with the dimension count")
    labels = []
    n_units = len(units)
    for c in chosen:
        k = c - in_block.shape[1]
        if k < n_units:
            vec = units[k][:, 0]
        else:
            vec = ker[:, k - n_units]
        terms = [
            (ctx.render(basis[i]), int(vec[i])) for i in np.nonzero(vec)[0]
        ]
        s = " + ".join(t if c2 == 1 else f"{c2}*{t}" for t, c2 in terms)
        labels.append(f"({s})*" if dual else s)
    return labels


# ---------------------------------------------------------------------------
# factored-mode homology: tensor components coupled by Q_n


def components(pres: Presentation, max_degree: int) -> list[list[PresGenerator]]:
    """Partition of the generators up to max_degree into Q_n-coupled pieces.

    Callers computing homology on [0, hi] must pass hi + (2p^n - 1) so that
    every Q_n-target of an in-window monomial has its generator present.
    """
    gens = pres.generators(max_degree)
    index = {g.name: i for i, g in enumerate(gens)}
    parent = list(range(len(gens)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        parent[find(x)] = find(y)

    for i, g in enumerate(gens):
        img = pres.qn_on_generator(g.name)
        if img is not None and img[0] in index:
            union(i, index[img[0]])
    groups: dict[int, list[PresGenerator]] = {}
    for i, g in enumerate(gens):
        groups.setdefault(find(i), []).append(g)
    return sorted(groups.values(), key=lambda c: min(g.degree for g in c))


class ExplicitHomology:
    """Q_n-homology of the sub-algebra on a generator subset, with operators.

    Keeps per-degree representative vectors so that multiplication by a
    fixed cycle monomial can be expressed as a matrix on homology; that is
    what the p = 2 adjunction chain consumes.
    """

    def __init__(self, pres: Presentation, gens: list[PresGenerator], top: int):
        self.pres = pres
        self.p = pres.p
        self.top = top
        dq = pres.qn_degree
        self.ctx = DerivationContext(pres, top + dq, gens=gens)
        self.buckets = window_bases(gens, top + dq)
        self.mats: list[np.ndarray] = []
        for d in range(top + 1):
            self.mats.append(_qn_block(self.ctx, self.buckets[d], self.buckets[d + dq]))
        self.dims: list[int] = []
        self.reps: list[np.ndarray] = []
        self._reduce_basis: list[np.ndarray] = []
        for d in range(top + 1):
            dim = len(self.buckets[d])
            ker = nullspace_modp(self.mats[d], self.p)
            im = (
                self.mats[d - dq] if d >= dq else np.zeros((dim, 0), dtype=np.int64)
            )
            cand = np.concatenate([im, ker], axis=1)
            _, piv = rref_modp(cand, self.p)
            rep_cols = [c - im.shape[1] for c in piv if c >= im.shape[1]]
            reps = ker[:, rep_cols] if rep_cols else np.zeros((dim, 0), dtype=np.int64)
            im_basis_cols = [c for c in piv if c < im.shape[1]]
            im_basis = im[:, im_basis_cols] if im_basis_cols else np.zeros(
                (dim, 0), dtype=np.int64
            )
            self.dims.append(reps.shape[1])
            self.reps.append(reps)
            self._reduce_basis.append(np.concatenate([reps, im_basis], axis=1))

    def reduce(self, d: int, vecs: np.ndarray) -> np.ndarray:
        """Coordinates of cycle vectors in the homology basis at degree d."""
        h = self.dims[d]
        if vecs.shape[1] == 0 or self._reduce_basis[d].shape[1] == 0:
            if vecs.size and vecs.any():
                raise AssertionError("nonzero cycle in a degree with no cycles")
            return np.zeros((h, vecs.shape[1]), dtype=np.int64)
        x = solve_modp(self._reduce_basis[d], vecs, self.p)
        return x[:h]

    def mult_matrices(self, mono: dict[str, int], valid_to: int) -> list[np.ndarray]:
        """Matrices of multiplication by the cycle monomial on homology.

        Entry d maps H(d) -> H(d + deg(mono)); defined for d <= valid_to.
        No Koszul bookkeeping: at odd primes the monomial must be even.
        """
        if self.p != 2:
            for nm, e in mono.items():
                if self.ctx.gens[self.ctx.index[nm]].degree % 2 and e % 2:
                    raise AssertionError("odd multiplier needs sign bookkeeping")
        deg = sum(self.ctx.gens[self.ctx.index[nm]].degree * e for nm, e in mono.items())
        shift = [0] * len(self.ctx.gens)
        for nm, e in mono.items():
            shift[self.ctx.index[nm]] += e
        out = []
        for d in range(valid_to + 1):
            src = self.reps[d]
            tgt_basis = self.buckets[d + deg]
            pos = {m: i for i, m in enumerate(tgt_basis)}
            img = np.zeros((len(tgt_basis), src.shape[1]), dtype=np.int64)
            for j in range(src.shape[1]):
                for i in np.nonzero(src[:, j])[0]:
                    m = self.buckets[d][i]
                    ne = tuple(a + b for a, b in zip(m, shift))
                    key = pos.get(ne)
                    if key is not None:
                        img[key, j] = (img[key, j] + src[i, j]) % self.p
            out.append(self.reduce(d + deg, img))
        return out


def _explicit_component_dims(pres: Presentation, comp: list[PresGenerator], top: int) -> list[int]:
    dq = pres.qn_degree
    ctx = DerivationContext(pres, top + dq, gens=comp)
    buckets = window_bases(comp, top + dq)
    dims = []
    ranks: dict[int, int] = {}
    for d in range(top + 1):
        ranks[d] = rank_modp(_qn_block(ctx, buckets[d], buckets[d + dq]), pres.p)
    for d in range(top + 1):
        dims.append(len(buckets[d]) - ranks[d] - ranks.get(d - dq, 0))
    return dims


# ---- p = 2 adjunction chain ----


class _Level:
    """Homology of a partial component, with pending multiplication operators.

    basis entries at degree d are blocks (i, tag, e): the class of
    u^(2i) x (tag "c", x a cokernel representative at degree e) or
    u^(2i+1) x (tag "k", x a kernel vector), for the most recently adjoined
    generator u.  ops maps a token (name, exponent) to per-degree matrices.
    """

    def __init__(self, dims: list[int], window: int):
        self.dims = dims
        self.window = window
        self.ops: dict[tuple[str, int], tuple[int, list[np.ndarray]]] = {}


def _core_level(
    pres: Presentation,
    core: list[PresGenerator],
    window: int,
    tokens: list[tuple[str, int]],
) -> _Level:
    if not core:
        dims = [1 if d == 0 else 0 for d in range(window + 1)]
        level = _Level(dims, window)
        if tokens:
            raise AssertionError("no operators can be based on an empty core")
        return level
    eh = ExplicitHomology(pres, core, window)
    level = _Level(list(eh.dims), window)
    for name, exp in tokens:
        gen = next(g for g in core if g.name == name)
        deg = gen.degree * exp
        level.ops[(name, exp)] = (deg, eh.mult_matrices({name: exp}, window - deg))
    return level


def _cone_level(prev: _Level, du: int, op_key: tuple[str, int] | None, p: int) -> tuple["_ConeData", _Level]:
    """Adjoin a polynomial generator u of degree du with Q_n(u) = m.

    op_key indexes multiplication by m among prev.ops (None means m = 0).
    Valid degrees shrink by the operator degree, since kernels at the top
    of the window would need image data beyond it.
    """
    if op_key is None:
        dm = 0
        mats = None
        window = prev.window
    else:
        dm, mats = prev.ops[op_key]
        window = min(prev.window - dm, len(mats) - 1)
    ker: list[np.ndarray] = []
    nonpiv: list[list[int]] = []
    proj_rows: list[np.ndarray] = []
    for e in range(window + 1):
        dim = prev.dims[e]
        if mats is None:
            ker.append(np.eye(dim, dtype=np.int64))
            nonpiv.append(list(range(dim)))
            proj_rows.append(np.zeros((0, dim), dtype=np.int64))
            continue
        ker.append(nullspace_modp(mats[e], p))
        if e >= dm:
            r, piv = rref_modp(mats[e - dm].T, p)
            rows = r[: len(piv)]
            nonpiv.append([c for c in range(dim) if c not in piv])
            proj_rows.append(rows)
        else:
            nonpiv.append(list(range(dim)))
            proj_rows.append(np.zeros((0, dim), dtype=np.int64))
    data = _ConeData(du, window, ker, nonpiv, proj_rows, p, mats is None)
    dims = []
    for d in range(window + 1):
        total = 0
        i = 0
        while True:
            e_c = d - 2 * i * du
            if e_c < 0:
                break
            total += len(nonpiv[e_c])
            e_k = d - (2 * i + 1) * du
            if e_k >= 0:
                total += ker[e_k].shape[1]
            i += 1
        dims.append(total)
    return data, _Level(dims, window)


class _ConeData:
    """Layout and transition data of one adjunction stage."""

    def __init__(self, du, window, ker, nonpiv, proj_rows, p, zero_op):
        self.du = du
        self.window = window
        self.ker = ker
        self.nonpiv = nonpiv
        self.proj_rows = proj_rows
        self.p = p
        self.zero_op = zero_op
        self._layout: dict[int, list[tuple[int, str, int, int, int]]] = {}

    def layout(self, d: int) -> list[tuple[int, str, int, int, int]]:
        """Blocks (i, tag, e, offset, size) of the level basis at degree d."""
        if d not in self._layout:
            blocks = []
            off = 0
            i = 0
            while True:
                e_c = d - 2 * i * self.du
                if e_c < 0:
                    break
                size = len(self.nonpiv[e_c])
                if size:
                    blocks.append((i, "c", e_c, off, size))
                off += size
                e_k = d - (2 * i + 1) * self.du
                if e_k >= 0:
                    size = self.ker[e_k].shape[1]
                    if size:
                        blocks.append((i, "k", e_k, off, size))
                    off += size
                i += 1
            self._layout[d] = blocks
        return self._layout[d]

    def block_offset(self, d: int, i: int, tag: str) -> tuple[int, int] | None:
        for bi, btag, _e, off, size in self.layout(d):
            if bi == i and btag == tag:
                return off, size
        return None

    def coker_project(self, e: int, vecs: np.ndarray) -> np.ndarray:
        """Coordinates of prev-homology vectors in the cokernel basis at e."""
        rows = self.proj_rows[e]
        v = vecs % self.p
        for row in rows:
            lead = int(np.nonzero(row)[0][0])
            v = (v - np.outer(row, v[lead])) % self.p
        return v[self.nonpiv[e]]

    def propagate(self, prev_level: _Level, key: tuple[str, int], new_level: _Level) -> tuple[int, list[np.ndarray]]:
        """Express a pending prev-level operator on the new level's basis."""
        deg, mats = prev_level.ops[key]
        valid = min(self.window - deg, len(mats) - 1)
        out = []
        for d in range(valid + 1):
            a = np.zeros((new_level.dims[d + deg], new_level.dims[d]), dtype=np.int64)
            for i, tag, e, off, size in self.layout(d):
                tgt = self.block_offset(d + deg, i, tag)
                if tgt is None:
                    continue
                toff, tsize = tgt
                if tag == "c":
                    lift = np.zeros((mats[e].shape[1], size), dtype=np.int64)
                    for j, c in enumerate(self.nonpiv[e]):
                        lift[c, j] = 1
                    img = mats[e] @ lift % self.p
                    coords = self.coker_project(e + deg, img)
                else:
                    img = mats[e] @ self.ker[e] % self.p
                    kb = self.ker[e + deg]
                    coords = (
                        solve_modp(kb, img, self.p)
                        if kb.shape[1]
                        else np.zeros((0, size), dtype=np.int64)
                    )
                a[toff : toff + tsize, off : off + size] = coords
            out.append(a)
        return deg, out

    def materialize_power(self, exp: int, new_level: _Level) -> tuple[int, list[np.ndarray]]:
        """Multiplication by u^exp on this level (u the adjoined generator).

        Even powers shift the block index; the odd unit step is only valid
        when the cone differential was zero (then every u^a x is a cycle).
        """
        deg = exp * self.du
        half, odd = divmod(exp, 2)
        if odd and not self.zero_op:
            raise AssertionError("odd power of a cone generator with nonzero differential")
        valid = self.window - deg
        out = []
        for d in range(valid + 1):
            a = np.zeros((new_level.dims[d + deg], new_level.dims[d]), dtype=np.int64)
            for i, tag, e, off, size in self.layout(d):
                if not odd:
                    tgt = self.block_offset(d + deg, i + half, tag)
                else:
                    # with zero differential, coker and ker bases are both
                    # the identity, so the unit step swaps the tag directly
                    if tag == "c":
                        tgt = self.block_offset(d + deg, i + half, "k")
                    else:
                        tgt = self.block_offset(d + deg, i + half + 1, "c")
                if tgt is None:
                    continue
                toff, tsize = tgt
                m = min(size, tsize)
                for j in range(m):
                    a[toff + j, off + j] = 1
            out.append(a)
        return deg, out


def _p2_component_dims(pres: Presentation, comp: list[PresGenerator], hi: int) -> list[int]:
    if pres.p != 2:
        raise AssertionError("adjunction chain is the p = 2 route")
    names = {g.name for g in comp}
    deg_of = {g.name: g.degree for g in comp}
    img: dict[str, tuple[str, int] | None] = {}
    for g in comp:
        im = pres.qn_on_generator(g.name)
        # a target beyond the generator horizon only matters above hi
        img[g.name] = im if im is not None and im[0] in names else None
    # generators on a Q_n-cycle (mutual or self coupling) form the core
    core_names: set[str] = set()
    for g in comp:
        seen: list[str] = []
        cur: str | None = g.name
        while cur is not None and cur not in seen:
            seen.append(cur)
            nxt = img.get(cur)
            cur = nxt[0] if nxt else None
        if cur is not None:
            core_names.update(seen[seen.index(cur) :])
    core = sorted((g for g in comp if g.name in core_names), key=lambda g: g.degree)
    placed = set(core_names)
    order: list[PresGenerator] = []
    pool = sorted((g for g in comp if g.name not in core_names), key=lambda g: g.degree)
    while pool:
        for k, g in enumerate(pool):
            base = img[g.name][0] if img[g.name] else None
            if base is None or base in placed:
                order.append(pool.pop(k))
                placed.add(g.name)
                break
        else:
            raise AssertionError("adjunction order blocked")
    steps: list[tuple[PresGenerator, tuple[str, int] | None]] = [
        (g, img[g.name]) for g in order
    ]
    budget = sum(deg_of[t[0]] * t[1] for _g, t in steps if t is not None)
    window = hi + budget
    core_tokens = [t for _g, t in steps if t is not None and t[0] in core_names]
    level = _core_level(pres, core, window, core_tokens)
    for idx, (g, token) in enumerate(steps):
        data, new_level = _cone_level(level, g.degree, token, 2)
        # carry the operators still needed by later steps
        for _g2, t2 in steps[idx + 1 :]:
            if t2 is None or t2 in new_level.ops:
                continue
            if t2[0] == g.name:
                new_level.ops[t2] = data.materialize_power(t2[1], new_level)
            elif t2 in level.ops:
                new_level.ops[t2] = data.propagate(level, t2, new_level)
        level = new_level
    if level.window < hi:
        raise WindowError("adjunction chain ran out of degree window")
    return level.dims[: hi + 1]


# ---------------------------------------------------------------------------
# reports


@dataclass
class QnHomologyReport:
    """Trivial/free split of H* as a module over E[Q_n].

    total, trivial and free_rank are per-degree lists on [0, max_degree];
    each free summand spans its generator degree d and d + (2p^n - 1), so
    total(d) = trivial(d) + free_rank(d) + free_rank(d - (2p^n - 1)).
    """

    p: int
    n: int
    variance: str
    max_degree: int
    mode: str
    total: list[int]
    trivial: list[int]
    free_rank: list[int]
    trivial_reps: dict[int, list[str]] | None

    def check_invariant(self) -> bool:
        dq = 2 * self.p**self.n - 1
        for d in range(self.max_degree + 1):
            lower = self.free_rank[d - dq] if d >= dq else 0
            if self.total[d] != self.trivial[d] + self.free_rank[d] + lower:
                return False
            if self.free_rank[d] < 0 or self.trivial[d] < 0:
                return False
        return True

    def trivial_series(self) -> PoincareSeries:
        return PoincareSeries(0, self.max_degree, tuple(self.trivial))


def total_dims(pres: Presentation, hi: int) -> list[int]:
    """Per-degree dimensions of the full (co)homology of K(Z_p, 2)."""
    dims = [0] * (hi + 1)
    dims[0] = 1
    for g in pres.generators(hi):
        if g.exp_kind == "P":
            # multiply by 1/(1 - t^deg): running prefix sums with stride
            for d in range(g.degree, hi + 1):
                dims[d] += dims[d - g.degree]
        else:
            for d in range(hi, g.degree - 1, -1):
                dims[d] += dims[d - g.degree]
    return dims


def default_window(n: int) -> int:
    return 600 if n == 1 else 2500


def qn_homology(
    p: int,
    n: int,
    variance: str = "cohomology",
    max_degree: int | None = None,
    mode: str = "factored",
) -> QnHomologyReport:
    pres = build(p, n, variance)
    hi = default_window(n) if max_degree is None else max_degree
    if hi < 2:
        raise ValueError("max_degree must be at least 2")
    total = total_dims(pres, hi)
    if mode == "direct":
        triv, reps = _direct_trivial(pres, hi, with_reps=True)
    elif mode == "factored":
        series = [1] + [0] * hi
        for comp in components(pres, hi + pres.qn_degree):
            if p == 2:
                cd = _p2_component_dims(pres, comp, hi)
            else:
                if len(comp) > 3:
                    raise AssertionError("odd-prime components have at most 3 generators")
                cd = _explicit_component_dims(pres, comp, hi)
            out = [0] * (hi + 1)
            for d1, a in enumerate(series):
                if a:
                    for d2 in range(0, hi + 1 - d1):
                        if cd[d2]:
                            out[d1 + d2] += a * cd[d2]
            series = out
        triv = series
        reps = None
    else:
        raise ValueError(f"mode must be direct or factored, got {mode!r}")
    dq = pres.qn_degree
    free = [0] * (hi + 1)
    for d in range(hi + 1):
        lower = free[d - dq] if d >= dq else 0
        free[d] = total[d] - triv[d] - lower
        if free[d] < 0:
            raise AssertionError(f"negative free rank at degree {d}")
    return QnHomologyReport(p, n, variance, hi, mode, total, triv, free, reps)


# ---------------------------------------------------------------------------
# the w-elements


@dataclass(frozen=True)
class WElement:
    index2: int  # doubled index: 2(n+j) or 2(n+j)+1
    name: str
    degree: int
    poly: tuple[tuple[tuple[int, ...], int], ...]


def w_name(index2: int) -> str:
    if index2 % 2 == 0:
        return f"w_{index2 // 2}"
    return f"w_{index2}/2"


class WFactory:
    """Builds the w-elements as explicit cycles in the presentation."""

    def __init__(self, pres: Presentation, max_degree: int):
        from . import numerology

        self.pres = pres
        self.numerology = numerology
        self.ctx = DerivationContext(pres, max_degree + 2 * pres.qn_degree)
        self.max_degree = max_degree

    def _mono(self, terms: dict[str, int], coeff: int = 1) -> dict[tuple[int, ...], int]:
        exps = [0] * len(self.ctx.gens)
        for nm, e in terms.items():
            exps[self.ctx.index[nm]] += e
        return {tuple(exps): coeff % self.pres.p}

    def _z_power(self, i: int, k: int) -> dict[str, int]:
        # at p = 2 the presentation has no z generators; z_i = u_{i-1}^2
        if k == 0:
            return {}
        if self.pres.p == 2:
            return {f"u_{i - 1}": 2 * k}
        return {f"z_{i}": k}

    def w_poly(self, m: int) -> dict[tuple[int, ...], int]:
        """The cycle w_m (integer index), for m >= n."""
        p, n = self.pres.p, self.pres.n
        j = m - n
        if j < 0:
            raise ValueError("w indices start at n")
        if j == 0:
            return self._mono({f"u_{n}": 1})
        if j <= n:
            first = self._mono({f"u_{n + j}": 1})
            tail = {f"u_{n - j}": 1}
            for nm, e in self._z_power(j, p**n - p ** (n - j)).items():
                tail[nm] = tail.get(nm, 0) + e
            # the sign makes the two Leibniz images cancel; at p = 2 it is +
            return _poly_add(first, self._mono(tail, -1), p)
        jj = j - (n + 1)
        if p == 2 and jj == 0:
            tail = {"i2": 1, f"u_{n}": 2 ** (n + 1) - 1}
            return _poly_add(self._mono({f"u_{2 * n + 1}": 1}), self._mono(tail), p)
        y = self._mono({"i2": (p - 1) * p**jj})
        zpart = self._mono(self._z_power(n + jj + 1, p**n - 1))
        return self.ctx.mul_poly(self.ctx.mul_poly(y, self.w_poly(n + jj)), zpart)

    def w_half_poly(self, m2: int) -> dict[tuple[int, ...], int]:
        """The cycle w_{m + 1/2} for odd doubled index m2 = 2m + 1."""
        p = self.pres.p
        m = m2 // 2
        j = m - self.pres.n
        y = self._mono({"i2": (p - 1) * p**j})
        return self.ctx.mul_poly(y, self.w_poly(m))

    def element(self, index2: int) -> WElement:
        deg = self.numerology.degree_w(index2, self.pres.p, self.pres.n)
        poly = (
            self.w_poly(index2 // 2) if index2 % 2 == 0 else self.w_half_poly(index2)
        )
        for exps in poly:
            if self.ctx.degree(exps) != deg:
                raise AssertionError(f"degree mismatch building {w_name(index2)}")
        return WElement(index2, w_name(index2), deg, tuple(sorted(poly.items())))


def _poly_add(
    a: dict[tuple[int, ...], int], b: dict[tuple[int, ...], int], p: int
) -> dict[tuple[int, ...], int]:
    out = dict(a)
    for k, v in b.items():
        s = (out.get(k, 0) + v) % p
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _random_monomial(rng, ctx: DerivationContext, gens: list[PresGenerator], room: int) -> tuple[int, ...]:
    exps = [0] * len(ctx.gens)
    for g in rng.sample(gens, len(gens)):
        cap = room // g.degree
        if g.exp_kind == "E":
            cap = min(cap, 1)
        e = rng.randint(0, cap)
        exps[ctx.index[g.name]] = e
        room -= e * g.degree
    return tuple(exps)


def qn_square_check(
    p: int,
    n: int,
    max_degree: int,
    mixed_samples: int = 2000,
    component_budget: int = 1_000_000,
    seed: int = 0,
) -> tuple[int, list[tuple[int, ...]]]:
    """Check Q_n(Q_n(m)) = 0 through the implemented derivation.

    Per Q_n-coupled tensor component, every monomial up to max_degree is
    swept when the count fits component_budget.  One p=2 component grows to
    tens of millions of monomials; there the sweep covers all monomials with
    every exponent <= 2p-1 (the Leibniz coefficients read exponents only
    mod p, and exterior caps only read presence, so these exhaust every
    cancellation class) plus seeded full-range samples.  Products across
    components satisfy the identity once each factor does (the cross terms
    of a derivation square cancel), but random mixed monomials are pushed
    through the code path as well.  Returns (monomials checked, failures).
    """
    import random

    pres = build(p, n)
    dq = pres.qn_degree
    rng = random.Random(seed)
    checked = 0
    failures: list[tuple[int, ...]] = []

    def run(ctx: DerivationContext, m: tuple[int, ...]) -> None:
        nonlocal checked
        q1 = ctx.qn_monomial(m)
        if q1 and ctx.qn_poly(q1):
            failures.append(m)
        checked += 1

    for comp in components(pres, max_degree + 2 * dq):
        ctx = DerivationContext(pres, max_degree + 2 * dq, gens=comp, missing_as_zero=True)
        count = [0] * (max_degree + 1)
        count[0] = 1
        for g in comp:
            if g.exp_kind == "P":
                for d in range(g.degree, max_degree + 1):
                    count[d] += count[d - g.degree]
            else:
                for d in range(max_degree, g.degree - 1, -1):
                    count[d] += count[d - g.degree]
        if sum(count) <= component_budget:
            for bucket in window_bases(comp, max_degree):
                for m in bucket:
                    run(ctx, m)
        else:
            caps = [min(2 * p - 1, max_degree // g.degree) for g in comp]
            exps = [0] * len(comp)

            def sweep(k: int, deg: int) -> None:
                if k == len(comp):
                    run(ctx, tuple(exps))
                    return
                for e in range(caps[k] + 1):
                    if deg + e * comp[k].degree > max_degree:
                        break
                    exps[k] = e
                    sweep(k + 1, deg + e * comp[k].degree)
                exps[k] = 0

            sweep(0, 0)
            for _ in range(10 * mixed_samples):
                run(ctx, _random_monomial(rng, ctx, list(comp), max_degree))
    ctx = DerivationContext(pres, max_degree + 2 * dq, missing_as_zero=True)
    full_gens = [g for g in ctx.gens if g.degree <= max_degree]
    for _ in range(mixed_samples):
        run(ctx, _random_monomial(rng, ctx, full_gens, max_degree))
    return checked, failures


def w_elements(p: int, n: int, max_degree: int) -> tuple[WFactory, list[WElement]]:
    """All w-elements (integer and half index) with degree inside the window."""
    from . import numerology

    pres = build(p, n)
    factory = WFactory(pres, max_degree)
    out = []
    index2 = 2 * n
    while numerology.degree_w(index2, p, n) <= max_degree:
        out.append(factory.element(index2))
        index2 += 1
    return factory, out
