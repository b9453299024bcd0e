"""Presentation, Q_n derivation and Q_n-homology checks.

Frozen dimension prefixes come from two independent in-repo routes (the
per-degree kernel/image computation and the tensor-component factorization)
agreeing before freezing.
"""

import numpy as np
import pytest

from morava_k2 import km2
from morava_k2.graded_algebra import E, Factor, Generator, P, TensorExpression


def gen_degrees(p, n, top):
    pres = km2.build(p, n)
    return {g.name: g.degree for g in pres.generators(top)}


def test_generator_degrees_odd_p():
    assert gen_degrees(3, 1, 30) == {
        "i2": 2, "z_1": 8, "z_2": 20, "u_0": 3, "u_1": 7, "u_2": 19,
    }
    d32 = gen_degrees(3, 2, 60)
    assert d32["u_2"] == 19
    assert d32["z_1"] == 8
    assert d32["z_2"] == 20
    assert d32["z_3"] == 56


def test_generator_degrees_p2():
    # no z generators at p=2; u_i^2 plays the role of z_{i+1}
    assert gen_degrees(2, 1, 20) == {"i2": 2, "u_0": 3, "u_1": 5, "u_2": 9, "u_3": 17}


def test_build_rejects_bad_input():
    with pytest.raises(ValueError):
        km2.build(4, 1)
    with pytest.raises(ValueError):
        km2.build(1, 1)
    with pytest.raises(ValueError):
        km2.build(3, 0)
    with pytest.raises(ValueError):
        km2.build(3, 1, "both")


def test_qn_on_generator_odd_p():
    pres = km2.build(3, 1)
    assert pres.qn_on_generator("i2") == ("u_1", 1)
    assert pres.qn_on_generator("u_0") == ("z_1", 1)
    assert pres.qn_on_generator("u_1") is None
    assert pres.qn_on_generator("u_2") == ("z_1", 3)
    assert pres.qn_on_generator("z_1") is None
    pres2 = km2.build(3, 2)
    assert pres2.qn_on_generator("u_1") == ("z_1", 3)
    assert pres2.qn_on_generator("u_4") == ("z_2", 9)


def test_qn_on_generator_p2():
    pres = km2.build(2, 2)
    assert pres.qn_on_generator("i2") == ("u_2", 1)
    assert pres.qn_on_generator("u_0") == ("u_1", 2)
    assert pres.qn_on_generator("u_1") == ("u_0", 4)
    assert pres.qn_on_generator("u_2") is None
    assert pres.qn_on_generator("u_5") == ("u_2", 8)


def test_qn_matrix_single_generator_degrees():
    """Degree 2 holds only i2, mapping to u_1 with coefficient 1."""
    pres = km2.build(3, 1)
    m = km2.qn_matrix(pres, 2, 40)
    gens = pres.generators(40)
    basis7 = km2.window_bases(gens, 40)[7]
    assert m.shape == (len(basis7), 1)
    u1 = next(i for i, g in enumerate(gens) if g.name == "u_1")
    expected_row = basis7.index(tuple(1 if k == u1 else 0 for k in range(len(gens))))
    assert m[expected_row, 0] == 1
    assert np.count_nonzero(m) == 1

    m3 = km2.qn_matrix(pres, 3, 40)
    basis8 = km2.window_bases(gens, 40)[8]
    z1 = next(i for i, g in enumerate(gens) if g.name == "z_1")
    row = basis8.index(tuple(1 if k == z1 else 0 for k in range(len(gens))))
    assert m3[row, 0] == 1
    assert np.count_nonzero(m3) == 1


def test_qn_matrix_exterior_square_kill():
    # Q_1(i2 u_1) = u_1 u_1 - 0 = 0
    pres = km2.build(3, 1)
    gens = pres.generators(40)
    basis9 = km2.window_bases(gens, 40)[9]
    i2 = next(i for i, g in enumerate(gens) if g.name == "i2")
    u1 = next(i for i, g in enumerate(gens) if g.name == "u_1")
    exps = [0] * len(gens)
    exps[i2] = 1
    exps[u1] = 1
    col = basis9.index(tuple(exps))
    m = km2.qn_matrix(pres, 9, 40)
    assert not m[:, col].any()


def test_qn_matrix_window_error():
    pres = km2.build(3, 1)
    with pytest.raises(km2.WindowError):
        km2.qn_matrix(pres, 10, 12)


def test_qn_matrix_homology_is_transpose():
    pres_c = km2.build(3, 1, "cohomology")
    pres_h = km2.build(3, 1, "homology")
    up = km2.qn_matrix(pres_c, 8, 40)
    down = km2.qn_matrix(pres_h, 13, 40)
    assert np.array_equal(down, up.T % 3)
    # below the derivation degree the homology target space is empty
    low = km2.qn_matrix(pres_h, 3, 40)
    assert low.shape[0] == 0


def test_derivation_reorder_sign():
    """Inserting u_1 past u_0 anticommutes: Q(i2 u_0) = -u_0 u_1 + i2 z_1."""
    pres = km2.build(3, 1)
    ctx = km2.DerivationContext(pres, 30)
    i2 = ctx.index["i2"]
    u0 = ctx.index["u_0"]
    u1 = ctx.index["u_1"]
    z1 = ctx.index["z_1"]
    exps = [0] * len(ctx.gens)
    exps[i2] = 1
    exps[u0] = 1
    out = ctx.qn_monomial(tuple(exps))
    e1 = [0] * len(ctx.gens)
    e1[u0] = 1
    e1[u1] = 1
    e2 = [0] * len(ctx.gens)
    e2[i2] = 1
    e2[z1] = 1
    assert out == {tuple(e1): 2, tuple(e2): 1}


def test_derivation_window_error_when_image_gen_missing():
    pres = km2.build(3, 1)
    ctx = km2.DerivationContext(pres, 4)
    exps = tuple(1 if g.name == "i2" else 0 for g in ctx.gens)
    with pytest.raises(km2.WindowError):
        ctx.qn_monomial(exps)


def test_qn_square_zero_small_windows():
    for p, n in [(2, 1), (3, 1), (5, 1), (2, 2), (3, 2)]:
        checked, failures = km2.qn_square_check(p, n, 60, mixed_samples=200)
        assert failures == []
        assert checked > 100


def test_trivial_homology_31_reference_degrees():
    """The first trivial classes at (3,1) are 1, y_1, y_1 w-half, y_1^2."""
    rep = km2.qn_homology(3, 1, max_degree=20, mode="direct")
    assert [rep.trivial[d] for d in (0, 6, 11, 12)] == [1, 1, 1, 1]
    assert sum(rep.trivial[:13]) == 4
    assert rep.trivial_reps[0] == ["1"]
    assert rep.trivial_reps[6] == ["i2^3"]
    assert rep.trivial_reps[11] == ["i2^2 u_1"]
    assert rep.trivial_reps[12] == ["i2^6"]
    assert rep.free_rank[2] == 1
    assert rep.check_invariant()


def test_homology_variance_same_dims_starred_reps():
    c = km2.qn_homology(3, 1, max_degree=20, mode="direct")
    h = km2.qn_homology(3, 1, "homology", max_degree=20, mode="direct")
    assert c.trivial == h.trivial
    assert c.free_rank == h.free_rank
    assert h.trivial_reps[6] == ["(i2^3)*"]


def test_factored_matches_direct():
    for p, n in [(2, 1), (3, 1), (5, 1), (2, 2), (3, 2)]:
        direct = km2.qn_homology(p, n, max_degree=55, mode="direct")
        fact = km2.qn_homology(p, n, max_degree=55, mode="factored")
        assert direct.trivial == fact.trivial, (p, n)
        assert direct.free_rank == fact.free_rank, (p, n)
        assert fact.check_invariant()


def test_trivial_prefix_frozen():
    f21 = km2.qn_homology(2, 1, max_degree=19, mode="factored")
    assert f21.trivial == [1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 2, 1, 0]
    f22 = km2.qn_homology(2, 2, max_degree=19, mode="factored")
    assert f22.trivial == [1, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 1, 0]
    f32 = km2.qn_homology(3, 2, max_degree=19, mode="factored")
    assert f32.trivial == [1, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0]


def test_total_dims_matches_series_route():
    pres = km2.build(3, 1)
    factors = []
    for i, g in enumerate(pres.generators(40)):
        kind = P if g.exp_kind == "P" else E
        factors.append(Factor(kind, Generator(i, g.name, g.degree)))
    series = TensorExpression(tuple(factors)).poincare(0, 40)
    assert km2.total_dims(pres, 40) == [series.dim(d) for d in range(41)]


def test_default_window():
    assert km2.default_window(1) == 600
    assert km2.default_window(2) == 2500


def test_report_invariant_is_checked():
    rep = km2.qn_homology(5, 1, max_degree=40, mode="factored")
    assert rep.check_invariant()
    rep.free_rank[3] += 1
    assert not rep.check_invariant()


def test_direct_mode_parallel_matches(monkeypatch):
    serial = km2.qn_homology(3, 1, max_degree=30, mode="direct")
    monkeypatch.setenv("MORAVA_THREADS", "2")
    par = km2.qn_homology(3, 1, max_degree=30, mode="direct")
    assert serial.trivial == par.trivial
    assert serial.trivial_reps == par.trivial_reps


def test_w_element_degrees_and_names():
    _, ws = km2.w_elements(3, 1, 400)
    assert [(w.name, w.degree) for w in ws[:6]] == [
        ("w_1", 7), ("w_3/2", 11), ("w_2", 19), ("w_5/2", 31),
        ("w_3", 51), ("w_7/2", 87),
    ]
    _, ws21 = km2.w_elements(2, 1, 30)
    assert [(w.name, w.degree) for w in ws21] == [
        ("w_1", 5), ("w_3/2", 7), ("w_2", 9), ("w_5/2", 13),
        ("w_3", 17), ("w_7/2", 25),
    ]
    _, ws32 = km2.w_elements(3, 2, 200)
    assert [(w.name, w.degree) for w in ws32] == [
        ("w_2", 19), ("w_5/2", 23), ("w_3", 55), ("w_7/2", 67), ("w_4", 163), ("w_9/2", 199),
    ]


def test_integer_w_elements_are_cycles():
    for p, n, hi in [(2, 1, 120), (3, 1, 300), (5, 1, 250), (2, 2, 130), (3, 2, 500)]:
        factory, ws = km2.w_elements(p, n, hi)
        for w in ws:
            if w.index2 % 2 == 0:
                assert factory.ctx.qn_poly(dict(w.poly)) == {}, (p, n, w.name)


def test_half_w_cycles_and_the_p2_exception():
    # at odd p every y_j^{p-1} w is a cycle; at p=2 only j=0 fails, with
    # Q(i2 u_n) landing on u_n^2
    for p, n, hi in [(3, 1, 300), (5, 1, 250), (3, 2, 500)]:
        factory, ws = km2.w_elements(p, n, hi)
        for w in ws:
            if w.index2 % 2 == 1:
                assert factory.ctx.qn_poly(dict(w.poly)) == {}, (p, n, w.name)
    factory, ws = km2.w_elements(2, 1, 120)
    for w in ws:
        if w.index2 % 2 == 1:
            out = factory.ctx.qn_poly(dict(w.poly))
            if w.index2 == 3:
                (key,) = out
                assert factory.ctx.render(key) == "u_1^2"
            else:
                assert out == {}


def test_w_first_family_shape():
    # w_2 at (3,1) is u_2 - u_0 z_1^2
    factory, ws = km2.w_elements(3, 1, 60)
    w2 = next(w for w in ws if w.name == "w_2")
    terms = {factory.ctx.render(m): c for m, c in w2.poly}
    assert terms == {"u_2": 1, "z_1^2 u_0": 2}


def test_components_partition():
    pres = km2.build(3, 2)
    comps = km2.components(pres, 180)
    names = [sorted(g.name for g in c) for c in comps]
    assert ["i2", "u_2"] in names
    assert ["u_1", "u_3", "z_1"] in names
    assert ["u_0", "u_4", "z_2"] in names
    assert all(len(c) <= 3 for c in comps)
    total = sum(len(c) for c in comps)
    assert total == len(pres.generators(180))
