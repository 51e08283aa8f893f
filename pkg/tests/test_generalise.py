import itertools
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import merge_oracle as mo
import worked_example as we
from deep.dataset import CrossTable
from deep.generalise import (
    GeneralisationError,
    GeneraliseConfig,
    can_merge,
    cross_generalise,
    run_generalisation,
    star_generalise,
)
from deep.patterns import DescriptorValue as V
from deep.patterns import Pattern
from deep.stats import Sign
from deep.structure import StructureResult

VARS = (0, 1, 2, 3)


def pat(values, sign, table=(10, 10, 10, 10)):
    return Pattern(VARS[: len(values)], values, sign, CrossTable(*table))


def structure(z=(0, 1), c=(2, 3), corr=None):
    corr = corr or {v: 0.1 * (v + 1) for v in z + c}
    return StructureResult(tuple(z) + tuple(c), z, c, corr)


def test_golden_worked_example():
    s = we.structure()
    init = we.initial_patterns()
    t0 = time.perf_counter()
    out = run_generalisation(init, s)
    assert time.perf_counter() - t0 < 0.05
    assert {str(p) for p in out} == we.EXPECTED
    tables = {str(p): p.table.as_tuple() for p in out}
    assert tables["(1,1,*,0;+)"] == (80, 20, 20, 80)
    assert tables["(0,0,x,1;+)"] == (26, 14, 14, 26)


def test_can_merge_examples():
    assert can_merge(pat((1, 1, 0, 0), "+"), pat((1, 1, 1, 0), "+")) == 2
    assert can_merge(pat((1, 0, 0, 1), "+"), pat((0, 0, 1, 0), "-")) is None
    assert can_merge(pat((1, 2, 1, 1), "-"), pat((1, 1, 1, 1), "-")) is None
    assert can_merge(pat((1, 3, 1, 1), "?"), pat((1, 2, 1, 1), "?")) is None
    # same sign but two literal differences
    assert can_merge(pat((1, 1, 0, 0), "+"), pat((0, 1, 1, 0), "+")) is None
    # wildcard of the same kind must align
    assert can_merge(pat((0, 3, 1), "+"), pat((1, 3, 1), "+")) == 0
    with pytest.raises(GeneralisationError):
        can_merge(pat((1,), "+"), Pattern((5,), (1,), "+", CrossTable()))


def test_star_generalise():
    p = star_generalise(pat((1, 1, 0, 0), "+"), pat((1, 1, 1, 0), "+"), 2)
    assert str(p) == "(1,1,*,0;+)"
    d = star_generalise(pat((1, 0, 1, 1), "-"), pat((1, 1, 1, 1), "-"), 1)
    assert str(d) == "(1,*,1,1;-)"
    m = star_generalise(pat((0,), "+", (10, 10, 5, 15)), pat((1,), "+", (20, 20, 10, 30)), 0)
    assert m.table == CrossTable(30, 30, 15, 45)
    assert m.support == 40 + 80
    with pytest.raises(GeneralisationError):
        star_generalise(pat((0,), "?"), pat((1,), "?"), 0)
    with pytest.raises(GeneralisationError):
        star_generalise(pat((0, 0), "+"), pat((1, 0), "+"), 1)


def test_cross_generalise():
    p7, p8 = we.initial_patterns()[6:]
    e = cross_generalise(p7, p8, 2, adjustment_set=(0, 1))
    assert str(e) == "(0,0,x,1;+)"
    weak = cross_generalise(pat((0,), "?", (3, 2, 2, 3)), pat((1,), "?", (3, 2, 2, 3)), 0)
    assert weak.sign is Sign.UNCERTAIN
    with pytest.raises(GeneralisationError):
        cross_generalise(pat((0, 1), "?"), pat((1, 1), "?"), 0, adjustment_set=(0,))
    with pytest.raises(GeneralisationError):
        cross_generalise(pat((0,), "+"), pat((1,), "+"), 0)


def test_no_shared_sign_is_fixpoint():
    pats = [pat((0, 0), "+"), pat((0, 1), "-"), pat((1, 1), "?")]
    out = run_generalisation(pats, structure((), (0, 1)))
    assert sorted(map(str, out)) == sorted(map(str, pats))


def test_theta_zero_returns_input():
    out = run_generalisation(we.initial_patterns(), structure(), GeneraliseConfig(theta=0.0))
    assert sorted(map(str, out)) == sorted(map(str, we.initial_patterns()))


def test_max_merges_stops_after_lowest_correlation_merge():
    s = structure(corr={0: 0.9, 1: 0.2, 2: 0.4, 3: 0.8})
    out = run_generalisation(we.initial_patterns(), s, GeneraliseConfig(max_merges_k=1))
    assert len(out) == 7
    assert "(1,*,1,1;-)" in {str(p) for p in out}


def test_cross_result_can_star_merge_afterwards():
    unc = (13, 7, 7, 13)
    pats = [pat(v, "?", unc) for v in [(0, 0), (0, 1), (1, 0), (1, 1)]]
    s = StructureResult((0, 1), (), (0, 1), {0: 0.5, 1: 0.1})
    out = run_generalisation(pats, s)
    assert [str(p) for p in out] == ["(*,x;+)"]
    assert out[0].table == CrossTable(52, 28, 28, 52)


PALETTE = [(40, 10, 10, 40), (10, 40, 40, 10), (13, 7, 7, 13), (7, 13, 13, 7), (3, 2, 2, 3), (5, 5, 5, 5)]


@st.composite
def instances(draw):
    k = draw(st.integers(1, 4))
    cells = draw(st.lists(st.sampled_from(list(itertools.product((0, 1), repeat=k))),
                          min_size=1, max_size=10, unique=True))
    tables = draw(st.lists(st.sampled_from(PALETTE), min_size=len(cells), max_size=len(cells)))
    z = tuple(draw(st.lists(st.integers(0, k - 1), unique=True, max_size=k)))
    corr = draw(st.lists(st.floats(0.01, 0.99), min_size=k, max_size=k))
    return k, cells, tables, tuple(sorted(z)), corr


def _build(k, cells, tables, z, corr):
    pats = [Pattern(tuple(range(k)), c, mo.sign(t), CrossTable(*t)) for c, t in zip(cells, tables)]
    c = tuple(v for v in range(k) if v not in z)
    return pats, StructureResult(tuple(range(k)), z, c, dict(enumerate(corr)))


@settings(max_examples=150, deadline=None)
@given(instances())
def test_greedy_matches_a_brute_force_maximal_state(inst):
    pats, s = _build(*inst)
    out = run_generalisation(pats, s)
    finals = mo.maximal_states([mo.as_tuple(p) for p in pats], set(s.adjustment_set_z))
    assert frozenset(mo.as_tuple(p) for p in out) in finals


@settings(max_examples=150, deadline=None)
@given(instances())
def test_generalisation_invariants(inst):
    pats, s = _build(*inst)
    out = run_generalisation(pats, s)
    # support conservation and monotone progress
    assert sum(p.support for p in out) == sum(p.support for p in pats)
    assert 1 <= len(out) <= len(pats)
    # Z-integrity
    for p in out:
        assert all(p.values[i] is not V.CROSS for i in s.adjustment_set_z)
    # partition preserved: expansions of outputs are disjoint and cover the inputs
    cover = [mo.expand(p.descriptor) for p in out]
    assert sum(map(len, cover)) == len(set().union(*cover))
    assert set().union(*cover) == {"".join(map(str, map(int, p.values))) for p in pats}
    # star-only patterns agree in sign with every constituent
    signs = {"".join(str(int(v)) for v in p.values): p.sign for p in pats}
    for p in out:
        if V.CROSS not in p.values:
            assert {signs[c] for c in mo.expand(p.descriptor)} == {p.sign}
