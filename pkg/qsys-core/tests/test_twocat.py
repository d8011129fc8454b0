import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src import config
from src.engine import bundled
from src.engine.errors import DomainMismatch, ObjectMismatch, StructuralError
from src.engine.linalg import seeded_rng
from src.engine.twocat import (
    Presentation,
    Simple,
    TwoCell,
    associator,
    dagger,
    decomposition,
    dsum,
    id2,
    split_idempotent,
    tensor_1cells,
    tensor_2cells,
    unitor_l,
    unitor_r,
    validate,
    vcompose,
)


@pytest.mark.parametrize("name", sorted(set(bundled.PRESENTATIONS) - bundled.NEGATIVE_EXAMPLES))
def test_bundled_presentations_validate(name, tol):
    report = validate(bundled.bundled_presentation(name), tol)
    assert report.passed, report.failed_ids()
    assert report.max_residual() < 1e-9


def test_perturbed_ising_fails_pentagons_through_the_entry(tol):
    report = validate(bundled.bundled_presentation("perturbed_ising"), tol)
    failed = report.failed_ids()
    assert "F-unitary[sigma,sigma,sigma;sigma]" in failed
    pentagons = [check_id for check_id in failed if check_id.startswith("pentagon[")]
    assert pentagons
    assert all(check_id.startswith(("pentagon[", "F-unitary[sigma,sigma,sigma;sigma]")) for check_id in failed)
    assert max(report.get(check_id).residual for check_id in pentagons) > 0.1
    assert report.get("pentagon[1,1,1,1]").passed


def test_unknown_bundled_presentation():
    with pytest.raises(ValueError, match="No bundled presentation"):
        bundled.bundled_presentation("su2")


def test_missing_f_entry_becomes_failing_row(tol):
    pres = Presentation(
        ("*",),
        (Simple("1", "*", "*"),),
        {"*": "1"},
        {("1", "1"): {"1": 1}},
    )
    report = validate(pres, tol)
    assert not report.passed
    assert report.get("pentagon[1,1,1,1]").residual == math.inf


def test_presentation_structure_errors():
    with pytest.raises(StructuralError):
        Presentation((), (), {}, {})
    with pytest.raises(StructuralError):
        Presentation(("a", "b"), (Simple("x", "a", "b"),), {"a": "x", "b": "x"}, {})
    with pytest.raises(StructuralError):
        Presentation(("*",), (Simple("1", "*", "*"), Simple("1", "*", "*")), {"*": "1"}, {})


def test_cell_endpoints_are_checked(z2):
    with pytest.raises(ObjectMismatch):
        z2.cell({})
    zero = z2.cell({}, "*", "*")
    assert zero.dim == 0
    assert zero.label() == "0[*->*]"


def test_canonical_decomposition_order(z2):
    q = z2.cell({"1": 1, "g": 1})
    lists = decomposition(q, q)
    assert lists["1"] == [("1", 0, "1", 0, 0), ("g", 0, "g", 0, 0)]
    assert lists["g"] == [("1", 0, "g", 0, 0), ("g", 0, "1", 0, 0)]
    assert tensor_1cells(q, q).mult == {"1": 2, "g": 2}


def test_fusion_multiplicities_of_ising():
    ising = bundled.ising()
    sigma = ising.simple_cell("sigma")
    assert tensor_1cells(sigma, sigma).mult == {"1": 1, "psi": 1}
    assert ising.F("sigma", "sigma", "sigma", "sigma").shape == (2, 2)


def _ising_cell(counts):
    ising = bundled.ising()
    mult = dict(zip(("1", "sigma", "psi"), counts, strict=True))
    if not any(counts):
        mult = {"sigma": 1}
    return ising.cell(mult)


cell_counts = st.tuples(*(st.integers(min_value=0, max_value=2) for _ in range(3)))


@given(x=cell_counts, y=cell_counts, seed=st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_interchange_law(random_endo, x, y, seed):
    rng = seeded_rng(seed)
    cx, cy = _ising_cell(x), _ising_cell(y)
    f, f2 = random_endo(cx, rng), random_endo(cx, rng)
    g, g2 = random_endo(cy, rng), random_endo(cy, rng)
    lhs = tensor_2cells(f2, g2) @ tensor_2cells(f, g)
    rhs = tensor_2cells(f2 @ f, g2 @ g)
    assert lhs.distance(rhs) < 1e-9


@given(x=cell_counts, y=cell_counts, seed=st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_dagger_is_compatible_with_tensor(random_endo, x, y, seed):
    rng = seeded_rng(seed)
    f, g = random_endo(_ising_cell(x), rng), random_endo(_ising_cell(y), rng)
    assert tensor_2cells(f, g).adj.distance(tensor_2cells(f.adj, g.adj)) < 1e-12


def test_associator_is_unitary_and_natural(random_endo):
    ising = bundled.ising()
    x = ising.cell({"sigma": 1, "psi": 1})
    y = ising.cell({"1": 1, "sigma": 2})
    z = ising.simple_cell("sigma")
    a = associator(x, y, z)
    assert (a.adj @ a).distance(id2(a.dom)) < 1e-12
    assert (a @ a.adj).distance(id2(a.cod)) < 1e-12

    f = random_endo(x, seeded_rng(5))
    lhs = a @ tensor_2cells(tensor_2cells(f, id2(y)), id2(z))
    rhs = tensor_2cells(f, tensor_2cells(id2(y), id2(z))) @ a
    assert lhs.distance(rhs) < 1e-9


def test_unitors_on_fibonacci():
    fib = bundled.fibonacci()
    x = fib.cell({"1": 1, "tau": 2})
    left, right = unitor_l(x), unitor_r(x)
    assert (left.adj @ left).distance(id2(left.dom)) < 1e-12
    assert (right @ right.adj).distance(id2(right.cod)) < 1e-12


def test_fibonacci_f_matrix():
    f = bundled.fibonacci().F("tau", "tau", "tau", "tau")
    assert f[0, 0].real == pytest.approx(1 / bundled.GOLDEN)
    assert np.allclose(f @ f, np.eye(2))


def test_direct_sum_stacks_copies(z2):
    g = z2.simple_cell("g")
    f = id2(g) * 2.0
    total = dsum(f, id2(g) * 3.0)
    assert total.dom.mult == {"g": 2}
    assert np.allclose(total.block("g"), np.diag([2.0, 3.0]))

    mixed = dsum(id2(z2.simple_cell("1")), f)
    assert mixed.dom.mult == {"1": 1, "g": 1}
    assert mixed.block("g")[0, 0] == pytest.approx(2.0)


def test_direct_sum_needs_matching_endpoints(z2_completion):
    pres = z2_completion.presentation
    a, b = pres.objects
    loop = pres.simple_cell(pres.hom(a, a)[0])
    arrow = pres.simple_cell(pres.hom(a, b)[0])
    with pytest.raises(ObjectMismatch):
        dsum(id2(loop), id2(arrow))


def test_split_idempotent(z2):
    x = z2.cell({"1": 1, "g": 2}, "*", "*")
    half = np.full((2, 2), 0.5, dtype=np.complex128)
    p = TwoCell(x, x, {"1": np.zeros((1, 1), dtype=np.complex128), "g": half})
    z, u = split_idempotent(p)
    assert z.mult == {"g": 1}
    assert (u @ u.adj).distance(id2(z)) < 1e-12
    assert (u.adj @ u).distance(p) < 1e-12


def test_vertical_composition_and_dagger(z2):
    x = z2.cell({"1": 1, "g": 2}, "*", "*")
    y = z2.cell({"g": 1}, "*", "*")
    f = TwoCell(x, y, {"g": [[1.0, 1j]]})
    g = TwoCell(y, y, {"g": [[2.0]]})
    assert vcompose(g, f).block("g") == pytest.approx(np.array([[2.0, 2j]]))
    assert dagger(f).block("g") == pytest.approx(np.array([[1.0], [-1j]]))
    assert (dagger(f) @ dagger(g)).distance(dagger(g @ f)) == 0
    with pytest.raises(DomainMismatch):
        vcompose(f, g)


def test_unitor_coefficients_are_single_entries(tol):
    pres = Presentation(
        ("*",),
        (Simple("1", "*", "*"),),
        {"*": "1"},
        {("1", "1"): {"1": 1}},
        assoc={("1", "1", "1", "1"): np.eye(1, dtype=np.complex128)},
        lunit={"1": 2.0},
    )
    x = pres.simple_cell("1")
    assert unitor_l(x).block("1") == pytest.approx(np.array([[2.0]]))
    assert unitor_r(x).block("1") == pytest.approx(np.array([[1.0]]))
    report = validate(pres, tol)
    assert report.get("unitor-unitary[1]").residual == pytest.approx(1.0)
    assert not report.get("unitor-unitary[1]").passed


def test_presentation_memo_is_bounded(monkeypatch):
    pres = bundled.perturbed_ising()
    cells = [pres.cell(mult) for mult in ({"sigma": 1}, {"1": 1, "psi": 1}, {"sigma": 2}, {"psi": 1})]
    pairs = [(x, y) for x in cells for y in cells]
    expected = {(x.key, y.key): decomposition(x, y) for x, y in pairs}
    pres._memo.clear()
    monkeypatch.setattr(config.settings, "presentation_cache_size", 2)
    for x, y in pairs + pairs:
        assert decomposition(x, y) == expected[(x.key, y.key)]
        assert len(pres._memo) <= 2
    product = tensor_1cells(cells[0], cells[0])
    assert product.mult == {"1": 1, "psi": 1}
