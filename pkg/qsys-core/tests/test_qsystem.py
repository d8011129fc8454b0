import math
from itertools import pairwise, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src import config
from src.engine import bundled
from src.engine.errors import InvalidStructure, QSystemMismatch
from src.engine.qsystem import (
    check_bimodule,
    check_intertwiner,
    check_qsystem,
    condensation_from_qsystem,
    free_bimodule,
    intertwiner_space,
    is_trivial,
    qsys_associator,
    qsys_pentagon_residual,
    qsys_triangle_residual,
    QSystem,
    qsystem_defects,
    regular_bimodule,
    rel_tensor,
    same_qsystem,
    sep_projector,
    simple_bimodules,
    trivial_qsystem,
    unitor_left,
    unitor_right,
)
from src.engine.twocat import TwoCell, id2


def test_group_algebra_passes_all_axioms(algebra, tol):
    report = check_qsystem(algebra, tol)
    assert report.passed, report.failed_ids()
    assert report.max_residual() < 1e-9
    assert algebra.m.block("1")[0, 0] == pytest.approx(2**-0.5)
    assert algebra.i.block("1")[0, 0] == pytest.approx(math.sqrt(2))


def test_scaled_multiplication_fails_separability(algebra, tol):
    report = check_qsystem(bundled.scaled_qsystem(algebra, 1.1), tol)
    assert "Q4-separability" in report.failed_ids()
    assert report.get("Q4-separability").residual > 0.1


def test_defects_vanish_on_trivial_qsystem(triv):
    defects = qsystem_defects(triv)
    assert set(defects) == {
        "Q1-associativity",
        "Q2-unit-left",
        "Q2-unit-right",
        "Q3-frobenius-left",
        "Q3-frobenius-right",
        "Q4-separability",
    }
    assert max(d.norm() for d in defects.values()) < 1e-12


def test_trivial_qsystem_is_cached(z2, triv):
    assert trivial_qsystem(z2, "*") is triv
    assert is_trivial(triv)


@pytest.mark.parametrize("name", ["vec_z3", "fibonacci", "ising"])
def test_trivial_qsystems_pass(name, tol):
    pres = bundled.bundled_presentation(name)
    assert check_qsystem(trivial_qsystem(pres, bundled.POINT), tol).passed


def test_regular_bimodule_passes(algebra, tol):
    report = check_bimodule(regular_bimodule(algebra), tol)
    assert report.passed, report.failed_ids()


def test_algebra_is_connected(algebra):
    reg = regular_bimodule(algebra)
    assert len(intertwiner_space(reg, reg)) == 1


def test_intertwiners_of_the_regular_bimodule(algebra, tol):
    reg = regular_bimodule(algebra)
    assert check_intertwiner(id2(reg.X), reg, reg, tol).passed
    (basis,) = intertwiner_space(reg, reg)
    assert check_intertwiner(basis, reg, reg, tol).passed

    sign = TwoCell(reg.X, reg.X, {"1": [[1.0]], "g": [[-1.0]]})
    assert not check_intertwiner(sign, reg, reg, tol).passed


def test_separability_projector_of_the_regular_bimodule(algebra):
    reg = regular_bimodule(algebra)
    p = sep_projector(reg, reg)
    assert p.distance(rel_tensor(reg, reg).p) == 0
    assert (p @ p).distance(p) < 1e-9


def test_simple_bimodule_census(triv, algebra, tol):
    counts = {
        ("1", "1"): len(simple_bimodules(triv, triv, tol, 0)),
        ("1", "A"): len(simple_bimodules(triv, algebra, tol, 0)),
        ("A", "1"): len(simple_bimodules(algebra, triv, tol, 0)),
        ("A", "A"): len(simple_bimodules(algebra, algebra, tol, 0)),
    }
    assert counts == {("1", "1"): 2, ("1", "A"): 1, ("A", "1"): 1, ("A", "A"): 2}


def test_simple_bimodules_pass_their_axioms(algebra, tol):
    for bim in simple_bimodules(algebra, algebra, tol, 0):
        assert check_bimodule(bim, tol).passed


z2_cells = st.tuples(st.integers(min_value=0, max_value=2), st.integers(min_value=0, max_value=2)).filter(any)


@given(left=z2_cells, right=z2_cells)
@settings(max_examples=20, deadline=None)
def test_separability_projector_contract(left, right):
    pres = bundled.vec_z2()
    algebra = bundled.group_algebra(pres)
    m = free_bimodule(algebra, pres.cell(dict(zip(("1", "g"), left, strict=True)), "*", "*"), algebra)
    n = free_bimodule(algebra, pres.cell(dict(zip(("1", "g"), right, strict=True)), "*", "*"), algebra)
    tensor = rel_tensor(m, n)
    p, u = tensor.p, tensor.u
    for block in p.blocks.values():
        assert np.max(np.abs(block - block.conj().T), initial=0.0) < 1e-9
        assert np.max(np.abs(block @ block - block), initial=0.0) < 1e-9
    assert (u.adj @ u).distance(p) < 1e-9
    assert (u @ u.adj).distance(id2(tensor.result.X)) < 1e-9
    assert check_bimodule(tensor.result).passed


def test_rel_tensor_needs_matching_middle(triv, algebra):
    with pytest.raises(QSystemMismatch):
        rel_tensor(regular_bimodule(algebra), regular_bimodule(triv))


def test_unitors_are_unitary(algebra, tol):
    for bim in simple_bimodules(algebra, algebra, tol, 0):
        for unitor in (unitor_left(bim), unitor_right(bim)):
            assert (unitor @ unitor.adj).distance(id2(unitor.cod)) < 1e-9
            assert (unitor.adj @ unitor).distance(id2(unitor.dom)) < 1e-9


def test_completed_pentagon_and_triangle(triv, algebra, tol):
    bimodules = [b for p in (triv, algebra) for q in (triv, algebra) for b in simple_bimodules(p, q, tol, 0)]
    chains = [
        chain for chain in product(bimodules, repeat=4) if all(a.right is b.left for a, b in pairwise(chain))
    ]
    assert chains
    assert max(qsys_pentagon_residual(*chain) for chain in chains[:40]) < 1e-8
    pairs = [(m, n) for m in bimodules for n in bimodules if m.right is n.left]
    assert max(qsys_triangle_residual(m, n) for m, n in pairs) < 1e-8


def test_qsys_associator_is_unitary(algebra, tol):
    reps = simple_bimodules(algebra, algebra, tol, 0)
    a = qsys_associator(reps[1], reps[1], reps[1])
    assert (a.adj @ a).distance(id2(a.dom)) < 1e-9


def test_condensation_from_group_algebra(algebra, tol):
    condensation = condensation_from_qsystem(algebra, tol)
    assert condensation.report.passed
    assert (condensation.epsilon @ condensation.delta).distance(id2(algebra.Q)) < 1e-12
    for s, block in condensation.delta.blocks.items():
        assert np.array_equal(block, condensation.epsilon.block(s).conj().T)


def test_condensation_rejects_invalid_qsystem(algebra, tol):
    with pytest.raises(InvalidStructure):
        condensation_from_qsystem(bundled.scaled_qsystem(algebra, 1.1), tol)


@pytest.mark.parametrize("left,right", [("1", "A"), ("A", "1")])
def test_intertwiners_recover_fusion_multiplicities(left, right, triv, algebra, tol):
    objects = {"1": triv, "A": algebra}
    p, q = objects[left], objects[right]
    x = simple_bimodules(p, q, tol, 0)[0]
    xbar = simple_bimodules(q, p, tol, 0)[0]
    tensor = rel_tensor(x, xbar, tol).result
    assert tensor.X.mult == ({"1": 1, "g": 1} if left == "1" else {"1": 2, "g": 2})
    reps = simple_bimodules(p, p, tol, 0)
    counts = [len(intertwiner_space(rep, tensor)) for rep in reps]
    assert counts == [1, 1]
    assert sum(n * rep.X.dim for n, rep in zip(counts, reps, strict=True)) == tensor.X.dim


def test_data_equal_qsystems_compose(algebra, tol):
    copy = bundled.group_algebra(bundled.vec_z2())
    assert copy is not algebra
    mixed = rel_tensor(regular_bimodule(algebra), regular_bimodule(copy), tol)
    assert check_bimodule(mixed.result, tol).passed
    assert len(intertwiner_space(regular_bimodule(algebra), regular_bimodule(copy))) == 1
    assert check_intertwiner(id2(algebra.Q), regular_bimodule(algebra), regular_bimodule(copy), tol).passed


def test_is_trivial_compares_data(triv, algebra):
    rebuilt = QSystem(triv.base, triv.Q, triv.m, triv.i)
    assert rebuilt is not triv
    assert is_trivial(rebuilt)
    assert same_qsystem(rebuilt, triv)
    assert not is_trivial(algebra)


def test_identity_keyed_caches_are_bounded():
    for cached in (intertwiner_space, regular_bimodule):
        assert cached.cache_info().maxsize == config.settings.engine_cache_size
