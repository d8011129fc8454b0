import pytest

from src.engine import bundled
from src.engine.completion import build_completion, complete, same_qsystem, scalar
from src.engine.errors import QSystemMismatch
from src.engine.qsystem import regular_bimodule, rel_tensor, trivial_qsystem
from src.engine.twocat import id2, validate
from src.services.loader_service import LoaderService


def test_census_of_z2_completion(z2_completion):
    pres = z2_completion.presentation
    one, a = z2_completion.names
    assert (one, a) == ("1_*", "C[Z2]")
    assert len(pres.hom(one, one)) == 2
    assert len(pres.hom(one, a)) == 1
    assert len(pres.hom(a, one)) == 1
    assert len(pres.hom(a, a)) == 2


def test_completed_presentation_validates(z2_completion, tol):
    report = validate(z2_completion.presentation, tol)
    assert report.passed, report.failed_ids()


def test_completed_unitors_are_gauge_fixed(z2_completion):
    pres = z2_completion.presentation
    for s in pres.simples:
        assert pres.lunit_of(s.name) == pytest.approx(1.0)
        assert pres.runit_of(s.name) == pytest.approx(1.0)


def test_regular_bimodule_is_the_unit(z2_completion, algebra):
    realization = z2_completion.decompose(regular_bimodule(algebra))
    assert realization.cell.mult == {"C[Z2]|C[Z2]:0": 1}


def test_coordinates_of_identity(z2_completion, algebra):
    realization = z2_completion.decompose(regular_bimodule(algebra))
    g = z2_completion.coordinates(id2(realization.bimodule.X), realization, realization)
    assert g.distance(id2(realization.cell)) < 1e-9
    assert scalar(z2_completion.ambient(g, realization, realization)) == pytest.approx(1.0)


def test_trivial_list_gives_a_relabeled_copy(z2, tol):
    completion = build_completion([trivial_qsystem(z2, "*")], tol, seed=0)
    pres = completion.presentation
    assert pres.objects == ("1_*",)
    assert len(pres.simples) == 2
    unit = pres.unit["1_*"]
    other = next(s.name for s in pres.simples if s.name != unit)
    assert pres.products(other, other) == [(unit, 1)]
    assert validate(pres, tol).passed


def test_completion_is_deterministic(triv, algebra, tol):
    loader = LoaderService()
    first = complete([triv, algebra], tol, seed=0, name="QSys(Vec_Z2)")
    second = complete([triv, algebra], tol, seed=0, name="QSys(Vec_Z2)")
    assert loader.export_presentation(first) == loader.export_presentation(second)


def test_completion_needs_qsystems(tol):
    with pytest.raises(QSystemMismatch):
        build_completion([], tol)
    with pytest.raises(QSystemMismatch):
        build_completion([trivial_qsystem(bundled.vec(), "*"), trivial_qsystem(bundled.vec_z2(), "*")], tol)


def test_same_qsystem_compares_data(algebra, tol):
    copy = bundled.group_algebra(bundled.vec_z2())
    assert copy is not algebra
    assert same_qsystem(copy, algebra, tol)
    assert not same_qsystem(bundled.scaled_qsystem(algebra, 1.1), algebra, tol)


def test_find_object_matches_by_data(z2_completion, algebra):
    copy = bundled.group_algebra(bundled.vec_z2())
    assert z2_completion.find_object(copy) is algebra


def test_fusion_of_mixed_simples(z2_completion):
    pres = z2_completion.presentation
    x, xbar = "1_*|C[Z2]:0", "C[Z2]|1_*:0"
    assert pres.products(x, xbar) == [("1_*|1_*:0", 1), ("1_*|1_*:1", 1)]
    assert pres.products(xbar, x) == [("C[Z2]|C[Z2]:0", 1), ("C[Z2]|C[Z2]:1", 1)]
    assert pres.products("1_*|1_*:1", x) == [(x, 1)]
    assert pres.products("C[Z2]|C[Z2]:1", "C[Z2]|C[Z2]:1") == [("C[Z2]|C[Z2]:0", 1)]


def test_fusion_channels_exhaust_every_relative_tensor(z2_completion):
    pres = z2_completion.presentation
    for s, t in pres.chains(2):
        tensor = rel_tensor(z2_completion.simple(s), z2_completion.simple(t), z2_completion.tol).result
        dims = sum(n * z2_completion.simple(k).X.dim for k, n in pres.products(s, t))
        assert dims == tensor.X.dim, (s, t)


def test_name_of_matches_by_data(z2_completion):
    copy = bundled.group_algebra(bundled.vec_z2())
    assert z2_completion.name_of(copy) == "C[Z2]"
    with pytest.raises(QSystemMismatch):
        z2_completion.name_of(bundled.scaled_qsystem(copy, 1.1))


def test_decompose_accepts_data_equal_sides(z2_completion):
    copy = bundled.group_algebra(bundled.vec_z2())
    realization = z2_completion.decompose(regular_bimodule(copy))
    assert realization.cell.mult == {"C[Z2]|C[Z2]:0": 1}
    assert realization.bimodule.left is z2_completion.qsystems[1]
