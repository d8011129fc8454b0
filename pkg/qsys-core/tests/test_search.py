import pytest

from src.engine import bundled
from src.engine.errors import UnknownObject
from src.services.search_service import SearchService


@pytest.fixture(scope="module")
def search():
    return SearchService(tol=1e-8, seed=0)


def test_fp_dimensions(search):
    assert search.fp_dimensions(bundled.vec_z2(), bundled.POINT) == pytest.approx({"1": 1.0, "g": 1.0})
    fib = search.fp_dimensions(bundled.fibonacci(), bundled.POINT)
    assert fib["tau"] == pytest.approx(bundled.GOLDEN)
    ising = search.fp_dimensions(bundled.ising(), bundled.POINT)
    assert ising["sigma"] == pytest.approx(2**0.5)


def test_candidates_contain_the_unit_once(search):
    assert search.candidate_cells(bundled.vec_z2(), bundled.POINT, 2) == [{"1": 1}, {"1": 1, "g": 1}]
    assert search.candidate_cells(bundled.vec(), bundled.POINT, 1) == [{"1": 1}]
    assert search.candidate_cells(bundled.vec_z2(), bundled.POINT, 1.5) == [{"1": 1}]


def test_candidates_are_sorted_by_dimension(search):
    candidates = search.candidate_cells(bundled.ising(), bundled.POINT, 3)
    assert candidates[0] == {"1": 1}
    assert {"1": 1, "psi": 1} in candidates
    assert {"1": 1, "sigma": 1} in candidates
    assert {"1": 1, "psi": 1, "sigma": 1} not in candidates


def test_vec_has_only_the_trivial_qsystem(search):
    result = search.find(bundled.vec(), bundled.POINT, 1)
    assert result.tried == [{"1": 1}]
    assert [c.multiplicities for c in result.candidates] == [{"1": 1}]
    assert result.candidates[0].residual < 1e-8


def test_finds_group_algebra_on_z2(search):
    result = search.find(bundled.vec_z2(), bundled.POINT, 2)
    found = [c.multiplicities for c in result.candidates]
    assert {"1": 1, "g": 1} in found
    candidate = next(c for c in result.candidates if c.multiplicities == {"1": 1, "g": 1})
    assert candidate.fp_dim == pytest.approx(2.0)
    assert candidate.qsystem.Q == {"1": 1, "g": 1}


def test_finds_one_plus_tau_on_fibonacci(search):
    result = search.find(bundled.fibonacci(), bundled.POINT, 2.62)
    found = [c.multiplicities for c in result.candidates]
    assert {"1": 1, "tau": 1} in found


def test_search_rejects_bad_arguments(search):
    with pytest.raises(UnknownObject):
        search.find(bundled.vec(), "x", 1)
    with pytest.raises(ValueError):
        search.find(bundled.vec(), bundled.POINT, 0.5)
