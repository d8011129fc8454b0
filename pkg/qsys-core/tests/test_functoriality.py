import pytest

from src.engine import bundled
from src.engine.errors import ObjectMismatch
from src.engine.functoriality import (
    DagFunctor,
    Modification,
    Transformation,
    associator_modification,
    check_functor,
    check_modification,
    check_transformation,
    compose_functors,
    compose_trans,
    dagger_mod,
    functor_deviation,
    hcompose_mods,
    hcompose_trans,
    identity_functor,
    identity_modification,
    identity_transformation,
    interchanger,
    left_unitor_modification,
    modification_norm,
    right_unitor_modification,
    vcompose_mods,
    whisker_left,
    whisker_right,
)
from src.engine.twocat import id2


@pytest.fixture(scope="module")
def twist():
    return bundled.twisted_autoequivalence()


@pytest.fixture(scope="module")
def beta():
    return bundled.coboundary_transformation()


@pytest.fixture(scope="module")
def beta_inv():
    return bundled.inverse_coboundary_transformation()


@pytest.mark.parametrize(
    "functor",
    [
        pytest.param(lambda: identity_functor(bundled.vec_z2()), id="identity"),
        pytest.param(bundled.twisted_autoequivalence, id="twist"),
        pytest.param(bundled.inclusion_functor, id="incl"),
        pytest.param(lambda: identity_functor(bundled.fibonacci()), id="fibonacci-identity"),
    ],
)
def test_bundled_functors_pass(functor, tol):
    report = check_functor(functor(), tol)
    assert report.passed, report.failed_ids()


def test_identity_functor_is_cached(z2):
    assert identity_functor(z2) is identity_functor(z2)


def test_twist_squares_to_identity(z2, twist, tol):
    square = compose_functors(twist, twist)
    assert check_functor(square, tol).passed
    assert functor_deviation(square, identity_functor(z2)) < 1e-12
    assert functor_deviation(twist, identity_functor(z2)) == pytest.approx(2.0)


def test_composition_needs_matching_endpoints(twist):
    with pytest.raises(ObjectMismatch):
        compose_functors(bundled.inclusion_functor(), twist)


def test_non_unitary_coheretor_fails(twist, tol):
    f2 = dict(twist.F2)
    f2[("g", "g")] = f2[("g", "g")] * 2.0
    broken = DagFunctor(twist.src, twist.tgt, twist.obj_map, twist.cell_map, f2, twist.F1, name="broken")
    failed = check_functor(broken, tol).failed_ids()
    assert "F2-unitary[g,g]" in failed


def test_missing_coheretor_fails_structure(twist, tol):
    f2 = {k: v for k, v in twist.F2.items() if k != ("g", "g")}
    broken = DagFunctor(twist.src, twist.tgt, twist.obj_map, twist.cell_map, f2, twist.F1, name="broken")
    assert check_functor(broken, tol).failed_ids() == ["structure"]


@pytest.mark.parametrize("name", ["beta", "beta_inv"])
def test_coboundary_transformations_pass(name, request, tol):
    report = check_transformation(request.getfixturevalue(name), tol)
    assert report.passed, report.failed_ids()


def test_identity_transformation_passes(twist, tol):
    assert check_transformation(identity_transformation(twist), tol).passed


def test_composite_of_coboundaries(z2, beta, beta_inv, tol):
    composite = compose_trans(beta, beta_inv)
    report = check_transformation(composite, tol)
    assert report.passed, report.failed_ids()
    g = z2.simple_cell("g")
    assert composite.component(g).distance(identity_transformation(beta.source).component(g)) < 1e-12


def test_composition_needs_matching_functors(beta):
    with pytest.raises(ObjectMismatch):
        compose_trans(beta, beta)


def test_scaled_component_breaks_unitarity(beta, tol):
    comp1 = dict(beta.comp1)
    comp1["g"] = comp1["g"] * 2.0
    broken = Transformation(beta.source, beta.target, beta.comp0, comp1, name="broken")
    failed = check_transformation(broken, tol).failed_ids()
    assert "unitary[g]" in failed
    assert "unitary[1]" not in failed


def test_scalar_modification_and_its_dagger(tol):
    phase = bundled.scalar_modification()
    assert check_modification(phase, tol).passed
    assert check_modification(dagger_mod(phase), tol).passed
    assert modification_norm(phase) == pytest.approx(1.0)


def test_phase_times_its_dagger_is_identity(beta):
    phase = bundled.scalar_modification()
    product = vcompose_mods(dagger_mod(phase), phase)
    for a, comp in product.comp.items():
        assert comp.distance(id2(beta.comp0[a])) < 1e-12
    assert check_modification(identity_modification(beta)).passed


def test_associator_modification_slides(beta, beta_inv, tol):
    mod = associator_modification(beta, beta_inv, beta)
    report = check_modification(mod, tol)
    assert report.passed, report.failed_ids()


def test_modification_between_unrelated_transformations_fails(beta, tol):
    other = identity_transformation(bundled.twisted_autoequivalence())
    mod = identity_modification(beta)
    broken = Modification(beta, other, mod.comp, name="broken")
    assert check_modification(broken, tol).failed_ids() == ["structure"]


def test_whiskered_transformations_pass(twist, beta, tol):
    left = whisker_left(twist, beta)
    right = whisker_right(beta, twist)
    for trans in (left, right):
        report = check_transformation(trans, tol)
        assert report.passed, report.failed_ids()
    assert left.source is compose_functors(twist, beta.source)
    assert right.target is compose_functors(twist, twist)


def test_horizontal_composite_of_coboundaries(beta, tol):
    composite = hcompose_trans(beta, beta)
    report = check_transformation(composite, tol)
    assert report.passed, report.failed_ids()


def test_interchanger_slides(beta, beta_inv, tol):
    for phi, gamma in ((beta, beta), (beta, beta_inv), (beta_inv, beta)):
        report = check_modification(interchanger(phi, gamma), tol)
        assert report.passed, report.failed_ids()


def test_interchanger_needs_composable_transformations(beta):
    incl = identity_transformation(bundled.inclusion_functor())
    with pytest.raises(ObjectMismatch):
        interchanger(beta, incl)


def test_horizontal_composite_of_modifications(beta_inv, tol):
    phase = bundled.scalar_modification()
    mod = hcompose_mods(phase, identity_modification(beta_inv))
    report = check_modification(mod, tol)
    assert report.passed, report.failed_ids()
    assert modification_norm(mod) == pytest.approx(1.0)


@pytest.mark.parametrize("unitor", [left_unitor_modification, right_unitor_modification])
def test_unitor_modifications_slide(unitor, beta, tol):
    mod = unitor(beta)
    assert mod.target is beta
    report = check_modification(mod, tol)
    assert report.passed, report.failed_ids()
