"""Presentations and structures shipped with the engine."""

import cmath
import math
from collections.abc import Callable
from functools import lru_cache

import numpy as np

from .errors import UnknownObject
from .functoriality import DagFunctor, Modification, Transformation, identity_functor
from .linalg import CMat
from .qsystem import QSystem
from .twocat import Presentation, Simple, TwoCell, id2, tensor_1cells, unitor_l, unitor_r


POINT = "*"
GOLDEN = (1 + math.sqrt(5)) / 2


def _fusion_category(
    name: str,
    simples: list[str],
    rule: Callable[[str, str], dict[str, int]],
    fsymbol: Callable[[str, str, str, str], CMat | None] | None = None,
) -> Presentation:
    """Single-object presentation; F entries default to the identity on each tree space."""
    pres = Presentation(
        (POINT,),
        tuple(Simple(s, POINT, POINT) for s in simples),
        {POINT: simples[0]},
        {(i, j): rule(i, j) for i in simples for j in simples},
        name=name,
    )
    for i, j, k in pres.chains(3):
        targets = {l for m, _ in pres.products(i, j) for l, _ in pres.products(m, k)}
        for l in targets:  # noqa: E741
            size = len(pres.left_trees(i, j, k, l))
            given = fsymbol(i, j, k, l) if fsymbol else None
            pres.assoc[(i, j, k, l)] = np.eye(size, dtype=np.complex128) if given is None else given
    return pres


@lru_cache(maxsize=None)
def vec() -> Presentation:
    return _fusion_category("Vec", ["1"], lambda i, j: {"1": 1})


def _cyclic_name(k: int) -> str:
    return "1" if k == 0 else ("g" if k == 1 else f"g{k}")


@lru_cache(maxsize=None)
def vec_zn(n: int) -> Presentation:
    """Vec_{Z/n} with trivial associator; simples 1, g, g2, ..."""
    names = [_cyclic_name(k) for k in range(n)]
    index = {s: k for k, s in enumerate(names)}
    return _fusion_category(f"Vec_Z{n}", names, lambda i, j: {names[(index[i] + index[j]) % n]: 1})


def vec_z2() -> Presentation:
    return vec_zn(2)


def vec_z3() -> Presentation:
    return vec_zn(3)


@lru_cache(maxsize=None)
def fibonacci() -> Presentation:
    def rule(i: str, j: str) -> dict[str, int]:
        if i == "1":
            return {j: 1}
        if j == "1":
            return {i: 1}
        return {"1": 1, "tau": 1}

    def fsymbol(i: str, j: str, k: str, l: str) -> CMat | None:  # noqa: E741
        if (i, j, k, l) == ("tau", "tau", "tau", "tau"):
            a, b = 1 / GOLDEN, 1 / math.sqrt(GOLDEN)
            return np.array([[a, b], [b, -a]], dtype=np.complex128)
        return None

    return _fusion_category("Fibonacci", ["1", "tau"], rule, fsymbol)


def _ising_rule(i: str, j: str) -> dict[str, int]:
    if i == "1":
        return {j: 1}
    if j == "1":
        return {i: 1}
    if i == j == "sigma":
        return {"1": 1, "psi": 1}
    if i == j == "psi":
        return {"1": 1}
    return {"sigma": 1}


def _ising_fsymbol(i: str, j: str, k: str, l: str) -> CMat | None:  # noqa: E741
    if (i, j, k, l) == ("sigma", "sigma", "sigma", "sigma"):
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
    if (i, j, k, l) in {("psi", "sigma", "psi", "sigma"), ("sigma", "psi", "sigma", "psi")}:
        return -np.eye(1, dtype=np.complex128)
    return None


@lru_cache(maxsize=None)
def ising() -> Presentation:
    return _fusion_category("Ising", ["1", "sigma", "psi"], _ising_rule, _ising_fsymbol)


def perturbed_ising() -> Presentation:
    """Ising with the (psi, psi) entry of F[sigma,sigma,sigma;sigma] negated; a negative example for validate."""
    pres = _fusion_category("Ising-perturbed", ["1", "sigma", "psi"], _ising_rule, _ising_fsymbol)
    key = ("sigma", "sigma", "sigma", "sigma")
    matrix = np.array(pres.assoc[key], dtype=np.complex128)
    matrix[1, 1] = -matrix[1, 1]
    pres.assoc[key] = matrix
    return pres


PRESENTATIONS: dict[str, Callable[[], Presentation]] = {
    "vec": vec,
    "vec_z2": vec_z2,
    "vec_z3": vec_z3,
    "fibonacci": fibonacci,
    "ising": ising,
    "perturbed_ising": perturbed_ising,
}

# Registered presentations that fail validation on purpose
NEGATIVE_EXAMPLES = frozenset({"perturbed_ising"})


def bundled_presentation(name: str) -> Presentation:
    try:
        return PRESENTATIONS[name]()
    except KeyError as e:
        raise UnknownObject(f"No bundled presentation '{name}' (known: {', '.join(PRESENTATIONS)})") from e


# -- structures ------------------------------------------------------------------


def group_algebra(pres: Presentation) -> QSystem:
    """⊕_g g with m = n^{-1/2} on every channel and i = n^{1/2}; pres must be a Vec_{Z/n}."""
    n = len(pres.simples)
    q = pres.cell({s.name: 1 for s in pres.simples}, POINT, POINT)
    qq = tensor_1cells(q, q)
    m = TwoCell(qq, q, {k: np.full((1, c), 1 / math.sqrt(n)) for k, c in qq.mult.items()})
    unit = pres.unit[POINT]
    i = TwoCell(pres.unit_cell(POINT), q, {unit: np.array([[math.sqrt(n)]])})
    return QSystem(POINT, q, m, i, name=f"C[Z{n}]")


def scaled_qsystem(q: QSystem, factor: float) -> QSystem:
    """q with m multiplied by factor; fails separability for factor != 1."""
    return QSystem(q.base, q.Q, q.m * factor, q.i, name=f"{q.label()}x{factor:g}")


def _pointwise_functor(
    src: Presentation, tgt: Presentation, cells: dict[str, str], signs: dict[tuple[str, str], complex], name: str
) -> DagFunctor:
    """Functor sending each simple to one simple with scalar coheretors."""
    cell_map = {s: tgt.simple_cell(t) for s, t in cells.items()}
    functor = DagFunctor(src, tgt, {POINT: POINT}, cell_map, {}, {}, name=name)
    for s, t in src.chains(2):
        dom = tensor_1cells(cell_map[s], cell_map[t])
        functor.F2[(s, t)] = id2(dom) * signs.get((s, t), 1.0)
    functor.F1 = {POINT: id2(tgt.unit_cell(POINT))}
    return functor


@lru_cache(maxsize=None)
def twisted_autoequivalence() -> DagFunctor:
    """Identity on the simples of Vec_{Z/2} with F²_{g,g} = -1."""
    pres = vec_z2()
    return _pointwise_functor(pres, pres, {"1": "1", "g": "g"}, {("g", "g"): -1.0}, name="twist")


@lru_cache(maxsize=None)
def inclusion_functor() -> DagFunctor:
    """Vec -> Vec_{Z/2}, 1 ↦ 1."""
    return _pointwise_functor(vec(), vec_z2(), {"1": "1"}, {}, name="incl")


def _scalar_transformation(
    source: DagFunctor, target: DagFunctor, beta: dict[str, complex], name: str
) -> Transformation:
    pres = source.src
    comp0 = {a: target.tgt.unit_cell(target.obj(a)) for a in pres.objects}
    comp1 = {}
    for s in pres.simples:
        fx = source.on_1cell(pres.simple_cell(s.name))
        comp1[s.name] = (unitor_l(fx).adj @ unitor_r(fx)) * beta[s.name]
    return Transformation(source, target, comp0, comp1, name=name)


@lru_cache(maxsize=None)
def coboundary_transformation() -> Transformation:
    """id => twist on Vec_{Z/2} with components β(1) = 1, β(g) = i."""
    return _scalar_transformation(identity_functor(vec_z2()), twisted_autoequivalence(), {"1": 1, "g": 1j}, "beta")


@lru_cache(maxsize=None)
def inverse_coboundary_transformation() -> Transformation:
    """twist => id with β(g) = -i."""
    return _scalar_transformation(
        twisted_autoequivalence(), identity_functor(vec_z2()), {"1": 1, "g": -1j}, "beta^-1"
    )


@lru_cache(maxsize=None)
def scalar_modification(c: complex = cmath.exp(1j * math.pi / 4)) -> Modification:
    phi = coboundary_transformation()
    return Modification(phi, phi, {a: id2(cell) * c for a, cell in phi.comp0.items()}, name="phase")


FUNCTORS: dict[str, Callable[[], DagFunctor]] = {
    "twist": twisted_autoequivalence,
    "incl": inclusion_functor,
}
