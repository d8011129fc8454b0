"""
Q-systems, bimodules and intertwiners inside a presented 2-category.

Everything here lives in the ambient presentation: bimodules are 1-cells with
action 2-cells, relative tensor products are obtained by orthogonally splitting
the separability projector, and the resulting coisometries u fix all further
structure (unitors, associators, tensor products of intertwiners).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from loguru import logger

from ..config import settings
from ..models.report_models import Report
from .errors import DegenerateSpectrum, DomainMismatch, InvalidStructure, QSystemMismatch, ShapeMismatch
from .linalg import (
    Tolerance,
    cluster_sorted,
    default_tolerance,
    orthonormal_kernel,
    polar_unitary,
    seeded_rng,
)
from .twocat import (
    OneCell,
    Presentation,
    TwoCell,
    associator,
    id2,
    split_idempotent,
    tensor_1cells,
    tensor_2cells,
    unitor_l,
    unitor_r,
)


@dataclass(frozen=True, eq=False)
class QSystem:
    base: str
    Q: OneCell
    m: TwoCell
    i: TwoCell
    name: str = ""

    @property
    def pres(self) -> Presentation:
        return self.Q.pres

    def label(self) -> str:
        return self.name or self.Q.label()


@dataclass(frozen=True, eq=False)
class Bimodule:
    left: QSystem
    right: QSystem
    X: OneCell
    lam: TwoCell
    rho: TwoCell
    name: str = ""

    @property
    def pres(self) -> Presentation:
        return self.X.pres

    def label(self) -> str:
        return self.name or f"{self.left.label()}[{self.X.label()}]{self.right.label()}"


@dataclass(frozen=True, eq=False)
class RelTensor:
    result: Bimodule
    u: TwoCell
    p: TwoCell


@dataclass(frozen=True, eq=False)
class Condensation:
    X: Bimodule
    Xdot: Bimodule
    epsilon: TwoCell
    delta: TwoCell
    report: Report


def _expect(cell: TwoCell, dom: OneCell, cod: OneCell, what: str):
    if cell.dom != dom or cell.cod != cod:
        raise ShapeMismatch(
            f"{what} must be {dom.label()} => {cod.label()}, got {cell.dom.label()} => {cell.cod.label()}"
        )


def _check_qsystem_shape(q: QSystem):
    pres = q.pres
    pres.check_object(q.base)
    if q.Q.src != q.base or q.Q.tgt != q.base:
        raise ShapeMismatch(f"Q-system {q.label()} is not an endomorphism of {q.base}")
    _expect(q.m, tensor_1cells(q.Q, q.Q), q.Q, "multiplication")
    _expect(q.i, pres.unit_cell(q.base), q.Q, "unit")


def _check_bimodule_shape(bim: Bimodule):
    _check_qsystem_shape(bim.left)
    _check_qsystem_shape(bim.right)
    if bim.X.src != bim.left.base or bim.X.tgt != bim.right.base:
        raise QSystemMismatch(f"Bimodule {bim.label()} does not sit between {bim.left.base} and {bim.right.base}")
    _expect(bim.lam, tensor_1cells(bim.left.Q, bim.X), bim.X, "left action")
    _expect(bim.rho, tensor_1cells(bim.X, bim.right.Q), bim.X, "right action")


def qsystem_defects(q: QSystem) -> dict[str, TwoCell]:
    """Differences of the two sides of each Q-system axiom, keyed by check id."""
    _check_qsystem_shape(q)
    m, i = q.m, q.i
    idq = id2(q.Q)
    a = associator(q.Q, q.Q, q.Q)
    middle = m.adj @ m
    return {
        "Q1-associativity": m @ tensor_2cells(m, idq) - m @ tensor_2cells(idq, m) @ a,
        "Q2-unit-left": m @ tensor_2cells(i, idq) - unitor_l(q.Q),
        "Q2-unit-right": m @ tensor_2cells(idq, i) - unitor_r(q.Q),
        "Q3-frobenius-left": tensor_2cells(idq, m) @ a @ tensor_2cells(m.adj, idq) - middle,
        "Q3-frobenius-right": tensor_2cells(m, idq) @ a.adj @ tensor_2cells(idq, m.adj) - middle,
        "Q4-separability": m @ m.adj - idq,
    }


_AXIOM_ANCHORS = {
    "Q1": "associativity",
    "Q2": "unitality",
    "Q3": "Frobenius",
    "Q4": "separable",
}


def check_qsystem(q: QSystem, tol: Tolerance | None = None) -> Report:
    """
    Residuals of associativity, unitality, Frobenius and separability.

    The unit norm row only asks i^*⋆i to be a positive scalar; its value is
    reported in the detail and not constrained.
    """
    tol = tol or default_tolerance()
    bound = tol.bound()
    report = Report(title=f"qsystem {q.label()}")
    for check_id, defect in qsystem_defects(q).items():
        report.record(check_id, defect.norm(), bound, anchor=_AXIOM_ANCHORS[check_id[:2]])

    norm = (q.i.adj @ q.i).trace()
    report.record(
        "unit-norm",
        max(abs(norm.imag), max(0.0, -norm.real)),
        bound,
        anchor="i^* i is a positive scalar",
        detail=f"i^* i = {norm.real:.12g}",
    )
    return report


def trivial_qsystem(pres: Presentation, b: str) -> QSystem:
    """(1_b, λ_{1_b}, id); cached so every caller gets the same object."""
    key = ("trivial_qsystem", b)
    cached = pres._cache.get(key)
    if cached is None:
        one = pres.unit_cell(b)
        cached = QSystem(b, one, unitor_l(one), id2(one), name=f"1_{b}")
        pres._cache[key] = cached
    return cached


def is_trivial(q: QSystem) -> bool:
    return same_qsystem(q, trivial_qsystem(q.pres, q.base))


@lru_cache(maxsize=settings.engine_cache_size)
def regular_bimodule(q: QSystem) -> Bimodule:
    """Q as a Q-Q bimodule through m on both sides; the identity 1-cell of QSys."""
    return Bimodule(q, q, q.Q, q.m, q.m, name=f"{q.label()}")


def check_bimodule(bim: Bimodule, tol: Tolerance | None = None) -> Report:
    tol = tol or default_tolerance()
    bound = tol.bound()
    _check_bimodule_shape(bim)
    p, q, x = bim.left, bim.right, bim.X
    lam, rho = bim.lam, bim.rho
    idp, idq, idx = id2(p.Q), id2(q.Q), id2(x)
    report = Report(title=f"bimodule {bim.label()}")

    report.record(
        "B1-left-associativity",
        (lam @ tensor_2cells(p.m, idx)).distance(lam @ tensor_2cells(idp, lam) @ associator(p.Q, p.Q, x)),
        bound,
        anchor="associativity",
    )
    report.record(
        "B1-right-associativity",
        (rho @ tensor_2cells(rho, idq)).distance(rho @ tensor_2cells(idx, q.m) @ associator(x, q.Q, q.Q)),
        bound,
        anchor="associativity",
    )
    report.record(
        "B1-commuting-actions",
        (rho @ tensor_2cells(lam, idq)).distance(lam @ tensor_2cells(idp, rho) @ associator(p.Q, x, q.Q)),
        bound,
        anchor="associativity",
    )
    report.record("B2-left-unit", (lam @ tensor_2cells(p.i, idx)).distance(unitor_l(x)), bound, anchor="unitality")
    report.record("B2-right-unit", (rho @ tensor_2cells(idx, q.i)).distance(unitor_r(x)), bound, anchor="unitality")

    a_ppx = associator(p.Q, p.Q, x)
    middle = lam.adj @ lam
    first = tensor_2cells(idp, lam) @ a_ppx @ tensor_2cells(p.m.adj, idx)
    second = tensor_2cells(p.m, idx) @ a_ppx.adj @ tensor_2cells(idp, lam.adj)
    report.record(
        "B3-left-frobenius",
        max(first.distance(middle), second.distance(middle)),
        bound,
        anchor="Frobenius",
    )

    a_xqq = associator(x, q.Q, q.Q)
    middle = rho.adj @ rho
    first = tensor_2cells(rho, idq) @ a_xqq.adj @ tensor_2cells(idx, q.m.adj)
    second = tensor_2cells(idx, q.m) @ a_xqq @ tensor_2cells(rho.adj, idq)
    report.record(
        "B3-right-frobenius",
        max(first.distance(middle), second.distance(middle)),
        bound,
        anchor="Frobenius",
    )

    report.record("B4-left-separability", (lam @ lam.adj).distance(idx), bound, anchor="separable")
    report.record("B4-right-separability", (rho @ rho.adj).distance(idx), bound, anchor="separable")
    return report


def same_qsystem(a: QSystem, b: QSystem, tol: Tolerance | None = None) -> bool:
    """Equal as Q-systems: same object and 1-cell, multiplication and unit within tolerance."""
    if a is b:
        return True
    tol = tol or default_tolerance()
    if a.pres is not b.pres or a.base != b.base or a.Q != b.Q:
        return False
    return tol.accepts(a.m.distance(b.m)) and tol.accepts(a.i.distance(b.i))


def _same_sides(m: Bimodule, n: Bimodule):
    if not (same_qsystem(m.left, n.left) and same_qsystem(m.right, n.right)):
        raise QSystemMismatch(f"Bimodules {m.label()} and {n.label()} are over different Q-systems")


def _left_defect(f: TwoCell, m: Bimodule, n: Bimodule) -> TwoCell:
    return f @ m.lam - n.lam @ tensor_2cells(id2(m.left.Q), f)


def _right_defect(f: TwoCell, m: Bimodule, n: Bimodule) -> TwoCell:
    return f @ m.rho - n.rho @ tensor_2cells(f, id2(m.right.Q))


def check_intertwiner(f: TwoCell, m: Bimodule, n: Bimodule, tol: Tolerance | None = None) -> Report:
    tol = tol or default_tolerance()
    bound = tol.bound()
    _same_sides(m, n)
    if f.dom != m.X or f.cod != n.X:
        raise DomainMismatch(f"Intertwiner must be {m.X.label()} => {n.X.label()}")
    report = Report(title=f"intertwiner {m.label()} => {n.label()}")
    report.record("left-equivariance", _left_defect(f, m, n).norm(), bound, anchor="bimodule intertwiners")
    report.record("right-equivariance", _right_defect(f, m, n).norm(), bound, anchor="bimodule intertwiners")
    return report


def _elementary_cells(dom: OneCell, cod: OneCell) -> list[TwoCell]:
    cells = []
    for s in sorted(set(dom.mult) & set(cod.mult), key=dom.pres.order):
        for r in range(cod.copies(s)):
            for c in range(dom.copies(s)):
                block = np.zeros((cod.copies(s), dom.copies(s)), dtype=np.complex128)
                block[r, c] = 1.0
                cells.append(TwoCell(dom, cod, {s: block}))
    return cells


def _flatten(cell: TwoCell) -> np.ndarray:
    parts = [cell.blocks[s].ravel() for s in sorted(cell.blocks, key=cell.pres.order)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.complex128)


@lru_cache(maxsize=settings.engine_cache_size)
def intertwiner_space(m: Bimodule, n: Bimodule) -> tuple[TwoCell, ...]:
    """
    Orthonormal basis (Hilbert-Schmidt on blocks) of the bimodule intertwiners m => n.

    The equivariance equations are linear in the blocks of f; they are assembled
    column by column on elementary 2-cells and solved with a canonical kernel basis.
    """
    _same_sides(m, n)
    unknowns = _elementary_cells(m.X, n.X)
    if not unknowns:
        return ()
    columns = [np.concatenate([_flatten(_left_defect(e, m, n)), _flatten(_right_defect(e, m, n))]) for e in unknowns]
    kernel = orthonormal_kernel(np.stack(columns, axis=1))
    basis = []
    for k in range(kernel.shape[1]):
        cell = TwoCell(m.X, n.X, {})
        for coefficient, e in zip(kernel[:, k], unknowns, strict=True):
            if coefficient != 0:
                cell = cell + e * coefficient
        basis.append(cell)
    return tuple(basis)


def sep_projector(m: Bimodule, n: Bimodule) -> TwoCell:
    """p = (id_X ⊗ λ_Y) ⋆ α(X, Q, Y) ⋆ (ρ_X^* ⊗ id_Y) on X⊗Y."""
    if not same_qsystem(m.right, n.left):
        raise QSystemMismatch(f"Cannot compose {m.label()} and {n.label()}: middle Q-systems differ")
    q = m.right
    return tensor_2cells(id2(m.X), n.lam) @ associator(m.X, q.Q, n.X) @ tensor_2cells(m.rho.adj, id2(n.X))


def rel_tensor(m: Bimodule, n: Bimodule, tol: Tolerance | None = None) -> RelTensor:
    """Relative tensor product X⊗_Q Y with its coisometry u: X⊗Y => X⊗_Q Y."""
    return _rel_tensor(m, n, tol or default_tolerance())


@lru_cache(maxsize=settings.engine_cache_size)
def _rel_tensor(m: Bimodule, n: Bimodule, tol: Tolerance) -> RelTensor:
    p = sep_projector(m, n)
    z, u = split_idempotent(p, tol)
    left, right = m.left, n.right
    lam = u @ tensor_2cells(m.lam, id2(n.X)) @ associator(left.Q, m.X, n.X).adj @ tensor_2cells(id2(left.Q), u.adj)
    rho = u @ tensor_2cells(id2(m.X), n.rho) @ associator(m.X, n.X, right.Q) @ tensor_2cells(u.adj, id2(right.Q))
    result = Bimodule(left, right, z, lam, rho)
    return RelTensor(result, u, p)


def unitor_left(bim: Bimodule) -> TwoCell:
    """λ^P_X: P⊗_P X => X."""
    return bim.lam @ rel_tensor(regular_bimodule(bim.left), bim).u.adj


def unitor_right(bim: Bimodule) -> TwoCell:
    """ρ^Q_X: X⊗_Q Q => X."""
    return bim.rho @ rel_tensor(bim, regular_bimodule(bim.right)).u.adj


def qsys_associator(l: Bimodule, m: Bimodule, n: Bimodule) -> TwoCell:  # noqa: E741
    """(L⊗_Q M)⊗_R N => L⊗_Q (M⊗_R N), the u-conjugate of the ambient associator."""
    lm, mn = rel_tensor(l, m), rel_tensor(m, n)
    lm_n = rel_tensor(lm.result, n)
    l_mn = rel_tensor(l, mn.result)
    return (
        l_mn.u
        @ tensor_2cells(id2(l.X), mn.u)
        @ associator(l.X, m.X, n.X)
        @ tensor_2cells(lm.u.adj, id2(n.X))
        @ lm_n.u.adj
    )


def tensor_intertwiners(
    f: TwoCell, g: TwoCell, m: Bimodule, n: Bimodule, m2: Bimodule, n2: Bimodule
) -> TwoCell:
    """f ⊗_Q g: M⊗_Q N => M'⊗_Q N' for intertwiners f: M => M' and g: N => N'."""
    return rel_tensor(m2, n2).u @ tensor_2cells(f, g) @ rel_tensor(m, n).u.adj


def qsys_pentagon_residual(k: Bimodule, l: Bimodule, m: Bimodule, n: Bimodule) -> float:  # noqa: E741
    kl, lm, mn = rel_tensor(k, l).result, rel_tensor(l, m).result, rel_tensor(m, n).result
    klm_left = rel_tensor(kl, m).result
    lmn_right = rel_tensor(l, mn).result
    lhs = qsys_associator(k, l, rel_tensor(m, n).result) @ qsys_associator(kl, m, n)
    rhs = (
        tensor_intertwiners(
            id2(k.X), qsys_associator(l, m, n), k, rel_tensor(rel_tensor(l, m).result, n).result, k, lmn_right
        )
        @ qsys_associator(k, lm, n)
        @ tensor_intertwiners(
            qsys_associator(k, l, m), id2(n.X), klm_left, n, rel_tensor(k, lm).result, n
        )
    )
    return lhs.distance(rhs)


def qsys_triangle_residual(m: Bimodule, n: Bimodule) -> float:
    q = m.right
    reg = regular_bimodule(q)
    mq = rel_tensor(m, reg).result
    qn = rel_tensor(reg, n).result
    lhs = tensor_intertwiners(id2(m.X), unitor_left(n), m, qn, m, n) @ qsys_associator(m, reg, n)
    rhs = tensor_intertwiners(unitor_right(m), id2(n.X), mq, n, m, n)
    return lhs.distance(rhs)


def condensation_from_qsystem(q: QSystem, tol: Tolerance | None = None) -> Condensation:
    """
    Dagger condensation of the trivial Q-system onto q.

    X is Q as a 1_b-Q bimodule and X• is Q as a Q-1_b bimodule; ε is m read as
    an intertwiner X•⊗X => Q and δ = ε^*.
    """
    tol = tol or default_tolerance()
    check = check_qsystem(q, tol)
    if not check.passed:
        raise InvalidStructure(f"Q-system {q.label()} fails {', '.join(check.failed_ids())}")
    bound = tol.bound()
    trivial = trivial_qsystem(q.pres, q.base)
    x = Bimodule(trivial, q, q.Q, unitor_l(q.Q), q.m, name=f"{q.label()}_left")
    xdot = Bimodule(q, trivial, q.Q, q.m, unitor_r(q.Q), name=f"{q.label()}_right")
    composite = rel_tensor(xdot, x, tol)
    epsilon = q.m @ composite.u.adj
    delta = epsilon.adj

    report = Report(title=f"condensation {q.label()}")
    report.record("epsilon-delta", (epsilon @ delta).distance(id2(q.Q)), bound, anchor="ε_X ⋆ δ_X = 1")
    report.merge(check_intertwiner(epsilon, composite.result, regular_bimodule(q), tol), prefix="epsilon-")
    report.record("delta-adjoint", delta.distance(epsilon.adj), bound, anchor="δ = ε^*")
    return Condensation(x, xdot, epsilon, delta, report)


def free_bimodule(p: QSystem, z: OneCell, q: QSystem) -> Bimodule:
    """(P⊗Z)⊗Q with actions induced by the multiplications of P and Q."""
    pz = tensor_1cells(p.Q, z)
    x = tensor_1cells(pz, q.Q)
    lam = (
        tensor_2cells(tensor_2cells(p.m, id2(z)), id2(q.Q))
        @ tensor_2cells(associator(p.Q, p.Q, z).adj, id2(q.Q))
        @ associator(p.Q, pz, q.Q).adj
    )
    rho = tensor_2cells(id2(pz), q.m) @ associator(pz, q.Q, q.Q)
    return Bimodule(p, q, x, lam, rho, name=f"{p.label()}[{z.label()}]{q.label()}")


def split_subbimodule(bim: Bimodule, projection: TwoCell, tol: Tolerance | None = None) -> tuple[Bimodule, TwoCell]:
    """Sub-bimodule cut out by an intertwining projection, with its coisometry."""
    z, u = split_idempotent(projection, tol)
    lam = u @ bim.lam @ tensor_2cells(id2(bim.left.Q), u.adj)
    rho = u @ bim.rho @ tensor_2cells(u.adj, id2(bim.right.Q))
    return Bimodule(bim.left, bim.right, z, lam, rho), u


def _spectral_pieces(bim: Bimodule, basis: tuple[TwoCell, ...], seed: int, tol: Tolerance) -> list[Bimodule]:
    rng = seeded_rng(seed)
    coefficients = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    a = TwoCell(bim.X, bim.X, {})
    for c, b in zip(coefficients, basis, strict=True):
        a = a + b * c
    h = a + a.adj

    entries: list[tuple[str, int]] = []
    values: list[float] = []
    vectors: dict[str, np.ndarray] = {}
    for s, block in h.blocks.items():
        w, v = np.linalg.eigh((block + block.conj().T) / 2)
        vectors[s] = v
        for idx, value in enumerate(w):
            entries.append((s, idx))
            values.append(float(value))

    pieces = []
    for group in cluster_sorted(np.array(values), settings.eigen_cluster_tol):
        blocks = {}
        for s in bim.X.mult:
            cols = [entries[g][1] for g in group if entries[g][0] == s]
            v = vectors[s][:, cols]
            blocks[s] = v @ v.conj().T
        piece, _ = split_subbimodule(bim, TwoCell(bim.X, bim.X, blocks), tol)
        if len(intertwiner_space(piece, piece)) != 1:
            raise DegenerateSpectrum(f"Spectral projection of {bim.label()} is not minimal (seed {seed})")
        pieces.append(piece)
    return pieces


def _minimal_pieces(bim: Bimodule, seed: int, tol: Tolerance) -> list[Bimodule]:
    basis = intertwiner_space(bim, bim)
    if len(basis) == 1:
        return [bim]
    for attempt in range(settings.max_seed_retries):
        try:
            return _spectral_pieces(bim, basis, seed + attempt, tol)
        except DegenerateSpectrum as e:
            logger.warning(f"Retrying eigen-splitting of {bim.label()}: {str(e)}")
    raise DegenerateSpectrum(
        f"Could not split End({bim.label()}) into minimal projections after {settings.max_seed_retries} seeds"
    )


def are_isomorphic(a: Bimodule, b: Bimodule, tol: Tolerance | None = None) -> bool:
    """Simple bimodules are isomorphic iff Hom is one-dimensional with a unitary polar part."""
    tol = tol or default_tolerance()
    if a.X.mult != b.X.mult:
        return False
    hom = intertwiner_space(a, b)
    if len(hom) != 1:
        return False
    w = TwoCell(a.X, b.X, {s: polar_unitary(block) for s, block in hom[0].blocks.items()})
    return tol.accepts((w.adj @ w).distance(id2(a.X))) and tol.accepts((w @ w.adj).distance(id2(b.X)))


@lru_cache(maxsize=settings.engine_cache_size)
def _simple_bimodules(p: QSystem, q: QSystem, tol: Tolerance, seed: int) -> tuple[Bimodule, ...]:
    """
    One representative per isomorphism class of simple P-Q bimodules.

    Every simple is a summand of some free bimodule P⊗Z⊗Q with Z an ambient
    simple. For P = Q the regular bimodule comes first.
    """
    if p.pres is not q.pres:
        raise QSystemMismatch("Q-systems live in different presentations")
    reps: list[Bimodule] = []
    if p is q:
        reg = regular_bimodule(p)
        if len(intertwiner_space(reg, reg)) != 1:
            raise InvalidStructure(f"Q-system {p.label()} is not connected")
        reps.append(reg)

    for s in p.pres.hom(p.base, q.base):
        free = free_bimodule(p, p.pres.simple_cell(s), q)
        for piece in _minimal_pieces(free, seed, tol):
            if not any(are_isomorphic(piece, r, tol) for r in reps):
                reps.append(piece)

    logger.debug(f"Found {len(reps)} simple bimodules {p.label()} - {q.label()}")
    return tuple(reps)


def simple_bimodules(
    p: QSystem, q: QSystem, tol: Tolerance | None = None, seed: int | None = None
) -> tuple[Bimodule, ...]:
    return _simple_bimodules(p, q, tol or default_tolerance(), settings.qsys_seed if seed is None else seed)
