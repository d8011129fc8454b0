"""
Finitely presented unitary 2-categories.

A presentation lists objects, one simple 1-cell per isomorphism class, fusion
multiplicities N[i][j][k] and associator tensors F[i,j,k;l]. General 1-cells are
formal direct sums of simples and 2-cells are block matrices indexed by simples.

Canonical decomposition: the copies of a simple k inside X⊗Y are listed
lexicographically by (i, copy of i in X, j, copy of j in Y, channel of k in i⊗j),
with simples compared by their position in the presentation. Every horizontal
composition formula below is relative to this ordering.

F[i,j,k;l] has rows indexed by left trees (m, α, β) (α: i⊗j→m, β: m⊗k→l) and
columns by right trees (n, γ, δ) (γ: j⊗k→n, δ: i⊗n→l), and sends a left tree to
Σ F[(m,α,β),(n,γ,δ)] times the right tree.

Unit fusion makes 1_a⊗s and s⊗1_b equal to s with multiplicity one, so the
unitor coefficient matrix of each (unit, simple) pair is 1×1; it is stored as
the scalar lunit[s] (unit 1_{src s}) or runit[s] (unit 1_{tgt s}), default 1.
"""

from collections import OrderedDict
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field
from itertools import product
from typing import Any

import numpy as np
from loguru import logger
from scipy import linalg as sla

from ..config import settings
from ..models.report_models import Report
from .errors import DomainMismatch, ObjectMismatch, ShapeMismatch, StructuralError, UnknownObject
from .linalg import CMat, Tolerance, adjoint, default_tolerance, is_unitary, residual_norm, split_projection


Tree = tuple[str, int, int]
Summand = tuple[str, int, str, int, int]


@dataclass(frozen=True)
class Simple:
    name: str
    src: str
    tgt: str


@dataclass(eq=False)
class Presentation:
    objects: tuple[str, ...]
    simples: tuple[Simple, ...]
    unit: dict[str, str]
    fusion: dict[tuple[str, str], dict[str, int]]
    assoc: dict[tuple[str, str, str, str], CMat] = field(default_factory=dict)
    lunit: dict[str, complex] = field(default_factory=dict)
    runit: dict[str, complex] = field(default_factory=dict)
    name: str = ""
    _cache: dict[Any, Any] = field(default_factory=dict, repr=False)
    _memo: OrderedDict = field(default_factory=OrderedDict, repr=False)

    def __post_init__(self):
        if not self.objects:
            raise StructuralError("Presentation has no objects")
        self.objects = tuple(self.objects)
        self.simples = tuple(self.simples)
        self._order = {s.name: n for n, s in enumerate(self.simples)}
        self._by_name = {s.name: s for s in self.simples}
        if len(self._order) != len(self.simples):
            raise StructuralError("Duplicate simple ids")
        for s in self.simples:
            if s.src not in self.objects or s.tgt not in self.objects:
                raise StructuralError(f"Simple {s.name} references an unknown object")
        for a in self.objects:
            u = self.unit.get(a)
            if u is None or u not in self._by_name:
                raise StructuralError(f"Object {a} has no unit simple")
            if self._by_name[u].src != a or self._by_name[u].tgt != a:
                raise StructuralError(f"Unit {u} of {a} is not an endomorphism of {a}")
        for (i, j), targets in self.fusion.items():
            si, sj = self.simple(i), self.simple(j)
            if si.tgt != sj.src:
                raise StructuralError(f"Fusion entry for non-composable pair ({i}, {j})")
            for k, n in targets.items():
                sk = self.simple(k)
                if n < 0:
                    raise StructuralError(f"Negative multiplicity N[{i}][{j}][{k}]")
                if (sk.src, sk.tgt) != (si.src, sj.tgt):
                    raise StructuralError(f"N[{i}][{j}][{k}] has mismatched endpoints")
        self.fusion = {key: {k: n for k, n in targets.items() if n > 0} for key, targets in self.fusion.items()}

    # -- lookup ------------------------------------------------------------

    def simple(self, name: str) -> Simple:
        try:
            return self._by_name[name]
        except KeyError as e:
            raise UnknownObject(f"Unknown simple '{name}'") from e

    def order(self, name: str) -> int:
        return self._order[name]

    def check_object(self, a: str) -> str:
        if a not in self.objects:
            raise UnknownObject(f"Unknown object '{a}'")
        return a

    def hom(self, a: str, b: str) -> list[str]:
        return [s.name for s in self.simples if s.src == a and s.tgt == b]

    def N(self, i: str, j: str, k: str) -> int:  # noqa: N802
        return self.fusion.get((i, j), {}).get(k, 0)

    def products(self, i: str, j: str) -> list[tuple[str, int]]:
        targets = self.fusion.get((i, j), {})
        return sorted(targets.items(), key=lambda item: self._order[item[0]])

    def lunit_of(self, s: str) -> complex:
        return complex(self.lunit.get(s, 1.0))

    def runit_of(self, s: str) -> complex:
        return complex(self.runit.get(s, 1.0))

    def is_unit(self, s: str) -> bool:
        simple = self.simple(s)
        return self.unit[simple.src] == s

    def memo(self, key: tuple, build: Callable[[], Any]) -> Any:
        """Least-recently-used store for derived tensor data, capped at settings.presentation_cache_size."""
        if key in self._memo:
            self._memo.move_to_end(key)
            return self._memo[key]
        value = build()
        self._memo[key] = value
        while len(self._memo) > settings.presentation_cache_size:
            self._memo.popitem(last=False)
        return value

    # -- 1-cells -------------------------------------------------------------

    def cell(self, mult: Mapping[str, int], src: str | None = None, tgt: str | None = None) -> "OneCell":
        """Build a 1-cell from a multiplicity map; src/tgt are needed only for the zero 1-cell."""
        support = {s: int(n) for s, n in mult.items() if n}
        for s in support:
            simple = self.simple(s)
            src = simple.src if src is None else src
            tgt = simple.tgt if tgt is None else tgt
            if (simple.src, simple.tgt) != (src, tgt):
                raise ObjectMismatch(f"Simple {s} is not a 1-cell {src} -> {tgt}")
        if src is None or tgt is None:
            raise ObjectMismatch("The zero 1-cell needs explicit endpoints")
        self.check_object(src)
        self.check_object(tgt)
        ordered = dict(sorted(support.items(), key=lambda item: self._order[item[0]]))
        return OneCell(self, src, tgt, ordered)

    def simple_cell(self, s: str) -> "OneCell":
        return self.cell({s: 1})

    def unit_cell(self, a: str) -> "OneCell":
        return self.simple_cell(self.unit[self.check_object(a)])

    # -- fusion trees --------------------------------------------------------

    def left_trees(self, i: str, j: str, k: str, l: str) -> list[Tree]:  # noqa: E741
        return [
            (m, alpha, beta)
            for m, n_ij in self.products(i, j)
            for alpha in range(n_ij)
            for beta in range(self.N(m, k, l))
        ]

    def right_trees(self, i: str, j: str, k: str, l: str) -> list[Tree]:  # noqa: E741
        return [
            (n, gamma, delta)
            for n, n_jk in self.products(j, k)
            for gamma in range(n_jk)
            for delta in range(self.N(i, n, l))
        ]

    def F(self, i: str, j: str, k: str, l: str) -> CMat:  # noqa: N802, E741
        rows = len(self.left_trees(i, j, k, l))
        cols = len(self.right_trees(i, j, k, l))
        if rows != cols:
            raise StructuralError(f"Tree spaces of ({i},{j},{k};{l}) have dimensions {rows} and {cols}")
        matrix = self.assoc.get((i, j, k, l))
        if matrix is None:
            raise StructuralError(f"Missing F entry for ({i},{j},{k};{l})")
        if matrix.shape != (rows, cols):
            raise StructuralError(f"F entry ({i},{j},{k};{l}) has shape {matrix.shape}, expected {(rows, cols)}")
        return matrix

    def chains(self, length: int) -> Iterator[tuple[str, ...]]:
        """All composable sequences of simples of the given length."""
        if length == 0:
            return
        frontier: list[tuple[str, ...]] = [(s.name,) for s in self.simples]
        for _ in range(length - 1):
            frontier = [
                chain + (s.name,) for chain in frontier for s in self.simples if s.src == self.simple(chain[-1]).tgt
            ]
        yield from frontier


@dataclass(frozen=True, eq=False)
class OneCell:
    pres: Presentation = field(repr=False)
    src: str
    tgt: str
    mult: dict[str, int]

    @property
    def key(self) -> tuple:
        return (self.src, self.tgt, tuple(self.mult.items()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OneCell):
            return NotImplemented
        return self.pres is other.pres and self.key[:2] == other.key[:2] and self.mult == other.mult

    def __hash__(self) -> int:
        return hash((id(self.pres), self.src, self.tgt, frozenset(self.mult.items())))

    def copies(self, s: str) -> int:
        return self.mult.get(s, 0)

    @property
    def dim(self) -> int:
        return sum(self.mult.values())

    def label(self) -> str:
        if not self.mult:
            return f"0[{self.src}->{self.tgt}]"
        return "+".join(s if n == 1 else f"{n}{s}" for s, n in self.mult.items())


def _support(x: OneCell, y: OneCell) -> list[str]:
    names = set(x.mult) | set(y.mult)
    return sorted(names, key=x.pres.order)


@dataclass(frozen=True, eq=False)
class TwoCell:
    dom: OneCell
    cod: OneCell
    blocks: dict[str, CMat]

    def __post_init__(self):
        if self.dom.pres is not self.cod.pres:
            raise ObjectMismatch("2-cell between 1-cells of different presentations")
        if (self.dom.src, self.dom.tgt) != (self.cod.src, self.cod.tgt):
            raise ObjectMismatch(
                f"2-cell between 1-cells {self.dom.src}->{self.dom.tgt} and {self.cod.src}->{self.cod.tgt}"
            )
        blocks = {}
        for s in _support(self.dom, self.cod):
            shape = (self.cod.copies(s), self.dom.copies(s))
            block = self.blocks.get(s)
            if block is None:
                block = np.zeros(shape, dtype=np.complex128)
            else:
                block = np.asarray(block, dtype=np.complex128)
            if block.shape != shape:
                raise ShapeMismatch(f"Block {s} has shape {block.shape}, expected {shape}")
            blocks[s] = block
        object.__setattr__(self, "blocks", blocks)

    @property
    def pres(self) -> Presentation:
        return self.dom.pres

    def block(self, s: str) -> CMat:
        found = self.blocks.get(s)
        if found is None:
            return np.zeros((self.cod.copies(s), self.dom.copies(s)), dtype=np.complex128)
        return found

    @property
    def adj(self) -> "TwoCell":
        return dagger(self)

    def norm(self) -> float:
        return max((residual_norm(b) for b in self.blocks.values()), default=0.0)

    def opnorm(self) -> float:
        return max((float(np.linalg.norm(b, 2)) for b in self.blocks.values() if b.size), default=0.0)

    def trace(self) -> complex:
        return complex(sum(np.trace(b) for b in self.blocks.values()))

    def _same_frame(self, other: "TwoCell"):
        if self.dom != other.dom or self.cod != other.cod:
            raise DomainMismatch(
                f"2-cells {self.dom.label()} => {self.cod.label()} and {other.dom.label()} => {other.cod.label()}"
            )

    def __add__(self, other: "TwoCell") -> "TwoCell":
        self._same_frame(other)
        return TwoCell(self.dom, self.cod, {s: b + other.block(s) for s, b in self.blocks.items()})

    def __sub__(self, other: "TwoCell") -> "TwoCell":
        self._same_frame(other)
        return TwoCell(self.dom, self.cod, {s: b - other.block(s) for s, b in self.blocks.items()})

    def __mul__(self, scalar: complex) -> "TwoCell":
        return TwoCell(self.dom, self.cod, {s: scalar * b for s, b in self.blocks.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "TwoCell":
        return self * -1

    def __matmul__(self, other: "TwoCell") -> "TwoCell":
        return vcompose(self, other)

    def distance(self, other: "TwoCell") -> float:
        return (self - other).norm()


# -- vertical structure ------------------------------------------------------


def vcompose(g: TwoCell, f: TwoCell) -> TwoCell:
    """g ⋆ f, i.e. first f then g."""
    if f.cod != g.dom:
        raise DomainMismatch(f"Cannot compose: codomain {f.cod.label()} is not domain {g.dom.label()}")
    return TwoCell(f.dom, g.cod, {s: g.block(s) @ f.block(s) for s in _support(f.dom, g.cod)})


def dagger(f: TwoCell) -> TwoCell:
    return TwoCell(f.cod, f.dom, {s: adjoint(b) for s, b in f.blocks.items()})


def id2(x: OneCell) -> TwoCell:
    return TwoCell(x, x, {s: np.eye(n, dtype=np.complex128) for s, n in x.mult.items()})


def dsum_1cells(x: OneCell, y: OneCell) -> OneCell:
    if (x.src, x.tgt) != (y.src, y.tgt):
        raise ObjectMismatch("Direct sum of 1-cells with different endpoints")
    mult = dict(x.mult)
    for s, n in y.mult.items():
        mult[s] = mult.get(s, 0) + n
    return x.pres.cell(mult, x.src, x.tgt)


def dsum(f: TwoCell, g: TwoCell) -> TwoCell:
    """Block direct sum; the copies of f come before those of g."""
    dom = dsum_1cells(f.dom, g.dom)
    cod = dsum_1cells(f.cod, g.cod)
    return TwoCell(dom, cod, {s: sla.block_diag(f.block(s), g.block(s)) for s in _support(dom, cod)})


def inclusion(x: OneCell, s: str, copy: int) -> TwoCell:
    """Isometric inclusion of the given copy of the simple s into x."""
    if not 0 <= copy < x.copies(s):
        raise ShapeMismatch(f"{x.label()} has no copy {copy} of {s}")
    column = np.zeros((x.copies(s), 1), dtype=np.complex128)
    column[copy, 0] = 1.0
    return TwoCell(x.pres.simple_cell(s), x, {s: column})


def summands(x: OneCell) -> Iterator[tuple[str, int]]:
    for s, n in x.mult.items():
        for a in range(n):
            yield s, a


def split_idempotent(p: TwoCell, tol: Tolerance | None = None) -> tuple[OneCell, TwoCell]:
    """
    Orthogonally split a projection p on X.

    Returns:
        (Z, u) with u: X => Z, u⋆u^* = id_Z and u^*⋆u = p
    """
    tol = tol or default_tolerance()
    if p.dom != p.cod:
        raise DomainMismatch("Only endomorphisms can be split")
    x = p.dom
    pieces = {s: split_projection(p.block(s), tol) for s in x.mult}
    z = x.pres.cell({s: u.shape[0] for s, u in pieces.items()}, x.src, x.tgt)
    return z, TwoCell(x, z, pieces)


# -- horizontal structure ----------------------------------------------------


def decomposition(x: OneCell, y: OneCell) -> dict[str, list[Summand]]:
    """Canonical list of summands of x⊗y for every simple k in the product."""
    if x.pres is not y.pres:
        raise ObjectMismatch("1-cells belong to different presentations")
    if x.tgt != y.src:
        raise ObjectMismatch(f"Cannot compose 1-cells {x.src}->{x.tgt} and {y.src}->{y.tgt}")
    return x.pres.memo(("decomposition", x.key, y.key), lambda: _summand_lists(x, y))


def _summand_lists(x: OneCell, y: OneCell) -> dict[str, list[Summand]]:
    pres = x.pres
    lists: dict[str, list[Summand]] = {}
    for i, n_i in x.mult.items():
        for a in range(n_i):
            for j, n_j in y.mult.items():
                for b in range(n_j):
                    for k, n_k in pres.products(i, j):
                        lists.setdefault(k, []).extend((i, a, j, b, mu) for mu in range(n_k))
    return dict(sorted(lists.items(), key=lambda item: pres.order(item[0])))


def _positions(x: OneCell, y: OneCell) -> dict[str, dict[Summand, int]]:
    return x.pres.memo(
        ("positions", x.key, y.key),
        lambda: {k: {t: pos for pos, t in enumerate(entries)} for k, entries in decomposition(x, y).items()},
    )


def tensor_1cells(x: OneCell, y: OneCell) -> OneCell:
    lists = decomposition(x, y)
    return x.pres.cell({k: len(entries) for k, entries in lists.items()}, x.src, y.tgt)


def tensor_2cells(f: TwoCell, g: TwoCell) -> TwoCell:
    """Horizontal composite f⊗g through the canonical decompositions."""
    pres = f.pres
    dom = tensor_1cells(f.dom, g.dom)
    cod = tensor_1cells(f.cod, g.cod)
    dom_pos = _positions(f.dom, g.dom)
    cod_pos = _positions(f.cod, g.cod)
    blocks = {k: np.zeros((cod.copies(k), dom.copies(k)), dtype=np.complex128) for k in _support(dom, cod)}
    for i in _support(f.dom, f.cod):
        fi = f.block(i)
        for j in _support(g.dom, g.cod):
            gj = g.block(j)
            for k, n in pres.products(i, j):
                out_copies = product(range(fi.shape[0]), range(gj.shape[0]), range(n))
                in_copies = product(range(fi.shape[1]), range(gj.shape[1]), range(n))
                rows = [cod_pos[k][(i, a, j, b, mu)] for a, b, mu in out_copies]
                cols = [dom_pos[k][(i, a, j, b, mu)] for a, b, mu in in_copies]
                if rows and cols:
                    blocks[k][np.ix_(rows, cols)] = np.kron(np.kron(fi, gj), np.eye(n))
    return TwoCell(dom, cod, blocks)


def associator(x: OneCell, y: OneCell, z: OneCell) -> TwoCell:
    """Unitary (x⊗y)⊗z => x⊗(y⊗z) assembled from the F tensors."""
    return x.pres.memo(("associator", x.key, y.key, z.key), lambda: _assemble_associator(x, y, z))


def _assemble_associator(x: OneCell, y: OneCell, z: OneCell) -> TwoCell:
    pres = x.pres
    xy = tensor_1cells(x, y)
    yz = tensor_1cells(y, z)
    dom = tensor_1cells(xy, z)
    cod = tensor_1cells(x, yz)
    inner_left = decomposition(x, y)
    inner_right = decomposition(y, z)

    # Group both sides by the simple summands (i, a, j, b, s, e) they come from
    left: dict[tuple, dict[Tree, int]] = {}
    for l, entries in decomposition(xy, z).items():  # noqa: E741
        for pos, (k, c, s, e, nu) in enumerate(entries):
            i, a, j, b, mu = inner_left[k][c]
            left.setdefault((l, i, a, j, b, s, e), {})[(k, mu, nu)] = pos
    right: dict[tuple, dict[Tree, int]] = {}
    for l, entries in decomposition(x, yz).items():  # noqa: E741
        for pos, (i, a, t, d, nu) in enumerate(entries):
            j, b, s, e, mu = inner_right[t][d]
            right.setdefault((l, i, a, j, b, s, e), {})[(t, mu, nu)] = pos

    blocks = {k: np.zeros((cod.copies(k), dom.copies(k)), dtype=np.complex128) for k in _support(dom, cod)}
    for group in sorted(left.keys() | right.keys()):
        l, i, _, j, _, s, _ = group  # noqa: E741
        matrix = pres.F(i, j, s, l)
        left_pos, right_pos = left.get(group, {}), right.get(group, {})
        cols = [left_pos[tree] for tree in pres.left_trees(i, j, s, l)]
        rows = [right_pos[tree] for tree in pres.right_trees(i, j, s, l)]
        blocks[l][np.ix_(rows, cols)] = matrix.T

    return TwoCell(dom, cod, blocks)


def unitor_l(x: OneCell) -> TwoCell:
    """λ_X: 1_a ⊗ X => X."""
    pres = x.pres
    one = pres.unit_cell(x.src)
    dom = tensor_1cells(one, x)
    blocks = {k: np.zeros((x.copies(k), dom.copies(k)), dtype=np.complex128) for k in _support(dom, x)}
    for k, entries in decomposition(one, x).items():
        for pos, (_, _, j, b, _) in enumerate(entries):
            if j != k:
                raise StructuralError(f"Unit fusion fails: 1 ⊗ {j} contains {k}")
            blocks[k][b, pos] = pres.lunit_of(k)
    return TwoCell(dom, x, blocks)


def unitor_r(x: OneCell) -> TwoCell:
    """ρ_X: X ⊗ 1_b => X."""
    pres = x.pres
    one = pres.unit_cell(x.tgt)
    dom = tensor_1cells(x, one)
    blocks = {k: np.zeros((x.copies(k), dom.copies(k)), dtype=np.complex128) for k in _support(dom, x)}
    for k, entries in decomposition(x, one).items():
        for pos, (i, a, _, _, _) in enumerate(entries):
            if i != k:
                raise StructuralError(f"Unit fusion fails: {i} ⊗ 1 contains {k}")
            blocks[k][a, pos] = pres.runit_of(k)
    return TwoCell(dom, x, blocks)


# -- validation --------------------------------------------------------------


def _unit_fusion_residual(pres: Presentation, a: str) -> float:
    u = pres.unit[a]
    for s in pres.simples:
        if s.src == a:
            if pres.fusion.get((u, s.name), {}) != {s.name: 1}:
                return float("inf")
        if s.tgt == a:
            if pres.fusion.get((s.name, u), {}) != {s.name: 1}:
                return float("inf")
    return 0.0


def pentagon_residual(i: OneCell, j: OneCell, k: OneCell, l: OneCell) -> float:  # noqa: E741
    lhs = associator(i, j, tensor_1cells(k, l)) @ associator(tensor_1cells(i, j), k, l)
    rhs = (
        tensor_2cells(id2(i), associator(j, k, l))
        @ associator(i, tensor_1cells(j, k), l)
        @ tensor_2cells(associator(i, j, k), id2(l))
    )
    return lhs.distance(rhs)


def triangle_residual(x: OneCell, y: OneCell) -> float:
    one = x.pres.unit_cell(x.tgt)
    lhs = tensor_2cells(id2(x), unitor_l(y)) @ associator(x, one, y)
    rhs = tensor_2cells(unitor_r(x), id2(y))
    return lhs.distance(rhs)


def validate(pres: Presentation, tol: Tolerance | None = None) -> Report:
    """
    Check unit fusion, unitarity of F and unitors, the pentagon and the triangle.

    Structural problems (missing F entries, mismatched tree dimensions) do not
    raise; they become failing rows with an infinite residual.
    """
    tol = tol or default_tolerance()
    bound = tol.bound()
    report = Report(title=f"validate {pres.name}".strip())

    for a in pres.objects:
        report.record(f"unit-fusion[{a}]", _unit_fusion_residual(pres, a), bound, anchor="unit fusion rules")

    for s in pres.simples:
        residual = max(abs(abs(pres.lunit_of(s.name)) - 1), abs(abs(pres.runit_of(s.name)) - 1))
        report.record(f"unitor-unitary[{s.name}]", residual, bound, anchor="unitors are unitary")

    for i, j, k in pres.chains(3):
        targets = {l for m, _ in pres.products(i, j) for l, _ in pres.products(m, k)}
        for l in sorted(targets, key=pres.order):  # noqa: E741
            check_id = f"F-unitary[{i},{j},{k};{l}]"
            try:
                report.record(check_id, is_unitary(pres.F(i, j, k, l), tol).value, bound, anchor="F is unitary")
            except StructuralError as e:
                report.fail(check_id, bound, str(e), anchor="F is unitary")

    cells = {s.name: pres.simple_cell(s.name) for s in pres.simples}
    for chain in pres.chains(4):
        check_id = f"pentagon[{','.join(chain)}]"
        try:
            residual = pentagon_residual(*(cells[c] for c in chain))
            report.record(check_id, residual, bound, anchor="pentagon")
        except StructuralError as e:
            report.fail(check_id, bound, str(e), anchor="pentagon")

    for x, y in pres.chains(2):
        check_id = f"triangle[{x},{y}]"
        try:
            report.record(check_id, triangle_residual(cells[x], cells[y]), bound, anchor="triangle")
        except StructuralError as e:
            report.fail(check_id, bound, str(e), anchor="triangle")

    logger.debug(f"Validated presentation {pres.name or '<unnamed>'}: {len(report.checks)} checks")
    return report
