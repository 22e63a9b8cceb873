"""
Hierarchical meshes on multi-patch boundaries.

Each patch keeps the nested domains Omega^0 ⊇ Omega^1 ⊇ ... as sets of level-k cells
of the uniformly refined tensor mesh; active elements are derived, never stored.
A cell of level k is bisected by adding its four children to Omega^{k+1}.

Element boxes are measured in units of initial knot spans (dyadic rationals), which
makes touching tests and cross-patch edge maps exact.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

from isobem.geometry.topology import CORNERS, EDGE_AXIS, EDGE_FIXED, Topology
from isobem.splines.spline_kernel import Cell, TensorIndex, TensorSplineSpace
from isobem.utils.errors import InterfaceMismatchError, MeshError, StaleElementError
from isobem.utils.logging_utils import get_logger

logger = get_logger(__name__)

Box = tuple[Fraction, Fraction, Fraction, Fraction]
FnKey = tuple[int, TensorIndex]  # (level, tensor index)


@dataclass(frozen=True, order=True)
class Element:
    patch: int
    level: int
    cell: Cell

    def children(self) -> tuple["Element", ...]:
        i, j = self.cell
        return tuple(
            Element(self.patch, self.level + 1, (2 * i + a, 2 * j + b))
            for a in (0, 1)
            for b in (0, 1)
        )

    def ancestor(self, level: int) -> Cell:
        shift = self.level - level
        if shift < 0:
            raise ValueError(f"Level {level} is finer than element level {self.level}")
        return self.cell[0] >> shift, self.cell[1] >> shift

    @property
    def index_box(self) -> Box:
        scale = 2**self.level
        i, j = self.cell
        return Fraction(i, scale), Fraction(i + 1, scale), Fraction(j, scale), Fraction(j + 1, scale)

    def __str__(self):
        return f"{self.patch} {self.level} {self.cell[0]} {self.cell[1]}"


def contact_dimension(a: Box, b: Box) -> Optional[int]:
    """None if closed boxes are disjoint, else dimension of the intersection (0, 1 or 2)"""
    dx = min(a[1], b[1]) - max(a[0], b[0])
    dy = min(a[3], b[3]) - max(a[2], b[2])
    if dx < 0 or dy < 0:
        return None
    return int(dx > 0) + int(dy > 0)


# region Patch meshes
@dataclass(frozen=True)
class PatchHierMesh:
    space: TensorSplineSpace
    omega: tuple[frozenset[Cell], ...]

    def __post_init__(self):
        omega = list(self.omega)
        while len(omega) > 1 and not omega[-1]:
            omega.pop()
        object.__setattr__(self, "omega", tuple(frozenset(o) for o in omega))
        n1, n2 = self.space.n_spans
        if self.omega[0] != frozenset((i, j) for i in range(n1) for j in range(n2)):
            raise MeshError("Omega^0 must contain every initial cell")
        for k in range(1, len(self.omega)):
            for i, j in self.omega[k]:
                if (i >> 1, j >> 1) not in self.omega[k - 1]:
                    raise MeshError(f"Omega^{k} is not nested in Omega^{k - 1} at cell {(i, j)}")
                base = (i & ~1, j & ~1)
                siblings = [(base[0] + a, base[1] + b) for a in (0, 1) for b in (0, 1)]
                if not all(s in self.omega[k] for s in siblings):
                    raise MeshError(f"Omega^{k} is not a union of level-{k - 1} cells at {(i, j)}")

    @classmethod
    def tensor(cls, space: TensorSplineSpace) -> "PatchHierMesh":
        n1, n2 = space.n_spans
        return cls(space, (frozenset((i, j) for i in range(n1) for j in range(n2)),))

    @property
    def n_levels(self) -> int:
        return len(self.omega)

    def omega_at(self, k: int) -> frozenset[Cell]:
        return self.omega[k] if k < len(self.omega) else frozenset()

    def level_space(self, k: int) -> TensorSplineSpace:
        return self.space.level(k)

    def n_cells(self, k: int) -> tuple[int, int]:
        n1, n2 = self.space.n_spans
        return n1 << k, n2 << k

    def is_refined(self, k: int, cell: Cell) -> bool:
        return (2 * cell[0], 2 * cell[1]) in self.omega_at(k + 1)

    def is_active(self, k: int, cell: Cell) -> bool:
        return cell in self.omega_at(k) and not self.is_refined(k, cell)

    @cached_property
    def active(self) -> tuple[tuple[int, Cell], ...]:
        return tuple(
            (k, c) for k in range(self.n_levels) for c in sorted(self.omega[k]) if not self.is_refined(k, c)
        )

    def active_ancestor(self, k: int, cell: Cell) -> tuple[int, Cell]:
        """The active element covering a level-k cell that lies outside Omega^k"""
        for j in range(min(k, self.n_levels - 1), -1, -1):
            anc = (cell[0] >> (k - j), cell[1] >> (k - j))
            if anc in self.omega[j]:
                return j, anc
        raise MeshError(f"Cell {cell} of level {k} is outside the patch")

    def active_descendants(self, k: int, cell: Cell) -> list[tuple[int, Cell]]:
        """Active elements inside a level-k cell of Omega^k"""
        if not self.is_refined(k, cell):
            return [(k, cell)]
        out = []
        i, j = cell
        for a in (0, 1):
            for b in (0, 1):
                out.extend(self.active_descendants(k + 1, (2 * i + a, 2 * j + b)))
        return out

    def locate(self, t) -> tuple[int, Cell]:
        """Active element containing the parametric point t (right-continuous at knot lines)"""
        k, cell = 0, tuple(int(kv.find_span(x)) for kv, x in zip(self.space.kvs, t))
        while self.is_refined(k, cell):
            fine = self.level_space(k + 1)
            cell = tuple(int(kv.find_span(x)) for kv, x in zip(fine.kvs, t))
            k += 1
        return k, cell

    # region Hierarchical B-spline selection
    @cached_property
    def functions(self) -> tuple[FnKey, ...]:
        """Level-k tensor functions with support in Omega^k but not in Omega^{k+1}"""
        selected = []
        for k in range(self.n_levels):
            sp = self.level_space(k)
            candidates = set()
            for c in self.omega[k]:
                candidates.update(sp.functions_on_cell(c))
            for fn in sorted(candidates):
                cells = sp.support_cells(fn)
                if all(c in self.omega[k] for c in cells) and not all(
                    self.is_refined(k, c) for c in cells
                ):
                    selected.append((k, fn))
        return tuple(selected)

    @cached_property
    def function_elements(self) -> dict[FnKey, tuple[tuple[int, Cell], ...]]:
        """Active elements covering the support of each selected function"""
        out = {}
        for k, fn in self.functions:
            elems = []
            for c in self.level_space(k).support_cells(fn):
                elems.extend(self.active_descendants(k, c))
            out[(k, fn)] = tuple(sorted(elems))
        return out

    @cached_property
    def element_functions(self) -> dict[tuple[int, Cell], tuple[FnKey, ...]]:
        out: dict = {e: [] for e in self.active}
        for key, elems in self.function_elements.items():
            for e in elems:
                out[e].append(key)
        return {e: tuple(sorted(v)) for e, v in out.items()}

    # endregion Hierarchical B-spline selection


# endregion Patch meshes


@dataclass(frozen=True)
class MultiPatchMesh:
    patches: tuple[PatchHierMesh, ...]
    topology: Topology
    # relaxed neighbours: common support OR touching (lowest order / full multiplicity)
    touching_neighbors: bool = False
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @cached_property
    def elements(self) -> tuple[Element, ...]:
        return tuple(
            Element(m, k, c) for m, pm in enumerate(self.patches) for k, c in pm.active
        )

    @cached_property
    def element_index(self) -> dict[Element, int]:
        return {e: i for i, e in enumerate(self.elements)}

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def __len__(self):
        return self.n_elements

    def is_active(self, elem: Element) -> bool:
        return 0 <= elem.patch < len(self.patches) and self.patches[elem.patch].is_active(
            elem.level, elem.cell
        )

    def require_active(self, elem: Element):
        if not self.is_active(elem):
            raise StaleElementError(f"Element {elem} is not active in this mesh")

    def n_spans(self, patch: int) -> tuple[int, int]:
        return self.patches[patch].space.n_spans

    def param_box(self, elem: Element) -> tuple[tuple[float, float], tuple[float, float]]:
        return self.patches[elem.patch].level_space(elem.level).cell_bounds(elem.cell)

    def param_area(self, elem: Element) -> float:
        (u0, u1), (v0, v1) = self.param_box(elem)
        return (u1 - u0) * (v1 - v0)

    def locate(self, patch: int, t) -> Element:
        k, cell = self.patches[patch].locate(t)
        return Element(patch, k, cell)

    @property
    def max_level(self) -> int:
        return max(pm.n_levels for pm in self.patches) - 1

    # region Contacts
    def _edge_elements(self, patch: int, edge: int) -> list[tuple[Fraction, Fraction, Element]]:
        key = ("edge", patch, edge)
        if key not in self._cache:
            n1, n2 = self.n_spans(patch)
            direction, side = EDGE_FIXED[edge]
            limit = (n1, n2)[direction] * side
            out = []
            for e in self.elements_of_patch(patch):
                x0, x1, y0, y1 = e.index_box
                lo_hi = ((x0, x1), (y0, y1))
                fixed = lo_hi[direction]
                if fixed[side] == limit:
                    lo, hi = lo_hi[EDGE_AXIS[edge]]
                    out.append((lo, hi, e))
            self._cache[key] = sorted(out)
        return self._cache[key]

    def elements_of_patch(self, patch: int) -> list[Element]:
        key = ("patch", patch)
        if key not in self._cache:
            self._cache[key] = [e for e in self.elements if e.patch == patch]
        return self._cache[key]

    def edge_length(self, patch: int, edge: int) -> int:
        return self.n_spans(patch)[EDGE_AXIS[edge]]

    def _corner_element(self, patch: int, corner: int) -> Element:
        n1, n2 = self.n_spans(patch)
        cu, cv = CORNERS[corner]
        t = (1.0 if cu else 0.0, 1.0 if cv else 0.0)
        pm = self.patches[patch]
        k, cell = 0, ((n1 - 1) * cu, (n2 - 1) * cv)
        while pm.is_refined(k, cell):
            k += 1
            cell = (2 * cell[0] + cu, 2 * cell[1] + cv)
        return Element(patch, k, cell)

    def cross_patch_contacts(self, elem: Element) -> dict[Element, tuple[int, bool]]:
        """
        Touching elements on other patches: element -> (contact dimension, conforming).
        A 1-dimensional contact is conforming when both elements share the full edge.
        """
        key = ("cross", elem)
        if key in self._cache:
            return self._cache[key]
        out: dict[Element, tuple[int, bool]] = {}
        n1, n2 = self.n_spans(elem.patch)
        x0, x1, y0, y1 = elem.index_box
        touches = {0: y0 == 0, 1: x1 == n1, 2: y1 == n2, 3: x0 == 0}
        for edge, on_edge in touches.items():
            if not on_edge:
                continue
            lo, hi = ((x0, x1), (y0, y1))[EDGE_AXIS[edge]]
            mapped = self.topology.map_edge_interval(
                elem.patch, edge, lo, hi, self.edge_length(elem.patch, edge)
            )
            if mapped is None:
                continue
            other, other_edge, mlo, mhi = mapped
            for lo2, hi2, e2 in self._edge_elements(other, other_edge):
                if lo2 > mhi or mlo > hi2:
                    continue
                dim = int(min(hi2, mhi) - max(lo2, mlo) > 0)
                conforming = dim == 0 or (lo2, hi2) == (mlo, mhi)
                prev = out.get(e2)
                if prev is None or prev[0] < dim:
                    out[e2] = (dim, conforming)
        for corner, (cu, cv) in CORNERS.items():
            if (x1 if cu else x0) != (n1 if cu else 0) or (y1 if cv else y0) != (n2 if cv else 0):
                continue
            for other, other_corner in self.topology.corner_partners(elem.patch, corner):
                e2 = self._corner_element(other, other_corner)
                out.setdefault(e2, (0, True))
        self._cache[key] = out
        return out

    def in_patch_contacts(self, elem: Element) -> dict[Element, int]:
        """Active elements of the same patch whose closed boxes meet elem's, with contact dimension"""
        key = ("in", elem)
        if key in self._cache:
            return self._cache[key]
        pm = self.patches[elem.patch]
        box = elem.index_box
        n1, n2 = pm.n_cells(elem.level)
        i, j = elem.cell
        found: dict[Element, int] = {}

        def visit(k, cell):
            e = Element(elem.patch, k, cell)
            dim = contact_dimension(box, e.index_box)
            if dim is None:
                return
            if pm.is_refined(k, cell):
                for child in e.children():
                    visit(child.level, child.cell)
            elif e != elem:
                found[e] = dim

        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                cell = (i + di, j + dj)
                if not (0 <= cell[0] < n1 and 0 <= cell[1] < n2):
                    continue
                if cell in pm.omega_at(elem.level):
                    visit(elem.level, cell)
                else:
                    k, anc = pm.active_ancestor(elem.level, cell)
                    e = Element(elem.patch, k, anc)
                    dim = contact_dimension(box, e.index_box)
                    if dim is not None and e != elem:
                        found[e] = dim
        self._cache[key] = found
        return found

    def contacts(self, elem: Element) -> dict[Element, int]:
        """All touching active elements (both kinds) with the dimension of the contact"""
        out = dict(self.in_patch_contacts(elem))
        out.update({e: dim for e, (dim, _) in self.cross_patch_contacts(elem).items()})
        return out

    # endregion Contacts

    def support_neighbors(self, elem: Element) -> set[Element]:
        """Same-patch elements sharing the support of a hierarchical B-spline with elem"""
        pm = self.patches[elem.patch]
        out = set()
        for key in pm.element_functions[(elem.level, elem.cell)]:
            out.update(Element(elem.patch, k, c) for k, c in pm.function_elements[key])
        return out


# region Construction
def _check_interface_knots(spaces, topology: Topology):
    for itf in topology.interfaces:
        kv_a = spaces[itf.patch_a].kvs[EDGE_AXIS[itf.edge_a]]
        kv_b = spaces[itf.patch_b].kvs[EDGE_AXIS[itf.edge_b]]
        lines_a = [1 - b for b in kv_a.breakpoints] if itf.reversed else list(kv_a.breakpoints)
        if sorted(lines_a) != list(kv_b.breakpoints):
            raise InterfaceMismatchError(
                f"Knot lines disagree across interface {itf}: {sorted(lines_a)} vs {list(kv_b.breakpoints)}"
            )


def initial_mesh(
    spaces: Iterable[TensorSplineSpace], topology: Topology, touching_neighbors: bool = None
) -> MultiPatchMesh:
    spaces = tuple(spaces)
    if len(spaces) != topology.n_patches:
        raise MeshError(f"Expected {topology.n_patches} spaces, got {len(spaces)}")
    _check_interface_knots(spaces, topology)
    if touching_neighbors is None:
        touching_neighbors = any(sp.full_multiplicity for sp in spaces)
    patches = tuple(PatchHierMesh.tensor(sp) for sp in spaces)
    return MultiPatchMesh(patches, topology, touching_neighbors)


def initial_mesh_for(geom, degree: int, n_spans: int = 1, refine_multiplicity: int = 1):
    """Same open uniform ansatz knots on every patch of a geometry"""
    space = TensorSplineSpace.uniform(degree, n_spans, refine_multiplicity)
    return initial_mesh([space] * geom.n_patches, geom.topology)


# endregion Construction


# region Neighbours and admissibility
def neighbors(mesh: MultiPatchMesh, elem: Element) -> set[Element]:
    """
    Elements sharing the support of a hierarchical B-spline with elem (plus touching
    same-patch elements in relaxed mode), plus touching elements on other patches.
    """
    mesh.require_active(elem)
    out = mesh.support_neighbors(elem)
    if mesh.touching_neighbors:
        out.update(mesh.in_patch_contacts(elem))
    out.update(mesh.cross_patch_contacts(elem))
    return out


def bad_neighbors(mesh: MultiPatchMesh, elem: Element) -> set[Element]:
    """
    Same-patch neighbours one level coarser, plus elements on other patches sharing
    an edge segment that are not finer than elem.
    """
    mesh.require_active(elem)
    out = {e for e in mesh.support_neighbors(elem) if e.level == elem.level - 1}
    if mesh.touching_neighbors:
        out.update(e for e in mesh.in_patch_contacts(elem) if e.level == elem.level - 1)
    out.update(
        e
        for e, (dim, _) in mesh.cross_patch_contacts(elem).items()
        if dim > 0 and e.level <= elem.level
    )
    return out


def admissibility_violations(mesh: MultiPatchMesh) -> list[tuple[Element, Element, str]]:
    issues = []
    for elem in mesh.elements:
        same_patch = mesh.support_neighbors(elem)
        if mesh.touching_neighbors:
            same_patch |= set(mesh.in_patch_contacts(elem))
        for other in same_patch:
            if abs(other.level - elem.level) > 1:
                issues.append((elem, other, "level gap"))
        for other, (dim, conforming) in mesh.cross_patch_contacts(elem).items():
            if not conforming:
                issues.append((elem, other, "hanging node"))
    return issues


def is_admissible(mesh: MultiPatchMesh) -> bool:
    return not admissibility_violations(mesh)


# endregion Neighbours and admissibility


# region Refinement
def closure(mesh: MultiPatchMesh, marked: Iterable[Element]) -> set[Element]:
    """Marked elements plus bad neighbours, repeated until nothing is added"""
    closed = set(marked)
    for elem in closed:
        mesh.require_active(elem)
    added = set(closed)
    rounds = 0
    while added:
        new = set()
        for elem in sorted(added):
            new.update(bad_neighbors(mesh, elem) - closed)
        closed |= new
        added = new
        rounds += 1
    logger.debug(f"Closure: {len(closed)} elements after {rounds} rounds")
    return closed


def bisect(mesh: MultiPatchMesh, elements: Iterable[Element]) -> MultiPatchMesh:
    """Add each element's cell to Omega^{level+1} of its patch (no closure)"""
    additions: dict[int, dict[int, set[Cell]]] = {}
    for elem in elements:
        mesh.require_active(elem)
        per_level = additions.setdefault(elem.patch, {})
        per_level.setdefault(elem.level + 1, set()).update(c.cell for c in elem.children())
    patches = []
    for m, pm in enumerate(mesh.patches):
        extra = additions.get(m)
        if not extra:
            patches.append(pm)
            continue
        depth = max(pm.n_levels, max(extra) + 1)
        omega = tuple(pm.omega_at(k) | frozenset(extra.get(k, ())) for k in range(depth))
        patches.append(PatchHierMesh(pm.space, omega))
    return MultiPatchMesh(tuple(patches), mesh.topology, mesh.touching_neighbors)


def refine(mesh: MultiPatchMesh, marked: Iterable[Element]) -> MultiPatchMesh:
    marked = set(marked)
    if not marked:
        return mesh
    return bisect(mesh, closure(mesh, marked))


def uniform_refine(mesh: MultiPatchMesh) -> MultiPatchMesh:
    return refine(mesh, mesh.elements)


def overlay(mesh_a: MultiPatchMesh, mesh_b: MultiPatchMesh) -> MultiPatchMesh:
    """Coarsest common refinement: per patch and level, the union of the domains"""
    if mesh_a.topology != mesh_b.topology or len(mesh_a.patches) != len(mesh_b.patches):
        raise MeshError("Overlay of meshes on different boundaries")
    patches = []
    for pa, pb in zip(mesh_a.patches, mesh_b.patches):
        if pa.space != pb.space:
            raise MeshError("Overlay of meshes with different initial meshes")
        depth = max(pa.n_levels, pb.n_levels)
        patches.append(
            PatchHierMesh(pa.space, tuple(pa.omega_at(k) | pb.omega_at(k) for k in range(depth)))
        )
    return MultiPatchMesh(tuple(patches), mesh_a.topology, mesh_a.touching_neighbors)


def is_finer(fine: MultiPatchMesh, coarse: MultiPatchMesh) -> bool:
    if len(fine.patches) != len(coarse.patches):
        return False
    return all(
        pf.space == pc.space and all(pc.omega_at(k) <= pf.omega_at(k) for k in range(pc.n_levels))
        for pf, pc in zip(fine.patches, coarse.patches)
    )


# endregion Refinement


# region Snapshot export
def format_mesh(mesh: MultiPatchMesh) -> str:
    return "".join(f"{e}\n" for e in mesh.elements)


def dump_mesh(mesh: MultiPatchMesh, path):
    with open(path, "w") as f:
        f.write(format_mesh(mesh))


def parse_mesh(text: str, initial: MultiPatchMesh) -> MultiPatchMesh:
    """Rebuild a mesh from `patch level i1 i2` records over the given initial mesh"""
    omega: list[dict[int, set[Cell]]] = [dict() for _ in initial.patches]
    records = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            m, k, i, j = (int(x) for x in line.split())
        except ValueError:
            raise MeshError(f"Line {line_no}: expected 'patch level i1 i2', got {line!r}")
        records.append(Element(m, k, (i, j)))
        for level in range(k + 1):
            shift = k - level
            omega[m].setdefault(level, set()).add((i >> shift, j >> shift))
    patches = []
    for m, pm0 in enumerate(initial.patches):
        levels = omega[m]
        depth = max(levels) + 1 if levels else 1
        cells = [set(levels.get(k, ())) for k in range(depth)]
        cells[0] |= pm0.omega[0]
        # siblings of every refined cell
        for k in range(1, depth):
            cells[k] |= {(2 * (i >> 1) + a, 2 * (j >> 1) + b) for i, j in cells[k] for a in (0, 1) for b in (0, 1)}
        patches.append(PatchHierMesh(pm0.space, tuple(frozenset(c) for c in cells)))
    mesh = MultiPatchMesh(tuple(patches), initial.topology, initial.touching_neighbors)
    if sorted(records) != list(mesh.elements):
        raise MeshError("Records do not describe the active elements of a hierarchical mesh")
    return mesh


# endregion Snapshot export


def patch_sizes(mesh: MultiPatchMesh) -> np.ndarray:
    """#Pi(T) for every element: size of the same-patch support neighbourhood"""
    return np.array([len(mesh.support_neighbors(e)) for e in mesh.elements])
