"""
Panels (elements and their dyadic sub-squares) and the classification of panel pairs.

Relative position is decided from mesh topology in exact span units: shared panel
corners are identified through glued edges and corner vertex classes. Pairs that
touch along part of an edge (or overlap) are split until every sub-pair is
identical, shares one full edge, shares one vertex or is disjoint.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from isobem.bem.quadrature import SQUARE_SYMMETRIES, apply_symmetry
from isobem.geometry.topology import CORNERS, EDGE_AXIS, EDGE_FIXED, Topology
from isobem.mesh.hier_mesh import Box, Element, MultiPatchMesh, contact_dimension
from isobem.utils.errors import QuadratureError

IDENTITY = (False, False, False)


class ContactKind(Enum):
    DISJOINT = "disjoint"
    IDENTICAL = "identical"
    EDGE = "edge"
    VERTEX = "vertex"
    PARTIAL = "partial"


@dataclass(frozen=True)
class Panel:
    patch: int
    box: Box  # span units
    param: tuple[tuple[float, float], tuple[float, float]]

    @classmethod
    def of(cls, mesh: MultiPatchMesh, elem: Element) -> "Panel":
        return cls(elem.patch, elem.index_box, mesh.param_box(elem))

    @property
    def width(self) -> Fraction:
        return self.box[1] - self.box[0]

    @property
    def param_area(self) -> float:
        (u0, u1), (v0, v1) = self.param
        return (u1 - u0) * (v1 - v0)

    def corners(self) -> list[tuple[Fraction, Fraction]]:
        x0, x1, y0, y1 = self.box
        return [((x1 if cu else x0), (y1 if cv else y0)) for cu, cv in CORNERS.values()]

    def children(self) -> list["Panel"]:
        x0, x1, y0, y1 = self.box
        (u0, u1), (v0, v1) = self.param
        xm, ym = (x0 + x1) / 2, (y0 + y1) / 2
        um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
        return [
            Panel(self.patch, (xa, xb, ya, yb), ((ua, ub), (va, vb)))
            for (xa, xb, ua, ub) in ((x0, xm, u0, um), (xm, x1, um, u1))
            for (ya, yb, va, vb) in ((y0, ym, v0, vm), (ym, y1, vm, v1))
        ]

    def to_param(self, ref: np.ndarray, symmetry=IDENTITY) -> np.ndarray:
        """Map reference points of [0,1]^2 (after a square symmetry) into the patch"""
        s = apply_symmetry(symmetry, ref)
        (u0, u1), (v0, v1) = self.param
        return np.column_stack([u0 + (u1 - u0) * s[:, 0], v0 + (v1 - v0) * s[:, 1]])


@dataclass(frozen=True)
class Contact:
    kind: ContactKind
    symmetry_a: tuple[bool, bool, bool] = IDENTITY
    symmetry_b: tuple[bool, bool, bool] = IDENTITY
    # PARTIAL: 0 splits panel a, 1 splits panel b
    split: int = 0


class PanelTopology:
    """Exact identification of panel corners across glued patch boundaries"""

    def __init__(self, topology: Topology, spans: tuple[tuple[int, int], ...]):
        self.topology = topology
        self.spans = spans

    @classmethod
    def of(cls, mesh: MultiPatchMesh) -> "PanelTopology":
        return cls(mesh.topology, tuple(pm.space.n_spans for pm in mesh.patches))

    def _edge_to_point(self, patch: int, edge: int, s: Fraction) -> tuple[Fraction, Fraction]:
        n = self.spans[patch]
        direction, side = EDGE_FIXED[edge]
        fixed = Fraction(n[direction] * side)
        return (s, fixed) if direction == 1 else (fixed, s)

    def vertex_key(self, patch: int, x: Fraction, y: Fraction) -> tuple:
        n1, n2 = self.spans[patch]
        on_u, on_v = x in (0, n1), y in (0, n2)
        if on_u and on_v:
            corner = next(c for c, (cu, cv) in CORNERS.items() if (cu * n1, cv * n2) == (x, y))
            return ("v",) + min(self.topology.vertex_classes[(patch, corner)])
        key = ("p", patch, x, y)
        if on_u or on_v:
            edge = (3 if x == 0 else 1) if on_u else (0 if y == 0 else 2)
            s = (x, y)[EDGE_AXIS[edge]]
            length = self.spans[patch][EDGE_AXIS[edge]]
            mapped = self.topology.map_edge_interval(patch, edge, s, s, length)
            if mapped is not None:
                other, other_edge, s2, _ = mapped
                key = min(key, ("p", other) + self._edge_to_point(other, other_edge, s2))
        return key

    def corner_keys(self, panel: Panel) -> list[tuple]:
        return [self.vertex_key(panel.patch, x, y) for x, y in panel.corners()]

    def _side_overlaps(self, a: Panel, b: Panel) -> list[bool]:
        """For sides of a glued to b's patch: whether the overlap with b is a full shared side"""
        out = []
        n1, n2 = self.spans[a.patch]
        x0, x1, y0, y1 = a.box
        on_edge = {0: y0 == 0, 1: x1 == n1, 2: y1 == n2, 3: x0 == 0}
        for edge, flag in on_edge.items():
            if not flag:
                continue
            lo, hi = ((x0, x1), (y0, y1))[EDGE_AXIS[edge]]
            mapped = self.topology.map_edge_interval(a.patch, edge, lo, hi, self.spans[a.patch][EDGE_AXIS[edge]])
            if mapped is None or mapped[0] != b.patch:
                continue
            _, other_edge, mlo, mhi = mapped
            m1, m2 = self.spans[b.patch]
            bx0, bx1, by0, by1 = b.box
            direction, side = EDGE_FIXED[other_edge]
            if (bx0, bx1, by0, by1)[2 * direction + side] != (m1, m2)[direction] * side:
                continue
            blo, bhi = ((bx0, bx1), (by0, by1))[EDGE_AXIS[other_edge]]
            if min(bhi, mhi) - max(blo, mlo) > 0:
                out.append((blo, bhi) == (mlo, mhi))
        return out

    def classify(self, a: Panel, b: Panel) -> Contact:
        if a.patch == b.patch:
            dim = contact_dimension(a.box, b.box)
            if dim == 2:
                if a.box == b.box:
                    return Contact(ContactKind.IDENTICAL)
                return self._partial(a, b)
            partial = False
        else:
            partial = not all(self._side_overlaps(a, b))
        if partial:
            return self._partial(a, b)

        keys_a, keys_b = self.corner_keys(a), self.corner_keys(b)
        shared = [k for k in keys_a if k in keys_b]
        if not shared:
            if a.patch == b.patch and contact_dimension(a.box, b.box) is not None:
                return self._partial(a, b)
            return Contact(ContactKind.DISJOINT)
        if len(shared) == 1:
            if a.patch == b.patch and contact_dimension(a.box, b.box) == 1:
                return self._partial(a, b)
            ia, ib = keys_a.index(shared[0]), keys_b.index(shared[0])
            return Contact(ContactKind.VERTEX, _symmetry_to(ia), _symmetry_to(ib))
        if len(shared) == 2:
            ia = [keys_a.index(k) for k in shared]
            ib = [keys_b.index(k) for k in shared]
            return Contact(ContactKind.EDGE, _symmetry_to(*ia), _symmetry_to(*ib))
        raise QuadratureError(
            f"Unclassifiable adjacency between panels on patches {a.patch} and {b.patch}: "
            f"{len(shared)} shared corners"
        )

    @staticmethod
    def _partial(a: Panel, b: Panel) -> Contact:
        if a.width == b.width:
            raise QuadratureError(
                f"Panels of equal size overlap partially (patches {a.patch}, {b.patch})"
            )
        return Contact(ContactKind.PARTIAL, split=0 if a.width > b.width else 1)


def _symmetry_to(first: int, second: int = None) -> tuple[bool, bool, bool]:
    """Square symmetry mapping reference (0,0) to corner `first` and (1,0) to corner `second`"""
    ref = np.array([[0.0, 0.0], [1.0, 0.0]])
    for sym in SQUARE_SYMMETRIES:
        img = apply_symmetry(sym, ref)
        if tuple(img[0]) != CORNERS[first]:
            continue
        if second is None or tuple(img[1]) == CORNERS[second]:
            return sym
    raise QuadratureError(f"Panel corners {first} and {second} are not adjacent")


def panel_centres_and_radii(geom, mesh: MultiPatchMesh) -> tuple[np.ndarray, np.ndarray]:
    """Centre point and bounding radius (from a 3x3 sample) per element"""
    grid = np.linspace(0.0, 1.0, 3)
    u, v = np.meshgrid(grid, grid, indexing="ij")
    ref = np.column_stack([u.ravel(), v.ravel()])
    centres = np.empty((mesh.n_elements, 3))
    radii = np.empty(mesh.n_elements)
    for i, elem in enumerate(mesh.elements):
        x = geom.evaluate(elem.patch, Panel.of(mesh, elem).to_param(ref))
        centres[i] = x[4]
        radii[i] = np.linalg.norm(x - x[4], axis=1).max()
    return centres, radii
