"""
Interface topology of a multi-patch boundary.

Parametric conventions on [0,1]^2 (u = direction 0, v = direction 1):

    corners: 0=(0,0)  1=(1,0)  2=(1,1)  3=(0,1)
    edges:   0: v=0, s=u    1: u=1, s=v    2: v=1, s=u    3: u=0, s=v

The edge coordinate s runs from the edge's first corner to its second.
Edge positions are given in units of initial knot spans along the edge,
so the glued-edge map is s' = s or s' = L - s, exact on dyadic rationals.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional

from isobem.utils.errors import InterfaceMismatchError

CORNERS = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
# parametric direction running along the edge
EDGE_AXIS = {0: 0, 1: 1, 2: 0, 3: 1}
# (fixed direction, side 0/1)
EDGE_FIXED = {0: (1, 0), 1: (0, 1), 2: (1, 1), 3: (0, 0)}
# corner at s=0, corner at s=L
EDGE_CORNERS = {0: (0, 1), 1: (1, 2), 2: (3, 2), 3: (0, 3)}


def edge_point(edge: int, s: float) -> tuple[float, float]:
    """Parametric point on an edge of [0,1]^2, s in [0,1]"""
    direction, side = EDGE_FIXED[edge]
    return (s, float(side)) if direction == 1 else (float(side), s)


@dataclass(frozen=True)
class Interface:
    patch_a: int
    edge_a: int
    patch_b: int
    edge_b: int
    reversed: bool = False

    def __post_init__(self):
        if self.patch_a == self.patch_b:
            raise InterfaceMismatchError(f"Patch {self.patch_a} glued to itself")
        for e in (self.edge_a, self.edge_b):
            if e not in EDGE_AXIS:
                raise ValueError(f"Edge id must be 0..3, got {e}")


@dataclass(frozen=True)
class Topology:
    n_patches: int
    interfaces: tuple[Interface, ...] = ()

    def __post_init__(self):
        seen = set()
        for itf in self.interfaces:
            for key in ((itf.patch_a, itf.edge_a), (itf.patch_b, itf.edge_b)):
                if not 0 <= key[0] < self.n_patches:
                    raise ValueError(f"Interface refers to unknown patch {key[0]}")
                if key in seen:
                    raise InterfaceMismatchError(f"Edge {key[1]} of patch {key[0]} glued twice")
                seen.add(key)

    @cached_property
    def edge_partner(self) -> dict[tuple[int, int], tuple[int, int, bool]]:
        partner = {}
        for itf in self.interfaces:
            partner[(itf.patch_a, itf.edge_a)] = (itf.patch_b, itf.edge_b, itf.reversed)
            partner[(itf.patch_b, itf.edge_b)] = (itf.patch_a, itf.edge_a, itf.reversed)
        return partner

    @cached_property
    def vertex_classes(self) -> dict[tuple[int, int], frozenset[tuple[int, int]]]:
        """Patch corners identified through glued edges (union-find)"""
        parent = {(m, c): (m, c) for m in range(self.n_patches) for c in CORNERS}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for itf in self.interfaces:
            ca = EDGE_CORNERS[itf.edge_a]
            cb = EDGE_CORNERS[itf.edge_b]
            if itf.reversed:
                cb = cb[::-1]
            for x, y in zip(ca, cb):
                parent[find((itf.patch_a, x))] = find((itf.patch_b, y))

        groups: dict = {}
        for key in parent:
            groups.setdefault(find(key), set()).add(key)
        return {key: frozenset(groups[find(key)]) for key in parent}

    def map_edge_interval(
        self, patch: int, edge: int, lo: Fraction, hi: Fraction, length: int
    ) -> Optional[tuple[int, int, Fraction, Fraction]]:
        """Map an interval of a glued edge to the partner edge: (patch', edge', lo', hi')"""
        partner = self.edge_partner.get((patch, edge))
        if partner is None:
            return None
        other, other_edge, rev = partner
        if rev:
            lo, hi = length - hi, length - lo
        return other, other_edge, lo, hi

    def corner_partners(self, patch: int, corner: int) -> list[tuple[int, int]]:
        return sorted(x for x in self.vertex_classes[(patch, corner)] if x[0] != patch)
