"""Finite cellular complexes, reduced to the vertex-face incidence.

Only vertices and top-dimensional faces are materialized: every formula in
the discrete theory indexes on (vertex, face) pairs, so intermediate cells
never need to exist.  A complex is immutable after construction and safe for
concurrent reads.

The triangulated grid built here is a finite window of the standard
triangulation of the plane.  Vertices on the window boundary have part of
their spherical neighborhood outside the window; they are flagged as having
a truncated star and can therefore never be interior to any face set, which
is exactly how the infinite-plane classification restricts to the window.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

__all__ = [
    "CellComplex",
    "TriangulatedGrid",
    "FaceSet",
    "VertexClass",
    "triangulated_grid",
    "classify_vertices",
]


class CellComplex:
    """Vertex-face incidence with per-face ordered adherence lists.

    ``adherence`` maps each face id to the ordered tuple of its adherent
    vertex ids; ``star`` is the exact transpose.  ``vertices`` may add
    isolated vertices beyond the adherent ones (a grid window has one such
    corner).  ``truncated_star`` lists vertices whose ambient star is only
    partially materialized.
    """

    def __init__(self, adherence, vertices=(), truncated_star=()):
        adh = {}
        star = {}
        for face, verts in adherence.items():
            verts = tuple(verts)
            if len(verts) == 0:
                raise ValueError(f"face {face} has no adherent vertices")
            if len(set(verts)) != len(verts):
                raise ValueError(f"face {face} has duplicate adherent vertices")
            adh[int(face)] = tuple(int(v) for v in verts)
        for face, verts in adh.items():
            for v in verts:
                star.setdefault(v, set()).add(face)
        self._adherence = adh
        self._star = {v: frozenset(fs) for v, fs in star.items()}
        self._faces = tuple(sorted(adh))
        self._vertices = tuple(sorted(set(star) | {int(v) for v in vertices}))
        self._truncated = frozenset(int(v) for v in truncated_star)

    @property
    def vertices(self) -> tuple[int, ...]:
        return self._vertices

    @property
    def faces(self) -> tuple[int, ...]:
        return self._faces

    def adherence(self, face: int) -> tuple[int, ...]:
        return self._adherence[face]

    def star(self, vertex: int) -> frozenset[int]:
        """Faces having the vertex adherent (its spherical neighborhood)."""
        return self._star.get(vertex, frozenset())

    def star_is_truncated(self, vertex: int) -> bool:
        return vertex in self._truncated

    def has_face(self, face: int) -> bool:
        return face in self._adherence

    def export_text(self) -> str:
        """One record per face: face id followed by its adherent vertex ids."""
        lines = [f"face {f} : " + " ".join(str(v) for v in self._adherence[f])
                 for f in self._faces]
        return "\n".join(lines) + "\n"


class FaceSet:
    """A finite subset of faces together with its adherent vertex set."""

    def __init__(self, complex: CellComplex, faces):
        faces = frozenset(int(f) for f in faces)
        for f in faces:
            if not complex.has_face(f):
                raise ValueError(f"face {f} is not a face of the complex")
        self.complex = complex
        self.faces = faces

    @cached_property
    def adherent_vertices(self) -> frozenset[int]:
        verts = set()
        for f in self.faces:
            verts.update(self.complex.adherence(f))
        return frozenset(verts)

    def __contains__(self, face: int) -> bool:
        return face in self.faces

    def __len__(self) -> int:
        return len(self.faces)


@dataclass(frozen=True)
class VertexClass:
    """Interior / frontier split of the adherent vertices of a face set."""

    interior: frozenset[int]
    frontier: frozenset[int]


def classify_vertices(complex: CellComplex, faceset: FaceSet) -> VertexClass:
    """Split the adherent vertices into interior and frontier.

    A vertex is interior when its whole spherical neighborhood lies in the
    face set; a vertex whose star is truncated by the materialized window
    always counts as frontier, since its ambient star cannot be contained in
    any window face set.
    """
    if faceset.complex is not complex:
        for f in faceset.faces:
            if not complex.has_face(f):
                raise ValueError(f"face {f} is not a face of the complex")
    interior = set()
    frontier = set()
    for v in faceset.adherent_vertices:
        if not complex.star_is_truncated(v) and complex.star(v) <= faceset.faces:
            interior.add(v)
        else:
            frontier.add(v)
    return VertexClass(frozenset(interior), frozenset(frontier))


class TriangulatedGrid(CellComplex):
    """W x H window of the triangulated plane.

    Vertices are (i, j) with 0 <= i <= W, 0 <= j <= H, stored row-major as
    id = j * (W + 1) + i.  Faces are the triangles with ordered adherence
    [(i, j), (i+1, j), (i, j+1)] for 0 <= i < W, 0 <= j < H, stored row-major
    as id = j * W + i.  The layout is fixed so file dumps reproduce bit-exactly.
    The window is not periodic; all boundary behavior comes from the
    interior / frontier classification.
    """

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise ValueError("grid dimensions must be positive")
        self.width = width
        self.height = height
        adherence = {}
        for j in range(height):
            for i in range(width):
                face = j * width + i
                adherence[face] = (
                    self._vid(i, j),
                    self._vid(i + 1, j),
                    self._vid(i, j + 1),
                )
        truncated = [
            self._vid(i, j)
            for j in range(height + 1)
            for i in range(width + 1)
            if i == 0 or j == 0 or i == width or j == height
        ]
        everything = [self._vid(i, j)
                      for j in range(height + 1) for i in range(width + 1)]
        super().__init__(adherence, vertices=everything, truncated_star=truncated)

    def _vid(self, i: int, j: int) -> int:
        return j * (self.width + 1) + i

    def vertex_id(self, i: int, j: int) -> int:
        if not (0 <= i <= self.width and 0 <= j <= self.height):
            raise ValueError(f"vertex ({i}, {j}) outside the window")
        return self._vid(i, j)

    def vertex_ij(self, vertex: int) -> tuple[int, int]:
        j, i = divmod(vertex, self.width + 1)
        if not (0 <= i <= self.width and 0 <= j <= self.height):
            raise ValueError(f"vertex id {vertex} outside the window")
        return i, j

    def face_id(self, i: int, j: int) -> int:
        if not (0 <= i < self.width and 0 <= j < self.height):
            raise ValueError(f"face ({i}, {j}) outside the window")
        return j * self.width + i

    def face_ij(self, face: int) -> tuple[int, int]:
        j, i = divmod(face, self.width)
        if not (0 <= i < self.width and 0 <= j < self.height):
            raise ValueError(f"face id {face} outside the window")
        return i, j

    def full_faceset(self) -> FaceSet:
        return FaceSet(self, self.faces)


def triangulated_grid(width: int, height: int) -> TriangulatedGrid:
    """Build the W x H triangulated window of the plane."""
    return TriangulatedGrid(width, height)
