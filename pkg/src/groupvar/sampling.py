"""Seeded generators for sections, variations, and multipliers.

Everything draws through a caller-supplied numpy Generator and visits
vertices and faces in sorted id order, so a seed pins the output exactly.
"""

from __future__ import annotations

import numpy as np

from .complexes import TriangulatedGrid
from .core import Multiplier, Section, Variation
from .liegroup import CoAlgebraElement, random_algebra
from .reduction import GaugeField, UnreducedField, reduced_fiber
from . import liegroup as lg

__all__ = [
    "random_unreduced_field",
    "random_section",
    "random_variation",
    "random_multiplier",
    "random_gauge_field",
]


def random_unreduced_field(grid: TriangulatedGrid, n: int,
                           rng: np.random.Generator,
                           scale: float = 0.4) -> UnreducedField:
    return UnreducedField({
        v: lg.exp(random_algebra(n, rng, scale)) for v in grid.vertices
    })


def random_section(grid: TriangulatedGrid, n: int, rng: np.random.Generator,
                   scale: float = 0.5) -> Section:
    """A generic pair-field section; not flat except by accident."""
    fiber = reduced_fiber(n)
    values = {}
    for v in grid.vertices:
        if v == grid.vertex_id(grid.width, grid.height):
            continue
        values[v] = (lg.exp(random_algebra(n, rng, scale)),
                     lg.exp(random_algebra(n, rng, scale)))
    return Section(fiber, values)


def random_variation(grid: TriangulatedGrid, n: int, rng: np.random.Generator,
                     scale: float = 1.0) -> Variation:
    fiber = reduced_fiber(n)
    values = {}
    for v in grid.vertices:
        if v == grid.vertex_id(grid.width, grid.height):
            continue
        values[v] = (random_algebra(n, rng, scale), random_algebra(n, rng, scale))
    return Variation(fiber, values)


def random_multiplier(grid: TriangulatedGrid, n: int, rng: np.random.Generator,
                      scale: float = 1.0) -> Multiplier:
    return Multiplier({
        f: CoAlgebraElement(random_algebra(n, rng, scale).matrix)
        for f in grid.faces
    })


def random_gauge_field(grid: TriangulatedGrid, n: int, rng: np.random.Generator,
                       scale: float = 1.0, zero_frontier: bool = False) -> GaugeField:
    from .complexes import classify_vertices

    frontier = frozenset()
    if zero_frontier:
        frontier = classify_vertices(grid, grid.full_faceset()).frontier
    values = {}
    for v in grid.vertices:
        if v in frontier:
            continue
        values[v] = random_algebra(n, rng, scale)
    return GaugeField(n, values)
