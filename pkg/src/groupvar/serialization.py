"""Plain-text file formats for fields, multipliers, and reports.

Field files carry a one-line magic, a key=value header (group size, component
count, window dimensions), then one record per vertex or face with row-major
matrix entries.  Floats are written with repr, which round-trips bit-exactly,
so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .complexes import TriangulatedGrid, triangulated_grid
from .core import Multiplier, Section
from .liegroup import CoAlgebraElement, GroupElement
from .reduction import UnreducedField, reduced_fiber

MAGIC = "groupvar-field v1"

__all__ = [
    "save_reduced_section",
    "load_reduced_section",
    "save_unreduced_field",
    "load_unreduced_field",
    "save_multiplier",
    "load_multiplier",
    "write_report",
    "write_csv",
    "format_value",
]


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def _matrix_words(m: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in m.reshape(-1))


def _header_lines(kind: str, n: int, components: int,
                  grid: TriangulatedGrid) -> list[str]:
    return [
        MAGIC,
        f"kind={kind}",
        f"n={n}",
        f"components={components}",
        f"width={grid.width}",
        f"height={grid.height}",
    ]


def _parse_header(lines: list[str], expected_kind: str):
    if not lines or lines[0].strip() != MAGIC:
        raise ValueError("not a field file (bad magic line)")
    header = {}
    body_start = 1
    for idx in range(1, len(lines)):
        line = lines[idx].strip()
        if not line:
            continue
        if "=" not in line:
            body_start = idx
            break
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
        body_start = idx + 1
    for key in ("kind", "n", "components", "width", "height"):
        if key not in header:
            raise ValueError(f"field file header missing {key}")
    if header["kind"] != expected_kind:
        raise ValueError(
            f"expected a {expected_kind} file, found kind={header['kind']}")
    n = int(header["n"])
    components = int(header["components"])
    grid = triangulated_grid(int(header["width"]), int(header["height"]))
    return n, components, grid, body_start


def _parse_records(lines, body_start, tag, n, components):
    records = {}
    per_matrix = n * n
    for line in lines[body_start:]:
        line = line.strip()
        if not line:
            continue
        words = line.split()
        if words[0] != tag:
            raise ValueError(f"unexpected record {words[0]!r}, wanted {tag!r}")
        if len(words) != 3 + components * per_matrix:
            raise ValueError(f"record has {len(words) - 3} numbers, "
                             f"expected {components * per_matrix}")
        i, j = int(words[1]), int(words[2])
        numbers = np.array([float(w) for w in words[3:]])
        mats = tuple(
            numbers[k * per_matrix:(k + 1) * per_matrix].reshape(n, n)
            for k in range(components)
        )
        records[(i, j)] = mats
    return records


def save_reduced_section(path, grid: TriangulatedGrid, y: Section) -> None:
    n = y.fiber.n
    lines = _header_lines("reduced_section", n, 2, grid)
    for vid in sorted(y.values):
        i, j = grid.vertex_ij(vid)
        u, v = y.values[vid]
        lines.append(f"v {i} {j} {_matrix_words(u.matrix)} {_matrix_words(v.matrix)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_reduced_section(path) -> tuple[TriangulatedGrid, Section]:
    lines = Path(path).read_text().splitlines()
    n, components, grid, body = _parse_header(lines, "reduced_section")
    if components != 2:
        raise ValueError("reduced sections carry two components per vertex")
    records = _parse_records(lines, body, "v", n, 2)
    values = {
        grid.vertex_id(i, j): (GroupElement(u), GroupElement(v))
        for (i, j), (u, v) in records.items()
    }
    return grid, Section(reduced_fiber(n), values)


def save_unreduced_field(path, grid: TriangulatedGrid, g: UnreducedField) -> None:
    n = next(iter(g.values.values())).n
    lines = _header_lines("unreduced_field", n, 1, grid)
    for vid in sorted(g.values):
        i, j = grid.vertex_ij(vid)
        lines.append(f"v {i} {j} {_matrix_words(g.values[vid].matrix)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_unreduced_field(path) -> tuple[TriangulatedGrid, UnreducedField]:
    lines = Path(path).read_text().splitlines()
    n, components, grid, body = _parse_header(lines, "unreduced_field")
    if components != 1:
        raise ValueError("vertex fields carry one component per vertex")
    records = _parse_records(lines, body, "v", n, 1)
    values = {grid.vertex_id(i, j): GroupElement(m[0])
              for (i, j), m in records.items()}
    return grid, UnreducedField(values)


def save_multiplier(path, grid: TriangulatedGrid, lam: Multiplier) -> None:
    n = next(iter(lam.values.values())).n
    lines = _header_lines("multiplier", n, 1, grid)
    for fid in sorted(lam.values):
        i, j = grid.face_ij(fid)
        lines.append(f"f {i} {j} {_matrix_words(lam.values[fid].matrix)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_multiplier(path) -> tuple[TriangulatedGrid, Multiplier]:
    lines = Path(path).read_text().splitlines()
    n, components, grid, body = _parse_header(lines, "multiplier")
    if components != 1:
        raise ValueError("multipliers carry one coalgebra entry per face")
    records = _parse_records(lines, body, "f", n, 1)
    values = {grid.face_id(i, j): CoAlgebraElement(m[0])
              for (i, j), m in records.items()}
    return grid, Multiplier(values)


def write_report(path, records: dict) -> None:
    """Machine-readable key=value lines, in the given order."""
    lines = [f"{key}={format_value(value)}" for key, value in records.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])
