"""SVG drawings of the k=3 lattice, its labelings and Voronoi-type partitions.

Corner 1 is drawn at the top, corner 2 bottom left and corner 3 bottom right.
Output is deterministic: coordinates are printed with three decimals and
elements are emitted in canonical lattice order.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import labeling as lab
from . import lattice
from .errors import InvalidParameterError
from .geometry import VoronoiSpec
from .labeling import Labeling

PALETTE = {1: "#2ca02c", 2: "#1f77b4", 3: "#d62728"}
NONMONO = "#9e9e9e"
SIDE = 360.0
MARGIN = 30.0
HEIGHT = SIDE * math.sqrt(3) / 2
CORNERS = np.array(
    [
        [MARGIN + SIDE / 2, MARGIN],
        [MARGIN, MARGIN + HEIGHT],
        [MARGIN + SIDE, MARGIN + HEIGHT],
    ]
)
WIDTH = SIDE + 2 * MARGIN
TOTAL_HEIGHT = HEIGHT + 2 * MARGIN


def to_plane(x: Sequence[float]) -> tuple[float, float]:
    """Map barycentric coordinates (any positive total) onto the drawing."""
    x = np.asarray(x, dtype=float)
    p = x @ CORNERS / x.sum()
    return float(p[0]), float(p[1])


def _fmt(p: tuple[float, float]) -> str:
    return f"{p[0]:.3f},{p[1]:.3f}"


def _polygon(points: Sequence[Sequence[float]], cls: str, fill: str) -> str:
    coords = " ".join(_fmt(to_plane(p)) for p in points)
    return f'<polygon class="{cls}" points="{coords}" fill="{fill}" stroke="black" stroke-width="1"/>'


def _header() -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH:.0f}" '
        f'height="{TOTAL_HEIGHT:.0f}" viewBox="0 0 {WIDTH:.0f} {TOTAL_HEIGHT:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]


def render_lattice_svg(q: int, labeling: Labeling | None = None) -> str:
    """Draw V(3, q) with its up-cells; with a labeling, color cells and vertices.

    Monochromatic up-cells take their color, the others are grey; down-cells
    are white unless rainbow. Without a labeling, up-cells are grey and the
    boundary vertices show their admissible lists.
    """
    if labeling is not None and (labeling.k, labeling.q) != (3, q):
        raise InvalidParameterError("labeling does not match V(3, q)")
    out = _header()
    colors = labeling.colors if labeling is not None else None

    def color_of(a: Sequence[int]) -> int:
        return int(colors[lattice.rank(a)])

    for cell in lattice.enumerate_cells(3, q):
        verts = cell.vertices()
        if colors is None:
            out.append(_polygon(verts, "cell up", NONMONO))
            continue
        seen = {color_of(v) for v in verts}
        if len(seen) == 1:
            c = seen.pop()
            out.append(_polygon(verts, f"cell up mono color-{c}", PALETTE[c]))
        else:
            out.append(_polygon(verts, "cell up nonmono", NONMONO))
    if q >= 2:
        for down in lattice.enumerate_down_cells(q):
            verts = down.vertices()
            rainbow = colors is not None and len({color_of(v) for v in verts}) == 3
            cls = "cell down rainbow" if rainbow else "cell down"
            out.append(_polygon(verts, cls, "#ffd54f" if rainbow else "white"))
    for a in lattice.enumerate_vertices(3, q):
        x, y = to_plane(a)
        out.append(f'<circle class="vertex" cx="{x:.3f}" cy="{y:.3f}" r="3" fill="black"/>')
        if colors is not None:
            text = str(color_of(a))
        elif min(a) == 0:
            text = "{" + ",".join(str(c) for c in sorted(lattice.admissible_colors(a))) + "}"
        else:
            continue
        out.append(
            f'<text class="label" x="{x + 5:.3f}" y="{y - 5:.3f}" font-size="11" '
            f'font-family="sans-serif">{text}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def voronoi_regions(spec: VoronoiSpec) -> list[list[np.ndarray]]:
    """Polygon (barycentric vertices) of each part for k=3."""
    if spec.k != 3:
        raise InvalidParameterError("Voronoi drawing supports k = 3 only")
    z = spec.z
    eye = np.eye(3)

    def edge_point(i: int, j: int) -> np.ndarray:
        # on the edge e_i e_j where x_i - z_i == x_j - z_j
        p = np.zeros(3)
        p[i] = (1 + z[i] - z[j]) / 2
        p[j] = 1 - p[i]
        return p

    regions = []
    for i in range(3):
        j, l = [m for m in range(3) if m != i]
        regions.append([eye[i], edge_point(i, j), z.copy(), edge_point(i, l)])
    return regions


def render_voronoi_svg(spec: VoronoiSpec) -> str:
    out = _header()
    for i, poly in enumerate(voronoi_regions(spec), start=1):
        out.append(_polygon(poly, f"part color-{i}", PALETTE[i]))
    x, y = to_plane(spec.z)
    out.append(f'<circle class="base-point" cx="{x:.3f}" cy="{y:.3f}" r="3" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def summarize_lattice_render(q: int, labeling: Labeling | None) -> dict:
    """Element counts of :func:`render_lattice_svg`, computed from the lattice."""
    summary = {
        "vertices": lattice.lattice_size(3, q),
        "up_cells": lattice.lattice_size(3, q - 1),
        "down_cells": lattice.lattice_size(3, q - 2) if q >= 2 else 0,
    }
    if labeling is not None:
        stats = lab.compute_stats(labeling)
        summary["mono"] = stats.monochromatic_count
        summary["nonmono"] = stats.nonmonochromatic_count
    return summary
