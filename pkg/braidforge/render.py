"""Static diagrams: strand pictures for artin braids, chord and partition pictures for dual braids."""
import io
import logging
import math
from string import Template
from typing import List, Sequence, Tuple

import matplotlib
from matplotlib.figure import Figure
from matplotlib.patches import Circle, Polygon

from braidforge.monoid import Flavor, GeneratorId, MonoidSpec, SimpleBraid, canonical_word, label
from braidforge.normal_form import Braid, GeneratorWord

LOGGER = logging.getLogger(__name__)

RENDER_FORMAT_ERROR = Template('Unknown diagram format "$format"; use ascii or svg.')

STRAND_GAP = 0.18
SVG_METADATA = {"Date": None, "Creator": None}
# fixed salt keeps clip-path ids stable between runs
SVG_HASH_SALT = "braidforge"


def _strand_row(n: int) -> List[str]:
    return list(" ".join("|" * n))


def _letter_line(spec: MonoidSpec, letter: GeneratorId) -> str:
    """One text row: ``X`` between two adjacent strands, or ``o---o`` joining the ends of a chord."""
    row = _strand_row(spec.n)
    first, second = 2 * (letter.i - 1), 2 * (letter.j - 1)
    if spec.is_artin:
        row[first], row[first + 1], row[second] = " ", "X", " "
    else:
        row[first] = row[second] = "o"
        for column in range(first + 1, second):
            row[column] = "-"
    return "".join(row).rstrip()


def ascii_word(word: GeneratorWord) -> str:
    spec = word.spec
    lines = [" ".join(str(k % 10) for k in range(1, spec.n + 1))]
    plain = "".join(_strand_row(spec.n))
    for letter in word.letters:
        lines.append(plain)
        lines.append(_letter_line(spec, letter))
    lines.append(plain)
    return "\n".join(lines) + "\n"


def _block_text(x: SimpleBraid) -> str:
    return " | ".join("-".join(map(str, block)) for block in x.blocks)


def ascii_braid(braid: Braid) -> str:
    """Each normal-form factor under a ``[label]`` heading; dual factors also list their blocks."""
    spec = braid.spec
    parts = []
    for factor in braid.factors:
        heading = f"[{label(factor)}]"
        if not spec.is_artin:
            heading += f" blocks {_block_text(factor)}"
        body = ascii_word(GeneratorWord(spec, canonical_word(factor)))
        parts.append(heading + "\n" + body)
    return "".join(parts)


def _crossing_segments(n: int, letters: Sequence[GeneratorId]):
    """Yields (x0, y0, x1, y1, over) for every strand piece, top to bottom."""
    for step, letter in enumerate(letters):
        top, bottom = -step, -step - 1
        for position in range(1, n + 1):
            if position not in (letter.i, letter.j):
                yield position, top, position, bottom, True
        yield letter.j, top, letter.i, bottom, False
        yield letter.i, top, letter.j, bottom, True


def _strand_figure(word: GeneratorWord) -> Figure:
    n = word.spec.n
    height = max(1, len(word))
    figure = Figure(figsize=(0.6 * n + 0.6, 0.5 * height + 0.6))
    axes = figure.add_subplot()
    segments = list(_crossing_segments(n, word.letters)) or [
        (position, 0, position, -1, True) for position in range(1, n + 1)
    ]
    for x0, y0, x1, y1, over in segments:
        if over:
            axes.plot([x0, x1], [y0, y1], color="black", linewidth=2)
            continue
        # the under strand is cut around the crossing point
        dx, dy = x1 - x0, y1 - y0
        middle = 0.5 - STRAND_GAP, 0.5 + STRAND_GAP
        axes.plot([x0, x0 + dx * middle[0]], [y0, y0 + dy * middle[0]], color="black", linewidth=2)
        axes.plot([x0 + dx * middle[1], x1], [y0 + dy * middle[1], y1], color="black", linewidth=2)
    axes.set_xlim(0.5, n + 0.5)
    axes.set_axis_off()
    return figure


def _circle_points(n: int) -> List[Tuple[float, float]]:
    return [
        (math.sin(2 * math.pi * k / n), math.cos(2 * math.pi * k / n)) for k in range(n)
    ]


def _partition_axes(axes, x: SimpleBraid):
    points = _circle_points(x.n)
    axes.add_patch(Circle((0, 0), 1, fill=False, linestyle=":", color="grey"))
    for block in x.blocks:
        corners = [points[element - 1] for element in block]
        if len(block) > 2:
            axes.add_patch(Polygon(corners, closed=True, alpha=0.3, color="tab:blue"))
        if len(block) > 1:
            loop = corners + [corners[0]] if len(block) > 2 else corners
            axes.plot(*zip(*loop), color="tab:blue", linewidth=2)
    for element, (px, py) in enumerate(points, start=1):
        axes.plot(px, py, "o", color="black")
        axes.annotate(str(element), (1.18 * px, 1.18 * py), ha="center", va="center")
    axes.set_title(label(x))
    axes.set_xlim(-1.4, 1.4)
    axes.set_ylim(-1.4, 1.4)
    axes.set_aspect("equal")
    axes.set_axis_off()


def _partition_figure(braid: Braid) -> Figure:
    count = braid.height
    figure = Figure(figsize=(2.4 * count, 2.6))
    for index, factor in enumerate(braid.factors, start=1):
        _partition_axes(figure.add_subplot(1, count, index), factor)
    return figure


def _svg_text(figure: Figure) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        figure.savefig(buffer, format="svg", metadata=SVG_METADATA)
    return buffer.getvalue()


def svg_braid(braid: Braid) -> str:
    """Artin braids as strands through the normal-form word, dual braids as one partition disc per factor."""
    if braid.spec.flavor is Flavor.ARTIN:
        figure = _strand_figure(braid.word())
    else:
        figure = _partition_figure(braid)
    LOGGER.debug(f"Rendering {braid} as SVG")
    return _svg_text(figure)


def render(braid: Braid, format: str = "ascii") -> str:
    """Diagram of a braid in normal form.

    Raises:
        ValueError: unknown format.
    """
    if format == "ascii":
        return ascii_braid(braid)
    if format == "svg":
        return svg_braid(braid)
    raise ValueError(RENDER_FORMAT_ERROR.substitute(format=format))
