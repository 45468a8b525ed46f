"""Static SVG figures: scenario overlays, loss curves, per-axis panels.

Everything is written by hand as SVG 1.1 so the package stays free of
plotting dependencies.  Constraint geometry is recovered from the formula
itself: clearance disks from squared-distance atoms, band edges from
component bounds, visit markers from equality targets under eventually.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import ltl

DEMO_COLOR = "#e8791e"
ROLLOUT_COLOR = "#1f6fd8"
CONSTRAINT_COLOR = "#d62728"
SERIES_COLORS = {
    "train_Ld": "#444444",
    "train_Lc_soft": "#e8791e",
    "train_Lc_hard": "#d62728",
    "test_Ld": "#999999",
    "test_Lc_hard": "#1f6fd8",
}


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _el(tag: str, text: str | None = None, **attrs) -> str:
    parts = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in attrs.items())
    if text is None:
        return f"<{tag} {parts}/>"
    return f"<{tag} {parts}>{text}</{tag}>"


def _doc(width: int, height: int, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


class _Frame:
    """Maps a square data window onto pixels, y axis pointing up."""

    def __init__(self, lo: float, hi: float, size: int = 520, pad: int = 40):
        self.lo, self.hi = lo, hi
        self.size, self.pad = size, pad
        self.scale = (size - 2 * pad) / (hi - lo)

    def x(self, v: float) -> float:
        return self.pad + (v - self.lo) * self.scale

    def y(self, v: float) -> float:
        return self.size - self.pad - (v - self.lo) * self.scale

    def px(self, v: float) -> float:
        return v * self.scale

    def pts(self, points: np.ndarray) -> str:
        return " ".join(f"{self.x(p[0]):.2f},{self.y(p[1]):.2f}" for p in points)


def constraint_geometry(formula: ltl.Formula) -> list[tuple]:
    """Drawable shapes implied by a planar spec.

    Returns tuples: ("clear", object_index, radius), ("band", lo | None,
    hi | None is encoded as two entries), ("visit", object_index).
    """
    shapes: list[tuple] = []

    def atom_shapes(atom: ltl.Atom, timeless: bool):
        left, op, right = atom.left, atom.op, atom.right
        if (
            timeless
            and isinstance(left, ltl.SqNorm)
            and isinstance(left.term, ltl.Sub)
            and isinstance(left.term.left, ltl.TrajPos)
            and isinstance(left.term.right, ltl.ObjectRef)
            and isinstance(right, ltl.ScalarConst)
            and op in (">=", ">")
        ):
            shapes.append(("clear", left.term.right.index, math.sqrt(right.value)))
        elif (
            timeless
            and isinstance(left, ltl.Component)
            and isinstance(left.term, ltl.TrajPos)
            and left.axis == 1
            and isinstance(right, ltl.ScalarConst)
            and op in ("<=", "<", ">=", ">")
        ):
            shapes.append(("band", right.value))
        elif (
            not timeless
            and op == "="
            and isinstance(left, ltl.TrajPos)
            and isinstance(right, ltl.ObjectRef)
        ):
            shapes.append(("visit", right.index))

    def walk(f: ltl.Formula, timeless: bool):
        if isinstance(f, ltl.Atom):
            atom_shapes(f, timeless)
        elif isinstance(f, (ltl.And, ltl.Or)):
            walk(f.left, timeless)
            walk(f.right, timeless)
        elif isinstance(f, ltl.Always):
            walk(f.arg, True)
        elif isinstance(f, ltl.Eventually):
            walk(f.arg, False)
        elif isinstance(f, (ltl.Not, ltl.Next)):
            walk(f.arg, timeless)
        elif isinstance(f, (ltl.Until, ltl.Implies)):
            walk(f.left, timeless)
            walk(f.right, timeless)

    walk(formula, False)
    return shapes


def plot_scenario(
    demo_points: np.ndarray,
    rollout_points: np.ndarray | None,
    objects: np.ndarray | None,
    formula: ltl.Formula | None,
    path=None,
    title: str | None = None,
) -> str:
    """Overlay of demonstration, rollout, objects, and spec geometry."""
    demo_points = np.asarray(demo_points)
    clouds = [demo_points]
    if rollout_points is not None:
        clouds.append(np.asarray(rollout_points))
    if objects is not None:
        clouds.append(np.asarray(objects))
    allp = np.concatenate(clouds)
    lo = float(allp.min()) - 0.1
    hi = float(allp.max()) + 0.1
    fr = _Frame(lo, hi)

    body = [
        _el("rect", x=0, y=0, width=fr.size, height=fr.size, fill="white"),
        _el(
            "rect",
            x=fr.pad, y=fr.pad,
            width=fr.size - 2 * fr.pad, height=fr.size - 2 * fr.pad,
            fill="none", stroke="#cccccc",
        ),
    ]
    if title:
        body.append(_el("text", title, x=fr.pad, y=24, font_size=15, fill="#333333"))

    if formula is not None:
        for shape in constraint_geometry(formula):
            if shape[0] == "clear" and objects is not None:
                _, k, r = shape
                body.append(
                    _el(
                        "circle",
                        cx=f"{fr.x(objects[k][0]):.2f}", cy=f"{fr.y(objects[k][1]):.2f}",
                        r=f"{fr.px(r):.2f}",
                        fill="none", stroke=CONSTRAINT_COLOR, stroke_width=1.5,
                        stroke_dasharray="6 3",
                    )
                )
            elif shape[0] == "band":
                y = fr.y(shape[1])
                body.append(
                    _el(
                        "line",
                        x1=fr.pad, y1=f"{y:.2f}",
                        x2=fr.size - fr.pad, y2=f"{y:.2f}",
                        stroke=CONSTRAINT_COLOR, stroke_width=1.5,
                        stroke_dasharray="6 3",
                    )
                )
            elif shape[0] == "visit" and objects is not None:
                k = shape[1]
                body.append(
                    _el(
                        "circle",
                        cx=f"{fr.x(objects[k][0]):.2f}", cy=f"{fr.y(objects[k][1]):.2f}",
                        r=9, fill="none", stroke=CONSTRAINT_COLOR, stroke_width=1.5,
                    )
                )

    if objects is not None:
        for k, obj in enumerate(objects):
            body.append(
                _el("circle", cx=f"{fr.x(obj[0]):.2f}", cy=f"{fr.y(obj[1]):.2f}",
                    r=4, fill="#555555")
            )
            body.append(
                _el("text", f"o{k + 1}",
                    x=f"{fr.x(obj[0]) + 7:.2f}", y=f"{fr.y(obj[1]) - 7:.2f}",
                    font_size=12, fill="#555555")
            )

    body.append(
        _el("polyline", points=fr.pts(demo_points),
            fill="none", stroke=DEMO_COLOR, stroke_width=2)
    )
    if rollout_points is not None:
        body.append(
            _el("polyline", points=fr.pts(rollout_points),
                fill="none", stroke=ROLLOUT_COLOR, stroke_width=2)
        )
    # start and goal markers sit on the demo endpoints
    body.append(
        _el("circle", cx=f"{fr.x(demo_points[0][0]):.2f}",
            cy=f"{fr.y(demo_points[0][1]):.2f}", r=5, fill=DEMO_COLOR)
    )
    body.append(
        _el("rect", x=f"{fr.x(demo_points[-1][0]) - 4:.2f}",
            y=f"{fr.y(demo_points[-1][1]) - 4:.2f}", width=8, height=8,
            fill=DEMO_COLOR)
    )

    svg = _doc(fr.size, fr.size, body)
    if path is not None:
        Path(path).write_text(svg)
    return svg


def plot_metrics(history: list[dict], path=None, title: str | None = None) -> str:
    """Loss against epoch, one polyline per metric series, log-10 scale."""
    if not history:
        raise ValueError("empty metric history")
    width, height, pad = 640, 420, 50
    floor = 1e-6
    series: dict[str, list[tuple[int, float]]] = {}
    for record in history:
        for key in SERIES_COLORS:
            v = record.get(key)
            if v is not None:
                series.setdefault(key, []).append((record["epoch"], max(v, floor)))
    series = {k: v for k, v in series.items() if v}
    if not series:
        raise ValueError("history has no plottable series")

    epochs = [e for pts in series.values() for e, _ in pts]
    values = [v for pts in series.values() for _, v in pts]
    e_lo, e_hi = min(epochs), max(epochs)
    e_hi = max(e_hi, e_lo + 1)
    v_lo = math.floor(math.log10(min(values)))
    v_hi = math.ceil(math.log10(max(values)))
    v_hi = max(v_hi, v_lo + 1)

    def sx(e):
        return pad + (e - e_lo) / (e_hi - e_lo) * (width - 2 * pad)

    def sy(v):
        return height - pad - (math.log10(v) - v_lo) / (v_hi - v_lo) * (height - 2 * pad)

    body = [
        _el("rect", x=0, y=0, width=width, height=height, fill="white"),
        _el("rect", x=pad, y=pad, width=width - 2 * pad, height=height - 2 * pad,
            fill="none", stroke="#cccccc"),
    ]
    if title:
        body.append(_el("text", title, x=pad, y=30, font_size=15, fill="#333333"))
    for decade in range(v_lo, v_hi + 1):
        y = sy(10.0 ** decade)
        body.append(
            _el("line", x1=pad, y1=f"{y:.2f}", x2=width - pad, y2=f"{y:.2f}",
                stroke="#eeeeee")
        )
        body.append(
            _el("text", f"1e{decade}", x=4, y=f"{y + 4:.2f}", font_size=11,
                fill="#777777")
        )
    for frac in (0.0, 0.5, 1.0):
        e = e_lo + frac * (e_hi - e_lo)
        body.append(
            _el("text", str(int(round(e))), x=f"{sx(e) - 8:.2f}",
                y=height - pad + 18, font_size=11, fill="#777777")
        )
    body.append(
        _el("text", "epoch", x=width // 2 - 20, y=height - 8, font_size=12,
            fill="#333333")
    )

    legend_y = pad + 14
    for key, pts in series.items():
        color = SERIES_COLORS[key]
        coords = " ".join(f"{sx(e):.2f},{sy(v):.2f}" for e, v in pts)
        body.append(
            _el("polyline", points=coords, fill="none", stroke=color,
                stroke_width=1.8)
        )
        body.append(
            _el("text", key, x=width - pad - 110, y=legend_y, font_size=12,
                fill=color)
        )
        legend_y += 16

    svg = _doc(width, height, body)
    if path is not None:
        Path(path).write_text(svg)
    return svg


def plot_trace_panels(
    points: np.ndarray,
    path=None,
    labels: tuple = ltl.AXIS_NAMES,
    title: str | None = None,
) -> str:
    """One panel per trace dimension, value against step index."""
    points = np.asarray(points)
    T, d = points.shape
    cols = 2
    rows = (d + 1) // cols
    pw, ph, pad = 300, 170, 34
    width, height = cols * pw, rows * ph + (26 if title else 0)
    top = 26 if title else 0

    body = [_el("rect", x=0, y=0, width=width, height=height, fill="white")]
    if title:
        body.append(_el("text", title, x=10, y=18, font_size=14, fill="#333333"))
    for axis in range(d):
        r, c = divmod(axis, cols)
        ox, oy = c * pw, top + r * ph
        vals = points[:, axis]
        v_lo, v_hi = float(vals.min()), float(vals.max())
        if v_hi - v_lo < 1e-12:
            v_lo, v_hi = v_lo - 0.5, v_hi + 0.5

        def sx(t):
            return ox + pad + t / (T - 1) * (pw - 2 * pad)

        def sy(v):
            return oy + ph - pad + (v_lo - v) / (v_hi - v_lo) * (ph - 2 * pad)

        body.append(
            _el("rect", x=ox + pad, y=oy + pad, width=pw - 2 * pad,
                height=ph - 2 * pad, fill="none", stroke="#cccccc")
        )
        label = labels[axis] if axis < len(labels) else f"dim{axis}"
        body.append(
            _el("text", label, x=ox + pad, y=oy + pad - 6, font_size=12,
                fill="#333333")
        )
        body.append(
            _el("text", _fmt(v_hi), x=ox + 2, y=oy + pad + 8, font_size=10,
                fill="#777777")
        )
        body.append(
            _el("text", _fmt(v_lo), x=ox + 2, y=oy + ph - pad, font_size=10,
                fill="#777777")
        )
        coords = " ".join(f"{sx(t):.2f},{sy(v):.2f}" for t, v in enumerate(vals))
        body.append(
            _el("polyline", points=coords, fill="none", stroke=ROLLOUT_COLOR,
                stroke_width=1.6)
        )

    svg = _doc(width, height, body)
    if path is not None:
        Path(path).write_text(svg)
    return svg
