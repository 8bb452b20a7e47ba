"""Hand-rolled SVG line charts.

No plotting dependency: charts are assembled from f-strings with fixed
two-decimal coordinates, so identical inputs give byte-identical files.
"""

from __future__ import annotations

from .errors import ValidationError

PALETTE = ("#1f6fb4", "#c23b22", "#3c9d4e", "#8a5cb8")

_CHAR_W = 6.6  # approximate glyph width at font-size 12, for legend spacing


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi == lo:
        return [lo]
    step = (hi - lo) / n
    return [lo + i * step for i in range(n + 1)]


def _fmt_tick(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return f"{v:.2f}".rstrip("0").rstrip(".")


def line_chart(x, series, x_label: str, y_label: str,
               y_min: float = 0.0, y_max: float = 1.0,
               width: int = 640, height: int = 400,
               title: str | None = None, comment: str | None = None) -> str:
    """Render series over a shared x axis.

    `series` is a sequence of (name, values) pairs; every value list
    must align with x.  Returns the SVG document as a string.
    """
    x = [float(v) for v in x]
    if not x:
        raise ValidationError("cannot chart an empty curve")
    series = [(str(name), [float(v) for v in vals]) for name, vals in series]
    if not series:
        raise ValidationError("need at least one series")
    for name, vals in series:
        if len(vals) != len(x):
            raise ValidationError(f"series {name!r} has {len(vals)} points, x has {len(x)}")

    ml, mr, mt, mb = 62, 16, 46, 52
    pw, ph = width - ml - mr, height - mt - mb
    x_lo, x_hi = min(x), max(x)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_max - y_min) or 1.0

    def sx(v):
        return ml + (v - x_lo) / x_span * pw

    def sy(v):
        return mt + ph - (v - y_min) / y_span * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">']
    if comment:
        parts.insert(0, f"<!-- {_esc(comment)} -->")
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        parts.append(f'<text x="{width / 2:.2f}" y="18" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="14">{_esc(title)}</text>')

    # axes
    parts.append(f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" '
                 f'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" '
                 f'stroke="black" stroke-width="1"/>')

    x_ticks = x if len(x) <= 8 else _ticks(x_lo, x_hi, 6)
    for tv in x_ticks:
        px = sx(tv)
        parts.append(f'<line x1="{px:.2f}" y1="{mt + ph}" x2="{px:.2f}" y2="{mt + ph + 4}" '
                     f'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{px:.2f}" y="{mt + ph + 17}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{_fmt_tick(tv)}</text>')
    for tv in _ticks(y_min, y_max, 5):
        py = sy(tv)
        parts.append(f'<line x1="{ml - 4}" y1="{py:.2f}" x2="{ml}" y2="{py:.2f}" '
                     f'stroke="black" stroke-width="1"/>')
        parts.append(f'<line x1="{ml}" y1="{py:.2f}" x2="{ml + pw}" y2="{py:.2f}" '
                     f'stroke="#dddddd" stroke-width="0.5"/>')
        parts.append(f'<text x="{ml - 8}" y="{py + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{_fmt_tick(tv)}</text>')

    parts.append(f'<text x="{ml + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{_esc(x_label)}</text>')
    parts.append(f'<text x="16" y="{mt + ph / 2:.2f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 16 {mt + ph / 2:.2f})">{_esc(y_label)}</text>')

    # legend across the top
    lx = float(ml)
    for si, (name, _) in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        parts.append(f'<line x1="{lx:.2f}" y1="{mt - 14}" x2="{lx + 18:.2f}" y2="{mt - 14}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 23:.2f}" y="{mt - 10}" font-family="sans-serif" '
                     f'font-size="12">{_esc(name)}</text>')
        lx += 23 + _CHAR_W * len(name) + 18

    for si, (name, vals) in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, vals))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" '
                     f'points="{pts}"/>')
        for a, b in zip(x, vals):
            parts.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{color}"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
