"""Charts of bigraded tables: a text grid, SVG 1.1 and (optionally) PNG.

The x axis is the column n and the y axis the internal degree m.  Output is
a pure function of the table, so repeated runs give identical bytes.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from ..homalg import BigradedTable

CELL = 22
MARGIN = 48


def chart_region(table: BigradedTable, region=None):
    """The (n0, n1, m0, m1) box to draw: given, or the nonzero hull inside the table."""
    if region is not None:
        return tuple(region)
    keys = [k for k, e in table.entries.items() if not e.shape.is_zero or e.partial]
    if not keys:
        (nl, nh), (ml, mh) = table.region
        return nl, min(nh, nl + 10), ml, min(mh, ml + 10)
    ns = [k[0] for k in keys]
    ms = [k[1] for k in keys]
    return min(ns), max(ns), min(ms), max(ms)


def _glyph(entry) -> str:
    if entry is None:
        return " "
    if entry.partial:
        return "?"
    r = entry.shape.generator_count
    if r == 0:
        return "."
    if entry.shape.torsion and not entry.shape.free_rank:
        return "t" if r == 1 else ("T" if r < 10 else "#")
    return str(r) if r < 10 else "#"


def text_grid(table: BigradedTable, region=None, skip_empty_rows=None) -> str:
    """One character per bidegree: '.' zero, digit = rank, t/T torsion, '?' partial.

    Rows are internal degrees, highest first.  Long ranges drop rows that
    hold nothing and mark each gap with '~'.
    """
    n0, n1, m0, m1 = chart_region(table, region)
    if skip_empty_rows is None:
        skip_empty_rows = m1 - m0 > 60
    width = max(len(str(m0)), len(str(m1)))
    lines = []
    gap = False
    for m in range(m1, m0 - 1, -1):
        row = "".join(_glyph(table.lookup(n, m)) for n in range(n0, n1 + 1))
        if skip_empty_rows and set(row) <= {".", " "}:
            gap = True
            continue
        if gap and lines:
            lines.append(" " * width + " ~")
        gap = False
        lines.append(f"{m:>{width}} |{row}")
    lines.append(" " * width + " +" + "-" * (n1 - n0 + 1))
    lines.append(" " * width + f"  n = {n0} .. {n1}")
    return "\n".join(lines) + "\n"


def svg_chart(table: BigradedTable, arrows=(), region=None, title="", labels=True) -> str:
    """SVG 1.1 with one dot per generator, optional class labels and d_r arrows."""
    n0, n1, m0, m1 = chart_region(table, region)
    w = (n1 - n0 + 1) * CELL + 2 * MARGIN
    h = (m1 - m0 + 1) * CELL + 2 * MARGIN

    def xy(n, m):
        return MARGIN + (n - n0) * CELL + CELL // 2, MARGIN + (m1 - m) * CELL + CELL // 2

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        '<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto">'
        '<path d="M0,0 L6,3 L0,6 z" fill="#a33"/></marker></defs>',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN}" y="{MARGIN // 2}" font-family="monospace" font-size="12">{escape(title)}</text>')
    # light grid with axis ticks every fifth line
    for n in range(n0, n1 + 1):
        x = xy(n, m0)[0]
        out.append(f'<line x1="{x}" y1="{MARGIN}" x2="{x}" y2="{h - MARGIN}" stroke="#eee" stroke-width="1"/>')
        if n % 5 == 0:
            out.append(f'<text x="{x}" y="{h - MARGIN + 14}" font-family="monospace" font-size="9" '
                       f'text-anchor="middle">{n}</text>')
    for m in range(m0, m1 + 1):
        y = xy(n0, m)[1]
        out.append(f'<line x1="{MARGIN}" y1="{y}" x2="{w - MARGIN}" y2="{y}" stroke="#eee" stroke-width="1"/>')
        if m % 5 == 0:
            out.append(f'<text x="{MARGIN - 6}" y="{y + 3}" font-family="monospace" font-size="9" '
                       f'text-anchor="end">{m}</text>')
    for (a, b, _src, _tgt) in arrows:
        if not (n0 <= a[0] <= n1 and m0 <= a[1] <= m1 and n0 <= b[0] <= n1 and m0 <= b[1] <= m1):
            continue
        x1, y1 = xy(*a)
        x2, y2 = xy(*b)
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#a33" stroke-width="1" '
                   'marker-end="url(#head)"/>')
    for (n, m), e in sorted(table.entries.items()):
        if not (n0 <= n <= n1 and m0 <= m <= m1):
            continue
        x, y = xy(n, m)
        if e.partial:
            out.append(f'<circle cx="{x}" cy="{y}" r="4" fill="none" stroke="#999" stroke-dasharray="2,2"/>')
            continue
        k = e.shape.generator_count
        for j in range(k):
            dx = (j - (k - 1) / 2) * 5
            fill = "black" if j < e.shape.free_rank else "#36c"
            out.append(f'<circle cx="{x + dx:g}" cy="{y}" r="2.5" fill="{fill}"/>')
        if labels and e.names:
            text = escape(", ".join(sorted(e.names)))
            out.append(f'<text x="{x + 4}" y="{y - 5}" font-family="monospace" font-size="7">{text}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def png_chart(table: BigradedTable, path, arrows=(), region=None, title=""):
    """Raster chart through matplotlib, which is an optional dependency."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as err:
        raise RuntimeError("PNG output needs matplotlib (pip install matplotlib)") from err
    n0, n1, m0, m1 = chart_region(table, region)
    fig, ax = plt.subplots(figsize=(max(4, (n1 - n0) / 4), max(4, (m1 - m0) / 4)))
    for (a, b, _s, _t) in arrows:
        if n0 <= a[0] <= n1 and m0 <= a[1] <= m1 and n0 <= b[0] <= n1 and m0 <= b[1] <= m1:
            ax.annotate("", xy=b, xytext=a, arrowprops={"arrowstyle": "->", "color": "#a33", "lw": 0.8})
    for (n, m), e in sorted(table.entries.items()):
        if n0 <= n <= n1 and m0 <= m <= m1:
            if e.partial:
                ax.plot([n], [m], marker="o", mfc="none", mec="#999", ms=5)
            elif not e.shape.is_zero:
                ax.plot([n], [m], "ko", ms=3 + e.shape.generator_count)
    ax.set_xlim(n0 - 1, n1 + 1)
    ax.set_ylim(m0 - 1, m1 + 1)
    ax.set_xlabel("n")
    ax.set_ylabel("m")
    ax.grid(True, lw=0.3)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
