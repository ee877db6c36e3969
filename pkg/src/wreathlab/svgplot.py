"""Tiny deterministic SVG line plots (no plotting dependency).

One drawing routine: a main panel with any number of (x, y) series drawn
as polylines on optionally log-scaled axes, an optional lower panel for
per-point ratios, and optional vertical annotation lines.  Output bytes
depend only on the inputs (floats are formatted with a fixed precision),
so identical data produces identical files.
"""

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _fmt(x):
    return "%.2f" % x


def _transform(values, log):
    return [math.log10(v) for v in values] if log else list(values)


def _scale(vals, lo_px, hi_px):
    lo, hi = min(vals), max(vals)
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    f = (hi_px - lo_px) / (hi - lo)
    return lambda v: lo_px + (v - lo) * f, (lo, hi)


def _polyline(xs, ys, color):
    pts = " ".join("%s,%s" % (_fmt(x), _fmt(y)) for x, y in zip(xs, ys))
    return ('<polyline fill="none" stroke="%s" stroke-width="1.5" '
            'points="%s"/>' % (color, pts))


def _tick_text(v, log):
    return ("1e%s" % _fmt(v)) if log else _fmt(v)


def line_plot(series, title="", log_x=True, log_y=True, ratios=None,
              annotations=(), width=640, height=420):
    """SVG text for named series [(name, [(x, y), ...]), ...].

    ratios: optional [(x, ratio), ...] drawn in a lower panel on the same
    x-axis (linear y).  annotations: [(x, label), ...] vertical lines.
    """
    if not series or any(not pts for _, pts in series):
        raise ValueError("invalid-parameter: every series needs points")
    main_h = height - (140 if ratios else 40)
    margin, top = 60, 30
    all_x, all_y = [], []
    for _, pts in series:
        all_x.extend(p[0] for p in pts)
        all_y.extend(p[1] for p in pts)
    tx, xr = _scale(_transform(all_x, log_x), margin, width - 20)
    ty, yr = _scale(_transform(all_y, log_y), main_h, top)
    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">'
           % (width, height),
           '<rect width="100%" height="100%" fill="white"/>',
           '<text x="%d" y="18" font-size="13" font-family="monospace">%s'
           '</text>' % (margin, title)]
    for i, (name, pts) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        xs = [tx(v) for v in _transform([p[0] for p in pts], log_x)]
        ys = [ty(v) for v in _transform([p[1] for p in pts], log_y)]
        out.append(_polyline(xs, ys, color))
        out.append('<text x="%d" y="%d" font-size="11" fill="%s" '
                   'font-family="monospace">%s</text>'
                   % (width - 150, top + 14 * i, color, name))
    out.append('<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
               % (margin, main_h, width - 20, main_h))
    out.append('<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
               % (margin, top, margin, main_h))
    for v, px in ((xr[0], margin), (xr[1], width - 20)):
        out.append('<text x="%d" y="%d" font-size="10" font-family="monospace">'
                   '%s</text>' % (px - 10, main_h + 14, _tick_text(v, log_x)))
    for v, py in ((yr[0], main_h), (yr[1], top)):
        out.append('<text x="2" y="%d" font-size="10" font-family="monospace">'
                   '%s</text>' % (py, _tick_text(v, log_y)))
    for x, label in annotations:
        px = tx(_transform([x], log_x)[0])
        out.append('<line x1="%s" y1="%d" x2="%s" y2="%d" stroke="#888" '
                   'stroke-dasharray="4 3"/>' % (_fmt(px), top, _fmt(px), main_h))
        out.append('<text x="%s" y="%d" font-size="10" fill="#555" '
                   'font-family="monospace">%s</text>'
                   % (_fmt(px + 3), top + 12, label))
    if ratios:
        r_top, r_bot = main_h + 30, height - 25
        rx = [tx(v) for v in _transform([p[0] for p in ratios], log_x)]
        ry_t, rr = _scale([p[1] for p in ratios], r_bot, r_top)
        out.append(_polyline(rx, [ry_t(p[1]) for p in ratios], "#555"))
        out.append('<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
                   % (margin, r_bot, width - 20, r_bot))
        out.append('<text x="2" y="%d" font-size="10" font-family="monospace">'
                   'ratio %s..%s</text>' % (r_top + 10, _fmt(rr[0]), _fmt(rr[1])))
    out.append("</svg>")
    return "\n".join(out) + "\n"
