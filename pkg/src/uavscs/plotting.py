"""SVG charts rendered from the persisted CSV files (no recomputation, no plotting dependency)."""
from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import escape

from .results_io import read_csv

WIDTH, HEIGHT = 640, 480
MARGIN = 60
COLORS = {"alice": "#1f77b4", "jack": "#d62728", "bob": "#2ca02c", "eve": "#000000",
          "target": "#ff7f0e", "sc": "#1f77b4", "scs": "#ff7f0e"}
SERIES = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]


def _nice_range(values, pad=0.05):
    lo, hi = min(values), max(values)
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span


class _Canvas:
    def __init__(self, xr, yr, title, xlabel, ylabel, equal=False):
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        if equal:
            # same meters per pixel on both axes
            sx = (self.x1 - self.x0) / (WIDTH - 2 * MARGIN)
            sy = (self.y1 - self.y0) / (HEIGHT - 2 * MARGIN)
            s = max(sx, sy)
            cx, cy = (self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2
            self.x0, self.x1 = cx - s * (WIDTH - 2 * MARGIN) / 2, cx + s * (WIDTH - 2 * MARGIN) / 2
            self.y0, self.y1 = cy - s * (HEIGHT - 2 * MARGIN) / 2, cy + s * (HEIGHT - 2 * MARGIN) / 2
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" font-size="16">{escape(title)}</text>',
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13">'
            f'{escape(xlabel)}</text>',
            f'<text x="18" y="{HEIGHT / 2}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 18 {HEIGHT / 2})">{escape(ylabel)}</text>',
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#444"/>',
        ]
        for i in range(5):
            fx = self.x0 + i * (self.x1 - self.x0) / 4
            fy = self.y0 + i * (self.y1 - self.y0) / 4
            self.parts.append(f'<text x="{self.px(fx):.1f}" y="{HEIGHT - MARGIN + 16}" '
                              f'text-anchor="middle" font-size="11">{fx:.4g}</text>')
            self.parts.append(f'<text x="{MARGIN - 6}" y="{self.py(fy) + 4:.1f}" '
                              f'text-anchor="end" font-size="11">{fy:.4g}</text>')

    def px(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        return HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)

    def polyline(self, pts, color, cls, width=2):
        coords = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in pts)
        self.parts.append(f'<polyline class="{cls}" points="{coords}" fill="none" '
                          f'stroke="{color}" stroke-width="{width}"/>')
        for x, y in pts:
            self.parts.append(f'<circle class="{cls}-pt" cx="{self.px(x):.2f}" '
                              f'cy="{self.py(y):.2f}" r="2.5" fill="{color}"/>')

    def marker(self, x, y, color, cls, label):
        cx, cy = self.px(x), self.py(y)
        self.parts.append(f'<rect class="{cls}" x="{cx - 5:.2f}" y="{cy - 5:.2f}" width="10" '
                          f'height="10" fill="{color}"/>')
        self.parts.append(f'<text x="{cx + 8:.2f}" y="{cy - 6:.2f}" font-size="11">'
                          f'{escape(label)}</text>')

    def bar(self, x, w, y, color, cls):
        top, base = self.py(max(y, 0.0)), self.py(min(y, 0.0))
        self.parts.append(f'<rect class="{cls}" x="{self.px(x - w / 2):.2f}" y="{top:.2f}" '
                          f'width="{self.px(x + w / 2) - self.px(x - w / 2):.2f}" '
                          f'height="{max(base - top, 0.0):.2f}" fill="{color}"/>')

    def legend(self, items):
        for i, (label, color) in enumerate(items):
            y = MARGIN + 14 + 16 * i
            x = WIDTH - MARGIN - 110
            self.parts.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{x + 14}" y="{y}" font-size="11">{escape(label)}</text>')

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.parts + ["</svg>"]) + "\n", encoding="utf-8")
        return path


def _f(text):
    return float(text)


def plot_trajectory(trajectory_csv, out_svg, result_json=None, assignment_csv=None) -> Path:
    """Both UAV polylines plus Bob, Eve and target markers.

    Ground nodes come from ``mission_result.json`` and ``assignment.csv`` next to the
    trajectory file unless given explicitly; either may be missing.
    """
    trajectory_csv = Path(trajectory_csv)
    rows = read_csv(trajectory_csv, "trajectory")
    if not rows:
        raise ValueError(f"{trajectory_csv}: no trajectory rows")
    alice = [(_f(r["x_alice"]), _f(r["y_alice"])) for r in rows]
    jack = [(_f(r["x_jack"]), _f(r["y_jack"])) for r in rows if r["x_jack"] != ""]
    nodes = []
    rj = Path(result_json) if result_json else trajectory_csv.with_name("mission_result.json")
    if rj.exists():
        doc = json.loads(rj.read_text(encoding="utf-8"))["scenario"]
        nodes += [("Bob", *doc["bob_pos_m"], COLORS["bob"], "bob"),
                  ("Eve", *doc["eve_pos_m"], COLORS["eve"], "eve")]
    ac = Path(assignment_csv) if assignment_csv else trajectory_csv.with_name("assignment.csv")
    if ac.exists():
        for r in read_csv(ac, "assignment"):
            nodes.append((f"target {r['target']}", _f(r["x"]), _f(r["y"]), COLORS["target"], "target"))
    xs = [p[0] for p in alice + jack] + [n[1] for n in nodes]
    ys = [p[1] for p in alice + jack] + [n[2] for n in nodes]
    c = _Canvas(_nice_range(xs), _nice_range(ys), "UAV trajectories", "x (m)", "y (m)", equal=True)
    c.polyline(alice, COLORS["alice"], "alice")
    legend = [("Alice", COLORS["alice"])]
    if jack:
        c.polyline(jack, COLORS["jack"], "jack")
        legend.append(("Jack", COLORS["jack"]))
    for label, x, y, color, cls in nodes:
        c.marker(x, y, color, cls, label)
    c.legend(legend)
    return c.save(out_svg)


def plot_rates(rates_csv, out_svg) -> Path:
    """Per-slot secrecy-rate bars, colored by phase."""
    rows = read_csv(rates_csv, "rates")
    if not rows:
        raise ValueError(f"{rates_csv}: no rate rows")
    slots = [int(r["slot"]) for r in rows]
    vals = [_f(r["secrecy_rate"]) for r in rows]
    c = _Canvas((min(slots) - 1, max(slots) + 1), (0.0, max(max(vals), 1e-3) * 1.1),
                "Per-slot secrecy rate", "slot", "secrecy rate (bits/s/Hz)")
    for n, v, r in zip(slots, vals, rows):
        c.bar(n, 0.7, v, COLORS.get(r["phase"], "#777"), f"bar-{r['phase']}")
    c.legend([("communication", COLORS["sc"]), ("sensing", COLORS["scs"])])
    return c.save(out_svg)


def plot_sweep(sweep_csv, out_dir) -> list[Path]:
    """One line chart per swept parameter: overall ASR against value, one series per scheme."""
    rows = read_csv(sweep_csv, "sweep")
    if not rows:
        raise ValueError(f"{sweep_csv}: no sweep rows")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for param in sorted({r["param"] for r in rows}):
        sel = [r for r in rows if r["param"] == param and r["asr_overall"] != ""]
        if not sel:
            continue
        series = {}
        for r in sel:
            series.setdefault(r["scheme"], []).append((_f(r["value"]), _f(r["asr_overall"])))
        xs = [p[0] for pts in series.values() for p in pts]
        ys = [p[1] for pts in series.values() for p in pts]
        c = _Canvas(_nice_range(xs), _nice_range(ys), f"ASR vs {param}", param,
                    "ASR (bits/s/Hz)")
        legend = []
        for i, (scheme, pts) in enumerate(sorted(series.items())):
            color = SERIES[i % len(SERIES)]
            c.polyline(sorted(pts), color, f"series-{scheme}")
            legend.append((scheme, color))
        c.legend(legend)
        written.append(c.save(out / f"sweep_{param}.svg"))
    return written
