"""Figure-data exports and static SVG charts.

Three result views: the chosen weekly price path against predicted
demand, the same path against predicted revenue, and the sweep summary
of objective and mean price per sell-through floor. Each is written as a
small CSV plus a non-interactive SVG rendered from the same rows, with
fixed coordinate formatting so repeated runs emit identical bytes.

The price/demand and price/revenue views use the plan of the lowest
feasible sell-through floor (the least constrained run). A run with no
feasible plan still writes the files: CSV header plus a status note, and
an SVG stating that no feasible plan exists.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .forecast import ForecastGrid

_INFEASIBLE_NOTE = "# status: infeasible, no feasible plan"

_WIDTH = 640
_HEIGHT = 360
_MARGIN_L = 64
_MARGIN_R = 64
_MARGIN_T = 40
_MARGIN_B = 48
_COLOR_LEFT = "#1f77b4"
_COLOR_RIGHT = "#d62728"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


class _Scale:
    """Affine map from data range to pixel range, padded 5% each side."""

    def __init__(self, values, px_lo: float, px_hi: float):
        lo, hi = min(values), max(values)
        if hi <= lo:
            pad = abs(lo) * 0.1 or 1.0
        else:
            pad = (hi - lo) * 0.05
        self.lo, self.hi = lo - pad, hi + pad
        self.px_lo, self.px_hi = px_lo, px_hi

    def __call__(self, v: float) -> float:
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.px_lo + frac * (self.px_hi - self.px_lo)

    def ticks(self, n: int = 5) -> list:
        return _ticks(self.lo, self.hi, n)


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _svg_open(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
    ]


def _note_svg(title: str, note: str, path: Path) -> None:
    parts = _svg_open(title)
    parts.append(
        f'<text x="{_WIDTH / 2}" y="{_HEIGHT / 2}" text-anchor="middle" '
        f'fill="#666">{_esc(note)}</text>'
    )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _dual_axis_svg(
    title: str,
    x_label: str,
    xs,
    left_label: str,
    left_ys,
    right_label: str,
    right_ys,
    path: Path,
) -> None:
    """Two series on a shared x axis with independent y scales."""
    x0, x1 = _MARGIN_L, _WIDTH - _MARGIN_R
    y0, y1 = _HEIGHT - _MARGIN_B, _MARGIN_T
    sx = _Scale(xs, x0, x1)
    sl = _Scale(left_ys, y0, y1)
    sr = _Scale(right_ys, y0, y1)
    parts = _svg_open(title)
    # frame and gridlines
    parts.append(
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        f'fill="none" stroke="#ccc"/>'
    )
    for tick in sx.ticks():
        px = _fmt(sx(tick))
        parts.append(f'<line x1="{px}" y1="{y0}" x2="{px}" y2="{y0 + 4}" stroke="#333"/>')
        parts.append(
            f'<text x="{px}" y="{y0 + 16}" text-anchor="middle">{_esc(f"{tick:g}")}</text>'
        )
    for tick in sl.ticks():
        py = _fmt(sl(tick))
        parts.append(f'<line x1="{x0 - 4}" y1="{py}" x2="{x0}" y2="{py}" stroke="#333"/>')
        parts.append(
            f'<text x="{x0 - 6}" y="{py}" text-anchor="end" dominant-baseline="middle" '
            f'fill="{_COLOR_LEFT}">{_esc(f"{tick:.4g}")}</text>'
        )
    for tick in sr.ticks():
        py = _fmt(sr(tick))
        parts.append(f'<line x1="{x1}" y1="{py}" x2="{x1 + 4}" y2="{py}" stroke="#333"/>')
        parts.append(
            f'<text x="{x1 + 6}" y="{py}" dominant-baseline="middle" '
            f'fill="{_COLOR_RIGHT}">{_esc(f"{tick:.4g}")}</text>'
        )
    for label, ys, scale, color in (
        (left_label, left_ys, sl, _COLOR_LEFT),
        (right_label, right_ys, sr, _COLOR_RIGHT),
    ):
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(scale(y))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in zip(xs, ys):
            parts.append(
                f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(scale(y))}" r="3" fill="{color}"/>'
            )
    parts.append(
        f'<text x="{(x0 + x1) / 2}" y="{_HEIGHT - 12}" text-anchor="middle">{_esc(x_label)}</text>'
    )
    legend_y = _MARGIN_T - 8
    parts.append(
        f'<text x="{x0}" y="{legend_y}" fill="{_COLOR_LEFT}">{_esc(left_label)}</text>'
    )
    parts.append(
        f'<text x="{x1}" y="{legend_y}" text-anchor="end" '
        f'fill="{_COLOR_RIGHT}">{_esc(right_label)}</text>'
    )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _plan_rows(weekly: ForecastGrid, plan) -> list:
    rows = []
    for t, i in enumerate(plan.levels):
        rows.append(
            (
                t + 1,
                float(weekly.ladder.levels[i]),
                float(weekly.demand[i, t]),
                float(weekly.revenue[i, t]),
            )
        )
    return rows


def _write_csv(path: Path, header, rows, infeasible: bool) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
        if infeasible:
            fh.write(_INFEASIBLE_NOTE + "\n")


def emit_figures(weekly: ForecastGrid, optimized, out_dir) -> list:
    """Write fig2/fig3 (and fig4 for sweeps) as CSV + SVG pairs.

    ``optimized`` is the OptimizeArtifacts of the run; fig4 is emitted
    only when it came from a sweep. Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    chosen = optimized.best_feasible()

    fig2_csv, fig2_svg = out / "fig2.csv", out / "fig2.svg"
    fig3_csv, fig3_svg = out / "fig3.csv", out / "fig3.svg"
    if chosen is None:
        _write_csv(fig2_csv, ["week", "price", "demand"], [], infeasible=True)
        _write_csv(fig3_csv, ["week", "price", "revenue"], [], infeasible=True)
        _note_svg("Optimal pricing and predicted demand", "no feasible plan", fig2_svg)
        _note_svg("Optimal pricing and predicted revenue", "no feasible plan", fig3_svg)
    else:
        _, outcome = chosen
        rows = _plan_rows(weekly, outcome.plan)
        weeks = [r[0] for r in rows]
        prices = [r[1] for r in rows]
        demands = [r[2] for r in rows]
        revenues = [r[3] for r in rows]
        _write_csv(
            fig2_csv,
            ["week", "price", "demand"],
            [(w, repr(p), repr(d)) for w, p, d in zip(weeks, prices, demands)],
            infeasible=False,
        )
        _write_csv(
            fig3_csv,
            ["week", "price", "revenue"],
            [(w, repr(p), repr(r)) for w, p, r in zip(weeks, prices, revenues)],
            infeasible=False,
        )
        _dual_axis_svg(
            "Optimal pricing and predicted demand",
            "week",
            weeks,
            "price",
            prices,
            "demand",
            demands,
            fig2_svg,
        )
        _dual_axis_svg(
            "Optimal pricing and predicted revenue",
            "week",
            weeks,
            "price",
            prices,
            "revenue",
            revenues,
            fig3_svg,
        )
    paths += [fig2_csv, fig2_svg, fig3_csv, fig3_svg]

    if optimized.is_sweep:
        fig4_csv, fig4_svg = out / "fig4.csv", out / "fig4.svg"
        rows = []
        for a, outcome in optimized.results:
            if outcome.plan is None:
                rows.append((repr(float(a)), "", ""))
            else:
                prices = [float(weekly.ladder.levels[i]) for i in outcome.plan.levels]
                rows.append(
                    (
                        repr(float(a)),
                        repr(float(outcome.plan.objective)),
                        repr(sum(prices) / len(prices)),
                    )
                )
        any_feasible = any(r[1] != "" for r in rows)
        _write_csv(
            fig4_csv, ["alpha", "objective", "mean_price"], rows, infeasible=not any_feasible
        )
        if any_feasible:
            feas = [
                (float(a), float(o.plan.objective), o)
                for a, o in optimized.results
                if o.plan is not None
            ]
            alphas = [f[0] for f in feas]
            objectives = [f[1] for f in feas]
            mean_prices = [
                sum(float(weekly.ladder.levels[i]) for i in f[2].plan.levels)
                / len(f[2].plan.levels)
                for f in feas
            ]
            _dual_axis_svg(
                "Objective and mean price per sell-through floor",
                "alpha",
                alphas,
                "objective",
                objectives,
                "mean price",
                mean_prices,
                fig4_svg,
            )
        else:
            _note_svg(
                "Objective and mean price per sell-through floor",
                "no feasible plan at any alpha",
                fig4_svg,
            )
        paths += [fig4_csv, fig4_svg]
    return paths
