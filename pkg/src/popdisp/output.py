"""CSV interchange files and self-contained SVG line charts."""
from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

__all__ = ["fmt", "write_atomic", "csv_text", "write_csv", "read_csv", "MalformedCSV",
           "sweep_svg", "panels_svg"]


class MalformedCSV(ValueError):
    pass


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[tuple[str, object]], columns: Sequence[str],
             rows: Iterable[Sequence[object]]) -> str:
    lines = [f"# {key}={fmt(value)}" for key, value in header]
    lines.append(",".join(columns))
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, columns, rows) -> None:
    write_atomic(path, csv_text(header, columns, rows))


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return (header dict, column names, rows of strings)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedCSV(f"cannot read {path}: {exc}") from exc
    header: dict[str, str] = {}
    columns: list[str] | None = None
    rows = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                header[key.strip()] = value.strip()
            continue
        cells = line.split(",")
        if columns is None:
            columns = cells
        elif len(cells) != len(columns):
            raise MalformedCSV(f"line {n}: expected {len(columns)} fields, got {len(cells)}")
        else:
            rows.append(cells)
    if columns is None or not rows:
        raise MalformedCSV(f"{path}: no data rows")
    return header, columns, rows


_W, _H = 640, 400
_ML, _MR, _MT, _MB = 72, 20, 40, 52


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _yrange(values):
    lo, hi = min(values), max(values)
    span = hi - lo
    pad = 0.08 * span if span > 1e-12 * max(1.0, abs(hi)) else 1e-3 * max(1.0, abs(hi))
    return lo - pad, hi + pad


def _panel(d, M, ref, title, ox, oy, w, h) -> list[str]:
    lx = [math.log10(v) for v in d]
    x_lo, x_hi = min(lx), max(lx)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    y_lo, y_hi = _yrange(list(M) + [ref])
    pw, ph = w - _ML - _MR, h - _MT - _MB

    def X(v):
        return ox + _ML + (v - x_lo) / (x_hi - x_lo) * pw

    def Y(v):
        return oy + _MT + (y_hi - v) / (y_hi - y_lo) * ph

    out = [f'<g class="panel">',
           f'<rect x="{ox + _ML}" y="{oy + _MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{ox + w / 2:.1f}" y="{oy + 24}" text-anchor="middle" font-size="15">{_escape(title)}</text>']
    for k in range(math.ceil(x_lo), math.floor(x_hi) + 1):
        xk = X(k)
        out.append(f'<line x1="{xk:.3f}" y1="{oy + _MT + ph}" x2="{xk:.3f}" y2="{oy + _MT + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{xk:.3f}" y="{oy + _MT + ph + 18}" text-anchor="middle" font-size="11">1e{k}</text>')
    for j in range(5):
        yv = y_lo + (y_hi - y_lo) * j / 4
        out.append(f'<line x1="{ox + _ML - 5}" y1="{Y(yv):.3f}" x2="{ox + _ML}" y2="{Y(yv):.3f}" stroke="#444"/>')
        out.append(f'<text x="{ox + _ML - 8}" y="{Y(yv) + 4:.3f}" text-anchor="end" font-size="11">{yv:.4g}</text>')
    out.append(f'<text x="{ox + _ML + pw / 2:.1f}" y="{oy + h - 12}" text-anchor="middle" font-size="13">d</text>')
    out.append(f'<text x="{ox + 16}" y="{oy + _MT + ph / 2:.1f}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 {ox + 16} {oy + _MT + ph / 2:.1f})">M(d)</text>')
    out.append(f'<line class="reference" x1="{X(x_lo):.3f}" y1="{Y(ref):.3f}" x2="{X(x_hi):.3f}" '
               f'y2="{Y(ref):.3f}" stroke="#888" stroke-dasharray="6,4"/>')
    pts = " ".join(f"{X(a):.3f},{Y(b):.3f}" for a, b in zip(lx, M))
    out.append(f'<polyline class="curve" points="{pts}" fill="none" stroke="#1f5fa8" stroke-width="2"/>')
    out.append("</g>")
    return out


def sweep_svg(d: Sequence[float], M: Sequence[float], int_K: float, title: str) -> str:
    """Log-d line plot of M with a dashed reference line at int K."""
    body = _panel(d, M, int_K, title, 0, 0, _W, _H)
    return _svg(_W, _H, body)


def panels_svg(panels: Sequence[tuple[str, Sequence[float], Sequence[float], float]], ncols: int = 3) -> str:
    """Grid of sweep panels; each panel is (title, d, M, int K)."""
    nrows = max(1, math.ceil(len(panels) / ncols))
    body = []
    for i, (title, d, M, ref) in enumerate(panels):
        body += _panel(d, M, ref, title, (i % ncols) * _W, (i // ncols) * _H, _W, _H)
    return _svg(_W * min(ncols, len(panels)), _H * nrows, body)


def _svg(w, h, body) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}" font-family="sans-serif">')
    return "\n".join([head, f'<rect width="{w}" height="{h}" fill="white"/>', *body, "</svg>"]) + "\n"
