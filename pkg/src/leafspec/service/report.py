"""Self-contained HTML diagnosis report: inline styling, inline SVG charts,
no references to external resources."""
from __future__ import annotations

import datetime
import html

import numpy as np

_PAGE = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Leaf diagnosis report</title>
<style>
body {{ font-family: Georgia, serif; margin: 2em auto; max-width: 52em; color: #1c2a1c; }}
h1 {{ border-bottom: 3px solid #3a6b35; padding-bottom: 0.3em; }}
.result {{ border: 1px solid #c5d4c5; border-radius: 8px; padding: 1em 1.5em; margin: 1.2em 0; }}
.verdict-healthy {{ color: #2e7d32; font-weight: bold; }}
.verdict-infected {{ color: #b71c1c; font-weight: bold; }}
.meta {{ color: #5a6b5a; font-size: 0.9em; }}
table {{ border-collapse: collapse; }}
td, th {{ padding: 0.25em 0.8em; border: 1px solid #c5d4c5; }}
</style>
</head>
<body>
<h1>Hyperspectral leaf diagnosis report</h1>
<p class="meta">Generated {generated} &middot; tool version {version} &middot;
model <code>{model_id}</code> ({kind}) &middot; bands {bands}</p>
{blocks}
</body>
</html>
"""

_BLOCK = """<div class="result">
<h2>{index}. {filename}</h2>
<p class="meta">cube <code>{cube_id}</code> &middot; uploaded {uploaded_at} &middot;
dims {rows}&times;{cols}&times;{bands}</p>
<p>Verdict: <span class="{verdict_class}">{label}</span></p>
<table>
<tr><th>Class</th><th>Probability</th></tr>
<tr><td>Healthy (H)</td><td>{p_h:.4f}</td></tr>
<tr><td>Infected (I)</td><td>{p_i:.4f}</td></tr>
</table>
<h3>Central-pixel spectrum</h3>
{chart}
</div>
"""


def spectrum_svg(wavelengths: np.ndarray, reflectance: np.ndarray,
                 width: int = 640, height: int = 220) -> str:
    """Inline SVG line chart (no namespace attribute: HTML5 inline SVG)."""
    pad = 42
    wl = np.asarray(wavelengths, dtype=float)
    rf = np.asarray(reflectance, dtype=float)
    x0, x1 = wl.min(), wl.max()
    y0, y1 = float(rf.min()), float(rf.max())
    if y1 - y0 < 1e-9:
        y1 = y0 + 1e-9
    xs = pad + (wl - x0) / (x1 - x0) * (width - 2 * pad)
    ys = height - pad - (rf - y0) / (y1 - y0) * (height - 2 * pad)
    points = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(xs, ys))
    ticks = []
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        x = pad + frac * (width - 2 * pad)
        nm = x0 + frac * (x1 - x0)
        ticks.append(f'<line x1="{x:.0f}" y1="{height - pad}" x2="{x:.0f}" '
                     f'y2="{height - pad + 4}" stroke="#888"/>'
                     f'<text x="{x:.0f}" y="{height - pad + 16}" font-size="10" '
                     f'text-anchor="middle" fill="#555">{nm:.0f}</text>')
    return (
        f'<svg width="{width}" height="{height}" role="img">'
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
        f'height="{height - 2 * pad}" fill="#f7faf7" stroke="#c5d4c5"/>'
        f'<polyline fill="none" stroke="#3a6b35" stroke-width="1.5" points="{points}"/>'
        f"{''.join(ticks)}"
        f'<text x="{width // 2}" y="{height - 4}" font-size="11" '
        f'text-anchor="middle" fill="#555">wavelength (nm)</text>'
        f'<text x="12" y="{height // 2}" font-size="11" text-anchor="middle" '
        f'fill="#555" transform="rotate(-90 12 {height // 2})">reflectance</text>'
        "</svg>"
    )


def build_report(results: list[dict], model_id: str, kind: str,
                 bands: list[int], version: str) -> str:
    """``results`` is ordered; each holds filename, cube_id, uploaded_at,
    dims, label, probabilities (pH, pI), wavelengths, reflectance."""
    blocks = []
    for i, r in enumerate(results, 1):
        infected = r["label"].startswith("Infected")
        blocks.append(_BLOCK.format(
            index=i,
            filename=html.escape(r["filename"] or "(unnamed upload)"),
            cube_id=r["cube_id"],
            uploaded_at=r["uploaded_at"],
            rows=r["dims"][0], cols=r["dims"][1], bands=r["dims"][2],
            verdict_class="verdict-infected" if infected else "verdict-healthy",
            label=html.escape(r["label"]),
            p_h=r["probabilities"][0], p_i=r["probabilities"][1],
            chart=spectrum_svg(r["wavelengths"], r["reflectance"]),
        ))
    generated = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return _PAGE.format(generated=generated, version=version,
                        model_id=html.escape(model_id), kind=html.escape(kind),
                        bands=", ".join(str(b) for b in bands),
                        blocks="\n".join(blocks))
