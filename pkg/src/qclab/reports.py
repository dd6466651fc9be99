"""Report envelopes, canonical JSON, CSV sidecars and minimal SVG plots."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError

SCHEMA_VERSION = "1.0"
SUPPORTED_MAJOR = 1


def to_jsonable(obj):
    """Convert numpy scalars, complex numbers, tuples and dataclasses to plain JSON values.

    Non-finite floats become the strings ``"NaN"``, ``"Infinity"`` and ``"-Infinity"``.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1, allow_nan=False)


def make_envelope(command: str, config: dict, payload: dict, seed, wall_clock: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": to_jsonable(config),
        "payload": to_jsonable(payload),
        "wall_clock_seconds": wall_clock,
        "software_version": __version__,
        "seed": seed,
    }


def payload_bytes(envelope: dict) -> bytes:
    return canonical_json(envelope["payload"]).encode()


def write_envelope(path, envelope: dict) -> Path:
    path = Path(path)
    path.write_text(canonical_json(envelope) + "\n")
    return path


def read_envelope(path) -> dict:
    """Load an envelope, accepting any minor version of the supported major schema."""
    data = json.loads(Path(path).read_text())
    version = str(data.get("schema_version", ""))
    major, _, _ = version.partition(".")
    if not major.isdigit() or int(major) != SUPPORTED_MAJOR:
        raise ConfigurationError(f"unsupported report schema {version!r}")
    for key in ("config", "payload", "seed"):
        data.setdefault(key, None)
    return data


def all_checks_pass(payload: dict) -> bool:
    checks = payload.get("checks", {})
    return all(bool(v) for v in checks.values())


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def svg_plot(series, title: str = "", logx: bool = False, logy: bool = False, width: int = 480,
             height: int = 360, equal_aspect: bool = False) -> str:
    """Polylines for ``series = [(label, xs, ys), ...]`` with optional log axes."""
    pad = 40
    prepared = []
    for label, xs, ys in series:
        x = np.asarray(xs, dtype=float)
        y = np.asarray(ys, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        x, y = x[ok], y[ok]
        prepared.append((label, np.log10(x) if logx else x, np.log10(y) if logy else y))
    allx = np.concatenate([p[1] for p in prepared]) if prepared else np.zeros(1)
    ally = np.concatenate([p[2] for p in prepared]) if prepared else np.zeros(1)
    if allx.size == 0:
        allx = ally = np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    sx = (width - 2 * pad) / (x1 - x0)
    sy = (height - 2 * pad) / (y1 - y0)
    if equal_aspect:
        sx = sy = min(sx, sy)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 14}" font-size="10">{"1e" if logx else ""}{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 14}" font-size="10" text-anchor="end">'
        f'{"1e" if logx else ""}{x1:.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{"1e" if logy else ""}{y0:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{"1e" if logy else ""}{y1:.3g}</text>',
    ]
    for n, (label, x, y) in enumerate(prepared):
        color = _COLORS[n % len(_COLORS)]
        px = pad + (x - x0) * sx
        py = height - pad - (y - y0) * sy
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        lines.append(
            f'<text x="{width - pad}" y="{pad + 14 * (n + 1)}" font-size="10" text-anchor="end" '
            f'fill="{color}">{label}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
