"""
File writers for reports and curves.

Every writer goes through a temporary file in the target directory followed
by os.replace, so a crashed run never leaves a half-written artifact.
"""

import csv
import io
import json
import logging
import os
import tempfile
import xml.etree.ElementTree as ET
from typing import Any, Dict, Optional

import numpy as np

from core.geometry import CurveData

logger = logging.getLogger(__name__)

SVG_NS = 'http://www.w3.org/2000/svg'


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp_', suffix=os.path.splitext(path)[1])
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj: Any):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, 'value'):
        return obj.value
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps_report(data: Dict[str, Any]) -> str:
    """Stable JSON text (sorted keys) so identical runs give identical bytes."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, default=_jsonable) + '\n'


def write_json(path: str, data: Dict[str, Any]):
    _atomic_write(path, dumps_report(data))
    logger.info(f"💾 Wrote {path}")


def write_curve_csv(path: str, curve: CurveData):
    """Columns: t, x, y, h, r, is_cusp, is_vertex."""
    cusps, vertices = curve.cusp_flags(), curve.vertex_flags()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['t', 'x', 'y', 'h', 'r', 'is_cusp', 'is_vertex'])
    for i in range(curve.t.size):
        writer.writerow([
            f"{curve.t[i]:.12g}",
            f"{curve.points[i, 0]:.12g}",
            f"{curve.points[i, 1]:.12g}",
            f"{curve.h[i]:.12g}",
            f"{curve.r[i]:.12g}",
            int(cusps[i]),
            int(vertices[i]),
        ])
    _atomic_write(path, buffer.getvalue())
    logger.info(f"💾 Wrote {path}")


def curve_svg(
    curve: CurveData,
    size: int = 800,
    stroke: str = '#1f3b73',
    stroke_width: float = 0.004,
    cusp_color: str = '#c0392b',
    margin: float = 0.05,
    close: Optional[bool] = None,
) -> str:
    """
    SVG text: the curve as a path through every grid point, cusps as dots of
    1% of the view radius. Stroke width is relative to the view size.
    """
    points = curve.points
    lo, hi = points.min(axis=0), points.max(axis=0)
    extent = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    pad = margin * extent
    min_x, min_y = lo[0] - pad, -(hi[1] + pad)         # y axis points down in SVG
    view = extent + 2.0 * pad
    close = (np.linalg.norm(curve.displacement) <= 1e-6 * extent) if close is None else close

    svg = ET.Element('svg')
    svg.set('xmlns', SVG_NS)
    svg.set('width', str(size))
    svg.set('height', str(size))
    svg.set('viewBox', f"{min_x:.6f} {min_y:.6f} {view:.6f} {view:.6f}")

    d = ' '.join(
        f"{'M' if i == 0 else 'L'}{x:.6f},{-y:.6f}" for i, (x, y) in enumerate(points)
    )
    if close:
        d += ' Z'
    else:
        end = points[0] + curve.displacement
        d += f" L{end[0]:.6f},{-end[1]:.6f}"
    path = ET.SubElement(svg, 'path')
    path.set('d', d)
    path.set('fill', 'none')
    path.set('stroke', stroke)
    path.set('stroke-width', f"{stroke_width * view:.6f}")
    path.set('stroke-linejoin', 'round')

    radius = 0.01 * view
    for cusp in curve.cusps:
        x = np.interp(cusp, curve.t, points[:, 0], period=curve.period)
        y = np.interp(cusp, curve.t, points[:, 1], period=curve.period)
        dot = ET.SubElement(svg, 'circle')
        dot.set('cx', f"{x:.6f}")
        dot.set('cy', f"{-y:.6f}")
        dot.set('r', f"{radius:.6f}")
        dot.set('fill', cusp_color)

    return ET.tostring(svg, encoding='unicode') + '\n'


def write_curve_svg(path: str, curve: CurveData, **style):
    _atomic_write(path, curve_svg(curve, **style))
    logger.info(f"💾 Wrote {path}")
