"""
PNG heatmaps of prediction rasters.

A value ``v`` maps to the intensity
``clip(log10(1 + v / v99) / log10(2), 0, 1)`` where ``v99`` is the 99th
percentile of the present values, so ``v99`` and above saturate and the
heavy tail does not wash out the rest of the map. Intensities are
coloured along a fixed gradient from dark purple through teal to
yellow. Absent pixels are transparent.
"""

from __future__ import annotations

__all__ = ('colorize', 'intensity', 'PALETTE', 'render', 'save_png')

import logging

import numpy as np
from PIL import Image

from pydisagg.ingest import PathLike
from pydisagg.model import PredictionRaster

logger = logging.getLogger(__name__)

PERCENTILE = 99.0

# Anchors of the colour gradient: (intensity, red, green, blue)
PALETTE = (
    (0.00, 68, 1, 84),
    (0.25, 59, 82, 139),
    (0.50, 33, 145, 140),
    (0.75, 94, 201, 98),
    (1.00, 253, 231, 37),
)


def intensity(values: np.ndarray) -> np.ndarray:
    """
    Log-scaled intensity of raster values.

    :param values: Raster values, ``NaN`` where absent
    :return: Intensities in ``[0, 1]``, ``NaN`` where absent
    """
    values = np.asarray(values, dtype=np.float64)
    present = ~np.isnan(values)
    result = np.full(values.shape, np.nan)
    if not present.any():
        return result
    top = float(np.percentile(values[present], PERCENTILE))
    if top <= 0:
        result[present] = 0.0
        return result
    scaled = np.log10(1 + values[present] / top) / np.log10(2)
    result[present] = np.clip(scaled, 0.0, 1.0)
    return result


def colorize(levels: np.ndarray) -> np.ndarray:
    """
    RGBA pixels of intensities.

    :param levels: Intensities in ``[0, 1]``, ``NaN`` where absent
    :return: ``(height, width, 4)`` array of ``uint8``
    """
    levels = np.asarray(levels, dtype=np.float64)
    present = ~np.isnan(levels)
    anchors = np.array(PALETTE, dtype=np.float64)
    rgba = np.zeros(levels.shape + (4,), dtype=np.uint8)
    for channel in range(3):
        rgba[..., channel][present] = np.round(np.interp(
            levels[present], anchors[:, 0], anchors[:, channel + 1]))
    rgba[..., 3][present] = 255
    return rgba


def render(raster: PredictionRaster) -> Image.Image:
    """
    Heatmap of a prediction raster.

    :param raster: Prediction raster
    :return: RGBA image of the raster's size
    """
    return Image.fromarray(colorize(intensity(raster.values)), mode='RGBA')


def save_png(raster: PredictionRaster, path: PathLike) -> None:
    """
    Write the heatmap of a prediction raster.

    :param raster: Prediction raster
    :param path: PNG path
    """
    render(raster).save(path, format='PNG')
    logger.info('Rendered %dx%d heatmap to %s', raster.width, raster.height,
                path)
