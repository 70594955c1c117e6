#!/usr/bin/env python3
"""Marching-squares reference on a fixed two-bump field.

Writes the field (row-major, row = y) and the contour vertices found by
scikit-image at two levels. Vertex coordinates are in cell-centre units:
x = column + 0.5, y = row + 0.5.
"""
import pathlib

import numpy as np
from skimage import measure

OUT = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
N = 48

yy, xx = np.mgrid[0:N, 0:N] + 0.5
field = (np.exp(-((xx - 16.3) ** 2 + (yy - 20.1) ** 2) / (2 * 5.0 ** 2))
         + 0.7 * np.exp(-((xx - 31.7) ** 2 + (yy - 27.4) ** 2) / (2 * 4.0 ** 2)))
np.savetxt(OUT / "contour_field.csv", field, delimiter=",", fmt="%.17g")

with open(OUT / "contour_vertices.csv", "w") as f:
    for level in (0.25, 0.6):
        pts = set()
        for c in measure.find_contours(field, level):
            for r, col in c:
                pts.add((round(col + 0.5, 9), round(r + 0.5, 9)))
        for x, y in sorted(pts):
            f.write(f"{level},{x:.9f},{y:.9f}\n")
