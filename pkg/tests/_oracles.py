"""Independent reference implementations used only to cross-check the package.

Everything here is deliberately written from scratch against the definitions
(BFS flood fill, per-threshold recomputation, manual interpolation) instead of
reusing package internals, so agreement is meaningful.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, List, Sequence, Tuple

import numpy as np


def neighbor_offsets(connectivity: int) -> List[Tuple[int, int, int]]:
    max_manhattan = {6: 1, 18: 2, 26: 3}[connectivity]
    offsets = []
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if (dz, dy, dx) == (0, 0, 0):
                    continue
                if abs(dz) + abs(dy) + abs(dx) <= max_manhattan:
                    offsets.append((dz, dy, dx))
    return offsets


def flood_fill_components(mask: np.ndarray, connectivity: int) -> List[frozenset]:
    """BFS flood fill; components appear in scan order of their first voxel.

    Voxels are identified by flat C-order index.
    """
    nz, ny, nx = mask.shape
    offsets = neighbor_offsets(connectivity)
    seen = np.zeros(mask.shape, dtype=bool)
    components: List[frozenset] = []
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                if not mask[z, y, x] or seen[z, y, x]:
                    continue
                queue = deque([(z, y, x)])
                seen[z, y, x] = True
                comp = []
                while queue:
                    cz, cy, cx = queue.popleft()
                    comp.append((cz * ny + cy) * nx + cx)
                    for dz, dy, dx in offsets:
                        tz, ty, tx = cz + dz, cy + dy, cx + dx
                        if 0 <= tz < nz and 0 <= ty < ny and 0 <= tx < nx:
                            if mask[tz, ty, tx] and not seen[tz, ty, tx]:
                                seen[tz, ty, tx] = True
                                queue.append((tz, ty, tx))
                components.append(frozenset(comp))
    return components


def froc_oracle(
    cases: Sequence[Tuple[np.ndarray, np.ndarray]],
    thresholds: Sequence[float],
    connectivity: int = 26,
) -> Tuple[List[Tuple[float, float]], List[Tuple[float, float]]]:
    """Brute-force FROC: relabel and rematch everything at every threshold.

    Returns (raw per-threshold points, monotone envelope). Matching is the
    one-voxel-overlap criterion.
    """
    n_cases = len(cases)
    total_lesions = sum(len(flood_fill_components(gt > 0, connectivity)) for gt, _ in cases)
    raw: List[Tuple[float, float]] = []
    for t in thresholds:
        fp = 0
        found = 0
        for gt, prob in cases:
            gt_comps = flood_fill_components(gt > 0, connectivity)
            pred_comps = flood_fill_components(prob >= t, connectivity)
            for g in gt_comps:
                if any(g & p for p in pred_comps):
                    found += 1
            for p in pred_comps:
                if all(not (p & g) for g in gt_comps):
                    fp += 1
        raw.append((fp / n_cases, found / total_lesions))

    best: Dict[float, float] = {}
    for fp_rate, recall in raw:
        if fp_rate not in best or recall > best[fp_rate]:
            best[fp_rate] = recall
    envelope: List[Tuple[float, float]] = []
    running = -1.0
    for fp_rate in sorted(best):
        running = max(running, best[fp_rate])
        envelope.append((fp_rate, running))
    return raw, envelope


def average_recall_oracle(
    envelope: Sequence[Tuple[float, float]], targets: Sequence[float]
) -> float:
    """Manual piecewise-linear interpolation anchored at (0, 0), clamped right."""
    xs = [p[0] for p in envelope]
    ys = [p[1] for p in envelope]
    if xs[0] > 0.0:
        xs = [0.0] + xs
        ys = [0.0] + ys
    recalls = []
    for t in targets:
        if t >= xs[-1]:
            recalls.append(ys[-1])
            continue
        if t <= xs[0]:
            recalls.append(ys[0])
            continue
        k = max(i for i in range(len(xs)) if xs[i] <= t)
        x0, y0 = xs[k], ys[k]
        x1, y1 = xs[k + 1], ys[k + 1]
        recalls.append(y0 + (y1 - y0) * ((t - x0) / (x1 - x0)))
    return sum(recalls) / len(targets)


def central_difference_gradient(func, p: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of the flat array p."""
    grad = np.zeros_like(p, dtype=np.float64)
    flat = p.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = func(p)
        flat[i] = orig - h
        f_minus = func(p)
        flat[i] = orig
        out[i] = (f_plus - f_minus) / (2.0 * h)
    return grad
