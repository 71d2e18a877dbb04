"""numba kernels for t-SNE forces (serial, fixed summation order)."""

import numpy as np
from numba import njit

MAX_DEPTH = 50


@njit(cache=True)
def attraction(y, rows, cols, values):
    """sum_j p_ij w_ij (y_i - y_j) over the stored (i<j) entries, both directions."""
    out = np.zeros_like(y)
    for e in range(len(rows)):
        i = rows[e]
        j = cols[e]
        dx = y[i, 0] - y[j, 0]
        dy = y[i, 1] - y[j, 1]
        f = values[e] / (1.0 + dx * dx + dy * dy)
        out[i, 0] += f * dx
        out[i, 1] += f * dy
        out[j, 0] -= f * dx
        out[j, 1] -= f * dy
    return out


@njit(cache=True)
def log_kernel_on_edges(y, rows, cols):
    out = np.empty(len(rows))
    for e in range(len(rows)):
        i = rows[e]
        j = cols[e]
        dx = y[i, 0] - y[j, 0]
        dy = y[i, 1] - y[j, 1]
        out[e] = -np.log1p(dx * dx + dy * dy)
    return out


@njit(cache=True)
def repulsion_exact(y):
    """Returns (sum_j w_ij^2 (y_i - y_j), Z) with Z = sum over ordered pairs i != j of w_ij."""
    n = y.shape[0]
    out = np.zeros_like(y)
    z = 0.0
    for i in range(n):
        xi = y[i, 0]
        yi = y[i, 1]
        fx = 0.0
        fy = 0.0
        for j in range(i + 1, n):
            dx = xi - y[j, 0]
            dy = yi - y[j, 1]
            w = 1.0 / (1.0 + dx * dx + dy * dy)
            z += 2.0 * w
            w2 = w * w
            fx += w2 * dx
            fy += w2 * dy
            out[j, 0] -= w2 * dx
            out[j, 1] -= w2 * dy
        out[i, 0] += fx
        out[i, 1] += fy
    return out, z


@njit(cache=True)
def _quadrant(cx, cy, px, py):
    q = 0
    if px >= cx:
        q += 1
    if py >= cy:
        q += 2
    return q


@njit(cache=True)
def build_quadtree(y):
    """Point-insertion quadtree stored in flat arrays.

    Returns (center, half_width, com, count, first_child, point, n_nodes).
    Children of node k are first_child[k] .. first_child[k] + 3; leaves have
    first_child == -1.  Coincident points collapse into one leaf once
    MAX_DEPTH is reached.
    """
    n = y.shape[0]
    cap = 8 * n + 8
    center = np.zeros((cap, 2))
    half = np.zeros(cap)
    com = np.zeros((cap, 2))
    count = np.zeros(cap, dtype=np.int64)
    first_child = -np.ones(cap, dtype=np.int64)
    point = -np.ones(cap, dtype=np.int64)

    lo0 = y[:, 0].min()
    hi0 = y[:, 0].max()
    lo1 = y[:, 1].min()
    hi1 = y[:, 1].max()
    center[0, 0] = 0.5 * (lo0 + hi0)
    center[0, 1] = 0.5 * (lo1 + hi1)
    half[0] = 0.5 * max(hi0 - lo0, hi1 - lo1) * (1.0 + 1e-9) + 1e-12
    n_nodes = 1

    for idx in range(n):
        px = y[idx, 0]
        py = y[idx, 1]
        node = 0
        depth = 0
        while True:
            c = count[node]
            com[node, 0] = (com[node, 0] * c + px) / (c + 1)
            com[node, 1] = (com[node, 1] * c + py) / (c + 1)
            count[node] = c + 1
            if first_child[node] == -1:
                if c == 0:
                    point[node] = idx
                    break
                if depth >= MAX_DEPTH:
                    point[node] = -1
                    break
                if n_nodes + 4 > cap:
                    new_cap = 2 * cap
                    center2 = np.zeros((new_cap, 2))
                    center2[:cap] = center
                    center = center2
                    half2 = np.zeros(new_cap)
                    half2[:cap] = half
                    half = half2
                    com2 = np.zeros((new_cap, 2))
                    com2[:cap] = com
                    com = com2
                    count2 = np.zeros(new_cap, dtype=np.int64)
                    count2[:cap] = count
                    count = count2
                    fc2 = -np.ones(new_cap, dtype=np.int64)
                    fc2[:cap] = first_child
                    first_child = fc2
                    pt2 = -np.ones(new_cap, dtype=np.int64)
                    pt2[:cap] = point
                    point = pt2
                    cap = new_cap
                first_child[node] = n_nodes
                h = 0.5 * half[node]
                for q in range(4):
                    k = n_nodes + q
                    half[k] = h
                    center[k, 0] = center[node, 0] + (h if q & 1 else -h)
                    center[k, 1] = center[node, 1] + (h if q & 2 else -h)
                n_nodes += 4
                old = point[node]
                point[node] = -1
                ox = y[old, 0]
                oy = y[old, 1]
                k = first_child[node] + _quadrant(center[node, 0], center[node, 1], ox, oy)
                count[k] = 1
                com[k, 0] = ox
                com[k, 1] = oy
                point[k] = old
            node = first_child[node] + _quadrant(center[node, 0], center[node, 1], px, py)
            depth += 1
    return center, half, com, count, first_child, point, n_nodes


@njit(cache=True)
def repulsion_bh(y, theta):
    """Barnes-Hut estimate of (sum_j w_ij^2 (y_i - y_j), Z).

    A cell is summarized by its centre of mass when
    cell_width / distance < theta, with distance measured from the query
    point to the nearest point of the cell.
    """
    n = y.shape[0]
    center, half, com, count, first_child, point, n_nodes = build_quadtree(y)
    out = np.zeros_like(y)
    z = 0.0
    stack = np.empty(4 * MAX_DEPTH + 8, dtype=np.int64)
    for i in range(n):
        px = y[i, 0]
        py = y[i, 1]
        fx = 0.0
        fy = 0.0
        zi = 0.0
        top = 0
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            cnt = count[node]
            if cnt == 0:
                continue
            dx = px - com[node, 0]
            dy = py - com[node, 1]
            d2 = dx * dx + dy * dy
            if first_child[node] == -1:
                if point[node] == i:
                    continue
                m = float(cnt)
                inside = (abs(px - center[node, 0]) <= half[node]) and (abs(py - center[node, 1]) <= half[node])
                if point[node] == -1 and inside:
                    # collapsed leaf of coincident points, i is one of them
                    m = cnt - 1.0
                w = 1.0 / (1.0 + d2)
                zi += m * w
                fx += m * w * w * dx
                fy += m * w * w * dy
                continue
            width = 2.0 * half[node]
            inside = (abs(px - center[node, 0]) <= half[node]) and (abs(py - center[node, 1]) <= half[node])
            # distance from the query to the cell box, stricter than the
            # centre-of-mass distance when the mass sits near the far side
            bx = max(abs(px - center[node, 0]) - half[node], 0.0)
            by = max(abs(py - center[node, 1]) - half[node], 0.0)
            if (not inside) and width * width < theta * theta * (bx * bx + by * by):
                w = 1.0 / (1.0 + d2)
                zi += cnt * w
                fx += cnt * w * w * dx
                fy += cnt * w * w * dy
                continue
            c0 = first_child[node]
            for q in range(3, -1, -1):
                stack[top] = c0 + q
                top += 1
        out[i, 0] = fx
        out[i, 1] = fy
        z += zi
    return out, z
