"""Independent reference implementations used as test oracles.

Nothing here may import from the code paths it checks: path enumeration is a
breadth-first frontier walk (the library uses recursive DFS), the MLP
reference is a per-neuron loop (the library is vectorized), Adam is a scalar
recursion, and allocation checks enumerate alternatives exhaustively.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def simple_paths_bruteforce(edges, source, dest, max_hops):
    """All simple source->dest paths with <= max_hops hops (frontier walk)."""
    adj = {}
    for i, j in edges:
        adj.setdefault(i, []).append(j)
    frontier = [(source,)]
    found = []
    while frontier:
        nxt = []
        for path in frontier:
            if path[-1] == dest:
                found.append(path)
                continue
            if len(path) - 1 >= max_hops:
                continue
            for n in adj.get(path[-1], []):
                if n not in path:
                    nxt.append(path + (n,))
        frontier = nxt
    return sorted(found, key=lambda p: (len(p), p))


def mlp_forward_looped(params, x, out_act):
    """Per-neuron straight-line MLP evaluation."""
    def layer(vec, w, b, relu):
        out = []
        for o in range(w.shape[1]):
            acc = b[o]
            for i in range(w.shape[0]):
                acc += vec[i] * w[i, o]
            out.append(max(acc, 0.0) if relu else acc)
        return out

    h1 = layer(list(x), params["w1"], params["b1"], True)
    h2 = layer(h1, params["w2"], params["b2"], True)
    y = layer(h2, params["w3"], params["b3"], False)
    if out_act == "logistic":
        y = [1.0 / (1.0 + math.exp(-v)) for v in y]
    return np.array(y)


def finite_diff_grads(scalar_fn, params, keys=None, coords=None, step=1e-5):
    """Central finite differences of ``scalar_fn(params)`` per coordinate.

    ``coords``: optional mapping key -> flat coordinate indices to check
    (all coordinates when absent).
    """
    grads = {}
    for key in (keys if keys is not None else params):
        arr = params[key]
        flat = arr.ravel()
        idxs = coords[key] if coords is not None else range(flat.size)
        g = {}
        for i in idxs:
            keep = flat[i]
            flat[i] = keep + step
            up = scalar_fn(params)
            flat[i] = keep - step
            down = scalar_fn(params)
            flat[i] = keep
            g[int(i)] = (up - down) / (2 * step)
        grads[key] = g
    return grads


def adam_scalar_reference(x0, grads, lr=0.001, b1=0.9, b2=0.999, eps=1e-8):
    """Hand-rolled scalar Adam trace: returns x after each step."""
    x, m, v = x0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        x = x - lr * m_hat / (math.sqrt(v_hat) + eps)
        out.append(x)
    return out


def is_el_prefix(forwarded_els, eligible_els):
    """The forwarded EL multiset must be a prefix of the sorted eligible one."""
    n = len(forwarded_els)
    return sorted(forwarded_els) == sorted(eligible_els)[:n]


def all_splits(total, parts):
    """Every nonnegative integer vector of length ``parts`` summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in all_splits(total - head, parts - 1):
            yield (head,) + rest


def minimal_l1_splits(total, weights):
    """Splits of ``total`` minimizing L1 distance to the proportional shares."""
    weights = np.asarray(weights, dtype=float)
    s = weights.sum()
    probs = weights / s if s > 1e-12 else np.full(len(weights), 1 / len(weights))
    shares = probs * total
    best, best_d = [], None
    for split in all_splits(total, len(weights)):
        d = float(np.abs(np.array(split) - shares).sum())
        if best_d is None or d < best_d - 1e-12:
            best, best_d = [split], d
        elif abs(d - best_d) <= 1e-12:
            best.append(split)
    return best


def capacity_clip_sequential(forward, capacity):
    """Re-run the clip as an explicit loop."""
    out = []
    left = capacity
    for f in forward:
        take = min(f, max(left, 0))
        out.append(take)
        left -= take
    return out
