"""Exact minimum y-monotone Steiner arborescence on a (possibly weighted) grid.

Subset dynamic programming in the Dreyfus-Wagner style.  The grid has
columns at ``xs`` and rows at ``ys`` (both strictly increasing); moves go
left/right along a row at cost |dx| or up a column at cost dy.  Because
every move is axis-parallel and costs its length, the shortest-path
relaxation of each subset table is a 1-D distance transform per row swept
from the top row down, which vectorizes over all subsets of one size.
"""
from __future__ import annotations

from itertools import combinations
from typing import Sequence

import numpy as np

Cell = tuple[int, int]  # (row index, column index)
Move = tuple[str, int, int]  # ("a", row, col) up from (row, col); ("h", row, col) between col and col+1


def _row_transform(rows: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """min over u of rows[..., u] + |xs[u] - xs[v]| for every v."""
    fwd = np.minimum.accumulate(rows - xs, axis=-1) + xs
    bwd = np.minimum.accumulate((rows + xs)[..., ::-1], axis=-1)[..., ::-1] - xs
    return np.minimum(fwd, bwd)


def _relax(g: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Shortest-path closure of g (shape (..., rows, cols)) towards the terminals."""
    out = np.empty_like(g)
    out[..., -1, :] = _row_transform(g[..., -1, :], xs)
    for t in range(g.shape[-2] - 2, -1, -1):
        up = out[..., t + 1, :] + (ys[t + 1] - ys[t])
        out[..., t, :] = _row_transform(np.minimum(g[..., t, :], up), xs)
    return out


def _submasks(mask: int):
    low = mask & -mask
    rest = mask ^ low
    sub = rest
    while True:
        s1 = sub | low
        if s1 != mask:
            yield s1
        if sub == 0:
            return
        sub = (sub - 1) & rest


def steiner_arborescence(
    xs: Sequence[float],
    ys: Sequence[float],
    root: Cell,
    terminals: Sequence[Cell],
) -> tuple[float, list[Move]]:
    """Cost and moves of a minimum arborescence from root reaching every terminal."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    terms = sorted({tuple(c) for c in terminals if tuple(c) != tuple(root)})
    k = len(terms)
    if k == 0:
        return 0.0, []
    rows, cols = len(ys), len(xs)
    full = (1 << k) - 1
    dp = np.full((full + 1, rows, cols), np.inf)
    g = np.full((full + 1, rows, cols), np.inf)
    for i, (r, c) in enumerate(terms):
        g[1 << i, r, c] = 0.0
    by_size: dict[int, list[int]] = {}
    for mask in range(1, full + 1):
        by_size.setdefault(bin(mask).count("1"), []).append(mask)
    for size in range(1, k + 1):
        masks = by_size[size]
        if size > 1:
            for mask in masks:
                acc = g[mask]
                for s1 in _submasks(mask):
                    np.minimum(acc, dp[s1] + dp[mask ^ s1], out=acc)
        dp[masks] = _relax(g[masks], xs, ys)

    r0, c0 = root
    cost = float(dp[full, r0, c0])
    if not np.isfinite(cost):
        raise ValueError("some terminal is unreachable from the root")
    moves = _rebuild(dp, g, xs, ys, terms, full, (r0, c0))
    return cost, moves


def _close(a: float, b: float) -> bool:
    if a == b:
        return True
    return bool(np.isfinite(a) and np.isfinite(b)) and abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def _rebuild(dp, g, xs, ys, terms, full, root) -> list[Move]:
    moves: list[Move] = []
    stack = [(full, root)]
    rows, cols = dp.shape[1], dp.shape[2]
    while stack:
        mask, (r, c) = stack.pop()
        val = dp[mask, r, c]
        if _close(val, g[mask, r, c]):
            if (mask & (mask - 1)) == 0:
                assert terms[mask.bit_length() - 1] == (r, c) and val == 0
                continue
            for s1 in _submasks(mask):
                if _close(dp[s1, r, c] + dp[mask ^ s1, r, c], val):
                    stack.append((s1, (r, c)))
                    stack.append((mask ^ s1, (r, c)))
                    break
            else:  # pragma: no cover - table inconsistency
                raise AssertionError("no split reproduces the merged value")
            continue
        if r + 1 < rows and _close(dp[mask, r + 1, c] + (ys[r + 1] - ys[r]), val):
            moves.append(("a", r, c))
            stack.append((mask, (r + 1, c)))
        elif c + 1 < cols and _close(dp[mask, r, c + 1] + (xs[c + 1] - xs[c]), val):
            moves.append(("h", r, c))
            stack.append((mask, (r, c + 1)))
        elif c > 0 and _close(dp[mask, r, c - 1] + (xs[c] - xs[c - 1]), val):
            moves.append(("h", r, c - 1))
            stack.append((mask, (r, c - 1)))
        else:  # pragma: no cover
            raise AssertionError("no move reproduces the relaxed value")
    return moves


def brute_force_cost(n: int, t_max: int, root: Cell, terminals: Sequence[Cell]) -> int:
    """Minimum arborescence size on the unit n x (t_max+1) grid by vertex-subset search.

    A vertex set W containing the root and every terminal supports an
    arborescence of |W|-1 edges iff every terminal is reachable from the
    root inside W, so the optimum is min |W|-1 over such W.  Subsets are
    tried in increasing size; nothing is shared with the DP above.
    Cells here are (node index 0..n-1, time).
    """
    def bit(v: int, t: int) -> int:
        return 1 << (t * n + v)

    total = n * (t_max + 1)
    out = [0] * total
    for t in range(t_max + 1):
        for v in range(n):
            m = 0
            if v > 0:
                m |= bit(v - 1, t)
            if v + 1 < n:
                m |= bit(v + 1, t)
            if t < t_max:
                m |= bit(v, t + 1)
            out[t * n + v] = m
    rbit = bit(*root)
    term_mask = 0
    for v, t in terminals:
        term_mask |= bit(v, t)
    term_mask &= ~rbit
    if term_mask == 0:
        return 0
    required = rbit | term_mask
    optional = [i for i in range(total) if not required >> i & 1]
    n_req = bin(required).count("1")
    lower = max(abs(v - root[0]) + t - root[1] for v, t in terminals)
    start = max(lower, n_req - 1)

    def feasible(w: int) -> bool:
        reach = rbit
        frontier = rbit
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= out[low.bit_length() - 1]
                f ^= low
            nxt &= w & ~reach
            reach |= nxt
            frontier = nxt
        return reach & term_mask == term_mask

    for size in range(start, total):
        extra = size + 1 - n_req
        for combo in combinations(optional, extra):
            w = required
            for i in combo:
                w |= 1 << i
            if feasible(w):
                return size
    raise AssertionError("unreachable: the full grid is always feasible")
