"""Independent oracles shared by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np


def spearman(a, b) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(a, b).statistic)


def svc_value_table(ev) -> np.ndarray:
    """L over every subset of the candidate SVCs (bit i = SVC i), with no MVCs cached."""
    n = ev.n
    out = np.zeros(2**n)
    M = np.zeros(len(ev.mvcs), dtype=bool)
    for mask in range(2**n):
        S = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        out[mask] = ev.value(S, M)
    return out


def mvc_value_table(ev) -> np.ndarray:
    """L over every subset of the MVC universe (bit k = MVC k), with no SVCs cached.

    Vectorised re-derivation: a viewpoint counts when some group is complete, and is then
    served by its fastest renderer (missing members fetched over the backhaul).
    """
    m = len(ev.mvcs)
    masks = np.arange(2**m)
    M = ((masks[:, None] >> np.arange(m)) & 1).astype(bool)  # (2^m, m)
    missing_bits = (~M).astype(float) @ ev.group_w.T  # (2^m, n)
    complete = missing_bits == 0
    covered = (complete.astype(float) @ ev.render.astype(float)) > 0  # (2^m, views)
    value = np.zeros(2**m)
    for rate, pi in zip(ev.rates, ev.pis):
        delay = ev.inst.params.chi * ev.bits + ev.svc_w / rate  # (n,)
        opt = delay[None, :] + missing_bits / ev.backhaul  # (2^m, n)
        t = np.where(ev.render[None, :, :], opt[:, :, None], np.inf).min(axis=1)  # (2^m, views)
        value += pi * ((t < ev.deadline) & covered) @ ev.p
    return value


def nested_violations(table: np.ndarray, n: int, kind: str, tol: float = 1e-12) -> int:
    """Exhaustive count over S <= S' and f outside S' of the sub/supermodular inequality.

    ``kind="sub"``: L(S+f) - L(S) >= L(S'+f) - L(S'); ``kind="super"``: the reverse.
    """
    full = (1 << n) - 1
    masks = np.arange(1 << n)
    bad = 0
    for big in range(1 << n):
        subs = masks[(masks & ~big) == 0]
        for f in range(n):
            bit = 1 << f
            if big & bit:
                continue
            small_gain = table[subs | bit] - table[subs]
            big_gain = table[big | bit] - table[big]
            if kind == "sub":
                bad += int(np.sum(small_gain < big_gain - tol))
            else:
                bad += int(np.sum(small_gain > big_gain + tol))
    assert full >= 0
    return bad


def pairwise_violations(table: np.ndarray, n: int, kind: str, tol: float = 1e-12) -> int:
    """Increasing/decreasing differences on every pair; equivalent to the nested check."""
    masks = np.arange(1 << n)
    bad = 0
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            S = masks[(masks & (bi | bj)) == 0]
            lhs = table[S | bi | bj] - table[S | bj]  # gain of i with j present
            rhs = table[S | bi] - table[S]
            if kind == "sub":
                bad += int(np.sum(lhs > rhs + tol))
            else:
                bad += int(np.sum(lhs < rhs - tol))
    return bad


def enumerate_best(ev, capacity: float) -> float:
    """Plain enumeration over skip / SVC / MVC group for each candidate (tiny instances)."""
    n = ev.n
    best = 0.0
    for code in range(3**n):
        S, M = ev.empty()
        c = code
        for i in range(n):
            c, r = divmod(c, 3)
            if r == 1:
                S[i] = True
            elif r == 2:
                M |= ev.group[i]
        if ev.weight(S, M) <= capacity:
            best = max(best, ev.value(S, M))
    return best


def chain_miss_counts(raw_row, F: int, horizon: int, episodes: int, rng) -> np.ndarray:
    """Monte-Carlo miss counts from the raw transition rules.

    Rows are repaired here independently: negative entries dropped, then renormalised.
    """
    top = F + horizon + 1
    table = {}
    for s in range(top + 1):
        row = {t: max(v, 0.0) for t, v in raw_row(s).items()}
        z = sum(row.values())
        targets = np.array(sorted(row))
        probs = np.array([row[t] / z for t in targets])
        table[s] = (np.minimum(targets, top), np.cumsum(probs))
    state = np.zeros(episodes, dtype=np.int64)
    count = np.zeros(episodes, dtype=np.int64)
    for _ in range(horizon):
        u = rng.random(episodes)
        nxt = np.empty_like(state)
        for s in np.unique(state):
            sel = state == s
            targets, cum = table[int(s)]
            idx = np.minimum(np.searchsorted(cum, u[sel], side="right"), len(targets) - 1)
            nxt[sel] = targets[idx]
        state = nxt
        count += state > F
    return count
