"""Pure-Python kernels. Reference semantics for the compiled twin."""

from __future__ import annotations


class IntTable:
    """Nonnegative integer value table, agents by goods."""

    def __init__(self, rows):
        self.rows = tuple(tuple(int(v) for v in r) for r in rows)
        self.n = len(self.rows)
        self.m = len(self.rows[0]) if self.rows else 0


def bundle_stats(t: IntTable, owner):
    """Per-agent sums and minima over every bundle.

    `owner[g]` is in 0..n, with n standing for the pool. Returns
    (sums, mins, min2, counts): sums[i][b] = v_i(X_b), mins[i][b] is the
    smallest single-good value in X_b (0 when empty), min2[i][b] is the sum
    of the two smallest (0 when |X_b| < 2), and counts[b] = |X_b|.
    """
    nb = t.n + 1
    counts = [0] * nb
    for b in owner:
        counts[b] += 1
    sums, mins, min2 = [], [], []
    for row in t.rows:
        s = [0] * nb
        lo = [-1] * nb
        lo2 = [-1] * nb
        for g, b in enumerate(owner):
            v = row[g]
            s[b] += v
            if lo[b] < 0 or v < lo[b]:
                lo2[b] = lo[b]
                lo[b] = v
            elif lo2[b] < 0 or v < lo2[b]:
                lo2[b] = v
        sums.append(s)
        mins.append([x if x >= 0 else 0 for x in lo])
        min2.append([lo[b] + lo2[b] if lo2[b] >= 0 else 0 for b in range(nb)])
    return sums, mins, min2, counts


def _is_beta_efx(t: IntTable, owner, bsq_num: int, bsq_den: int) -> bool:
    n = t.n
    sums, mins, _, counts = bundle_stats(t, owner)
    for i in range(n):
        a = sums[i][i]
        lhs = bsq_num * a * a
        si, mi = sums[i], mins[i]
        for j in range(n):
            if j == i or counts[j] < 2:
                continue
            b = si[j] - mi[j]
            if b > 0 and lhs < bsq_den * b * b:
                return False
    return True


def scan_efx(t: IntTable, bsq_num: int, bsq_den: int, first_only: bool):
    """Enumerate complete assignments in odometer order and test beta-EFX.

    Good 0 is the most significant digit, owners ascend. Returns
    (count of passing assignments seen, first passing owner tuple or None).
    With `first_only` the scan stops at the first witness.
    """
    n, m = t.n, t.m
    if n == 0:
        return (1, ()) if m == 0 else (0, None)
    owner = [0] * m
    count, first = 0, None
    while True:
        if _is_beta_efx(t, owner, bsq_num, bsq_den):
            count += 1
            if first is None:
                first = tuple(owner)
                if first_only:
                    return count, first
        g = m - 1
        while g >= 0 and owner[g] == n - 1:
            owner[g] = 0
            g -= 1
        if g < 0:
            return count, first
        owner[g] += 1
