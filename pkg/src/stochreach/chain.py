"""Exact absorption values of finite Markov chains over the rationals."""

from __future__ import annotations

from fractions import Fraction

from .errors import SingularSystem


def solve_absorbing(succ, terminal):
    """Expected terminal reward of every node of a finite Markov chain.

    ``succ[i]`` lists ``(j, p)`` pairs with exact probabilities. ``terminal``
    maps absorbing nodes to their reward. Nodes that cannot reach a terminal
    node with non-zero reward get exactly 0, which leaves a linear system on
    the remaining transient nodes whose matrix ``I - P`` is a non-singular
    M-matrix; it is solved by sparse Gaussian elimination without pivoting.
    """
    n = len(succ)
    zero = Fraction(0)
    pred = [[] for _ in range(n)]
    for i in range(n):
        if i in terminal:
            continue
        for j, _ in succ[i]:
            pred[j].append(i)
    live = [False] * n
    stack = [i for i, r in terminal.items() if r != 0]
    for i in stack:
        live[i] = True
    while stack:
        j = stack.pop()
        for i in pred[j]:
            if not live[i]:
                live[i] = True
                stack.append(i)

    values = [zero] * n
    for i, r in terminal.items():
        values[i] = Fraction(r)
    unknown = [i for i in range(n) if live[i] and i not in terminal]
    if not unknown:
        return values

    pos = {i: k for k, i in enumerate(unknown)}
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for i in unknown:
        row = {pos[i]: Fraction(1)}
        b = zero
        for j, p in succ[i]:
            if j in terminal:
                b += p * terminal[j]
            elif live[j]:
                k = pos[j]
                row[k] = row.get(k, zero) - p
        rows.append({k: c for k, c in row.items() if c != 0})
        rhs.append(b)

    m = len(rows)
    cols: list[set[int]] = [set() for _ in range(m)]
    for r, row in enumerate(rows):
        for c in row:
            cols[c].add(r)

    for k in range(m):
        piv_row = rows[k]
        piv = piv_row.get(k, zero)
        if piv == 0:
            raise SingularSystem(f"zero pivot at unknown {k}")
        for r in list(cols[k]):
            if r <= k:
                continue
            row = rows[r]
            factor = row[k] / piv
            for c, v in piv_row.items():
                nv = row.get(c, zero) - factor * v
                if nv == 0:
                    if c in row:
                        del row[c]
                        cols[c].discard(r)
                else:
                    if c not in row:
                        cols[c].add(r)
                    row[c] = nv
            rhs[r] -= factor * rhs[k]
    x = [zero] * m
    for k in reversed(range(m)):
        row = rows[k]
        acc = rhs[k]
        for c, v in row.items():
            if c != k:
                acc -= v * x[c]
        x[k] = acc / row[k]
    for i, k in pos.items():
        values[i] = x[k]
    return values
