"""Exact rational linear programming (two-phase tableau simplex, Bland's rule)
and the small exact linear-algebra helpers the fee LPs need."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

ZERO = Fraction(0)


@dataclass(frozen=True)
class LPProblem:
    """max c.x  s.t.  A x <= b,  A_eq x = b_eq;  x free unless ``nonneg``."""
    c: tuple
    A: tuple = ()
    b: tuple = ()
    A_eq: tuple = ()
    b_eq: tuple = ()
    nonneg: bool = False


@dataclass(frozen=True)
class LPResult:
    status: str                   # "optimal" | "unbounded" | "infeasible"
    value: Fraction | None = None
    x: tuple | None = None
    certificate: tuple | None = field(default=None, compare=False)

    @property
    def ok(self):
        return self.status == "optimal"


def _pivot(T, basis, r, col):
    row = T[r]
    piv = row[col]
    if piv != 1:
        T[r] = row = [x / piv for x in row]
    for k, other in enumerate(T):
        if k != r:
            f = other[col]
            if f:
                T[k] = [x - f * y for x, y in zip(other, row)]
    basis[r] = col


def _run(T, basis, ncols):
    """Maximise the objective stored in the last row (as reduced costs -c).
    Bland: entering = lowest index with negative reduced cost; leaving = lowest
    basis index among ratio ties.  Returns "optimal" or ("unbounded", col)."""
    while True:
        col = next((j for j in range(ncols) if T[-1][j] < 0), None)
        if col is None:
            return "optimal"
        best, r_best = None, None
        for r in range(len(T) - 1):
            a = T[r][col]
            if a > 0:
                ratio = T[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[r_best]):
                    best, r_best = ratio, r
        if r_best is None:
            return ("unbounded", col)
        _pivot(T, basis, r_best, col)


def simplex_std(c, A, b):
    """max c.x s.t. A x = b, x >= 0 (exact).  Returns LPResult."""
    c = [Fraction(x) for x in c]
    n = len(c)
    rows = []
    for a_row, bi in zip(A, b):
        a_row = [Fraction(x) for x in a_row]
        bi = Fraction(bi)
        if bi < 0:
            a_row, bi = [-x for x in a_row], -bi
        rows.append((a_row, bi))
    m = len(rows)
    # phase 1: artificials n..n+m-1, maximise -sum(artificials)
    T = []
    for k, (a_row, bi) in enumerate(rows):
        art = [ZERO] * m
        art[k] = Fraction(1)
        T.append(a_row + art + [bi])
    basis = list(range(n, n + m))
    obj = [ZERO] * (n + m + 1)
    for a_row, bi in rows:
        for j in range(n):
            obj[j] -= a_row[j]
        obj[-1] -= bi
    T.append(obj)
    _run(T, basis, n + m)
    if T[-1][-1] != 0:
        return LPResult("infeasible", certificate=tuple(-x for x in T[-1][n:n + m]))
    # drive zero-level artificials out of the basis, drop redundant rows
    r = 0
    while r < len(T) - 1:
        if basis[r] >= n:
            col = next((j for j in range(n) if T[r][j] != 0), None)
            if col is None:
                del T[r]
                del basis[r]
                continue
            _pivot(T, basis, r, col)
        r += 1
    T = [row[:n] + [row[-1]] for row in T[:-1]]
    obj = [-x for x in c] + [ZERO]
    for r, bc in enumerate(basis):
        f = obj[bc]
        if f:
            obj = [x - f * y for x, y in zip(obj, T[r])]
    T.append(obj)
    res = _run(T, basis, n)
    if res != "optimal":
        col = res[1]
        ray = [ZERO] * n
        ray[col] = Fraction(1)
        for r, bc in enumerate(basis):
            ray[bc] = -T[r][col]
        return LPResult("unbounded", certificate=tuple(ray))
    x = [ZERO] * n
    for r, bc in enumerate(basis):
        x[bc] = T[r][-1]
    return LPResult("optimal", T[-1][-1], tuple(x))


def lp_max(p: LPProblem) -> LPResult:
    """General form -> standard form (split free variables, add slacks)."""
    nv = len(p.c)
    split = not p.nonneg

    def expand(row):
        row = [Fraction(x) for x in row]
        return row + [-x for x in row] if split else row

    ns = len(p.A)
    A, b = [], []
    for k, (row, bi) in enumerate(zip(p.A, p.b)):
        sl = [ZERO] * ns
        sl[k] = Fraction(1)
        A.append(expand(row) + sl)
        b.append(bi)
    for row, bi in zip(p.A_eq, p.b_eq):
        A.append(expand(row) + [ZERO] * ns)
        b.append(bi)
    c = expand(p.c) + [ZERO] * ns
    res = simplex_std(c, A, b)
    if res.status == "infeasible":
        return res
    if res.status == "unbounded":
        ray = res.certificate
        d = tuple(ray[j] - ray[nv + j] for j in range(nv)) if split else ray[:nv]
        return LPResult("unbounded", certificate=d)
    x = res.x
    xv = tuple(x[j] - x[nv + j] for j in range(nv)) if split else x[:nv]
    return LPResult("optimal", res.value, xv)


# ------------------------------------------------------------ linear algebra

def rref(M):
    """Reduced row echelon form over Q; returns (R, pivot columns)."""
    R = [[Fraction(x) for x in row] for row in M]
    if not R:
        return R, []
    nr, nc = len(R), len(R[0])
    piv = []
    r = 0
    for col in range(nc):
        k = next((k for k in range(r, nr) if R[k][col] != 0), None)
        if k is None:
            continue
        R[r], R[k] = R[k], R[r]
        p = R[r][col]
        R[r] = [x / p for x in R[r]]
        for k in range(nr):
            if k != r and R[k][col] != 0:
                f = R[k][col]
                R[k] = [x - f * y for x, y in zip(R[k], R[r])]
        piv.append(col)
        r += 1
        if r == nr:
            break
    return R, piv


def null_space(M):
    """Basis of {x : M x = 0} (list of vectors)."""
    if not M:
        return []
    nc = len(M[0])
    R, piv = rref(M)
    free = [j for j in range(nc) if j not in piv]
    basis = []
    for f in free:
        x = [ZERO] * nc
        x[f] = Fraction(1)
        for r, pc in enumerate(piv):
            x[pc] = -R[r][f]
        basis.append(x)
    return basis


def left_null_space(M):
    """Basis of {z : z^T M = 0}."""
    if not M:
        return []
    return null_space([list(col) for col in zip(*M)])


def solve_exact(A, b):
    """One solution of A x = b (free variables set to 0), or None."""
    if not A:
        return []
    nc = len(A[0])
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, piv = rref(aug)
    if nc in piv:
        return None
    x = [ZERO] * nc
    for r, pc in enumerate(piv):
        x[pc] = R[r][-1]
    return x
