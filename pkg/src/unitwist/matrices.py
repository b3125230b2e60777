"""Small dense matrices over the scalar ring (or any ring-like entries)."""
from __future__ import annotations

from typing import Callable, List, Sequence

from .scalar import ONE, ZERO, Scalar, S, format_scalar, parse_scalar

Matrix = List[List[Scalar]]


def zeros(n: int, m: int | None = None) -> Matrix:
    return [[ZERO] * (n if m is None else m) for _ in range(n)]


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def from_rows(rows) -> Matrix:
    return [[S(x) for x in r] for r in rows]


def from_flat(entries: Sequence, n: int | None = None) -> Matrix:
    if n is None:
        n = int(round(len(entries) ** 0.5))
    if n * n != len(entries):
        raise ValueError(f"R-matrix with {len(entries)} entries is not square")
    vals = [parse_scalar(e) if isinstance(e, str) else S(e) for e in entries]
    return [vals[i * n:(i + 1) * n] for i in range(n)]


def shape(A) -> tuple:
    return len(A), (len(A[0]) if A else 0)


def matmul(A, B):
    n, k = shape(A)
    k2, m = shape(B)
    if k != k2:
        raise ValueError("shape mismatch")
    out = []
    for i in range(n):
        row = []
        Ai = A[i]
        for j in range(m):
            acc = None
            for t in range(k):
                a = Ai[t]
                if not a:
                    continue
                b = B[t][j]
                if not b:
                    continue
                p = a * b
                acc = p if acc is None else acc + p
            row.append(ZERO if acc is None else acc)
        out.append(row)
    return out


def matadd(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def matsub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def scale(s, A):
    s = S(s)
    return [[s * a for a in r] for r in A]


def graded_scale(s, A, parities: Sequence[int]):
    """Operator s·A with s a scalar: odd parts of s pick up (-1)^{p(row)}."""
    s = S(s)
    if s.parity() in ("even", "zero"):
        return scale(s, A)
    from .algebra import koszul_scalar
    return [[koszul_scalar(s, parities[i]) * a for a in r] for i, r in enumerate(A)]


def is_zero(A) -> bool:
    return all(not x for r in A for x in r)


def equal(A, B) -> bool:
    return shape(A) == shape(B) and is_zero(matsub(A, B))


def map_entries(fn: Callable, A):
    return [[fn(x) for x in r] for r in A]


def kron(A, B):
    n, m = shape(A)
    p, r = shape(B)
    out = zeros(n * p, m * r)
    for i in range(n):
        for k in range(m):
            a = A[i][k]
            if not a:
                continue
            for j in range(p):
                for l in range(r):
                    b = B[j][l]
                    if b:
                        out[i * p + j][k * r + l] = a * b
    return out


def _scalar_parity(x) -> int:
    p = x.parity() if hasattr(x, "parity") else 0
    if p in ("even", "zero", 0):
        return 0
    if p in ("odd", 1):
        return 1
    raise ValueError(f"entry {x} has indefinite parity")


def operator_parity(A, parities: Sequence[int], entry_parity=_scalar_parity) -> int:
    """Parity of a homogeneous matrix: p(row) + p(col) + p(entry), constant on nonzeros."""
    found = set()
    for i, r in enumerate(A):
        for k, x in enumerate(r):
            if x:
                found.add((parities[i] + parities[k] + entry_parity(x)) & 1)
    if len(found) > 1:
        raise ValueError("matrix has indefinite parity")
    return found.pop() if found else 0


def graded_kronecker(A, B, parities: Sequence[int], entry_parity=_scalar_parity,
                     parities_b: Sequence[int] | None = None):
    """Koszul tensor product: (A⊗B)_{(ij),(kl)} = (-1)^{p(B)p(k) + p(A_ik)p(j)} A_ik B_jl.

    ``parities`` grade the basis of A's space, ``parities_b`` that of B's (default same).
    """
    pb = parities if parities_b is None else parities_b
    qB = operator_parity(B, pb, entry_parity)
    n, m = shape(A)
    p, r = shape(B)
    out = zeros(n * p, m * r)
    for i in range(n):
        for k in range(m):
            a = A[i][k]
            if not a:
                continue
            pa = entry_parity(a)
            for j in range(p):
                for l in range(r):
                    b = B[j][l]
                    if not b:
                        continue
                    v = a * b
                    if (qB * parities[k] + pa * pb[j]) & 1:
                        v = -v
                    out[i * p + j][k * r + l] = v
    return out


def tensor_parities(*pars: Sequence[int]) -> List[int]:
    out = [0]
    for ps in pars:
        out = [(a + b) & 1 for a in out for b in ps]
    return out


def graded_permutation(n: int, parities: Sequence[int]):
    """Super flip P(v_i⊗v_j) = (-1)^{p(i)p(j)} v_j⊗v_i on the n²-dim tensor square."""
    P = zeros(n * n)
    for i in range(n):
        for j in range(n):
            s = -1 if parities[i] and parities[j] else 1
            P[j * n + i][i * n + j] = S(s)
    return P


def transpose(A):
    return [list(r) for r in zip(*A)]


def to_strings(A) -> List[List[str]]:
    return [[format_scalar(x) if isinstance(x, Scalar) else str(x) for x in r] for r in A]


def format_matrix(A) -> str:
    rows = to_strings(A)
    w = max((len(x) for r in rows for x in r), default=1)
    return "\n".join("[ " + "  ".join(x.rjust(w) for x in r) + " ]" for r in rows)


def substitute(A, bindings):
    return [[x.substitute(bindings) for x in r] for r in A]


def diagonal_inverse(A):
    n, m = shape(A)
    out = zeros(n)
    for i in range(n):
        for k in range(m):
            if i != k and A[i][k]:
                raise ValueError("only diagonal matrices are inverted here")
        out[i][i] = A[i][i].inverse()
    return out
