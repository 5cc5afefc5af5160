"""Exact method-of-types combinatorics.

Types are integer compositions, class sizes are exact Python integers
(multinomial coefficients), and enumeration order is lexicographic on the
count vectors.  Enumerations refuse to build more than ``LIMIT`` objects.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .prob_core import (
    Distribution,
    as_channel,
    as_distribution,
    conditional_divergence,
    conditional_entropy,
    divergence,
    entropy,
)

LIMIT = 10**7


@dataclass(frozen=True)
class TypeClass:
    """Composition ``counts`` of a length-``N`` sequence."""

    N: int
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if self.N < 1 or not counts or any(c < 0 for c in counts) or sum(counts) != self.N:
            raise ValidationError(f"counts {counts} do not form a type of length {self.N}")

    @property
    def k(self) -> int:
        return len(self.counts)

    @property
    def distribution(self) -> Distribution:
        return Distribution(np.array(self.counts, dtype=float) / self.N)


@dataclass(frozen=True)
class CondTypeClass:
    """Joint counts ``counts[x][y]`` whose row sums equal ``base.counts``."""

    base: TypeClass
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(c) for c in row) for row in self.counts)
        object.__setattr__(self, "counts", rows)
        if len(rows) != self.base.k or len({len(r) for r in rows}) != 1:
            raise ValidationError("conditional type must have one equal-length row per input letter")
        for x, row in enumerate(rows):
            if any(c < 0 for c in row) or sum(row) != self.base.counts[x]:
                raise ValidationError(f"row {x} does not sum to {self.base.counts[x]}")

    @property
    def out_k(self) -> int:
        return len(self.counts[0])

    def conditional_channel(self) -> np.ndarray:
        """``V(y|x) = counts[x][y] / N(x)``; rows with ``N(x) = 0`` are set uniform."""
        c = np.array(self.counts, dtype=float)
        n = c.sum(axis=1, keepdims=True)
        return np.where(n > 0, c / np.where(n > 0, n, 1.0), 1.0 / self.out_k)


@dataclass(frozen=True)
class Codebook:
    N: int
    words: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        words = tuple(tuple(int(s) for s in w) for w in self.words)
        object.__setattr__(self, "words", words)
        if not words:
            raise ValidationError("codebook needs at least one word")
        if any(len(w) != self.N for w in words):
            raise ValidationError(f"all codewords must have length {self.N}")

    @property
    def M(self) -> int:
        return len(self.words)

    @classmethod
    def from_words(cls, words) -> "Codebook":
        words = [tuple(w) for w in words]
        if not words:
            raise ValidationError("codebook needs at least one word")
        return cls(N=len(words[0]), words=tuple(words))


def _as_sequence(x, k: int | None, what: str) -> np.ndarray:
    seq = np.asarray(x)
    if seq.ndim != 1 or seq.size == 0:
        raise ValidationError(f"{what} must be a nonempty 1-D sequence")
    if not np.issubdtype(seq.dtype, np.integer):
        if not np.all(np.equal(np.mod(seq, 1), 0)):
            raise ValidationError(f"{what} must contain integer symbols")
        seq = seq.astype(int)
    if seq.min() < 0 or (k is not None and seq.max() >= k):
        raise ValidationError(f"{what} has a symbol outside the alphabet 0..{'?' if k is None else k - 1}")
    return seq


def type_of_sequence(x, k: int | None = None) -> TypeClass:
    seq = _as_sequence(x, k, "sequence")
    k = int(seq.max()) + 1 if k is None else k
    return TypeClass(N=seq.size, counts=tuple(np.bincount(seq, minlength=k).tolist()))


def joint_and_conditional_type(x, y, kx: int | None = None, ky: int | None = None) -> CondTypeClass:
    xs = _as_sequence(x, kx, "input sequence")
    ys = _as_sequence(y, ky, "output sequence")
    if xs.size != ys.size:
        raise ValidationError(f"length mismatch: {xs.size} vs {ys.size}")
    kx = int(xs.max()) + 1 if kx is None else kx
    ky = int(ys.max()) + 1 if ky is None else ky
    joint = np.zeros((kx, ky), dtype=int)
    np.add.at(joint, (xs, ys), 1)
    base = TypeClass(N=xs.size, counts=tuple(joint.sum(axis=1).tolist()))
    return CondTypeClass(base=base, counts=tuple(map(tuple, joint.tolist())))


def _compositions(n: int, k: int):
    """Compositions of ``n`` into ``k`` nonnegative parts, lexicographically ascending."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def count_types(N: int, k: int) -> int:
    return math.comb(N + k - 1, k - 1)


def enumerate_types(N: int, k: int, limit: int = LIMIT) -> list[TypeClass]:
    if N < 1 or k < 1:
        raise ValidationError("need N >= 1 and k >= 1")
    n = count_types(N, k)
    if n > limit:
        raise ResourceLimitError(f"{n} types exceed the limit of {limit}", estimate=n)
    return [TypeClass(N=N, counts=c) for c in _compositions(N, k)]


def _multinomial(counts: Sequence[int]) -> int:
    out, total = 1, 0
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


def type_class_size(T: TypeClass) -> int:
    """``N! / prod_a N(a)!`` as an exact integer."""
    return _multinomial(T.counts)


def v_shell_size(T: TypeClass, C: CondTypeClass) -> int:
    """Number of outputs with conditional type ``C`` given one input of type ``T``."""
    if C.base != T:
        raise ValidationError("conditional type is not built on this input type")
    out = 1
    for row in C.counts:
        out *= _multinomial(row)
    return out


def enumerate_conditional_types(T: TypeClass, out_k: int, limit: int = LIMIT) -> list[CondTypeClass]:
    if out_k < 1:
        raise ValidationError("out_k must be at least 1")
    n = math.prod(count_types(c, out_k) for c in T.counts)
    if n > limit:
        raise ResourceLimitError(f"{n} conditional types exceed the limit of {limit}", estimate=n)
    per_row = [list(_compositions(c, out_k)) for c in T.counts]
    return [CondTypeClass(base=T, counts=rows) for rows in itertools.product(*per_row)]


def sequence_probability(x, Q, method: str = "direct") -> float:
    """``log2 Q^N(x)``.

    ``"direct"`` sums ``log2 Q(x_n)``; ``"type"`` uses ``-N (H(P) + D(P||Q))``
    with ``P`` the type of ``x``.  Either gives ``-inf`` for impossible sequences.
    """
    q = as_distribution(Q)
    seq = _as_sequence(x, q.size, "sequence")
    if method == "direct":
        if np.any(q[seq] == 0):
            return -math.inf
        return float(np.log2(q[seq]).sum())
    if method == "type":
        T = type_of_sequence(seq, q.size)
        P = T.distribution
        return -T.N * (entropy(P) + divergence(P, q))
    raise ValidationError(f"unknown method {method!r}")


def conditional_sequence_probability(y, x, W, method: str = "direct") -> float:
    """``log2 W^N(y|x)``, either as a direct sum or via the conditional type."""
    w = as_channel(W)
    xs = _as_sequence(x, w.shape[0], "input sequence")
    ys = _as_sequence(y, w.shape[1], "output sequence")
    if xs.size != ys.size:
        raise ValidationError(f"length mismatch: {xs.size} vs {ys.size}")
    if method == "direct":
        probs = w[xs, ys]
        if np.any(probs == 0):
            return -math.inf
        return float(np.log2(probs).sum())
    if method == "type":
        C = joint_and_conditional_type(xs, ys, w.shape[0], w.shape[1])
        P = C.base.distribution
        V = C.conditional_channel()
        return -C.base.N * (conditional_entropy(P, V) + conditional_divergence(V, w, P))
    raise ValidationError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# verification suite


@dataclass(frozen=True)
class Check:
    name: str
    status: str  # "pass", "fail" or "skip"
    detail: str = ""


def _log_le(lhs_log2: float, rhs_log2: float) -> bool:
    # outward rounding for float logs of exact integers
    return lhs_log2 <= rhs_log2 + 1e-9 * max(1.0, abs(rhs_log2))


def verify_types(N: int, k: int, out_k: int | None = None, instances: int = 1000,
                 seed: int = 0, limit: int = LIMIT) -> list[Check]:
    """Exact checks of the type-counting, class-size and probability identities.

    Runs for input alphabet ``k`` and output alphabet ``out_k`` (default ``k``)
    at blocklength ``N``.  Oversized enumerations are reported as skipped.
    """
    out_k = k if out_k is None else out_k
    checks: list[Check] = []

    try:
        types = enumerate_types(N, k, limit)
    except ResourceLimitError as exc:
        return [Check("type enumeration", "skip", str(exc))]

    n_types = len(types)
    ok = n_types == count_types(N, k) and n_types < (N + 1) ** k
    checks.append(Check("type count < (N+1)^|X|", "pass" if ok else "fail",
                        f"{n_types} < {(N + 1) ** k}"))

    total = sum(type_class_size(T) for T in types)
    checks.append(Check("sum of type class sizes = |X|^N", "pass" if total == k**N else "fail",
                        f"{total} vs {k ** N}"))

    bad = []
    for T in types:
        size_log = math.log2(type_class_size(T))
        nh = N * entropy(T.distribution)
        if not (_log_le(size_log, nh) and _log_le(nh - k * math.log2(N + 1), size_log)):
            bad.append(T.counts)
    checks.append(Check("type class size bounds", "fail" if bad else "pass",
                        f"violations: {bad[:3]}" if bad else f"{n_types} types"))

    # V-shells factor over input letters: a shell picks one composition per
    # row, its size is the product of row multinomials and N H(Y|X) is the
    # sum of row terms n_x log n_x - sum_y n_xy log n_xy
    nlogn = [0.0] + [n * math.log2(n) for n in range(1, N + 1)]
    shell_bad, count_bad, part_bad, skipped, n_cond = [], [], [], 0, 0
    for T in types:
        n_here = math.prod(count_types(c, out_k) for c in T.counts)
        if n_here > limit:
            skipped += 1
            continue
        n_cond += n_here
        if n_here >= (N + 1) ** (k * out_k):
            count_bad.append(T.counts)
        rows = []
        for c in T.counts:
            comps = list(_compositions(c, out_k))
            rows.append([(_multinomial(r), nlogn[c] - sum(nlogn[v] for v in r), r) for r in comps])
        shell_total = 0
        for pick in itertools.product(*rows):
            size = math.prod(m for m, _, _ in pick)
            shell_total += size
            nh = sum(h for _, h, _ in pick)
            lsize = math.log2(size)
            if not (_log_le(lsize, nh) and _log_le(nh - k * out_k * math.log2(N + 1), lsize)):
                shell_bad.append((T.counts, tuple(r for _, _, r in pick)))
        if shell_total != out_k**N:
            part_bad.append(T.counts)
    if skipped == len(types):
        checks.append(Check("conditional types", "skip", "all enumerations exceed the limit"))
    else:
        checks.append(Check("conditional type count < (N+1)^(|X||Y|)", "fail" if count_bad else "pass",
                            f"{n_cond} conditional types"))
        checks.append(Check("sum of V-shell sizes = |Y|^N", "fail" if part_bad else "pass",
                            f"violations: {part_bad[:3]}" if part_bad else ""))
        checks.append(Check("V-shell size bounds", "fail" if shell_bad else "pass",
                            f"violations: {shell_bad[:3]}" if shell_bad else ""))

    rng = np.random.default_rng(seed)
    worst_seq = worst_cond = 0.0
    for _ in range(instances):
        x = rng.integers(0, k, size=N)
        Q = rng.dirichlet(np.ones(k))
        a, b = sequence_probability(x, Q), sequence_probability(x, Q, method="type")
        worst_seq = max(worst_seq, abs(a - b) / max(1.0, abs(a)))
        y = rng.integers(0, out_k, size=N)
        W = rng.dirichlet(np.ones(out_k), size=k)
        a, b = (conditional_sequence_probability(y, x, W),
                conditional_sequence_probability(y, x, W, method="type"))
        worst_cond = max(worst_cond, abs(a - b) / max(1.0, abs(a)))
    checks.append(Check("sequence probability via type", "pass" if worst_seq <= 1e-12 else "fail",
                        f"max relative deviation {worst_seq:.3e}"))
    checks.append(Check("conditional sequence probability via type",
                        "pass" if worst_cond <= 1e-12 else "fail",
                        f"max relative deviation {worst_cond:.3e}"))
    return checks
