"""Type-based decoding rules and block error probabilities.

Each rule scores a (codeword, received word) pair through its joint type
``(P, V)``:

* maximum likelihood:  ``D(V||W|P) + H(Y|X)``  (equals ``-log2 W^N(y|x) / N``)
* minimum entropy:     ``H(Y|X)``
* minimum divergence:  ``D(V||W|P)``

The decoder picks the codeword with the smallest score.  Scores within a
relative ``1e-12`` of the minimum count as ties (different summation
orders of equal quantities differ in the last bits) and ties go to the
smallest message index.
"""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .prob_core import as_channel
from .types_lab import Codebook

TIE_RTOL = 1e-12
EXHAUSTIVE_LIMIT = 10**7
AGREEMENT_LIMIT = 10**6
_CHUNK = 1 << 15


class DecodeRule(str, Enum):
    MAXIMUM_LIKELIHOOD = "ml"
    MINIMUM_ENTROPY = "minent"
    MINIMUM_DIVERGENCE = "mindiv"


class ErrorProbability(NamedTuple):
    max_error: float
    avg_error: float


class ErrorEstimate(NamedTuple):
    max_error: float
    avg_error: float
    half_width: float


def _book(book) -> Codebook:
    return book if isinstance(book, Codebook) else Codebook.from_words(book)


def _check_word(x, k, what):
    x = np.asarray(x, dtype=int)
    if x.ndim != 1 or x.size == 0 or x.min() < 0 or x.max() >= k:
        raise ValidationError(f"{what} must be a nonempty sequence over 0..{k - 1}")
    return x


def _components(x: np.ndarray, Y: np.ndarray, w: np.ndarray):
    """Conditional entropy and divergence of the joint types of ``x`` with each row of ``Y``."""
    kx, ky = w.shape
    N = x.size
    xo = np.eye(kx)[x]                       # (N, kx)
    yo = np.eye(ky)[Y]                       # (n, N, ky)
    joint = np.einsum("ta,ntb->nab", xo, yo)  # (n, kx, ky)
    nx = xo.sum(axis=0)[None, :, None]
    pos = joint > 0
    safe_nx = np.where(nx > 0, nx, 1.0)
    with np.errstate(divide="ignore"):
        log_v = np.where(pos, np.log2(np.where(pos, joint, 1.0) / safe_nx), 0.0)
        log_w = np.log2(w)[None]
    h = -(joint * log_v).sum(axis=(1, 2)) / N
    impossible = (pos & (w[None] == 0)).any(axis=(1, 2))
    d_terms = np.where(pos & (w[None] > 0), joint * (log_v - np.where(w[None] > 0, log_w, 0.0)), 0.0)
    d = d_terms.sum(axis=(1, 2)) / N
    d = np.where(impossible, np.inf, np.maximum(d, 0.0))
    return np.maximum(h, 0.0), d


def _scores(rule: DecodeRule, x, Y, w) -> np.ndarray:
    h, d = _components(x, Y, w)
    if rule is DecodeRule.MINIMUM_ENTROPY:
        return h
    if rule is DecodeRule.MINIMUM_DIVERGENCE:
        return d
    return h + d


def alpha_value(rule, x, y, W) -> float:
    """Score of the pair ``(x, y)`` under ``rule`` (bits per symbol)."""
    rule = DecodeRule(rule)
    w = as_channel(W)
    x = _check_word(x, w.shape[0], "input word")
    y = _check_word(y, w.shape[1], "output word")
    if x.size != y.size:
        raise ValidationError(f"length mismatch: {x.size} vs {y.size}")
    return float(_scores(rule, x, y[None], w)[0])


def _first_min(scores: np.ndarray) -> np.ndarray:
    """Per column, the smallest row index whose score ties the minimum."""
    mins = scores.min(axis=0)
    tol = TIE_RTOL * np.maximum(1.0, np.abs(np.where(np.isfinite(mins), mins, 0.0)))
    return np.argmax(scores <= mins + tol, axis=0)


def _score_matrix(rule, book: Codebook, Y, w) -> np.ndarray:
    words = np.asarray(book.words, dtype=int)
    return np.stack([_scores(rule, x, Y, w) for x in words])


def decode(book, y, rule, W) -> int:
    rule = DecodeRule(rule)
    book = _book(book)
    w = as_channel(W)
    y = _check_word(y, w.shape[1], "output word")
    if y.size != book.N:
        raise ValidationError(f"received word has length {y.size}, codebook uses {book.N}")
    return int(_first_min(_score_matrix(rule, book, y[None], w))[0])


def _all_outputs(ky: int, N: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop)
    digits = np.empty((idx.size, N), dtype=int)
    for n in range(N - 1, -1, -1):
        digits[:, n] = idx % ky
        idx //= ky
    return digits


def _log_likelihoods(book: Codebook, Y, w) -> np.ndarray:
    words = np.asarray(book.words, dtype=int)
    with np.errstate(divide="ignore"):
        lw = np.log2(w)
    return np.stack([lw[x[None, :], Y].sum(axis=1) for x in words])


def exhaustive_error_probability(book, W, rule) -> ErrorProbability:
    """Exact maximal and average block error probability by summing over all outputs."""
    rule = DecodeRule(rule)
    book = _book(book)
    w = as_channel(W)
    words = np.asarray(book.words, dtype=int)
    if words.max() >= w.shape[0]:
        raise ValidationError("codeword symbol outside the channel input alphabet")
    total = w.shape[1] ** book.N
    if total > EXHAUSTIVE_LIMIT:
        raise ResourceLimitError(f"{total} output words exceed the limit of {EXHAUSTIVE_LIMIT}",
                                 estimate=total)
    correct = np.zeros(book.M)
    for start in range(0, total, _CHUNK):
        Y = _all_outputs(w.shape[1], book.N, start, min(start + _CHUNK, total))
        choice = _first_min(_score_matrix(rule, book, Y, w))
        probs = np.exp2(_log_likelihoods(book, Y, w))
        for m in range(book.M):
            correct[m] += probs[m, choice == m].sum()
    err = np.clip(1.0 - correct, 0.0, 1.0)
    return ErrorProbability(float(err.max()), float(err.mean()))


def monte_carlo_error(book, W, rule, trials: int, seed: int) -> ErrorEstimate:
    """Simulated maximal and average error with a 95% normal-approximation half-width.

    Message ``m`` draws its channel noise from a Philox stream keyed by
    ``(seed, m)``; trial ``t`` consumes a fixed block of that stream, so the
    result does not depend on evaluation order.
    """
    rule = DecodeRule(rule)
    book = _book(book)
    w = as_channel(W)
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    words = np.asarray(book.words, dtype=int)
    if words.max() >= w.shape[0]:
        raise ValidationError("codeword symbol outside the channel input alphabet")
    cum = np.cumsum(w, axis=1)
    errors = np.zeros(book.M)
    for m, x in enumerate(words):
        key = np.random.SeedSequence([seed, m]).generate_state(2, dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        for start in range(0, trials, _CHUNK):
            n = min(_CHUNK, trials - start)
            u = rng.random((n, book.N))
            Y = (u[:, :, None] >= cum[x][None]).sum(axis=2)
            Y = np.minimum(Y, w.shape[1] - 1)
            choice = _first_min(_score_matrix(rule, book, Y, w))
            errors[m] += np.count_nonzero(choice != m)
    rates = errors / trials
    half = 1.96 * np.sqrt(rates * (1.0 - rates) / trials)
    return ErrorEstimate(float(rates.max()), float(rates.mean()), float(half.max()))


def ml_agreement_check(book, W) -> bool:
    """Whether the type-based ML argmin set equals the likelihood argmax set for every output."""
    book = _book(book)
    w = as_channel(W)
    total = w.shape[1] ** book.N
    if total > AGREEMENT_LIMIT:
        raise ResourceLimitError(f"{total} output words exceed the limit of {AGREEMENT_LIMIT}",
                                 estimate=total)
    for start in range(0, total, _CHUNK):
        Y = _all_outputs(w.shape[1], book.N, start, min(start + _CHUNK, total))
        alpha = _score_matrix(DecodeRule.MAXIMUM_LIKELIHOOD, book, Y, w)
        loglik = _log_likelihoods(book, Y, w)
        amin = alpha.min(axis=0)
        lmax = loglik.max(axis=0)
        fin_a = np.where(np.isfinite(amin), amin, 0.0)
        fin_l = np.where(np.isfinite(lmax), lmax, 0.0)
        a_set = alpha <= amin + TIE_RTOL * np.maximum(1.0, np.abs(fin_a))
        l_set = loglik >= lmax - TIE_RTOL * np.maximum(1.0, np.abs(fin_l) / book.N) * book.N
        if not np.array_equal(a_set, l_set):
            return False
    return True

