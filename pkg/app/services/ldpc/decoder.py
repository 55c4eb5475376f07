"""
Normalized min-sum decoding with a flooding schedule.

Messages live on the edges of the Tanner graph, ordered by check (the CSR
order of the parity-check matrix), so every check's edges form one contiguous
segment and check updates reduce with ``reduceat``. Variable updates gather
through a fixed permutation that groups edges by variable.

LLR convention: positive means bit 0.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from app.services.ldpc.code import LdpcCode

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 50
DEFAULT_NORMALIZATION = 0.75


@dataclass
class DecodeResult:
    bits: np.ndarray       # (n,) hard decisions
    info_bits: np.ndarray  # (k,)
    converged: bool
    iterations_used: int


@dataclass(frozen=True, eq=False)
class _Graph:
    edge_var: np.ndarray      # variable of each edge, check-ordered
    edge_check: np.ndarray    # check of each edge
    check_start: np.ndarray   # first edge of each check
    var_order: np.ndarray     # edges grouped by variable
    var_start: np.ndarray     # first position of each variable in var_order


@lru_cache(maxsize=32)
def _graph(code: LdpcCode) -> _Graph:
    h = code.parity_check
    edge_var = h.indices.astype(np.int64)
    edge_check = np.repeat(np.arange(code.m), np.diff(h.indptr))
    var_order = np.argsort(edge_var, kind="stable")
    counts = np.bincount(edge_var, minlength=code.n)
    var_start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return _Graph(edge_var, edge_check, h.indptr[:-1].astype(np.int64), var_order, var_start)


def _check_update(v2c: np.ndarray, graph: _Graph, alpha: float) -> np.ndarray:
    """Scaled min-sum check-to-variable messages for (B, E) variable-to-check messages."""
    mag = np.abs(v2c)
    neg = (v2c < 0.0).astype(np.uint8)
    starts = graph.check_start

    min1 = np.minimum.reduceat(mag, starts, axis=1)
    edge_min1 = min1[:, graph.edge_check]
    # first edge attaining the minimum in each check
    edge_ids = np.arange(mag.shape[1])
    candidate = np.where(mag == edge_min1, edge_ids, mag.shape[1])
    first = np.minimum.reduceat(candidate, starts, axis=1)
    masked = mag.copy()
    np.put_along_axis(masked, first, np.inf, axis=1)
    min2 = np.minimum.reduceat(masked, starts, axis=1)

    is_first = edge_ids[None, :] == first[:, graph.edge_check]
    excluded = np.where(is_first, min2[:, graph.edge_check], edge_min1)
    parity = np.bitwise_xor.reduceat(neg, starts, axis=1)[:, graph.edge_check] ^ neg
    return alpha * excluded * (1.0 - 2.0 * parity)


def _syndrome_ok(bits: np.ndarray, graph: _Graph) -> np.ndarray:
    return ~np.any(np.bitwise_xor.reduceat(bits[:, graph.edge_var], graph.check_start, axis=1), axis=1)


def decode_arrays(
    code: LdpcCode,
    llrs: np.ndarray,
    max_iters: int = DEFAULT_MAX_ITERS,
    normalization: float = DEFAULT_NORMALIZATION,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Decode (B, n) channel LLRs.

    Blocks stop updating as soon as their hard decisions satisfy every check;
    at least one iteration is always run.

    Returns:
        bits (B, n) uint8, converged (B,) bool, iterations (B,) int
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    channel = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    if channel.shape[1] != code.n:
        raise ValueError(f"expected {code.n} LLRs per block, got {channel.shape[1]}")
    if not np.all(np.isfinite(channel)):
        raise ValueError("LLRs must be finite")
    graph = _graph(code)
    blocks = channel.shape[0]

    v2c = channel[:, graph.edge_var].copy()
    bits = (channel < 0.0).astype(np.uint8)
    converged = np.zeros(blocks, dtype=bool)
    iterations = np.zeros(blocks, dtype=np.int64)
    active = np.arange(blocks)

    for it in range(1, max_iters + 1):
        c2v = _check_update(v2c[active], graph, normalization)
        incoming = np.add.reduceat(c2v[:, graph.var_order], graph.var_start, axis=1)
        posterior = channel[active] + incoming
        v2c[active] = posterior[:, graph.edge_var] - c2v
        bits[active] = (posterior < 0.0).astype(np.uint8)
        iterations[active] = it

        done = _syndrome_ok(bits[active], graph)
        converged[active[done]] = True
        active = active[~done]
        if not active.size:
            break

    return bits, converged, iterations


def decode(code: LdpcCode, llrs, max_iters: int = DEFAULT_MAX_ITERS,
           normalization: float = DEFAULT_NORMALIZATION) -> DecodeResult:
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 1:
        raise ValueError("decode takes one block of LLRs; use decode_batch for several")
    return decode_batch(code, llrs[None, :], max_iters, normalization)[0]


def decode_batch(code: LdpcCode, llrs, max_iters: int = DEFAULT_MAX_ITERS,
                 normalization: float = DEFAULT_NORMALIZATION) -> List[DecodeResult]:
    bits, converged, iterations = decode_arrays(code, llrs, max_iters, normalization)
    return [
        DecodeResult(bits=b, info_bits=b[:code.k].copy(), converged=bool(c), iterations_used=int(i))
        for b, c, i in zip(bits, converged, iterations)
    ]


def ber_count(sent, decoded) -> Tuple[int, int]:
    """(Hamming distance, length) of two bit sequences."""
    sent = np.asarray(sent).ravel()
    decoded = np.asarray(decoded).ravel()
    if sent.shape != decoded.shape:
        raise ValueError(f"bit sequences differ in length: {sent.size} vs {decoded.size}")
    return int(np.count_nonzero(sent != decoded)), int(sent.size)
