"""
Parity-check codes and their systematic encoders.

Small codes are read from adjacency files:

    <n> <m>
    <0-based column indices of check 0>
    ...
    <0-based column indices of check m-1>

Blank lines and lines starting with '#' are ignored. The information part is
the first k = n - m columns; the last m columns must form an invertible
parity part.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import sparse

from app.core.config import settings
from app.services.ldpc.tables import (
    GROUP_SIZE, LONG_CODE_LENGTH, SHORT_CODE_LENGTH, AddressTable, LdpcCodeError,
    info_length, load_address_table, rate_fraction, table_filename,
)

logger = logging.getLogger(__name__)

DENSE_ENCODER_LIMIT = 4096


class EncoderKind(str, Enum):
    accumulator = "accumulator"  # dual-diagonal parity part
    triangular = "triangular"    # lower-triangular parity part with unit diagonal
    dense = "dense"              # explicit GF(2) inverse of the parity part


@dataclass(frozen=True, eq=False)
class LdpcCode:
    n: int
    k: int
    parity_check: sparse.csr_matrix = field(repr=False)
    rate_tag: str
    encoder: EncoderKind = EncoderKind.accumulator
    generator_parity: Optional[np.ndarray] = field(default=None, repr=False)  # dense encoder only

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.n)

    @property
    def info_part(self) -> sparse.csr_matrix:
        return self.parity_check[:, :self.k]

    @property
    def parity_part(self) -> sparse.csr_matrix:
        return self.parity_check[:, self.k:]

    def row(self, i: int) -> np.ndarray:
        """Column indices of check i."""
        h = self.parity_check
        return h.indices[h.indptr[i]:h.indptr[i + 1]]

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """H c mod 2 for (n,) or (B, n) bit arrays."""
        bits = np.asarray(bits, dtype=np.int64)
        return (self.parity_check @ bits.T).T % 2

    def is_codeword(self, bits: np.ndarray) -> bool:
        return not np.any(self.syndrome(bits))


def _csr(rows: np.ndarray, cols: np.ndarray, m: int, n: int) -> sparse.csr_matrix:
    h = sparse.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(m, n)
    )
    if h.max() > 1:
        raise LdpcCodeError("parity-check matrix repeats an entry")
    h = h.astype(np.uint8)
    h.sort_indices()
    return h


def _check_structure(h: sparse.csr_matrix) -> None:
    row_weights = np.diff(h.indptr)
    if row_weights.min() < 2:
        raise LdpcCodeError(f"check {int(np.argmin(row_weights))} has fewer than 2 entries")
    col_weights = np.bincount(h.indices, minlength=h.shape[1])
    if col_weights.min() < 1:
        raise LdpcCodeError(f"column {int(np.argmin(col_weights))} is in no parity check")


def gf2_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of a square 0/1 matrix over GF(2) by Gauss-Jordan elimination."""
    size = a.shape[0]
    work = np.concatenate([a.astype(np.uint8) & 1, np.eye(size, dtype=np.uint8)], axis=1)
    for col in range(size):
        pivots = np.nonzero(work[col:, col])[0]
        if not len(pivots):
            raise LdpcCodeError(f"parity part is rank deficient (no pivot in column {col})")
        pivot = col + pivots[0]
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        hits = np.nonzero(work[:, col])[0]
        hits = hits[hits != col]
        work[hits] ^= work[col]
    return work[:, size:]


def _encoder_for(h: sparse.csr_matrix, k: int):
    m = h.shape[0]
    hp = h[:, k:].tocoo()
    entries = set(zip(hp.row.tolist(), hp.col.tolist()))
    dual_diagonal = {(i, i) for i in range(m)} | {(i, i - 1) for i in range(1, m)}
    if entries == dual_diagonal:
        return EncoderKind.accumulator, None
    if all(c <= r for r, c in entries) and all((i, i) in entries for i in range(m)):
        return EncoderKind.triangular, None
    if m > DENSE_ENCODER_LIMIT:
        raise LdpcCodeError(f"no structured encoder for a {m}-row parity part")
    inverse = gf2_inverse(h[:, k:].toarray())
    generator = (inverse.astype(np.int64) @ h[:, :k].toarray().astype(np.int64)) % 2
    return EncoderKind.dense, generator.astype(np.uint8)


def from_parity_check(h: sparse.csr_matrix, rate_tag: Optional[str] = None) -> LdpcCode:
    """Wrap an m x n parity-check matrix as a systematic code with k = n - m."""
    m, n = h.shape
    k = n - m
    if k <= 0:
        raise LdpcCodeError(f"{m} checks leave no information bits in length {n}")
    _check_structure(h)
    kind, generator = _encoder_for(h, k)
    code = LdpcCode(
        n=n, k=k, parity_check=h, rate_tag=rate_tag or f"{k}/{n}",
        encoder=kind, generator_parity=generator,
    )
    logger.debug(f"LDPC code {code.rate_tag}: n={n}, k={k}, {h.nnz} edges, {kind.value} encoder")
    return code


def from_address_table(table: AddressTable, rate_tag: Optional[str] = None) -> LdpcCode:
    table.validate()
    m, q = table.m, table.q
    j = np.arange(GROUP_SIZE)
    rows, cols = [], []
    for g, addresses in enumerate(table.groups):
        x = np.asarray(addresses, dtype=np.int64)
        rows.append(((x[:, None] + j[None, :] * q) % m).ravel())
        cols.append(np.broadcast_to(g * GROUP_SIZE + j, (len(x), GROUP_SIZE)).ravel())
    parity = np.arange(m)
    rows += [parity, parity[1:]]
    cols += [table.k + parity, table.k + parity[:-1]]
    h = _csr(np.concatenate(rows), np.concatenate(cols), m, table.n)
    return from_parity_check(h, rate_tag)


def build_code(rate: str, length: int = LONG_CODE_LENGTH, table_dir: Optional[Union[str, Path]] = None) -> LdpcCode:
    """
    Build a long code from its address table file.

    Args:
        rate: rate tag such as "1/2"
        length: codeword length; only 64800 is supported
        table_dir: directory holding rate_<num>_<den>.txt files

    Raises:
        LdpcCodeError: unknown rate, unsupported length, missing or inconsistent table
    """
    expected = rate_fraction(rate)
    if length == SHORT_CODE_LENGTH:
        raise LdpcCodeError("16200-bit short frames are not supported")
    if length != LONG_CODE_LENGTH:
        raise LdpcCodeError(f"unsupported codeword length {length}")
    directory = Path(table_dir or settings.LDPC_TABLE_DIR)
    table = load_address_table(directory / table_filename(rate))
    if table.n != length or table.k != info_length(rate, length):
        raise LdpcCodeError(
            f"table {table_filename(rate)} describes ({table.n}, {table.k}), expected rate {rate} at n={length}"
        )
    code = from_address_table(table, rate)
    if code.rate != expected:
        raise LdpcCodeError(f"built rate {code.rate} differs from declared {rate}")
    logger.info(f"Built rate {rate} long code: n={code.n}, k={code.k}, {code.parity_check.nnz} edges")
    return code


@lru_cache(maxsize=16)
def cached_code(rate: str, length: int = LONG_CODE_LENGTH, table_dir: Optional[str] = None) -> LdpcCode:
    return build_code(rate, length, table_dir)


def parse_small_code(text: str) -> LdpcCode:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise LdpcCodeError("adjacency file is empty")
    try:
        n, m = (int(v) for v in lines[0].split())
        checks = [[int(v) for v in ln.split()] for ln in lines[1:]]
    except ValueError as e:
        raise LdpcCodeError(f"adjacency file is not integer data: {e}") from e
    if len(checks) != m:
        raise LdpcCodeError(f"header declares {m} checks, found {len(checks)}")
    rows, cols = [], []
    for i, row in enumerate(checks):
        if any(c < 0 or c >= n for c in row):
            raise LdpcCodeError(f"check {i} references a column outside [0, {n})")
        if len(set(row)) != len(row):
            raise LdpcCodeError(f"check {i} repeats a column")
        rows.extend([i] * len(row))
        cols.extend(row)
    return from_parity_check(_csr(np.array(rows), np.array(cols), m, n))


@lru_cache(maxsize=16)
def load_small_code(path: Union[str, Path]) -> LdpcCode:
    path = Path(path)
    if not path.exists():
        candidate = Path(settings.SMALL_CODE_DIR) / path
        if not candidate.exists():
            raise LdpcCodeError(f"adjacency file not found: {path}")
        path = candidate
    return parse_small_code(path.read_text())
