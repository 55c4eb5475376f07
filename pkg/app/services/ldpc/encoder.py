import numpy as np

from app.services.ldpc.code import EncoderKind, LdpcCode
from app.services.ldpc.tables import LdpcCodeError


def _parity_from_syndrome(code: LdpcCode, s: np.ndarray) -> np.ndarray:
    """Solve H_p p = s for (m, B) syndromes."""
    if code.encoder is EncoderKind.accumulator:
        return np.bitwise_xor.accumulate(s, axis=0)
    # forward substitution over a unit lower-triangular parity part
    hp = code.parity_part.tocsr()
    p = np.zeros_like(s)
    for i in range(code.m):
        cols = hp.indices[hp.indptr[i]:hp.indptr[i + 1]]
        cols = cols[cols < i]
        p[i] = s[i] ^ (np.bitwise_xor.reduce(p[cols], axis=0) if len(cols) else 0)
    return p


def encode_batch(code: LdpcCode, info: np.ndarray) -> np.ndarray:
    """
    Systematic encoding of (B, k) information words.

    Returns:
        (B, n) codewords whose first k bits are the information bits
    """
    info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
    if info.shape[1] != code.k:
        raise LdpcCodeError(f"expected {code.k} information bits, got {info.shape[1]}")
    if code.encoder is EncoderKind.dense:
        parity = (code.generator_parity.astype(np.int64) @ info.T.astype(np.int64)) % 2
    else:
        s = (code.info_part @ info.T.astype(np.int64)) % 2
        parity = _parity_from_syndrome(code, np.asarray(s, dtype=np.uint8))
    return np.concatenate([info, parity.T.astype(np.uint8)], axis=1)


def encode(code: LdpcCode, info) -> np.ndarray:
    info = np.asarray(info, dtype=np.uint8)
    if info.ndim != 1:
        raise LdpcCodeError("encode takes one information word; use encode_batch for several")
    return encode_batch(code, info[None, :])[0]
