from .tables import (AddressTable, LdpcCodeError, RATES, load_address_table, synthesize_address_table,
                     write_address_table)
from .code import EncoderKind, LdpcCode, build_code, cached_code, from_parity_check, load_small_code, parse_small_code
from .encoder import encode, encode_batch
from .decoder import DecodeResult, ber_count, decode, decode_arrays, decode_batch

__all__ = ["AddressTable", "LdpcCodeError", "RATES", "load_address_table", "synthesize_address_table",
           "write_address_table", "EncoderKind", "LdpcCode", "build_code", "cached_code", "from_parity_check",
           "load_small_code", "parse_small_code", "encode", "encode_batch", "DecodeResult", "ber_count",
           "decode", "decode_arrays", "decode_batch"]
