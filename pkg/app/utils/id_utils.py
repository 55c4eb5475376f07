"""
Utilities for generating and validating nanoid-based run identifiers.
"""
from nanoid import generate

# URL- and filename-safe characters used by nanoid
RUN_ID_ALPHABET = '0123456789abcdefghijklmnopqrstuvwxyz'


def generate_run_id(size: int = 12) -> str:
    """
    Generate an identifier for one sweep run.

    Args:
        size: Length of the generated ID. Default is 12 characters.

    Returns:
        A lowercase alphanumeric nanoid, safe in file names.
    """
    return generate(RUN_ID_ALPHABET, size)


def is_valid_run_id(id_string: str, expected_size: int = 12) -> bool:
    if not isinstance(id_string, str) or len(id_string) != expected_size:
        return False
    return all(char in RUN_ID_ALPHABET for char in id_string)
