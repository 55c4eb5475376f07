"""
Long-code address tables.

File format (plain text, one table per rate, named ``rate_<num>_<den>.txt``):

    # comment lines start with '#'
    <n> <k>
    <addresses of information group 0>
    <addresses of information group 1>
    ...

There are k / 360 group lines. Information bit c = 360 g + j (0 <= j < 360)
of group g participates in parity checks (x + j q) mod (n - k) for every
address x on line g, where q = (n - k) / 360. The parity part is the
accumulator chain: check i covers parity bits i and i - 1.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

LONG_CODE_LENGTH = 64800
SHORT_CODE_LENGTH = 16200
GROUP_SIZE = 360

RATES: Dict[str, Fraction] = {
    tag: Fraction(tag)
    for tag in ("1/4", "1/3", "2/5", "1/2", "3/5", "2/3", "3/4", "4/5", "5/6", "8/9", "9/10")
}

# (degree of the high-degree information columns, how many there are); the rest have degree 3
DEGREE_PROFILE: Dict[str, Tuple[int, int]] = {
    "1/4": (12, 5400),
    "1/3": (12, 7200),
    "2/5": (12, 8640),
    "1/2": (8, 12960),
    "3/5": (12, 12960),
    "2/3": (13, 4320),
    "3/4": (12, 5400),
    "4/5": (11, 6480),
    "5/6": (13, 5400),
    "8/9": (4, 7200),
    "9/10": (4, 6480),
}


class LdpcCodeError(ValueError):
    """Raised for unsupported codes, malformed table files and unsolvable encoders"""
    pass


@dataclass
class AddressTable:
    n: int
    k: int
    groups: List[List[int]]

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def q(self) -> int:
        return self.m // GROUP_SIZE

    def validate(self) -> None:
        if self.n <= self.k or self.k % GROUP_SIZE or self.m % GROUP_SIZE:
            raise LdpcCodeError(f"({self.n}, {self.k}) is not a 360-grouped code")
        if len(self.groups) != self.k // GROUP_SIZE:
            raise LdpcCodeError(f"expected {self.k // GROUP_SIZE} address lines, got {len(self.groups)}")
        for g, row in enumerate(self.groups):
            if not row:
                raise LdpcCodeError(f"address line {g} is empty")
            if min(row) < 0 or max(row) >= self.m:
                raise LdpcCodeError(f"address line {g} has an entry outside [0, {self.m})")
            if len(set(row)) != len(row):
                raise LdpcCodeError(f"address line {g} repeats an address")


def rate_fraction(rate: str) -> Fraction:
    if rate not in RATES:
        raise LdpcCodeError(f"unsupported code rate {rate!r}; expected one of {', '.join(RATES)}")
    return RATES[rate]


def info_length(rate: str, n: int = LONG_CODE_LENGTH) -> int:
    k = rate_fraction(rate) * n
    if k.denominator != 1:
        raise LdpcCodeError(f"rate {rate} does not divide length {n}")
    return int(k)


def table_filename(rate: str) -> str:
    rate_fraction(rate)
    return f"rate_{rate.replace('/', '_')}.txt"


def parse_address_table(text: str) -> AddressTable:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise LdpcCodeError("address table is empty")
    try:
        n, k = (int(v) for v in lines[0].split())
        groups = [[int(v) for v in ln.split()] for ln in lines[1:]]
    except ValueError as e:
        raise LdpcCodeError(f"address table is not integer data: {e}") from e
    table = AddressTable(n=n, k=k, groups=groups)
    table.validate()
    return table


def load_address_table(path: Union[str, Path]) -> AddressTable:
    path = Path(path)
    if not path.exists():
        raise LdpcCodeError(f"address table not found: {path}")
    return parse_address_table(path.read_text())


SYNTHETIC_MARKER = "# synthetic: generated with the standard degree profile, not copied from the broadcast standard"


def format_address_table(table: AddressTable, rate: str = "", synthetic: bool = False) -> str:
    title = f"# long-code address table, rate {rate}" if rate else "# long-code address table"
    header = [title] + ([SYNTHETIC_MARKER] if synthetic else []) + [
        "# one line per 360-column information group; entries are parity-check addresses",
        f"{table.n} {table.k}",
    ]
    return "\n".join(header + [" ".join(str(a) for a in row) for row in table.groups]) + "\n"


def write_address_table(table: AddressTable, path: Union[str, Path], rate: str = "",
                        synthetic: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_address_table(table, rate, synthetic))
    return path


def synthesize_address_table(rate: str, seed: int = 0, n: int = LONG_CODE_LENGTH) -> AddressTable:
    """
    Random address table with the standard long-code degree profile.

    Residues mod q are spread evenly so every parity check receives the same
    number of information edges, and no line repeats a residue.
    """
    k = info_length(rate, n)
    m = n - k
    q = m // GROUP_SIZE
    high_degree, high_columns = DEGREE_PROFILE[rate]
    scale = n / LONG_CODE_LENGTH
    high_groups = int(round(high_columns * scale)) // GROUP_SIZE
    degrees = [high_degree] * high_groups + [3] * (k // GROUP_SIZE - high_groups)
    total = sum(degrees)
    if total % q:
        raise LdpcCodeError(f"degree profile of rate {rate} does not balance over {q} residues")

    rng = np.random.default_rng(np.random.SeedSequence([seed, n, k]))
    residues = np.concatenate([rng.permutation(q) for _ in range(total // q)])
    bounds = np.cumsum([0] + degrees)
    rows = [list(residues[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]

    # repair repeated residues by swapping with another line
    for g, row in enumerate(rows):
        seen = set()
        for i, r in enumerate(row):
            if r not in seen:
                seen.add(r)
                continue
            for h in rng.permutation(len(rows)):
                if h == g:
                    continue
                other = rows[h]
                j = next((j for j, s in enumerate(other)
                          if s not in seen and r not in other[:j] + other[j + 1:]), None)
                if j is not None:
                    row[i], other[j] = other[j], r
                    seen.add(row[i])
                    break
            else:
                raise LdpcCodeError("could not spread residues without repeats")

    groups = [sorted(int(r + q * rng.integers(0, GROUP_SIZE)) for r in row) for row in rows]
    table = AddressTable(n=n, k=k, groups=groups)
    table.validate()
    return table
