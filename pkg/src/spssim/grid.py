"""Sidelink resource-grid numerology.

Sub-channel arithmetic, MCS index mapping, transport-block sizing and the
effective code rate on the 9-symbol data budget (14 SC-FDMA symbols per
subframe minus AGC, guard and the four DMRS symbols).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources


class GridError(ValueError):
    """Invalid grid configuration or table lookup."""


DATA_SYMBOLS_PER_SUBCARRIER = 9
SUBCARRIERS_PER_RB = 12
SCI_RBS = 2          # a control message always occupies 2 contiguous PRBs
MAX_MCS_INDEX = 20   # modulation orders above 16-QAM are not supported

# Sub-channel sizes permitted by the RRC configuration tables (TS 36.331).
# Other values are accepted only when strict validation is disabled.
ALLOWED_SUBCHANNEL_SIZES = (
    4, 5, 6, 8, 9, 10, 12, 15, 16, 18, 20, 25, 30, 48, 50, 72, 75, 96, 100,
)


class PscchScheme(Enum):
    ADJACENT = "adjacent"
    NON_ADJACENT = "non_adjacent"


def modulation_order(mcs_index: int) -> int:
    """Bits per symbol Q for an MCS index (QPSK=2 for 0-10, 16-QAM=4 for 11-20)."""
    if 0 <= mcs_index <= 10:
        return 2
    if 11 <= mcs_index <= MAX_MCS_INDEX:
        return 4
    raise GridError(f"mcs_index {mcs_index} outside supported range 0..{MAX_MCS_INDEX}")


def tbs_index(mcs_index: int) -> int:
    """Transport-block-size table row for an MCS index (TS 36.213 uplink mapping)."""
    q = modulation_order(mcs_index)
    return mcs_index if q == 2 else mcs_index - 1


class TbsTable:
    """Transport block sizes, rows indexed by TBS index and columns by N_PRB.

    Loaded from the packaged plain-text asset; see the asset header for the
    sizing rule and its calibration anchors.
    """

    def __init__(self, rows: list[list[int]]):
        if not rows:
            raise GridError("empty TBS table")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise GridError(f"TBS table row {i} has {len(row)} columns, expected {width}")
            if any(b <= a for a, b in zip(row, row[1:])):
                raise GridError(f"TBS table row {i} is not strictly increasing in N_PRB")
        self.rows = rows
        self.max_prb = width

    @classmethod
    def from_text(cls, text: str) -> "TbsTable":
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([int(tok) for tok in line.split()])
        return cls(rows)

    def lookup(self, itbs: int, n_rb: int) -> int:
        if not 0 <= itbs < len(self.rows):
            raise GridError(f"TBS index {itbs} outside table (0..{len(self.rows) - 1})")
        if not 1 <= n_rb <= self.max_prb:
            raise GridError(f"n_rb {n_rb} outside table domain (1..{self.max_prb})")
        return self.rows[itbs][n_rb - 1]


@lru_cache(maxsize=1)
def default_tbs_table() -> TbsTable:
    text = resources.files("spssim.data").joinpath("tbs_table.txt").read_text()
    return TbsTable.from_text(text)


def subchannel_count(bandwidth_rbs: int, subchannel_size: int) -> int:
    """Number of whole sub-channels that fit in the usable bandwidth."""
    if bandwidth_rbs <= 0 or subchannel_size <= 0:
        raise GridError("bandwidth_rbs and subchannel_size must be positive")
    return bandwidth_rbs // subchannel_size


def csrs_per_subframe(n_subch: int, l_subch: int) -> int:
    """Candidate resources per subframe with starts on multiples of l_subch."""
    if l_subch <= 0 or l_subch > n_subch:
        raise GridError(f"l_subch {l_subch} must be in 1..{n_subch}")
    return n_subch // l_subch


def tb_size(mcs_index: int, n_rb: int, table: TbsTable | None = None) -> int:
    """Transport block size in bits for an MCS index and PRB allocation."""
    table = table or default_tbs_table()
    return table.lookup(tbs_index(mcs_index), n_rb)


def effective_code_rate(tb_size_bits: int, q: int, n_rb: int) -> float:
    """Code rate over the 9 data symbols x 12 subcarriers per allocated PRB."""
    if tb_size_bits <= 0 or q <= 0 or n_rb <= 0:
        raise GridError("effective_code_rate arguments must be positive")
    return tb_size_bits / (q * DATA_SYMBOLS_PER_SUBCARRIER * SUBCARRIERS_PER_RB * n_rb)


def min_rbs_for_payload(mcs_index: int, payload_bits: int,
                        table: TbsTable | None = None) -> int:
    """Smallest PRB count whose transport block holds the payload."""
    table = table or default_tbs_table()
    itbs = tbs_index(mcs_index)
    for n_rb in range(1, table.max_prb + 1):
        if table.lookup(itbs, n_rb) >= payload_bits:
            return n_rb
    raise GridError(
        f"payload of {payload_bits} bits does not fit at MCS {mcs_index} "
        f"within {table.max_prb} PRBs"
    )


@dataclass(frozen=True, order=True)
class Csr:
    """Candidate single-subframe resource: l_subch sub-channels in one subframe."""

    subframe: int
    start_subch: int
    l_subch: int

    def subchannels(self) -> range:
        return range(self.start_subch, self.start_subch + self.l_subch)

    def overlaps(self, start_subch: int, l_subch: int) -> bool:
        return (self.start_subch < start_subch + l_subch
                and start_subch < self.start_subch + self.l_subch)


@dataclass
class GridConfig:
    """Static channel numerology shared by every UE in a run."""

    bandwidth_rbs: int = 50        # 10 MHz with 1 MHz guard band
    subchannel_size: int = 25
    l_subch: int = 1
    mcs_index: int = 5
    pscch_scheme: PscchScheme = PscchScheme.ADJACENT
    n_pssch_rb: int = 20
    n_subch: int = field(default=0)  # derived when left at 0

    def __post_init__(self):
        derived = subchannel_count(self.bandwidth_rbs, self.subchannel_size)
        if self.n_subch == 0:
            self.n_subch = derived
        elif self.n_subch != derived:
            raise GridError(
                f"n_subch={self.n_subch} inconsistent with bandwidth_rbs="
                f"{self.bandwidth_rbs} / subchannel_size={self.subchannel_size} "
                f"(implies {derived})"
            )

    def validate(self, strict: bool = True) -> None:
        if self.n_subch < 1:
            raise GridError(
                f"subchannel_size={self.subchannel_size} leaves no sub-channel in "
                f"bandwidth_rbs={self.bandwidth_rbs}"
            )
        if not 1 <= self.l_subch <= self.n_subch:
            raise GridError(f"l_subch={self.l_subch} must be within 1..{self.n_subch}")
        modulation_order(self.mcs_index)  # raises when unsupported
        if strict and self.subchannel_size not in ALLOWED_SUBCHANNEL_SIZES:
            raise GridError(
                f"subchannel_size={self.subchannel_size} not in the allowed set "
                f"{ALLOWED_SUBCHANNEL_SIZES}; rerun with strict=false to experiment"
            )
        if self.pscch_scheme is PscchScheme.ADJACENT:
            span = self.l_subch * self.subchannel_size
            if SCI_RBS + self.n_pssch_rb > span:
                raise GridError(
                    f"adjacent scheme: n_pssch_rb={self.n_pssch_rb} plus {SCI_RBS} "
                    f"control RBs exceed l_subch*subchannel_size={span} "
                    f"(l_subch={self.l_subch}, subchannel_size={self.subchannel_size})"
                )

    @property
    def q(self) -> int:
        return modulation_order(self.mcs_index)

    @property
    def csr_starts(self) -> list[int]:
        return list(range(0, (self.n_subch // self.l_subch) * self.l_subch, self.l_subch))

    def csrs_in_subframe(self) -> int:
        return csrs_per_subframe(self.n_subch, self.l_subch)

    def csr_rb_span(self, csr: Csr) -> tuple[int, int]:
        """Half-open RB interval actually occupied (control + data, adjacent)."""
        lo = csr.start_subch * self.subchannel_size
        return lo, lo + SCI_RBS + self.n_pssch_rb

    def tb_bits(self) -> int:
        return tb_size(self.mcs_index, self.n_pssch_rb)
