"""Per-byte radio energy accounting.

All bookkeeping is in microjoules.  Every debit is a multiple of 0.25 uJ
(the per-byte constants are quarter-multiples and batteries are quantized on
construction), so float64 arithmetic never rounds and the ledger identity
  sum(initial) == sum(remaining) + sum(draws)
holds bit-exactly at any instant of a run.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

TX_UJ_PER_BYTE = 16.25
RX_UJ_PER_BYTE = 12.25
PACKET_BYTES = 29
INITIAL_ENERGY_CAP_J = 1.0

UJ_PER_J = 1_000_000.0

TX = "tx"
RX = "rx"


def quantize_uj(amount_uj: float) -> float:
    """Snap to the 0.25 uJ grid all costs live on."""
    return math.floor(amount_uj * 4.0 + 0.5) / 4.0


@dataclass(frozen=True)
class EnergyParams:
    tx_uj_per_byte: float = TX_UJ_PER_BYTE
    rx_uj_per_byte: float = RX_UJ_PER_BYTE
    packet_bytes: int = PACKET_BYTES
    initial_energy_cap_j: float = INITIAL_ENERGY_CAP_J

    def __post_init__(self) -> None:
        for name in ("tx_uj_per_byte", "rx_uj_per_byte", "packet_bytes",
                     "initial_energy_cap_j"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def tx_cost(self, nbytes: int) -> float:
        if nbytes < 0:
            raise ValueError(f"byte count must be >= 0, got {nbytes}")
        return nbytes * self.tx_uj_per_byte

    def rx_cost(self, nbytes: int) -> float:
        if nbytes < 0:
            raise ValueError(f"byte count must be >= 0, got {nbytes}")
        return nbytes * self.rx_uj_per_byte

    def packet_tx_cost(self) -> float:
        return self.tx_cost(self.packet_bytes)

    def packet_rx_cost(self) -> float:
        return self.rx_cost(self.packet_bytes)


class EnergyLedger:
    """Append-only record of every radio debit, the source of all metrics.

    Columns are kept in parallel arrays; paper-scale runs append a few million
    entries and tuples-per-entry would dominate memory.
    """

    __slots__ = ("times", "node_ids", "kinds", "nbytes", "amounts_uj")

    def __init__(self) -> None:
        self.times = array("d")
        self.node_ids = array("l")
        self.kinds = array("b")  # 0=tx, 1=rx
        self.nbytes = array("l")
        self.amounts_uj = array("d")

    def __len__(self) -> int:
        return len(self.times)

    def record(self, time_s: float, node_id: int, kind: str,
               nbytes: int, amount_uj: float) -> None:
        self.times.append(time_s)
        self.node_ids.append(node_id)
        self.kinds.append(0 if kind == TX else 1)
        self.nbytes.append(nbytes)
        self.amounts_uj.append(amount_uj)

    def total_uj(self) -> float:
        # Quarter-uJ multiples: the plain sum stays exact far beyond any
        # realistic entry count (2**53 quarter-units ~ 2.25e9 J).
        return sum(self.amounts_uj)

    def total_uj_for(self, node_ids: set[int]) -> float:
        ids = self.node_ids
        return sum(a for i, a in enumerate(self.amounts_uj) if ids[i] in node_ids)

    def rows(self) -> Iterator[tuple[float, int, str, int, float]]:
        for i in range(len(self.times)):
            yield (self.times[i], self.node_ids[i],
                   TX if self.kinds[i] == 0 else RX,
                   self.nbytes[i], self.amounts_uj[i])

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("time_s,node_id,kind,bytes,microjoules\n")
            for time_s, node_id, kind, nbytes, uj in self.rows():
                fh.write(f"{time_s!r},{node_id},{kind},{nbytes},{uj!r}\n")


class DebitOutcome(NamedTuple):
    lost: bool            # could not pay in full; the packet is dropped
    newly_depleted: bool  # this draw took the battery to exactly 0


@dataclass
class Battery:
    """Remaining charge in uJ.  Depletion is remaining == 0, signalled once."""

    remaining_uj: float
    initial_uj: float = field(default=-1.0)

    def __post_init__(self) -> None:
        if self.remaining_uj < 0:
            raise ValueError("battery cannot start negative")
        self.remaining_uj = quantize_uj(self.remaining_uj)
        if self.initial_uj < 0:
            self.initial_uj = self.remaining_uj

    @property
    def depleted(self) -> bool:
        return self.remaining_uj == 0.0

    @property
    def remaining_j(self) -> float:
        return self.remaining_uj / UJ_PER_J

    def debit(self, amount_uj: float, ledger: EnergyLedger, *,
              time_s: float, node_id: int, kind: str, nbytes: int) -> DebitOutcome:
        """Draw up to ``amount_uj``; the ledger gets what was actually drawn.

        ``newly_depleted`` fires exactly once per battery; later draws from an
        empty battery record 0 and report only ``lost``.
        """
        if amount_uj < 0:
            raise ValueError(f"debit must be >= 0, got {amount_uj}")
        before = self.remaining_uj
        drawn = min(amount_uj, before)
        self.remaining_uj = before - drawn
        ledger.record(time_s, node_id, kind, nbytes, drawn)
        return DebitOutcome(lost=drawn < amount_uj,
                            newly_depleted=before > 0.0 and self.remaining_uj == 0.0)
