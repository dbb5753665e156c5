"""Workspace accounting and streaming primitives.

Solvers in this package make explicit space claims (so many cells of
workspace for a given input size).  This module makes those claims
executable: a ``SpaceMeter`` counts live/peak cells, ``CappedBuffer`` and
``DedupList`` refuse to grow past their declared capacity, and
``WitnessStream`` delivers large report sets in bounded blocks so the
consumer's memory stays bounded no matter how big the full output is.

A *cell* is one stored machine integer (or one slot of a tuple record).
Containers charge their full capacity on allocation; that is an upper
bound on what is stored, so peak numbers never understate actual use.
Read-only input arrays are never charged.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

T = TypeVar("T")

_EXHAUSTED = object()


class BudgetExceededError(RuntimeError):
    """A metered allocation pushed live cells past the meter's cap."""

    def __init__(self, requested: int, live: int, cap: int):
        super().__init__(
            f"workspace budget exceeded: requested {requested} cells "
            f"with {live} live against cap {cap}"
        )
        self.requested = requested
        self.live = live
        self.cap = cap


class CapacityError(RuntimeError):
    """A capacity-capped container was asked to grow past its cap.

    This is a contract violation for plain buffers; for dedup lists it is
    the Las Vegas resample trigger.
    """


class StreamProtocolError(RuntimeError):
    """A WitnessStream was pulled after exhaustion."""


class SpaceMeter:
    """Live/peak cell accounting for one solver run.

    Not thread-safe; each concurrent run owns its own meter.  ``strict``
    meters raise :class:`BudgetExceededError` when an allocation would
    exceed ``cap``; observing meters record the violation count instead
    so exploratory runs still complete.
    """

    __slots__ = ("live_cells", "peak_cells", "cap", "strict", "violations")

    def __init__(self, cap: int | None = None, strict: bool = True):
        self.live_cells = 0
        self.peak_cells = 0
        self.cap = cap
        self.strict = strict
        self.violations = 0

    def charge(self, cells: int) -> None:
        if cells < 0:
            raise ValueError("cannot charge a negative cell count")
        new_live = self.live_cells + cells
        if self.cap is not None and new_live > self.cap:
            self.violations += 1
            if self.strict:
                raise BudgetExceededError(cells, self.live_cells, self.cap)
        self.live_cells = new_live
        if new_live > self.peak_cells:
            self.peak_cells = new_live

    def release(self, cells: int) -> None:
        if cells < 0:
            raise ValueError("cannot release a negative cell count")
        if cells > self.live_cells:
            raise ValueError(
                f"releasing {cells} cells but only {self.live_cells} are live"
            )
        self.live_cells -= cells

    def arena(self) -> "Arena":
        return Arena(self)


class Arena:
    """Batch of charges released together (per-target-vector turnover)."""

    __slots__ = ("meter", "held")

    def __init__(self, meter: SpaceMeter):
        self.meter = meter
        self.held = 0

    def charge(self, cells: int) -> None:
        self.meter.charge(cells)
        self.held += cells

    def release_all(self) -> None:
        if self.held:
            self.meter.release(self.held)
            self.held = 0

    def __enter__(self) -> "Arena":
        return self

    def __exit__(self, *exc) -> None:
        self.release_all()


class _MeterStack(threading.local):
    def __init__(self):
        self.stack: list[SpaceMeter] = []


_METERS = _MeterStack()


class meter_scope:
    """Context manager installing a fresh meter as the active one.

    Metered containers created inside the scope charge this meter (the
    innermost scope wins when scopes nest).
    """

    def __init__(self, cap: int | None = None, strict: bool = True):
        self.meter = SpaceMeter(cap=cap, strict=strict)

    def __enter__(self) -> SpaceMeter:
        _METERS.stack.append(self.meter)
        return self.meter

    def __exit__(self, *exc) -> None:
        popped = _METERS.stack.pop()
        assert popped is self.meter

    def __call__(self) -> SpaceMeter:  # pragma: no cover - convenience
        return self.meter


def current_meter() -> SpaceMeter | None:
    """The innermost active meter, or None outside any scope."""
    stack = _METERS.stack
    return stack[-1] if stack else None


def charge_cells(cells: int, meter: SpaceMeter | None = None) -> None:
    m = meter if meter is not None else current_meter()
    if m is not None:
        m.charge(cells)


def release_cells(cells: int, meter: SpaceMeter | None = None) -> None:
    m = meter if meter is not None else current_meter()
    if m is not None:
        m.release(cells)


class CappedBuffer:
    """Fixed-capacity record buffer; growth past capacity is an error.

    Each record costs ``record_width`` cells; the full capacity is charged
    up front so the meter reflects the declared footprint, not the fill.
    """

    __slots__ = ("capacity", "record_width", "_items", "_meter", "_charged")

    def __init__(
        self,
        capacity: int,
        record_width: int = 1,
        meter: SpaceMeter | None = None,
    ):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self.record_width = record_width
        self._items: list = []
        self._meter = meter if meter is not None else current_meter()
        self._charged = capacity * record_width
        if self._meter is not None:
            self._meter.charge(self._charged)

    def append(self, record) -> None:
        if len(self._items) >= self.capacity:
            raise CapacityError(
                f"buffer capacity {self.capacity} exceeded"
            )
        self._items.append(record)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, i):
        return self._items[i]

    def clear(self) -> None:
        self._items.clear()

    def close(self) -> None:
        if self._meter is not None and self._charged:
            self._meter.release(self._charged)
            self._charged = 0
        self._items = []

    def __enter__(self) -> "CappedBuffer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class DedupList:
    """Capacity-capped map of distinct sums to representative tuples.

    Keyed by the *original* sum value; the first tuple seen for a sum is
    kept as its representative.  Hitting the cap raises
    :class:`CapacityError`, which callers treat as a hash resample
    trigger.  Costs 1 index cell + ``record_width`` record cells per slot.
    """

    __slots__ = ("capacity", "record_width", "_map", "_meter", "_charged")

    def __init__(
        self,
        capacity: int,
        record_width: int = 2,
        meter: SpaceMeter | None = None,
    ):
        self.capacity = capacity
        self.record_width = record_width
        self._map: dict[int, tuple] = {}
        self._meter = meter if meter is not None else current_meter()
        self._charged = capacity * (record_width + 1)
        if self._meter is not None:
            self._meter.charge(self._charged)

    def add(self, total: int, representative) -> bool:
        """Insert if the sum is new; returns True when stored."""
        if total in self._map:
            return False
        if len(self._map) >= self.capacity:
            raise CapacityError(
                f"dedup list capacity {self.capacity} exceeded"
            )
        self._map[total] = representative
        return True

    def __contains__(self, total: int) -> bool:
        return total in self._map

    def get(self, total: int):
        return self._map.get(total)

    def __len__(self) -> int:
        return len(self._map)

    def sums(self) -> list[int]:
        return list(self._map.keys())

    def items(self):
        return self._map.items()

    def clear(self) -> None:
        self._map.clear()

    def close(self) -> None:
        if self._meter is not None and self._charged:
            self._meter.release(self._charged)
            self._charged = 0
        self._map = {}

    def __enter__(self) -> "DedupList":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class WitnessStream:
    """Pull-based resumable enumeration delivering bounded blocks.

    Wraps any record iterator.  Each :meth:`pull` advances the underlying
    enumeration by at most ``block_cap`` records, so caller-side memory is
    bounded by the block size regardless of total output volume.  Pulling
    after exhaustion is a protocol error.
    """

    __slots__ = ("block_cap", "_it", "_done", "pulls", "delivered")

    def __init__(self, source: Iterable[T], block_cap: int):
        if block_cap < 1:
            raise ValueError("block_cap must be at least 1")
        self.block_cap = block_cap
        self._it: Iterator[T] = iter(source)
        self._done = False
        self.pulls = 0
        self.delivered = 0

    def pull(self) -> list[T] | None:
        """Next block of at most ``block_cap`` records, or None at the end."""
        if self._done:
            raise StreamProtocolError("pull after exhaustion")
        block: list[T] = []
        for record in self._it:
            block.append(record)
            if len(block) >= self.block_cap:
                break
        self.pulls += 1
        if not block:
            self._done = True
            return None
        self.delivered += len(block)
        return block

    def blocks(self) -> Iterator[list[T]]:
        """Iterate over all remaining blocks (stops before the None pull)."""
        while True:
            if self._done:
                return
            block = self.pull()
            if block is None:
                return
            yield block

    @property
    def exhausted(self) -> bool:
        return self._done


def paused_pull(stream: WitnessStream) -> list | None:
    """One bounded block from the stream, or None once it is exhausted."""
    return stream.pull()


class CountingSink:
    """Sink that counts emitted records and optionally forwards them."""

    __slots__ = ("count", "_forward")

    def __init__(self, forward: Callable | None = None):
        self.count = 0
        self._forward = forward

    def emit(self, record) -> None:
        self.count += 1
        if self._forward is not None:
            self._forward(record)


class CollectingSink:
    """Sink that stores every emitted record (small test inputs only)."""

    __slots__ = ("records",)

    def __init__(self):
        self.records: list = []

    def emit(self, record) -> None:
        self.records.append(record)

    @property
    def count(self) -> int:
        return len(self.records)
