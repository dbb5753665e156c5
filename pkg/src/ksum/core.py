"""Problem instances, witnesses, reports, and reference oracles.

Everything else in the package is tested against the two solvers here:
plain k-nested-loop brute force (O(1) workspace) and meet-in-the-middle
(heavy workspace, used to cross-check metering claims).
"""

from __future__ import annotations

import itertools
import json
import random
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .workspace import SpaceMeter, charge_cells, current_meter, release_cells

UNIVERSE_BOUND = 1 << 40
MAX_K = 12
BRUTE_FORCE_GUARD = 10 ** 9


class ParameterError(ValueError):
    """Instance or solver parameters outside their contract."""


class SizeGuardError(RuntimeError):
    """A guarded oracle refused an input too large for test use."""


@dataclass(frozen=True)
class KSumInstance:
    """k arrays of n bounded integers plus a target.

    Bounds (|value| <= 2**40, k <= 12) keep every full sum inside a signed
    64-bit accumulator.  Instances are immutable and safe to share.
    """

    arrays: tuple[tuple[int, ...], ...]
    target: int

    def __post_init__(self):
        k = len(self.arrays)
        if not (2 <= k <= MAX_K):
            raise ParameterError(f"k must lie in [2, {MAX_K}], got {k}")
        n = len(self.arrays[0])
        if n < 1:
            raise ParameterError("arrays must be non-empty")
        for arr in self.arrays:
            if len(arr) != n:
                raise ParameterError("all arrays must have identical length")
            for v in arr:
                if abs(v) > UNIVERSE_BOUND:
                    raise ParameterError("value outside the universe bound")
        if abs(self.target) > k * UNIVERSE_BOUND:
            raise ParameterError("target outside the feasible range")

    @property
    def k(self) -> int:
        return len(self.arrays)

    @property
    def n(self) -> int:
        return len(self.arrays[0])

    @cached_property
    def np_arrays(self) -> tuple[np.ndarray, ...]:
        """Read-only int64 views of the input; never charged to meters."""
        out = []
        for arr in self.arrays:
            a = np.asarray(arr, dtype=np.int64)
            a.setflags(write=False)
            out.append(a)
        return tuple(out)

    def evaluate(self, indices: Sequence[int]) -> int:
        return sum(arr[i] for arr, i in zip(self.arrays, indices))

    def to_text(self) -> str:
        lines = [f"{self.k} {self.n} {self.target}"]
        for arr in self.arrays:
            lines.append(" ".join(str(v) for v in arr))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "KSumInstance":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        k, n, target = (int(tok) for tok in lines[0].split())
        if len(lines) != k + 1:
            raise ParameterError(f"expected {k} array lines, got {len(lines) - 1}")
        arrays = []
        for ln in lines[1:]:
            row = tuple(int(tok) for tok in ln.split())
            if len(row) != n:
                raise ParameterError("array length mismatch in instance text")
            arrays.append(row)
        return cls(arrays=tuple(arrays), target=target)

    @classmethod
    def from_single_array(cls, values: Sequence[int], k: int,
                          target: int) -> "KSumInstance":
        """Replicate one array k times; witnesses with repeated indices must
        be filtered by the caller when distinctness matters."""
        row = tuple(values)
        return cls(arrays=tuple(row for _ in range(k)), target=target)


@dataclass(frozen=True)
class Witness:
    """One array position per array; sums exactly to the target."""

    indices: tuple[int, ...]

    def evaluate(self, inst: KSumInstance) -> int:
        return inst.evaluate(self.indices)

    def valid_for(self, inst: KSumInstance) -> bool:
        if len(self.indices) != inst.k:
            return False
        if any(not (0 <= i < inst.n) for i in self.indices):
            return False
        return self.evaluate(inst) == inst.target


@dataclass
class SolverReport:
    """Outcome of one solver run.

    ``stats`` carries per-run diagnostics (target vectors enumerated,
    cascade resamples, probe counters, ...) that do not appear in the
    canonical JSON serialization.
    """

    found: bool
    witness: Witness | None
    elapsed_ns: int
    peak_cells: int
    seed: int
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.found and self.witness is None:
            raise ValueError("found=True requires a witness")

    def to_json(self, full: bool = False) -> str:
        payload = {
            "found": self.found,
            "witness": list(self.witness.indices) if self.witness else None,
            "elapsed_ns": self.elapsed_ns,
            "peak_cells": self.peak_cells,
            "seed": self.seed,
        }
        if full:
            payload["stats"] = self.stats
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "SolverReport":
        data = json.loads(text)
        witness = Witness(tuple(data["witness"])) if data["witness"] else None
        return cls(
            found=data["found"],
            witness=witness,
            elapsed_ns=data["elapsed_ns"],
            peak_cells=data["peak_cells"],
            seed=data["seed"],
            stats=data.get("stats", {}),
        )

    def same_outcome(self, other: "SolverReport") -> bool:
        """Identity modulo wall-clock time (used by determinism checks)."""
        return (
            self.found == other.found
            and self.witness == other.witness
            and self.peak_cells == other.peak_cells
            and self.seed == other.seed
        )


def generate_random(n: int, k: int, universe_bound: int, seed: int) -> KSumInstance:
    """i.i.d. uniform entries in [-bound, bound], target uniform over the
    feasible sum range [-k*bound, k*bound]; deterministic given the seed."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    if not (0 <= universe_bound <= UNIVERSE_BOUND):
        raise ParameterError("universe bound outside [0, 2**40]")
    if not (2 <= k <= MAX_K):
        raise ParameterError(f"k must lie in [2, {MAX_K}]")
    rng = random.Random(seed)
    arrays = tuple(
        tuple(rng.randint(-universe_bound, universe_bound) for _ in range(n))
        for _ in range(k)
    )
    target = rng.randint(-k * universe_bound, k * universe_bound)
    return KSumInstance(arrays=arrays, target=target)


def plant_solution(inst: KSumInstance, seed: int) -> tuple[KSumInstance, Witness]:
    """Overwrite one random position per array so the tuple hits the target.

    Values are drawn inside the feasibility box at each step, so planting
    never needs rejection sampling and stays within the universe bound.
    """
    rng = random.Random(seed)
    k, n = inst.k, inst.n
    bound = max(1, max((abs(v) for arr in inst.arrays for v in arr), default=0))
    bound = max(bound, -(-abs(inst.target) // k))
    bound = min(bound, UNIVERSE_BOUND)
    positions = tuple(rng.randrange(n) for _ in range(k))
    remaining = inst.target
    planted_values = []
    for i in range(k):
        slots_after = k - i - 1
        lo = max(-bound, remaining - slots_after * bound)
        hi = min(bound, remaining + slots_after * bound)
        if lo > hi:
            raise ParameterError("target not reachable within the value bound")
        v = rng.randint(lo, hi) if i < k - 1 else remaining
        planted_values.append(v)
        remaining -= v
    arrays = []
    for i, arr in enumerate(inst.arrays):
        row = list(arr)
        row[positions[i]] = planted_values[i]
        arrays.append(tuple(row))
    planted = KSumInstance(arrays=tuple(arrays), target=inst.target)
    witness = Witness(indices=positions)
    assert witness.valid_for(planted)
    return planted, witness


def _guard_brute_force(inst: KSumInstance) -> None:
    if inst.n ** inst.k > BRUTE_FORCE_GUARD:
        raise SizeGuardError(
            f"n**k = {inst.n ** inst.k} exceeds the brute-force guard"
        )


def iter_witnesses(inst: KSumInstance) -> Iterator[Witness]:
    """Every witness exactly once, in lexicographic index order."""
    _guard_brute_force(inst)
    k = inst.k
    arrays = inst.arrays
    target = inst.target
    # accumulate prefix sums across the odometer to keep the loop cheap
    for indices in itertools.product(*(range(inst.n) for _ in range(k))):
        total = 0
        for arr, i in zip(arrays, indices):
            total += arr[i]
        if total == target:
            yield Witness(indices=indices)


def brute_force_solve(inst: KSumInstance) -> SolverReport:
    """k nested loops, O(1) workspace; the repository-wide ground truth."""
    _guard_brute_force(inst)
    start = time.perf_counter_ns()
    meter = SpaceMeter()
    meter.charge(inst.k)  # the odometer itself
    found = None
    for w in iter_witnesses(inst):
        found = w
        break
    meter.release(inst.k)
    elapsed = time.perf_counter_ns() - start
    return SolverReport(
        found=found is not None,
        witness=found,
        elapsed_ns=elapsed,
        peak_cells=meter.peak_cells,
        seed=0,
    )


def brute_force_report(inst: KSumInstance, sink) -> int:
    """Emit every witness exactly once (lexicographic order) into ``sink``
    (anything with an ``emit`` method, or a callable); returns the total."""
    emit = sink.emit if hasattr(sink, "emit") else sink
    count = 0
    for w in iter_witnesses(inst):
        emit(w)
        count += 1
    return count


def meet_in_middle(inst: KSumInstance, memory_cap: int | None = None) -> SolverReport:
    """Sorted half-sum list + complement scan: O(n^ceil(k/2)) time and space."""
    start = time.perf_counter_ns()
    left_count = -(-inst.k // 2)
    n = inst.n
    left_size = n ** left_count
    meter = current_meter() or SpaceMeter()
    if memory_cap is not None and 2 * left_size > memory_cap:
        from .workspace import BudgetExceededError
        raise BudgetExceededError(2 * left_size, 0, memory_cap)

    arrays = inst.np_arrays
    left = arrays[0]
    for arr in arrays[1:left_count]:
        left = (left[:, None] + arr[None, :]).ravel()
    meter.charge(2 * left_size)
    order = np.argsort(left, kind="stable")
    sorted_left = left[order]

    found = None
    right_arrays = arrays[left_count:]
    right_dims = tuple(range(n) for _ in right_arrays)
    for right_idx in itertools.product(*right_dims):
        need = inst.target - sum(int(a[i]) for a, i in zip(right_arrays, right_idx))
        pos = int(np.searchsorted(sorted_left, need))
        if pos < left_size and sorted_left[pos] == need:
            flat = int(order[pos])
            left_idx = []
            for _ in range(left_count):
                left_idx.append(flat % n)
                flat //= n
            left_idx.reverse()
            found = Witness(indices=tuple(left_idx) + right_idx)
            break
    meter.release(2 * left_size)
    elapsed = time.perf_counter_ns() - start
    return SolverReport(
        found=found is not None,
        witness=found,
        elapsed_ns=elapsed,
        peak_cells=meter.peak_cells,
        seed=0,
    )
