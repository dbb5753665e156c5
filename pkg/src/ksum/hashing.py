"""Almost-linear, almost-balanced hashing and the balancing cascade.

The family here maps a bounded integer universe to an arbitrary range
``m`` via a multiply-mod-prime step followed by a scale-down:

    h(x) = floor( ((a * (x mod p)) mod p) * m / p ),   p = 2**61 - 1

The prime wrap contributes an exact multiple of ``m`` after scaling, so
for every pair of universe values

    h(x1) + h(x2)  ==  h(x1 + x2) + c_h     (mod m)
                or ==  h(x1 + x2) + c_h + 1 (mod m)

with a single offset ``c_h = -1`` shared by the whole family.  This holds
for every range m >= 2, not just hash-friendly ones, and is asserted by
tests rather than assumed.

Balancing (a Las Vegas requirement) is done by a cascade: a short
sequence of these functions with square-root-shrinking ranges whose
packed value vector is re-sampled per level until every bucket's count
of *distinct* sums is under its cap.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .workspace import SpaceMeter, charge_cells, release_cells

PRIME = (1 << 61) - 1
# Kernel limit: ranges are split into 32-bit halves during evaluation.
MAX_RANGE = 1 << 31

_MASK32 = np.uint64(0xFFFFFFFF)
_MASK61 = np.uint64((1 << 61) - 1)
_P64 = np.uint64(PRIME)
_S32 = np.uint64(32)
_S29 = np.uint64(29)
_S61 = np.uint64(61)
_U3 = np.uint64(3)


class CascadeBuildError(RuntimeError):
    """Resample budget exhausted while balancing; signals a bug, not bad luck."""


def _mulmod_p61(a: np.uint64, x: np.ndarray) -> np.ndarray:
    """(a * x) mod (2**61 - 1) for uint64 arrays with a, x < 2**61.

    32-bit split schoolbook product reduced with 2**61 == 1 (mod p); every
    intermediate fits in uint64.
    """
    ah = a >> _S32
    al = a & _MASK32
    xh = x >> _S32
    xl = x & _MASK32
    hi = ah * xh                      # coefficient 2**64 == 8 (mod p)
    mid = ah * xl + al * xh           # coefficient 2**32, < 2**62
    lo = al * xl
    midr = (mid >> _S61) + (mid & _MASK61)
    midr = np.where(midr >= _P64, midr - _P64, midr)
    term_mid = (midr >> _S29) + ((midr & np.uint64((1 << 29) - 1)) << _S32)
    term_lo = (lo >> _S61) + (lo & _MASK61)
    total = (hi << _U3) + term_mid + term_lo
    total = (total >> _S61) + (total & _MASK61)
    return np.where(total >= _P64, total - _P64, total)


def _scale_to_range(g: np.ndarray, m: int) -> np.ndarray:
    """floor(g * m / p) for g < p, m < 2**31, exactly, in uint64."""
    mm = np.uint64(m)
    b = (g >> _S32) * mm
    c = (g & _MASK32) * mm
    q0 = (b + (c >> _S32)) >> _S29
    low61 = (g * mm) & _MASK61        # wrapped product keeps A mod 2**61
    r0 = q0 + low61
    return q0 + (r0 >= _P64).astype(np.uint64)


@dataclass(frozen=True)
class AlmostLinearHash:
    """One member of the family: multiplier, fixed prime modulus, range."""

    multiplier: int
    range_m: int

    def __post_init__(self):
        if not (1 <= self.multiplier < PRIME):
            raise ValueError("multiplier must lie in [1, p)")
        if not (2 <= self.range_m < MAX_RANGE):
            raise ValueError(f"range must lie in [2, {MAX_RANGE})")

    @property
    def offset(self) -> int:
        """The family offset c_h; the scale-down construction pins it to -1."""
        return -1

    def value(self, x: int) -> int:
        g = (self.multiplier * (x % PRIME)) % PRIME
        return (g * self.range_m) // PRIME

    def value_array(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; negatives are lifted by the modulus."""
        lifted = (xs % PRIME).astype(np.uint64)
        g = _mulmod_p61(np.uint64(self.multiplier), lifted)
        return _scale_to_range(g, self.range_m).astype(np.int64)

    def __call__(self, x: int) -> int:
        return self.value(x)


def sample_hash(range_m: int, rng_seed: int | random.Random) -> AlmostLinearHash:
    """Uniform multiplier in [1, p); deterministic given the seed."""
    if not (2 <= range_m < PRIME):
        raise ValueError("range out of bounds")
    if range_m >= MAX_RANGE:
        raise ValueError(f"ranges beyond {MAX_RANGE} are not supported")
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    return AlmostLinearHash(rng.randrange(1, PRIME), range_m)


def check_balance(h: AlmostLinearHash, values, n: int,
                  meter: SpaceMeter | None = None) -> int:
    """Count items landing in buckets holding more than 3n/m of n items.

    ``values`` must be re-enumerable (a sequence, array, or zero-argument
    callable returning an iterator); the check makes two streaming passes
    (count, then classify) with O(m) cells of workspace.
    """
    m = h.range_m
    if m > n:
        raise ValueError("balance check expects m <= n")

    def passes():
        stream = values() if callable(values) else values
        for chunk in _as_chunks(stream):
            yield chunk

    charge_cells(m, meter)
    try:
        counts = np.zeros(m, dtype=np.int64)
        seen = 0
        for chunk in passes():
            hv = h.value_array(chunk)
            counts += np.bincount(hv, minlength=m)
            seen += len(chunk)
        if seen != n:
            raise ValueError(f"stream yielded {seen} items, expected {n}")
        # bucket overflows when count*m > 3n (exact rational threshold)
        overflowed = counts * m > 3 * n
        mass = 0
        for chunk in passes():
            hv = h.value_array(chunk)
            mass += int(overflowed[hv].sum())
    finally:
        release_cells(m, meter)
    return mass


def _as_chunks(stream) -> Iterable[np.ndarray]:
    if isinstance(stream, np.ndarray):
        yield stream.astype(np.int64, copy=False)
        return
    if isinstance(stream, (list, tuple)) and stream and isinstance(stream[0], np.ndarray):
        for chunk in stream:
            yield chunk.astype(np.int64, copy=False)
        return
    if isinstance(stream, (list, tuple, range)):
        yield np.asarray(stream, dtype=np.int64)
        return
    # generic iterator of scalars or arrays
    buf = []
    for item in stream:
        if isinstance(item, np.ndarray):
            if buf:
                yield np.asarray(buf, dtype=np.int64)
                buf = []
            yield item.astype(np.int64, copy=False)
        else:
            buf.append(int(item))
            if len(buf) >= 65536:
                yield np.asarray(buf, dtype=np.int64)
                buf = []
    if buf:
        yield np.asarray(buf, dtype=np.int64)


@dataclass(frozen=True)
class HashCascade:
    """Sequence of hashes with shrinking ranges, packed into one value.

    The packed value sum(level_i(x) * M**i) is injective on the vector of
    level values because every level value is below ``pack_base``.
    """

    levels: tuple[AlmostLinearHash, ...]
    pack_base: int

    def __post_init__(self):
        for lvl in self.levels:
            if lvl.range_m > self.pack_base:
                raise ValueError("pack base below a level range")

    @property
    def ranges(self) -> tuple[int, ...]:
        return tuple(lvl.range_m for lvl in self.levels)

    @property
    def nominal_range(self) -> int:
        return math.prod(self.ranges) if self.levels else 1

    def level_values(self, x: int) -> tuple[int, ...]:
        return tuple(lvl.value(x) for lvl in self.levels)

    def packed_value(self, x: int) -> int:
        packed = 0
        base = 1
        for lvl in self.levels:
            packed += lvl.value(x) * base
            base *= self.pack_base
        return packed

    def packed_array(self, xs: np.ndarray) -> np.ndarray:
        packed = np.zeros(len(xs), dtype=np.int64)
        base = 1
        for lvl in self.levels:
            packed += lvl.value_array(xs) * base
            base *= self.pack_base
        return packed

    def pack_vector(self, vec: Sequence[int]) -> int:
        packed = 0
        base = 1
        for v in vec:
            packed += v * base
            base *= self.pack_base
        return packed

    def vector_from_index(self, idx: int) -> tuple[int, ...]:
        """Decode a dense enumeration index into a level-value vector."""
        vec = []
        for r in self.ranges:
            vec.append(idx % r)
            idx //= r
        return tuple(vec)

    def to_json(self) -> str:
        return json.dumps({
            "multipliers": [lvl.multiplier for lvl in self.levels],
            "ranges": list(self.ranges),
            "pack_base": self.pack_base,
        })

    @classmethod
    def from_json(cls, text: str) -> "HashCascade":
        data = json.loads(text)
        levels = tuple(
            AlmostLinearHash(a, m)
            for a, m in zip(data["multipliers"], data["ranges"])
        )
        return cls(levels=levels, pack_base=data["pack_base"])


def cascade_eval(cascade: HashCascade, x: int) -> int:
    """Injective packed encoding of the level-value vector of x."""
    return cascade.packed_value(x)


def plan_level_ranges(set_size: int, total_range: int) -> list[int]:
    """Square-root-shrinking level ranges whose product approximates
    ``total_range`` (the final level is clipped to land on it)."""
    if total_range <= 1:
        return []
    ranges: list[int] = []
    remaining = total_range
    residual = set_size
    while remaining > 1:
        r = max(2, math.isqrt(max(residual, 4)))
        r = min(r, remaining)
        if remaining // r <= 1:
            r = remaining
        ranges.append(r)
        remaining = -(-remaining // r)
        residual = max(1, -(-residual // r))
        if len(ranges) > 64:  # pragma: no cover - defensive
            raise CascadeBuildError("level planning failed to converge")
    return ranges


def sample_cascade(set_size: int, total_range: int,
                   rng: random.Random) -> HashCascade:
    """A cascade with planned ranges and fresh multipliers, unverified.

    Used by solvers that enforce bucket caps lazily (capped fills with
    resample-on-overflow) instead of paying for an eager counting pass.
    """
    ranges = plan_level_ranges(set_size, total_range)
    levels = tuple(sample_hash(r, rng) for r in ranges)
    base = max(ranges) if ranges else 2
    return HashCascade(levels=levels, pack_base=base)


@dataclass
class CascadeBuildStats:
    attempts_per_level: list[int]
    set_size: int
    bucket_cap: int

    @property
    def resamples_per_level(self) -> list[int]:
        return [a - 1 for a in self.attempts_per_level]


def build_balanced_cascade(
    group_sums: Callable[[], Iterable] | np.ndarray | Sequence[int],
    n_base: int,
    delta: float,
    cap_c: int,
    attempts_cap: int = 64,
    rng_seed: int | random.Random = 0,
    total_range: int | None = None,
    mode: str = "fast",
    meter: SpaceMeter | None = None,
) -> tuple[HashCascade, CascadeBuildStats]:
    """Balance a stream of group sums: every packed value's preimage among
    *distinct* sums ends up no larger than cap_c * n_base**delta.

    ``group_sums`` must be re-enumerable (replayed once per counting
    pass).  Each level is verified by a full pass and re-sampled on
    failure; exhausting ``attempts_cap`` raises :class:`CascadeBuildError`
    (callers retry with a new seed under the Las Vegas contract).

    ``mode="fast"`` materializes the stream for sort-based counting;
    ``mode="budget"`` replays it per packed value with a capped distinct
    set, staying within O(bucket cap) cells.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)

    def replay() -> Iterable[np.ndarray]:
        stream = group_sums() if callable(group_sums) else group_sums
        return _as_chunks(stream)

    set_size = 0
    for chunk in replay():
        set_size += len(chunk)
    if set_size == 0:
        raise ValueError("empty sum stream")

    bucket_cap = max(1, math.ceil(cap_c * n_base ** delta))
    if total_range is None:
        total_range = max(1, round(set_size / (n_base ** delta)))
    ranges = plan_level_ranges(set_size, total_range)
    pack_base = max(ranges) if ranges else 2

    levels: list[AlmostLinearHash] = []
    attempts_per_level: list[int] = []
    residual = set_size
    for depth, r in enumerate(ranges):
        residual = max(1, -(-residual // r))
        last = depth == len(ranges) - 1
        # Intermediate levels allow cap_c * (expected residual); tunable.
        level_cap = bucket_cap if last else max(bucket_cap, cap_c * residual)
        attempts = 0
        while True:
            attempts += 1
            if attempts > attempts_cap:
                raise CascadeBuildError(
                    f"level {depth}: no balanced hash in {attempts_cap} attempts"
                )
            candidate = sample_hash(r, rng)
            trial = levels + [candidate]
            if _verify_levels(trial, pack_base, replay, level_cap, mode, meter):
                levels.append(candidate)
                attempts_per_level.append(attempts)
                break

    cascade = HashCascade(levels=tuple(levels), pack_base=pack_base)
    if not ranges:
        # Degenerate single-bucket cascade still has to respect the cap.
        if not _verify_levels([], pack_base, replay, bucket_cap, mode, meter):
            raise CascadeBuildError(
                "single-bucket stream has more distinct sums than the cap"
            )
        attempts_per_level = []
    stats = CascadeBuildStats(
        attempts_per_level=attempts_per_level,
        set_size=set_size,
        bucket_cap=bucket_cap,
    )
    return cascade, stats


def _verify_levels(levels, pack_base, replay, cap, mode, meter) -> bool:
    """True when the max distinct-sum count over packed buckets is <= cap."""
    if mode == "fast":
        return _verify_fast(levels, pack_base, replay, cap, meter)
    if mode == "budget":
        return _verify_budget(levels, pack_base, replay, cap, meter)
    raise ValueError(f"unknown verification mode: {mode}")


def _packed_of_chunk(levels, pack_base, chunk: np.ndarray) -> np.ndarray:
    packed = np.zeros(len(chunk), dtype=np.int64)
    base = 1
    for lvl in levels:
        packed += lvl.value_array(chunk) * base
        base *= pack_base
    return packed


def _verify_fast(levels, pack_base, replay, cap, meter) -> bool:
    chunks = [np.asarray(c, dtype=np.int64) for c in replay()]
    sums = np.concatenate(chunks) if len(chunks) != 1 else chunks[0]
    charge_cells(3 * len(sums), meter)
    try:
        packed = _packed_of_chunk(levels, pack_base, sums)
        order = np.lexsort((sums, packed))
        ps = packed[order]
        ss = sums[order]
        if len(ps) == 0:
            return True
        new_pair = np.empty(len(ps), dtype=bool)
        new_pair[0] = True
        new_pair[1:] = (ps[1:] != ps[:-1]) | (ss[1:] != ss[:-1])
        distinct_packed = ps[new_pair]
        # run lengths over identical packed values = distinct sums per bucket
        boundaries = np.flatnonzero(
            np.concatenate(([True], distinct_packed[1:] != distinct_packed[:-1]))
        )
        run_lengths = np.diff(np.append(boundaries, len(distinct_packed)))
        return bool(run_lengths.max(initial=0) <= cap)
    finally:
        release_cells(3 * len(sums), meter)


def _verify_budget(levels, pack_base, replay, cap, meter) -> bool:
    """Per-packed-value replay: O(cap) cells, one pass per value."""
    values: set[int] = set()
    for chunk in replay():
        packed = _packed_of_chunk(levels, pack_base, chunk)
        values.update(np.unique(packed).tolist())
    charge_cells(cap + 1, meter)
    try:
        for v in sorted(values):
            bucket: set[int] = set()
            for chunk in replay():
                packed = _packed_of_chunk(levels, pack_base, chunk)
                hits = np.asarray(chunk, dtype=np.int64)[packed == v]
                for s in np.unique(hits).tolist():
                    bucket.add(int(s))
                    if len(bucket) > cap:
                        return False
        return True
    finally:
        release_cells(cap + 1, meter)
