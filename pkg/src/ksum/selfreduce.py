"""Self-reduction engine: kSUM -> many mSUM fills + one small top instance.

The engine partitions the k arrays into groups, hashes group sums with a
balancing cascade over the smallest ("fixed") group, and enumerates
target vectors for the other groups; per vector it collects matching
group tuples (dedup-capped for the fixed group, block-streamed for the
rest) and hands the resulting small arrays of sums to a top-level solver.
Candidate solutions always re-evaluate original sums, so answers are
exact and randomness only affects runtime (Las Vegas).

Also home to the space-bounded 2SUM base case (chunk-sorted scan), the
Las Vegas dispatcher ``lv_ksum``, and the large-space driver
``large_space_solve``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ._seeds import derive_seed, rng_from
from .core import KSumInstance, SolverReport, Witness
from .hashing import (
    CascadeBuildError,
    HashCascade,
    build_balanced_cascade,
    sample_cascade,
)
from .workspace import (
    CapacityError,
    DedupList,
    SpaceMeter,
    charge_cells,
    release_cells,
)

log = logging.getLogger("ksum.selfreduce")

DEFAULT_ATTEMPTS_CAP = 64


class SolverRetryError(RuntimeError):
    """All Las Vegas retries were consumed; indicates a bug, not bad luck."""


# ---------------------------------------------------------------------------
# group partitioning


@dataclass(frozen=True)
class GroupSplit:
    """Partition of k arrays (input order) into near-equal groups, the
    smallest group last.

    The last group is the *fixed* group: its target is determined by the
    other groups' choices instead of being enumerated, so it is the only
    group whose storage must respect the dedup cap.
    """

    groups: tuple[tuple[int, ...], ...]

    @classmethod
    def from_k_m(cls, k: int, m: int) -> "GroupSplit":
        if not (1 <= m < k):
            raise ValueError("need 1 <= m < k")
        q = -(-k // m)
        small = k // q
        big_count = k % q
        sizes = [small + 1] * big_count + [small] * (q - big_count)
        groups = []
        start = 0
        for s in sizes:
            groups.append(tuple(range(start, start + s)))
            start += s
        assert max(sizes) - min(sizes) <= 1 and max(sizes) <= m
        return cls(groups=tuple(groups))

    @property
    def fixed_group(self) -> int:
        return len(self.groups) - 1

    @property
    def d(self) -> int:
        return len(self.groups[-1])

    @property
    def q(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class SumArray:
    """Distinct sums of one group plus their representative index tuples."""

    sums: tuple[int, ...]
    representatives: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.sums)


# ---------------------------------------------------------------------------
# space-bounded 2SUM (the recursion base case)


def _scan_width(n_chunk: int, n_total: int) -> int:
    # Single-log slack on block widths: peaks then grow strictly slower
    # than the C * n**delta * log(n)**2 budget they are tested against.
    lg = max(1, math.ceil(math.log2(max(n_total, 4))))
    return max(1, n_chunk * lg)


def iter_two_sum_pairs(
    a1, a2, target: int, delta: float, meter: SpaceMeter | None = None
) -> Iterator[tuple[int, int]]:
    """Index pairs (i, j) with a1[i] + a2[j] == target.

    Sorts a2 one n**delta-sized chunk at a time and scans a1 against each
    chunk, so workspace stays O(n**delta) for any total output size.
    """
    x = np.asarray(a1, dtype=np.int64)
    y = np.asarray(a2, dtype=np.int64)
    n1, n2 = len(x), len(y)
    chunk = max(1, int(round(n2 ** delta)))
    if max(n1, n2) <= SCALAR_CUTOFF:
        # scalar lane: chunk-local dict instead of numpy dispatch
        xs, ys = x.tolist(), y.tolist()
        charge_cells(2 * chunk, meter)
        try:
            for c0 in range(0, n2, chunk):
                lookup: dict[int, list[int]] = {}
                for j in range(c0, min(c0 + chunk, n2)):
                    lookup.setdefault(ys[j], []).append(j)
                for i, xv in enumerate(xs):
                    for j in lookup.get(target - xv, ()):
                        yield (i, j)
        finally:
            release_cells(2 * chunk, meter)
        return
    width = min(max(n1, 1), _scan_width(chunk, n2))
    held = 2 * chunk + 3 * width
    charge_cells(held, meter)
    try:
        for c0 in range(0, n2, chunk):
            cvals = y[c0:c0 + chunk]
            order = np.argsort(cvals, kind="stable")
            svals = cvals[order]
            for b0 in range(0, n1, width):
                bvals = x[b0:b0 + width]
                need = target - bvals
                lo = np.searchsorted(svals, need, side="left")
                hi = np.searchsorted(svals, need, side="right")
                nz = np.flatnonzero(hi - lo)
                for seg_ii, seg_jj in _expand_ranges(nz, lo, hi, order, width):
                    for i_loc, j_loc in zip(seg_ii.tolist(), seg_jj.tolist()):
                        yield (b0 + i_loc, c0 + j_loc)
    finally:
        release_cells(held, meter)


def _expand_ranges(nz, lo, hi, order, batch_width):
    """Expand per-position match ranges into bounded index batches."""
    if len(nz) == 0:
        return
    counts = (hi - lo)[nz]
    cum = np.cumsum(counts)
    start = 0
    while start < len(nz):
        base = int(cum[start - 1]) if start else 0
        stop = int(np.searchsorted(cum, base + batch_width, side="left")) + 1
        stop = min(stop, len(nz))
        seg = nz[start:stop]
        seg_counts = counts[start:stop]
        total = int(seg_counts.sum())
        ii = np.repeat(seg, seg_counts)
        offsets = np.arange(total) - np.repeat(
            np.cumsum(seg_counts) - seg_counts, seg_counts
        )
        jj_sorted = np.repeat(lo[seg], seg_counts) + offsets
        yield ii, order[jj_sorted]
        start = stop


def two_sum_space_bounded(
    a1,
    a2,
    target: int,
    delta: float,
    sink=None,
    meter: SpaceMeter | None = None,
    first_only: bool = False,
) -> int:
    """Report (or count) all pairs summing to the target using O(n**delta)
    cells; time scales as roughly n**(2-delta)."""
    if not (0 <= delta <= 1):
        raise ValueError("delta must lie in [0, 1]")
    emit = None
    if sink is not None:
        emit = sink.emit if hasattr(sink, "emit") else sink
    count = 0
    gen = iter_two_sum_pairs(a1, a2, target, delta, meter)
    try:
        for pair in gen:
            count += 1
            if emit is not None:
                emit(pair)
            if first_only:
                break
    finally:
        gen.close()
    return count


def _two_sum_first(a1, a2, target, delta, meter) -> tuple[int, int] | None:
    gen = iter_two_sum_pairs(a1, a2, target, delta, meter)
    try:
        for pair in gen:
            return pair
        return None
    finally:
        gen.close()


# ---------------------------------------------------------------------------
# group fills: tuples of one group whose hashed sum matches a target vector


def _digit_targets(range_m: int, level_value: int, arity: int) -> list[int]:
    """Integer values the element-level hash digit sum can take when the
    hash of the tuple's sum equals ``level_value`` (almost-linearity
    offsets plus modular wraps)."""
    residues = {(level_value - e) % range_m for e in range(arity)}
    out = set()
    top = arity * (range_m - 1)
    for r in residues:
        for kk in range(arity):
            v = r + kk * range_m
            if v <= top:
                out.add(v)
    return sorted(out)


# Below this size plain int arithmetic beats numpy dispatch overhead.
SCALAR_CUTOFF = 96


def iter_group_matches(
    arrays: Sequence[np.ndarray],
    cascade: HashCascade,
    vector: tuple[int, ...],
    delta_chunk: int,
    meter: SpaceMeter | None,
) -> Iterator[tuple[int, tuple[int, ...]]]:
    """(sum, index tuple) for every group tuple with cascade(sum) mapping
    to the given level vector.

    Single pass for singleton groups; level-one digit search plus exact
    packed verification for pairs and triples (sort half the group,
    binary-search the rest, chunked at the space budget).  Small inputs
    take a scalar lane instead of paying numpy dispatch per block.
    """
    packed_target = cascade.pack_vector(vector)
    d = len(arrays)
    small = max(len(a) for a in arrays) <= SCALAR_CUTOFF
    if d == 1:
        impl = _matches_single_scalar if small else _matches_single
        yield from impl(arrays[0], cascade, packed_target, delta_chunk, meter)
    elif d == 2:
        impl = _matches_pair_scalar if small else _matches_pair
        yield from impl(
            arrays[0], arrays[1], cascade, packed_target, vector,
            delta_chunk, meter, arity=2,
        )
    elif d == 3:
        z = arrays[2]
        impl = _matches_pair_scalar if small else _matches_pair
        for j3, zval in enumerate(z.tolist()):
            gen = impl(
                arrays[0], arrays[1], cascade, packed_target, vector,
                delta_chunk, meter, arity=3, shift=zval,
            )
            try:
                for s, idx in gen:
                    yield (s, idx + (j3,))
            finally:
                gen.close()
    else:  # pragma: no cover - larger arities are never planned
        raise ValueError(f"unsupported group arity {d}")


def _matches_single_scalar(arr, cascade, packed_target, delta_chunk, meter):
    charge_cells(2, meter)
    try:
        for i, v in enumerate(arr.tolist()):
            if cascade.packed_value(v) == packed_target:
                yield (v, (i,))
    finally:
        release_cells(2, meter)


def _matches_pair_scalar(
    x, y, cascade, packed_target, vector, delta_chunk, meter,
    arity: int, shift: int = 0,
):
    xs = x.tolist()
    ys = y.tolist()
    if not cascade.levels:
        charge_cells(2, meter)
        try:
            for j, yv in enumerate(ys):
                for i, xv in enumerate(xs):
                    yield (xv + yv + shift, (i, j))
        finally:
            release_cells(2, meter)
        return
    h1 = cascade.levels[0]
    m1 = h1.range_m
    if arity == 2:
        targets = _digit_targets(m1, vector[0], 2)
    else:
        hz = h1.value(shift)
        targets = [
            t3 - hz for t3 in _digit_targets(m1, vector[0], 3)
            if 0 <= t3 - hz <= 2 * (m1 - 1)
        ]
    if not targets:
        return
    charge_cells(2 * len(ys) + len(xs), meter)
    try:
        by_digit: dict[int, list[int]] = {}
        hy = [h1.value(v) for v in ys]
        for j, hv in enumerate(hy):
            by_digit.setdefault(hv, []).append(j)
        for i, xv in enumerate(xs):
            hxv = h1.value(xv)
            for w in targets:
                for j in by_digit.get(w - hxv, ()):
                    s = xv + ys[j] + shift
                    if cascade.packed_value(s) == packed_target:
                        yield (s, (i, j))
    finally:
        release_cells(2 * len(ys) + len(xs), meter)


def _matches_single(arr, cascade, packed_target, delta_chunk, meter):
    width = min(len(arr), _scan_width(delta_chunk, len(arr)))
    charge_cells(2 * width, meter)
    try:
        for b0 in range(0, len(arr), width):
            block = arr[b0:b0 + width]
            packed = cascade.packed_array(block)
            for off in np.flatnonzero(packed == packed_target).tolist():
                yield (int(block[off]), (b0 + off,))
    finally:
        release_cells(2 * width, meter)


def _matches_pair(
    x, y, cascade, packed_target, vector, delta_chunk, meter,
    arity: int, shift: int = 0,
):
    """Pairs (i, j) with cascade(x[i] + y[j] + shift) matching the target.

    ``arity`` is the arity of the enclosing tuple (3 when a third element
    ``shift`` has been fixed), which widens the offset window.
    """
    n1, n2 = len(x), len(y)
    chunk = max(1, delta_chunk)
    width = min(max(n1, 1), _scan_width(chunk, n2))
    held = 3 * chunk + 4 * width
    charge_cells(held, meter)
    try:
        if not cascade.levels:
            for j0 in range(0, n2, chunk):
                cvals = y[j0:j0 + chunk]
                for b0 in range(0, n1, width):
                    bvals = x[b0:b0 + width]
                    for j_loc, yval in enumerate(cvals.tolist()):
                        s = bvals + (yval + shift)
                        for i_loc, sv in enumerate(s.tolist()):
                            yield (sv, (b0 + i_loc, j0 + j_loc))
            return

        h1 = cascade.levels[0]
        m1 = h1.range_m
        if arity == 2:
            targets = _digit_targets(m1, vector[0], 2)
        else:
            hz = h1.value(shift)
            targets = sorted({
                t3 - hz for t3 in _digit_targets(m1, vector[0], 3)
                if 0 <= t3 - hz <= 2 * (m1 - 1)
            })
        if not targets:
            return
        for j0 in range(0, n2, chunk):
            cvals = y[j0:j0 + chunk]
            hy = h1.value_array(cvals)
            order = np.argsort(hy, kind="stable")
            hys = hy[order]
            for b0 in range(0, n1, width):
                bvals = x[b0:b0 + width]
                hx = h1.value_array(bvals)
                for w in targets:
                    need = w - hx
                    lo = np.searchsorted(hys, need, side="left")
                    hi = np.searchsorted(hys, need, side="right")
                    nz = np.flatnonzero(hi - lo)
                    for ii, jj in _expand_ranges(nz, lo, hi, order, width):
                        sums = bvals[ii] + cvals[jj] + shift
                        keep = cascade.packed_array(sums) == packed_target
                        for i_loc, j_loc, sv in zip(
                            ii[keep].tolist(), jj[keep].tolist(),
                            sums[keep].tolist(),
                        ):
                            yield (int(sv), (b0 + i_loc, j0 + j_loc))
    finally:
        release_cells(held, meter)


def fill_capped(
    arrays, cascade, vectors: Iterable[tuple[int, ...]], cap: int,
    delta_chunk: int, meter: SpaceMeter | None,
    match_iter: Callable = iter_group_matches,
) -> SumArray:
    """Dedup-capped fill over a union of candidate target vectors (the
    fixed group); raises CapacityError when the cap is hit."""
    dedup = DedupList(capacity=cap, record_width=max(len(arrays), 1), meter=meter)
    try:
        for vec in vectors:
            gen = match_iter(arrays, cascade, vec, delta_chunk, meter)
            try:
                for s, idx in gen:
                    dedup.add(s, idx)
            finally:
                gen.close()
        items = list(dedup.items())
    finally:
        dedup.close()
    return SumArray(
        sums=tuple(s for s, _ in items),
        representatives=tuple(idx for _, idx in items),
    )


def fill_blocks(
    arrays, cascade, vector: tuple[int, ...], block_cap: int,
    delta_chunk: int, meter: SpaceMeter | None,
    match_iter: Callable = iter_group_matches,
) -> Iterator[SumArray]:
    """Paused-reporting fill: stream matches in dedup'd blocks of at most
    ``block_cap`` distinct sums.  Dedup is block-local, so a sum may recur
    in later blocks; that costs time, never space."""
    sums: list[int] = []
    reps: list[tuple[int, ...]] = []
    seen: set[int] = set()
    charge_cells(3 * block_cap, meter)
    try:
        gen = match_iter(arrays, cascade, vector, delta_chunk, meter)
        try:
            for s, idx in gen:
                if s in seen:
                    continue
                seen.add(s)
                sums.append(s)
                reps.append(idx)
                if len(sums) >= block_cap:
                    yield SumArray(sums=tuple(sums), representatives=tuple(reps))
                    sums, reps = [], []
                    seen.clear()
        finally:
            gen.close()
        if sums:
            yield SumArray(sums=tuple(sums), representatives=tuple(reps))
    finally:
        release_cells(3 * block_cap, meter)


# ---------------------------------------------------------------------------
# small exact solvers for top-level instances


def exact_small_solve(
    value_arrays: Sequence[Sequence[int]], target: int,
    meter: SpaceMeter | None = None,
) -> tuple[int, ...] | None:
    """One entry index per array whose values sum to the target, or None.

    Strategies by arity: sorted scan (2), per-element scan against a
    sorted third array (3), ascending/descending heap streams over sorted
    pairs (4), first-element fixing above that.
    """
    q = len(value_arrays)
    if q == 0 or any(len(v) == 0 for v in value_arrays):
        return None
    if q == 1:
        arr = np.asarray(value_arrays[0], dtype=np.int64)
        pos = np.flatnonzero(arr == target)
        return (int(pos[0]),) if len(pos) else None
    if q == 2:
        return _exact_two(value_arrays[0], value_arrays[1], target, meter)
    if q == 3:
        return _exact_three(value_arrays, target, meter)
    if q == 4:
        return _exact_four_streams(value_arrays, target, meter)
    first = value_arrays[0]
    for i, v in enumerate(first):
        rest = exact_small_solve(value_arrays[1:], target - v, meter)
        if rest is not None:
            return (i,) + rest
    return None


def _exact_two(v1, v2, target, meter):
    if max(len(v1), len(v2)) <= SCALAR_CUTOFF:
        charge_cells(len(v2), meter)
        try:
            lookup = {}
            for j, v in enumerate(v2):
                lookup.setdefault(v, j)
            for i, v in enumerate(v1):
                j = lookup.get(target - v)
                if j is not None:
                    return (i, j)
            return None
        finally:
            release_cells(len(v2), meter)
    a = np.asarray(v1, dtype=np.int64)
    b = np.asarray(v2, dtype=np.int64)
    charge_cells(2 * len(b), meter)
    try:
        order = np.argsort(b, kind="stable")
        sb = b[order]
        pos = np.searchsorted(sb, target - a)
        safe = np.minimum(pos, len(sb) - 1)
        hit = np.flatnonzero((pos < len(sb)) & (sb[safe] == target - a))
        if len(hit):
            i = int(hit[0])
            return (i, int(order[pos[i]]))
        return None
    finally:
        release_cells(2 * len(b), meter)


def _exact_three(value_arrays, target, meter):
    if max(len(v) for v in value_arrays) <= SCALAR_CUTOFF:
        charge_cells(len(value_arrays[2]), meter)
        try:
            lookup = {}
            for l, v in enumerate(value_arrays[2]):
                lookup.setdefault(v, l)
            for i, x in enumerate(value_arrays[0]):
                for j, y in enumerate(value_arrays[1]):
                    l = lookup.get(target - x - y)
                    if l is not None:
                        return (i, j, l)
            return None
        finally:
            release_cells(len(value_arrays[2]), meter)
    v1 = np.asarray(value_arrays[0], dtype=np.int64)
    v2 = np.asarray(value_arrays[1], dtype=np.int64)
    v3 = np.asarray(value_arrays[2], dtype=np.int64)
    charge_cells(2 * len(v3) + len(v2), meter)
    try:
        order = np.argsort(v3, kind="stable")
        s3 = v3[order]
        for i, xval in enumerate(v1.tolist()):
            need = target - xval - v2
            pos = np.searchsorted(s3, need)
            safe = np.minimum(pos, len(s3) - 1)
            hit = np.flatnonzero((pos < len(s3)) & (s3[safe] == need))
            if len(hit):
                j = int(hit[0])
                return (i, j, int(order[pos[j]]))
        return None
    finally:
        release_cells(2 * len(v3) + len(v2), meter)


def _exact_four_streams(value_arrays, target, meter):
    """Classic four-list scheme: ascending heap stream over one pair of
    arrays merged against a descending stream over the other pair; pair
    sums are never materialized, so space stays linear in the array size."""
    import heapq

    va, vb = list(value_arrays[0]), list(value_arrays[1])
    vc, vd = list(value_arrays[2]), list(value_arrays[3])
    b_ord = sorted(range(len(vb)), key=vb.__getitem__)
    d_ord = sorted(range(len(vd)), key=vd.__getitem__)
    charge_cells(3 * (len(va) + len(vc)) + len(vb) + len(vd), meter)
    try:
        up = [(va[ia] + vb[b_ord[0]], ia, 0) for ia in range(len(va))]
        heapq.heapify(up)
        down = [(-(vc[ic] + vd[d_ord[-1]]), ic, len(d_ord) - 1)
                for ic in range(len(vc))]
        heapq.heapify(down)
        while up and down:
            s_up, ia, jb = up[0]
            neg_dn, ic, jd = down[0]
            total = s_up - neg_dn
            if total == target:
                return (ia, b_ord[jb], ic, d_ord[jd])
            if total < target:
                heapq.heappop(up)
                if jb + 1 < len(b_ord):
                    heapq.heappush(up, (va[ia] + vb[b_ord[jb + 1]], ia, jb + 1))
            else:
                heapq.heappop(down)
                if jd > 0:
                    heapq.heappush(down, (-(vc[ic] + vd[d_ord[jd - 1]]), ic, jd - 1))
        return None
    finally:
        release_cells(3 * (len(va) + len(vc)) + len(vb) + len(vd), meter)


# ---------------------------------------------------------------------------
# the engine


def _fixed_target_vectors(
    cascade: HashCascade, target: int, q: int,
    chosen: Sequence[tuple[int, ...]],
) -> list[tuple[int, ...]]:
    """Candidate level vectors for the fixed group given the other groups'
    choices: per level, h(target) minus the chosen values minus each
    possible almost-linearity offset."""
    options_per_level = []
    for j, lvl in enumerate(cascade.levels):
        base = lvl.value(target) - sum(vec[j] for vec in chosen)
        options = sorted({(base - e) % lvl.range_m for e in range(q)})
        options_per_level.append(options)
    out: list[tuple[int, ...]] = [()]
    for options in options_per_level:
        out = [vec + (o,) for vec in out for o in options]
    return out


def _iter_block_combos(factories: list, depth: int, acc: list):
    if depth == len(factories):
        yield list(acc)
        return
    gen = factories[depth]()
    try:
        for block in gen:
            acc.append(block)
            yield from _iter_block_combos(factories, depth + 1, acc)
            acc.pop()
    finally:
        if hasattr(gen, "close"):
            gen.close()


class _Engine:
    """One configured self-reduction layer over raw value arrays."""

    def __init__(
        self,
        m: int,
        delta: float,
        rng_seed: int,
        top_solver: Callable,
        cap_c: int | None = None,
        balance: str = "sampled",
        attempts_cap: int = DEFAULT_ATTEMPTS_CAP,
        shard: tuple[int, int] | None = None,
        stats: dict | None = None,
        match_iter: Callable = iter_group_matches,
    ):
        self.m = m
        self.delta = delta
        self.rng_seed = rng_seed
        self.top_solver = top_solver
        self.cap_c = cap_c
        self.balance = balance
        self.attempts_cap = attempts_cap
        self.shard = shard
        self.stats = stats if stats is not None else {}
        self.match_iter = match_iter

    def solve(
        self, arrays: Sequence[np.ndarray], target: int,
        meter: SpaceMeter | None,
    ) -> tuple[tuple[int, ...], ...] | None:
        """Returns one original-index tuple per group on success."""
        k = len(arrays)
        n = max(len(a) for a in arrays)
        split = GroupSplit.from_k_m(k, self.m)
        d = split.d
        cap_c = self.cap_c if self.cap_c is not None else k
        bucket_cap = max(1, math.ceil(cap_c * n ** self.delta))
        delta_chunk = max(1, int(round(n ** min(self.delta, 1.0))))
        total_range = max(1, round(n ** max(d - self.delta, 0.0)))
        fixed_arrays = [arrays[i] for i in split.groups[split.fixed_group]]

        for attempt in range(self.attempts_cap):
            rng = rng_from(self.rng_seed, attempt)
            cascade = self._build_cascade(
                fixed_arrays, n, total_range, bucket_cap, cap_c, rng, meter
            )
            try:
                return self._enumerate(
                    arrays, target, split, cascade, bucket_cap,
                    delta_chunk, meter,
                )
            except CapacityError:
                self.stats["cascade_resamples"] = (
                    self.stats.get("cascade_resamples", 0) + 1
                )
                log.debug("fixed-group cap hit; resampling cascade "
                          "(attempt %d)", attempt + 1)
                continue
        raise SolverRetryError(
            f"no balanced cascade within {self.attempts_cap} attempts"
        )

    def _build_cascade(
        self, fixed_arrays, n, total_range, bucket_cap, cap_c, rng, meter
    ) -> HashCascade:
        set_size = math.prod(len(a) for a in fixed_arrays)
        if self.balance == "verified":
            def sums_stream():
                return _group_sum_chunks(fixed_arrays)

            cascade, bstats = build_balanced_cascade(
                sums_stream,
                n_base=n,
                delta=self.delta,
                cap_c=cap_c,
                attempts_cap=self.attempts_cap,
                rng_seed=rng,
                total_range=total_range,
                mode="budget" if meter is not None and meter.cap else "fast",
                meter=meter,
            )
            self.stats["cascade_resamples"] = (
                self.stats.get("cascade_resamples", 0)
                + sum(bstats.resamples_per_level)
            )
            return cascade
        return sample_cascade(set_size, total_range, rng)

    def _enumerate(
        self, arrays, target, split, cascade, bucket_cap, delta_chunk, meter
    ):
        q = split.q
        vec_space = cascade.nominal_range ** (q - 1)
        lo, hi = 0, vec_space
        if self.shard is not None:
            idx, count = self.shard
            lo = vec_space * idx // count
            hi = vec_space * (idx + 1) // count
        self.stats["targets_enumerated"] = (
            self.stats.get("targets_enumerated", 0) + (hi - lo)
        )
        log.debug("enumerating %d target vectors (range %d, %d groups)",
                  hi - lo, cascade.nominal_range, q)
        group_arrays = [[arrays[i] for i in g] for g in split.groups]
        R = cascade.nominal_range
        for vec_idx in range(lo, hi):
            rem = vec_idx
            chosen = []
            for _ in range(q - 1):
                chosen.append(cascade.vector_from_index(rem % R))
                rem //= R
            fixed_vectors = _fixed_target_vectors(cascade, target, q, chosen)
            fixed_entries = fill_capped(
                group_arrays[split.fixed_group], cascade, fixed_vectors,
                len(fixed_vectors) * bucket_cap,
                delta_chunk, meter, self.match_iter,
            )
            if len(fixed_entries) == 0:
                continue
            factories = [
                (lambda ga=group_arrays[i], vec=chosen[i]: fill_blocks(
                    ga, cascade, vec, bucket_cap, delta_chunk, meter,
                    self.match_iter,
                ))
                for i in range(q - 1)
            ]
            for combo in _iter_block_combos(factories, 0, []):
                parts = combo + [fixed_entries]
                serial = self.stats.get("top_solves", 0)
                self.stats["top_solves"] = serial + 1
                hit = self.top_solver(
                    [list(p.sums) for p in parts], target, meter, serial
                )
                if hit is not None:
                    return tuple(
                        parts[g].representatives[e] for g, e in enumerate(hit)
                    )
        return None


def _group_sum_chunks(arrays: Sequence[np.ndarray]):
    """All tuple sums of a group, streamed as bounded numpy chunks."""
    d = len(arrays)
    if d == 1:
        yield arrays[0]
        return
    if d == 2:
        x, y = arrays
        for yv in y.tolist():
            yield x + yv
        return
    if d == 3:
        x, y, z = arrays
        for yv in y.tolist():
            xy = x + yv
            for zv in z.tolist():
                yield xy + zv
        return
    raise ValueError(f"unsupported group arity {d}")


def _assemble_witness(group_tuples) -> Witness:
    indices: list[int] = []
    for idx_tuple in group_tuples:
        indices.extend(idx_tuple)
    return Witness(indices=tuple(indices))


# ---------------------------------------------------------------------------
# public solvers


def self_reduce(
    inst: KSumInstance,
    m: int,
    delta: float,
    inner_m_solver: Callable | None = None,
    inner_top_solver: Callable | None = None,
    rng_seed: int = 0,
    *,
    space_cap: int | None = None,
    strict: bool = True,
    shard: tuple[int, int] | None = None,
    balance: str = "verified",
    cap_c: int | None = None,
    attempts_cap: int = DEFAULT_ATTEMPTS_CAP,
) -> SolverReport:
    """One layer of the self-reduction with pluggable inner solvers.

    ``inner_m_solver`` overrides the group-fill match iterator (signature
    of :func:`iter_group_matches`); ``inner_top_solver`` solves the small
    top instance given (value arrays, target, meter) and defaults to the
    exact small-array solver.
    """
    if not (1 <= m < inst.k):
        raise ValueError("need 1 <= m < k")
    if not (0 < delta <= m):
        raise ValueError("need 0 < delta <= m")
    start = time.perf_counter_ns()
    meter = SpaceMeter(cap=space_cap, strict=strict)
    stats: dict = {}
    if inner_top_solver is not None:
        top = lambda values, t, mtr, serial: inner_top_solver(values, t, mtr)
    else:
        top = lambda values, t, mtr, serial: exact_small_solve(values, t, mtr)
    engine = _Engine(
        m=m, delta=delta, rng_seed=rng_seed, top_solver=top,
        cap_c=cap_c, balance=balance, attempts_cap=attempts_cap,
        shard=shard, stats=stats,
        match_iter=inner_m_solver if inner_m_solver is not None
        else iter_group_matches,
    )
    found = engine.solve(list(inst.np_arrays), inst.target, meter)
    witness = _assemble_witness(found) if found else None
    report = SolverReport(
        found=found is not None,
        witness=witness,
        elapsed_ns=time.perf_counter_ns() - start,
        peak_cells=meter.peak_cells,
        seed=rng_seed,
        stats=stats,
    )
    if report.found:
        assert report.witness.valid_for(inst)
    return report


def _linear_space_m(k: int) -> int:
    """round(sqrt(k)) with ties resolved by the recurrence's exponent."""
    if k <= 3:
        return 2
    root = math.sqrt(k)
    lo, hi = int(math.floor(root)), int(math.ceil(root))
    candidates = {max(2, lo), max(2, min(hi, k - 1))}
    return min(candidates, key=lambda m: (_linear_exponent(k, m), m))


def _best_linear_exponent(k: int, _memo={}) -> float:
    if k <= 2:
        return 1.0
    if k not in _memo:
        _memo[k] = min(_linear_exponent(k, m) for m in range(2, k))
    return _memo[k]


def _linear_exponent(k: int, m: int) -> float:
    """Exponent of the linear-space recursion, used for tie breaks."""
    if k <= 2:
        return 1.0
    q = -(-k // m)
    inner = max(
        _best_linear_exponent(min(m, k - 1)),
        _best_linear_exponent(q),
    )
    return (q - 1) * (m - 1) + inner


# Inner top instances this small solve faster through the exact small-array
# routines (same exponent, smaller constants) than through more recursion.
FOUR_LIST_CUTOFF = 512


def _lv_solve(
    arrays: list[np.ndarray],
    target: int,
    delta: float,
    rng_seed: int,
    meter: SpaceMeter | None,
    stats: dict,
    shard: tuple[int, int] | None = None,
    attempts_cap: int = DEFAULT_ATTEMPTS_CAP,
    depth: int = 0,
) -> tuple[int, ...] | None:
    """Recursive Las Vegas worker on raw arrays; returns an index tuple.

    delta >= 1 takes the linear-space route (near-sqrt(k) groups); below
    that a singleton-group outer reduction feeds budget-sized top
    instances back into the linear-space route.  Inner instances with at
    most four arrays go straight to the exact small-array solvers, which
    share the recursion's exponent at those arities with none of its
    overhead (and the same O(size) workspace).
    """
    k = len(arrays)
    if k == 1:
        pos = np.flatnonzero(arrays[0] == target)
        return (int(pos[0]),) if len(pos) else None
    if k == 2:
        return _two_sum_first(arrays[0], arrays[1], target,
                              min(delta, 1.0), meter)
    longest = max(len(a) for a in arrays)
    if depth >= 1 and (k == 3 or (k == 4 and longest <= FOUR_LIST_CUTOFF)):
        return exact_small_solve([a.tolist() for a in arrays], target, meter)

    if delta >= 1:
        m, engine_delta = _linear_space_m(k), 1.0
    else:
        m, engine_delta = 1, delta

    def top(values, t, mtr, serial):
        sub = [np.asarray(v, dtype=np.int64) for v in values]
        return _lv_solve(
            sub, t, 1.0, derive_seed(rng_seed, 0x70F, serial), mtr, stats,
            attempts_cap=attempts_cap, depth=depth + 1,
        )

    engine = _Engine(
        m=m, delta=engine_delta, rng_seed=rng_seed, top_solver=top,
        balance="sampled", attempts_cap=attempts_cap, shard=shard,
        stats=stats,
    )
    found = engine.solve(arrays, target, meter)
    if found is None:
        return None
    flat: list[int] = []
    for part in found:
        flat.extend(part)
    return tuple(flat)


def lv_ksum(
    inst: KSumInstance,
    delta: float,
    rng_seed: int = 0,
    *,
    space_cap: int | None = None,
    strict: bool = True,
    shard: tuple[int, int] | None = None,
    attempts_cap: int = DEFAULT_ATTEMPTS_CAP,
) -> SolverReport:
    """Las Vegas kSUM in O(n**delta) cells; always exact, runtime random."""
    if not (0 <= delta <= 1):
        raise ValueError("delta must lie in [0, 1]")
    start = time.perf_counter_ns()
    meter = SpaceMeter(cap=space_cap, strict=strict)
    stats: dict = {}
    found = _lv_solve(
        list(inst.np_arrays), inst.target, max(delta, 1e-9), rng_seed,
        meter, stats, shard=shard, attempts_cap=attempts_cap,
    )
    witness = Witness(indices=found) if found else None
    report = SolverReport(
        found=found is not None,
        witness=witness,
        elapsed_ns=time.perf_counter_ns() - start,
        peak_cells=meter.peak_cells,
        seed=rng_seed,
        stats=stats,
    )
    if report.found:
        assert report.witness.valid_for(inst)
    return report


def large_space_solve(
    inst: KSumInstance,
    delta: float,
    rng_seed: int = 0,
    *,
    space_cap: int | None = None,
    strict: bool = True,
    shard: tuple[int, int] | None = None,
    attempts_cap: int = DEFAULT_ATTEMPTS_CAP,
) -> SolverReport:
    """Self-reduction with m = ceil(delta) groups for budgets above linear;
    group fills run sort-and-scan at the full budget and the small top
    instance goes back through the linear-space path."""
    if not (1 < delta <= inst.k / 4):
        raise ValueError("need 1 < delta <= k/4")
    start = time.perf_counter_ns()
    m = math.ceil(delta)
    meter = SpaceMeter(cap=space_cap, strict=strict)
    stats: dict = {}

    def top(values, t, mtr, serial):
        sub = [np.asarray(v, dtype=np.int64) for v in values]
        return _lv_solve(
            sub, t, 1.0, derive_seed(rng_seed, 0xA11, serial), mtr, stats,
            attempts_cap=attempts_cap, depth=1,
        )

    engine = _Engine(
        m=m, delta=delta, rng_seed=rng_seed, top_solver=top,
        balance="sampled", attempts_cap=attempts_cap, shard=shard,
        stats=stats,
    )
    found = engine.solve(list(inst.np_arrays), inst.target, meter)
    witness = _assemble_witness(found) if found else None
    report = SolverReport(
        found=found is not None,
        witness=witness,
        elapsed_ns=time.perf_counter_ns() - start,
        peak_cells=meter.peak_cells,
        seed=rng_seed,
        stats=stats,
    )
    if report.found:
        assert report.witness.valid_for(inst)
    return report
