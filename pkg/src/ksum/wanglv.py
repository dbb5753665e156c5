"""Las Vegas triangular-number recursion with a lookup table.

Solves kSUM in linear space for k = T_j + 1 (T_j the j-th triangular
number) by splitting off j "left" arrays, bucketing their tuple sums with
a hash cascade, and recursing on the right arrays' *hashed* values.  The
recursion's contract is exact: every recursive call reports tuples whose
current-domain values sum to an exact integer target (hash slop is folded
into the caller's candidate-target sets), so lookup-table probes are
plain dictionary hits and answers are verified by construction.

No answer limits are imposed on recursive calls and tables dedup by the
current-domain sum, which is what makes the scheme Las Vegas instead of
Monte Carlo; a table outgrowing its cap triggers a cascade resample.

The large-space variant (integer delta >= 2) is the same recursion run
over "super-arrays": each group of delta arrays is materialized as its
n**delta tuple sums, which the budget allows.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ._seeds import derive_seed, rng_from
from .core import KSumInstance, SolverReport, Witness
from .hashing import HashCascade, sample_cascade
from .selfreduce import SolverRetryError, iter_two_sum_pairs
from .workspace import (
    CapacityError,
    SpaceMeter,
    WitnessStream,
    charge_cells,
    paused_pull,
    release_cells,
)

log = logging.getLogger("ksum.wanglv")

DEFAULT_ATTEMPTS = 64


def triangular(j: int) -> int:
    return j * (j + 1) // 2


@dataclass(frozen=True)
class TriangularPlan:
    """Depth and padding for running the recursion at arbitrary k."""

    j: int
    k_exact: int
    padding: int

    @classmethod
    def for_k(cls, k: int) -> "TriangularPlan":
        if k < 2:
            raise ValueError("need k >= 2")
        j = 1
        while triangular(j + 1) + 1 <= k:
            j += 1
        k_exact = triangular(j) + 1
        return cls(j=j, k_exact=k_exact, padding=k - k_exact)


class LookupTable:
    """Dedup map from a left-group sum to its representative tuple.

    Keys are exact current-domain sums, so each key holds exactly one
    representative; the cap is the balance guarantee and hitting it
    raises :class:`CapacityError` (the Las Vegas resample trigger).
    """

    __slots__ = ("cap", "_map", "_meter", "_charged", "probes")

    def __init__(self, cap: int, record_width: int, meter: SpaceMeter | None):
        self.cap = cap
        self._map: dict[int, tuple[int, ...]] = {}
        self._meter = meter
        self._charged = cap * (record_width + 1)
        self.probes = 0
        charge_cells(self._charged, meter)

    def add(self, total: int, indices: tuple[int, ...]) -> None:
        if total in self._map:
            return
        if len(self._map) >= self.cap:
            raise CapacityError(f"lookup table cap {self.cap} exceeded")
        self._map[total] = indices

    def probe(self, total: int) -> tuple[int, ...] | None:
        self.probes += 1
        return self._map.get(total)

    def __len__(self) -> int:
        return len(self._map)

    def close(self) -> None:
        if self._charged:
            release_cells(self._charged, self._meter)
            self._charged = 0
        self._map = {}


# ---------------------------------------------------------------------------
# packed element hashing: digit arithmetic that survives summation


def _pack_elements(cascade: HashCascade, arity: int, arr: np.ndarray) -> np.ndarray:
    """Per-element packed hash values in a base wide enough that digit
    sums of up to ``arity`` elements never carry between levels."""
    base = _carry_free_base(cascade, arity)
    packed = np.zeros(len(arr), dtype=np.int64)
    scale = 1
    for lvl in cascade.levels:
        packed += lvl.value_array(arr) * scale
        scale *= base
    return packed


def _carry_free_base(cascade: HashCascade, arity: int) -> int:
    top = max((lvl.range_m for lvl in cascade.levels), default=2)
    return arity * top + 1


def _digit_vectors(cascade: HashCascade, arity: int,
                   target: int) -> list[list[int]]:
    """Per-level candidate digit sums for ``arity`` elements whose
    current-domain values sum exactly to ``target``."""
    out = []
    for lvl in cascade.levels:
        r = lvl.range_m
        ht = lvl.value(target)
        vals = set()
        for e in range(arity):
            residue = (ht - e) % r
            for kk in range(arity):
                v = residue + kk * r
                if v <= arity * (r - 1):
                    vals.add(v)
        out.append(sorted(vals))
    return out


def _pack_digits(cascade: HashCascade, arity: int, digits: Sequence[int]) -> int:
    base = _carry_free_base(cascade, arity)
    packed = 0
    scale = 1
    for d in digits:
        packed += d * scale
        scale *= base
    return packed


def _left_digit_space(cascade: HashCascade, arity_left: int) -> list[range]:
    return [range(arity_left * (lvl.range_m - 1) + 1) for lvl in cascade.levels]


def _split_digits(packed: int, base: int, levels: int) -> list[int]:
    out = []
    for _ in range(levels):
        out.append(packed % base)
        packed //= base
    return out


# ---------------------------------------------------------------------------
# exact-sum reporting recursion


def _report_exact_sum(
    arrays: list[np.ndarray],
    target: int,
    rng_seed: int,
    cap_c: int,
    meter: SpaceMeter | None,
    stats: dict,
    attempts: int = DEFAULT_ATTEMPTS,
) -> Iterator[tuple[int, ...]]:
    """All index tuples whose current-domain values sum exactly to target.

    Streams answers; a cascade resample restarts emission, so consumers
    may see an answer more than once (they re-verify, so this only costs
    time).
    """
    k = len(arrays)
    if k == 1:
        for i in np.flatnonzero(arrays[0] == target).tolist():
            yield (i,)
        return
    if k == 2:
        gen = iter_two_sum_pairs(arrays[0], arrays[1], target, 1.0, meter)
        try:
            yield from gen
        finally:
            gen.close()
        return

    plan = TriangularPlan.for_k(k)
    if plan.padding:
        raise ValueError("internal recursion must be on exact forms")
    yield from _report_exact_form(
        arrays, target, plan.j, rng_seed, cap_c, meter, stats, attempts
    )


def _report_exact_form(
    arrays, target, j, rng_seed, cap_c, meter, stats, attempts
) -> Iterator[tuple[int, ...]]:
    k = len(arrays)
    n = max(len(a) for a in arrays)
    left = arrays[:j]
    right = arrays[j:]
    table_cap = max(1, cap_c * n)
    for attempt in range(attempts):
        rng = rng_from(rng_seed, 0x3A7, attempt)
        cascade = sample_cascade(
            set_size=math.prod(len(a) for a in left),
            total_range=max(1, round(float(n) ** (j - 1))),
            rng=rng,
        )
        try:
            yield from _scan_exact_form(
                arrays, left, right, target, cascade, table_cap,
                derive_seed(rng_seed, 0x3A8, attempt), cap_c, meter, stats,
                attempts,
            )
            return
        except CapacityError:
            stats["cascade_resamples"] = stats.get("cascade_resamples", 0) + 1
            continue
    raise SolverRetryError(f"no balanced cascade within {attempts} attempts")


def _scan_exact_form(
    arrays, left, right, target, cascade, table_cap, rng_seed, cap_c,
    meter, stats, attempts,
) -> Iterator[tuple[int, ...]]:
    k = len(arrays)
    j = len(left)
    base = _carry_free_base(cascade, k)
    levels = len(cascade.levels)
    packed_left = [_pack_elements(cascade, k, a) for a in left]
    packed_right = [_pack_elements(cascade, k, a) for a in right]
    charge_cells(sum(len(p) for p in packed_left + packed_right), meter)
    try:
        all_digits = _digit_vectors(cascade, k, target)
        total_candidates = [
            _pack_digits(cascade, k, combo)
            for combo in itertools.product(*all_digits)
        ] if levels else [0]

        left_space = _left_digit_space(cascade, j)
        for left_digits in itertools.product(*left_space):
            v_l = _pack_digits(cascade, k, left_digits)
            stats["targets_enumerated"] = stats.get("targets_enumerated", 0) + 1
            table = _fill_left_table(
                left, packed_left, v_l, table_cap, meter
            )
            try:
                if len(table) == 0:
                    continue
                right_targets = set()
                for w_all in total_candidates:
                    w_r = w_all - v_l
                    if w_r < 0:
                        continue
                    digits = _split_digits(w_r, base, levels)
                    if all(
                        d <= (k - j) * (lvl.range_m - 1)
                        for d, lvl in zip(digits, cascade.levels)
                    ):
                        right_targets.add(w_r)
                for w_r in sorted(right_targets):
                    answers = WitnessStream(
                        _report_exact_sum(
                            packed_right, w_r,
                            derive_seed(rng_seed, w_r), cap_c, meter,
                            stats, attempts,
                        ),
                        block_cap=table_cap,
                    )
                    while True:
                        block = paused_pull(answers)
                        if block is None:
                            break
                        stats["blocks_pulled"] = stats.get("blocks_pulled", 0) + 1
                        for idx in block:
                            s_r = sum(
                                int(right[x][idx[x]]) for x in range(len(right))
                            )
                            hit = table.probe(target - s_r)
                            if hit is not None:
                                yield hit + idx
                stats["table_probes"] = stats.get("table_probes", 0) + table.probes
            finally:
                table.close()
    finally:
        release_cells(sum(len(p) for p in packed_left + packed_right), meter)


def _fill_left_table(left, packed_left, v_l, table_cap, meter) -> LookupTable:
    """Left tuples whose packed digit sums equal v_l, dedup'd by the
    current-domain sum (sorted first array + completion search)."""
    j = len(left)
    table = LookupTable(table_cap, record_width=j, meter=meter)
    p0 = packed_left[0]
    order = np.argsort(p0, kind="stable")
    sp0 = p0[order]
    charge_cells(2 * len(p0), meter)
    try:
        if j == 1:
            for i in np.flatnonzero(p0 == v_l).tolist():
                table.add(int(left[0][i]), (i,))
            return table
        rest_packed = packed_left[1:]
        rest_vals = left[1:]
        for combo in itertools.product(*(range(len(a)) for a in rest_packed)):
            partial = sum(int(rest_packed[x][combo[x]]) for x in range(j - 1))
            need = v_l - partial
            lo = int(np.searchsorted(sp0, need, side="left"))
            hi = int(np.searchsorted(sp0, need, side="right"))
            for pos in range(lo, hi):
                i0 = int(order[pos])
                s = int(left[0][i0]) + sum(
                    int(rest_vals[x][combo[x]]) for x in range(j - 1)
                )
                table.add(s, (i0,) + combo)
        return table
    except CapacityError:
        table.close()
        raise
    finally:
        release_cells(2 * len(p0), meter)


def _wang_decide(
    arrays: list[np.ndarray],
    target: int,
    rng_seed: int,
    cap_c: int,
    meter: SpaceMeter | None,
    stats: dict,
    attempts: int = DEFAULT_ATTEMPTS,
) -> tuple[int, ...] | None:
    """First witness of an exact-form instance, or None."""
    gen = _report_exact_sum(arrays, target, rng_seed, cap_c, meter, stats,
                            attempts)
    try:
        for idx in gen:
            return idx
        return None
    finally:
        gen.close()


def _padded_decide(
    arrays: list[np.ndarray],
    target: int,
    plan_k_exact: int,
    rng_seed: int,
    cap_c: int,
    meter: SpaceMeter | None,
    stats: dict,
    attempts: int,
) -> tuple[int, ...] | None:
    """Fix one element per padded array (the arrays beyond the exact
    form), solving the exact-form instance per combination."""
    core = arrays[:plan_k_exact]
    padded = arrays[plan_k_exact:]
    serial = 0
    for combo in itertools.product(*(range(len(a)) for a in padded)):
        adjusted = target - sum(int(a[i]) for a, i in zip(padded, combo))
        serial += 1
        hit = _wang_decide(
            core, adjusted, derive_seed(rng_seed, 0xFAD, serial),
            cap_c, meter, stats, attempts,
        )
        if hit is not None:
            return hit + combo
    return None


def wang_lv_linear(
    inst: KSumInstance,
    rng_seed: int = 0,
    *,
    space_cap: int | None = None,
    strict: bool = True,
    cap_c: int | None = None,
    attempts_cap: int = DEFAULT_ATTEMPTS,
    engine: str = "auto",
) -> SolverReport:
    """Linear-space Las Vegas kSUM via the triangular recursion.

    ``engine="fast"`` routes k in {4, 5, 6} through the compiled kernel
    (identical contract, no streaming instrumentation); "python" forces
    the reference path; "auto" picks by size.
    """
    start = time.perf_counter_ns()
    meter = SpaceMeter(cap=space_cap, strict=strict)
    stats: dict = {}
    plan = TriangularPlan.for_k(inst.k)
    cc = cap_c if cap_c is not None else max(4, inst.k)

    use_fast = _pick_engine(engine, inst, plan)
    if use_fast:
        from ._fastlane import wang4_decide_fast
        found = wang4_decide_fast(
            inst, plan, rng_seed, cc, meter, stats, attempts_cap
        )
    elif plan.padding:
        found = _padded_decide(
            list(inst.np_arrays), inst.target, plan.k_exact, rng_seed,
            cc, meter, stats, attempts_cap,
        )
    else:
        found = _wang_decide(
            list(inst.np_arrays), inst.target, rng_seed, cc, meter, stats,
            attempts_cap,
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


def _pick_engine(engine: str, inst: KSumInstance, plan: TriangularPlan) -> bool:
    if engine == "python":
        return False
    kernel_ok = plan.k_exact == 4 and inst.k <= 6
    if engine == "fast":
        if not kernel_ok:
            raise ValueError("fast engine supports k in {4, 5, 6}")
        return True
    return kernel_ok and inst.n >= 192


# ---------------------------------------------------------------------------
# large-space variant: the same recursion over delta-tuple super-arrays


def _materialize_super_arrays(
    arrays: Sequence[np.ndarray], delta: int, meter: SpaceMeter | None
) -> list[np.ndarray]:
    """Group consecutive runs of ``delta`` arrays into explicit arrays of
    tuple sums (n**delta cells each, which this budget allows); flat
    positions decode back to per-array indices arithmetically."""
    supers = []
    for g0 in range(0, len(arrays), delta):
        group = arrays[g0:g0 + delta]
        sums = group[0]
        for arr in group[1:]:
            sums = (sums[:, None] + arr[None, :]).ravel()
        charge_cells(len(sums), meter)
        supers.append(sums)
    return supers


def _decode_super_index(flat: int, sizes: Sequence[int]) -> tuple[int, ...]:
    out = []
    for size in reversed(sizes):
        out.append(flat % size)
        flat //= size
    out.reverse()
    return tuple(out)


def large_space_integer(
    inst: KSumInstance,
    delta: int,
    rng_seed: int = 0,
    *,
    space_cap: int | None = None,
    strict: bool = True,
    cap_c: int | None = None,
    attempts_cap: int = DEFAULT_ATTEMPTS,
) -> SolverReport:
    """Integer delta >= 2 generalization: delta-sized groups become
    super-elements (their sums materialized within the n**delta budget)
    and the triangular recursion runs over the super-arrays, with the
    2*delta base case degenerating to a two-super-array exact scan."""
    if not (isinstance(delta, int) and delta >= 2):
        raise ValueError("delta must be an integer >= 2")
    if inst.k < 2 * delta:
        raise ValueError("need k >= 2*delta")
    start = time.perf_counter_ns()
    meter = SpaceMeter(cap=space_cap, strict=strict)
    stats: dict = {}
    cc = cap_c if cap_c is not None else max(4, inst.k)

    arrays = list(inst.np_arrays)
    exact_super = TriangularPlan.for_k(inst.k // delta).k_exact
    core_count = delta * exact_super
    core = arrays[:core_count]
    padded = arrays[core_count:]
    group_sizes = [
        [len(a) for a in core[g0:g0 + delta]]
        for g0 in range(0, core_count, delta)
    ]

    found = None
    serial = 0
    for combo in itertools.product(*(range(len(a)) for a in padded)):
        adjusted = inst.target - sum(int(a[i]) for a, i in zip(padded, combo))
        supers = _materialize_super_arrays(core, delta, meter)
        serial += 1
        hit = _wang_decide(
            supers, adjusted, derive_seed(rng_seed, 0x1A6, serial), cc,
            meter, stats, attempts_cap,
        )
        for s in supers:
            release_cells(len(s), meter)
        if hit is not None:
            flat: list[int] = []
            for g, super_idx in enumerate(hit):
                flat.extend(_decode_super_index(super_idx, group_sizes[g]))
            found = tuple(flat) + combo
            break
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
