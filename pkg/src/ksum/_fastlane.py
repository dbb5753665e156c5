"""Compiled kernels for the benchmark-scale solver paths.

The triangular-recursion solver at k=4 and the three-pair 6SUM solver
spend their time in per-target loops whose bodies are a few dozen integer
operations; interpreter dispatch there would swamp the asymptotics the
benches measure, so these two paths have numba twins.  Contracts are
identical to the pure-Python lanes (same hash family, same caps, same
Las Vegas resample-on-overflow protocol) and the test suite cross-checks
the lanes against each other.

Workspace for a kernel run is preallocated and charged to the meter up
front; caps are enforced by in-kernel bounds checks whose violation
reports back as a resample request.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._seeds import rng_from
from .hashing import PRIME, plan_level_ranges
from .selfreduce import SolverRetryError
from .workspace import SpaceMeter, charge_cells, release_cells

_U = np.uint64
_P_U64 = _U(PRIME)
_P_I64 = np.int64(PRIME)
_MASK32 = _U(0xFFFFFFFF)
_MASK61 = _U((1 << 61) - 1)
_MASK29 = _U((1 << 29) - 1)

STATUS_NOT_FOUND = 0
STATUS_FOUND = 1
STATUS_RESAMPLE = 2

# golden-ratio mix constant as a signed 64-bit value (numba arithmetic is
# int64; the wraparound multiply is the point)
_MIX = np.int64(0x9E3779B97F4A7C15 - (1 << 64))
_POSMASK = np.int64(0x7FFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _mulmod61(a, x):
    """(a*x) mod (2**61-1); a, x uint64 below the prime."""
    ah = a >> _U(32)
    al = a & _MASK32
    xh = x >> _U(32)
    xl = x & _MASK32
    hi = ah * xh
    mid = ah * xl + al * xh
    lo = al * xl
    midr = (mid >> _U(61)) + (mid & _MASK61)
    if midr >= _P_U64:
        midr -= _P_U64
    total = (hi << _U(3)) \
        + ((midr >> _U(29)) + ((midr & _MASK29) << _U(32))) \
        + ((lo >> _U(61)) + (lo & _MASK61))
    total = (total >> _U(61)) + (total & _MASK61)
    if total >= _P_U64:
        total -= _P_U64
    return total


@njit(cache=True, inline="always")
def _hash61(a, x_i64, m_i64):
    """floor(((a * (x mod p)) mod p) * m / p) as int64."""
    x = _U(x_i64 % _P_I64)
    g = _mulmod61(a, x)
    mm = _U(m_i64)
    b = (g >> _U(32)) * mm
    c = (g & _MASK32) * mm
    q0 = (b + (c >> _U(32))) >> _U(29)
    low61 = (g * mm) & _MASK61
    if q0 + low61 >= _P_U64:
        q0 += _U(1)
    return np.int64(q0)


@njit(cache=True, inline="always")
def _packed_hash(mults, ranges, nlevels, base, x):
    packed = np.int64(0)
    scale = np.int64(1)
    for lvl in range(nlevels):
        packed += _hash61(mults[lvl], x, ranges[lvl]) * scale
        scale *= base
    return packed


@njit(cache=True)
def _hash_all(mults, ranges, nlevels, base, arr, out):
    for i in range(len(arr)):
        out[i] = _packed_hash(mults, ranges, nlevels, base, arr[i])


@njit(cache=True, inline="always")
def _bisect_left(arr, n, v):
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# triangular recursion, k = 4 (left pair + right pair, one cascade level)


@njit(cache=True)
def _wang4_kernel(a1, a2, a3, a4, target, mult, r, table_cap,
                  h1, h2, h3, h4, order1, order3, s1, s3,
                  tkeys, tstamp, ti1, ti2,
                  v_lo, v_hi, counters, witness):
    """One Las Vegas attempt at exact-form 4SUM.

    Left pairs are bucketed by the integer sum of their element hashes;
    per bucket value a dedup table keyed by the original pair sum is
    probed by right pairs found the same way.  Returns a status code;
    RESAMPLE means a table cap was hit and the caller should redraw the
    hash.  counters: [0]=targets, [1]=table peak, [2]=probes, [3]=answers.
    """
    n = len(a1)
    for i in range(n):
        h1[i] = _hash61(mult, a1[i], r)
        h2[i] = _hash61(mult, a2[i], r)
        h3[i] = _hash61(mult, a3[i], r)
        h4[i] = _hash61(mult, a4[i], r)
    order1[:] = np.argsort(h1, kind="mergesort")
    order3[:] = np.argsort(h3, kind="mergesort")
    for i in range(n):
        s1[i] = h1[order1[i]]
        s3[i] = h3[order3[i]]
    ht = _hash61(mult, target, r)

    # digit-sum candidates for all four hashes of a true solution
    totals = np.empty(16, dtype=np.int64)
    ntot = 0
    for e in range(4):
        residue = (ht - e) % r
        for kk in range(4):
            v = residue + kk * r
            if v <= 4 * (r - 1):
                dup = False
                for z in range(ntot):
                    if totals[z] == v:
                        dup = True
                        break
                if not dup:
                    totals[ntot] = v
                    ntot += 1

    tsize = len(tkeys)
    tmask = tsize - 1
    version = 0
    for v_l in range(v_lo, v_hi):
        counters[0] += 1
        version += 1
        count = 0
        # fill: left pairs with h1+h2 == v_l, dedup by original pair sum
        for j2 in range(n):
            need = v_l - h2[j2]
            if need < 0 or need > r - 1:
                continue
            lo = _bisect_left(s1, n, need)
            while lo < n and s1[lo] == need:
                i1 = order1[lo]
                s = a1[i1] + a2[j2]
                pos = ((s * _MIX) & _POSMASK) & tmask
                placed = False
                while True:
                    if tstamp[pos] != version:
                        tstamp[pos] = version
                        tkeys[pos] = s
                        ti1[pos] = i1
                        ti2[pos] = j2
                        count += 1
                        placed = True
                        break
                    if tkeys[pos] == s:
                        break
                    pos = (pos + 1) & tmask
                if placed and count > table_cap:
                    return STATUS_RESAMPLE
                lo += 1
        if count > counters[1]:
            counters[1] = count
        if count == 0:
            continue
        # right pairs at each in-range digit target, probed against the table
        for z in range(ntot):
            w_r = totals[z] - v_l
            if w_r < 0 or w_r > 2 * (r - 1):
                continue
            for j4 in range(n):
                need = w_r - h4[j4]
                if need < 0 or need > r - 1:
                    continue
                lo = _bisect_left(s3, n, need)
                while lo < n and s3[lo] == need:
                    i3 = order3[lo]
                    s_r = a3[i3] + a4[j4]
                    counters[3] += 1
                    want = target - s_r
                    pos = ((want * _MIX) & _POSMASK) & tmask
                    while tstamp[pos] == version:
                        counters[2] += 1
                        if tkeys[pos] == want:
                            witness[0] = ti1[pos]
                            witness[1] = ti2[pos]
                            witness[2] = i3
                            witness[3] = j4
                            return STATUS_FOUND
                        pos = (pos + 1) & tmask
                    lo += 1
    return STATUS_NOT_FOUND


def wang4_decide_fast(inst, plan, rng_seed, cap_c, meter: SpaceMeter | None,
                      stats: dict, attempts_cap: int,
                      shard: tuple[int, int] | None = None):
    """Compiled k=4 core with a Python padding loop for k in {5, 6}."""
    import itertools

    arrays = list(inst.np_arrays)
    core = arrays[:4]
    padded = arrays[4:]
    n = inst.n
    r = max(2, int(round(float(n))))
    table_cap = max(4, cap_c * n)
    tsize = 1 << max(3, (2 * table_cap - 1).bit_length())

    h = [np.empty(n, dtype=np.int64) for _ in range(4)]
    orders = [np.empty(n, dtype=np.int64) for _ in range(2)]
    sorted_h = [np.empty(n, dtype=np.int64) for _ in range(2)]
    tkeys = np.empty(tsize, dtype=np.int64)
    tstamp = np.zeros(tsize, dtype=np.int64)
    ti1 = np.empty(tsize, dtype=np.int64)
    ti2 = np.empty(tsize, dtype=np.int64)
    witness = np.empty(4, dtype=np.int64)
    counters = np.zeros(4, dtype=np.int64)
    held = 8 * n + 4 * tsize + 8
    charge_cells(held, meter)

    v_space = 2 * (r - 1) + 1
    v_lo, v_hi = 0, v_space
    if shard is not None:
        idx, cnt = shard
        v_lo = v_space * idx // cnt
        v_hi = v_space * (idx + 1) // cnt

    try:
        pad_serial = 0
        for combo in itertools.product(*(range(len(a)) for a in padded)):
            adjusted = inst.target - sum(
                int(a[i]) for a, i in zip(padded, combo)
            )
            pad_serial += 1
            for attempt in range(attempts_cap):
                rng = rng_from(rng_seed, 0xFA5, pad_serial, attempt)
                mult = _U(rng.randrange(1, PRIME))
                tstamp[:] = 0  # stamps are versioned per call
                status = _wang4_kernel(
                    core[0], core[1], core[2], core[3],
                    np.int64(adjusted), mult, np.int64(r),
                    np.int64(table_cap),
                    h[0], h[1], h[2], h[3],
                    orders[0], orders[1], sorted_h[0], sorted_h[1],
                    tkeys, tstamp, ti1, ti2,
                    np.int64(v_lo), np.int64(v_hi), counters, witness,
                )
                if status == STATUS_RESAMPLE:
                    stats["cascade_resamples"] = (
                        stats.get("cascade_resamples", 0) + 1
                    )
                    continue
                if status == STATUS_FOUND:
                    _merge_wang_stats(stats, counters)
                    return tuple(int(x) for x in witness) + combo
                break
            else:
                raise SolverRetryError(
                    f"no balanced hash within {attempts_cap} attempts"
                )
        _merge_wang_stats(stats, counters)
        return None
    finally:
        release_cells(held, meter)


def _merge_wang_stats(stats: dict, counters: np.ndarray) -> None:
    stats["targets_enumerated"] = (
        stats.get("targets_enumerated", 0) + int(counters[0])
    )
    stats["table_peak"] = max(stats.get("table_peak", 0), int(counters[1]))
    stats["table_probes"] = stats.get("table_probes", 0) + int(counters[2])
    stats["reported_tuples"] = (
        stats.get("reported_tuples", 0) + int(counters[3])
    )




# ---------------------------------------------------------------------------
# 6SUM as three pairs (fixed third group), up to 4 cascade levels


@njit(cache=True, inline="always")
def _digit_member(sets, counts, lvl, v):
    for z in range(counts[lvl]):
        if sets[lvl, z] == v:
            return True
    return False


@njit(cache=True)
def _fill_pair_blocks(x, y, mults, ranges, nlevels, chunk,
                      d1_targets, d1_count, dsets, dcounts,
                      pack_base, packed_targets, n_packed,
                      cap, sums, idx_i, idx_j,
                      start_count, resume,
                      hx_chunk, hx_order, hx_sorted):
    """Resumable fill of pairs whose hashed sum matches a packed target.

    Level-one digit search against chunk-sorted hashes prunes candidates,
    upper-level digit sets prune further, and survivors verify the exact
    packed cascade value of their sum, so blocks hold exactly the matching
    pairs (dedup'd by sum).  The sort side is processed in ``chunk``-sized
    runs; the scan side is hashed on the fly, so the only storage is the
    chunk buffers and the output block.

    resume = [chunk_start, j, t_idx, lo]; returns (count, done).
    """
    n1 = len(x)
    n2 = len(y)
    r1 = ranges[0]
    count = start_count
    c0 = resume[0]
    j = resume[1]
    t_idx = resume[2]
    lo = resume[3]
    while c0 < n1:
        clen = min(chunk, n1 - c0)
        for z in range(clen):
            hx_chunk[z] = _hash61(mults[0], x[c0 + z], r1)
        hx_order[:clen] = np.argsort(hx_chunk[:clen], kind="mergesort")
        for z in range(clen):
            hx_sorted[z] = hx_chunk[hx_order[z]]
        while j < n2:
            hy1 = _hash61(mults[0], y[j], r1)
            while t_idx < d1_count:
                need = d1_targets[t_idx] - hy1
                if need < 0 or need > r1 - 1:
                    t_idx += 1
                    lo = -1
                    continue
                if lo < 0:
                    lo = _bisect_left(hx_sorted, clen, need)
                while lo < clen and hx_sorted[lo] == need:
                    i = c0 + hx_order[lo]
                    lo += 1
                    ok = True
                    for lvl in range(1, nlevels):
                        dv = _hash61(mults[lvl], x[i], ranges[lvl]) \
                            + _hash61(mults[lvl], y[j], ranges[lvl])
                        if not _digit_member(dsets, dcounts, lvl, dv):
                            ok = False
                            break
                    if not ok:
                        continue
                    s = x[i] + y[j]
                    pv = _packed_hash(mults, ranges, nlevels, pack_base, s)
                    hit = False
                    for z in range(n_packed):
                        if packed_targets[z] == pv:
                            hit = True
                            break
                    if not hit:
                        continue
                    dup = False
                    for z in range(count):
                        if sums[z] == s:
                            dup = True
                            break
                    if dup:
                        continue
                    sums[count] = s
                    idx_i[count] = i
                    idx_j[count] = j
                    count += 1
                    if count >= cap:
                        resume[0] = c0
                        resume[1] = j
                        resume[2] = t_idx
                        resume[3] = lo
                        return count, False
                t_idx += 1
                lo = -1
            j += 1
            t_idx = 0
            lo = -1
        c0 += chunk
        j = 0
    resume[0] = n1
    return count, True


@njit(cache=True, inline="always")
def _pair_digit_sets(v_vec, ranges, nlevels, dsets, dcounts):
    """Per-level digit-sum targets for a pair hitting level vector v_vec."""
    for lvl in range(nlevels):
        r = ranges[lvl]
        cnt = 0
        for e in range(2):
            residue = (v_vec[lvl] - e) % r
            for kk in range(2):
                val = residue + kk * r
                if val <= 2 * (r - 1):
                    dup = False
                    for z in range(cnt):
                        if dsets[lvl, z] == val:
                            dup = True
                            break
                    if not dup:
                        dsets[lvl, cnt] = val
                        cnt += 1
        dcounts[lvl] = cnt


@njit(cache=True)
def _six222_kernel(a1, a2, a3, a4, a5, a6, target,
                   mults, ranges, nlevels, chunk, pack_base,
                   b1_sums, b1_i, b1_j, b2_sums, b2_i, b2_j,
                   b3_sums, b3_i, b3_j, b3_sorted, b3_order,
                   hx_chunk, hx_order, hx_sorted,
                   block_cap, fixed_cap,
                   t1_lo, t1_hi, counters, witness):
    """Shardable scan over (t1, t2) level-vector pairs; the shard slices
    the t1 coordinate.  counters: [0]=vector pairs, [1]=fixed-list peak,
    [2]=top solves, [3]=reported tuples."""
    R = np.int64(1)
    for lvl in range(nlevels):
        R *= ranges[lvl]
    ht = np.empty(4, dtype=np.int64)
    for lvl in range(nlevels):
        ht[lvl] = _hash61(mults[lvl], target, ranges[lvl])

    v1vec = np.empty(4, dtype=np.int64)
    v2vec = np.empty(4, dtype=np.int64)
    d1sets = np.empty((4, 4), dtype=np.int64)
    d1counts = np.empty(4, dtype=np.int64)
    d2sets = np.empty((4, 4), dtype=np.int64)
    d2counts = np.empty(4, dtype=np.int64)
    f_opts = np.empty((4, 3), dtype=np.int64)
    f_nopts = np.empty(4, dtype=np.int64)
    f_sets = np.empty((4, 12), dtype=np.int64)
    f_counts = np.empty(4, dtype=np.int64)
    pt_single = np.empty(1, dtype=np.int64)
    pt2_single = np.empty(1, dtype=np.int64)
    f_packed = np.empty(81, dtype=np.int64)
    resume1 = np.empty(4, dtype=np.int64)
    resume2 = np.empty(4, dtype=np.int64)
    resume3 = np.empty(4, dtype=np.int64)

    for t1_idx in range(t1_lo, t1_hi):
        rem = t1_idx
        for lvl in range(nlevels):
            v1vec[lvl] = rem % ranges[lvl]
            rem //= ranges[lvl]
        _pair_digit_sets(v1vec, ranges, nlevels, d1sets, d1counts)
        packed_v = np.int64(0)
        scale = np.int64(1)
        for lvl in range(nlevels):
            packed_v += v1vec[lvl] * scale
            scale *= pack_base
        pt_single[0] = packed_v

        resume1[0] = 0
        resume1[1] = 0
        resume1[2] = 0
        resume1[3] = -1
        while True:
            c1, done1 = _fill_pair_blocks(
                a1, a2, mults, ranges, nlevels, chunk,
                d1sets[0], d1counts[0], d1sets, d1counts,
                pack_base, pt_single, 1,
                block_cap, b1_sums, b1_i, b1_j, 0, resume1,
                hx_chunk, hx_order, hx_sorted,
            )
            if c1 > 0:
                counters[3] += c1
                for t2_idx in range(R):
                    counters[0] += 1
                    rem = t2_idx
                    for lvl in range(nlevels):
                        v2vec[lvl] = rem % ranges[lvl]
                        rem //= ranges[lvl]
                    _pair_digit_sets(v2vec, ranges, nlevels, d2sets, d2counts)
                    packed_v = np.int64(0)
                    scale = np.int64(1)
                    for lvl in range(nlevels):
                        packed_v += v2vec[lvl] * scale
                        scale *= pack_base
                    pt2_single[0] = packed_v

                    # fixed-group candidate vectors and their digit sets
                    for lvl in range(nlevels):
                        r = ranges[lvl]
                        cnt = 0
                        for e in range(3):
                            val = (ht[lvl] - e - v1vec[lvl] - v2vec[lvl]) % r
                            dup = False
                            for z in range(cnt):
                                if f_opts[lvl, z] == val:
                                    dup = True
                                    break
                            if not dup:
                                f_opts[lvl, cnt] = val
                                cnt += 1
                        f_nopts[lvl] = cnt
                        scnt = 0
                        for oz in range(cnt):
                            for e in range(2):
                                residue = (f_opts[lvl, oz] - e) % r
                                for kk in range(2):
                                    val = residue + kk * r
                                    if val <= 2 * (r - 1):
                                        dup = False
                                        for z in range(scnt):
                                            if f_sets[lvl, z] == val:
                                                dup = True
                                                break
                                        if not dup:
                                            f_sets[lvl, scnt] = val
                                            scnt += 1
                        f_counts[lvl] = scnt

                    # packed values of every candidate fixed vector
    
                    nf = np.int64(1)
                    for lvl in range(nlevels):
                        nf *= f_nopts[lvl]
                    for ci in range(nf):
                        rem2 = ci
                        pv = np.int64(0)
                        scale = np.int64(1)
                        for lvl in range(nlevels):
                            pv += f_opts[lvl, rem2 % f_nopts[lvl]] * scale
                            rem2 //= f_nopts[lvl]
                            scale *= pack_base
                        f_packed[ci] = pv

                    resume3[0] = 0
                    resume3[1] = 0
                    resume3[2] = 0
                    resume3[3] = -1
                    fcount, fdone = _fill_pair_blocks(
                        a5, a6, mults, ranges, nlevels, chunk,
                        f_sets[0], f_counts[0], f_sets, f_counts,
                        pack_base, f_packed, nf,
                        fixed_cap, b3_sums, b3_i, b3_j, 0, resume3,
                        hx_chunk, hx_order, hx_sorted,
                    )
                    if not fdone:
                        return STATUS_RESAMPLE
                    if fcount > counters[1]:
                        counters[1] = fcount
                    if fcount == 0:
                        continue
                    b3_order[:fcount] = np.argsort(
                        b3_sums[:fcount], kind="mergesort"
                    )
                    for z in range(fcount):
                        b3_sorted[z] = b3_sums[b3_order[z]]

                    resume2[0] = 0
                    resume2[1] = 0
                    resume2[2] = 0
                    resume2[3] = -1
                    while True:
                        c2, done2 = _fill_pair_blocks(
                            a3, a4, mults, ranges, nlevels, chunk,
                            d2sets[0], d2counts[0], d2sets, d2counts,
                            pack_base, pt2_single, 1,
                            block_cap, b2_sums, b2_i, b2_j, 0, resume2,
                            hx_chunk, hx_order, hx_sorted,
                        )
                        if c2 > 0:
                            counters[3] += c2
                            counters[2] += 1
                            for z1 in range(c1):
                                for z2 in range(c2):
                                    need = target - b1_sums[z1] - b2_sums[z2]
                                    pos = _bisect_left(b3_sorted, fcount, need)
                                    if pos < fcount and b3_sorted[pos] == need:
                                        f = b3_order[pos]
                                        witness[0] = b1_i[z1]
                                        witness[1] = b1_j[z1]
                                        witness[2] = b2_i[z2]
                                        witness[3] = b2_j[z2]
                                        witness[4] = b3_i[f]
                                        witness[5] = b3_j[f]
                                        return STATUS_FOUND
                        if done2:
                            break
            if done1:
                break
    return STATUS_NOT_FOUND


def six222_decide_fast(inst, delta, rng_seed, cap_c,
                       meter: SpaceMeter | None, stats: dict,
                       attempts_cap: int,
                       shard: tuple[int, int] | None = None):
    """Compiled three-pair 6SUM: returns a witness tuple or None.

    Group lists hold pairs passing per-level digit filters (a slight
    superset of exact cascade matches); the final small 3SUM checks the
    exact target, so false positives only cost time.  Caps are enforced
    in-kernel; a fixed-list overflow reports back as a resample.
    """
    n = inst.n
    arrays = list(inst.np_arrays)
    ranges = plan_level_ranges(n * n, max(1, round(float(n) ** (2 - delta))))
    if not ranges:
        ranges = [2]
    if len(ranges) > 4:
        raise ValueError("fast lane supports at most 4 cascade levels")
    nlevels = len(ranges)
    lg = max(1, math.ceil(math.log2(max(n, 4))))
    chunk = min(n, max(1, int(round(n ** min(delta, 1.0)))) * lg)
    block_cap = max(4, math.ceil(cap_c * n ** delta))
    fixed_cap = 3 * block_cap

    b1 = [np.empty(block_cap, dtype=np.int64) for _ in range(3)]
    b2 = [np.empty(block_cap, dtype=np.int64) for _ in range(3)]
    b3 = [np.empty(fixed_cap, dtype=np.int64) for _ in range(5)]
    hx_chunk = np.empty(chunk, dtype=np.int64)
    hx_order = np.empty(chunk, dtype=np.int64)
    hx_sorted = np.empty(chunk, dtype=np.int64)
    witness = np.empty(6, dtype=np.int64)
    counters = np.zeros(4, dtype=np.int64)
    held = 3 * chunk + 6 * block_cap + 5 * fixed_cap + 16
    charge_cells(held, meter)

    ranges_arr = np.asarray(ranges, dtype=np.int64)
    pack_base = max(ranges) + 1
    R = int(np.prod(ranges_arr))
    t1_lo, t1_hi = 0, R
    if shard is not None:
        idx, cnt = shard
        t1_lo = R * idx // cnt
        t1_hi = R * (idx + 1) // cnt

    try:
        for attempt in range(attempts_cap):
            rng = rng_from(rng_seed, 0x6A2, attempt)
            mults = np.asarray(
                [rng.randrange(1, PRIME) for _ in ranges], dtype=np.uint64
            )
            status = _six222_kernel(
                arrays[0], arrays[1], arrays[2], arrays[3], arrays[4],
                arrays[5], np.int64(inst.target),
                mults, ranges_arr, np.int64(nlevels), np.int64(chunk),
                np.int64(pack_base),
                b1[0], b1[1], b1[2], b2[0], b2[1], b2[2],
                b3[0], b3[1], b3[2], b3[3], b3[4],
                hx_chunk, hx_order, hx_sorted,
                np.int64(block_cap), np.int64(fixed_cap),
                np.int64(t1_lo), np.int64(t1_hi), counters, witness,
            )
            if status == STATUS_RESAMPLE:
                stats["cascade_resamples"] = (
                    stats.get("cascade_resamples", 0) + 1
                )
                continue
            stats["targets_enumerated"] = (
                stats.get("targets_enumerated", 0) + int(counters[0])
            )
            stats["fixed_peak"] = max(
                stats.get("fixed_peak", 0), int(counters[1])
            )
            stats["top_solves"] = stats.get("top_solves", 0) + int(counters[2])
            stats["reported_tuples"] = (
                stats.get("reported_tuples", 0) + int(counters[3])
            )
            if status == STATUS_FOUND:
                return tuple(int(x) for x in witness)
            return None
        raise SolverRetryError(
            f"no balanced cascade within {attempts_cap} attempts"
        )
    finally:
        release_cells(held, meter)
