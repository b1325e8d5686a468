"""Numba fast path for batches and rollouts.

Implements exactly the draw protocol of the pure-Python reference
(``_rng`` + ``contagion`` + ``policies`` + ``engine``) on flat arrays:
same xoshiro256++ stream, same draw order, same tie-break economy.
Parity tests assert bit-identical trial outcomes between the two paths;
any change here must keep them green.

Layout: struct-of-arrays sized ``2*z_t + 4`` (a round can at most double
the materialized count before the z_t check), children as first/last/
next-sibling links so reveals walk them in creation order, the frontier
as an insertion-ordered index array.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .contagion import PointMass, UniformMin
from .policies import BuiltinPolicy

_M64 = (1 << 64) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0x243F6A8885A308D3)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)
_SH23 = np.uint64(23)
_SH41 = np.uint64(41)
_SH17 = np.uint64(17)
_SH45 = np.uint64(45)
_SH19 = np.uint64(19)
_SH11 = np.uint64(11)
_INV53 = 1.1102230246251565e-16  # 2**-53

POLICY_CODES = {
    BuiltinPolicy.ASCENDING_TIME: 0,
    BuiltinPolicy.DESCENDING_TIME: 1,
    BuiltinPolicy.DESCENDING_P: 2,
    BuiltinPolicy.DESCENDING_Q: 3,
    BuiltinPolicy.UNIFORM_RANDOM: 4,
}

CONTAINED, NOT_CONTAINED, NON_CONVERGED = 0, 1, 2


@njit(cache=True, nogil=True)
def _mix64(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _SH30)) * _MIX1
    z = (z ^ (z >> _SH27)) * _MIX2
    return state, z ^ (z >> _SH31)


@njit(cache=True, nogil=True)
def _derive2(a, b):
    h = _SEED_SALT
    _, z = _mix64(a)
    _, h = _mix64(h ^ z)
    _, z = _mix64(b)
    _, h = _mix64(h ^ z)
    return h


@njit(cache=True, nogil=True)
def _seed_into(s, seed64):
    st = seed64
    for j in range(4):
        st, z = _mix64(st)
        s[j] = z


@njit(cache=True, nogil=True)
def _rng_random(s):
    x = s[0] + s[3]
    result = ((x << _SH23) | (x >> _SH41)) + s[0]
    t = s[1] << _SH17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << _SH45) | (s[3] >> _SH19)
    return (result >> _SH11) * _INV53


@njit(cache=True, nogil=True)
def _rng_index(s, m):
    if m <= 1:
        return 0
    i = np.int64(_rng_random(s) * m)
    if i == m:
        i = m - 1
    return i


@njit(cache=True, nogil=True)
def _sample(kind, a, s):
    if kind == 0 or a >= 1.0:
        return a if kind == 0 else 1.0
    return a + (1.0 - a) * _rng_random(s)


@njit(cache=True, nogil=True)
def _round(s, dpk, dpa, dqk, dqa, tau, p, q, infected, stabilized, fc, lc, ns,
           n, t, active, total):
    t += 1
    n0 = n
    for v in range(n0):
        if infected[v] and not stabilized[v]:
            if _rng_random(s) < q[v]:
                cp = _sample(dpk, dpa, s)
                cq = _sample(dqk, dqa, s)
                ci = _rng_random(s) < p[v]
                tau[n] = t
                p[n] = cp
                q[n] = cq
                infected[n] = ci
                stabilized[n] = False
                fc[n] = -1
                lc[n] = -1
                ns[n] = -1
                if lc[v] == -1:
                    fc[v] = n
                else:
                    ns[lc[v]] = n
                lc[v] = n
                if ci:
                    active += 1
                    total += 1
                n += 1
    return n, t, active, total


@njit(cache=True, nogil=True)
def _select_time(s, ascending, frontier, fsize, tau):
    best = tau[frontier[0]]
    cnt = 1
    for i in range(1, fsize):
        v = tau[frontier[i]]
        if (ascending and v < best) or (not ascending and v > best):
            best = v
            cnt = 1
        elif v == best:
            cnt += 1
    j = _rng_index(s, cnt)
    seen = 0
    for i in range(fsize):
        if tau[frontier[i]] == best:
            if seen == j:
                return i
            seen += 1
    return fsize - 1  # unreachable


@njit(cache=True, nogil=True)
def _select_key_max(s, frontier, fsize, key):
    best = key[frontier[0]]
    cnt = 1
    for i in range(1, fsize):
        v = key[frontier[i]]
        if v > best:
            best = v
            cnt = 1
        elif v == best:
            cnt += 1
    j = _rng_index(s, cnt)
    seen = 0
    for i in range(fsize):
        if key[frontier[i]] == best:
            if seen == j:
                return i
            seen += 1
    return fsize - 1  # unreachable


@njit(cache=True, nogil=True)
def _select_pos(s, pol, frontier, fsize, tau, p, q):
    if fsize == 1:
        return 0
    if pol == 0:
        return _select_time(s, True, frontier, fsize, tau)
    if pol == 1:
        return _select_time(s, False, frontier, fsize, tau)
    if pol == 2:
        return _select_key_max(s, frontier, fsize, p)
    if pol == 3:
        return _select_key_max(s, frontier, fsize, q)
    return _rng_index(s, fsize)


@njit(cache=True, nogil=True)
def _trace_loop(s, dpk, dpa, dqk, dqa, pol, z_c, z_t,
                tau, p, q, infected, stabilized, fc, lc, ns,
                frontier, fsize, n, t, active, total, peak):
    queries = 0
    while True:
        if fsize == 0:
            return CONTAINED, t, queries, total, peak
        pos = _select_pos(s, pol, frontier, fsize, tau, p, q)
        v = frontier[pos]
        for i in range(pos, fsize - 1):
            frontier[i] = frontier[i + 1]
        fsize -= 1
        queries += 1
        if infected[v]:
            stabilized[v] = True
            active -= 1
            c = fc[v]
            while c != -1:
                frontier[fsize] = c
                fsize += 1
                c = ns[c]
        n, t, active, total = _round(
            s, dpk, dpa, dqk, dqa, tau, p, q, infected, stabilized, fc, lc, ns,
            n, t, active, total,
        )
        if active > peak:
            peak = active
        if active > z_c:
            return NOT_CONTAINED, t, queries, total, peak
        if n > z_t:
            return NON_CONVERGED, t, queries, total, peak


@njit(cache=True, nogil=True)
def _trial(s, dpk, dpa, dqk, dqa, k, pol, z_c, z_t,
           tau, p, q, infected, stabilized, fc, lc, ns, frontier):
    tau[0] = 0
    p[0] = _sample(dpk, dpa, s)
    q[0] = _sample(dqk, dqa, s)
    root_infected = _rng_random(s) < p[0]
    infected[0] = root_infected
    stabilized[0] = False
    fc[0] = -1
    lc[0] = -1
    ns[0] = -1
    n = 1
    t = 0
    active = 1 if root_infected else 0
    total = active
    peak = active
    for _ in range(k - 1):
        n, t, active, total = _round(
            s, dpk, dpa, dqk, dqa, tau, p, q, infected, stabilized, fc, lc, ns,
            n, t, active, total,
        )
        if active > peak:
            peak = active
        if active > z_c:
            return NOT_CONTAINED, t, 0, total, peak
        if n > z_t:
            return NON_CONVERGED, t, 0, total, peak
    frontier[0] = 0
    return _trace_loop(
        s, dpk, dpa, dqk, dqa, pol, z_c, z_t,
        tau, p, q, infected, stabilized, fc, lc, ns,
        frontier, 1, n, t, active, total, peak,
    )


@njit(cache=True, nogil=True)
def _batch_range(master, start, count, dpk, dpa, dqk, dqa, k, pol, z_c, z_t):
    cap = 2 * z_t + 4
    tau = np.zeros(cap, dtype=np.int64)
    p = np.zeros(cap, dtype=np.float64)
    q = np.zeros(cap, dtype=np.float64)
    infected = np.zeros(cap, dtype=np.bool_)
    stabilized = np.zeros(cap, dtype=np.bool_)
    fc = np.zeros(cap, dtype=np.int64)
    lc = np.zeros(cap, dtype=np.int64)
    ns = np.zeros(cap, dtype=np.int64)
    frontier = np.zeros(cap, dtype=np.int64)
    s = np.zeros(4, dtype=np.uint64)
    contained = 0
    not_contained = 0
    non_converged = 0
    for i in range(count):
        seed = _derive2(master, np.uint64(start + i))
        _seed_into(s, seed)
        state, _, _, _, _ = _trial(
            s, dpk, dpa, dqk, dqa, k, pol, z_c, z_t,
            tau, p, q, infected, stabilized, fc, lc, ns, frontier,
        )
        if state == CONTAINED:
            contained += 1
        elif state == NOT_CONTAINED:
            not_contained += 1
        else:
            non_converged += 1
    return contained, not_contained, non_converged


def run_batch_range(master, start, count, dpk, dpa, dqk, dqa, k, pol, z_c, z_t):
    """Trials start..start+count-1 of the batch under master. Returns counts.

    Thin wrapper that pins the master seed to uint64 before it crosses
    into jitted code; signed/unsigned mixing inside the kernel would
    silently change the stream derivation.
    """
    return _batch_range(
        np.uint64(master & _M64), start, count,
        dpk, dpa, dqk, dqa, k, pol, z_c, z_t,
    )


@njit(cache=True, nogil=True)
def rollout_mean(s, dpk, dpa, dqk, dqa, pol, z_c, z_t,
                 tau0, p0, q0, infected0, stabilized0, fc0, lc0, ns0,
                 frontier0, fsize, n, t, active, n_rollouts):
    """Mean terminal reward of continuations from a frozen mid-trial state.

    Reward +1 for containment, -1 otherwise; draws continue on stream s.
    """
    cap = tau0.shape[0]
    tau = np.zeros(cap, dtype=np.int64)
    p = np.zeros(cap, dtype=np.float64)
    q = np.zeros(cap, dtype=np.float64)
    infected = np.zeros(cap, dtype=np.bool_)
    stabilized = np.zeros(cap, dtype=np.bool_)
    fc = np.zeros(cap, dtype=np.int64)
    lc = np.zeros(cap, dtype=np.int64)
    ns = np.zeros(cap, dtype=np.int64)
    frontier = np.zeros(cap, dtype=np.int64)
    total_reward = 0.0
    for _ in range(n_rollouts):
        tau[:n] = tau0[:n]
        p[:n] = p0[:n]
        q[:n] = q0[:n]
        infected[:n] = infected0[:n]
        stabilized[:n] = stabilized0[:n]
        fc[:n] = fc0[:n]
        lc[:n] = lc0[:n]
        ns[:n] = ns0[:n]
        frontier[:fsize] = frontier0[:fsize]
        state, _, _, _, _ = _trace_loop(
            s, dpk, dpa, dqk, dqa, pol, z_c, z_t,
            tau, p, q, infected, stabilized, fc, lc, ns,
            frontier, fsize, n, t, active, 0, 0,
        )
        total_reward += 1.0 if state == CONTAINED else -1.0
    return total_reward / n_rollouts


def dist_code(dist) -> tuple[int, float]:
    if isinstance(dist, PointMass):
        return 0, dist.value
    if isinstance(dist, UniformMin):
        return 1, dist.minimum
    raise TypeError(f"unsupported distribution {dist!r}")


def batch_args(config) -> tuple:
    """Kernel argument tuple for a TrialConfig with a built-in policy."""
    dpk, dpa = dist_code(config.instance.d_p)
    dqk, dqa = dist_code(config.instance.d_q)
    pol = POLICY_CODES[config.policy]
    return (dpk, dpa, dqk, dqa, config.instance.k, pol, config.z_c, config.z_t)


def run_trial_fast(config):
    """Single trial on the kernel; used by parity tests against run_trial."""
    from .engine import TrialOutcome, TrialState

    dpk, dpa, dqk, dqa, k, pol, z_c, z_t = batch_args(config)
    cap = 2 * z_t + 4
    tau = np.zeros(cap, dtype=np.int64)
    p = np.zeros(cap, dtype=np.float64)
    q = np.zeros(cap, dtype=np.float64)
    infected = np.zeros(cap, dtype=np.bool_)
    stabilized = np.zeros(cap, dtype=np.bool_)
    fc = np.zeros(cap, dtype=np.int64)
    lc = np.zeros(cap, dtype=np.int64)
    ns = np.zeros(cap, dtype=np.int64)
    frontier = np.zeros(cap, dtype=np.int64)
    s = np.zeros(4, dtype=np.uint64)
    _seed_into(s, np.uint64(config.seed & _M64))
    state, t, queries, total, peak = _trial(
        s, dpk, dpa, dqk, dqa, k, pol, z_c, z_t,
        tau, p, q, infected, stabilized, fc, lc, ns, frontier,
    )
    states = (TrialState.CONTAINED, TrialState.NOT_CONTAINED, TrialState.NON_CONVERGED)
    return TrialOutcome(states[state], int(t), int(queries), int(total), int(peak))


def snapshot_state(tree, frontier, z_t: int):
    """Freeze a Python-side tree + frontier into kernel arrays."""
    cap = 2 * z_t + 4
    n = tree.materialized_size
    tau = np.zeros(cap, dtype=np.int64)
    p = np.zeros(cap, dtype=np.float64)
    q = np.zeros(cap, dtype=np.float64)
    infected = np.zeros(cap, dtype=np.bool_)
    stabilized = np.zeros(cap, dtype=np.bool_)
    fc = np.full(cap, -1, dtype=np.int64)
    lc = np.full(cap, -1, dtype=np.int64)
    ns = np.full(cap, -1, dtype=np.int64)
    fr = np.zeros(cap, dtype=np.int64)
    tau[:n] = tree.tau
    p[:n] = tree.p
    q[:n] = tree.q
    infected[:n] = tree.infected
    stabilized[:n] = tree.stabilized
    for v, kids in enumerate(tree.children):
        if kids:
            fc[v] = kids[0]
            lc[v] = kids[-1]
            for a, b in zip(kids, kids[1:]):
                ns[a] = b
    fsize = len(frontier)
    for i, e in enumerate(frontier.entries):
        fr[i] = e.node
    return (tau, p, q, infected, stabilized, fc, lc, ns, fr, fsize, n,
            tree.t, tree.active_infected)
