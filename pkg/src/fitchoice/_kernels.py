"""Jitted hot-loop kernels: RNG, Fenwick tree, and the growth step.

Every simulation path (single step, batched run, mini-run ensembles) goes
through the same inlined step function so their random streams are
bit-identical. All uint64 arithmetic wraps mod 2^64.
"""

import numpy as np
from numba import njit

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
REBUILD_PERIOD = 1 << 20

# counters array layout
CNT_UPDATES = 0
CNT_REBUILDS = 1
CNT_ERROR = 2

# obs array layout (incremental per-class maxima state)
OBS_M1 = 0
OBS_MLAM = 1
OBS_L1 = 2
OBS_LLAM = 3
OBS_HUB_LOW = 4
OBS_HUB_HIGH = 5

_INV_2_53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------- RNG

@njit(inline="always", cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (np.uint64(64) - k))


@njit(inline="always", cache=True)
def _mix64(z):
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


@njit(inline="always", cache=True)
def rng_next(s):
    # xoshiro256++
    r = _rotl(s[0] + s[3], np.uint64(23)) + s[0]
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], np.uint64(45))
    return r


@njit(inline="always", cache=True)
def rng_uniform(s):
    return (rng_next(s) >> np.uint64(11)) * _INV_2_53


@njit(inline="always", cache=True)
def seed_state(s, seed):
    x = np.uint64(seed)
    for i in range(4):
        x += GOLDEN_GAMMA
        s[i] = _mix64(x)


@njit(inline="always", cache=True)
def derive_seed(master_seed, replica):
    # bijective in replica for fixed master: no collisions within an ensemble
    return _mix64(np.uint64(master_seed) + (np.uint64(replica) + np.uint64(1)) * GOLDEN_GAMMA)


@njit(cache=True, nogil=True)
def uniform_fill(s, out):
    for i in range(out.shape[0]):
        out[i] = rng_uniform(s)


# ---------------------------------------------------------- Fenwick tree

@njit(inline="always", cache=True)
def fenwick_add(tree, cap, leaf_idx, delta):
    j = leaf_idx + 1
    while j <= cap:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True, nogil=True)
def fenwick_build(tree, cap, leaf, size):
    # O(cap); cap is a power of two, tree[cap] ends up holding the total
    for i in range(1, cap + 1):
        tree[i] = leaf[i - 1] if i <= size else 0.0
    for i in range(1, cap + 1):
        j = i + (i & (-i))
        if j <= cap:
            tree[j] += tree[i]


@njit(inline="always", cache=True)
def fenwick_find(tree, cap, s):
    # largest prefix with cumulative weight <= s, i.e. the leaf whose
    # cumulative interval contains s; one descent, no extra randomness
    pos = 0
    mask = cap
    while mask > 0:
        npos = pos + mask
        if npos <= cap and tree[npos] <= s:
            s -= tree[npos]
            pos = npos
        mask >>= 1
    return pos


@njit(inline="always", cache=True)
def sample_leaf(tree, cap, size, rng):
    v = fenwick_find(tree, cap, rng_uniform(rng) * tree[cap])
    if v >= size:
        v = size - 1
    return v


@njit(cache=True, nogil=True)
def sample_fill(tree, cap, size, rng, out):
    for i in range(out.shape[0]):
        out[i] = sample_leaf(tree, cap, size, rng)


@njit(cache=True, nogil=True)
def linear_scan_fill(weights, size, rng, out):
    # independent test oracle: cumulative linear scan, one uniform per draw
    total = 0.0
    for i in range(size):
        total += weights[i]
    for k in range(out.shape[0]):
        s = rng_uniform(rng) * total
        acc = 0.0
        v = size - 1
        for i in range(size):
            acc += weights[i]
            if acc > s:
                v = i
                break
        out[k] = v
    return total


# ------------------------------------------------------------ growth step

@njit(inline="always", cache=True)
def _obs_new_vertex(obs, fc, v):
    if fc == 1:
        if obs[OBS_MLAM] == 0:
            obs[OBS_MLAM] = 1
            obs[OBS_LLAM] = 1
            obs[OBS_HUB_HIGH] = v
        elif obs[OBS_MLAM] == 1:
            obs[OBS_LLAM] += 1
    else:
        if obs[OBS_M1] == 0:
            obs[OBS_M1] = 1
            obs[OBS_L1] = 1
            obs[OBS_HUB_LOW] = v
        elif obs[OBS_M1] == 1:
            obs[OBS_L1] += 1


@njit(inline="always", cache=True)
def _obs_bump(obs, fc, new_deg, v):
    if fc == 1:
        if new_deg > obs[OBS_MLAM]:
            obs[OBS_MLAM] = new_deg
            obs[OBS_LLAM] = 1
            obs[OBS_HUB_HIGH] = v
        elif new_deg == obs[OBS_MLAM]:
            obs[OBS_LLAM] += 1
            if v < obs[OBS_HUB_HIGH]:
                obs[OBS_HUB_HIGH] = v
    else:
        if new_deg > obs[OBS_M1]:
            obs[OBS_M1] = new_deg
            obs[OBS_L1] = 1
            obs[OBS_HUB_LOW] = v
        elif new_deg == obs[OBS_M1]:
            obs[OBS_L1] += 1
            if v < obs[OBS_HUB_LOW]:
                obs[OBS_HUB_LOW] = v


@njit(inline="always", cache=True)
def _refresh_rebuild(tree, leaf, cap, degrees, beta, n_vertices):
    for i in range(n_vertices):
        leaf[i] = degrees[i] + beta
    fenwick_build(tree, cap, leaf, n_vertices)


@njit(inline="always", cache=True)
def _one_step(tree, leaf, cap, degrees, fitness, parent, obs, rng, counters,
              n, d, beta, lam, p_high, sample_buf):
    # sample d vertices, pick the max of fitness*degree (reservoir tie-break),
    # attach a new vertex, maintain the index and incremental maxima
    nv = n + 1
    total = tree[cap]
    best_w = -1.0
    best_v = -1
    ties = 1
    for j in range(d):
        u = rng_uniform(rng)
        v = fenwick_find(tree, cap, u * total)
        if v >= nv:
            v = nv - 1
        sample_buf[j] = v
        w = degrees[v] * lam if fitness[v] == 1 else np.float64(degrees[v])
        if w > best_w:
            best_w = w
            best_v = v
            ties = 1
        elif w == best_w:
            ties += 1
            if rng_uniform(rng) * ties < 1.0:
                best_v = v
    fc = np.uint8(1) if rng_uniform(rng) < p_high else np.uint8(0)

    degrees[nv] = 1
    fitness[nv] = fc
    parent[nv] = best_v
    leaf[nv] = 1.0 + beta
    fenwick_add(tree, cap, nv, 1.0 + beta)
    _obs_new_vertex(obs, fc, nv)

    degrees[best_v] += 1
    leaf[best_v] += 1.0
    fenwick_add(tree, cap, best_v, 1.0)
    _obs_bump(obs, fitness[best_v], degrees[best_v], best_v)

    counters[CNT_UPDATES] += 1
    if counters[CNT_UPDATES] % REBUILD_PERIOD == 0:
        _refresh_rebuild(tree, leaf, cap, degrees, beta, nv + 1)
        counters[CNT_REBUILDS] += 1
        closed = 2.0 * (n + 1) + beta * (n + 2)
        if abs(tree[cap] - closed) > 1e-9 * closed:
            counters[CNT_ERROR] = 1
    return best_v


@njit(cache=True, nogil=True)
def advance(tree, leaf, cap, degrees, fitness, parent, obs, rng, counters,
            n_start, n_stop, d, beta, lam, p_high, sample_buf):
    """Run steps until n_stop edges; returns the edge count actually reached."""
    n = n_start
    while n < n_stop:
        _one_step(tree, leaf, cap, degrees, fitness, parent, obs,
                  rng, counters, n, d, beta, lam, p_high, sample_buf)
        n += 1
        if counters[CNT_ERROR] != 0:
            break
    return n


@njit(cache=True, nogil=True)
def mini_run_ensemble(n_runs, target_edges, d, beta, lam, p_high,
                      master_seed, fit0, fit1, out_max, out_first_target):
    """Many independent small runs; records max degree and first-step target.

    fit0/fit1 fix the two initial fitness classes; pass -1 to draw them
    i.i.d. exactly as init_state does. Replica r is seeded with
    derive_seed(master_seed, r), matching the ensemble runner.
    """
    cap = 2
    while cap < target_edges + 2:
        cap *= 2
    tree = np.zeros(cap + 1, np.float64)
    leaf = np.zeros(cap, np.float64)
    degrees = np.zeros(cap, np.int64)
    fitness = np.zeros(cap, np.uint8)
    parent = np.full(cap, -1, np.int64)
    obs = np.zeros(6, np.int64)
    counters = np.zeros(3, np.int64)
    rng = np.zeros(4, np.uint64)
    sample_buf = np.zeros(d, np.int64)
    ms = np.uint64(master_seed)

    for r in range(n_runs):
        seed_state(rng, derive_seed(ms, np.uint64(r)))
        if fit0 >= 0:
            f0 = np.uint8(fit0)
            f1 = np.uint8(fit1)
        else:
            f0 = np.uint8(1) if rng_uniform(rng) < p_high else np.uint8(0)
            f1 = np.uint8(1) if rng_uniform(rng) < p_high else np.uint8(0)
        degrees[0] = 1
        degrees[1] = 1
        fitness[0] = f0
        fitness[1] = f1
        parent[0] = -1
        parent[1] = 0
        leaf[0] = 1.0 + beta
        leaf[1] = 1.0 + beta
        fenwick_build(tree, cap, leaf, 2)
        for i in range(6):
            obs[i] = 0
        obs[OBS_HUB_LOW] = -1
        obs[OBS_HUB_HIGH] = -1
        _obs_new_vertex(obs, f0, 0)
        _obs_new_vertex(obs, f1, 1)
        counters[CNT_UPDATES] = 0
        counters[CNT_REBUILDS] = 0
        counters[CNT_ERROR] = 0

        n = 1
        while n < target_edges:
            _one_step(tree, leaf, cap, degrees, fitness, parent, obs, rng,
                      counters, n, d, beta, lam, p_high, sample_buf)
            n += 1

        m = 0
        for i in range(target_edges + 1):
            if degrees[i] > m:
                m = degrees[i]
        out_max[r] = m
        out_first_target[r] = parent[2]
