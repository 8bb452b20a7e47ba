"""Compiled kernels for tree induction, prediction, and importances.

Trees are stored as flat parallel arrays (feature == -1 marks a leaf;
child ids are tree-local).  Induction keeps one per-feature array of
sample indices presorted by feature value and stably partitions the
node's segment of every array at each split, so finding a node's best
threshold is a single linear scan instead of a sort.

Bootstrap resampling is expressed as per-row integer weights over the
original matrix; rows with weight zero ride along in the sorted index
arrays but contribute nothing to counts and produce no thresholds.

All randomness comes from an inlined splitmix64 stream.  The Python
mirror lives in rng.py; test_rng pins the two against each other.  The
per-tree consumption order is fixed (bootstrap draws, then candidate-
feature draws in depth-first preorder), which makes training
bit-reproducible regardless of thread count.
"""

import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _next_u64(state):
    state = state + _GOLDEN
    return state, _mix64(state)


@njit(cache=True)
def kernel_splitmix(state):
    """Expose one splitmix64 step for parity tests against rng.py."""
    return _next_u64(np.uint64(state))


@njit(cache=True)
def kernel_derive(master, index):
    state = np.uint64(master) + np.uint64(index) * _GOLDEN
    _, out = _next_u64(state)
    return out


@njit(cache=True, inline="always")
def _gini(nb, na):
    n = np.float64(nb + na)
    pb = nb / n
    pa = na / n
    return 1.0 - pb * pb - pa * pa


@njit(cache=True)
def _scan_feature(X, f, y, w, idx, lo, hi, nb, na, parent_g):
    """Best threshold on feature f over the node segment [lo, hi).

    Returns (found, gain, threshold, n_below_left, n_above_left).
    Thresholds are midpoints between consecutive distinct values among
    rows with positive weight; the ascending scan with a strict
    comparison keeps the lowest threshold on gain ties.
    """
    wsum = np.float64(nb + na)
    best_gain = 0.0
    best_thr = 0.0
    best_nbl = np.int64(0)
    best_nal = np.int64(0)
    found = False
    wb = np.int64(0)
    wa = np.int64(0)
    prev = 0.0
    have_prev = False
    for pos in range(lo, hi):
        i = idx[f, pos]
        if w[i] == 0:
            continue
        v = X[i, f]
        if have_prev and v != prev:
            thr = 0.5 * (prev + v)
            if thr >= v:  # adjacent floats can round the midpoint up
                thr = prev
            wl = np.float64(wb + wa)
            wr = wsum - wl
            gain = parent_g - (wl / wsum) * _gini(wb, wa) - (wr / wsum) * _gini(nb - wb, na - wa)
            if gain > best_gain:
                best_gain = gain
                best_thr = thr
                best_nbl = wb
                best_nal = wa
                found = True
        if y[i] == 0:
            wb += w[i]
        else:
            wa += w[i]
        prev = v
        have_prev = True
    return found, best_gain, best_thr, best_nbl, best_nal


@njit(cache=True)
def scan_best_split(X, y, w, sortidx, cand):
    """Exhaustive best split over the candidate features on the whole sample.

    Candidates must be sorted ascending; on gain ties the lowest feature
    index (then lowest threshold) wins.  Returns
    (feature, threshold, gain, n_below_left, n_above_left); feature is
    -1 when no split has positive gain.
    """
    n = X.shape[0]
    nb = np.int64(0)
    na = np.int64(0)
    for i in range(n):
        if y[i] == 0:
            nb += w[i]
        else:
            na += w[i]
    best_f = -1
    best_thr = 0.0
    best_gain = 0.0
    best_nbl = np.int64(0)
    best_nal = np.int64(0)
    if nb == 0 or na == 0:
        return best_f, best_thr, best_gain, best_nbl, best_nal
    parent_g = _gini(nb, na)
    for c in range(cand.shape[0]):
        f = cand[c]
        found, gain, thr, nbl, nal = _scan_feature(X, f, y, w, sortidx, 0, n, nb, na, parent_g)
        if found and gain > best_gain:
            best_f = f
            best_thr = thr
            best_gain = gain
            best_nbl = nbl
            best_nal = nal
    return best_f, best_thr, best_gain, best_nbl, best_nal


@njit(cache=True)
def _build_tree(X, y, sortidx, max_depth, min_split, max_features, bootstrap, seed,
                nf, nt, nl, nr, nnb, nna):
    """Grow one CART tree into the slab views nf/nt/nl/nr/nnb/nna.

    Returns the number of nodes written.  Nodes are processed in
    depth-first preorder (left child first), which fixes the RNG
    consumption order.
    """
    n, F = X.shape
    state = seed

    w = np.zeros(n, np.int64)
    if bootstrap:
        un = np.uint64(n)
        for _ in range(n):
            state, r = _next_u64(state)
            w[np.int64(r % un)] += 1
    else:
        for i in range(n):
            w[i] = 1

    idx = sortidx.copy()
    tmp = np.empty(n, np.int32)
    side = np.empty(n, np.uint8)
    pool = np.empty(F, np.int32)
    cand = np.empty(max_features, np.int32)
    stack = np.empty((max_depth + 2, 6), np.int64)

    nb = np.int64(0)
    na = np.int64(0)
    for i in range(n):
        if y[i] == 0:
            nb += w[i]
        else:
            na += w[i]

    n_nodes = 1
    top = 0
    stack[0, 0] = 0      # node id
    stack[0, 1] = 0      # segment lo
    stack[0, 2] = n      # segment hi
    stack[0, 3] = 0      # depth
    stack[0, 4] = nb
    stack[0, 5] = na

    while top >= 0:
        node = stack[top, 0]
        lo = stack[top, 1]
        hi = stack[top, 2]
        depth = stack[top, 3]
        nb = stack[top, 4]
        na = stack[top, 5]
        top -= 1

        wsum = nb + na
        best_f = -1
        best_thr = 0.0
        best_gain = 0.0
        best_nbl = np.int64(0)
        best_nal = np.int64(0)

        if depth < max_depth and wsum >= min_split and nb > 0 and na > 0:
            for j in range(F):
                pool[j] = j
            for j in range(max_features):
                state, r = _next_u64(state)
                pick = j + np.int64(r % np.uint64(F - j))
                t = pool[j]
                pool[j] = pool[pick]
                pool[pick] = t
            for j in range(max_features):
                cand[j] = pool[j]
            # insertion sort: candidates scanned in ascending feature order
            for j in range(1, max_features):
                key = cand[j]
                q = j - 1
                while q >= 0 and cand[q] > key:
                    cand[q + 1] = cand[q]
                    q -= 1
                cand[q + 1] = key

            parent_g = _gini(nb, na)
            for c in range(max_features):
                f = cand[c]
                found, gain, thr, nbl, nal = _scan_feature(
                    X, f, y, w, idx, lo, hi, nb, na, parent_g)
                if found and gain > best_gain:
                    best_f = f
                    best_thr = thr
                    best_gain = gain
                    best_nbl = nbl
                    best_nal = nal

        if best_f < 0:
            nf[node] = -1
            nt[node] = 0.0
            nl[node] = -1
            nr[node] = -1
            nnb[node] = nb
            nna[node] = na
            continue

        # route every row in the segment (weight-zero rows included, so
        # all feature segments stay aligned)
        nleft = 0
        for pos in range(lo, hi):
            i = idx[best_f, pos]
            if X[i, best_f] <= best_thr:
                side[i] = 1
                nleft += 1
            else:
                side[i] = 0
        mid = lo + nleft

        for g in range(F):
            nr_tmp = 0
            lw = lo
            for pos in range(lo, hi):
                i = idx[g, pos]
                if side[i] == 1:
                    idx[g, lw] = i
                    lw += 1
                else:
                    tmp[nr_tmp] = i
                    nr_tmp += 1
            for q in range(nr_tmp):
                idx[g, mid + q] = tmp[q]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        nf[node] = best_f
        nt[node] = best_thr
        nl[node] = left_id
        nr[node] = right_id
        nnb[node] = nb
        nna[node] = na

        top += 1
        stack[top, 0] = right_id
        stack[top, 1] = mid
        stack[top, 2] = hi
        stack[top, 3] = depth + 1
        stack[top, 4] = nb - best_nbl
        stack[top, 5] = na - best_nal
        top += 1
        stack[top, 0] = left_id
        stack[top, 1] = lo
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        stack[top, 4] = best_nbl
        stack[top, 5] = best_nal

    return n_nodes


@njit(cache=True, parallel=True)
def build_forest(X, y, sortidx, seeds, max_depth, min_split, max_features, bootstrap,
                 slab_f, slab_t, slab_l, slab_r, slab_nb, slab_na, counts, max_nodes):
    """Train all trees into per-tree slabs of size max_nodes (disjoint writes)."""
    T = seeds.shape[0]
    for t in prange(T):
        o = t * max_nodes
        counts[t] = _build_tree(
            X, y, sortidx, max_depth, min_split, max_features, bootstrap, seeds[t],
            slab_f[o:o + max_nodes], slab_t[o:o + max_nodes],
            slab_l[o:o + max_nodes], slab_r[o:o + max_nodes],
            slab_nb[o:o + max_nodes], slab_na[o:o + max_nodes])


@njit(cache=True, parallel=True)
def predict_forest(Xq, feat, thr, left, right, nb, na, offsets, out):
    """Mean per-tree leaf BELOW-fraction for each query row."""
    m = Xq.shape[0]
    T = offsets.shape[0] - 1
    for r in prange(m):
        acc = 0.0
        for t in range(T):
            base = offsets[t]
            j = base
            while feat[j] >= 0:
                if Xq[r, feat[j]] <= thr[j]:
                    j = base + left[j]
                else:
                    j = base + right[j]
            acc += nb[j] / np.float64(nb[j] + na[j])
        out[r] = acc / T


@njit(cache=True)
def forest_importance(feat, thr, left, right, nb, na, offsets, n_features):
    """Mean-decrease-impurity totals per feature, averaged over trees.

    Raw (unnormalized) values; the caller normalizes the vector to sum 1
    when any split exists.
    """
    T = offsets.shape[0] - 1
    imp = np.zeros(n_features, np.float64)
    for t in range(T):
        base = offsets[t]
        root_n = np.float64(nb[base] + na[base])
        for j in range(base, offsets[t + 1]):
            if feat[j] >= 0:
                li = base + left[j]
                ri = base + right[j]
                n = np.float64(nb[j] + na[j])
                n_l = np.float64(nb[li] + na[li])
                n_r = np.float64(nb[ri] + na[ri])
                delta = (_gini(nb[j], na[j])
                         - (n_l / n) * _gini(nb[li], na[li])
                         - (n_r / n) * _gini(nb[ri], na[ri]))
                imp[feat[j]] += (n / root_n) * delta
    return imp / T
