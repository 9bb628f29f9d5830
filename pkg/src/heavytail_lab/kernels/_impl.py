"""Hot inner loops, written as plain array code so they can run jitted or not.

Every function here is deterministic: any randomness is pre-drawn by the
caller (numpy Generator) and passed in as arrays. This keeps results
byte-identical between the numba path and the fallback path.
"""

import numpy as np


def union_find_labels(n, eu, ev):
    """Connected-component labels from an edge list (self-loops allowed).

    Returns int64 labels; label values are root indices, not canonical.
    """
    parent = np.arange(n, dtype=np.int64)
    for k in range(eu.shape[0]):
        a = eu[k]
        b = ev[k]
        # find roots with path halving
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        # path compression
        j = i
        while parent[j] != r:
            nxt = parent[j]
            parent[j] = r
            j = nxt
    return parent


def bfs_distances(indptr, indices, source):
    """Unweighted single-source BFS distances; -1 for unreachable."""
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = du + 1
                queue[tail] = v
                tail += 1
    return dist


def component_pair_stats(indptr, indices, nodes, weights):
    """All-source BFS over one component.

    Returns (sum over ordered pairs (s,t) of w_s*w_t*d(s,t), diameter).
    Quadratic in the component size; callers gate on a cutoff.
    """
    n = indptr.shape[0] - 1
    m = nodes.shape[0]
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.empty(m, dtype=np.int64)
    total = 0.0
    diam = 0
    for si in range(m):
        s = nodes[si]
        for ri in range(m):
            dist[nodes[ri]] = -1
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        acc = 0.0
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            if du > diam:
                diam = du
            acc += weights[u] * du
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if dist[v] < 0:
                    dist[v] = du + 1
                    queue[tail] = v
                    tail += 1
        total += weights[s] * acc
    return total, diam


def pair_half_edges_sequential(l_total, n_events, u_init, u_part):
    """Sequential uniform pairing of half-edges 0..l_total-1.

    Event k removes a uniform initiator among the alive set and a uniform
    partner among the rest, mirroring unit-rate clocks on every half-edge.
    Returns (initiator, partner) half-edge ids per event.
    """
    alive = np.arange(l_total, dtype=np.int64)
    he_a = np.empty(n_events, dtype=np.int64)
    he_b = np.empty(n_events, dtype=np.int64)
    size = l_total
    for k in range(n_events):
        i = int(u_init[k] * size)
        if i >= size:
            i = size - 1
        e = alive[i]
        alive[i] = alive[size - 1]
        size -= 1
        j = int(u_part[k] * size)
        if j >= size:
            j = size - 1
        f = alive[j]
        alive[j] = alive[size - 1]
        size -= 1
        he_a[k] = e
        he_b[k] = f
    return he_a, he_b


def tracker_curves(d, ev_u, ev_v, events_before_grid):
    """Evaluate s1, s2, s_{d,omega} at grid times.

    ev_u/ev_v are per-event endpoint vertices in time order;
    events_before_grid[g] counts events with time <= grid[g].
    """
    n = d.shape[0]
    omega = d.astype(np.float64).copy()
    s1 = 0.0
    s2 = 0.0
    sdw = 0.0
    for i in range(n):
        s1 += omega[i]
        s2 += omega[i] * omega[i]
        sdw += d[i] * omega[i]
    g_count = events_before_grid.shape[0]
    out_s1 = np.empty(g_count, dtype=np.float64)
    out_s2 = np.empty(g_count, dtype=np.float64)
    out_sdw = np.empty(g_count, dtype=np.float64)
    k = 0
    for g in range(g_count):
        target = events_before_grid[g]
        while k < target:
            u = ev_u[k]
            v = ev_v[k]
            s1 -= 2.0
            if u == v:
                s2 += -4.0 * omega[u] + 4.0
                sdw -= 2.0 * d[u]
                omega[u] -= 2.0
            else:
                s2 += -2.0 * omega[u] - 2.0 * omega[v] + 2.0
                sdw -= d[u] + d[v]
                omega[u] -= 1.0
                omega[v] -= 1.0
            k += 1
        out_s1[g] = s1
        out_s2[g] = s2
        out_sdw[g] = sdw
    return out_s1, out_s2, out_sdw


def explore_walk_kernel(d, offs, mate, u_part, u_start, start_mode, start_vertex):
    """Breadth-first half-edge exploration over every component.

    d: per-vertex degrees; offs: half-edge offsets per vertex (len n+1);
    mate: fixed pairing per half-edge (replay mode) or all -1 (on-the-fly
    uniform pairing using u_part); u_start: uniforms for component starts;
    start_mode: 0 = size-biased first start, 1 = fixed start_vertex.

    Active discipline: FIFO across vertices, LIFO within a vertex.
    Returns arrays (steps, comp_bounds, surplus_steps, disc_vertices,
    comp_vertex_bounds, eu, ev, comp_weight_slots) sized by actual counts.
    """
    n = d.shape[0]
    l_total = offs[n]
    n_edges_max = l_total // 2
    he_dead = np.zeros(l_total, dtype=np.bool_)
    # swap-remove pool of unpaired half-edges (for uniform partner draws)
    pool = np.arange(l_total, dtype=np.int64)
    pos = np.arange(l_total, dtype=np.int64)
    pool_size = l_total

    he_vertex = np.empty(l_total, dtype=np.int64)
    for v in range(n):
        for h in range(offs[v], offs[v + 1]):
            he_vertex[h] = v

    discovered = np.zeros(n, dtype=np.bool_)
    vqueue = np.empty(n, dtype=np.int64)  # FIFO of discovered vertices
    steps = np.empty(n_edges_max + n + 1, dtype=np.int64)
    comp_start = np.empty(n + 1, dtype=np.int64)  # index into steps
    comp_vstart = np.empty(n + 1, dtype=np.int64)  # index into disc order
    surplus_steps = np.empty(n_edges_max, dtype=np.int64)
    disc = np.empty(n, dtype=np.int64)
    eu = np.empty(n_edges_max, dtype=np.int64)
    ev = np.empty(n_edges_max, dtype=np.int64)

    step_i = 0
    n_sur = 0
    n_comp = 0
    n_disc = 0
    n_e = 0
    u_part_i = 0
    u_start_i = 0
    on_the_fly = mate[0] == -2  # sentinel set by caller for on-the-fly mode

    while pool_size > 0:
        # choose component start: a uniform unpaired half-edge is
        # degree-biased on undiscovered vertices (all unpaired are neutral)
        if n_comp == 0 and start_mode == 1:
            v0 = start_vertex
        else:
            idx = int(u_start[u_start_i] * pool_size)
            if idx >= pool_size:
                idx = pool_size - 1
            u_start_i += 1
            v0 = he_vertex[pool[idx]]
        comp_start[n_comp] = step_i
        comp_vstart[n_comp] = n_disc
        n_comp += 1
        discovered[v0] = True
        disc[n_disc] = v0
        n_disc += 1
        qh = 0
        qt = 0
        vqueue[qt] = v0
        qt += 1
        s_val = d[v0]
        steps[step_i] = s_val
        step_i += 1
        while qh < qt:
            v = vqueue[qh]
            # LIFO within vertex: scan own half-edges from the last slot
            h = offs[v + 1] - 1
            advanced = False
            while h >= offs[v]:
                if not he_dead[h]:
                    advanced = True
                    break
                h -= 1
            if not advanced:
                qh += 1
                continue
            e = h
            # remove e from the pool
            pe = pos[e]
            last = pool[pool_size - 1]
            pool[pe] = last
            pos[last] = pe
            pool_size -= 1
            he_dead[e] = True
            # partner: fixed mate or uniform among remaining unpaired
            if on_the_fly:
                j = int(u_part[u_part_i] * pool_size)
                if j >= pool_size:
                    j = pool_size - 1
                u_part_i += 1
                f = pool[j]
            else:
                f = mate[e]
                j = pos[f]
            lastf = pool[pool_size - 1]
            pool[j] = lastf
            pos[lastf] = j
            pool_size -= 1
            he_dead[f] = True
            w = he_vertex[f]
            eu[n_e] = v
            ev[n_e] = w
            n_e += 1
            if discovered[w]:
                s_val -= 2
                surplus_steps[n_sur] = step_i
                n_sur += 1
            else:
                discovered[w] = True
                disc[n_disc] = w
                n_disc += 1
                vqueue[qt] = w
                qt += 1
                s_val += d[w] - 2
            steps[step_i] = s_val
            step_i += 1

    # isolated (degree-0) vertices become trailing singleton components
    for v in range(n):
        if not discovered[v]:
            comp_start[n_comp] = step_i
            comp_vstart[n_comp] = n_disc
            n_comp += 1
            disc[n_disc] = v
            n_disc += 1
            steps[step_i] = 0
            step_i += 1
    comp_start[n_comp] = step_i
    comp_vstart[n_comp] = n_disc

    return (
        steps[:step_i],
        comp_start[: n_comp + 1],
        comp_vstart[: n_comp + 1],
        surplus_steps[:n_sur],
        disc[:n_disc],
        eu[:n_e],
        ev[:n_e],
    )


def birthday_tree(p_cum, us, parent_out):
    """Birthday-construction tree from pre-drawn uniforms.

    Draws labels via searchsorted on the cdf until all m labels are seen.
    Returns (root, draws_used) or (-1, draws_used) if us was exhausted.
    parent_out must be length m, gets -1 at the root.
    """
    m = p_cum.shape[0]
    for i in range(m):
        parent_out[i] = -2  # unseen marker
    n_us = us.shape[0]
    if n_us == 0:
        return -1, 0
    root = np.searchsorted(p_cum, us[0])
    parent_out[root] = -1
    seen = 1
    prev = root
    k = 1
    while seen < m:
        if k >= n_us:
            return -1, k
        y = np.searchsorted(p_cum, us[k])
        k += 1
        if parent_out[y] == -2:
            parent_out[y] = prev
            seen += 1
        prev = y
    return root, k


def birthday_tree_codes(p_cum, us, codes_out):
    """Batch birthday trees encoded as base-(m+1) parent codes.

    Fills codes_out while uniforms last. Returns (n_trees, resume_at):
    resume_at points at the first draw of the first incomplete tree, so a
    caller can extend the uniform buffer and continue with the exact law.
    code = sum over v of (parent[v]+1) * (m+1)^v with root parent -1 -> 0.
    """
    m = p_cum.shape[0]
    parent = np.empty(m, dtype=np.int64)
    n_us = us.shape[0]
    k = 0
    t = 0
    while t < codes_out.shape[0]:
        k0 = k
        if k >= n_us:
            break
        root = np.searchsorted(p_cum, us[k])
        k += 1
        for i in range(m):
            parent[i] = -2
        parent[root] = -1
        seen = 1
        prev = root
        ok = True
        while seen < m:
            if k >= n_us:
                ok = False
                break
            y = np.searchsorted(p_cum, us[k])
            k += 1
            if parent[y] == -2:
                parent[y] = prev
                seen += 1
            prev = y
        if not ok:
            return t, k0
        code = 0
        base = 1
        for v in range(m):
            code += (parent[v] + 1) * base
            base *= m + 1
        codes_out[t] = code
        t += 1
    return t, k


def annotate_arrays(p, a, dfs_order, dfs_pos, parent, child_flat, child_indptr):
    """Permitted-mass annotation of an ordered rooted tree.

    A[v] = total p-mass of right-children of the root-to-v path.
    Returns (A, Lambda, logL). Single DFS pass, O(m + edges).
    """
    m = p.shape[0]
    A = np.zeros(m, dtype=np.float64)
    # iterative DFS carrying the running right-sibling mass
    # right_tail[u] at child position c = sum of p over children after c
    stack_v = np.empty(m + 1, dtype=np.int64)
    stack_c = np.empty(m + 1, dtype=np.int64)
    stack_add = np.empty(m + 1, dtype=np.float64)
    root = dfs_order[0]
    # suffix sums of child masses per vertex
    suffix = np.zeros(child_flat.shape[0] + 1, dtype=np.float64)
    for u in range(m):
        lo = child_indptr[u]
        hi = child_indptr[u + 1]
        acc = 0.0
        for c in range(hi - 1, lo - 1, -1):
            acc += p[child_flat[c]]
            suffix[c] = acc
    top = 0
    stack_v[0] = root
    stack_c[0] = child_indptr[root]
    stack_add[0] = 0.0
    running = 0.0
    A[root] = 0.0
    while top >= 0:
        v = stack_v[top]
        ci = stack_c[top]
        if ci < child_indptr[v + 1]:
            stack_c[top] += 1
            w = child_flat[ci]
            add = suffix[ci + 1] if ci + 1 < child_indptr[v + 1] else 0.0
            running += add
            A[w] = running
            top += 1
            stack_v[top] = w
            stack_c[top] = child_indptr[w]
            stack_add[top] = add
        else:
            running -= stack_add[top]
            top -= 1
    for v in range(m):
        if A[v] < 0.0:  # float cancellation in the running sum
            A[v] = 0.0
    lam = 0.0
    for v in range(m):
        lam += p[v] * A[v]
    lam *= a
    # log of prod over tree edges of (exp(a p_k p_l) - 1) / (a p_k p_l)
    log_edges = 0.0
    for u in range(m):
        for c in range(child_indptr[u], child_indptr[u + 1]):
            x = a * p[u] * p[child_flat[c]]
            if x > 1e-8:
                log_edges += np.log(np.expm1(x) / x)
            else:
                log_edges += x / 2.0 - x * x / 24.0
    return A, lam, lam + log_edges


def thin_original_edges(he_a, he_b):
    """Flags events whose both half-edges are unused by earlier flagged events."""
    n = he_a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.bool_)
    hmax = 0
    for k in range(n):
        if he_a[k] > hmax:
            hmax = he_a[k]
        if he_b[k] > hmax:
            hmax = he_b[k]
    used = np.zeros(hmax + 1, dtype=np.bool_)
    flag = np.zeros(n, dtype=np.bool_)
    for k in range(n):
        e = he_a[k]
        f = he_b[k]
        if not used[e] and not used[f]:
            flag[k] = True
            used[e] = True
            used[f] = True
    return flag
