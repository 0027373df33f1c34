"""Numba kernels for the cloth integrator, the pick-and-pull executor and the
triangle rasterizer.

Everything here works in place on flat float64 arrays so that a whole H-step
rollout can run without returning to the interpreter.  The Python-facing
wrappers live in ``cloth``, ``action`` and ``observe``.
"""

import math

import numpy as np
from numba import njit

# Physics scalars are passed as one float64 vector to keep signatures short.
# Order matters; ``ClothParams.as_array`` builds it.
P_N = 0
P_MASS = 1
P_K_STRUCT = 2
P_K_SHEAR = 3
P_DAMPING = 4
P_DT = 5
P_GRAVITY = 6
P_SC_RADIUS = 7
P_SC_K = 8
P_FRICTION = 9
P_STRAIN = 10
P_STRAIN_ITERS = 11
P_CONTACT = 12
P_COMPRESS = 13
P_STATIC = 14
P_SIDE = 15
N_PHYS = 16

# Executor scalars.
E_GRASP_R = 0
E_BAND = 1
E_LIFT = 2
E_DRAG = 3
E_SETTLE_TOL = 4
E_SETTLE_MAX = 5
N_EXEC = 6

LIFT_STEP = 0.01


# Self-collision uses a Verlet neighbour list.  It holds every non-adjacent
# pair closer than radius * (1 + SKIN) when last examined.  A point that has
# moved more than a third of the skin since its last scan is rescanned; that
# keeps the combined drift of any retained pair below the skin, so the list
# is always a superset of the pairs in contact.  Pairs are kept sorted, which
# makes the force summation order (and therefore the result) independent of
# the list's history.
SKIN = 0.3
PAIR_CAP = 100_000


@njit(cache=True)
def make_work(npts, n):
    ax = np.zeros(npts)
    ay = np.zeros(npts)
    az = np.zeros(npts)
    fx = np.zeros(npts)
    fy = np.zeros(npts)
    fz = np.zeros(npts)
    nx = np.zeros(npts)
    ny = np.zeros(npts)
    nz = np.zeros(npts)
    contact = np.zeros(npts)
    free = np.ones(npts)
    masks = np.ones((3, npts))
    # row 0: a spring to the +c neighbour exists (c < n-1); row 1: to the
    # -c neighbour (c > 0); row 2: always
    for i in range(npts):
        c = i % n
        if c == n - 1:
            masks[0, i] = 0.0
        if c == 0:
            masks[1, i] = 0.0
    pi = np.empty(PAIR_CAP, np.int32)
    pj = np.empty(PAIR_CAP, np.int32)
    raw_i = np.empty(PAIR_CAP, np.int32)
    raw_j = np.empty(PAIR_CAP, np.int32)
    # pair count, list valid flag, number of rescans
    meta = np.zeros(3, np.int64)
    ref = np.zeros((3, npts))
    hot = np.ones(npts, np.bool_)
    return (ax, ay, az, fx, fy, fz, nx, ny, nz, contact, free, masks, pi, pj, raw_i, raw_j, meta, ref, hot)


@njit(cache=True)
def _springs(x, y, z, ax, ay, az, fx, fy, fz, mask, off, count, rest, k, compress):
    tol = 1e-9 * rest
    kc = k * compress
    for a in range(count):
        b = a + off
        dx = x[b] - x[a]
        dy = y[b] - y[a]
        dz = z[b] - z[a]
        length = math.sqrt(dx * dx + dy * dy + dz * dz)
        e = length - rest
        kk = k if e >= 0.0 else kc
        # exact rest configurations stay exactly at rest
        e = 0.0 if abs(e) <= tol else e
        f = mask[a] * kk * e / max(length, 1e-12)
        fx[a] = f * dx
        fy[a] = f * dy
        fz[a] = f * dz
    for a in range(count):
        ax[a] += fx[a]
        ay[a] += fy[a]
        az[a] += fz[a]
    for a in range(count):
        ax[a + off] -= fx[a]
        ay[a + off] -= fy[a]
        az[a + off] -= fz[a]


@njit(cache=True)
def _limit(x, y, z, free, mask, off, count, cap):
    c2 = cap * cap
    hit = False
    for a in range(count):
        b = a + off
        dx = x[b] - x[a]
        dy = y[b] - y[a]
        dz = z[b] - z[a]
        d2 = dx * dx + dy * dy + dz * dz
        if d2 <= c2 or mask[a] == 0.0:
            continue
        wa = free[a]
        wb = free[b]
        wsum = wa + wb
        if wsum == 0.0:
            continue
        hit = True
        length = math.sqrt(d2)
        c = (length - cap) / (length * wsum)
        x[a] += wa * c * dx
        y[a] += wa * c * dy
        z[a] += wa * c * dz
        x[b] -= wb * c * dx
        y[b] -= wb * c * dy
        z[b] -= wb * c * dz
    return hit


@njit(cache=True)
def _rescan(x, y, z, n, radius, pi, pj, raw_i, raw_j, meta, ref, hot):
    """Refresh the pairs of every ``hot`` point and re-sort the list."""
    npts = x.shape[0]
    cap = pi.shape[0]
    cnt = 0
    # pairs between two cold points stay valid
    if meta[1] != 0:
        for p in range(meta[0]):
            i = pi[p]
            j = pj[p]
            if not hot[i] and not hot[j]:
                raw_i[cnt] = i
                raw_j[cnt] = j
                cnt += 1
    xmin = x.min()
    xmax = x.max()
    ymin = y.min()
    ymax = y.max()
    reach = radius * (1.0 + SKIN)
    cell = reach
    # bound the table size for pathological (flung) states
    ext = max(xmax - xmin, ymax - ymin)
    if ext / cell > 400.0:
        cell = ext / 400.0
    ncx = int((xmax - xmin) / cell) + 1
    ncy = int((ymax - ymin) / cell) + 1
    ncell = ncx * ncy
    cx = np.empty(npts, np.int64)
    cy = np.empty(npts, np.int64)
    start = np.zeros(ncell + 1, np.int64)
    for i in range(npts):
        cx[i] = min(int((x[i] - xmin) / cell), ncx - 1)
        cy[i] = min(int((y[i] - ymin) / cell), ncy - 1)
        start[cy[i] * ncx + cx[i] + 1] += 1
    for c in range(ncell):
        start[c + 1] += start[c]
    fill = start[:-1].copy()
    # cell-sorted copies keep the candidate scans contiguous
    sx = np.empty(npts)
    sy = np.empty(npts)
    sz = np.empty(npts)
    sid = np.empty(npts, np.int64)
    for i in range(npts):
        c = cy[i] * ncx + cx[i]
        q = fill[c]
        fill[c] += 1
        sx[q] = x[i]
        sy[q] = y[i]
        sz[q] = z[i]
        sid[q] = i
    r2 = reach * reach
    for i in range(npts):
        if not hot[i]:
            continue
        qx = x[i]
        qy = y[i]
        qz = z[i]
        ri = i // n
        ci = i - ri * n
        for b in range(max(cy[i] - 1, 0), min(cy[i] + 2, ncy)):
            for a in range(max(cx[i] - 1, 0), min(cx[i] + 2, ncx)):
                c = b * ncx + a
                for s in range(start[c], start[c + 1]):
                    dx = sx[s] - qx
                    dy = sy[s] - qy
                    dz = sz[s] - qz
                    if dx * dx + dy * dy + dz * dz >= r2:
                        continue
                    j = sid[s]
                    # hot-hot pairs are found from both ends; keep one
                    if j == i or (hot[j] and j < i):
                        continue
                    rj = j // n
                    if abs(rj - ri) <= 1 and abs(j - rj * n - ci) <= 1:
                        continue
                    if cnt < cap:
                        raw_i[cnt] = min(i, j)
                        raw_j[cnt] = max(i, j)
                        cnt += 1
    # order by (i, j): counting sort on i, insertion sort within each i
    head = np.zeros(npts + 1, np.int64)
    for p in range(cnt):
        head[raw_i[p] + 1] += 1
    for i in range(npts):
        head[i + 1] += head[i]
    slot = head[:-1].copy()
    for p in range(cnt):
        i = raw_i[p]
        q = slot[i]
        slot[i] += 1
        pi[q] = i
        pj[q] = raw_j[p]
    for i in range(npts):
        for q in range(head[i] + 1, head[i + 1]):
            v = pj[q]
            r = q
            while r > head[i] and pj[r - 1] > v:
                pj[r] = pj[r - 1]
                r -= 1
            pj[r] = v
    for i in range(npts):
        if hot[i]:
            ref[0, i] = x[i]
            ref[1, i] = y[i]
            ref[2, i] = z[i]
    meta[0] = cnt
    meta[1] = 1
    meta[2] += 1


@njit(cache=True)
def _self_collision(x, y, z, n, radius, kc, ax, ay, az, contact, pi, pj, raw_i, raw_j, meta, ref, hot):
    npts = x.shape[0]
    tol = SKIN * radius / 3.0
    t2 = tol * tol
    any_hot = meta[1] == 0
    for i in range(npts):
        dx = x[i] - ref[0, i]
        dy = y[i] - ref[1, i]
        dz = z[i] - ref[2, i]
        hot[i] = any_hot or dx * dx + dy * dy + dz * dz >= t2
    if not any_hot:
        for i in range(npts):
            if hot[i]:
                any_hot = True
                break
    if any_hot:
        _rescan(x, y, z, n, radius, pi, pj, raw_i, raw_j, meta, ref, hot)
    r2 = radius * radius
    for p in range(meta[0]):
        i = pi[p]
        j = pj[p]
        dx = x[j] - x[i]
        dy = y[j] - y[i]
        dz = z[j] - z[i]
        d2 = dx * dx + dy * dy + dz * dz
        if d2 >= r2:
            continue
        d = math.sqrt(d2)
        if d < 1e-12:
            # coincident points: separate vertically
            ux, uy, uz = 0.0, 0.0, 1.0
        else:
            ux, uy, uz = dx / d, dy / d, dz / d
        f = kc * (radius - d)
        ax[i] -= f * ux
        ay[i] -= f * uy
        az[i] -= f * uz
        ax[j] += f * ux
        ay[j] += f * uy
        az[j] += f * uz
        contact[i] = 1.0
        contact[j] = 1.0


@njit(cache=True)
def _step(x, y, z, px, py, pz, pinned, phys, w):
    """One position-Verlet step on split coordinates.  Returns the max
    per-point displacement."""
    ax, ay, az, fx, fy, fz, nx, ny, nz, contact, free, masks, pi, pj, raw_i, raw_j, meta, ref, hot = w
    n = int(phys[P_N])
    npts = x.shape[0]
    inv_mass = 1.0 / phys[P_MASS]
    dt2 = phys[P_DT] * phys[P_DT]
    damping = phys[P_DAMPING]
    friction = phys[P_FRICTION]
    contact_keep = phys[P_CONTACT]
    compress = phys[P_COMPRESS]
    h = phys[P_SIDE] / (n - 1)
    g = phys[P_GRAVITY]
    for i in range(npts):
        ax[i] = 0.0
        ay[i] = 0.0
        az[i] = 0.0
        contact[i] = 0.0
        free[i] = 0.0 if pinned[i] else 1.0
    kst = phys[P_K_STRUCT]
    ksh = phys[P_K_SHEAR]
    diag = h * math.sqrt(2.0)
    _springs(x, y, z, ax, ay, az, fx, fy, fz, masks[0], 1, npts - 1, h, kst, compress)
    _springs(x, y, z, ax, ay, az, fx, fy, fz, masks[2], n, npts - n, h, kst, compress)
    _springs(x, y, z, ax, ay, az, fx, fy, fz, masks[0], n + 1, npts - n - 1, diag, ksh, compress)
    _springs(x, y, z, ax, ay, az, fx, fy, fz, masks[1], n - 1, npts - n + 1, diag, ksh, compress)
    if phys[P_SC_K] > 0.0:
        _self_collision(x, y, z, n, phys[P_SC_RADIUS], phys[P_SC_K], ax, ay, az, contact, pi, pj, raw_i, raw_j, meta, ref, hot)
    for i in range(npts):
        keep = damping * (1.0 - contact[i] * (1.0 - contact_keep))
        s = free[i] * dt2 * inv_mass
        nx[i] = x[i] + free[i] * keep * (x[i] - px[i]) + s * ax[i]
        ny[i] = y[i] + free[i] * keep * (y[i] - py[i]) + s * ay[i]
        nz[i] = z[i] + free[i] * keep * (z[i] - pz[i]) + s * (az[i] - g)

    # plane and layer contact on the unconstrained update: viscous
    # retention, then Coulomb-style static friction that cancels in-plane
    # slips below ``stick``
    stick = phys[P_STATIC] * g * dt2
    for i in range(npts):
        on_plane = nz[i] <= 0.0
        if free[i] > 0.0 and (on_plane or contact[i] > 0.0):
            if on_plane:
                nz[i] = 0.0
            tx = friction * (nx[i] - x[i])
            ty = friction * (ny[i] - y[i])
            t = math.sqrt(tx * tx + ty * ty)
            if t <= stick:
                tx = 0.0
                ty = 0.0
            else:
                tx *= 1.0 - stick / t
                ty *= 1.0 - stick / t
            nx[i] = x[i] + tx
            ny[i] = y[i] + ty

    # strain limiting: cap each spring at (1 + strain) of its rest length,
    # Gauss-Seidel over the springs in topology order.  It runs after
    # friction so that its corrections are not damped away.
    lim = 1.0 + phys[P_STRAIN]
    for _ in range(int(phys[P_STRAIN_ITERS])):
        hit = _limit(nx, ny, nz, free, masks[0], 1, npts - 1, lim * h)
        hit |= _limit(nx, ny, nz, free, masks[2], n, npts - n, lim * h)
        hit |= _limit(nx, ny, nz, free, masks[0], n + 1, npts - n - 1, lim * diag)
        hit |= _limit(nx, ny, nz, free, masks[1], n - 1, npts - n + 1, lim * diag)
        if not hit:
            break

    maxd2 = 0.0
    for i in range(npts):
        if nz[i] < 0.0:
            nz[i] = 0.0
        dx = nx[i] - x[i]
        dy = ny[i] - y[i]
        dz = nz[i] - z[i]
        d2 = dx * dx + dy * dy + dz * dz
        if d2 > maxd2:
            maxd2 = d2
        px[i] = x[i]
        py[i] = y[i]
        pz[i] = z[i]
        x[i] = nx[i]
        y[i] = ny[i]
        z[i] = nz[i]
    return math.sqrt(maxd2)


@njit(cache=True)
def _split(pos):
    npts = pos.shape[0]
    x = np.empty(npts)
    y = np.empty(npts)
    z = np.empty(npts)
    for i in range(npts):
        x[i] = pos[i, 0]
        y[i] = pos[i, 1]
        z[i] = pos[i, 2]
    return x, y, z


@njit(cache=True)
def _merge(pos, x, y, z):
    for i in range(pos.shape[0]):
        pos[i, 0] = x[i]
        pos[i, 1] = y[i]
        pos[i, 2] = z[i]


@njit(cache=True)
def _settle(x, y, z, px, py, pz, pinned, phys, w, tol, max_steps):
    taken = 0
    while taken < max_steps:
        disp = _step(x, y, z, px, py, pz, pinned, phys, w)
        taken += 1
        if disp < tol:
            break
    return taken


@njit(cache=True)
def _grasp(x, y, z, gx, gy, grasp_r, band):
    npts = x.shape[0]
    r2 = grasp_r * grasp_r
    zmax = -np.inf
    for i in range(npts):
        dx = x[i] - gx
        dy = y[i] - gy
        if dx * dx + dy * dy <= r2 and z[i] > zmax:
            zmax = z[i]
    count = 0
    flags = np.zeros(npts, np.bool_)
    if zmax > -np.inf:
        for i in range(npts):
            dx = x[i] - gx
            dy = y[i] - gy
            if dx * dx + dy * dy <= r2 and z[i] >= zmax - band:
                flags[i] = True
                count += 1
    out = np.empty(count, np.int64)
    k = 0
    for i in range(npts):
        if flags[i]:
            out[k] = i
            k += 1
    return out


@njit(cache=True)
def clip_delta(x, y, dx, dy):
    """Truncate the pull so the release point stays on the unit plane."""
    # in-range deltas pass through untouched (x + dx - x can round)
    tx = x + dx
    ty = y + dy
    if tx < 0.0 or tx > 1.0:
        dx = min(max(tx, 0.0), 1.0) - x
    if ty < 0.0 or ty > 1.0:
        dy = min(max(ty, 0.0), 1.0) - y
    return dx, dy


@njit(cache=True)
def _execute(x, y, z, px, py, pz, pinned, phys, w, gx, gy, dx, dy, ex, lift_scale):
    grab = _grasp(x, y, z, gx, gy, ex[E_GRASP_R], ex[E_BAND])
    m = grab.shape[0]
    if m == 0:
        return 0, 0
    own = np.zeros(m, np.bool_)
    for k in range(m):
        i = grab[k]
        if not pinned[i]:
            own[k] = True
            pinned[i] = True
    drag = ex[E_DRAG]
    lift = ex[E_LIFT] * lift_scale
    nl = int(math.ceil(lift / LIFT_STEP - 1e-9))
    for _ in range(nl):
        for k in range(m):
            z[grab[k]] += lift / nl
        _step(x, y, z, px, py, pz, pinned, phys, w)
    dist = math.sqrt(dx * dx + dy * dy)
    nd = int(math.ceil(dist / drag - 1e-9))
    for _ in range(nd):
        for k in range(m):
            x[grab[k]] += dx / nd
            y[grab[k]] += dy / nd
        _step(x, y, z, px, py, pz, pinned, phys, w)
    for k in range(m):
        i = grab[k]
        if own[k]:
            pinned[i] = False
        px[i] = x[i]
        py[i] = y[i]
        pz[i] = z[i]
    ns = _settle(x, y, z, px, py, pz, pinned, phys, w, ex[E_SETTLE_TOL], int(ex[E_SETTLE_MAX]))
    return m, nl + nd + ns


@njit(cache=True)
def _oob(x, y, margin):
    lo = -margin
    hi = 1.0 + margin
    for i in range(x.shape[0]):
        if x[i] < lo or x[i] > hi or y[i] < lo or y[i] > hi:
            return True
    return False


# -- array-of-points entry points --------------------------------------------


@njit(cache=True)
def step(pos, prev, pinned, phys):
    """One position-Verlet step in place.  Returns the max displacement."""
    x, y, z = _split(pos)
    px, py, pz = _split(prev)
    w = make_work(pos.shape[0], int(phys[P_N]))
    d = _step(x, y, z, px, py, pz, pinned, phys, w)
    _merge(pos, x, y, z)
    _merge(prev, px, py, pz)
    return d


@njit(cache=True)
def settle(pos, prev, pinned, phys, tol, max_steps):
    x, y, z = _split(pos)
    px, py, pz = _split(prev)
    w = make_work(pos.shape[0], int(phys[P_N]))
    taken = _settle(x, y, z, px, py, pz, pinned, phys, w, tol, max_steps)
    _merge(pos, x, y, z)
    _merge(prev, px, py, pz)
    return taken


@njit(cache=True)
def grasp_set(pos, x, y, grasp_r, band):
    """Indices of the top-layer points within ``grasp_r`` of (x, y)."""
    px, py, pz = _split(pos)
    return _grasp(px, py, pz, x, y, grasp_r, band)


@njit(cache=True)
def execute(pos, prev, pinned, phys, x, y, dx, dy, ex, lift_scale):
    """Pick-and-pull in place.

    Returns the number of grasped points and the number of simulator steps.
    """
    qx, qy, qz = _split(pos)
    px, py, pz = _split(prev)
    w = make_work(pos.shape[0], int(phys[P_N]))
    r = _execute(qx, qy, qz, px, py, pz, pinned, phys, w, x, y, dx, dy, ex, lift_scale)
    _merge(pos, qx, qy, qz)
    _merge(prev, px, py, pz)
    return r


@njit(cache=True)
def out_of_bounds(pos, margin):
    lo = -margin
    hi = 1.0 + margin
    for i in range(pos.shape[0]):
        if pos[i, 0] < lo or pos[i, 0] > hi or pos[i, 1] < lo or pos[i, 1] > hi:
            return True
    return False


@njit(cache=True)
def rollout(pos, prev, pinned, phys, actions, ex, oob_margin):
    """Execute each row of ``actions`` (x, y, dx, dy) in turn, in place.

    Stops early once the cloth leaves the plane; returns the number of actions
    executed and whether the rollout ended out of bounds.
    """
    qx, qy, qz = _split(pos)
    px, py, pz = _split(prev)
    w = make_work(pos.shape[0], int(phys[P_N]))
    done = actions.shape[0]
    oob = False
    for t in range(actions.shape[0]):
        gx = actions[t, 0]
        gy = actions[t, 1]
        dx, dy = clip_delta(gx, gy, actions[t, 2], actions[t, 3])
        _execute(qx, qy, qz, px, py, pz, pinned, phys, w, gx, gy, dx, dy, ex, 1.0)
        if _oob(qx, qy, oob_margin):
            done = t + 1
            oob = True
            break
    _merge(pos, qx, qy, qz)
    _merge(prev, px, py, pz)
    return done, oob


@njit(cache=True)
def rollout_batch(pos, prev, pinned, phys, actions, ex, oob_margin):
    """Roll every candidate sequence in ``actions`` (N, H, 4) out from the same
    start.  Returns final positions (N, npts, 3), actions executed and the
    out-of-bounds flags."""
    nc = actions.shape[0]
    npts = pos.shape[0]
    out = np.empty((nc, npts, 3))
    done = np.empty(nc, np.int64)
    oob = np.zeros(nc, np.bool_)
    for k in range(nc):
        p = pos.copy()
        q = prev.copy()
        pin = pinned.copy()
        done[k], oob[k] = rollout(p, q, pin, phys, actions[k], ex, oob_margin)
        out[k] = p
    return out, done, oob


# ---------------------------------------------------------------------------
# rasterization


@njit(cache=True)
def triangles(n):
    """Two triangles per grid cell, split along the anti-diagonal.

    Vertex order is counter-clockwise for the flat reference layout, so a
    positive projected signed area means the top face is visible.
    """
    tri = np.empty((2 * (n - 1) * (n - 1), 3), np.int64)
    k = 0
    for r in range(n - 1):
        for c in range(n - 1):
            v00 = r * n + c
            v01 = r * n + c + 1
            v10 = (r + 1) * n + c
            v11 = (r + 1) * n + c + 1
            tri[k, 0] = v00
            tri[k, 1] = v01
            tri[k, 2] = v10
            tri[k + 1, 0] = v01
            tri[k + 1, 1] = v11
            tri[k + 1, 2] = v10
            k += 2
    return tri


@njit(cache=True)
def rasterize(pos, tri, width, height, ox, oy, span, zbuf, face):
    """Z-buffer the projected mesh onto a width x height grid covering the
    square [ox, ox + span] x [oy, oy + span].

    Pixel (r, c) has its center at x = ox + (c + 0.5) * span / width and
    y = oy + span - (r + 0.5) * span / height (row 0 at the far edge).  A pixel center is
    inside a triangle when all three edge functions share the triangle's sign
    (boundaries inclusive).  ``face`` receives +1 / -1 for top / bottom faces
    and stays 0 on background; ``zbuf`` holds the interpolated height.
    """
    for t in range(tri.shape[0]):
        a = tri[t, 0]
        b = tri[t, 1]
        c = tri[t, 2]
        ax, ay, az = pos[a, 0], pos[a, 1], pos[a, 2]
        bx, by, bz = pos[b, 0], pos[b, 1], pos[b, 2]
        cx, cy, cz = pos[c, 0], pos[c, 1], pos[c, 2]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        sgn = 1 if area > 0.0 else -1
        xmin = min(ax, min(bx, cx))
        xmax = max(ax, max(bx, cx))
        ymin = min(ay, min(by, cy))
        ymax = max(ay, max(by, cy))
        c0 = int(math.floor((xmin - ox) / span * width - 0.5)) - 1
        c1 = int(math.ceil((xmax - ox) / span * width - 0.5)) + 1
        r0 = int(math.floor((span + oy - ymax) / span * height - 0.5)) - 1
        r1 = int(math.ceil((span + oy - ymin) / span * height - 0.5)) + 1
        c0 = max(c0, 0)
        r0 = max(r0, 0)
        c1 = min(c1, width - 1)
        r1 = min(r1, height - 1)
        for r in range(r0, r1 + 1):
            py = oy + span - (r + 0.5) * span / height
            for cc in range(c0, c1 + 1):
                px = ox + (cc + 0.5) * span / width
                w0 = (bx - px) * (cy - py) - (by - py) * (cx - px)
                w1 = (cx - px) * (ay - py) - (cy - py) * (ax - px)
                w2 = (ax - px) * (by - py) - (ay - py) * (bx - px)
                if sgn > 0:
                    inside = w0 >= 0.0 and w1 >= 0.0 and w2 >= 0.0
                else:
                    inside = w0 <= 0.0 and w1 <= 0.0 and w2 <= 0.0
                if not inside:
                    continue
                z = (w0 * az + w1 * bz + w2 * cz) / area
                if face[r, cc] == 0 or z > zbuf[r, cc]:
                    zbuf[r, cc] = z
                    face[r, cc] = sgn


@njit(cache=True)
def coverage_count(pos, tri, g):
    zbuf = np.zeros((g, g))
    face = np.zeros((g, g), np.int8)
    rasterize(pos, tri, g, g, 0.0, 0.0, 1.0, zbuf, face)
    count = 0
    for r in range(g):
        for c in range(g):
            if face[r, c] != 0:
                count += 1
    return count
