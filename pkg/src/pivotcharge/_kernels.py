"""Compiled inner loops.

These mirror the pure-Python definitions in ``model`` and ``planner`` and
exist only for speed; a stage-1 run takes 10^4-10^5 steps and
``optimize_start`` repeats it once per head. Action kinds are encoded as
``STAY = 0``, ``MOVE = 1``.
"""

import math

import numpy as np
from numba import njit

STAY = 0
MOVE = 1

_PI = math.pi
_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def wrap(a):
    if -_PI < a <= _PI:
        return a
    a = np.fmod(a + _PI, _TWO_PI)
    if a <= 0.0:
        a += _TWO_PI
    return a - _PI


@njit(cache=True)
def gain_lin(phi, gmax_db, hpbw, floor_db):
    x = 2.0 * phi / hpbw
    g = gmax_db - 3.0 * x * x
    if g < floor_db:
        g = floor_db
    return 10.0 ** (g / 10.0)


@njit(cache=True)
def _bearing(dx, dy):
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return math.atan2(dy, dx)


@njit(cache=True)
def sector_sum(ex, ey, direction, hx, hy, half, gmax_db, hpbw, floor_db, alpha, beta):
    # Cheap dot/cross prefilter, deliberately loose; survivors get the exact
    # angle test so the result matches the plain definition bit for bit.
    ux = math.cos(direction)
    uy = math.sin(direction)
    loose = half < 1.5
    slope = math.tan(half) * 1.000001 + 1e-12
    s = 0.0
    for k in range(hx.shape[0]):
        dx = hx[k] - ex
        dy = hy[k] - ey
        if loose and (dx != 0.0 or dy != 0.0):
            dot = dx * ux + dy * uy
            cross = dy * ux - dx * uy
            if dot <= 0.0 or abs(cross) > slope * dot:
                continue
        phi = wrap(_bearing(dx, dy) - direction)
        if abs(phi) <= half:
            d = math.hypot(dx, dy)
            s += gain_lin(phi, gmax_db, hpbw, floor_db) * alpha / ((d + beta) * (d + beta))
    return s


@njit(cache=True)
def _better(p, kind, direction, best, bkind, bdir):
    if p > best:
        return True
    if p == best:
        if kind < bkind:
            return True
        if kind == bkind and direction < bdir:
            return True
    return False


@njit(cache=True)
def plan(x, y, hx, hy, step_len, half, gmax_db, hpbw, floor_db, alpha, beta):
    """Greedy sector rule: argmax of sector power over Stay/Move candidates."""
    u = hx.shape[0]
    ang = np.empty(u)
    base = np.empty(u)
    for k in range(u):
        dx = hx[k] - x
        dy = hy[k] - y
        ang[k] = _bearing(dx, dy)
        d = math.hypot(dx, dy)
        base[k] = alpha / ((d + beta) * (d + beta))

    ux = np.empty(u)
    uy = np.empty(u)
    for k in range(u):
        ux[k] = math.cos(ang[k])
        uy[k] = math.sin(ang[k])
    loose = half < 1.5
    slope = math.tan(half) * 1.000001 + 1e-12

    best = -1.0
    bkind = 2
    bdir = 0.0
    # Stay candidates share the evaluation point, so reuse the geometry.
    for c in range(u):
        direction = ang[c]
        s = 0.0
        for k in range(u):
            if loose and k != c:
                dot = ux[k] * ux[c] + uy[k] * uy[c]
                cross = uy[k] * ux[c] - ux[k] * uy[c]
                if dot <= 0.0 or abs(cross) > slope * dot:
                    continue
            phi = wrap(ang[k] - direction)
            if abs(phi) <= half:
                s += gain_lin(phi, gmax_db, hpbw, floor_db) * base[k]
        if _better(s, STAY, direction, best, bkind, bdir):
            best = s
            bkind = STAY
            bdir = direction
    for c in range(u):
        direction = ang[c]
        ex = x + step_len * math.cos(direction)
        ey = y + step_len * math.sin(direction)
        s = sector_sum(ex, ey, direction, hx, hy, half, gmax_db, hpbw, floor_db, alpha, beta)
        if _better(s, MOVE, direction, best, bkind, bdir):
            best = s
            bkind = MOVE
            bdir = direction
    return bkind, bdir, best


@njit(cache=True)
def _counts(energy, et_s, node_target):
    n_at = 0
    n_over = 0
    for i in range(energy.shape[0]):
        if energy[i] >= et_s:
            n_at += 1
        if energy[i] >= node_target[i]:
            n_over += 1
    return n_at, n_over


@njit(cache=True)
def stage1(px, py, head_idx, head_target, node_target, et_s, energy, sx, sy, area,
           dt, step_len, half, gmax_db, hpbw, floor_db, alpha, beta,
           max_steps, sample_every, record):
    """Run the mobile charger until every head reaches its target.

    ``energy`` is updated in place. Returns
    ``(status, steps, x, y, clamps, series, traj)`` where status 0 means all
    heads reached target and 1 means ``max_steps`` ran out. ``series`` rows
    are ``(step, n_at_target, n_overcharged)``; ``traj`` rows are
    ``(step, x, y, bearing, kind)`` emitted for every Move step and at the
    start of every Stay run.
    """
    n = px.shape[0]
    h = head_idx.shape[0]
    under = np.zeros(h, dtype=np.bool_)
    n_under = 0
    for k in range(h):
        if energy[head_idx[k]] < head_target[k]:
            under[k] = True
            n_under += 1
    n_at, n_over = _counts(energy, et_s, node_target)
    ser = [(0, n_at, n_over)]
    traj = [(0.0, 0.0, 0.0, 0.0, 0.0)]
    traj.pop()
    hx = np.empty(h)
    hy = np.empty(h)
    p = np.empty(n)
    x = sx
    y = sy
    step = 0
    clamps = 0
    status = 0
    last_kind = -1
    last_dir = 0.0
    while n_under > 0:
        if step >= max_steps:
            status = 1
            break
        u = 0
        for k in range(h):
            if under[k]:
                hx[u] = px[head_idx[k]]
                hy[u] = py[head_idx[k]]
                u += 1
        kind, direction, _ = plan(x, y, hx[:u], hy[:u], step_len, half,
                                  gmax_db, hpbw, floor_db, alpha, beta)
        move = kind == MOVE
        nx = x
        ny = y
        if move:
            nx = x + step_len * math.cos(direction)
            ny = y + step_len * math.sin(direction)
            if nx < 0.0 or nx > area or ny < 0.0 or ny > area:
                move = False
                clamps += 1
                nx = x
                ny = y
        _beam_into(x, y, direction, px, py, gmax_db, hpbw, floor_db, alpha, beta, p)
        for i in range(n):
            p[i] = p[i] * dt
        k_now = MOVE if move else STAY
        if record and (move or k_now != last_kind or direction != last_dir):
            traj.append((float(step), x, y, direction, float(k_now)))
        last_kind = k_now
        last_dir = direction
        # A Stay decision depends only on position and the undercharged set,
        # so it repeats until some head crosses its target.
        while True:
            for i in range(n):
                energy[i] += p[i]
            crossed = False
            for k in range(h):
                if under[k] and energy[head_idx[k]] >= head_target[k]:
                    under[k] = False
                    n_under -= 1
                    crossed = True
            step += 1
            if record and step % sample_every == 0:
                n_at, n_over = _counts(energy, et_s, node_target)
                ser.append((step, n_at, n_over))
            if move or crossed or step >= max_steps:
                break
        x = nx
        y = ny
    if record:
        if ser[len(ser) - 1][0] != step:
            n_at, n_over = _counts(energy, et_s, node_target)
            ser.append((step, n_at, n_over))
        traj.append((float(step), x, y, last_dir, 2.0))

    ser_a = np.empty((len(ser), 3), dtype=np.int64)
    for i in range(len(ser)):
        ser_a[i, 0] = ser[i][0]
        ser_a[i, 1] = ser[i][1]
        ser_a[i, 2] = ser[i][2]
    traj_a = np.empty((len(traj), 5))
    for i in range(len(traj)):
        r = traj[i]
        traj_a[i, 0] = r[0]
        traj_a[i, 1] = r[1]
        traj_a[i, 2] = r[2]
        traj_a[i, 3] = r[3]
        traj_a[i, 4] = r[4]
    return status, step, x, y, clamps, ser_a, traj_a


@njit(cache=True)
def _beam_into(tx, ty, boresight, px, py, gmax_db, hpbw, floor_db, alpha, beta, out):
    # Past the angle where the quadratic lobe meets the floor the gain is
    # constant; a loose dot/cross test skips the trig for those nodes.
    ux = math.cos(boresight)
    uy = math.sin(boresight)
    g_floor = gain_lin(_PI, gmax_db, hpbw, floor_db)
    edge = 0.5 * hpbw * math.sqrt(max(gmax_db - floor_db, 0.0) / 3.0)
    cos_edge = math.cos(min(edge * 1.000001 + 1e-9, _PI))
    floor_clips = gain_lin(_PI, gmax_db, hpbw, floor_db) == 10.0 ** (floor_db / 10.0)
    for i in range(px.shape[0]):
        dx = px[i] - tx
        dy = py[i] - ty
        d = math.hypot(dx, dy)
        if floor_clips and d > 0.0 and (dx * ux + dy * uy) < cos_edge * d:
            g = g_floor
        else:
            g = gain_lin(wrap(_bearing(dx, dy) - boresight), gmax_db, hpbw, floor_db)
        out[i] = g * alpha / ((d + beta) * (d + beta))


@njit(cache=True)
def beam_powers(tx, ty, boresight, px, py, gmax_db, hpbw, floor_db, alpha, beta):
    """Received power at every node from one directional transmitter."""
    out = np.empty(px.shape[0])
    _beam_into(tx, ty, boresight, px, py, gmax_db, hpbw, floor_db, alpha, beta, out)
    return out


@njit(cache=True)
def pivot_targets(energy, cl_head, mem_ptr, mem_idx, mem_dist, policy, et_s, out):
    """Per-cluster next target (member id or -1). Policy 0 = max deficit,
    1 = fifo (lowest id), 2 = nearest to head. Ties go to the lowest id."""
    for c in range(cl_head.shape[0]):
        best = -1
        bkey = 0.0
        for j in range(mem_ptr[c], mem_ptr[c + 1]):
            m = mem_idx[j]
            if energy[m] >= et_s:
                continue
            if policy == 0:
                key = -(et_s - energy[m])
            elif policy == 1:
                key = float(m)
            else:
                key = mem_dist[j]
            if best == -1 or key < bkey or (key == bkey and m < best):
                best = m
                bkey = key
        out[c] = best


@njit(cache=True)
def pivot_step(energy, is_head, cl_head, mem_ptr, mem_idx, mem_dist, policy, et_s, reserve,
               tx_dt, dt, pcache, pslot, px, py, gmax_db, hpbw, floor_db, alpha, beta,
               targets, fracs, gains):
    """One stage-2 step of the pivot scheme; updates ``energy`` in place.

    ``pcache[j]`` caches the beam power vector for the head of member slot
    ``j`` aiming at that member (``pslot[j]`` flags it as filled). Returns
    the number of active heads.
    """
    n = energy.shape[0]
    pivot_targets(energy, cl_head, mem_ptr, mem_idx, mem_dist, policy, et_s, targets)
    for i in range(n):
        gains[i] = 0.0
    active = 0
    for c in range(cl_head.shape[0]):
        fracs[c] = 0.0
        h = cl_head[c]
        t = targets[c]
        if t < 0 or energy[h] <= reserve:
            continue
        j = mem_ptr[c]
        while mem_idx[j] != t:
            j += 1
        if not pslot[j]:
            bs = _bearing(px[t] - px[h], py[t] - py[h])
            pcache[j, :] = beam_powers(px[h], py[h], bs, px, py, gmax_db, hpbw, floor_db, alpha, beta)
            pslot[j] = True
        f = (energy[h] - reserve) / tx_dt
        if f > 1.0:
            f = 1.0
        fracs[c] = f
        active += 1
        for i in range(n):
            if not is_head[i] and energy[i] < et_s:
                gains[i] += f * pcache[j, i] * dt
    for c in range(cl_head.shape[0]):
        f = fracs[c]
        if f > 0.0:
            h = cl_head[c]
            if f < 1.0:
                energy[h] = reserve
            else:
                energy[h] -= tx_dt
    for i in range(n):
        energy[i] += gains[i]
    return active


@njit(cache=True)
def trading_step(energy, seller, seller_threshold, et_s, reserve, tx_dt, dt, omni, near,
                 fracs, gains):
    """One stage-2 step of the trading scheme; updates ``energy`` and
    ``seller`` in place. ``omni[s, i]`` is the 0 dB link power and
    ``near[s, i]`` flags i within the serve radius of s. Returns the number
    of active sellers."""
    n = energy.shape[0]
    for i in range(n):
        if not seller[i] and energy[i] >= seller_threshold:
            seller[i] = True
        elif seller[i] and energy[i] <= reserve:
            seller[i] = False
    for i in range(n):
        gains[i] = 0.0
    active = 0
    for s in range(n):
        fracs[s] = 0.0
        if not seller[s] or energy[s] <= reserve:
            continue
        busy = False
        for i in range(n):
            if near[s, i] and not seller[i] and energy[i] < et_s:
                busy = True
                break
        if not busy:
            continue
        f = (energy[s] - reserve) / tx_dt
        if f > 1.0:
            f = 1.0
        fracs[s] = f
        active += 1
        for i in range(n):
            if not seller[i] and energy[i] < et_s:
                gains[i] += f * omni[s, i] * dt
    for s in range(n):
        f = fracs[s]
        if f > 0.0:
            if f < 1.0:
                energy[s] = reserve
            else:
                energy[s] -= tx_dt
    for i in range(n):
        energy[i] += gains[i]
    return active
