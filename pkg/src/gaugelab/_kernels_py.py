"""Pure numpy implementations of the hot loops.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same per-element summation order, so both backends agree to the
last bit on sums and to rounding on the relaxation update.
"""

import numpy as np

SUM = 0
MAX = 1


def _axis_range(n, periodic):
    """Offset range [lo, hi] along one axis that keeps each cell once."""
    if periodic:
        return -(n // 2), (n + 1) // 2 - 1
    return -(n - 1), n - 1


def _shift_last(values, k, periodic, fill):
    # value at x3 + k
    if periodic:
        return np.roll(values, -k, axis=3)
    out = np.full_like(values, fill)
    n = values.shape[3]
    if k >= 0:
        out[..., : n - k] = values[..., k:]
    else:
        out[..., -k:] = values[..., : n + k]
    return out


def line_windows(values, mmax, periodic, mode, nthreads=1):
    values = np.ascontiguousarray(values, dtype=np.float64)
    lo, hi = _axis_range(values.shape[3], periodic)
    fill = 0.0 if mode == SUM else -np.inf
    out = np.empty((mmax + 1,) + values.shape)
    out[0] = values
    for m in range(1, mmax + 1):
        acc = out[m - 1].copy()
        if m <= hi:
            right = _shift_last(values, m, periodic, fill)
            acc = acc + right if mode == SUM else np.maximum(acc, right)
        if -m >= lo:
            left = _shift_last(values, -m, periodic, fill)
            acc = acc + left if mode == SUM else np.maximum(acc, left)
        out[m] = acc
    return out


def _gather(block, t, periodic, fill):
    """block shifted so that out[x] = block[x + t] on axes 0..2."""
    if periodic:
        return np.roll(block, shift=(-t[0], -t[1], -t[2]), axis=(0, 1, 2))
    out = np.full_like(block, fill)
    dst = []
    src = []
    for ax in range(3):
        n = block.shape[ax]
        k = int(t[ax])
        if abs(k) >= n:
            return out
        if k >= 0:
            dst.append(slice(0, n - k))
            src.append(slice(k, n))
        else:
            dst.append(slice(-k, n))
            src.append(slice(0, n + k))
    out[tuple(dst)] = block[tuple(src)]
    return out


def ball_reduce(windows, triples, halfwidths, periodic, mode, nthreads=1):
    shape = windows.shape[1:]
    if mode == SUM:
        out = np.zeros(shape)
    else:
        out = np.full(shape, -np.inf)
    fill = 0.0 if mode == SUM else -np.inf
    for t, m in zip(triples, halfwidths):
        part = _gather(windows[int(m)], t, periodic, fill)
        if mode == SUM:
            out += part
        else:
            np.maximum(out, part, out=out)
    return out


# --- quaternion helpers (w, x, y, z in the last axis) ---------------------

def _qmul(a, b):
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def _qconj(a):
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def _staple_sum(links, frame):
    """W(x) = sum_mu g(x+mu) U_mu(x)^-1 + g(x-mu) U_mu(x-mu)."""
    w = np.zeros_like(frame)
    for mu in range(4):
        u = links[..., mu, :]
        fwd = _qmul(np.roll(frame, -1, axis=mu), _qconj(u))
        bwd = _qmul(np.roll(frame, 1, axis=mu), np.roll(u, 1, axis=mu))
        w = w + fwd
        w = w + bwd
    return w


def relax_sweep(links, frame, parity, omega, h2, nthreads=1):
    """Overrelaxed update of all sites with coordinate-sum parity ``parity``.

    Mutates ``frame`` in place and returns the largest local change of the
    functional (should be <= 0 up to rounding).
    """
    dims = frame.shape[:4]
    grid = np.indices(dims).sum(axis=0) % 2 == parity
    w = _staple_sum(links, frame)[grid]
    g_old = frame[grid]
    norm = np.sqrt(np.einsum("...i,...i", w, w))
    ok = norm > 0.0
    g_opt = np.where(ok[:, None], w / np.where(ok, norm, 1.0)[:, None], g_old)
    r = _qmul(g_opt, _qconj(g_old))
    vn = np.sqrt(r[:, 1] ** 2 + r[:, 2] ** 2 + r[:, 3] ** 2)
    phi = np.arctan2(vn, r[:, 0])
    scale = np.where(vn > 0.0, np.sin(omega * phi) / np.where(vn > 0.0, vn, 1.0), 0.0)
    r_pow = np.empty_like(r)
    r_pow[:, 0] = np.cos(omega * phi)
    r_pow[:, 1:] = r[:, 1:] * scale[:, None]
    g_new = _qmul(r_pow, g_old)
    g_new /= np.sqrt(np.einsum("...i,...i", g_new, g_new))[:, None]
    before = np.einsum("...i,...i", g_old, w)
    after = np.einsum("...i,...i", g_new, w)
    frame[grid] = g_new
    if before.size == 0:
        return 0.0
    return float(np.max(-2.0 * h2 * (after - before)))
