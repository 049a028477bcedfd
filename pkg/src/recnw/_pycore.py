"""Pure-Python/numpy versions of the compiled loops in ``_core.pyx``.

Same signatures, except the kernel is passed as a :class:`~recnw.kernels.Kernel`
rather than an integer code, so custom kernels work here too.
"""

import numpy as np


def stream_update(grid, xs, ys, inv_g, n0, alpha, kernel,
                  H, G, Hp, Gp, C=None, Cp=None):
    n = int(n0)
    has_c = C is not None
    K, Kp = kernel.pdf, kernel.deriv
    for s in range(len(xs)):
        n += 1
        h = float(n) ** -alpha
        ih = 1.0 / h
        ih2 = ih * ih
        r = (n - 1) / n
        w = 1.0 / n
        x = xs[s]
        y = ys[s]
        u = (grid - x) / h
        if kernel.compact:
            inside = np.abs(u) < 1.0
            if not inside.all():
                outside = ~inside
                for arr in (H, G, Hp, Gp) + ((C, Cp) if has_c else ()):
                    arr[outside] = r * arr[outside]
                idx = np.flatnonzero(inside)
                if idx.size == 0:
                    continue
                u = u[idx]
            else:
                idx = slice(None)
        else:
            idx = slice(None)
        kw = K(u) * ih
        kpw = Kp(u) * ih2
        H[idx] = r * H[idx] + w * (y * kw)
        G[idx] = r * G[idx] + w * kw
        Hp[idx] = r * Hp[idx] + w * (y * kpw)
        Gp[idx] = r * Gp[idx] + w * kpw
        if has_c:
            yg = y * inv_g[s]
            C[idx] = r * C[idx] + w * (yg * kw)
            Cp[idx] = r * Cp[idx] + w * (yg * kpw)
    return n


def loo_sums(xs, ys, alpha, kernel, eval_idx):
    n = len(xs)
    hs = np.empty(n)
    hs[1:] = np.arange(1, n, dtype=float) ** -alpha
    out = np.zeros((len(eval_idx), 4))
    pos = np.arange(n)
    for a, k in enumerate(eval_idx):
        k = int(k)
        # records after k shift down one bandwidth slot
        h = np.concatenate((hs[pos[:k] + 1], hs[pos[k + 1:]]))
        xo = np.concatenate((xs[:k], xs[k + 1:]))
        yo = np.concatenate((ys[:k], ys[k + 1:]))
        u = (xs[k] - xo) / h
        kw = kernel.pdf(u) / h
        kpw = kernel.deriv(u) / (h * h)
        out[a] = (np.sum(yo * kw), np.sum(kw), np.sum(yo * kpw), np.sum(kpw))
    return out / (n - 1)
