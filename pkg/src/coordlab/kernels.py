"""
Hot numeric kernels.

Every kernel exists twice: an explicit-loop version compiled with numba and a
vectorized numpy version.  The public names (``objective_grad``,
``solve_start``, ``grid_search``, ``sequence_table``) are bound to the numba
versions unless ``COORDLAB_NO_NUMBA=1``.

Rate problem shared by the remote and direct solvers
----------------------------------------------------
``s[a, z]`` is the source joint between the "target side" variable ``A`` and
the observation ``Z`` (``A = X`` for remote synthesis, ``A = Z`` for direct
synthesis), ``q[a, y]`` the target joint.  The decision variables are the
channels ``W|Z`` (``nz x nw``) and ``Y|W`` (``nw x ny``), each row a softmax of
free logits packed into ``theta``.  The penalized objective is::

    smax_beta(I(Z;W), I(A,Y;W) - rc) + <lam, r> + mu/2 |r|^2,   r = p_AY - q
"""

import numpy as np

from ._jit import JIT_ENABLED, njit

LOG2E = 1.4426950408889634
TINY = 1e-300


# ----------------------------------------------------------------------------
# objective + gradient
# ----------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _softmax_rows_loops(logits):
    out = np.empty_like(logits)
    for i in range(logits.shape[0]):
        m = logits[i, 0]
        for j in range(1, logits.shape[1]):
            if logits[i, j] > m:
                m = logits[i, j]
        tot = 0.0
        for j in range(logits.shape[1]):
            out[i, j] = np.exp(logits[i, j] - m)
            tot += out[i, j]
        for j in range(logits.shape[1]):
            out[i, j] /= tot
    return out


@njit(cache=True, nogil=True)
def _smooth_max(a, b, beta):
    # returns value and the weight on ``a``
    if a >= b:
        e = np.exp(-beta * (a - b))
        return a + np.log1p(e) / beta, 1.0 / (1.0 + e)
    e = np.exp(-beta * (b - a))
    return b + np.log1p(e) / beta, e / (1.0 + e)


@njit(cache=True, nogil=True)
def _objective_grad_loops(theta, s, q, rc, beta, mu, lam, nw):
    na, nz = s.shape
    ny = q.shape[1]
    A = _softmax_rows_loops(theta[: nz * nw].reshape(nz, nw))
    B = _softmax_rows_loops(theta[nz * nw :].reshape(nw, ny))

    pz = np.zeros(nz)
    for a in range(na):
        for z in range(nz):
            pz[z] += s[a, z]
    pw = np.zeros(nw)
    for z in range(nz):
        for w in range(nw):
            pw[w] += pz[z] * A[z, w]
    paw = np.zeros((na, nw))
    for a in range(na):
        for z in range(nz):
            if s[a, z] > 0.0:
                for w in range(nw):
                    paw[a, w] += s[a, z] * A[z, w]
    pay = np.zeros((na, ny))
    for a in range(na):
        for w in range(nw):
            for y in range(ny):
                pay[a, y] += paw[a, w] * B[w, y]

    izw = 0.0
    gzw = np.zeros((nz, nw))
    for z in range(nz):
        for w in range(nw):
            ratio = max(A[z, w], TINY) / max(pw[w], TINY)
            lr = np.log(ratio) * LOG2E
            gzw[z, w] = pz[z] * lr
            if pz[z] * A[z, w] > 0.0:
                izw += pz[z] * A[z, w] * lr

    iayw = 0.0
    G = np.zeros((na, ny, nw))
    for a in range(na):
        for y in range(ny):
            for w in range(nw):
                t = paw[a, w] * B[w, y]
                lr = np.log(max(t, TINY) / max(pay[a, y] * pw[w], TINY)) * LOG2E
                G[a, y, w] = lr
                if t > 0.0:
                    iayw += t * lr

    f, w1 = _smooth_max(izw, iayw - rc, beta)
    w2 = 1.0 - w1
    pen = 0.0
    L = np.empty((na, ny))
    for a in range(na):
        for y in range(ny):
            r = pay[a, y] - q[a, y]
            pen += lam[a, y] * r + 0.5 * mu * r * r
            L[a, y] = lam[a, y] + mu * r

    gA = np.empty((nz, nw))
    for z in range(nz):
        for w in range(nw):
            acc = w1 * gzw[z, w]
            for a in range(na):
                if s[a, z] > 0.0:
                    for y in range(ny):
                        acc += (w2 * G[a, y, w] + L[a, y]) * s[a, z] * B[w, y]
            gA[z, w] = acc
    gB = np.empty((nw, ny))
    for w in range(nw):
        for y in range(ny):
            acc = 0.0
            for a in range(na):
                acc += (w2 * G[a, y, w] + L[a, y]) * paw[a, w]
            gB[w, y] = acc

    grad = np.empty(theta.shape[0])
    for z in range(nz):
        dot = 0.0
        for w in range(nw):
            dot += A[z, w] * gA[z, w]
        for w in range(nw):
            grad[z * nw + w] = A[z, w] * (gA[z, w] - dot)
    off = nz * nw
    for w in range(nw):
        dot = 0.0
        for y in range(ny):
            dot += B[w, y] * gB[w, y]
        for y in range(ny):
            grad[off + w * ny + y] = B[w, y] * (gB[w, y] - dot)
    return f + pen, grad, izw, iayw


def _softmax_rows_numpy(logits):
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _objective_grad_numpy(theta, s, q, rc, beta, mu, lam, nw):
    nz = s.shape[1]
    ny = q.shape[1]
    A = _softmax_rows_numpy(theta[: nz * nw].reshape(nz, nw))
    B = _softmax_rows_numpy(theta[nz * nw :].reshape(nw, ny))
    pz = s.sum(axis=0)
    pw = pz @ A
    paw = s @ A
    pay = paw @ B

    lr_zw = np.log2(np.maximum(A, TINY) / np.maximum(pw, TINY)[None, :])
    pzw = pz[:, None] * A
    izw = float(np.where(pzw > 0.0, pzw * lr_zw, 0.0).sum())
    gzw = pz[:, None] * lr_zw

    T = paw[:, None, :] * B.T[None, :, :]  # (a, y, w)
    G = np.log2(np.maximum(T, TINY) / np.maximum(pay[:, :, None] * pw[None, None, :], TINY))
    iayw = float(np.where(T > 0.0, T * G, 0.0).sum())

    f, w1 = _smooth_max(izw, iayw - rc, beta)
    w2 = 1.0 - w1
    r = pay - q
    pen = float((lam * r).sum() + 0.5 * mu * (r * r).sum())
    H = w2 * G + (lam + mu * r)[:, :, None]  # (a, y, w)

    gA = w1 * gzw + np.einsum("ayw,az,wy->zw", H, s, B)
    gB = np.einsum("ayw,aw->wy", H, paw)
    gthA = A * (gA - (A * gA).sum(axis=1, keepdims=True))
    gthB = B * (gB - (B * gB).sum(axis=1, keepdims=True))
    return f + pen, np.concatenate([gthA.ravel(), gthB.ravel()]), izw, iayw


# ----------------------------------------------------------------------------
# single-start solver: augmented-Lagrangian penalty rounds, L-BFGS inner loop
# ----------------------------------------------------------------------------

if JIT_ENABLED:
    objective_grad = _objective_grad_loops
    softmax_rows = _softmax_rows_loops
else:
    objective_grad = _objective_grad_numpy
    softmax_rows = _softmax_rows_numpy


@njit(cache=True, nogil=True)
def lbfgs(theta, s, q, rc, beta, mu, lam, nw, max_iter, gtol, memory):
    d = theta.shape[0]
    S = np.zeros((memory, d))
    Yh = np.zeros((memory, d))
    rho = np.zeros(memory)
    alpha = np.zeros(memory)
    f, g, _, _ = objective_grad(theta, s, q, rc, beta, mu, lam, nw)
    count = 0
    head = 0
    for _ in range(max_iter):
        gnorm = np.sqrt(np.dot(g, g))
        if gnorm < gtol:
            break
        p = -g.copy()
        for k in range(count):
            i = (head - 1 - k + memory) % memory
            alpha[i] = rho[i] * np.dot(S[i], p)
            p -= alpha[i] * Yh[i]
        if count > 0:
            i = (head - 1 + memory) % memory
            p *= np.dot(S[i], Yh[i]) / np.dot(Yh[i], Yh[i])
        else:
            p *= min(1.0, 1.0 / gnorm)
        for k in range(count - 1, -1, -1):
            i = (head - 1 - k + memory) % memory
            b = rho[i] * np.dot(Yh[i], p)
            p += S[i] * (alpha[i] - b)
        slope = np.dot(g, p)
        if slope >= 0.0:
            # not a descent direction: drop the curvature memory
            count = 0
            p = -g * min(1.0, 1.0 / gnorm)
            slope = np.dot(g, p)
        # large logit jumps saturate the softmax and freeze the gradient
        pmax = np.max(np.abs(p))
        step = min(1.0, 2.0 / pmax) if pmax > 0.0 else 1.0
        accepted = False
        cand = theta
        fc = f
        gc = g
        for _ls in range(50):
            cand = theta + step * p
            fc, gc, _, _ = objective_grad(cand, s, q, rc, beta, mu, lam, nw)
            if fc <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        sv = cand - theta
        yv = gc - g
        sy = np.dot(sv, yv)
        if sy > 1e-16:
            S[head] = sv
            Yh[head] = yv
            rho[head] = 1.0 / sy
            head = (head + 1) % memory
            count = min(count + 1, memory)
        stalled = abs(f - fc) <= 1e-15 * max(1.0, abs(f))
        theta = cand
        f = fc
        g = gc
        if stalled:
            break
    return theta


@njit(cache=True, nogil=True)
def solve_start(theta0, s, q, rc, nw, mu0, mu_growth, rounds, beta0, beta_max, inner_iters, gtol, kicks, kick_tol):
    """Run the penalty schedule from one starting point; returns final logits.

    ``kicks[k]`` is added to the logits before round ``k`` whenever the
    marginal TV is still above ``kick_tol``.  Near-product targets otherwise
    stall at the saddle where ``W`` is independent of everything.
    """
    nz = s.shape[1]
    ny = q.shape[1]
    theta = theta0.copy()
    lam = np.zeros((s.shape[0], ny))
    mu = mu0
    beta = beta0
    for k in range(rounds):
        if k > 0 and k < kicks.shape[0]:
            A = softmax_rows(theta[: nz * nw].reshape(nz, nw))
            B = softmax_rows(theta[nz * nw :].reshape(nw, ny))
            if 0.5 * np.abs((s @ A) @ B - q).sum() > kick_tol:
                theta = theta + kicks[k]
        theta = lbfgs(theta, s, q, rc, beta, mu, lam, nw, inner_iters, gtol, 8)
        A = softmax_rows(theta[: nz * nw].reshape(nz, nw))
        B = softmax_rows(theta[nz * nw :].reshape(nw, ny))
        pay = (s @ A) @ B
        lam = lam + mu * (pay - q)
        mu *= mu_growth
        beta = min(beta * 2.0, beta_max)
    return theta


# ----------------------------------------------------------------------------
# brute-force grid oracle over binary alphabets
# ----------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _grid_search_loops(s, q, rc, rows_a, bvals, tol):
    na, nz = s.shape
    ny = q.shape[1]
    nw = rows_a.shape[1]
    ng = rows_a.shape[0]
    nb = bvals.shape[0]
    ncomb = nb**nw
    best = np.inf
    kept = 0
    pz = np.zeros(nz)
    for a in range(na):
        for z in range(nz):
            pz[z] += s[a, z]
    A = np.empty((nz, nw))
    B = np.empty((nw, ny))
    idx = np.zeros(nz, dtype=np.int64)
    total_a = ng**nz
    for code_a in range(total_a):
        c = code_a
        for z in range(nz - 1, -1, -1):
            idx[z] = c % ng
            c //= ng
        for z in range(nz):
            for w in range(nw):
                A[z, w] = rows_a[idx[z], w]
        pw = np.zeros(nw)
        for z in range(nz):
            for w in range(nw):
                pw[w] += pz[z] * A[z, w]
        izw = 0.0
        for z in range(nz):
            for w in range(nw):
                m = pz[z] * A[z, w]
                if m > 0.0:
                    izw += m * np.log2(A[z, w] / pw[w])
        paw = np.zeros((na, nw))
        for a in range(na):
            for z in range(nz):
                for w in range(nw):
                    paw[a, w] += s[a, z] * A[z, w]
        for code_b in range(ncomb):
            c = code_b
            for w in range(nw - 1, -1, -1):
                b1 = bvals[c % nb]
                c //= nb
                B[w, 0] = 1.0 - b1
                B[w, 1] = b1
            tv = 0.0
            pay = np.zeros((na, ny))
            for a in range(na):
                for y in range(ny):
                    acc = 0.0
                    for w in range(nw):
                        acc += paw[a, w] * B[w, y]
                    pay[a, y] = acc
                    tv += abs(acc - q[a, y])
            if 0.5 * tv > tol:
                continue
            kept += 1
            iayw = 0.0
            for a in range(na):
                for y in range(ny):
                    for w in range(nw):
                        t = paw[a, w] * B[w, y]
                        if t > 0.0:
                            iayw += t * np.log2(t / (pay[a, y] * pw[w]))
            obj = max(izw, iayw - rc)
            if obj < best:
                best = obj
    return best, kept


def _grid_search_numpy(s, q, rc, rows_a, bvals, tol):
    nz = s.shape[1]
    nw = rows_a.shape[1]
    nb = bvals.shape[0]
    pz = s.sum(axis=0)
    # every combination of Y|W rows: (ncomb, nw, 2)
    grids = np.meshgrid(*([bvals] * nw), indexing="ij")
    b1 = np.stack([g.ravel() for g in grids], axis=1)
    Bs = np.stack([1.0 - b1, b1], axis=2)
    best = np.inf
    kept = 0
    for code_a in range(rows_a.shape[0] ** nz):
        idx = np.unravel_index(code_a, (rows_a.shape[0],) * nz)
        A = rows_a[list(idx)]
        pw = pz @ A
        pzw = pz[:, None] * A
        with np.errstate(divide="ignore", invalid="ignore"):
            izw = float(np.where(pzw > 0.0, pzw * np.log2(A / pw[None, :]), 0.0).sum())
        paw = s @ A
        pay = np.einsum("aw,cwy->cay", paw, Bs)
        ok = 0.5 * np.abs(pay - q[None]).sum(axis=(1, 2)) <= tol
        if not np.any(ok):
            continue
        kept += int(ok.sum())
        Bk = Bs[ok]
        T = paw[None, :, None, :] * np.transpose(Bk, (0, 2, 1))[:, None, :, :]  # (c, a, y, w)
        denom = pay[ok][:, :, :, None] * pw[None, None, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            iayw = np.where(T > 0.0, T * np.log2(T / denom), 0.0).sum(axis=(1, 2, 3))
        obj = np.maximum(izw, iayw - rc)
        best = min(best, float(obj.min()))
    return best, kept


@njit(cache=True, nogil=True)
def _grid_exact_loops(s, q, rc, rows_a, bvals):
    """Encoder rows on a grid, binary decoder solved from ``p_AY = q``.

    With two target-side symbols the marginal constraint pins two decoder
    entries once the other ``nw - 2`` are fixed; those are swept over ``bvals``.
    """
    na, nz = s.shape
    nw = rows_a.shape[1]
    ng = rows_a.shape[0]
    nb = bvals.shape[0]
    best = np.inf
    kept = 0
    pz = np.zeros(nz)
    for a in range(na):
        for z in range(nz):
            pz[z] += s[a, z]
    qa = np.zeros(na)
    for a in range(na):
        qa[a] = q[a, 0] + q[a, 1]
    A = np.empty((nz, nw))
    b1 = np.empty(nw)
    idx = np.zeros(nz, dtype=np.int64)
    nfree = max(nw - 2, 0)
    ncomb = nb**nfree
    for code_a in range(ng**nz):
        c = code_a
        for z in range(nz - 1, -1, -1):
            idx[z] = c % ng
            c //= ng
        for z in range(nz):
            for w in range(nw):
                A[z, w] = rows_a[idx[z], w]
        pw = np.zeros(nw)
        for z in range(nz):
            for w in range(nw):
                pw[w] += pz[z] * A[z, w]
        izw = 0.0
        for z in range(nz):
            for w in range(nw):
                m = pz[z] * A[z, w]
                if m > 0.0:
                    izw += m * np.log2(A[z, w] / pw[w])
        paw = np.zeros((na, nw))
        for a in range(na):
            for z in range(nz):
                for w in range(nw):
                    paw[a, w] += s[a, z] * A[z, w]
        # pivot pair with the best-conditioned 2x2 block
        pi = 0
        pj = 0
        det = 0.0
        if nw >= 2:
            for i in range(nw):
                for j in range(i + 1, nw):
                    d = paw[0, i] * paw[1, j] - paw[0, j] * paw[1, i]
                    if abs(d) > abs(det):
                        det = d
                        pi = i
                        pj = j
        for code_b in range(ncomb):
            if nw == 1:
                if qa[0] <= 0.0:
                    b1[0] = q[1, 1] / qa[1]
                else:
                    b1[0] = q[0, 1] / qa[0]
            else:
                if abs(det) < 1e-12:
                    break
                cb = code_b
                r0 = q[0, 1]
                r1 = q[1, 1]
                for w in range(nw - 1, -1, -1):
                    if w == pi or w == pj:
                        continue
                    b1[w] = bvals[cb % nb]
                    cb //= nb
                    r0 -= paw[0, w] * b1[w]
                    r1 -= paw[1, w] * b1[w]
                b1[pi] = (r0 * paw[1, pj] - r1 * paw[0, pj]) / det
                b1[pj] = (paw[0, pi] * r1 - paw[1, pi] * r0) / det
            ok = True
            for w in range(nw):
                if b1[w] < -1e-12 or b1[w] > 1.0 + 1e-12:
                    ok = False
                b1[w] = min(max(b1[w], 0.0), 1.0)
            if not ok:
                continue
            pay = np.zeros((na, 2))
            for a in range(na):
                for w in range(nw):
                    pay[a, 1] += paw[a, w] * b1[w]
                    pay[a, 0] += paw[a, w] * (1.0 - b1[w])
            res = 0.0
            for a in range(na):
                res = max(res, abs(pay[a, 1] - q[a, 1]), abs(pay[a, 0] - q[a, 0]))
            if res > 1e-9:
                continue
            kept += 1
            iayw = 0.0
            for a in range(na):
                for y in range(2):
                    for w in range(nw):
                        bw = b1[w] if y == 1 else 1.0 - b1[w]
                        t = paw[a, w] * bw
                        if t > 0.0:
                            iayw += t * np.log2(t / (pay[a, y] * pw[w]))
            obj = max(izw, iayw - rc)
            if obj < best:
                best = obj
    return best, kept


def _grid_exact_numpy(s, q, rc, rows_a, bvals):
    na, nz = s.shape
    nw = rows_a.shape[1]
    ng = rows_a.shape[0]
    pz = s.sum(axis=0)
    qa = q.sum(axis=1)
    best = np.inf
    kept = 0
    if nw > 2:
        free_grid = np.stack([g.ravel() for g in np.meshgrid(*([bvals] * (nw - 2)), indexing="ij")], axis=1)
    else:
        free_grid = np.zeros((1, 0))
    for code_a in range(ng**nz):
        A = rows_a[list(np.unravel_index(code_a, (ng,) * nz))]
        pw = pz @ A
        pzw = pz[:, None] * A
        with np.errstate(divide="ignore", invalid="ignore"):
            izw = float(np.where(pzw > 0.0, pzw * np.log2(A / pw[None, :]), 0.0).sum())
        paw = s @ A
        if nw == 1:
            a0 = 0 if qa[0] > 0.0 else 1
            b1 = np.full((1, 1), q[a0, 1] / qa[a0])
        else:
            pairs = [(i, j) for i in range(nw) for j in range(i + 1, nw)]
            dets = [paw[0, i] * paw[1, j] - paw[0, j] * paw[1, i] for i, j in pairs]
            k = int(np.argmax(np.abs(dets)))
            if abs(dets[k]) < 1e-12:
                continue
            pi, pj = pairs[k]
            free = [w for w in range(nw) if w not in (pi, pj)]
            rhs = q[:, 1][None, :] - free_grid @ paw[:, free].T  # (c, a)
            M = paw[:, [pi, pj]]
            sol = np.linalg.solve(M, rhs.T).T  # (c, 2)
            b1 = np.empty((free_grid.shape[0], nw))
            b1[:, free] = free_grid
            b1[:, pi] = sol[:, 0]
            b1[:, pj] = sol[:, 1]
        ok = np.all((b1 >= -1e-12) & (b1 <= 1.0 + 1e-12), axis=1)
        b1 = np.clip(b1[ok], 0.0, 1.0)
        if b1.shape[0] == 0:
            continue
        Bs = np.stack([1.0 - b1, b1], axis=2)  # (c, w, y)
        pay = np.einsum("aw,cwy->cay", paw, Bs)
        good = np.abs(pay - q[None]).max(axis=(1, 2)) <= 1e-9
        if not np.any(good):
            continue
        kept += int(good.sum())
        Bs = Bs[good]
        pay = pay[good]
        T = paw[None, :, None, :] * np.transpose(Bs, (0, 2, 1))[:, None, :, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            iayw = np.where(T > 0.0, T * np.log2(T / (pay[..., None] * pw)), 0.0).sum(axis=(1, 2, 3))
        best = min(best, float(np.maximum(izw, iayw - rc).min()))
    return best, kept


# ----------------------------------------------------------------------------
# n-letter product tables
# ----------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _sequence_table_loops(words, K):
    """``out[c, idx] = prod_t K[words[c, t], digit_t(idx)]``, first letter most significant."""
    C, n = words.shape
    na = K.shape[1]
    out = np.empty((C, na**n))
    for c in range(C):
        for a in range(na):
            out[c, a] = K[words[c, 0], a]
        length = na
        for t in range(1, n):
            w = words[c, t]
            # expand in place from the back so unread prefixes survive
            for idx in range(length - 1, -1, -1):
                v = out[c, idx]
                for a in range(na - 1, -1, -1):
                    out[c, idx * na + a] = v * K[w, a]
            length *= na
    return out


def _sequence_table_numpy(words, K):
    C, n = words.shape
    out = K[words[:, 0]]
    for t in range(1, n):
        out = (out[:, :, None] * K[words[:, t]][:, None, :]).reshape(C, -1)
    return np.ascontiguousarray(out)


if JIT_ENABLED:
    grid_search = _grid_search_loops
    grid_search_exact = _grid_exact_loops
    sequence_table = _sequence_table_loops
else:
    grid_search = _grid_search_numpy
    grid_search_exact = _grid_exact_numpy
    sequence_table = _sequence_table_numpy
