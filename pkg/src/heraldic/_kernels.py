"""Dense Fock-space kernels.

States of N photons in m modes are stored as dense complex arrays over a
fixed basis ordering (see :class:`heraldic.fock.FockBasis`). Several states
are evolved at once as the columns of a ``(D, k)`` array.

Two implementations of the element sweep live here: a loop kernel compiled
with numba and a vectorized numpy version. ``evolve_dense`` points at the
one selected by :data:`heraldic._jit.USE_NUMBA`.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, njit

BS = 0
PS = 1


@njit
def rank_occupation(occ, ways):
    """Position of occupation vector ``occ`` in the basis ordering."""
    m = occ.shape[0]
    r = 0
    for k in range(m):
        r += occ[k]
    idx = 0
    for k in range(m - 1):
        n = occ[k]
        for v in range(n + 1, r + 1):
            idx += ways[r - v, m - k - 1]
        r -= n
    return idx


@njit
def partner_table(occ, ways, a, b, nmax):
    """``table[i, q]``: index of state i with q photons moved onto mode a.

    The photons shared by modes a and b are redistributed so a holds q and
    b the rest; entries with q above that total are -1.
    """
    dim = occ.shape[0]
    table = -np.ones((dim, nmax + 1), dtype=np.int64)
    tmp = np.empty(occ.shape[1], dtype=np.int64)
    for i in range(dim):
        s = occ[i, a] + occ[i, b]
        for k in range(occ.shape[1]):
            tmp[k] = occ[i, k]
        for q in range(s + 1):
            tmp[a] = q
            tmp[b] = s - q
            table[i, q] = rank_occupation(tmp, ways)
    return table


@njit
def two_mode_rep(uaa, uba, uab, ubb, nmax):
    """Multi-photon representation of a 2x2 single-photon unitary.

    ``rep[s, q, p]`` is the amplitude for p photons on mode a (s - p on b)
    to end up as q on a (s - q on b). ``uba`` is the single-photon
    amplitude a -> b.
    """
    rep = np.zeros((nmax + 1, nmax + 1, nmax + 1), dtype=np.complex128)
    fact = np.ones(nmax + 1)
    for k in range(1, nmax + 1):
        fact[k] = fact[k - 1] * k
    pw = np.ones((4, nmax + 1), dtype=np.complex128)
    for k in range(1, nmax + 1):
        pw[0, k] = pw[0, k - 1] * uaa
        pw[1, k] = pw[1, k - 1] * uba
        pw[2, k] = pw[2, k - 1] * uab
        pw[3, k] = pw[3, k - 1] * ubb
    for s in range(nmax + 1):
        for p in range(s + 1):
            r = s - p
            for j in range(p + 1):
                ca = fact[p] / (fact[j] * fact[p - j]) * pw[0, j] * pw[1, p - j]
                for l in range(r + 1):
                    c = ca * fact[r] / (fact[l] * fact[r - l]) * pw[2, l] * pw[3, r - l]
                    rep[s, j + l, p] += c
            for q in range(s + 1):
                rep[s, q, p] *= math.sqrt(fact[q] * fact[s - q] / (fact[p] * fact[r]))
    return rep


@njit
def bs_coefficients(theta, phi):
    """Single-photon amplitudes (a->a, a->b, b->a, b->b) of a beam splitter."""
    c = math.cos(theta)
    s = math.sin(theta)
    e = complex(math.cos(phi), math.sin(phi))
    return complex(c, 0.0), e.conjugate() * s, -e * s, complex(c, 0.0)


@njit
def _bs_sweep(vecs, occ, partner, rep, a, b):
    out = np.zeros_like(vecs)
    dim, k = vecs.shape
    for i in range(dim):
        na = occ[i, a]
        s = na + occ[i, b]
        for q in range(s + 1):
            c = rep[s, q, na]
            if c == 0:
                continue
            j = partner[i, q]
            for col in range(k):
                out[j, col] += c * vecs[i, col]
    return out


@njit
def _evolve_loop(vecs, occ, partners, kinds, mode_a, mode_b, thetas, phis, nmax):
    for e in range(kinds.shape[0]):
        if kinds[e] == BS:
            uaa, uba, uab, ubb = bs_coefficients(thetas[e], phis[e])
            rep = two_mode_rep(uaa, uba, uab, ubb, nmax)
            vecs = _bs_sweep(vecs, occ, partners[e], rep, mode_a[e], mode_b[e])
        else:
            for i in range(vecs.shape[0]):
                n = occ[i, mode_a[e]]
                ph = complex(math.cos(n * phis[e]), math.sin(n * phis[e]))
                for col in range(vecs.shape[1]):
                    vecs[i, col] *= ph
    return vecs


def _evolve_numpy(vecs, occ, partners, kinds, mode_a, mode_b, thetas, phis, nmax):
    for e in range(kinds.shape[0]):
        a = mode_a[e]
        if kinds[e] == BS:
            b = mode_b[e]
            rep = two_mode_rep(*bs_coefficients(thetas[e], phis[e]), nmax)
            na = occ[:, a]
            s = na + occ[:, b]
            table = partners[e]
            out = np.zeros_like(vecs)
            for q in range(nmax + 1):
                valid = table[:, q] >= 0
                coef = rep[s[valid], q, na[valid]]
                np.add.at(out, table[valid, q], coef[:, None] * vecs[valid])
            vecs = out
        else:
            vecs = vecs * np.exp(1j * phis[e] * occ[:, a])[:, None]
    return vecs


evolve_dense = _evolve_loop if USE_NUMBA else _evolve_numpy


@njit
def _mesh_unitaries_loop(x, pairs, n):
    batch = x.shape[0]
    n_el = pairs.shape[0]
    u = np.zeros((batch, n, n), dtype=np.complex128)
    for r in range(batch):
        for k in range(n):
            u[r, k, k] = 1.0
        for e in range(n_el):
            a = pairs[e, 0]
            b = pairs[e, 1]
            c = math.cos(x[r, 2 * e])
            s = math.sin(x[r, 2 * e])
            ph = complex(math.cos(x[r, 2 * e + 1]), math.sin(x[r, 2 * e + 1]))
            for col in range(n):
                va = u[r, a, col] * ph
                vb = u[r, b, col]
                u[r, a, col] = c * va - s * vb
                u[r, b, col] = s * va + c * vb
        for k in range(n):
            ph = complex(math.cos(x[r, 2 * n_el + k]), math.sin(x[r, 2 * n_el + k]))
            for col in range(n):
                u[r, k, col] *= ph
    return u


def _mesh_unitaries_numpy(x, pairs, n):
    batch = x.shape[0]
    u = np.broadcast_to(np.eye(n, dtype=np.complex128), (batch, n, n)).copy()
    for k in range(pairs.shape[0]):
        a, b = pairs[k]
        c = np.cos(x[:, 2 * k])[:, None]
        s = np.sin(x[:, 2 * k])[:, None]
        row_a = u[:, a, :] * np.exp(1j * x[:, 2 * k + 1])[:, None]
        row_b = u[:, b, :]
        u[:, a, :] = c * row_a - s * row_b
        u[:, b, :] = s * row_a + c * row_b
    u *= np.exp(1j * x[:, 2 * pairs.shape[0]:])[:, :, None]
    return u


mesh_unitaries = _mesh_unitaries_loop if USE_NUMBA else _mesh_unitaries_numpy
