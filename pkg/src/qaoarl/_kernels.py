"""Numba kernels for statevector evolution and expectation extraction.

All reductions accumulate per-chunk partial sums and combine them in a fixed
sequential order, so results are bit-identical run to run regardless of the
thread count. Parallelism only distributes chunks whose outputs are disjoint.
"""

import numpy as np
from numba import njit, prange

# 2^12 amplitudes per reduction chunk: small enough to parallelize, large
# enough that the per-chunk fixup work is negligible.
LOG2_CHUNK = 12


@njit(cache=True, parallel=True)
def phase_by_table(psi, spec, table):
    """Multiply amplitude z by table[spec[z]] in place."""
    for z in prange(psi.size):
        psi[z] = psi[z] * table[spec[z]]


@njit(cache=True, parallel=True)
def rotate_x_all(psi, beta, n):
    """Apply exp(-i*beta*X) to every qubit in place.

    Per qubit the amplitude pair (a, b) across the bit flip maps to
    (cos(beta)*a - i*sin(beta)*b, -i*sin(beta)*a + cos(beta)*b).
    """
    c = np.cos(beta)
    s = np.sin(beta)
    for j in range(n):
        low = 1 << j
        step = low << 1
        nblocks = psi.size // step
        for blk in prange(nblocks):
            base = blk * step
            for k in range(base, base + low):
                a = psi[k]
                b = psi[k + low]
                ar = a.real
                ai = a.imag
                br = b.real
                bi = b.imag
                psi[k] = complex(c * ar + s * bi, c * ai - s * br)
                psi[k + low] = complex(c * br + s * ai, c * bi - s * ar)


@njit(cache=True, parallel=True)
def z_and_edge_sums(psi, n, edge_arr, log2_chunk):
    """Per-qubit <Z_i> and per-edge XOR probabilities in one pass.

    Returns (z, xor) where z[i] = sum_z p_z * (1 - 2*bit_i(z)) and
    xor[e] = sum_z p_z * (bit_i(z) ^ bit_j(z)).

    Qubits at or above the chunk width have constant bits within a chunk, so
    their contributions reduce to per-chunk bookkeeping; only in-chunk qubits
    and edges with both endpoints in-chunk cost per-element work.
    """
    size = psi.size
    nlow = 0
    while (1 << nlow) < size and nlow < log2_chunk:
        nlow += 1
    chunk = 1 << nlow
    nchunks = size // chunk
    m = edge_arr.shape[0]
    nlow_q = min(n, nlow)

    inner = np.empty((m, 2), dtype=np.int64)
    n_inner = 0
    for e in range(m):
        if edge_arr[e, 0] < nlow_q and edge_arr[e, 1] < nlow_q:
            inner[n_inner, 0] = edge_arr[e, 0]
            inner[n_inner, 1] = edge_arr[e, 1]
            n_inner += 1

    # per-chunk layout: [prob mass, bit marginal per in-chunk qubit, inner edge xor]
    width = 1 + nlow_q + n_inner
    partials = np.zeros((nchunks, width))
    for ci in prange(nchunks):
        base = ci * chunk
        loc = np.zeros(width)
        for z in range(base, base + chunk):
            v = psi[z]
            p = v.real * v.real + v.imag * v.imag
            loc[0] += p
            for i in range(nlow_q):
                loc[1 + i] += p * ((z >> i) & 1)
            for e in range(n_inner):
                loc[1 + nlow_q + e] += p * (((z >> inner[e, 0]) ^ (z >> inner[e, 1])) & 1)
        partials[ci] = loc

    bit_marg = np.zeros(n)
    xor = np.zeros(m)
    total = 0.0
    for ci in range(nchunks):
        csum = partials[ci, 0]
        total += csum
        for i in range(nlow_q):
            bit_marg[i] += partials[ci, 1 + i]
        for i in range(nlow_q, n):
            if (ci >> (i - nlow)) & 1:
                bit_marg[i] += csum
        k = 0
        for e in range(m):
            i0 = edge_arr[e, 0]
            i1 = edge_arr[e, 1]
            if i0 < nlow_q and i1 < nlow_q:
                xor[e] += partials[ci, 1 + nlow_q + k]
                k += 1
            elif i0 >= nlow_q and i1 >= nlow_q:
                if ((ci >> (i0 - nlow)) ^ (ci >> (i1 - nlow))) & 1:
                    xor[e] += csum
            else:
                # edges are stored (min, max): i0 varies in-chunk, i1 constant
                mlow = partials[ci, 1 + i0]
                if (ci >> (i1 - nlow)) & 1:
                    xor[e] += csum - mlow
                else:
                    xor[e] += mlow
    z = np.empty(n)
    for i in range(n):
        z[i] = total - 2.0 * bit_marg[i]
    return z, xor


@njit(cache=True, parallel=True)
def x_sums(psi, n, log2_chunk):
    """Per-qubit <X_j> = 2*Re sum over bit-flip pairs of conj(a)*b."""
    size = psi.size
    nlow = 0
    while (1 << nlow) < size and nlow < log2_chunk:
        nlow += 1
    chunk = 1 << nlow
    nchunks = size // chunk
    partials = np.zeros((nchunks, n))
    for ci in prange(nchunks):
        base = ci * chunk
        loc = np.zeros(n)
        for j in range(n):
            low = 1 << j
            acc = 0.0
            if low >= chunk:
                # partner lies in another chunk; visit only the bit=0 element
                if (base >> j) & 1 == 0:
                    for z in range(base, base + chunk):
                        a = psi[z]
                        b = psi[z + low]
                        acc += a.real * b.real + a.imag * b.imag
            else:
                step = low << 1
                for bb in range(base, base + chunk, step):
                    for k in range(bb, bb + low):
                        a = psi[k]
                        b = psi[k + low]
                        acc += a.real * b.real + a.imag * b.imag
            loc[j] = 2.0 * acc
        partials[ci] = loc
    out = np.zeros(n)
    for ci in range(nchunks):
        out += partials[ci]
    return out


@njit(cache=True, parallel=True)
def weighted_prob_sum(psi, spec, log2_chunk):
    """sum_z |psi_z|^2 * spec[z], chunked for deterministic combination."""
    size = psi.size
    nlow = 0
    while (1 << nlow) < size and nlow < log2_chunk:
        nlow += 1
    chunk = 1 << nlow
    nchunks = size // chunk
    partials = np.zeros(nchunks)
    for ci in prange(nchunks):
        base = ci * chunk
        acc = 0.0
        for z in range(base, base + chunk):
            v = psi[z]
            acc += (v.real * v.real + v.imag * v.imag) * spec[z]
        partials[ci] = acc
    out = 0.0
    for ci in range(nchunks):
        out += partials[ci]
    return out
