"""Exact integer power-sum kernels for weighted graph sums.

The workload: sum over assignments v in (Z/r)^k of a product over edges of
table lookups t_e[(b_e + sum_i c_{e,i} v_i) mod r], with c entries in
{-1, 0, 1}.  Table values are nonnegative integers that overflow machine
words, so the vectorized lanes run modulo a battery of 30-bit primes and
reconstruct the exact value by the Chinese remainder theorem.  The pure
Python lane multiplies big integers directly and serves as the reference;
every lane returns the identical integer.

Lane selection: the TAUTCALC_KERNEL environment variable, one of auto
(default: numba if importable, else numpy, else python), python, numpy,
numba.
"""

import os
from itertools import product as _cartesian

# pairwise-distinct 30-bit primes; products of two residues stay below 2^60
_PRIMES = (
    1073741789, 1073741783, 1073741741, 1073741723,
    1073741719, 1073741717, 1073741689, 1073741671,
    1073741663, 1073741651, 1073741621, 1073741567,
    1073741561, 1073741527, 1073741477, 1073741467,
)

_KERNELS = ("auto", "python", "numpy", "numba")


class KernelError(ValueError):
    pass


def _numpy_module():
    try:
        import numpy
    except ImportError:
        return None
    return numpy


_NUMBA_CACHE = {}


def _numba_kernel():
    """Compile (once) and return the jitted block-sum worker, or None."""
    if "fn" in _NUMBA_CACHE:
        return _NUMBA_CACHE["fn"]
    try:
        import numba
        import numpy as np
    except ImportError:
        _NUMBA_CACHE["fn"] = None
        return None

    @numba.njit(cache=False)
    def worker(tables, coeffs, consts, r, k, primes, sums):
        # tables: (E, P, r) int64 residues; coeffs: (E, k) int64 in {-1,0,1}
        n_edges = tables.shape[0]
        n_primes = primes.shape[0]
        total = 1
        for _ in range(k):
            total *= r
        digits = np.empty(k, dtype=np.int64)
        for flat in range(total):
            rem = flat
            for i in range(k):
                digits[i] = rem % r
                rem //= r
            for pi in range(n_primes):
                p = primes[pi]
                acc = 1
                for e in range(n_edges):
                    idx = consts[e]
                    for i in range(k):
                        c = coeffs[e, i]
                        if c > 0:
                            idx += digits[i]
                        elif c < 0:
                            idx -= digits[i]
                    idx %= r
                    acc = acc * tables[e, pi, idx] % p
                sums[pi] = (sums[pi] + acc) % p

    _NUMBA_CACHE["fn"] = worker
    return worker


def active_kernel():
    """Resolve the lane name from the environment."""
    mode = os.environ.get("TAUTCALC_KERNEL", "auto")
    if mode not in _KERNELS:
        raise KernelError(
            f"TAUTCALC_KERNEL must be one of {', '.join(_KERNELS)}; got {mode!r}")
    if mode != "auto":
        return mode
    if _numba_kernel() is not None:
        return "numba"
    if _numpy_module() is not None:
        return "numpy"
    return "python"


def _crt(residues, primes):
    x, modulus = 0, 1
    for res, p in zip(residues, primes):
        t = (res - x) * pow(modulus, -1, p) % p
        x += modulus * t
        modulus *= p
    return x


def _primes_for(bound):
    use, cap = [], 1
    for p in _PRIMES:
        if cap > bound:
            return use
        use.append(p)
        cap *= p
    raise KernelError(f"value bound {bound} exceeds the CRT capacity")


def block_sum(tables, coeffs, consts, r, lane=None):
    """Exact sum over (Z/r)^k of the table-lookup product.

    tables: per edge, a sequence of r nonnegative integers; coeffs: per
    edge, a length-k tuple over the free variables with entries -1/0/1;
    consts: per edge, an integer offset.  k is inferred from coeffs.
    """
    if r < 1:
        raise KernelError("modulus must be positive")
    if not tables:
        return 1
    if len(coeffs) != len(tables) or len(consts) != len(tables):
        raise KernelError("tables, coeffs, and consts must align")
    k = len(coeffs[0]) if coeffs else 0
    if any(len(c) != k for c in coeffs):
        raise KernelError("ragged coefficient rows")
    if k == 0:
        out = 1
        for t, b in zip(tables, consts):
            out *= t[b % r]
        return out
    lane = lane or active_kernel()
    if lane == "python":
        return _block_sum_python(tables, coeffs, consts, r, k)
    if lane == "numpy":
        return _block_sum_numpy(tables, coeffs, consts, r, k)
    if lane == "numba":
        return _block_sum_numba(tables, coeffs, consts, r, k)
    raise KernelError(f"unknown kernel lane {lane!r}")


def _block_sum_python(tables, coeffs, consts, r, k):
    out = 0
    for v in _cartesian(range(r), repeat=k):
        acc = 1
        for t, cs, b in zip(tables, coeffs, consts):
            idx = b
            for c, vi in zip(cs, v):
                if c:
                    idx += vi if c > 0 else -vi
            acc *= t[idx % r]
            if not acc:
                break
        out += acc
    return out


def _value_bound(tables, r, k):
    bound = r ** k
    for t in tables:
        bound *= max(max(t), 1)
    return bound


def _block_sum_numpy(tables, coeffs, consts, r, k):
    np = _numpy_module()
    if np is None:
        raise KernelError("numpy lane requested but numpy is not importable")
    primes = _primes_for(2 * _value_bound(tables, r, k))
    tmod = [[np.array([x % p for x in t], dtype=np.int64) for p in primes]
            for t in tables]
    sums = [0] * len(primes)
    total = r ** k
    chunk = 1 << 20
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = [(flat // r ** i) % r for i in range(k)]
        idxs = []
        for cs, b in zip(coeffs, consts):
            idx = np.full(flat.shape, b, dtype=np.int64)
            for c, dig in zip(cs, digits):
                if c > 0:
                    idx += dig
                elif c < 0:
                    idx -= dig
            idxs.append(idx % r)
        for pi, p in enumerate(primes):
            acc = np.ones(flat.shape, dtype=np.int64)
            for e, idx in enumerate(idxs):
                acc = acc * tmod[e][pi][idx] % p
            sums[pi] = (sums[pi] + int(acc.sum()) % p) % p
    return _crt(sums, primes)


def _block_sum_numba(tables, coeffs, consts, r, k):
    worker = _numba_kernel()
    if worker is None:
        raise KernelError("numba lane requested but numba is not importable")
    np = _numpy_module()
    primes = _primes_for(2 * _value_bound(tables, r, k))
    n_edges = len(tables)
    tarr = np.empty((n_edges, len(primes), r), dtype=np.int64)
    for e, t in enumerate(tables):
        for pi, p in enumerate(primes):
            for w, x in enumerate(t):
                tarr[e, pi, w] = x % p
    carr = np.array(coeffs, dtype=np.int64).reshape(n_edges, k)
    barr = np.array([b % r for b in consts], dtype=np.int64)
    parr = np.array(primes, dtype=np.int64)
    sums = np.zeros(len(primes), dtype=np.int64)
    worker(tarr, carr, barr, r, k, parr, sums)
    return _crt([int(s) for s in sums], primes)
