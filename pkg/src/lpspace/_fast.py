"""Packed-key representation and product kernel for series slices.

A slice term [C(eta) cos(p th1 + q th2) + S(eta) sin(...)] e^{(k-m) th3}
a1^i a2^j a3^k a4^m is flattened into one entry per eta-degree with the
complex weight w = C_d - i S_d and a 47-bit integer key

    key = (((((i<<6 | j)<<6 | k)<<6 | m)<<8 | p+128)<<8 | q+128)<<7 | deg.

With w = C - iS the term equals Re[w e^{i(p th1 + q th2)}] (times the real
amplitude and exponential factors), so a product of two terms contributes
0.5*w1*w2 at the sum harmonic and 0.5*w1*conj(w2) at the difference
harmonic; folding an index into the canonical half-space (p >= 0, q >= 0
at p == 0) conjugates the weight, and angle derivatives are the pointwise
maps w -> i*p*w, i*q*w, (k-m)*w.

A packed slice is a pair (keys int64[n], weights complex128[n]) with unique
keys.  Accumulation runs in a flat int64 -> complex128 map, JIT compiled
when numba is importable (set LPSPACE_NO_NUMBA=1 to force the pure-Python
path; the two paths agree apart from summation order).
"""

from __future__ import annotations

import os

import numpy as np

HAVE_NUMBA = False
if not os.environ.get("LPSPACE_NO_NUMBA"):
    try:
        from numba import njit

        HAVE_NUMBA = True
    except Exception:  # pragma: no cover - numba is an optional accelerator
        HAVE_NUMBA = False

_DEG_BITS = 7
_DEG_MASK = (1 << _DEG_BITS) - 1
_PQ_OFF = 128

Packed = tuple[np.ndarray, np.ndarray]


def empty_packed() -> Packed:
    return np.empty(0, np.int64), np.empty(0, np.complex128)


def pack_key(i: int, j: int, k: int, m: int, p: int, q: int, deg: int) -> int:
    return (((((((((i << 6) | j) << 6) | k) << 6) | m) << 8 | (p + _PQ_OFF)) << 8 | (q + _PQ_OFF)) << _DEG_BITS) | deg


def unpack_key(key: int) -> tuple[int, int, int, int, int, int, int]:
    deg = key & _DEG_MASK
    key >>= _DEG_BITS
    q = (key & 0xFF) - _PQ_OFF
    key >>= 8
    p = (key & 0xFF) - _PQ_OFF
    key >>= 8
    m = key & 0x3F
    key >>= 6
    k = key & 0x3F
    key >>= 6
    j = key & 0x3F
    i = key >> 6
    return i, j, k, m, p, q, deg


def pack_slice(sl) -> Packed:
    """Flatten dict[(i,j,k,m,p,q)] -> (cos_poly, sin_poly) into key/weight arrays."""
    keys: list[int] = []
    vals: list[complex] = []
    for (i, j, k, m, p, q), (c, s) in sl.items():
        base = pack_key(i, j, k, m, p, q, 0)
        top = max(len(c), len(s))
        for d in range(top):
            cv = c[d] if d < len(c) else 0.0
            sv = s[d] if d < len(s) else 0.0
            if cv == 0.0 and sv == 0.0:
                continue
            keys.append(base | d)
            vals.append(complex(cv, -sv))
    return np.asarray(keys, dtype=np.int64), np.asarray(vals, dtype=np.complex128)


def unpack_arrays(keys: np.ndarray, vals: np.ndarray) -> dict:
    """Regroup (packed key, weight) arrays into the dict-of-polynomials form."""
    if len(keys) == 0:
        return {}
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    vals = vals[order]
    degs = (keys & _DEG_MASK).astype(np.int64)
    bases = keys >> _DEG_BITS
    qs = (bases & 0xFF) - _PQ_OFF
    ps = ((bases >> 8) & 0xFF) - _PQ_OFF
    ms = (bases >> 16) & 0x3F
    ks = (bases >> 22) & 0x3F
    js = (bases >> 28) & 0x3F
    is_ = bases >> 34
    out = {}
    start = 0
    n = len(keys)
    while start < n:
        stop = start
        b = bases[start]
        while stop < n and bases[stop] == b:
            stop += 1
        top = int(degs[stop - 1]) + 1
        clist = [0.0] * top
        slist = [0.0] * top
        for idx in range(start, stop):
            d = int(degs[idx])
            w = vals[idx]
            clist[d] += w.real
            slist[d] += -w.imag
        while clist and clist[-1] == 0.0:
            clist.pop()
        while slist and slist[-1] == 0.0:
            slist.pop()
        if clist or slist:
            out[(int(is_[start]), int(js[start]), int(ks[start]), int(ms[start]), int(ps[start]), int(qs[start]))] = (
                tuple(clist),
                tuple(slist),
            )
        start = stop
    return out


def unpack_to_slice(packed: Packed) -> dict:
    return unpack_arrays(packed[0], packed[1])


def packed_diff(packed: Packed, which: str) -> Packed:
    """Angle derivative of a packed slice (vectorised)."""
    keys, vals = packed
    if len(keys) == 0:
        return packed
    bases = keys >> _DEG_BITS
    if which == "theta1":
        f = (((bases >> 8) & 0xFF) - _PQ_OFF).astype(np.float64)
        new = 1j * f * vals
    elif which == "theta2":
        f = ((bases & 0xFF) - _PQ_OFF).astype(np.float64)
        new = 1j * f * vals
    elif which == "theta3":
        ks = (bases >> 22) & 0x3F
        ms = (bases >> 16) & 0x3F
        new = (ks - ms).astype(np.float64) * vals
    else:
        raise ValueError(f"unknown angle {which!r}")
    keep = new != 0.0
    return keys[keep], new[keep]


def packed_clean(packed: Packed, rel_tol: float = 1e-16) -> Packed:
    """Drop weights below rel_tol times the largest weight magnitude."""
    keys, vals = packed
    if len(keys) == 0:
        return packed
    mag = np.abs(vals)
    cut = rel_tol * mag.max()
    keep = mag >= cut
    if keep.all():
        return packed
    return keys[keep], vals[keep]


def _py_mul_accum(acc: dict, ak, av, bk, bv, max_eta: int, factor: float) -> None:
    for ia in range(len(ak)):
        ka = int(ak[ia])
        wa = av[ia] * factor
        da = ka & _DEG_MASK
        ra = ka >> _DEG_BITS
        qa = (ra & 0xFF) - _PQ_OFF
        pa = ((ra >> 8) & 0xFF) - _PQ_OFF
        base_a = ra >> 16  # packed (i, j, k, m)
        for ib in range(len(bk)):
            kb = int(bk[ib])
            d = da + (kb & _DEG_MASK)
            if d > max_eta:
                continue
            wb = bv[ib]
            rb = kb >> _DEG_BITS
            qb = (rb & 0xFF) - _PQ_OFF
            pb = ((rb >> 8) & 0xFF) - _PQ_OFF
            base = (base_a + (rb >> 16)) << 8

            p = pa + pb
            q = qa + qb
            t = 0.5 * wa * wb
            if p < 0 or (p == 0 and q < 0):
                p, q, t = -p, -q, t.conjugate()
            if p == 0 and q == 0:
                t = complex(t.real, 0.0)
            key = ((base | (p + _PQ_OFF)) << 8 | (q + _PQ_OFF)) << _DEG_BITS | d
            acc[key] = acc.get(key, 0.0j) + t

            p = pa - pb
            q = qa - qb
            t = 0.5 * wa * wb.conjugate()
            if p < 0 or (p == 0 and q < 0):
                p, q, t = -p, -q, t.conjugate()
            if p == 0 and q == 0:
                t = complex(t.real, 0.0)
            key = ((base | (p + _PQ_OFF)) << 8 | (q + _PQ_OFF)) << _DEG_BITS | d
            acc[key] = acc.get(key, 0.0j) + t


if HAVE_NUMBA:
    _GOLD = np.uint64(0x9E3779B97F4A7C15)

    @njit(cache=True)
    def _ht_shift(cap):  # pragma: no cover - jit
        s = 64
        while cap > 1:
            cap >>= 1
            s -= 1
        return np.uint64(s)

    @njit(cache=True)
    def _ht_grow(tk, tv):  # pragma: no cover - jit
        n = tk.shape[0]
        nn = 2 * n
        imask = np.int64(nn - 1)
        sh = _ht_shift(nn)
        ntk = np.full(nn, -1, np.int64)
        ntv = np.zeros(nn, np.complex128)
        for i in range(n):
            key = tk[i]
            if key != -1:
                idx = np.int64((np.uint64(key) * _GOLD) >> sh)
                while ntk[idx] != -1:
                    idx = (idx + 1) & imask
                ntk[idx] = key
                ntv[idx] = tv[i]
        return ntk, ntv

    @njit(cache=True)
    def _nb_mul_accum(tk, tv, cnt, ak, av, bk, bv, max_eta, factor):  # pragma: no cover - jit
        na = ak.shape[0]
        nb = bk.shape[0]
        imask = np.int64(tk.shape[0] - 1)
        sh = _ht_shift(tk.shape[0])
        for ia in range(na):
            ka = ak[ia]
            wa = av[ia] * factor
            da = ka & _DEG_MASK
            ra = ka >> _DEG_BITS
            qa = (ra & 0xFF) - _PQ_OFF
            pa = ((ra >> 8) & 0xFF) - _PQ_OFF
            base_a = ra >> 16
            for ib in range(nb):
                kb = bk[ib]
                d = da + (kb & _DEG_MASK)
                if d > max_eta:
                    continue
                wb = bv[ib]
                rb = kb >> _DEG_BITS
                qb = (rb & 0xFF) - _PQ_OFF
                pb = ((rb >> 8) & 0xFF) - _PQ_OFF
                base = (base_a + (rb >> 16)) << 8

                p = pa + pb
                q = qa + qb
                t = 0.5 * wa * wb
                if p < 0 or (p == 0 and q < 0):
                    p = -p
                    q = -q
                    t = np.conj(t)
                if p == 0 and q == 0:
                    t = complex(t.real, 0.0)
                key = ((base | (p + _PQ_OFF)) << 8 | (q + _PQ_OFF)) << _DEG_BITS | d
                idx = np.int64((np.uint64(key) * _GOLD) >> sh)
                while True:
                    k = tk[idx]
                    if k == key:
                        tv[idx] += t
                        break
                    if k == -1:
                        tk[idx] = key
                        tv[idx] = t
                        cnt += 1
                        if 5 * cnt > 3 * tk.shape[0]:
                            tk, tv = _ht_grow(tk, tv)
                            imask = np.int64(tk.shape[0] - 1)
                            sh = _ht_shift(tk.shape[0])
                        break
                    idx = (idx + 1) & imask

                p = pa - pb
                q = qa - qb
                t = 0.5 * wa * np.conj(wb)
                if p < 0 or (p == 0 and q < 0):
                    p = -p
                    q = -q
                    t = np.conj(t)
                if p == 0 and q == 0:
                    t = complex(t.real, 0.0)
                key = ((base | (p + _PQ_OFF)) << 8 | (q + _PQ_OFF)) << _DEG_BITS | d
                idx = np.int64((np.uint64(key) * _GOLD) >> sh)
                while True:
                    k = tk[idx]
                    if k == key:
                        tv[idx] += t
                        break
                    if k == -1:
                        tk[idx] = key
                        tv[idx] = t
                        cnt += 1
                        if 5 * cnt > 3 * tk.shape[0]:
                            tk, tv = _ht_grow(tk, tv)
                            imask = np.int64(tk.shape[0] - 1)
                            sh = _ht_shift(tk.shape[0])
                        break
                    idx = (idx + 1) & imask
        return tk, tv, cnt

    @njit(cache=True)
    def _nb_add_packed(tk, tv, cnt, keys, vals, factor):  # pragma: no cover - jit
        n = keys.shape[0]
        imask = np.int64(tk.shape[0] - 1)
        sh = _ht_shift(tk.shape[0])
        for i in range(n):
            key = keys[i]
            t = vals[i] * factor
            idx = np.int64((np.uint64(key) * _GOLD) >> sh)
            while True:
                k = tk[idx]
                if k == key:
                    tv[idx] += t
                    break
                if k == -1:
                    tk[idx] = key
                    tv[idx] = t
                    cnt += 1
                    if 5 * cnt > 3 * tk.shape[0]:
                        tk, tv = _ht_grow(tk, tv)
                        imask = np.int64(tk.shape[0] - 1)
                        sh = _ht_shift(tk.shape[0])
                    break
                idx = (idx + 1) & imask
        return tk, tv, cnt

    @njit(cache=True)
    def _nb_dump(tk, tv, cnt):  # pragma: no cover - jit
        keys = np.empty(cnt, np.int64)
        vals = np.empty(cnt, np.complex128)
        idx = 0
        for i in range(tk.shape[0]):
            if tk[i] != -1:
                keys[idx] = tk[i]
                vals[idx] = tv[i]
                idx += 1
        return keys, vals


class SliceAccumulator:
    """Accumulates scaled slice products before one final regrouping."""

    _INIT_CAP = 1 << 10

    def __init__(self, max_eta: int | None = None):
        self.max_eta = int(max_eta) if max_eta is not None else _DEG_MASK
        if HAVE_NUMBA:
            self._tk = np.full(self._INIT_CAP, -1, np.int64)
            self._tv = np.zeros(self._INIT_CAP, np.complex128)
            self._cnt = 0
        else:
            self._acc = {}

    # -- dict-form entry points (convenience / tests) -------------------------

    def add_product(self, a, b, factor: float = 1.0) -> None:
        """acc += factor * a * b for two slices in dict form."""
        if a and b:
            self.add_packed_product(pack_slice(a), pack_slice(b), factor)

    def add_slice(self, sl, factor: float = 1.0) -> None:
        if sl:
            self.add_packed(pack_slice(sl), factor)

    # -- packed entry points ----------------------------------------------------

    def add_packed_product(self, a: Packed, b: Packed, factor: float = 1.0) -> None:
        ak, av = a
        bk, bv = b
        if len(ak) == 0 or len(bk) == 0:
            return
        if len(ak) < len(bk):  # iterate the smaller operand outside
            ak, av, bk, bv = bk, bv, ak, av
        if HAVE_NUMBA:
            self._tk, self._tv, self._cnt = _nb_mul_accum(
                self._tk, self._tv, self._cnt, ak, av, bk, bv, self.max_eta, factor
            )
        else:
            _py_mul_accum(self._acc, ak, av, bk, bv, self.max_eta, factor)

    def add_packed(self, packed: Packed, factor: float = 1.0) -> None:
        keys, vals = packed
        if len(keys) == 0:
            return
        if HAVE_NUMBA:
            self._tk, self._tv, self._cnt = _nb_add_packed(self._tk, self._tv, self._cnt, keys, vals, factor)
        else:
            for idx in range(len(keys)):
                key = int(keys[idx])
                self._acc[key] = self._acc.get(key, 0.0j) + vals[idx] * factor

    def __len__(self) -> int:
        return self._cnt if HAVE_NUMBA else len(self._acc)

    def result_packed(self) -> Packed:
        """Sorted key/weight arrays (zero weights dropped)."""
        if HAVE_NUMBA:
            keys, vals = _nb_dump(self._tk, self._tv, self._cnt)
        else:
            keys = np.fromiter(self._acc.keys(), np.int64, len(self._acc))
            vals = np.fromiter(self._acc.values(), np.complex128, len(self._acc))
        if len(keys) == 0:
            return keys, vals
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        vals = vals[order]
        keep = vals != 0.0
        return keys[keep], vals[keep]

    def result(self) -> dict:
        return unpack_to_slice(self.result_packed())
