"""Multimode bosonic basis changes on occupation-number states.

A linear map of creation operators ``c_l^dagger -> sum_l' M[l', l] c_l'^dagger``
induces a map on Fock states; it is expanded here exactly by polynomial
multiplication, which is fine for the few-photon, few-mode cases used in this
package.
"""
from __future__ import annotations

from collections import defaultdict
from math import factorial, sqrt
from typing import Dict, Mapping, Tuple

import numpy as np
import scipy.sparse as sp

FockMap = Dict[Tuple[int, ...], complex]


def _fact_norm(occ) -> float:
    out = 1.0
    for n in occ:
        out *= factorial(n)
    return sqrt(out)


def transform_occupation(occ: Tuple[int, ...], M: np.ndarray, tol: float = 0.0) -> FockMap:
    """Image of ``|occ>`` under ``c_l^dagger -> sum_l' M[l', l] c_l'^dagger``."""
    M = np.asarray(M, dtype=complex)
    dim = M.shape[0]
    poly: Dict[Tuple[int, ...], complex] = {(0,) * dim: 1.0 + 0j}
    for l, power in enumerate(occ):
        column = [(lp, M[lp, l]) for lp in range(dim) if M[lp, l] != 0]
        for _ in range(power):
            nxt: Dict[Tuple[int, ...], complex] = defaultdict(complex)
            for mono, coeff in poly.items():
                for lp, w in column:
                    bumped = list(mono)
                    bumped[lp] += 1
                    nxt[tuple(bumped)] += coeff * w
            poly = nxt
    norm_in = _fact_norm(occ)
    out = {}
    for mono, coeff in poly.items():
        amp = coeff * _fact_norm(mono) / norm_in
        if abs(amp) > tol:
            out[mono] = amp
    return out


def transform_state(state: Mapping[Tuple[int, ...], complex], M: np.ndarray, tol: float = 1e-15) -> FockMap:
    """Linear extension of :func:`transform_occupation` to superpositions."""
    out: Dict[Tuple[int, ...], complex] = defaultdict(complex)
    for occ, amp in state.items():
        if amp == 0:
            continue
        for img, w in transform_occupation(tuple(occ), M).items():
            out[img] += amp * w
    return {k: v for k, v in out.items() if abs(v) > tol}


def induced_unitary(basis, single: np.ndarray) -> sp.csr_matrix:
    """Sector representation of a single-particle map on the non-B slots.

    ``single`` acts on the occupation-tuple slots ``(C, A_1..A_Q, modes)``; the
    implicit ``B`` level is left unchanged. Raises if an image leaves the
    sector (e.g. because of a tight Fock cutoff).
    """
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.states):
        for img, amp in transform_occupation(occ, single).items():
            row = basis.index.get(img)
            if row is None:
                if abs(amp) > 1e-13:
                    raise ValueError(f"image {img} of {occ} leaves the sector")
                continue
            rows.append(row)
            cols.append(col)
            vals.append(amp)
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=complex)
