"""Inversion of the WiFi coding chain over GF(2).

The scramble -> encode -> interleave chain is affine: chain(x) = G x + c
with c = chain(0).  Solving G x = y + c for the payload bits that realize a
desired grid of constellation points is over-constrained in general (a
rate-1/2 encoder is injective, not surjective), so the solver satisfies a
maximal consistent subsystem greedily, taking constraint bits in descending
target-bin energy so any compromise lands on low-impact subcarriers, and
reports every bit and subcarrier it could not hit.

Only the constrained rows of G are ever materialized.  Columns of G are the
chain's responses to unit vectors; the linear part of the chain is bitwise,
so 64 unit-vector probes ride one uint64 lane array at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .gf2 import WORD, Gf2Matrix, eliminate
from .wifi import (
    DATA_SUBCARRIERS,
    McsConfig,
    bits_to_psdu,
    coding_chain,
    interleave_permutation,
)
from .wifi import G0_TAPS, G1_TAPS, _PUNCTURE_34_KEEP


@dataclass
class CodedBitTarget:
    """Desired interleaved coded bits plus a constraint mask (1 = must hit)."""

    y: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.uint8)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.y.shape != self.mask.shape:
            raise DimensionError("y and mask must have equal length")


@dataclass
class SolveReport:
    x: np.ndarray
    satisfied: int
    violated_positions: list
    perturbed_subcarriers: list = field(default_factory=list)
    psdu: bytes | None = None
    rank: int = 0


def _lane_chain_linear(unit_base: int, lanes: int, n_bits: int, mcs: McsConfig) -> np.ndarray:
    """Linear chain response for unit vectors e_{unit_base .. unit_base+lanes-1}.

    Returns packed words (n_coded,) where bit b of position j is the j-th
    coded bit of chain(e_{unit_base+b}) + chain(0).  Scrambling cancels in
    the linear part, leaving encode + interleave, both bitwise-parallel.
    """
    x = np.zeros(n_bits, dtype=np.uint64)
    x[unit_base : unit_base + lanes] = np.uint64(1) << np.arange(lanes, dtype=np.uint64)
    # convolutional encoder across lanes
    a = np.zeros(n_bits, dtype=np.uint64)
    b = np.zeros(n_bits, dtype=np.uint64)
    for d, (t0, t1) in enumerate(zip(G0_TAPS, G1_TAPS)):
        seg = x if d == 0 else np.concatenate([np.zeros(d, dtype=np.uint64), x[:-d]])
        if t0:
            a ^= seg
        if t1:
            b ^= seg
    coded = np.empty(2 * n_bits, dtype=np.uint64)
    coded[0::2] = a
    coded[1::2] = b
    if mcs.coding_rate == "3/4":
        coded = coded[np.tile(_PUNCTURE_34_KEEP, len(coded) // 6)]
    perm = interleave_permutation(mcs.n_cbps, mcs.n_bpsc)
    blocks = coded.reshape(-1, mcs.n_cbps)
    out = np.empty_like(blocks)
    out[:, perm] = blocks
    return out.reshape(-1)


def build_generator(n_payload_bits: int, mcs: McsConfig, scrambler_seed: int):
    """(G, c) with chain(x) = G x + c for all payload bit vectors x.

    Column i of G is chain(e_i) + c; c is the scrambler's affine offset
    chain(0).  G has (n_payload_bits / n_dbps) * n_cbps rows.
    """
    if n_payload_bits % mcs.n_dbps != 0:
        raise DimensionError(
            f"n_payload_bits {n_payload_bits} must fill whole symbols of {mcs.n_dbps}"
        )
    c = coding_chain(np.zeros(n_payload_bits, dtype=np.uint8), mcs, scrambler_seed)
    n_coded = len(c)
    G = Gf2Matrix.zeros(n_coded, n_payload_bits)
    for base in range(0, n_payload_bits, WORD):
        lanes = min(WORD, n_payload_bits - base)
        resp = _lane_chain_linear(base, lanes, n_payload_bits, mcs)
        G.words[:, base // WORD] = resp
    return G, c


def gf2_solve(G: Gf2Matrix, target: CodedBitTarget, c=None,
              order: np.ndarray | None = None) -> SolveReport:
    """Solve G x = y + c restricted to masked rows, greedily maximal.

    ``order`` ranks the masked rows (indices into the masked subset); rows
    conflicting with higher-priority ones are reported through their
    original coded-bit positions.  Free variables are zero.
    """
    y = target.y
    if len(y) != G.rows:
        raise DimensionError(f"target length {len(y)} != {G.rows} rows")
    rhs_full = y ^ (np.asarray(c, dtype=np.uint8) if c is not None else 0)
    idx = np.nonzero(target.mask)[0]
    rows = G.words[idx]
    rhs = rhs_full[idx]
    res = eliminate(rows, rhs, G.cols, order=order)
    violated = [int(idx[i]) for i in res.violated]
    return SolveReport(
        x=res.x,
        satisfied=len(idx) - len(violated),
        violated_positions=sorted(violated),
        rank=res.rank,
    )


def target_bit_positions(mcs: McsConfig, target_subcarriers, n_symbols: int) -> np.ndarray:
    """Interleaved-coded-bit positions feeding the target subcarriers,
    shape (n_symbols, m, n_bpsc)."""
    slots = np.array([DATA_SUBCARRIERS.index(sc) for sc in target_subcarriers])
    b = mcs.n_bpsc
    sym = np.arange(n_symbols)[:, None, None] * mcs.n_cbps
    return sym + slots[None, :, None] * b + np.arange(b)[None, None, :]


def solve_payload(
    index_grid: np.ndarray,
    mcs: McsConfig,
    scrambler_seed: int,
    target_subcarriers,
    bin_energy: np.ndarray | None = None,
) -> SolveReport:
    """Payload bits realizing a grid of intended constellation indices.

    ``index_grid`` is (n_symbols, m) from the emulation model;
    ``bin_energy`` (same shape) ranks constraints, largest first.  Positions
    feeding other subcarriers are unconstrained.  The report's achieved
    indices come from re-encoding the solution through the actual coding
    chain, so it is self-verifying.
    """
    index_grid = np.asarray(index_grid)
    if index_grid.ndim != 2 or index_grid.shape[1] != len(target_subcarriers):
        raise DimensionError(f"index grid {index_grid.shape} does not match "
                             f"{len(target_subcarriers)} target subcarriers")
    n_symbols, m = index_grid.shape
    n_bits = n_symbols * mcs.n_dbps
    if n_bits % 8 != 0:
        raise DimensionError(
            f"{n_symbols} symbols x {mcs.n_dbps} bits = {n_bits} payload bits, "
            "not a whole number of PSDU bytes; pad the grid to more symbols")
    n_coded = n_symbols * mcs.n_cbps
    b = mcs.n_bpsc

    pos = target_bit_positions(mcs, target_subcarriers, n_symbols)  # (S, m, b)
    y = np.zeros(n_coded, dtype=np.uint8)
    label_bits = ((index_grid[..., None] >> np.arange(b - 1, -1, -1)) & 1).astype(np.uint8)
    y[pos.reshape(-1)] = label_bits.reshape(-1)
    mask = np.zeros(n_coded, dtype=bool)
    mask[pos.reshape(-1)] = True

    c = coding_chain(np.zeros(n_bits, dtype=np.uint8), mcs, scrambler_seed)
    rhs_full = y ^ c

    # constrained rows of G, built 64 probe columns at a time
    midx = np.nonzero(mask)[0]
    n_words = (n_bits + WORD - 1) // WORD
    rows = np.zeros((len(midx), n_words), dtype=np.uint64)
    for base in range(0, n_bits, WORD):
        lanes = min(WORD, n_bits - base)
        resp = _lane_chain_linear(base, lanes, n_bits, mcs)
        rows[:, base // WORD] = resp[midx]

    if bin_energy is not None:
        prio = np.repeat(np.asarray(bin_energy, dtype=np.float64).reshape(-1), b)
        flat_pos = pos.reshape(-1)
        order_of_pos = dict(zip(flat_pos.tolist(), prio.tolist()))
        energies = np.array([order_of_pos[int(p)] for p in midx])
        order = np.argsort(-energies, kind="stable")
    else:
        order = None

    res = eliminate(rows, rhs_full[midx], n_bits, order=order)
    violated = sorted(int(midx[i]) for i in res.violated)

    # re-encode through the real chain and record every missed subcarrier
    achieved_coded = coding_chain(res.x, mcs, scrambler_seed)
    ok = np.ones(n_coded, dtype=bool)
    ok[violated] = False
    if not np.array_equal(achieved_coded[mask & ok], y[mask & ok]):
        raise AssertionError("re-encode mismatch on satisfied positions")

    achieved_bits = achieved_coded[pos]  # (S, m, b)
    weights = 1 << np.arange(b - 1, -1, -1)
    achieved_idx = (achieved_bits * weights).sum(axis=2)
    perturbed = [
        (int(s), int(target_subcarriers[t]), int(index_grid[s, t]), int(achieved_idx[s, t]))
        for s, t in zip(*np.nonzero(achieved_idx != index_grid))
    ]

    return SolveReport(
        x=res.x,
        satisfied=int(np.sum(mask)) - len(violated),
        violated_positions=violated,
        perturbed_subcarriers=perturbed,
        psdu=bits_to_psdu(res.x),
        rank=res.rank,
    )
