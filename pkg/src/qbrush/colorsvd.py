"""SVD color encoding: RGBA pixel blocks <-> small statevectors.

A region's m x 4 RGBA matrix C is factored as C = U S V (V unitary, rows =
right singular vectors).  The encoded state stacks the blocks V^j @ log(S),
j = 0 .. 2^(n-2) - 1, normalized to unit length:

    n = 2:  [S^]                 (4 amplitudes)
    n = 3:  [S^; V S^]           (8 amplitudes)
    n = 4:  [S^; V S^; V^2 S^; V^3 S^]

with S^ = log of the singular values (clamped to >= SV_FLOOR first, since
uniform regions are rank deficient).  Decoding reverses the construction
and reassembles pixels as U S' V', clipping into [0, 255].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevec import Statevector

CHANNELS = 4  # RGBA
MIN_PIXELS = 4  # SVD needs full column rank for 4 singular values
SV_FLOOR = 1e-6


class RegionTooSmallError(ValueError):
    """Fewer than MIN_PIXELS pixels in the region."""


class DegenerateRegionError(ValueError):
    """Region carries no color information (all channels zero)."""


@dataclass(frozen=True)
class SvdEncoding:
    """Result of encoding one pixel block; keeps the factors for decoding."""

    n_qubits: int
    state: Statevector
    u: np.ndarray  # (m, 4) semi-unitary
    v: np.ndarray  # (4, 4) unitary (rows are right singular vectors)
    norm_factor: float

    def __post_init__(self) -> None:
        for name in ("u", "v"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _as_pixel_matrix(pixels: np.ndarray) -> np.ndarray:
    mat = np.asarray(pixels, dtype=float)
    if mat.ndim != 2 or mat.shape[1] != CHANNELS:
        raise ValueError(f"expected an (m, {CHANNELS}) pixel matrix, got shape {mat.shape}")
    if np.any(mat < 0) or np.any(mat > 255):
        raise ValueError("pixel values must lie in [0, 255]")
    return mat


def encode(pixels: np.ndarray, n_qubits: int) -> SvdEncoding:
    """Encode an (m, 4) RGBA block into an n-qubit state (n in {2, 3, 4})."""
    if n_qubits not in (2, 3, 4):
        raise ValueError(f"n_qubits must be 2, 3 or 4, got {n_qubits}")
    mat = _as_pixel_matrix(pixels)
    if mat.shape[0] < MIN_PIXELS:
        raise RegionTooSmallError(
            f"region has {mat.shape[0]} pixels; at least {MIN_PIXELS} are needed"
        )
    if not mat.any():
        raise DegenerateRegionError("region is entirely zero")

    u, s, v = np.linalg.svd(mat, full_matrices=False)
    s_hat = np.log(np.maximum(s, SV_FLOOR))

    n_blocks = 2 ** (n_qubits - 2)
    blocks = []
    block = s_hat
    for _ in range(n_blocks):
        blocks.append(block)
        block = v @ block
    vec = np.concatenate(blocks)
    norm_factor = float(np.linalg.norm(vec))
    if norm_factor == 0.0:
        raise DegenerateRegionError("encoded coefficient vector is zero")
    state = Statevector(n_qubits, vec / norm_factor)
    return SvdEncoding(n_qubits, state, u, v, norm_factor)


def _remove_global_phase(amps: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rotate the state so its anchor amplitude is real with the stored sign.

    The anchor is the largest-magnitude amplitude of block 0 in the encoded
    state; aligning to that entry's original sign (rather than forcing
    "positive") keeps identity evolution an exact fixed point even for
    rank-deficient blocks whose dominant log-singular-value is negative.
    """
    k = int(np.argmax(np.abs(reference[:CHANNELS])))
    sign = 1.0 if reference[k] >= 0 else -1.0
    mag = abs(amps[k])
    if mag < 1e-300:
        return amps
    return amps * (sign * amps[k].conjugate() / mag)


def _recover_v(encoding: SvdEncoding, s_hat: np.ndarray, block1: np.ndarray) -> np.ndarray:
    """Unitary V' consistent with block 1 of the evolved state.

    The stored V is corrected by the minimum-norm (rank-1 least-squares)
    update that maps s_hat onto block 1, then projected to the nearest
    unitary by polar decomposition.  Identity evolution leaves V untouched,
    which makes encode -> decode an exact roundtrip.
    """
    denom = float(s_hat @ s_hat)
    if denom < 1e-24:
        return encoding.v
    residual = block1 - encoding.v @ s_hat
    m = encoding.v + np.outer(residual, s_hat) / denom
    w, _, zt = np.linalg.svd(m)
    return w @ zt


def _resample_rows(u: np.ndarray, m_new: int) -> np.ndarray:
    """Linear interpolation of U's rows onto m_new evenly spaced positions."""
    m_old = u.shape[0]
    if m_new == m_old:
        return u
    old_pos = np.linspace(0.0, 1.0, m_old)
    new_pos = np.linspace(0.0, 1.0, m_new)
    return np.column_stack([np.interp(new_pos, old_pos, u[:, c]) for c in range(u.shape[1])])


def decode(encoding: SvdEncoding, evolved: Statevector, target_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Reconstruct an (m', 4) RGBA block from an evolved state.

    ``target_shape`` defaults to the encoded block's own shape.  Output is
    clipped to [0, 255] elementwise; out-of-range reconstructions are
    expected after evolution and are absorbed by the clip.
    """
    if evolved.n_qubits != encoding.n_qubits:
        raise ValueError(
            f"evolved state has {evolved.n_qubits} qubits, encoding has {encoding.n_qubits}"
        )
    m_out = encoding.u.shape[0] if target_shape is None else int(target_shape[0])
    if target_shape is not None and int(target_shape[1]) != CHANNELS:
        raise ValueError(f"target shape must have {CHANNELS} channels")

    reference = encoding.norm_factor * encoding.state.amplitudes.real
    coeffs = encoding.norm_factor * _remove_global_phase(evolved.amplitudes, reference)
    coeffs = coeffs.real
    s_hat = coeffs[:CHANNELS]
    s_new = np.exp(s_hat)

    if encoding.n_qubits == 2:
        v_new = encoding.v
    else:
        v_new = _recover_v(encoding, s_hat, coeffs[CHANNELS : 2 * CHANNELS])

    u = _resample_rows(encoding.u, m_out)
    block = u @ np.diag(s_new) @ v_new
    return np.clip(block, 0.0, 255.0)
