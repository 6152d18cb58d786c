"""Transmit/receive chain: CIM + M-PSK mapping, RIS reflection, combining,
noise whitening and joint maximum-likelihood detection."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, complex_gaussian
from .codebook import CimCodebook

__all__ = [
    "SingularWhiteningError",
    "TxSymbol",
    "WhiteningFilter",
    "branch_responses",
    "build_whitening",
    "demodulate",
    "effective_channel",
    "gray_decode",
    "gray_encode",
    "ml_detect",
    "ml_metrics",
    "modulate",
    "psk_points",
    "ris_phase_matrix",
    "symbol_labels",
    "transmit",
]


class SingularWhiteningError(np.linalg.LinAlgError):
    """Combiner columns are (numerically) linearly dependent."""


def gray_encode(k):
    return np.bitwise_xor(k, np.right_shift(k, 1))


def gray_decode(g):
    g = np.asarray(g)
    k = g.copy()
    shift = np.right_shift(g, 1)
    while np.any(shift):
        k = np.bitwise_xor(k, shift)
        shift = np.right_shift(shift, 1)
    return k


def psk_points(m: int) -> np.ndarray:
    """Unit-modulus M-PSK points ``exp(j 2 pi k / M)``; point ``k`` carries Gray label ``gray(k)``."""
    return np.exp(2j * np.pi * np.arange(m) / m)


def _bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.int8)


def _log2(n: int, what: str) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"{what} must be a power of two, got {n}")
    return n.bit_length() - 1


@dataclass(frozen=True)
class TxSymbol:
    """One channel use: codeword index ``c`` (0-based), PSK point index
    ``k`` and point ``s``, plus the source bits they carry."""

    c: int
    k: int
    s: complex
    bits: tuple


def modulate(bits, order: int, m: int) -> TxSymbol:
    """Split ``log2(order) + log2(m)`` bits into an index symbol (natural
    binary) and a Gray-labelled M-PSK symbol."""
    nb, nm = _log2(order, "codebook order"), _log2(m, "constellation order")
    bits = tuple(int(b) for b in bits)
    if len(bits) != nb + nm:
        raise ValueError(f"expected {nb + nm} bits, got {len(bits)}")
    c = _bits_to_int(bits[:nb])
    k = int(gray_decode(_bits_to_int(bits[nb:])))
    return TxSymbol(c=c, k=k, s=complex(psk_points(m)[k]), bits=bits)


def demodulate(c: int, k: int, order: int, m: int) -> np.ndarray:
    """Bits carried by codeword ``c`` and PSK point ``k``."""
    nb, nm = _log2(order, "codebook order"), _log2(m, "constellation order")
    return np.concatenate([_int_to_bits(c, nb), _int_to_bits(int(gray_encode(k)), nm)])


def symbol_labels(order: int, m: int) -> np.ndarray:
    """Integer bit label of every hypothesis ``h = c * m + k``."""
    nm = _log2(m, "constellation order")
    c, k = np.divmod(np.arange(order * m), m)
    return (c << nm) | gray_encode(k)


def ris_phase_matrix(codeword) -> np.ndarray:
    """Diagonal of the RIS reflection matrix; the RIS is passive, so every
    entry must have unit modulus.  Apply it as ``codeword * x``."""
    codeword = np.asarray(codeword, dtype=complex)
    if not np.allclose(np.abs(codeword), 1.0, rtol=0, atol=1e-9):
        raise ValueError("RIS reflection coefficients must have unit modulus")
    return codeword


def effective_channel(G: np.ndarray, R: np.ndarray, codeword: np.ndarray,
                      array_gain: float = 1.0) -> np.ndarray:
    """``g * R diag(codeword) G``, shape ``(Nr, Nt)``."""
    if R.shape[1] != codeword.shape[0] or G.shape[0] != codeword.shape[0]:
        raise ValueError(f"shape mismatch: R {R.shape}, codeword {codeword.shape}, G {G.shape}")
    return array_gain * (R @ (codeword[:, None] * G))


@dataclass
class WhiteningFilter:
    Bmat: np.ndarray  # (B, B)
    Fr: np.ndarray    # (Nr, B), columns are the per-branch receive filters


def _inv_sqrt_hermitian(a: np.ndarray, rel_floor: float = 1e-12) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    if w.min() <= rel_floor * w.max():
        raise SingularWhiteningError(
            f"correlation matrix is singular (eigenvalues {w.min():.3e} .. {w.max():.3e})")
    return (v / np.sqrt(w)) @ v.conj().T


def build_whitening(W: np.ndarray, sigma2: float) -> WhiteningFilter:
    """Correlation-based ZCA whitening of the combined noise ``W^H n``.

    With ``S = sigma2 W^H W``, ``V = diag(S)`` and ``P = V^-1/2 S V^-1/2``
    the transform is ``Bmat = P^-1/2 V^-1/2`` and the receive filter is
    ``Fr = W Bmat^H``, so ``Fr^H n`` has identity covariance.
    """
    cov = sigma2 * (W.conj().T @ W)
    var = np.real(np.diag(cov))
    if np.any(var <= 0):
        raise SingularWhiteningError("combiner has a zero column")
    d = 1.0 / np.sqrt(var)
    corr = d[:, None] * cov * d[None, :]
    Bmat = _inv_sqrt_hermitian(corr) * d[None, :]
    return WhiteningFilter(Bmat=Bmat, Fr=W @ Bmat.conj().T)


def branch_responses(codebook: CimCodebook, real: ChannelRealization, filt: WhiteningFilter,
                     f_t: np.ndarray, array_gain: float = 1.0) -> np.ndarray:
    """Matrix ``U[c, c'] = f_r,c^H H_eff(b_c') f_t``: what filter branch ``c``
    sees (per unit amplitude) when codeword ``c'`` is on the RIS."""
    incident = real.G @ f_t                                # (N,)
    reflected = real.R @ (codebook.codewords * incident).T  # (Nr, B)
    return array_gain * (filt.Fr.conj().T @ reflected)


def transmit(sym: TxSymbol, codebook: CimCodebook, real: ChannelRealization,
             f_t: np.ndarray, power: float, sigma2: float, rng: np.random.Generator,
             filt: WhiteningFilter | None = None, array_gain: float = 1.0) -> np.ndarray:
    """Filtered received vector ``z_F = sqrt(P) Fr^H H_eff f_t s + Fr^H n``."""
    if filt is None:
        filt = build_whitening(codebook.combiner, sigma2)
    h = effective_channel(real.G, real.R, codebook.codewords[sym.c], array_gain)
    noise = complex_gaussian(rng, sigma2, real.R.shape[0])
    return np.sqrt(power) * filt.Fr.conj().T @ (h @ f_t) * sym.s + filt.Fr.conj().T @ noise


def ml_metrics(z_f: np.ndarray, responses: np.ndarray, power: float, m: int) -> np.ndarray:
    """``|z_F(c) - sqrt(P) U[c, c] s_k|^2`` for every hypothesis, shape ``(B, M)``."""
    expected = np.sqrt(power) * np.diag(responses)[:, None] * psk_points(m)[None, :]
    return np.abs(z_f[:, None] - expected) ** 2


def ml_detect(z_f: np.ndarray, codebook: CimCodebook, real: ChannelRealization,
              f_t: np.ndarray, power: float, m: int, filt: WhiteningFilter,
              array_gain: float = 1.0):
    """Exhaustive search over the ``B * M`` hypotheses; returns ``(c, k)``.

    Each hypothesis is scored on its own filter branch only.  Ties go to the
    lowest ``c`` and then the lowest ``k``.
    """
    u = branch_responses(codebook, real, filt, f_t, array_gain)
    metrics = ml_metrics(z_f, u, power, m)
    c, k = divmod(int(np.argmin(metrics)), m)
    return c, k


def dump_ml_metrics_csv(path, metrics: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "k", "metric"])
        for (c, k), v in np.ndenumerate(metrics):
            w.writerow([c, k, repr(float(v))])
