"""Closed-form pairwise error probabilities and the union bound on ABER.

Every probability here is conditioned on one channel realization; the
unconditional values are plain averages over realizations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .signal_chain import psk_points, symbol_labels

__all__ = [
    "BerCurve",
    "PepTerm",
    "bit_error_weights",
    "cpep_correct",
    "cpep_erroneous",
    "pairwise_error_table",
    "q_function",
    "union_bound",
]


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(N(0, 1) > x)``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


@dataclass(frozen=True)
class PepTerm:
    kind: str            # "correct_index" or "erroneous_index"
    value: float
    hypothesis: tuple    # (c*, k*, c_hat, k_hat)

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"probability out of range: {self.value}")


@dataclass
class BerCurve:
    """Simulated and bounded ABER per transmit power.

    ``aber_bound`` is the union bound clipped to 1.
    """

    power_dbm: list = field(default_factory=list)
    trials: list = field(default_factory=list)
    bit_errors: list = field(default_factory=list)
    aber_sim: list = field(default_factory=list)
    aber_bound: list = field(default_factory=list)
    bits_per_use: int = 1
    strategy: str = ""
    M: int = 0
    B: int = 0
    seed: int = 0
    singular_redraws: int = 0

    def __len__(self) -> int:
        return len(self.power_dbm)

    def standard_error(self) -> np.ndarray:
        """Binomial standard error of ``aber_sim`` counting every bit as a trial."""
        p = np.asarray(self.aber_sim, dtype=float)
        n = np.asarray(self.trials, dtype=float) * self.bits_per_use
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(n > 0, np.sqrt(p * (1 - p) / n), np.nan)


def cpep_correct(response: complex, delta_s: complex, filter_norm: float, power: float,
                 sigma: float) -> float:
    """Probability that ``s*`` is mistaken for ``s_hat`` on the correct branch.

    ``response`` is ``f_r,c*^H H_eff(b*) f_t``, ``delta_s = s* - s_hat`` and
    ``filter_norm = ||f_r,c*||``.  The decision statistic is Gaussian with
    mean ``P |a|^2`` and variance ``2 sigma^2 P ||f_r||^2 |a|^2`` where
    ``a = response * delta_s``, giving ``Q(sqrt(P) |a| / (sqrt(2) sigma ||f_r||))``.
    """
    if delta_s == 0:
        raise ValueError("s* and s_hat must differ")
    a = abs(response * delta_s)
    return float(q_function(np.sqrt(power) * a / (np.sqrt(2.0) * sigma * filter_norm)))


def cpep_erroneous(difference: complex, filter_norm: float, power: float,
                   sigma: float) -> float:
    """Probability that hypothesis ``(c_hat, s_hat)`` beats the truth when
    ``c_hat != c*``.

    ``difference`` is ``f_r,c_hat^H (H_eff(b*) s* - H_eff(b_hat) s_hat) f_t``.
    With independent whitened branches the comparison is between a central
    and a non-central chi-square (2 d.o.f., non-centrality ``lam``), and the
    probability is ``exp(-lam / 4) / 2``.
    """
    lam = 2.0 * power * abs(difference) ** 2 / (sigma * filter_norm) ** 2
    return float(0.5 * np.exp(-lam / 4.0))


def bit_error_weights(order: int, m: int) -> np.ndarray:
    """Hamming distance between the labels of every pair of hypotheses,
    shape ``(B*M, B*M)``; hypothesis ``h = c * m + k``."""
    return _weights(order, m).copy()


@lru_cache(maxsize=32)
def _weights(order: int, m: int) -> np.ndarray:
    labels = symbol_labels(order, m)
    x = np.bitwise_xor(labels[:, None], labels[None, :])
    w = np.vectorize(lambda v: bin(int(v)).count("1"))(x)
    w.flags.writeable = False
    return w


def pairwise_error_table(responses: np.ndarray, m: int, powers, sigma: float,
                         filter_norm: float) -> np.ndarray:
    """Conditional pairwise error probabilities for all hypothesis pairs.

    Parameters
    ----------
    responses : ndarray, shape (B, B)
        ``U[c, c'] = f_r,c^H H_eff(b_c') f_t``.
    powers : array_like
        Transmit powers in watts.
    filter_norm : float
        Common norm of the whitened receive filters.

    Returns
    -------
    ndarray, shape (len(powers), B*M, B*M)
        Entry ``[p, h*, h_hat]``; the diagonal is zero.
    """
    order = responses.shape[0]
    powers = np.atleast_1d(np.asarray(powers, dtype=float))[:, None, None]
    ct, ch, st, sh = _hypothesis_grid(order, m)
    var = (sigma * filter_norm) ** 2

    # same branch: decision distance is on the diagonal response
    a = np.abs(responses[ct, ct] * (st - sh))
    correct = q_function(np.sqrt(powers) * a / np.sqrt(2.0 * var))
    # other branch: leakage of the true codeword vs expected hypothesis signal
    d = responses[ch, ct] * st - responses[ch, ch] * sh
    wrong = 0.5 * np.exp(-powers * np.abs(d) ** 2 / (2.0 * var))

    table = np.where(ct == ch, correct, wrong)
    table[:, np.arange(order * m), np.arange(order * m)] = 0.0
    return table


@lru_cache(maxsize=32)
def _hypothesis_grid(order: int, m: int):
    """Index/point grids with transmitted hypotheses on axis 0."""
    s = psk_points(m)
    c, k = np.divmod(np.arange(order * m), m)
    return c[:, None], c[None, :], s[k][:, None], s[k][None, :]


def union_bound(pep_table: np.ndarray, order: int, m: int) -> np.ndarray:
    """Bit-weighted union bound ``sum E_b * PEP / (eta M B)`` for each power."""
    eta = int(np.log2(order * m))
    weights = _weights(order, m)
    return np.einsum("pij,ij->p", pep_table, weights) / (eta * m * order)
