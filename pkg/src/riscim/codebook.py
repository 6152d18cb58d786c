"""CIM codebook (RIS phase profiles) and matched analog combiner.

A codebook of order ``B`` holds one RIS phase profile per index symbol and
the receive combiner column that goes with it.  Codeword ``k`` (0-based)
carries the index bits of ``k`` in natural binary.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .arrays import steering_matrix
from .channel import ChannelRealization

__all__ = [
    "BGCS",
    "RCS",
    "SIMPLE",
    "SSM",
    "STRATEGIES",
    "CimCodebook",
    "best_path_per_cluster",
    "build_benchmark_codebook",
    "build_bgcs_codebook",
    "build_codebook",
    "effective_path_gain",
    "effective_path_gains",
    "r_only_path_gains",
    "save_codebook_csv",
    "select_clusters",
]

BGCS = "BGCS-CIM"
SIMPLE = "SIMPLE-CIM"
SSM = "SSM"
RCS = "RCS"
STRATEGIES = (BGCS, SIMPLE, SSM, RCS)
CLUSTER_STRATEGIES = (BGCS, SIMPLE)


@dataclass
class CimCodebook:
    codewords: np.ndarray        # (B, N), unit-modulus RIS reflection coefficients
    combiner: np.ndarray         # (Nr, B), unit-norm columns
    selected: list               # B (cluster, path) pairs, in codeword order
    strategy: str

    @property
    def order(self) -> int:
        return self.codewords.shape[0]

    @property
    def index_bits(self) -> int:
        return int(np.log2(self.order))

    def phases(self) -> np.ndarray:
        """RIS phase shifts in radians, shape ``(B, N)``."""
        return np.angle(self.codewords)


def effective_path_gains(real: ChannelRealization, f_t: np.ndarray, power: float = 1.0,
                         array_gain: float = 1.0) -> np.ndarray:
    """Cascaded gain of every path when the RIS is steered at it, shape ``(C, L)``.

    ``G_uv = sqrt(P) g / sqrt(N) * a_r(uv)^H R diag(a_ris(uv)) G f_t`` where
    ``g`` is the product of the Tx and Rx antenna gains.
    """
    a_ris, a_rx = real.path_steering()
    incident = real.G @ f_t
    reflected = (a_ris * incident) @ real.R.T
    gains = np.einsum("cln,cln->cl", a_rx.conj(), reflected)
    return np.sqrt(power) * array_gain / np.sqrt(real.ris.n_elements) * gains


def effective_path_gain(real: ChannelRealization, f_t: np.ndarray, u: int, v: int,
                        power: float = 1.0, array_gain: float = 1.0) -> complex:
    """Single-path version of :func:`effective_path_gains`."""
    c, l = real.beta.shape
    if not (0 <= u < c and 0 <= v < l):
        raise IndexError(f"path ({u}, {v}) outside a {c}x{l} cluster grid")
    a_ris = steering_matrix(real.ris, *[a[u, v] for a in real.clusters.ris_angles()])
    a_rx = steering_matrix(real.rx, *[a[u, v] for a in real.clusters.rx_angles()])
    val = a_rx.conj() @ real.R @ (a_ris * (real.G @ f_t))
    return complex(np.sqrt(power) * array_gain / np.sqrt(real.ris.n_elements) * val)


def r_only_path_gains(real: ChannelRealization) -> np.ndarray:
    """Beamformed gain of each path through ``R`` alone, ``a_r^H R a_ris``."""
    a_ris, a_rx = real.path_steering()
    return np.einsum("cln,cln->cl", a_rx.conj(), a_ris @ real.R.T)


def best_path_per_cluster(gains: np.ndarray) -> np.ndarray:
    """Index of the strongest path in every cluster (ties -> lowest index)."""
    return np.argmax(np.abs(gains) ** 2, axis=1)


def select_clusters(gains: np.ndarray, order: int):
    """Pick ``order`` clusters by their best path, strongest first.

    Returns ``(cluster, path)`` pairs; equal gains go to the lower cluster index.
    """
    best = best_path_per_cluster(gains)
    power = np.abs(gains[np.arange(gains.shape[0]), best]) ** 2
    remaining = list(range(gains.shape[0]))
    chosen = []
    for _ in range(order):
        k = max(remaining, key=lambda c: (power[c], -c))
        chosen.append((k, int(best[k])))
        remaining.remove(k)
    return chosen


def _assemble(real: ChannelRealization, selected, strategy: str) -> CimCodebook:
    cs = np.array([c for c, _ in selected])
    ls = np.array([l for _, l in selected])
    a_ris, a_rx = real.path_steering()
    codewords = np.exp(1j * np.angle(a_ris[cs, ls]))
    combiner = a_rx[cs, ls].T
    return CimCodebook(codewords=codewords, combiner=combiner,
                       selected=[(int(c), int(l)) for c, l in selected], strategy=strategy)


def _check_order(order: int, limit: int, what: str):
    if order < 1 or order & (order - 1):
        raise ValueError(f"codebook order must be a power of two, got {order}")
    if order > limit:
        raise ValueError(f"codebook order {order} exceeds the number of {what} ({limit})")


def build_bgcs_codebook(real: ChannelRealization, f_t: np.ndarray, order: int,
                        power: float = 1.0, array_gain: float = 1.0) -> CimCodebook:
    """Best-gain cluster selection over the full cascaded channel.

    Every cluster is represented by its path with the largest effective gain;
    clusters are then taken greedily, strongest first, until ``order`` are
    chosen.  Codeword ``k`` steers the RIS at the chosen path of the ``k``-th
    pick and combiner column ``k`` is the Rx response of that path.
    """
    _check_order(order, real.beta.shape[0], "clusters")
    gains = effective_path_gains(real, f_t, power, array_gain)
    return _assemble(real, select_clusters(gains, order), BGCS)


def build_benchmark_codebook(strategy: str, real: ChannelRealization, f_t: np.ndarray,
                             order: int, power: float = 1.0, array_gain: float = 1.0,
                             rng: np.random.Generator | None = None) -> CimCodebook:
    """Codebooks of the comparison schemes.

    SIMPLE-CIM
        Same greedy cluster selection as BGCS-CIM but ranked by the gain of
        ``R`` alone, so the Tx->RIS link plays no part.
    SSM
        The ``order`` strongest individual paths ranked by the gain of ``R``
        alone, with no regard to cluster membership.  Several codewords may
        therefore come from one cluster.
    RCS
        One cluster chosen uniformly at random (its strongest path), no index
        bits; ``order`` is ignored and the result always has order 1.
    """
    if strategy == SIMPLE:
        _check_order(order, real.beta.shape[0], "clusters")
        return _assemble(real, select_clusters(r_only_path_gains(real), order), SIMPLE)
    if strategy == SSM:
        _check_order(order, real.beta.size, "paths")
        gains = np.abs(r_only_path_gains(real)).ravel() ** 2
        flat = np.argsort(-gains, kind="stable")[:order]
        n_paths = real.beta.shape[1]
        return _assemble(real, [divmod(int(i), n_paths) for i in flat], SSM)
    if strategy == RCS:
        if rng is None:
            raise ValueError("RCS needs a random generator")
        gains = effective_path_gains(real, f_t, power, array_gain)
        c = int(rng.integers(real.beta.shape[0]))
        return _assemble(real, [(c, int(best_path_per_cluster(gains)[c]))], RCS)
    if strategy == BGCS:
        return build_bgcs_codebook(real, f_t, order, power, array_gain)
    raise ValueError(f"unknown codebook strategy {strategy!r}; expected one of {STRATEGIES}")


def build_codebook(strategy: str, real: ChannelRealization, f_t: np.ndarray, order: int,
                   power: float = 1.0, array_gain: float = 1.0,
                   rng: np.random.Generator | None = None) -> CimCodebook:
    if strategy == BGCS:
        return build_bgcs_codebook(real, f_t, order, power, array_gain)
    return build_benchmark_codebook(strategy, real, f_t, order, power, array_gain, rng)


def save_codebook_csv(path, codebook: CimCodebook) -> None:
    """One row per codeword: index, cluster, path, then per-element phases (rad)."""
    n = codebook.codewords.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "cluster", "path"] + [f"phase_{i}" for i in range(n)])
        for k, ((c, l), ph) in enumerate(zip(codebook.selected, codebook.phases())):
            w.writerow([k, c, l] + [repr(float(p)) for p in ph])
