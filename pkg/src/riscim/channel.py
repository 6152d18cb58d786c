"""Cascaded Saleh-Valenzuela channel: LOS Tx->RIS link ``G`` and clustered
NLOS RIS->Rx link ``R``.

Every generator takes an explicit ``numpy.random.Generator``; nothing here
holds global state.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .arrays import Angle2D, ArrayGeometry, steering_matrix, steering_vector, wrap_angles

__all__ = [
    "LOS_28GHZ",
    "NLOS_28GHZ",
    "ChannelRealization",
    "ClusterGeometry",
    "LinkSetup",
    "PathLossParams",
    "assemble_R",
    "complex_gaussian",
    "generate_G",
    "generate_R",
    "load_realization",
    "path_loss_db",
    "path_steering",
    "sample_cluster_geometry",
    "save_realization",
]


@dataclass(frozen=True)
class PathLossParams:
    """Log-distance path loss ``a + 10 b log10(d) + xi`` with ``xi ~ N(0, sigma_xi^2)`` dB."""

    a: float
    b: float
    sigma_xi: float

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError(f"path-loss slope must be positive, got {self.b}")
        if self.sigma_xi < 0:
            raise ValueError(f"shadowing std must be non-negative, got {self.sigma_xi}")


# 28 GHz outdoor measurements
LOS_28GHZ = PathLossParams(a=61.4, b=2.0, sigma_xi=5.8)
NLOS_28GHZ = PathLossParams(a=72.0, b=2.92, sigma_xi=8.7)


def path_loss_db(d: float, params: PathLossParams, xi: float = 0.0) -> float:
    """Path loss in dB at distance ``d`` metres for a given shadowing sample ``xi``."""
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return params.a + 10.0 * params.b * np.log10(d) + xi


def complex_gaussian(rng: np.random.Generator, variance: float, size=None):
    """Circularly-symmetric CN(0, variance) samples."""
    scale = np.sqrt(variance / 2.0)
    re = rng.normal(0.0, 1.0, size)
    im = rng.normal(0.0, 1.0, size)
    return scale * (re + 1j * im)


@dataclass(frozen=True)
class ClusterGeometry:
    """Angles of the RIS->Rx clusters.

    ``ris_mean``/``rx_mean`` hold per-cluster mean (azimuth, elevation) of
    departure at the RIS and arrival at the Rx, shape ``(C, 2)``.
    ``ris_offset``/``rx_offset`` hold per-path offsets, shape ``(C, L, 2)``.
    """

    ris_mean: np.ndarray
    rx_mean: np.ndarray
    ris_offset: np.ndarray
    rx_offset: np.ndarray

    def __post_init__(self):
        c, l, _ = self.ris_offset.shape
        if self.rx_offset.shape != (c, l, 2) or self.ris_mean.shape != (c, 2) \
                or self.rx_mean.shape != (c, 2):
            raise ValueError("inconsistent cluster geometry shapes")

    @property
    def n_clusters(self) -> int:
        return self.ris_offset.shape[0]

    @property
    def n_paths(self) -> int:
        return self.ris_offset.shape[1]

    def ris_angles(self):
        """Wrapped (azimuth, elevation) arrays of shape ``(C, L)`` at the RIS."""
        ang = self.ris_mean[:, None, :] + self.ris_offset
        return wrap_angles(ang[..., 0], ang[..., 1])

    def rx_angles(self):
        """Wrapped (azimuth, elevation) arrays of shape ``(C, L)`` at the Rx."""
        ang = self.rx_mean[:, None, :] + self.rx_offset
        return wrap_angles(ang[..., 0], ang[..., 1])

    def departure(self, c: int, l: int) -> Angle2D:
        az, el = self.ris_angles()
        return Angle2D(az[c, l], el[c, l])

    def arrival(self, c: int, l: int) -> Angle2D:
        az, el = self.rx_angles()
        return Angle2D(az[c, l], el[c, l])

    def shifted(self, delta: float) -> "ClusterGeometry":
        """Move every cluster rigidly by ``delta`` radians in azimuth and elevation,
        at both the RIS and the Rx side."""
        return replace(self, ris_mean=self.ris_mean + delta, rx_mean=self.rx_mean + delta)


def sample_cluster_geometry(rng: np.random.Generator, n_clusters: int, n_paths: int,
                            spread_deg: float) -> ClusterGeometry:
    """Draw cluster means uniformly and Laplacian intra-cluster offsets.

    Mean azimuths are ``U[0, 2pi)``, mean elevations ``U[0, pi)``.  Path
    offsets are Laplacian with standard deviation ``spread_deg`` (scale
    ``spread / sqrt(2)``), drawn independently for all four angles.
    """
    if n_clusters < 1 or n_paths < 1:
        raise ValueError("need at least one cluster and one path")
    if spread_deg < 0:
        raise ValueError(f"angular spread must be non-negative, got {spread_deg}")
    means = rng.uniform(0.0, 1.0, size=(n_clusters, 4)) * np.array([2 * np.pi, np.pi] * 2)
    scale = np.deg2rad(spread_deg) / np.sqrt(2.0)
    offsets = rng.laplace(0.0, scale, size=(n_clusters, n_paths, 4))
    return ClusterGeometry(
        ris_mean=means[:, 0:2],
        rx_mean=means[:, 2:4],
        ris_offset=offsets[..., 0:2],
        rx_offset=offsets[..., 2:4],
    )


def generate_G(geom_tx: ArrayGeometry, geom_ris: ArrayGeometry, distance: float,
               params: PathLossParams, rng: np.random.Generator,
               departure: Angle2D | None = None, arrival: Angle2D | None = None):
    """Rank-one LOS channel ``G = alpha0 a_ris(arrival) a_t(departure)^H``.

    LOS angles are used as given; any that are missing are drawn uniformly.

    Returns
    -------
    G : ndarray, shape (N, Nt)
    alpha0 : complex
    los_angles : tuple of Angle2D
        (departure at the Tx, arrival at the RIS).
    """
    if departure is None:
        departure = Angle2D(rng.uniform(0, 2 * np.pi), rng.uniform(0, np.pi))
    if arrival is None:
        arrival = Angle2D(rng.uniform(0, 2 * np.pi), rng.uniform(0, np.pi))
    xi = rng.normal(0.0, params.sigma_xi)
    variance = 10.0 ** (-0.1 * path_loss_db(distance, params, xi))
    alpha0 = complex(complex_gaussian(rng, variance))
    G = alpha0 * np.outer(steering_vector(geom_ris, arrival),
                          steering_vector(geom_tx, departure).conj())
    return G, alpha0, (departure, arrival)


def path_steering(geom_ris: ArrayGeometry, geom_rx: ArrayGeometry, clusters: ClusterGeometry):
    """Steering vectors of every path at the RIS ``(C, L, N)`` and the Rx ``(C, L, Nr)``."""
    return (steering_matrix(geom_ris, *clusters.ris_angles()),
            steering_matrix(geom_rx, *clusters.rx_angles()))


def assemble_R(geom_ris: ArrayGeometry, geom_rx: ArrayGeometry,
               clusters: ClusterGeometry, beta: np.ndarray, steering=None) -> np.ndarray:
    """Sum of ``C*L`` rank-one path terms scaled by ``sqrt(N Nr / (C L))``.

    ``steering`` may pass precomputed :func:`path_steering` output.
    """
    n_paths = clusters.n_clusters * clusters.n_paths
    scale = np.sqrt(geom_ris.n_elements * geom_rx.n_elements / n_paths)
    a_ris, a_rx = steering if steering is not None else path_steering(geom_ris, geom_rx, clusters)
    a_ris = a_ris.reshape(n_paths, -1)
    a_rx = a_rx.reshape(n_paths, -1)
    return scale * (a_rx.T * np.ravel(beta)) @ a_ris.conj()


def generate_R(geom_ris: ArrayGeometry, geom_rx: ArrayGeometry, distance: float,
               params: PathLossParams, clusters: ClusterGeometry,
               rng: np.random.Generator, steering=None):
    """Clustered NLOS channel with i.i.d. CN(0, 10^(-PL/10)) path gains.

    One shadowing sample is drawn per call and shared by all paths.

    Returns ``(R, beta)`` with ``R`` of shape ``(Nr, N)`` and ``beta`` of
    shape ``(C, L)``.
    """
    xi = rng.normal(0.0, params.sigma_xi)
    variance = 10.0 ** (-0.1 * path_loss_db(distance, params, xi))
    beta = complex_gaussian(rng, variance, (clusters.n_clusters, clusters.n_paths))
    return assemble_R(geom_ris, geom_rx, clusters, beta, steering), beta


@dataclass
class ChannelRealization:
    """One draw of the cascaded channel plus everything needed to rebuild it."""

    G: np.ndarray
    R: np.ndarray
    alpha0: complex
    beta: np.ndarray
    los_departure: Angle2D
    los_arrival: Angle2D
    clusters: ClusterGeometry
    tx: ArrayGeometry
    ris: ArrayGeometry
    rx: ArrayGeometry
    _steering: tuple | None = field(default=None, repr=False, compare=False)

    def path_steering(self):
        """Cached ``(a_ris, a_rx)`` steering vectors of every path, ``(C, L, N)`` and ``(C, L, Nr)``."""
        if self._steering is None:
            self._steering = path_steering(self.ris, self.rx, self.clusters)
        return self._steering

    @property
    def scale_R(self) -> float:
        return float(np.sqrt(self.ris.n_elements * self.rx.n_elements / self.beta.size))

    def reconstruct_G(self) -> np.ndarray:
        return self.alpha0 * np.outer(steering_vector(self.ris, self.los_arrival),
                                      steering_vector(self.tx, self.los_departure).conj())

    def reconstruct_R(self) -> np.ndarray:
        return assemble_R(self.ris, self.rx, self.clusters, self.beta)

    def tx_beamformer(self) -> np.ndarray:
        """Transmit beam matched to the LOS departure direction."""
        return steering_vector(self.tx, self.los_departure)

    def with_clusters(self, clusters: ClusterGeometry) -> "ChannelRealization":
        """Same gains and LOS link, different cluster angles (R rebuilt)."""
        steering = path_steering(self.ris, self.rx, clusters)
        return replace(self, clusters=clusters, _steering=steering,
                       R=assemble_R(self.ris, self.rx, clusters, self.beta, steering))


@dataclass(frozen=True)
class LinkSetup:
    """Static description of the Tx -> RIS -> Rx link used to draw channels.

    ``los_departure``/``los_arrival`` fix the LOS angles; leave them as
    ``None`` to draw them uniformly per realization.
    """

    tx: ArrayGeometry
    ris: ArrayGeometry
    rx: ArrayGeometry
    d_tx_ris: float
    d_ris_rx: float
    n_clusters: int
    n_paths: int
    spread_deg: float
    los: PathLossParams = LOS_28GHZ
    nlos: PathLossParams = NLOS_28GHZ
    los_departure: Angle2D | None = None
    los_arrival: Angle2D | None = None

    def draw(self, rng: np.random.Generator) -> ChannelRealization:
        G, alpha0, (dep, arr) = generate_G(self.tx, self.ris, self.d_tx_ris, self.los, rng,
                                           self.los_departure, self.los_arrival)
        clusters = sample_cluster_geometry(rng, self.n_clusters, self.n_paths, self.spread_deg)
        steering = path_steering(self.ris, self.rx, clusters)
        R, beta = generate_R(self.ris, self.rx, self.d_ris_rx, self.nlos, clusters, rng, steering)
        return ChannelRealization(G=G, R=R, alpha0=alpha0, beta=beta,
                                  los_departure=dep, los_arrival=arr, clusters=clusters,
                                  tx=self.tx, ris=self.ris, rx=self.rx, _steering=steering)


def _geom_row(g: ArrayGeometry) -> np.ndarray:
    return np.array([g.nx, g.ny, g.dx, g.dy, g.wavelength], dtype=float)


def _geom_from_row(row) -> ArrayGeometry:
    return ArrayGeometry(int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4]))


def save_realization(path, real: ChannelRealization) -> None:
    """Dump a realization to ``.npz``.

    Keys: ``tx``, ``ris``, ``rx`` (nx, ny, dx, dy, wavelength);
    ``los`` (departure az, el, arrival az, el) in radians; ``alpha0`` and
    ``beta`` as re/im pairs in the last axis; ``ris_mean``, ``rx_mean``,
    ``ris_offset``, ``rx_offset`` in radians; ``G`` and ``R`` as re/im pairs.
    """
    def reim(z):
        z = np.asarray(z)
        return np.stack([z.real, z.imag], axis=-1)

    np.savez(
        Path(path),
        tx=_geom_row(real.tx), ris=_geom_row(real.ris), rx=_geom_row(real.rx),
        los=np.array([real.los_departure.azimuth, real.los_departure.elevation,
                      real.los_arrival.azimuth, real.los_arrival.elevation]),
        alpha0=reim(real.alpha0), beta=reim(real.beta),
        ris_mean=real.clusters.ris_mean, rx_mean=real.clusters.rx_mean,
        ris_offset=real.clusters.ris_offset, rx_offset=real.clusters.rx_offset,
        G=reim(real.G), R=reim(real.R),
    )


def load_realization(path) -> ChannelRealization:
    with np.load(Path(path)) as data:
        def cplx(key):
            v = data[key]
            return v[..., 0] + 1j * v[..., 1]

        los = data["los"]
        return ChannelRealization(
            G=cplx("G"), R=cplx("R"), alpha0=complex(cplx("alpha0")), beta=cplx("beta"),
            los_departure=Angle2D(los[0], los[1]), los_arrival=Angle2D(los[2], los[3]),
            clusters=ClusterGeometry(data["ris_mean"], data["rx_mean"],
                                     data["ris_offset"], data["rx_offset"]),
            tx=_geom_from_row(data["tx"]), ris=_geom_from_row(data["ris"]),
            rx=_geom_from_row(data["rx"]),
        )
