import numpy as np
import pytest

from riscim.arrays import Angle2D, ArrayGeometry, steering_vector
from riscim.channel import ChannelRealization, ClusterGeometry, LinkSetup, assemble_R, path_steering

WAVELENGTH = 299_792_458.0 / 28e9

# filled by test_acceptance, printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def small_link(C=3, L=2, nt=(2, 2), nris=(3, 3), nr=(2, 2), spread=7.5):
    return LinkSetup(
        tx=ArrayGeometry.half_wavelength(*nt, WAVELENGTH),
        ris=ArrayGeometry.half_wavelength(*nris, WAVELENGTH),
        rx=ArrayGeometry.half_wavelength(*nr, WAVELENGTH),
        d_tx_ris=5.0, d_ris_rx=100.0, n_clusters=C, n_paths=L, spread_deg=spread,
    )


def direction(kx, ky):
    """Angle2D whose normalised in-plane wave-number is (kx, ky)."""
    r = np.hypot(kx, ky)
    return Angle2D(np.arctan2(ky, kx), np.arcsin(min(r, 1.0)))


def manual_realization(ris_dirs, rx_dirs, beta, arrival, departure=Angle2D(0.0, 0.0),
                       nt=(2, 2), nris=(8, 8), nr=(4, 4), alpha0=1.0 + 0j):
    """Realization with one path per cluster at the given directions."""
    tx = ArrayGeometry.half_wavelength(*nt, WAVELENGTH)
    ris = ArrayGeometry.half_wavelength(*nris, WAVELENGTH)
    rx = ArrayGeometry.half_wavelength(*nr, WAVELENGTH)
    beta = np.asarray(beta, dtype=complex).reshape(len(ris_dirs), -1)
    c, l = beta.shape
    clusters = ClusterGeometry(
        ris_mean=np.array([[d.azimuth, d.elevation] for d in ris_dirs]),
        rx_mean=np.array([[d.azimuth, d.elevation] for d in rx_dirs]),
        ris_offset=np.zeros((c, l, 2)), rx_offset=np.zeros((c, l, 2)),
    )
    G = alpha0 * np.outer(steering_vector(ris, arrival), steering_vector(tx, departure).conj())
    steering = path_steering(ris, rx, clusters)
    R = assemble_R(ris, rx, clusters, beta, steering)
    return ChannelRealization(G=G, R=R, alpha0=alpha0, beta=beta, los_departure=departure,
                              los_arrival=arrival, clusters=clusters, tx=tx, ris=ris, rx=rx)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
