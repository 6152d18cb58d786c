import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import WAVELENGTH, small_link
from riscim.arrays import ArrayGeometry
from riscim.channel import (
    LOS_28GHZ,
    NLOS_28GHZ,
    PathLossParams,
    complex_gaussian,
    generate_G,
    generate_R,
    load_realization,
    path_loss_db,
    sample_cluster_geometry,
    save_realization,
)

NO_SHADOW_LOS = PathLossParams(61.4, 2.0, 0.0)
NO_SHADOW_NLOS = PathLossParams(72.0, 2.92, 0.0)


def geom(nx, ny):
    return ArrayGeometry.half_wavelength(nx, ny, WAVELENGTH)


@pytest.mark.parametrize("d, params, expected", [
    (1.0, LOS_28GHZ, 61.4),
    (100.0, NLOS_28GHZ, 130.4),
])
def test_path_loss_values(d, params, expected):
    assert path_loss_db(d, params) == pytest.approx(expected, abs=1e-12)


def test_shadowing_is_additive():
    assert path_loss_db(10.0, NLOS_28GHZ, 3.0) - path_loss_db(10.0, NLOS_28GHZ) == pytest.approx(3.0)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_rejects_bad_distance(d):
    with pytest.raises(ValueError):
        path_loss_db(d, LOS_28GHZ)


def test_path_loss_params_validation():
    with pytest.raises(ValueError):
        PathLossParams(61.4, 0.0, 1.0)
    with pytest.raises(ValueError):
        PathLossParams(61.4, 2.0, -1.0)


def test_complex_gaussian_moments(rng):
    z = complex_gaussian(rng, 3.0, 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(3.0, rel=0.02)
    assert np.var(z.real) == pytest.approx(1.5, rel=0.02)
    assert abs(np.mean(z * z)) < 0.05  # circular


def test_cluster_geometry_shapes(rng):
    g = sample_cluster_geometry(rng, 8, 10, 7.5)
    assert g.n_clusters == 8 and g.n_paths == 10
    for pair in (g.ris_angles(), g.rx_angles()):
        assert all(a.shape == (8, 10) for a in pair)
    assert np.all((g.ris_mean[:, 0] >= 0) & (g.ris_mean[:, 0] < 2 * np.pi))
    assert np.all((g.ris_mean[:, 1] >= 0) & (g.ris_mean[:, 1] < np.pi))


def test_zero_spread_paths_share_the_mean(rng):
    g = sample_cluster_geometry(rng, 3, 4, 0.0)
    az, el = g.ris_angles()
    assert_allclose(az, np.repeat(g.ris_mean[:, :1], 4, axis=1) % (2 * np.pi))
    assert np.all(g.ris_offset == 0) and np.all(g.rx_offset == 0)


def test_cluster_geometry_is_deterministic():
    a = sample_cluster_geometry(np.random.default_rng(7), 4, 5, 7.5)
    b = sample_cluster_geometry(np.random.default_rng(7), 4, 5, 7.5)
    assert_array_equal(a.ris_offset, b.ris_offset)
    assert_array_equal(a.rx_mean, b.rx_mean)


def test_laplacian_offset_spread(rng):
    g = sample_cluster_geometry(rng, 200, 200, 7.5)
    offs = np.concatenate([g.ris_offset.ravel(), g.rx_offset.ravel()])
    assert np.std(offs) == pytest.approx(np.deg2rad(7.5), rel=0.02)
    # Laplace kurtosis is 6 (excess 3)
    kurt = np.mean(offs ** 4) / np.var(offs) ** 2
    assert kurt == pytest.approx(6.0, rel=0.1)


def test_sample_cluster_geometry_validation(rng):
    with pytest.raises(ValueError):
        sample_cluster_geometry(rng, 0, 3, 7.5)
    with pytest.raises(ValueError):
        sample_cluster_geometry(rng, 2, 3, -1.0)


def test_G_is_rank_one_with_frobenius_alpha(rng):
    for _ in range(5):
        G, alpha0, _ = generate_G(geom(2, 3), geom(4, 4), 5.0, LOS_28GHZ, rng)
        assert np.linalg.matrix_rank(G) == 1
        assert np.linalg.norm(G) == pytest.approx(abs(alpha0), rel=1e-12)


def test_G_power_moment_without_shadowing(rng):
    d = float(np.linalg.norm(np.subtract((0, 3, 15), (3, 0, 12))))
    p = np.array([abs(generate_G(geom(1, 1), geom(1, 1), d, NO_SHADOW_LOS, rng)[1]) ** 2
                  for _ in range(100_000)])
    assert p.mean() == pytest.approx(10 ** (-0.1 * path_loss_db(d, NO_SHADOW_LOS)), rel=0.05)


def test_G_power_moment_with_shadowing(rng):
    # E[10^(-xi/10)] = exp((sigma ln10 / 10)^2 / 2) for xi ~ N(0, sigma^2)
    d = 5.0
    p = np.array([abs(generate_G(geom(1, 1), geom(1, 1), d, LOS_28GHZ, rng)[1]) ** 2
                  for _ in range(100_000)])
    lognormal = np.exp((LOS_28GHZ.sigma_xi * np.log(10) / 10) ** 2 / 2)
    assert p.mean() == pytest.approx(10 ** (-0.1 * path_loss_db(d, LOS_28GHZ)) * lognormal, rel=0.05)


def test_single_path_R(rng):
    ris, rx = geom(3, 3), geom(2, 2)
    clusters = sample_cluster_geometry(rng, 1, 1, 7.5)
    R, beta = generate_R(ris, rx, 100.0, NLOS_28GHZ, clusters, rng)
    assert R.shape == (4, 9)
    assert np.linalg.matrix_rank(R) == 1
    assert np.linalg.norm(R) == pytest.approx(np.sqrt(9 * 4) * abs(beta[0, 0]), rel=1e-12)


def test_R_rank_bound(rng):
    ris, rx = geom(4, 4), geom(3, 3)
    for c, l in [(1, 2), (2, 2), (8, 10)]:
        clusters = sample_cluster_geometry(rng, c, l, 7.5)
        R, _ = generate_R(ris, rx, 100.0, NLOS_28GHZ, clusters, rng)
        assert np.linalg.matrix_rank(R) <= min(c * l, 16, 9)


def test_R_energy_moment_against_brute_force(rng):
    # brute-force oracle: build R term by term and average ||R||_F^2
    ris, rx = geom(2, 2), geom(2, 1)
    d, n = 100.0, 4000
    acc = 0.0
    for _ in range(n):
        clusters = sample_cluster_geometry(rng, 2, 3, 7.5)
        _, beta = generate_R(ris, rx, d, NO_SHADOW_NLOS, clusters, rng)
        az_t, el_t = clusters.ris_angles()
        az_r, el_r = clusters.rx_angles()
        R = np.zeros((2, 4), dtype=complex)
        for c in range(2):
            for l in range(3):
                a_t = _naive_steering(ris, az_t[c, l], el_t[c, l])
                a_r = _naive_steering(rx, az_r[c, l], el_r[c, l])
                R += beta[c, l] * np.outer(a_r, a_t.conj())
        acc += np.linalg.norm(np.sqrt(4 * 2 / 6) * R) ** 2
    expected = 4 * 2 * 10 ** (-0.1 * path_loss_db(d, NO_SHADOW_NLOS))
    assert acc / n == pytest.approx(expected, rel=0.05)


def _naive_steering(g, az, el):
    k = 2 * np.pi / g.wavelength * np.array([np.sin(el) * np.cos(az), np.sin(el) * np.sin(az)])
    return np.array([np.exp(1j * (k[0] * x * g.dx + k[1] * y * g.dy))
                     for y in range(g.ny) for x in range(g.nx)]) / np.sqrt(g.n_elements)


def test_generated_R_matches_naive_assembly(rng):
    real = small_link(C=2, L=3).draw(rng)
    assert_allclose(real.reconstruct_R(), real.R, atol=1e-14)
    assert_allclose(real.reconstruct_G(), real.G, atol=1e-14)


def test_fixed_los_angles_are_kept(rng):
    from riscim.arrays import Angle2D
    dep, arr = Angle2D(0.3, 0.5), Angle2D(1.0, 2.0)
    G, _, (d, a) = generate_G(geom(2, 2), geom(3, 3), 5.0, LOS_28GHZ, rng, dep, arr)
    assert (d, a) == (dep, arr)


def test_with_clusters_keeps_gains(rng):
    real = small_link().draw(rng)
    same = real.with_clusters(real.clusters.shifted(0.0))
    assert_allclose(same.R, real.R, atol=1e-14)
    moved = real.with_clusters(real.clusters.shifted(np.deg2rad(5)))
    assert_array_equal(moved.beta, real.beta)
    assert_array_equal(moved.G, real.G)
    assert not np.allclose(moved.R, real.R)


def test_shift_moves_both_means(rng):
    g = sample_cluster_geometry(rng, 3, 2, 7.5)
    s = g.shifted(0.1)
    assert_allclose(s.ris_mean - g.ris_mean, 0.1)
    assert_allclose(s.rx_mean - g.rx_mean, 0.1)
    assert_array_equal(s.ris_offset, g.ris_offset)


def test_realization_round_trip(tmp_path, rng):
    real = small_link().draw(rng)
    save_realization(tmp_path / "r.npz", real)
    back = load_realization(tmp_path / "r.npz")
    assert_array_equal(back.G, real.G)
    assert_array_equal(back.R, real.R)
    assert_array_equal(back.beta, real.beta)
    assert back.alpha0 == real.alpha0
    assert back.ris == real.ris and back.los_arrival == real.los_arrival
    assert_allclose(back.reconstruct_R(), real.R, atol=1e-14)


def test_link_draw_is_deterministic():
    link = small_link()
    a = link.draw(np.random.default_rng(3))
    b = link.draw(np.random.default_rng(3))
    assert_array_equal(a.R, b.R)
    assert_array_equal(a.G, b.G)
