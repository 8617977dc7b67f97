"""Scenario-generator tests: unit conversions against hand values, drop
geometry and association, stream-split reproducibility, and the impaired
massive-MIMO coefficient reduction checked against its unimpaired form."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eeopt import ConfigError, q_minus, q_plus, rate
from eeopt.scenarios import (
    LTE_BS_POSITIONS_KM,
    LTE_RESOURCE_BLOCK_HZ,
    Deployment,
    LteScenarioConfig,
    MassiveMimoScenarioConfig,
    dbw_to_watt,
    estimation_quality,
    generate_lte,
    generate_massive_mimo,
    lte_channels,
    noise_power,
    pathloss,
    sample_deployment,
)


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------


def test_dbw_to_watt_hand_values():
    assert dbw_to_watt(0.0) == 1.0
    assert_allclose(dbw_to_watt(-30.0), 1e-3, rtol=1e-12)
    assert_allclose(dbw_to_watt(10.0), 10.0, rtol=1e-12)


def test_noise_power_hand_values():
    # F = 3 dB, B = 180 Hz, N0 = -174 dBm/Hz: 10^0.3 * 180 * 10^-20.4 W
    assert_allclose(noise_power(3.0, 180.0), 1.4297908225037114e-18, rtol=1e-12)
    assert_allclose(noise_power(3.0, 180.0), 1.430e-18, rtol=1e-3)
    # 0 dB figure, 1 Hz, -30 dBm/Hz: exactly 1 uW
    assert_allclose(noise_power(0.0, 1.0, -30.0), 1e-6, rtol=1e-12)


def test_noise_power_scales_linearly_in_bandwidth():
    lo = noise_power(3.0, 180.0)
    assert_allclose(noise_power(3.0, 360.0), 2.0 * lo, rtol=1e-12)
    assert_allclose(
        noise_power(3.0, LTE_RESOURCE_BLOCK_HZ), 1000.0 * lo, rtol=1e-12
    )


def test_pathloss_hand_values():
    assert pathloss(1.0) == 1.0
    assert_allclose(pathloss(0.1), 10.0**3.5, rtol=1e-12)
    assert_allclose(pathloss(2.0, reference_gain=5.0), 5.0 * 2.0**-3.5, rtol=1e-12)


def test_pathloss_clamps_near_field():
    # below 35 m the gain freezes at 0.035^-3.5
    assert_allclose(pathloss(0.035), 124669.96707285098, rtol=1e-12)
    assert pathloss(0.001) == pathloss(0.035)
    assert pathloss(0.0) == pathloss(0.035)
    d = np.linspace(0.04, 2.0, 50)
    g = pathloss(d)
    assert np.all(np.diff(g) < 0)
    assert np.all(g < pathloss(0.035))


def test_estimation_quality_hand_value():
    # d = (0.5, 0.4, 0.2), tau = 0.3: denominator 1.4
    d = [0.5, 0.4, 0.2]
    assert_allclose(
        estimation_quality(d, 0.3), np.array(d) / 1.4, rtol=1e-12
    )
    assert_allclose(
        estimation_quality(d, 0.3, "squared"),
        np.array([0.25, 0.16, 0.04]) / 1.4,
        rtol=1e-12,
    )
    with pytest.raises(ConfigError):
        estimation_quality(d, 0.3, "cubed")


def test_estimation_quality_rows_normalize_independently():
    d = np.array([[0.5, 0.4, 0.2], [1.0, 1.0, 1.0]])
    rho = estimation_quality(d, 0.3)
    assert_allclose(rho[0], d[0] / 1.4, rtol=1e-12)
    assert_allclose(rho[1], d[1] / 3.3, rtol=1e-12)


# ---------------------------------------------------------------------------
# deployment geometry
# ---------------------------------------------------------------------------


def test_sample_deployment_geometry():
    dep = sample_deployment(50, seed=3)
    assert dep.k == 50 and dep.n_cells == 3
    assert np.all(np.abs(dep.ue_positions_km) <= 1.0)
    # association is the nearest site, recomputed with an explicit norm
    sites = np.asarray(LTE_BS_POSITIONS_KM)
    dist = np.sqrt(
        ((dep.ue_positions_km[:, None, :] - sites[None, :, :]) ** 2).sum(-1)
    )
    assert np.array_equal(dep.association, np.argmin(dist, axis=1))
    assert_allclose(dep.distances_km(), dist, rtol=1e-12)


def test_sample_deployment_deterministic():
    a = sample_deployment(5, seed=11)
    b = sample_deployment(5, seed=11)
    c = sample_deployment(5, seed=12)
    assert np.array_equal(a.ue_positions_km, b.ue_positions_km)
    assert not np.array_equal(a.ue_positions_km, c.ue_positions_km)


def test_sample_deployment_prefix_stable_in_k():
    # growing the drop appends terminals without moving existing ones
    small = sample_deployment(2, seed=7)
    big = sample_deployment(6, seed=7)
    assert np.array_equal(small.ue_positions_km, big.ue_positions_km[:2])


def test_deployment_validation():
    sites = np.zeros((2, 2))
    ue = np.zeros((3, 2))
    with pytest.raises(ConfigError):
        Deployment(sites, ue, association=[0, 1])  # one short
    with pytest.raises(ConfigError):
        Deployment(sites, ue, association=[0, 1, 2])  # no third site
    with pytest.raises(ConfigError):
        Deployment(sites, [[0.0, 5.0]], association=[0])  # off the square
    with pytest.raises(ConfigError):
        sample_deployment(0)


# ---------------------------------------------------------------------------
# LTE channels
# ---------------------------------------------------------------------------


def test_lte_beamformers_unit_norm():
    _, _, beams = lte_channels(LteScenarioConfig(k=3, seed=2))
    assert_allclose(np.linalg.norm(beams, axis=1), 1.0, atol=1e-12)
    _, _, basis = lte_channels(LteScenarioConfig(k=3, seed=2, beamformer="basis"))
    assert_allclose(basis, np.tile([1.0, 0.0], (3, 1)), atol=0)


def test_lte_channels_deterministic_and_prefix_stable():
    _, c2, b2 = lte_channels(LteScenarioConfig(k=2, seed=7))
    _, c2b, b2b = lte_channels(LteScenarioConfig(k=2, seed=7))
    _, c3, b3 = lte_channels(LteScenarioConfig(k=3, seed=7))
    _, c2o, _ = lte_channels(LteScenarioConfig(k=2, seed=8))
    assert np.array_equal(c2, c2b) and np.array_equal(b2, b2b)
    # per-(terminal, site) streams: extra terminals leave old channels alone
    assert np.array_equal(c2, c3[:2]) and np.array_equal(b2, b3[:2])
    assert not np.array_equal(c2, c2o)


def test_lte_reference_gain_scales_channel_amplitudes():
    _, c1, b1 = lte_channels(LteScenarioConfig(k=2, seed=7, reference_gain=1.0))
    _, c4, b4 = lte_channels(LteScenarioConfig(k=2, seed=7, reference_gain=4.0))
    assert_allclose(c4, 2.0 * c1, rtol=1e-12)
    assert_allclose(b4, b1, atol=1e-12)


def test_lte_instance_matches_channel_reduction():
    cfg = LteScenarioConfig(k=3, seed=4)
    dep, channels, beams = lte_channels(cfg)
    inst = generate_lte(cfg)
    assert inst.k == 3 and inst.bandwidth == cfg.bandwidth_hz
    for k in range(3):
        for i in range(3):
            assert_allclose(
                inst.sinr.v[k, i],
                channels[i, dep.association[k]] @ beams[i],
                rtol=1e-12,
            )
    assert np.all(inst.sinr.u == 0)
    assert_allclose(inst.sinr.sigma2, noise_power(3.0, 180.0), rtol=1e-12)
    assert_allclose(inst.p_max_vec, dbw_to_watt(-20.0), rtol=1e-12)
    assert_allclose(inst.psi_vec, dbw_to_watt(-20.0), rtol=1e-12)


def test_lte_beamformer_variants_differ():
    svd = generate_lte(LteScenarioConfig(k=2, seed=4))
    basis = generate_lte(LteScenarioConfig(k=2, seed=4, beamformer="basis"))
    assert not np.allclose(svd.sinr.v, basis.sinr.v)


# ---------------------------------------------------------------------------
# massive-MIMO coefficients
# ---------------------------------------------------------------------------


def mimo_raw_coefficients(cfg):
    """The unimpaired closed forms, recomputed from the drop geometry."""
    sites = np.vstack(
        [np.asarray(LTE_BS_POSITIONS_KM[: cfg.small_cells]), [[0.0, 0.0]]]
    )
    dep = sample_deployment(cfg.k, bs_positions_km=sites, seed=cfg.seed)
    d = pathloss(dep.distances_km(), cfg.pathloss_exponent, cfg.reference_gain)
    rho = estimation_quality(d, cfg.tau, cfg.rho_model)
    a = dep.association
    idx = np.arange(cfg.k)
    cont = rho**2
    cont[idx, a] = 0.0
    alpha = rho[idx, a]
    phi = d[idx, a] + cont.sum(axis=1) / rho[idx, a]
    beta = d[:, a] * rho[:, a] / rho[idx, a][None, :]
    np.fill_diagonal(beta, 0.0)
    return alpha, phi, beta


def test_massive_mimo_unimpaired_reduction():
    cfg = MassiveMimoScenarioConfig(k=3, evm=0.0, seed=5)
    inst = generate_massive_mimo(cfg)
    alpha, phi, beta = mimo_raw_coefficients(cfg)
    assert_allclose(inst.sinr.alpha, alpha, rtol=1e-12)
    assert_allclose(inst.sinr.phi, phi, rtol=1e-12)
    assert_allclose(inst.sinr.beta, beta, rtol=1e-12)
    assert np.all(np.diag(inst.sinr.beta) == 0)


def test_massive_mimo_impairment_structure():
    # the transmit distortion rescales the useful gain by (1 - evm^2)^1.5,
    # inflates the self-noise, and leaves cross gains and noise untouched
    clean = generate_massive_mimo(MassiveMimoScenarioConfig(k=3, evm=0.0, seed=5))
    dirty = generate_massive_mimo(MassiveMimoScenarioConfig(k=3, evm=0.4, seed=5))
    assert_allclose(
        dirty.sinr.alpha, (1.0 - 0.16) ** 1.5 * clean.sinr.alpha, rtol=1e-12
    )
    assert np.all(dirty.sinr.phi > clean.sinr.phi)
    assert np.array_equal(dirty.sinr.beta, clean.sinr.beta)
    assert dirty.sinr.sigma2 == clean.sinr.sigma2


def test_massive_mimo_antenna_counts_do_not_enter():
    # array gain cancels against the combiner normalization
    a = generate_massive_mimo(MassiveMimoScenarioConfig(k=3, seed=5))
    b = generate_massive_mimo(
        MassiveMimoScenarioConfig(
            k=3, seed=5, small_cell_antennas=1, macro_antennas=1
        )
    )
    assert np.array_equal(a.sinr.alpha, b.sinr.alpha)
    assert np.array_equal(a.sinr.phi, b.sinr.phi)
    assert np.array_equal(a.sinr.beta, b.sinr.beta)


def test_massive_mimo_variants_change_coefficients():
    base = generate_massive_mimo(MassiveMimoScenarioConfig(k=3, seed=5))
    sq = generate_massive_mimo(
        MassiveMimoScenarioConfig(k=3, seed=5, rho_model="squared")
    )
    fewer = generate_massive_mimo(
        MassiveMimoScenarioConfig(k=3, seed=5, small_cells=1)
    )
    assert not np.allclose(base.sinr.alpha, sq.sinr.alpha)
    assert not np.allclose(base.sinr.phi, fewer.sinr.phi)


# ---------------------------------------------------------------------------
# generated instances and configuration guards
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "build",
    [
        lambda: generate_lte(LteScenarioConfig(k=3, seed=1)),
        lambda: generate_massive_mimo(MassiveMimoScenarioConfig(k=3, seed=1)),
    ],
    ids=["lte", "massive-mimo"],
)
def test_generated_instances_are_well_formed(build):
    inst = build()
    p = inst.p_max_vec
    assert np.all(p > 0) and np.all(inst.power_consumption(p) > 0)
    r = rate(inst, p)
    assert np.all(np.isfinite(r)) and np.all(r >= 0)
    assert np.all(q_plus(inst.sinr, p) >= q_minus(inst.sinr, p) - 1e-12)


@pytest.mark.parametrize(
    "bad",
    [
        lambda: LteScenarioConfig(k=0),
        lambda: LteScenarioConfig(k=2, bandwidth_hz=0.0),
        lambda: LteScenarioConfig(k=2, mu=0.5),
        lambda: LteScenarioConfig(k=2, n_t=0),
        lambda: LteScenarioConfig(k=2, reference_gain=0.0),
        lambda: LteScenarioConfig(k=2, beamformer="zf"),
        lambda: MassiveMimoScenarioConfig(k=2, evm=1.0),
        lambda: MassiveMimoScenarioConfig(k=2, tau=0.0),
        lambda: MassiveMimoScenarioConfig(k=2, small_cells=4),
        lambda: MassiveMimoScenarioConfig(k=2, macro_antennas=0),
        lambda: MassiveMimoScenarioConfig(k=2, rho_model="cubic"),
        lambda: MassiveMimoScenarioConfig(k=2, pathloss_exponent=-1.0),
    ],
)
def test_scenario_config_validation(bad):
    with pytest.raises(ConfigError):
        bad()
