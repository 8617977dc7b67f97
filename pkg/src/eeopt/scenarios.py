"""Network scenario generators: multicell LTE uplink and massive MIMO.

Both scenarios share the same geometry: a 2 km x 2 km square with base
stations at fixed positions and user terminals dropped uniformly at random,
each served by its nearest base station.  Path gain follows a pure power law
``(d / 1 km)^(-exponent)`` (times a configurable reference gain) with the
distance clamped below at 35 m so the law is never evaluated in its
near-field blow-up region.

The LTE scenario draws Rayleigh-faded MIMO channels between every terminal
and every base station and reduces them to effective per-link vector
channels under a fixed transmit beamformer per terminal, to be consumed by
the LMMSE receive model.  The massive-MIMO scenario skips small-scale
fading entirely: with many antennas and maximum-ratio combining over
pilot-based channel estimates, the per-link rates depend on the large-scale
gains only, through three coefficient arrays (useful gain ``alpha``,
self-noise ``phi``, cross gains ``beta``) computed here in closed form.

Randomness is counter-based and stream-split so that results are
reproducible bit-for-bit across runs and platforms and insensitive to
evaluation order: every random object derives from a Philox generator
seeded by ``SeedSequence(seed, spawn_key=...)``, with spawn key ``(0,)``
for terminal positions (one ``uniform(-hw, hw, (k, 2))`` draw) and
``(1, k, l)`` for the channel matrix of terminal ``k`` at base station
``l`` (one real and one imaginary ``standard_normal((n_r, n_t))`` draw, in
that order).  Adding terminals or base stations therefore never perturbs
the channels of existing ones.

Hardware impairments in the massive-MIMO scenario are parameterized by the
transmit error-vector magnitude ``epsilon``: the radio chain emits a
fraction ``1 - epsilon**2`` of each symbol's power coherently and the rest
as uncorrelated distortion with the same spatial profile as the useful
signal.  Writing ``s = sqrt(1 - epsilon**2)``, the coherent channel shrinks
by ``s``, so the pilot-estimate quality becomes ``s * rho`` and the
distortion contributes ``epsilon**2 * s * rho`` of extra self-noise after
the combiner normalization.  Carrying these substitutions through the
unimpaired coefficient reduction gives

    alpha_k  = s**3 * rho_k
    phi_k    = d_k + epsilon**2 * s * rho_k + sum_{m != a(k)} rho_km**2 / (s * rho_k)
    beta_ik  = d_{i,a(k)} * rho_{i,a(k)} / rho_{k,a(k)}      (unchanged)

where ``d`` are large-scale gains, ``rho`` pilot-estimate qualities and
``a(k)`` the serving cell: the scale ``s`` cancels between the cross-link
moment and the normalization, so ``beta`` and the noise floor are
unaffected, and at ``epsilon = 0`` every coefficient reduces exactly to its
unimpaired form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import LinkParams, NetworkInstance, SelfInterference, VectorLmmse

__all__ = [
    "LTE_BS_POSITIONS_KM",
    "LTE_RESOURCE_BLOCK_HZ",
    "Deployment",
    "LteScenarioConfig",
    "MassiveMimoScenarioConfig",
    "dbw_to_watt",
    "noise_power",
    "pathloss",
    "estimation_quality",
    "sample_deployment",
    "lte_channels",
    "generate_lte",
    "generate_massive_mimo",
]

#: Base-station sites of the three-cell layout, km, inside the 2 km square.
LTE_BS_POSITIONS_KM = ((0.5, 0.5), (0.5, -0.5), (-0.5, 0.0))

#: Bandwidth of one LTE resource block, Hz.  The scenario default bandwidth
#: is deliberately the literal 180 Hz figure; pass this constant to work at
#: resource-block scale instead.
LTE_RESOURCE_BLOCK_HZ = 180e3

_HALF_WIDTH_KM = 1.0
_D_MIN_KM = 0.035


def dbw_to_watt(x_dbw) -> float:
    """Convert a power level in dBW to watts."""
    return float(10.0 ** (np.asarray(x_dbw, dtype=np.float64) / 10.0))


def noise_power(noise_figure_db, bandwidth_hz, noise_density_dbm_hz=-174.0):
    """Receiver noise power F * B * N0 in watts.

    ``noise_figure_db`` is the receiver noise figure in dB and
    ``noise_density_dbm_hz`` the thermal noise density in dBm per Hz.
    """
    f = 10.0 ** (float(noise_figure_db) / 10.0)
    n0 = 10.0 ** ((float(noise_density_dbm_hz) - 30.0) / 10.0)
    return f * float(bandwidth_hz) * n0


def pathloss(distance_km, exponent=3.5, reference_gain=1.0, d_min_km=_D_MIN_KM):
    """Power-law path gain ``reference_gain * max(d, d_min)**(-exponent)``.

    Distances are in km; the gain is relative to ``reference_gain`` at
    1 km.  The clamp keeps the gain finite for terminals dropped on top of
    a base station.
    """
    d = np.maximum(np.asarray(distance_km, dtype=np.float64), d_min_km)
    return reference_gain * d ** (-float(exponent))


def estimation_quality(d, tau, variant="verbatim"):
    """Pilot-estimate quality ``rho`` of each (terminal, cell) pair.

    ``d`` holds large-scale gains with cells on the last axis.  The
    ``verbatim`` variant is ``d / (tau + sum_m d_m)``; the ``squared``
    variant uses ``d**2`` in the numerator, the form the minimum
    mean-square-error estimate takes when the gains themselves carry the
    pilot normalization.
    """
    d = np.asarray(d, dtype=np.float64)
    if variant == "verbatim":
        num = d
    elif variant == "squared":
        num = d**2
    else:
        raise ConfigError(f"unknown estimation-quality variant {variant!r}")
    return num / (float(tau) + d.sum(axis=-1, keepdims=True))


@dataclass(frozen=True)
class Deployment:
    """Sampled network geometry: sites, terminal drops, and association."""

    bs_positions_km: np.ndarray
    ue_positions_km: np.ndarray
    association: np.ndarray
    half_width_km: float = _HALF_WIDTH_KM

    def __post_init__(self):
        bs = np.atleast_2d(np.asarray(self.bs_positions_km, dtype=np.float64))
        ue = np.atleast_2d(np.asarray(self.ue_positions_km, dtype=np.float64))
        assoc = np.asarray(self.association, dtype=np.intp)
        object.__setattr__(self, "bs_positions_km", bs)
        object.__setattr__(self, "ue_positions_km", ue)
        object.__setattr__(self, "association", assoc)
        if bs.shape[1] != 2 or ue.shape[1] != 2:
            raise ConfigError("positions must be (x, y) pairs in km")
        if assoc.shape != (ue.shape[0],):
            raise ConfigError("association must assign one cell per terminal")
        if np.any(assoc < 0) or np.any(assoc >= bs.shape[0]):
            raise ConfigError("association indexes a nonexistent base station")
        hw = float(self.half_width_km) + 1e-12
        if np.any(np.abs(ue) > hw):
            raise ConfigError("terminal positions fall outside the square")

    @property
    def n_cells(self) -> int:
        return self.bs_positions_km.shape[0]

    @property
    def k(self) -> int:
        return self.ue_positions_km.shape[0]

    def distances_km(self) -> np.ndarray:
        """(k, n_cells) terminal-to-site distances."""
        delta = self.ue_positions_km[:, None, :] - self.bs_positions_km[None, :, :]
        return np.linalg.norm(delta, axis=-1)


def sample_deployment(
    k, bs_positions_km=LTE_BS_POSITIONS_KM, half_width_km=_HALF_WIDTH_KM, seed=0
) -> Deployment:
    """Drop ``k`` terminals uniformly in the square, serving cell = nearest.

    Positions come from the dedicated ``spawn_key=(0,)`` stream of ``seed``,
    so the same seed yields the same drop regardless of what else is drawn.
    """
    if k < 1:
        raise ConfigError("need at least one terminal")
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0,)))
    )
    hw = float(half_width_km)
    ue = rng.uniform(-hw, hw, size=(int(k), 2))
    dep = Deployment(
        bs_positions_km=bs_positions_km,
        ue_positions_km=ue,
        association=np.zeros(int(k), dtype=np.intp),
        half_width_km=hw,
    )
    return Deployment(
        bs_positions_km=dep.bs_positions_km,
        ue_positions_km=ue,
        association=np.argmin(dep.distances_km(), axis=1),
        half_width_km=hw,
    )


def _radio_fields_ok(cfg) -> None:
    if cfg.k < 1:
        raise ConfigError("need at least one link")
    if cfg.bandwidth_hz <= 0:
        raise ConfigError("bandwidth must be positive")
    if cfg.pathloss_exponent <= 0:
        raise ConfigError("path-loss exponent must be positive")
    if cfg.reference_gain <= 0:
        raise ConfigError("reference gain must be positive")
    if cfg.mu < 1.0:
        raise ConfigError("amplifier inefficiency mu must be at least 1")


@dataclass(frozen=True)
class LteScenarioConfig:
    """Parameters of the three-cell LTE uplink drop.

    Antenna counts are per terminal (``n_t``) and per base station
    (``n_r``).  Power levels are in dBW; ``bandwidth_hz`` enters both the
    noise power and the rate scale.  ``beamformer`` selects the fixed
    transmit direction reduced into the effective channels: ``svd`` points
    along the dominant right singular vector of the serving channel,
    ``basis`` transmits on the first antenna only.
    """

    k: int
    n_t: int = 2
    n_r: int = 4
    bandwidth_hz: float = 180.0
    noise_figure_db: float = 3.0
    noise_density_dbm_hz: float = -174.0
    p_max_dbw: float = -20.0
    psi_dbw: float = -20.0
    mu: float = 1.0
    pathloss_exponent: float = 3.5
    reference_gain: float = 1.0
    beamformer: str = "svd"
    seed: int = 0

    def __post_init__(self):
        _radio_fields_ok(self)
        if self.n_t < 1 or self.n_r < 1:
            raise ConfigError("antenna counts must be at least 1")
        if self.beamformer not in ("svd", "basis"):
            raise ConfigError(f"unknown beamformer {self.beamformer!r}")


@dataclass(frozen=True)
class MassiveMimoScenarioConfig:
    """Parameters of the heterogeneous massive-MIMO uplink drop.

    ``small_cells`` sites (up to three, at the LTE positions) plus one
    macro site at the center of the square.  ``tau`` sets the pilot quality
    scale and ``evm`` the transmit error-vector magnitude; ``rho_model``
    picks the estimation-quality variant (see :func:`estimation_quality`).
    Antenna counts do not enter the normalized coefficients (the array
    gain cancels against the combiner normalization) and are recorded as
    deployment metadata.
    """

    k: int
    small_cells: int = 3
    small_cell_antennas: int = 20
    macro_antennas: int = 50
    tau: float = 0.3
    evm: float = 0.1
    bandwidth_hz: float = 180.0
    noise_figure_db: float = 3.0
    noise_density_dbm_hz: float = -174.0
    p_max_dbw: float = -20.0
    psi_dbw: float = -20.0
    mu: float = 1.0
    pathloss_exponent: float = 3.5
    reference_gain: float = 1.0
    rho_model: str = "verbatim"
    seed: int = 0

    def __post_init__(self):
        _radio_fields_ok(self)
        if not 1 <= self.small_cells <= len(LTE_BS_POSITIONS_KM):
            raise ConfigError(
                f"small_cells must be between 1 and {len(LTE_BS_POSITIONS_KM)}"
            )
        if self.small_cell_antennas < 1 or self.macro_antennas < 1:
            raise ConfigError("antenna counts must be at least 1")
        if self.tau <= 0:
            raise ConfigError("pilot parameter tau must be positive")
        if not 0.0 <= self.evm < 1.0:
            raise ConfigError("evm must lie in [0, 1)")
        if self.rho_model not in ("verbatim", "squared"):
            raise ConfigError(f"unknown rho_model {self.rho_model!r}")


def _links(cfg, k) -> tuple[LinkParams, ...]:
    return tuple(
        LinkParams(
            psi=dbw_to_watt(cfg.psi_dbw),
            p_max=dbw_to_watt(cfg.p_max_dbw),
            mu=cfg.mu,
            weight=1.0,
        )
        for _ in range(k)
    )


def lte_channels(cfg: LteScenarioConfig):
    """Sample the LTE drop: (deployment, channels, beamformers).

    ``channels[k, l]`` is the ``(n_r, n_t)`` matrix between terminal ``k``
    and base station ``l``, Rayleigh with per-entry variance equal to the
    path gain; ``beamformers[k]`` is the unit-norm transmit vector of
    terminal ``k`` (phase fixed so its largest entry is real positive,
    keeping the drop independent of the SVD backend's sign conventions).
    """
    dep = sample_deployment(cfg.k, seed=cfg.seed)
    gains = pathloss(
        dep.distances_km(), cfg.pathloss_exponent, cfg.reference_gain
    )
    channels = np.empty((cfg.k, dep.n_cells, cfg.n_r, cfg.n_t), dtype=complex)
    for k in range(cfg.k):
        for cell in range(dep.n_cells):
            rng = np.random.Generator(
                np.random.Philox(
                    np.random.SeedSequence(cfg.seed, spawn_key=(1, k, cell))
                )
            )
            re = rng.standard_normal((cfg.n_r, cfg.n_t))
            im = rng.standard_normal((cfg.n_r, cfg.n_t))
            channels[k, cell] = np.sqrt(gains[k, cell] / 2.0) * (re + 1j * im)

    beams = np.empty((cfg.k, cfg.n_t), dtype=complex)
    for k in range(cfg.k):
        if cfg.beamformer == "basis":
            b = np.zeros(cfg.n_t, dtype=complex)
            b[0] = 1.0
        else:
            _, _, vh = np.linalg.svd(channels[k, dep.association[k]])
            b = vh[0].conj()
            pivot = b[np.argmax(np.abs(b))]
            b = b * (pivot.conj() / abs(pivot))
        beams[k] = b
    return dep, channels, beams


def generate_lte(cfg: LteScenarioConfig) -> NetworkInstance:
    """Build the LTE uplink instance under the LMMSE receive model.

    The effective channel of transmitter ``i`` at the base station serving
    link ``k`` is its faded channel to that station times its beamformer;
    there is no self-noise vector in this scenario.
    """
    dep, channels, beams = lte_channels(cfg)
    v = np.empty((cfg.k, cfg.k, cfg.n_r), dtype=complex)
    for k in range(cfg.k):
        for i in range(cfg.k):
            v[k, i] = channels[i, dep.association[k]] @ beams[i]
    sinr = VectorLmmse(
        r=cfg.n_r,
        v=v,
        u=np.zeros((cfg.k, cfg.n_r), dtype=complex),
        sigma2=noise_power(
            cfg.noise_figure_db, cfg.bandwidth_hz, cfg.noise_density_dbm_hz
        ),
    )
    return NetworkInstance(
        k=cfg.k, bandwidth=cfg.bandwidth_hz, links=_links(cfg, cfg.k), sinr=sinr
    )


def generate_massive_mimo(cfg: MassiveMimoScenarioConfig) -> NetworkInstance:
    """Build the massive-MIMO uplink instance in coefficient form.

    Large-scale gains and pilot qualities are reduced to the
    ``SelfInterference`` arrays using the closed forms in the module
    docstring; ``beta[i, k]`` is the gain with which the power of terminal
    ``i`` corrupts link ``k`` through pilot contamination at the serving
    cell of ``k``.
    """
    sites = np.vstack(
        [
            np.asarray(LTE_BS_POSITIONS_KM[: cfg.small_cells], dtype=np.float64),
            np.zeros((1, 2)),
        ]
    )
    dep = sample_deployment(cfg.k, bs_positions_km=sites, seed=cfg.seed)
    d = pathloss(dep.distances_km(), cfg.pathloss_exponent, cfg.reference_gain)
    rho = estimation_quality(d, cfg.tau, cfg.rho_model)
    a = dep.association
    idx = np.arange(cfg.k)
    d_serv = d[idx, a]
    rho_serv = rho[idx, a]

    s = np.sqrt(1.0 - cfg.evm**2)
    contamination = rho**2
    contamination[idx, a] = 0.0
    alpha = s**3 * rho_serv
    phi = (
        d_serv
        + cfg.evm**2 * s * rho_serv
        + contamination.sum(axis=1) / (s * rho_serv)
    )
    # beta[i, k]: terminal i seen at the serving cell of link k, weighted by
    # the contaminated-estimate correlation; own-link power sits in alpha/phi.
    beta = d[:, a] * rho[:, a] / rho_serv[None, :]
    np.fill_diagonal(beta, 0.0)

    sinr = SelfInterference(
        alpha=alpha,
        phi=phi,
        beta=beta,
        sigma2=noise_power(
            cfg.noise_figure_db, cfg.bandwidth_hz, cfg.noise_density_dbm_hz
        ),
    )
    return NetworkInstance(
        k=cfg.k, bandwidth=cfg.bandwidth_hz, links=_links(cfg, cfg.k), sinr=sinr
    )
