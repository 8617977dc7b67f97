"""Network model for energy-efficient power control in interference networks.

A network carries K transmit/receive pairs ("links") that share the same
spectrum.  Link k transmits with power ``p_k`` and achieves the rate

    R_k(p) = B * log2(1 + gamma_k(p)),

where ``gamma_k`` is the SINR at receiver k.  Three SINR parameterizations are
supported:

* :class:`Scalar` -- plain interference coupling,
  ``gamma_k = p_k a_k / (sigma2 + sum_{i != k} p_i beta[i, k])``;
* :class:`SelfInterference` -- adds a self-interference term ``p_k phi_k`` to
  the denominator, which captures hardware impairments and channel-estimation
  errors (massive MIMO with maximum-ratio combining reduces to this form);
* :class:`VectorLmmse` -- receive filtering over ``r`` dimensions with a
  linear MMSE receiver, ``gamma_k = p_k v_kk^H M_k^{-1} v_kk`` where ``M_k``
  collects noise, self-interference and multiuser interference covariance.

Every rate decomposes as a difference of increasing functions of the power
vector,

    R_k(p) = B * (q_k_plus(p) - q_k_minus(p)),

with both parts nonnegative, componentwise increasing, and concave.  That
structure is what the global solver exploits, so the decomposition -- not the
SINR -- is the primary computational object here.  Internally the log
arguments are normalized by the noise power so that both parts vanish at
``p = 0`` regardless of the physical noise level; differences, SINRs and
gradients are unaffected.

The module also provides the energy-efficiency metrics built from the rates
and the power consumption ``mu_k p_k + psi_k`` of each link (global, minimum,
sum and product efficiencies), and constructors that realize power constraints
as differences of increasing functions so the solvers can treat them
uniformly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "LN2",
    "LinkParams",
    "Scalar",
    "SelfInterference",
    "VectorLmmse",
    "SinrModel",
    "NetworkInstance",
    "DcFlags",
    "DcFunction",
    "MinRate",
    "InterferenceTemperature",
    "TotalPower",
    "ConstraintKind",
    "ConstraintSpec",
    "EeMetric",
    "sinr",
    "q_plus",
    "q_minus",
    "grad_q_plus",
    "grad_q_minus",
    "rate",
    "metric_value",
    "make_constraint",
]

LN2 = float(np.log(2.0))

# Evaluation batches are chunked so intermediate arrays stay cache-friendly.
_CHUNK = 1 << 15


def _frozen_array(value, dtype, shape=None, name="array"):
    arr = np.array(value, dtype=dtype)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_nonnegative(arr, name):
    if np.any(arr < 0):
        raise ValueError(f"{name} must be componentwise nonnegative")


@dataclass(frozen=True)
class LinkParams:
    """Static per-link parameters.

    psi     -- hardware power consumed whenever the link is on, in watts (> 0)
    p_max   -- transmit power budget in watts (> 0)
    mu      -- inverse efficiency of the power amplifier (>= 1)
    weight  -- priority weight used by the weighted metrics (> 0)
    """

    psi: float
    p_max: float
    mu: float = 1.0
    weight: float = 1.0

    def __post_init__(self):
        if not self.psi > 0:
            raise ValueError("psi must be positive")
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        if not self.mu >= 1.0:
            raise ValueError("mu must be at least 1")
        if not self.weight > 0:
            raise ValueError("weight must be positive")


@dataclass(frozen=True)
class Scalar:
    """SINR with plain interference coupling.

    alpha[k]   -- direct channel gain of link k
    beta[i, k] -- gain from transmitter i into receiver k (zero diagonal)
    sigma2     -- noise power at every receiver
    """

    alpha: np.ndarray
    beta: np.ndarray
    sigma2: float

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64)).shape[0]
        object.__setattr__(
            self, "alpha", _frozen_array(self.alpha, np.float64, (k,), "alpha")
        )
        object.__setattr__(
            self, "beta", _frozen_array(self.beta, np.float64, (k, k), "beta")
        )
        _check_nonnegative(self.alpha, "alpha")
        _check_nonnegative(self.beta, "beta")
        if np.any(np.diag(self.beta) != 0.0):
            raise ValueError("beta must have a zero diagonal")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def k(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True)
class SelfInterference:
    """SINR with an additional power-proportional self-interference term.

    gamma_k = p_k alpha_k / (sigma2 + p_k phi_k + sum_{i != k} p_i beta[i, k])
    """

    alpha: np.ndarray
    phi: np.ndarray
    beta: np.ndarray
    sigma2: float

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64)).shape[0]
        object.__setattr__(
            self, "alpha", _frozen_array(self.alpha, np.float64, (k,), "alpha")
        )
        object.__setattr__(
            self, "phi", _frozen_array(self.phi, np.float64, (k,), "phi")
        )
        object.__setattr__(
            self, "beta", _frozen_array(self.beta, np.float64, (k, k), "beta")
        )
        _check_nonnegative(self.alpha, "alpha")
        _check_nonnegative(self.phi, "phi")
        _check_nonnegative(self.beta, "beta")
        if np.any(np.diag(self.beta) != 0.0):
            raise ValueError("beta must have a zero diagonal")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def k(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True)
class VectorLmmse:
    """SINR of a linear-MMSE receive filter over ``r`` dimensions.

    v[k, i] -- effective channel (length r) of transmitter i at receiver k
    u[k]    -- self-interference direction (length r) at receiver k; the
               covariance contribution is ``p_k u_k u_k^H``
    sigma2  -- noise power per receive dimension

    With ``M_k = sigma2 I + p_k u_k u_k^H + sum_{i != k} p_i v_ki v_ki^H``
    the SINR is ``gamma_k = p_k v_kk^H M_k^{-1} v_kk`` and the rate parts are
    log-determinants of the interference-plus-signal covariances.
    """

    r: int
    v: np.ndarray
    u: np.ndarray
    sigma2: float

    def __post_init__(self):
        k = np.asarray(self.v).shape[0]
        object.__setattr__(
            self, "v", _frozen_array(self.v, np.complex128, (k, k, self.r), "v")
        )
        object.__setattr__(
            self, "u", _frozen_array(self.u, np.complex128, (k, self.r), "u")
        )
        if not self.r >= 1:
            raise ValueError("r must be at least 1")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        # Precomputed outer products for the r x r covariance assembly and
        # Gram matrices for the determinant-identity fast path.  The Gram
        # route evaluates the same log-determinants in a space whose size is
        # the number of coupled vectors, independent of r.
        vv = np.einsum("kia,kib->kiab", self.v, self.v.conj())
        uu = np.einsum("ka,kb->kab", self.u, self.u.conj())
        has_u = bool(np.any(self.u != 0))
        m = k + 1 if has_u else k
        gram = np.empty((k, m, m), dtype=np.complex128)
        for kk in range(k):
            cols = [self.v[kk, i] for i in range(k)]
            if has_u:
                cols.append(self.u[kk])
            w = np.stack(cols, axis=1)  # (r, m)
            gram[kk] = w.conj().T @ w
        for name, val in (("_vv", vv), ("_uu", uu), ("_gram", gram),
                          ("_has_u", has_u), ("_gram_m", m)):
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def k(self) -> int:
        return self.v.shape[0]


SinrModel = Union[Scalar, SelfInterference, VectorLmmse]


@dataclass(frozen=True)
class DcFlags:
    """Structural properties of a difference-of-increasing-functions pair."""

    plus_increasing: bool
    minus_increasing: bool
    plus_concave: bool
    minus_concave: bool


@dataclass(frozen=True)
class DcFunction:
    """A function represented as ``plus(p) - minus(p)``.

    Both parts accept a power vector ``(k,)`` or a batch ``(n, k)`` and return
    matching scalars/vectors.  ``grad_minus`` evaluates the gradient of the
    minus part at a single power vector, or is None when unavailable.
    """

    plus: Callable[[np.ndarray], np.ndarray]
    minus: Callable[[np.ndarray], np.ndarray]
    grad_minus: Callable[[np.ndarray], np.ndarray] | None
    flags: DcFlags

    def value(self, p):
        return self.plus(p) - self.minus(p)


@dataclass(frozen=True)
class MinRate:
    """Constraint ``R_link(p) >= r_min`` on a single link's rate."""

    link: int
    r_min: float

    def __post_init__(self):
        if self.link < 0:
            raise ValueError("link index must be nonnegative")
        if not self.r_min >= 0:
            raise ValueError("r_min must be nonnegative")


@dataclass(frozen=True)
class InterferenceTemperature:
    """Constraint ``sum_i coeffs[i] p_i <= i_max`` on received interference."""

    coeffs: np.ndarray
    i_max: float

    def __post_init__(self):
        object.__setattr__(
            self, "coeffs", _frozen_array(self.coeffs, np.float64, name="coeffs")
        )
        _check_nonnegative(self.coeffs, "coeffs")
        if not self.i_max > 0:
            raise ValueError("i_max must be positive")


@dataclass(frozen=True)
class TotalPower:
    """Constraint ``sum_k p_k <= p_tot`` on the network transmit power."""

    p_tot: float

    def __post_init__(self):
        if not self.p_tot > 0:
            raise ValueError("p_tot must be positive")


ConstraintKind = Union[MinRate, InterferenceTemperature, TotalPower]


@dataclass(frozen=True)
class ConstraintSpec:
    """A constraint kind together with its realization ``c(p) >= 0`` as a
    difference of increasing concave functions, ``c = plus - minus``."""

    kind: ConstraintKind
    realized: DcFunction


class EeMetric(enum.Enum):
    """Energy-efficiency objectives over the per-link rates and powers."""

    GEE = "gee"
    WMEE = "wmee"
    WSEE = "wsee"
    WPEE = "wpee"


@dataclass(frozen=True)
class NetworkInstance:
    """A complete problem instance: SINR model, link parameters, bandwidth,
    and optional power constraints beyond the per-link budgets."""

    k: int
    bandwidth: float
    links: tuple[LinkParams, ...]
    sinr: SinrModel
    constraints: tuple[ConstraintSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if len(self.links) != self.k:
            raise ValueError("number of LinkParams must equal k")
        if self.sinr.k != self.k:
            raise ValueError("SINR model size must equal k")
        for name, attr in (
            ("_mu", "mu"),
            ("_psi", "psi"),
            ("_p_max", "p_max"),
            ("_weights", "weight"),
        ):
            vec = np.array([getattr(l, attr) for l in self.links], dtype=np.float64)
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

    @property
    def mu_vec(self) -> np.ndarray:
        return self._mu

    @property
    def psi_vec(self) -> np.ndarray:
        return self._psi

    @property
    def p_max_vec(self) -> np.ndarray:
        return self._p_max

    @property
    def weight_vec(self) -> np.ndarray:
        return self._weights

    def power_consumption(self, p) -> np.ndarray:
        """Per-link consumed power ``mu_k p_k + psi_k`` (batched)."""
        p = np.asarray(p, dtype=np.float64)
        return p * self._mu + self._psi


def _as_batch(p, k):
    """Validate a power vector or batch and return ``(array2d, was_single)``."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != k:
            raise ValueError(f"power vector must have length {k}, got {arr.shape[0]}")
        return arr[None, :], True
    if arr.ndim == 2:
        if arr.shape[1] != k:
            raise ValueError(f"power batch must have {k} columns, got {arr.shape[1]}")
        return arr, False
    raise ValueError("power argument must be a vector or a 2-d batch")


def _check_powers(arr):
    if np.any(arr < 0):
        raise ValueError("powers must be componentwise nonnegative")


def _interference(model, p2d):
    """Total interference-plus-self terms D_minus - sigma2, batched.

    Returns ``sum_{i != k} p_i beta[i, k]`` plus ``phi_k p_k`` when the model
    has a self-interference term.
    """
    acc = p2d @ model.beta
    if isinstance(model, SelfInterference):
        acc = acc + p2d * model.phi
    return acc


def _logdet_hpd(a):
    """log-determinant of a batch of Hermitian positive definite matrices.

    Closed forms for sizes 1..3, Cholesky for larger sizes.  ``a`` has shape
    (..., m, m); the result is real with shape (...,).
    """
    m = a.shape[-1]
    if m == 1:
        return np.log(a[..., 0, 0].real)
    if m == 2:
        det = (
            a[..., 0, 0].real * a[..., 1, 1].real
            - (a[..., 0, 1] * a[..., 1, 0]).real
        )
        return np.log(det)
    if m == 3:
        cof0 = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
        cof1 = a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0]
        cof2 = a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]
        det = (
            a[..., 0, 0] * cof0 - a[..., 0, 1] * cof1 + a[..., 0, 2] * cof2
        ).real
        return np.log(det)
    chol = np.linalg.cholesky(a)
    diag = np.einsum("...ii->...i", chol).real
    return 2.0 * np.log(diag).sum(axis=-1)


def _vector_q(model: VectorLmmse, p2d, which):
    """Rate parts for the LMMSE model via the Gram determinant identity.

    ``det(sigma2 I_r + W diag(c) W^H) / sigma2^r = det(I_m + S G S)`` where
    ``G = W^H W / sigma2`` and ``S = diag(sqrt(c))``, so each log-determinant
    is evaluated in the m-dimensional coupling space (m = K, plus one when a
    self-interference direction is present) instead of the r-dimensional
    receive space.
    """
    n, k = p2d.shape
    m = model._gram_m
    out = np.empty((n, k), dtype=np.float64)
    gram = model._gram / model.sigma2
    eye = np.eye(m)
    for start in range(0, n, _CHUNK):
        chunk = p2d[start : start + _CHUNK]
        c = np.repeat(chunk[:, None, :], k, axis=1)  # (n, k, K)
        idx = np.arange(k)
        if which == "minus":
            c[:, idx, idx] = 0.0
        if model._has_u:
            own = chunk[:, :]  # p_k multiplies u_k at receiver k
            c = np.concatenate([c, own[:, :, None]], axis=2)
        s = np.sqrt(c)
        a = eye + s[..., :, None] * gram[None, :, :, :] * s[..., None, :]
        out[start : start + _CHUNK] = _logdet_hpd(a) / LN2
    return out


def q_plus(model: SinrModel, p):
    """Increasing part of the rate decomposition, per link (batched).

    For the scalar models this is ``log2(1 + (I_k + alpha_k p_k)/sigma2)``
    with ``I_k`` the interference-plus-self term; for the LMMSE model it is
    the normalized log-determinant of the full covariance including the
    desired signal.  Nonnegative, increasing and concave in ``p``; zero at
    ``p = 0``.
    """
    p2d, single = _as_batch(p, model.k)
    _check_powers(p2d)
    if isinstance(model, VectorLmmse):
        q = _vector_q(model, p2d, "plus")
    else:
        total = _interference(model, p2d) + p2d * model.alpha
        q = np.log1p(total / model.sigma2) / LN2
    q = np.maximum(q, 0.0)
    return q[0] if single else q


def q_minus(model: SinrModel, p):
    """Decreasing-part counterpart of :func:`q_plus` (batched).

    Covers interference (and self-interference) only, so the rate is
    ``B (q_plus - q_minus)``.  Same structural properties as ``q_plus``.
    """
    p2d, single = _as_batch(p, model.k)
    _check_powers(p2d)
    if isinstance(model, VectorLmmse):
        q = _vector_q(model, p2d, "minus")
    else:
        q = np.log1p(_interference(model, p2d) / model.sigma2) / LN2
    q = np.maximum(q, 0.0)
    return q[0] if single else q


def sinr(model: SinrModel, p):
    """Per-link SINR (batched).

    The LMMSE variant solves the r x r covariance systems directly by
    Cholesky factorization; the log-determinant fast path used by the rate
    parts is cross-checked against this route in the test suite.
    """
    p2d, single = _as_batch(p, model.k)
    _check_powers(p2d)
    if isinstance(model, VectorLmmse):
        n, k = p2d.shape
        out = np.empty((n, k), dtype=np.float64)
        eye = np.eye(model.r, dtype=np.complex128)
        for j in range(n):
            pj = p2d[j]
            for kk in range(k):
                m = model.sigma2 * eye + pj[kk] * model._uu[kk]
                for i in range(k):
                    if i != kk:
                        m = m + pj[i] * model._vv[kk, i]
                factor = cho_factor(m, lower=True)
                x = cho_solve(factor, model.v[kk, kk])
                out[j, kk] = pj[kk] * np.vdot(model.v[kk, kk], x).real
        return out[0] if single else out
    den = model.sigma2 + _interference(model, p2d)
    g = p2d * model.alpha / den
    return g[0] if single else g


def rate(instance: NetworkInstance, p):
    """Achievable per-link rates ``B (q_plus - q_minus)`` (batched)."""
    return instance.bandwidth * (
        q_plus(instance.sinr, p) - q_minus(instance.sinr, p)
    )


def grad_q_minus(model: SinrModel, p) -> np.ndarray:
    """Jacobian of the minus rate part at a single power vector.

    Row k holds the gradient of ``q_k_minus``; entry (k, l) is the marginal
    effect of power l on link k's interference log-term.  For the scalar
    models the row is ``(beta[l, k] or phi_k) / (ln2 * D_k)`` with ``D_k``
    the interference-plus-noise total; for the LMMSE model each entry is a
    quadratic form in the inverse covariance, evaluated with one Cholesky
    factorization per link.
    """
    p2d, single = _as_batch(p, model.k)
    if not single:
        raise ValueError("gradients are evaluated at a single power vector")
    _check_powers(p2d)
    pvec = p2d[0]
    k = model.k
    if isinstance(model, VectorLmmse):
        out = np.zeros((k, k), dtype=np.float64)
        eye = np.eye(model.r, dtype=np.complex128)
        for kk in range(k):
            m = model.sigma2 * eye + pvec[kk] * model._uu[kk]
            for i in range(k):
                if i != kk:
                    m = m + pvec[i] * model._vv[kk, i]
            factor = cho_factor(m, lower=True)
            for ell in range(k):
                if ell == kk:
                    if model._has_u:
                        x = cho_solve(factor, model.u[kk])
                        out[kk, kk] = np.vdot(model.u[kk], x).real / LN2
                else:
                    x = cho_solve(factor, model.v[kk, ell])
                    out[kk, ell] = np.vdot(model.v[kk, ell], x).real / LN2
        return out
    den = model.sigma2 + _interference(model, p2d)[0]  # (k,)
    grad = model.beta.T.copy()  # grad[k, l] = beta[l, k]
    if isinstance(model, SelfInterference):
        grad[np.arange(k), np.arange(k)] = model.phi
    return grad / (LN2 * den[:, None])


def grad_q_plus(model: SinrModel, p) -> np.ndarray:
    """Jacobian of the plus rate part at a single power vector.

    Same layout as :func:`grad_q_minus` but with the desired-signal term
    included in both the covariance and, on the diagonal, the derivative.
    """
    p2d, single = _as_batch(p, model.k)
    if not single:
        raise ValueError("gradients are evaluated at a single power vector")
    _check_powers(p2d)
    pvec = p2d[0]
    k = model.k
    if isinstance(model, VectorLmmse):
        out = np.zeros((k, k), dtype=np.float64)
        eye = np.eye(model.r, dtype=np.complex128)
        for kk in range(k):
            m = model.sigma2 * eye + pvec[kk] * (model._uu[kk] + model._vv[kk, kk])
            for i in range(k):
                if i != kk:
                    m = m + pvec[i] * model._vv[kk, i]
            factor = cho_factor(m, lower=True)
            for ell in range(k):
                if ell == kk:
                    x = cho_solve(factor, model.v[kk, kk])
                    own = np.vdot(model.v[kk, kk], x).real
                    if model._has_u:
                        xu = cho_solve(factor, model.u[kk])
                        own += np.vdot(model.u[kk], xu).real
                    out[kk, kk] = own / LN2
                else:
                    x = cho_solve(factor, model.v[kk, ell])
                    out[kk, ell] = np.vdot(model.v[kk, ell], x).real / LN2
        return out
    den = model.sigma2 + _interference(model, p2d)[0] + pvec * model.alpha
    grad = model.beta.T.copy()
    diag = model.alpha.copy()
    if isinstance(model, SelfInterference):
        diag = diag + model.phi
    grad[np.arange(k), np.arange(k)] = diag
    return grad / (LN2 * den[:, None])


def metric_value(instance: NetworkInstance, metric: EeMetric | str, p):
    """Value of an energy-efficiency metric at one or many power vectors.

    GEE  -- network benefit/cost ratio: total rate over total consumed power;
    WMEE -- worst weighted per-link efficiency;
    WSEE -- sum of weighted per-link efficiencies;
    WPEE -- product of per-link efficiencies raised to their weights.
    """
    metric = EeMetric(metric)
    p2d, single = _as_batch(p, instance.k)
    rates = rate(instance, p2d)
    cons = instance.power_consumption(p2d)
    w = instance.weight_vec
    if metric is EeMetric.GEE:
        val = rates.sum(axis=-1) / cons.sum(axis=-1)
    elif metric is EeMetric.WMEE:
        val = (w * rates / cons).min(axis=-1)
    elif metric is EeMetric.WSEE:
        val = (w * rates / cons).sum(axis=-1)
    else:  # WPEE
        ee = np.maximum(rates, 0.0) / cons
        val = np.prod(ee**w, axis=-1)
    return float(val[0]) if single else val


def _lmmse_link_grad_plus(model: VectorLmmse, link: int):
    """Gradient of a single link's plus part for the LMMSE model."""

    def grad(pvec):
        return grad_q_plus(model, pvec)[link]

    return grad


def make_constraint(kind: ConstraintKind, instance: NetworkInstance) -> ConstraintSpec:
    """Realize a constraint kind as ``c(p) = plus(p) - minus(p) >= 0``.

    Every realization has both parts nonnegative, increasing and concave so
    the solvers can lift them into the canonical monotonic form.
    """
    b = instance.bandwidth
    model = instance.sinr
    k = instance.k
    if isinstance(kind, MinRate):
        if kind.link >= k:
            raise ValueError("MinRate link index out of range")
        link = kind.link
        r_min = kind.r_min

        def plus(p, _link=link):
            q = q_plus(model, p)
            return b * (q[..., _link] if q.ndim > 1 else q[_link])

        def minus(p, _link=link):
            q = q_minus(model, p)
            return b * (q[..., _link] if q.ndim > 1 else q[_link]) + r_min

        def gminus(pvec, _link=link):
            return b * grad_q_minus(model, pvec)[_link]

        flags = DcFlags(True, True, True, True)
        return ConstraintSpec(kind, DcFunction(plus, minus, gminus, flags))
    if isinstance(kind, InterferenceTemperature):
        if kind.coeffs.shape != (k,):
            raise ValueError("InterferenceTemperature coeffs must have length k")
        coeffs = kind.coeffs
        i_max = kind.i_max

        def plus(p):
            p = np.asarray(p, dtype=np.float64)
            shape = p.shape[:-1]
            return np.full(shape, i_max) if shape else i_max

        def minus(p):
            return np.asarray(p, dtype=np.float64) @ coeffs

        def gminus(pvec):
            return coeffs.copy()

        flags = DcFlags(True, True, True, True)
        return ConstraintSpec(kind, DcFunction(plus, minus, gminus, flags))
    if isinstance(kind, TotalPower):
        p_tot = kind.p_tot

        def plus(p):
            p = np.asarray(p, dtype=np.float64)
            shape = p.shape[:-1]
            return np.full(shape, p_tot) if shape else p_tot

        def minus(p):
            return np.asarray(p, dtype=np.float64).sum(axis=-1)

        def gminus(pvec):
            return np.ones(k)

        flags = DcFlags(True, True, True, True)
        return ConstraintSpec(kind, DcFunction(plus, minus, gminus, flags))
    raise TypeError(f"unknown constraint kind: {type(kind).__name__}")
