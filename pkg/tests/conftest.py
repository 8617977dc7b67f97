"""Shared fixtures: small hand-built instances and random instance factories."""

import numpy as np
import pytest

from eeopt import (
    LinkParams,
    NetworkInstance,
    Scalar,
    SelfInterference,
    VectorLmmse,
)


def make_links(k, psi=1.0, p_max=2.0, mu=1.0, weight=1.0):
    return tuple(
        LinkParams(psi=psi, p_max=p_max, mu=mu, weight=weight) for _ in range(k)
    )


@pytest.fixture
def scalar_pair():
    """The two-link scalar instance used by most hand-computed values.

    alpha = (4, 2), cross gains beta[1,0] = 1 (tx 2 into rx 1) and
    beta[0,1] = 0.5, unit noise, B = 1, psi = 1, p_max = 2.
    """
    beta = np.zeros((2, 2))
    beta[1, 0] = 1.0
    beta[0, 1] = 0.5
    model = Scalar(alpha=[4.0, 2.0], beta=beta, sigma2=1.0)
    return NetworkInstance(k=2, bandwidth=1.0, links=make_links(2), sinr=model)


def random_scalar(rng, k, sigma2=None):
    alpha = rng.uniform(0.5, 4.0, k)
    beta = rng.uniform(0.0, 1.0, (k, k))
    np.fill_diagonal(beta, 0.0)
    return Scalar(alpha=alpha, beta=beta, sigma2=sigma2 or rng.uniform(0.1, 2.0))


def random_self_interference(rng, k, sigma2=None):
    alpha = rng.uniform(0.5, 4.0, k)
    phi = rng.uniform(0.0, 1.0, k)
    beta = rng.uniform(0.0, 1.0, (k, k))
    np.fill_diagonal(beta, 0.0)
    return SelfInterference(
        alpha=alpha, phi=phi, beta=beta, sigma2=sigma2 or rng.uniform(0.1, 2.0)
    )


def random_vector_lmmse(rng, k, r=3, with_u=True, sigma2=None):
    v = rng.normal(size=(k, k, r)) + 1j * rng.normal(size=(k, k, r))
    if with_u:
        u = 0.5 * (rng.normal(size=(k, r)) + 1j * rng.normal(size=(k, r)))
    else:
        u = np.zeros((k, r), dtype=complex)
    return VectorLmmse(r=r, v=v, u=u, sigma2=sigma2 or rng.uniform(0.1, 2.0))


def random_instance(rng, model, bandwidth=1.0, p_max=2.0):
    k = model.k
    links = tuple(
        LinkParams(
            psi=rng.uniform(0.5, 2.0),
            p_max=p_max,
            mu=rng.uniform(1.0, 4.0),
            weight=rng.uniform(0.5, 2.0),
        )
        for _ in range(k)
    )
    return NetworkInstance(k=k, bandwidth=bandwidth, links=links, sinr=model)


@pytest.fixture
def make_single_link():
    def make(alpha=3.0, psi=1.0, p_max=2.0, mu=1.0):
        model = Scalar(alpha=[alpha], beta=np.zeros((1, 1)), sigma2=1.0)
        links = make_links(1, psi=psi, p_max=p_max, mu=mu)
        return NetworkInstance(k=1, bandwidth=1.0, links=links, sinr=model)

    return make
