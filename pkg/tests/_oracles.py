"""Independent reference implementations used as test oracles.

These deliberately avoid the code paths of the package: the absorber oracle
walks photon by photon with one uniform draw per decision, the Poisson pmf
uses the multiplicative recurrence, and the subtracted-pulse g2 comes from the
closed-form moments of the shifted distribution.
"""

from __future__ import annotations

import math

import numpy as np


def per_photon_shot(p_ryd: float, p_ryd2: float, t: float, input_bins, rng):
    """Literal sequential simulation: loss draw, then state-dependent absorption draw."""
    input_bins = np.asarray(input_bins, dtype=np.int64)
    output = np.zeros_like(input_bins)
    absorbed = 0
    lost = 0
    absorption_bin = None
    for b, n in enumerate(input_bins):
        for _ in range(int(n)):
            if rng.random() >= t:
                lost += 1
                continue
            if absorbed == 0 and rng.random() < p_ryd:
                absorbed = 1
                absorption_bin = b
            elif absorbed == 1 and rng.random() < p_ryd2:
                absorbed = 2
            else:
                output[b] += 1
    return output, absorbed, lost, absorption_bin


def poisson_pmf(mu: float, k_max: int) -> np.ndarray:
    pmf = np.zeros(k_max + 1)
    pmf[0] = math.exp(-mu)
    for k in range(1, k_max + 1):
        pmf[k] = pmf[k - 1] * mu / k
    return pmf


def subtracted_poisson_g2_closed_form(mu: float) -> float:
    """Moments of the one-photon-shifted Poisson distribution, in closed form."""
    e = math.exp(-mu)
    mean = mu - 1.0 + e
    fac2 = mu * mu - 2.0 * mu + 2.0 - 2.0 * e
    return fac2 / mean**2


def both_stages_fire_probability(mu: float, k_max: int = 80) -> float:
    """Brute force over Poisson outcomes: two ideal absorbers both fire iff n >= 2."""
    pmf = poisson_pmf(mu, k_max)
    return float(pmf[2:].sum())


def thinned_pmf(pmf, eta: float) -> np.ndarray:
    """Exact binomial thinning of a count distribution."""
    pmf = np.asarray(pmf, dtype=float)
    out = np.zeros_like(pmf)
    for n, p_n in enumerate(pmf):
        for k in range(n + 1):
            out[k] += p_n * math.comb(n, k) * eta**k * (1.0 - eta) ** (n - k)
    return out


def pmf_mandel_q(pmf) -> float:
    """Population Mandel-Q of an exact distribution."""
    pmf = np.asarray(pmf, dtype=float)
    k = np.arange(pmf.size)
    mean = float((k * pmf).sum())
    var = float((k**2 * pmf).sum()) - mean**2
    return var / mean - 1.0


def hann_weights_at_centers(n: int) -> np.ndarray:
    """Hann window 0.5*(1 - cos(2 pi x)) sampled at bin centers, normalized."""
    x = (np.arange(n) + 0.5) / n
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * x))
    return w / w.sum()
