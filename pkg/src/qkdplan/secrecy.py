"""Asymptotic lower bounds on the BB84 secret key rate.

Two estimators of the single-photon contribution are provided: a
worst-case bound for plain BB84 (all multi-photon pulses are assumed to
reach Bob losslessly) and the two-decoy bound on the single-photon yield
and error.  Statistical fluctuations are ignored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import DetectorParams, LinkBudget, LinkRates, NoDecoy, Protocol, TwoDecoy, link_stats


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


@dataclass(frozen=True)
class NoDecoyBounds:
    q1_lower: float
    kappa1_lower: float
    e1_upper: float
    insecure: bool


@dataclass(frozen=True)
class DecoyBounds:
    y0_lower: float
    y1_lower: float
    e1_upper: float
    kappa1_lower: float
    collapsed: bool


@dataclass(frozen=True)
class SecrecyResult:
    kappa1_lower: float
    e1_upper: float
    r_sec: float
    y0_lower: float | None = None
    y1_lower: float | None = None
    flag: str | None = None

    @property
    def secure(self) -> bool:
        return self.r_sec > 0


def multiphoton_probability(mu: float) -> float:
    """Poisson probability of two or more photons."""
    return -math.expm1(-mu) - mu * math.exp(-mu)


def no_decoy_bounds(q_mu: float, e_mu: float, mu: float, eta_det: float, alpha_bob_db: float) -> NoDecoyBounds:
    if q_mu <= 0:
        raise ValueError("q_mu must be positive")
    q1 = q_mu - multiphoton_probability(mu) * eta_det * 10.0 ** (-0.1 * alpha_bob_db)
    if q1 <= 0:
        return NoDecoyBounds(q1_lower=0.0, kappa1_lower=0.0, e1_upper=0.5, insecure=True)
    return NoDecoyBounds(
        q1_lower=q1,
        kappa1_lower=q1 / q_mu,
        e1_upper=min(0.5, q_mu * e_mu / q1),
        insecure=False,
    )


def decoy_bounds(gains: dict[str, float], errors: dict[str, float], protocol: TwoDecoy) -> DecoyBounds:
    """Vacuum+weak decoy estimates of the background and single-photon yields.

    ``gains`` and ``errors`` map ``"mu"``, ``"nu1"``, ``"nu2"`` to the
    observed gain and QBER of that intensity.
    """
    mu, nu1, nu2 = protocol.mu, protocol.nu1, protocol.nu2
    q_mu, q_1, q_2 = gains["mu"], gains["nu1"], gains["nu2"]
    e_1, e_2 = errors["nu1"], errors["nu2"]
    if q_mu <= 0:
        raise ValueError("signal gain must be positive")

    y0 = max((nu1 * q_2 * math.exp(nu2) - nu2 * q_1 * math.exp(nu1)) / (nu1 - nu2), 0.0)
    y1 = (
        mu / ((nu1 - nu2) * (mu - nu1 - nu2))
        * (q_1 * math.exp(nu1) - q_2 * math.exp(nu2)
           - (nu1 ** 2 - nu2 ** 2) / mu ** 2 * (q_mu * math.exp(mu) - y0))
    )
    if y1 <= 0:
        return DecoyBounds(y0_lower=y0, y1_lower=0.0, e1_upper=0.5, kappa1_lower=0.0, collapsed=True)
    y1 = min(y1, 1.0)
    e1 = (e_1 * q_1 * math.exp(nu1) - e_2 * q_2 * math.exp(nu2)) / ((nu1 - nu2) * y1)
    collapsed = e1 > 0.5
    e1 = min(max(e1, 0.0), 0.5)
    kappa1 = min(1.0, y1 * mu * math.exp(-mu) / q_mu)
    return DecoyBounds(y0_lower=y0, y1_lower=y1, e1_upper=e1, kappa1_lower=kappa1, collapsed=collapsed)


def key_fraction(kappa1_lower: float, e1_upper: float, e_mu: float, f_ec: float) -> float:
    """Secret bits per sifted bit, before clamping at zero."""
    return kappa1_lower * (1.0 - binary_entropy(e1_upper)) - f_ec * binary_entropy(e_mu)


def secret_rate(r_sift: float, kappa1_lower: float, e1_upper: float, e_mu: float, f_ec: float) -> float:
    # verified-key rate taken equal to the sifted rate (zero frame error rate)
    return max(0.0, r_sift * key_fraction(kappa1_lower, e1_upper, e_mu, f_ec))


def secrecy_from_stats(rates: LinkRates, det: DetectorParams, link: LinkBudget, protocol: Protocol) -> SecrecyResult:
    """Turn the click model output into a secret-key-rate lower bound."""
    e_mu = rates.qber
    if isinstance(protocol, NoDecoy):
        b = no_decoy_bounds(rates.gains["mu"], e_mu, protocol.mu, det.eta_det, link.alpha_bob_db)
        kappa, e1, y0, y1 = b.kappa1_lower, b.e1_upper, None, None
        flag = "insecure" if b.insecure else None
    else:
        d = decoy_bounds(rates.gains, rates.errors, protocol)
        kappa, e1, y0, y1 = d.kappa1_lower, d.e1_upper, d.y0_lower, d.y1_lower
        flag = "bound collapse" if d.collapsed else None

    fraction = key_fraction(kappa, e1, e_mu, protocol.f_ec)
    if flag is None and fraction <= 0:
        flag = "insecure"
    r_sec = 0.0 if flag is not None else rates.r_sift * fraction
    return SecrecyResult(kappa1_lower=kappa, e1_upper=e1, r_sec=r_sec, y0_lower=y0, y1_lower=y1, flag=flag)


def evaluate_link(
    det: DetectorParams,
    link: LinkBudget,
    protocol: Protocol,
    *,
    dark_half_credit: bool = False,
    total_click_denominator: bool = False,
) -> tuple[LinkRates, SecrecyResult]:
    """Full pipeline: device and fibre parameters to sifted and secret rates."""
    rates = link_stats(
        det, link, protocol,
        dark_half_credit=dark_half_credit,
        total_click_denominator=total_click_denominator,
    )
    return rates, secrecy_from_stats(rates, det, link, protocol)
