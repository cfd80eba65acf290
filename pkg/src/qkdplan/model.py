"""Click statistics, sifted key rate and QBER of a single QKD link.

The model is deterministic: given the detector, the fibre budget and the
protocol intensities it returns per-pulse click probabilities and the
resulting bit rates.  Everything is kept in SI units (seconds, Hz, bit/s);
unit conversion happens at the file boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

#: Speed of light in vacuum, km/s.
C_KM_PER_S = 299_792.458


@dataclass(frozen=True)
class DetectorParams:
    """Single-photon detector working point.

    ``tau_gate=None`` means free-running operation, in which case the
    dark-count window is one pulse period of the link.
    """

    eta_det: float
    dcr: float
    tau_dead: float
    tau_gate: float | None = None
    visibility: float = 1.0
    p_after: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta_det <= 1.0:
            raise ValueError(f"eta_det must lie in [0, 1], got {self.eta_det}")
        if self.dcr < 0:
            raise ValueError(f"dcr must be non-negative, got {self.dcr}")
        if self.tau_dead < 0:
            raise ValueError(f"tau_dead must be non-negative, got {self.tau_dead}")
        if self.tau_gate is not None and self.tau_gate <= 0:
            raise ValueError(f"tau_gate must be positive, got {self.tau_gate}")
        if not 0.5 < self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in (0.5, 1], got {self.visibility}")
        if not 0.0 <= self.p_after < 1.0:
            raise ValueError(f"p_after must lie in [0, 1), got {self.p_after}")


@dataclass(frozen=True)
class OneWay:
    pass


@dataclass(frozen=True)
class PlugPlay:
    """Two-pass scheme: Bob emits trains that Alice stores, attenuates and returns."""

    n_pulses_per_train: int = 1200
    storage_line_km: float = 25.0
    fiber_index: float = 1.47

    def __post_init__(self) -> None:
        if self.n_pulses_per_train < 1:
            raise ValueError("n_pulses_per_train must be >= 1")
        if self.storage_line_km <= 0:
            raise ValueError("storage_line_km must be positive")
        if not 1.4 <= self.fiber_index <= 1.6:
            raise ValueError(f"fiber_index must lie in [1.4, 1.6], got {self.fiber_index}")


Scheme = Union[OneWay, PlugPlay]


@dataclass(frozen=True)
class LinkBudget:
    """One fibre link between an Alice and a Bob module.

    ``alpha_alice_db`` is informational only: Alice-side attenuation is
    absorbed into the mean photon number she emits.
    """

    length_km: float
    alpha_opt_db: float
    alpha_bob_db: float
    pulse_freq_hz: float
    scheme: Scheme = field(default_factory=OneWay)
    num_detectors: int = 2
    alpha_alice_db: float = 0.0

    def __post_init__(self) -> None:
        if self.length_km < 0:
            raise ValueError("length_km must be non-negative")
        for name in ("alpha_opt_db", "alpha_bob_db", "alpha_alice_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.pulse_freq_hz <= 0:
            raise ValueError("pulse_freq_hz must be positive")
        if self.num_detectors not in (1, 2):
            raise ValueError(f"num_detectors must be 1 or 2, got {self.num_detectors}")

    @property
    def pulse_period(self) -> float:
        return 1.0 / self.pulse_freq_hz

    @property
    def sifting_factor(self) -> float:
        # one detector: Bob also picks the bit value he tests, halving the rate
        return 0.25 if self.num_detectors == 1 else 0.5


@dataclass(frozen=True)
class NoDecoy:
    mu: float
    f_ec: float = 1.15

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.f_ec < 1:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")

    def intensities(self) -> list[tuple[str, float, float]]:
        return [("mu", self.mu, 1.0)]


@dataclass(frozen=True)
class TwoDecoy:
    """Signal ``mu`` with a weak decoy ``nu1`` and a (near-)vacuum decoy ``nu2``."""

    mu: float
    nu1: float
    nu2: float
    p_mu: float = 0.5
    p_nu1: float = 0.25
    f_ec: float = 1.15

    def __post_init__(self) -> None:
        if not self.mu > self.nu1 > self.nu2 >= 0:
            raise ValueError(
                f"intensities must satisfy mu > nu1 > nu2 >= 0, got "
                f"({self.mu}, {self.nu1}, {self.nu2})"
            )
        if not self.nu1 + self.nu2 < self.mu:
            raise ValueError("nu1 + nu2 must be smaller than mu")
        if self.p_mu <= 0 or self.p_nu1 <= 0 or self.p_nu2 <= 0:
            raise ValueError("state probabilities must be positive and sum below 1")
        if self.f_ec < 1:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")

    @property
    def p_nu2(self) -> float:
        return 1.0 - self.p_mu - self.p_nu1

    def intensities(self) -> list[tuple[str, float, float]]:
        return [
            ("mu", self.mu, self.p_mu),
            ("nu1", self.nu1, self.p_nu1),
            ("nu2", self.nu2, self.p_nu2),
        ]


Protocol = Union[NoDecoy, TwoDecoy]


@dataclass(frozen=True)
class ClickStats:
    intensity: float
    p_sig: float
    p_dark: float
    gain: float
    qber: float
    r_raw: float
    r_sift: float


@dataclass(frozen=True)
class LinkRates:
    """Per-intensity click statistics plus the signal-state totals."""

    eta: float
    f_eff: float
    per_intensity: dict[str, ClickStats]
    click_rate: float
    r_raw: float
    r_sift: float

    @property
    def qber(self) -> float:
        return self.per_intensity["mu"].qber

    @property
    def gains(self) -> dict[str, float]:
        return {k: s.gain for k, s in self.per_intensity.items()}

    @property
    def errors(self) -> dict[str, float]:
        return {k: s.qber for k, s in self.per_intensity.items()}


def transmittance(det: DetectorParams, link: LinkBudget) -> float:
    """Channel transmission times Bob's internal loss times detector efficiency."""
    return det.eta_det * 10.0 ** (-0.1 * (link.alpha_opt_db + link.alpha_bob_db))


def effective_frequency(link: LinkBudget) -> float:
    """Pulse rate averaged over the idle gaps between plug&play trains."""
    scheme = link.scheme
    if isinstance(scheme, OneWay):
        return link.pulse_freq_hz
    period = link.pulse_period
    n_p = scheme.n_pulses_per_train
    round_trip = 2.0 * (link.length_km + scheme.storage_line_km) * scheme.fiber_index / C_KM_PER_S
    train_period = (n_p - 1) * period + round_trip
    return link.pulse_freq_hz * n_p * period / train_period


def signal_probability(eta: float, intensity: float) -> float:
    """Probability that a pulse of mean photon number ``intensity`` clicks."""
    return -math.expm1(-eta * intensity)


def raw_rate(det: DetectorParams, link: LinkBudget, intensity: float, p_state: float = 1.0) -> float:
    """Sifted-basis signal click rate before dead-time losses, bit/s."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    if not 0 < p_state <= 1:
        raise ValueError("p_state must lie in (0, 1]")
    eta = transmittance(det, link)
    return link.sifting_factor * effective_frequency(link) * p_state * signal_probability(eta, intensity)


def gate_window(det: DetectorParams, link: LinkBudget | None = None) -> float:
    if det.tau_gate is not None:
        return det.tau_gate
    if link is None:
        raise ValueError("free-running detector needs a link to define its gate window")
    return link.pulse_period


def dark_probability(det: DetectorParams, link: LinkBudget | None = None) -> float:
    return det.dcr * gate_window(det, link)


def qber(
    det: DetectorParams,
    link: LinkBudget,
    intensity: float,
    *,
    dark_half_credit: bool = False,
    total_click_denominator: bool = False,
) -> float:
    """Quantum bit error rate for pulses of the given mean photon number.

    By default every dark count is booked as an error and the denominator
    counts signal clicks only.  ``dark_half_credit`` books half of the dark
    counts as errors (a dark click lands on the right bit half of the time);
    ``total_click_denominator`` adds the dark clicks to the denominator.
    """
    if intensity <= 0:
        raise ValueError("QBER is undefined for a non-positive intensity")
    p_sig = signal_probability(transmittance(det, link), intensity)
    p_dark = dark_probability(det, link)
    p_opt = (1.0 - det.visibility) / 2.0
    dark_err = 0.5 * p_dark if dark_half_credit else p_dark
    numerator = dark_err + (p_sig + p_dark) * det.p_after + p_sig * p_opt
    denominator = p_sig + (p_dark if total_click_denominator else 0.0)
    if denominator <= 0:
        return 0.5
    return min(0.5, max(0.0, numerator / denominator))


def sifted_rate(
    r_raw: float,
    tau_dead: float,
    num_detectors: int = 1,
    click_rate: float | None = None,
) -> float:
    """Apply non-paralysable dead-time loss to a sifted rate.

    ``click_rate`` is the total click load driving the dead time; it
    defaults to ``r_raw`` and is shared evenly between the detectors.
    """
    if r_raw < 0:
        raise ValueError("r_raw must be non-negative")
    load = (r_raw if click_rate is None else click_rate) / num_detectors
    return r_raw / (1.0 + load * tau_dead)


def link_stats(
    det: DetectorParams,
    link: LinkBudget,
    protocol: Protocol,
    *,
    dark_half_credit: bool = False,
    total_click_denominator: bool = False,
) -> LinkRates:
    """Evaluate the click model for every intensity of ``protocol``.

    Gains include dark counts from all detectors; the throughput rates use
    the signal term only.  Dead time is driven by clicks from every
    intensity (the detector cannot tell signal from decoy) plus dark counts,
    counted per detector in the sifted basis.
    """
    eta = transmittance(det, link)
    f_eff = effective_frequency(link)
    p_dark = dark_probability(det, link)
    n_det = link.num_detectors
    s = link.sifting_factor

    per_detector_load = 0.0
    partial = {}
    for label, lam, p_state in protocol.intensities():
        p_sig = signal_probability(eta, lam)
        per_detector_load += s * f_eff * p_state * (p_sig + n_det * p_dark)
        err = (
            qber(det, link, lam, dark_half_credit=dark_half_credit,
                 total_click_denominator=total_click_denominator)
            if lam > 0
            else 0.5
        )
        partial[label] = (lam, p_sig, p_sig + n_det * p_dark, err, s * f_eff * p_state * p_sig)

    click_rate = n_det * per_detector_load
    dead_factor = 1.0 / (1.0 + per_detector_load * det.tau_dead)
    per_intensity = {
        label: ClickStats(
            intensity=lam, p_sig=p_sig, p_dark=p_dark, gain=min(1.0, gain),
            qber=err, r_raw=r, r_sift=r * dead_factor,
        )
        for label, (lam, p_sig, gain, err, r) in partial.items()
    }
    signal = per_intensity["mu"]
    return LinkRates(
        eta=eta,
        f_eff=f_eff,
        per_intensity=per_intensity,
        click_rate=click_rate,
        r_raw=signal.r_raw,
        r_sift=sifted_rate(signal.r_raw, det.tau_dead, n_det, click_rate),
    )
