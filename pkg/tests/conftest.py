import pytest
from hypothesis import HealthCheck, settings

from qkdplan.model import DetectorParams, LinkBudget, PlugPlay, TwoDecoy

# the acceptance module re-runs property tests on fresh class instances
settings.register_profile(
    "repo", derandomize=True, suppress_health_check=[HealthCheck.differing_executors]
)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# Laboratory links: one free-running detector, 5 MHz plug&play trains.
LAB1_DET = DetectorParams(eta_det=0.06, dcr=470.0, tau_dead=25e-6, visibility=0.993, p_after=0.001)
LAB2_DET = DetectorParams(eta_det=0.15, dcr=110.0, tau_dead=10e-6, visibility=0.993, p_after=0.001)


def lab_link(length_km: float, alpha_opt: float, alpha_bob: float) -> LinkBudget:
    return LinkBudget(
        length_km=length_km, alpha_opt_db=alpha_opt, alpha_bob_db=alpha_bob,
        pulse_freq_hz=5e6, scheme=PlugPlay(1200, 25.0, 1.47), num_detectors=1,
    )


LAB1_LINK = lab_link(10.0, 2.0, 7.5)
LAB2_LINK = lab_link(15.3, 4.0, 6.1)

# Backbone: gated detector pair, 312.5 MHz one-way decoy BB84.
BACKBONE_DET = DetectorParams(eta_det=0.10, dcr=300.0, tau_dead=5e-6, tau_gate=600e-12,
                              visibility=0.98, p_after=0.03)
BACKBONE_PROTOCOL = TwoDecoy(mu=0.5, nu1=0.1, nu2=0.01, p_mu=0.5, p_nu1=0.25, f_ec=1.15)

# (name, length km, channel loss dB, sifted kbit/s, secret kbit/s, QBER %)
BACKBONE_LINKS = [
    ("Moscow-Kubinka", 86.8, 19.0, 16.8, 2.7, 4.1),
    ("Kubinka-Uvarovka", 115.0, 22.2, 8.8, 1.4, 4.2),
    ("Uvarovka-Gagarin", 74.0, 14.6, 35.7, 5.9, 4.0),
    ("Gagarin-P. Gorodische", 98.7, 18.9, 17.1, 2.8, 4.1),
    ("P. Gorodische-Torzhok", 125.8, 23.6, 6.6, 1.0, 4.2),
    ("Torzhok-V. Volochek", 114.4, 21.8, 9.6, 1.5, 4.1),
    ("V. Volochek-Udomlya", 82.5, 15.9, 29.2, 4.8, 4.0),
]
BACKBONE_NODES = ["Moscow", "Kubinka", "Uvarovka", "Gagarin", "P. Gorodische",
                  "Torzhok", "V. Volochek", "Udomlya"]
BACKBONE_RATES = [row[4] for row in BACKBONE_LINKS]


def backbone_link(length_km: float, loss_db: float) -> LinkBudget:
    return LinkBudget(length_km=length_km, alpha_opt_db=loss_db, alpha_bob_db=4.0,
                      pulse_freq_hz=312.5e6, num_detectors=2)


@pytest.fixture
def lab2():
    return LAB2_DET, LAB2_LINK
