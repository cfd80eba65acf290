"""Search over detector working points and mean photon number.

The optimiser is an exhaustive grid search: each candidate detector is
evaluated at every grid intensity and the best secret key rate wins.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .model import DetectorParams, LinkBudget, Protocol
from .secrecy import evaluate_link


def default_mu_grid() -> list[float]:
    """0.01 to 1.50 in steps of 0.01."""
    return [round(0.01 * i, 2) for i in range(1, 151)]


@dataclass(frozen=True)
class DetectorCandidate:
    eta_det: float
    tau_dead: float
    dcr: float
    label: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta_det <= 1.0:
            raise ValueError(f"eta_det must lie in [0, 1], got {self.eta_det}")
        if self.tau_dead < 0:
            raise ValueError(f"dead time must be non-negative, got {self.tau_dead}")
        if self.dcr < 0:
            raise ValueError(f"dark count rate must be non-negative, got {self.dcr}")

    def apply(self, base: DetectorParams) -> DetectorParams:
        """Detector ``base`` with this candidate's efficiency, dead time and DCR."""
        return dataclasses.replace(base, eta_det=self.eta_det, tau_dead=self.tau_dead, dcr=self.dcr)


@dataclass(frozen=True)
class SweepPoint:
    mu: float
    r_sec_fixed: float
    r_sec_optimized: float
    best_label: str


@dataclass(frozen=True)
class OptimizationResult:
    best_mu: float
    best_candidate: DetectorCandidate
    r_sec: float
    sweep: list[SweepPoint]
    no_secure_point: bool = False


def _with_mu(protocol: Protocol, mu: float) -> Protocol:
    return dataclasses.replace(protocol, mu=mu)


def _check_grid(mu_grid: Sequence[float]) -> None:
    if not mu_grid:
        raise ValueError("mu grid must not be empty")
    if any(m <= 0 for m in mu_grid):
        raise ValueError("mu grid values must be positive")
    if any(b <= a for a, b in zip(mu_grid, mu_grid[1:])):
        raise ValueError("mu grid must be strictly increasing")


def sweep_mu(
    det: DetectorParams,
    link: LinkBudget,
    protocol: Protocol,
    mu_grid: Sequence[float],
    **model_options,
) -> list[tuple[float, float]]:
    """Secret key rate at each signal intensity of ``mu_grid``.

    Other protocol settings (decoys, f_ec) are taken from ``protocol``.
    Insecure points report a rate of zero.
    """
    _check_grid(mu_grid)
    out = []
    for mu in mu_grid:
        _, sec = evaluate_link(det, link, _with_mu(protocol, mu), **model_options)
        out.append((mu, sec.r_sec))
    return out


def _rank_key(r_sec: float, cand: DetectorCandidate, mu: float) -> tuple:
    # larger rate first, then lower DCR, lower mu; the rest only pins down
    # the order of otherwise identical candidates
    return (-r_sec, cand.dcr, mu, cand.eta_det, cand.tau_dead, cand.label)


def optimize(
    candidates: Iterable[DetectorCandidate],
    base: DetectorParams,
    link: LinkBudget,
    protocol: Protocol,
    mu_grid: Sequence[float] | None = None,
    **model_options,
) -> OptimizationResult:
    """Best (candidate, mu) pair over the full candidate x grid product.

    ``base`` supplies the detector properties that candidates do not set
    (visibility, afterpulsing, gate) and gives the fixed-detector curve in
    the returned sweep.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidate set must not be empty")
    grid = default_mu_grid() if mu_grid is None else list(mu_grid)
    _check_grid(grid)

    curves = {c: sweep_mu(c.apply(base), link, protocol, grid, **model_options) for c in candidates}
    fixed = sweep_mu(base, link, protocol, grid, **model_options)

    sweep = []
    best = None
    for i, mu in enumerate(grid):
        point_best = min(candidates, key=lambda c: _rank_key(curves[c][i][1], c, mu))
        r_opt = curves[point_best][i][1]
        sweep.append(SweepPoint(mu, fixed[i][1], r_opt, point_best.label))
        key = _rank_key(r_opt, point_best, mu)
        if best is None or key < best[0]:
            best = (key, point_best, mu, r_opt)

    _, cand, mu, r_sec = best
    return OptimizationResult(
        best_mu=mu,
        best_candidate=cand,
        r_sec=r_sec,
        sweep=sweep,
        no_secure_point=r_sec <= 0,
    )


CANDIDATE_FIELDS = ("eta_det", "tau_dead_us", "dcr_hz", "label")


def load_candidates(path: str | Path) -> list[DetectorCandidate]:
    """Read a candidate CSV with columns ``eta_det,tau_dead_us,dcr_hz,label``.

    Lines starting with ``#`` are comments.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    missing = set(CANDIDATE_FIELDS[:3]) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"{path}: missing candidate columns {sorted(missing)}")
    out = []
    for index, row in enumerate(reader, start=1):
        try:
            out.append(DetectorCandidate(
                eta_det=float(row["eta_det"]),
                tau_dead=float(row["tau_dead_us"]) / 1e6,
                dcr=float(row["dcr_hz"]),
                label=(row.get("label") or "").strip(),
            ))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: candidate #{index}: {exc}") from None
    return out
