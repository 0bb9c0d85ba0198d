"""Tomographic scan planning, photon-count simulation, and record persistence.

A scan visits every (delta_index, tau_index, theta in {0, pi/2}) cell plus a
dedicated calibration pair at (tau=0, delta=0), in a fixed ordinal order:
calibration first, then delta ascending, tau ascending, theta in (0, pi/2).
Each setting draws from its own RNG substream derived from
SeedSequence(entropy=seed, spawn_key=(ordinal,)), so records are byte-for-byte
reproducible no matter how the settings are fanned out across workers.

Exact-probabilities mode bypasses sampling entirely: every shot is kept and
counts are the real-valued products shots * P_A, which separates
discretization error from shot noise in round-trip checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FrequencyGrid
from .diagnostics import Diagnostic, emit
from .errors import DataFormatError, InsufficientDataError
from .interferometer import (
    InterferometerConfig,
    MeasurementSetting,
    probabilities_closed_form,
    require_post_selected_regime,
)

THETAS = (0.0, math.pi / 2.0)

RECORD_HEADER = "delta_index,tau_index,theta_rad,shots_attempted,shots_postselected,counts_A,counts_B"
P_DELTA_HEADER = "delta_index,tau_index,tau,theta_rad,p_delta,stderr"


@dataclass(frozen=True)
class MeasurementRecord:
    """Shot counts at the two output ports for one interferometer setting.

    Counts are integers from sampling, or real-valued in exact mode.
    """

    setting: MeasurementSetting
    tau_index: int
    shots_attempted: int
    shots_postselected: float
    counts_a: float
    counts_b: float

    def __post_init__(self):
        if self.shots_attempted < 0 or self.counts_a < 0 or self.counts_b < 0:
            raise ValueError("shot and count fields must be nonnegative")
        if self.shots_postselected > self.shots_attempted + 1e-9:
            raise ValueError(
                f"post-selected shots ({self.shots_postselected}) exceed attempted "
                f"({self.shots_attempted})"
            )
        total = self.counts_a + self.counts_b
        if not math.isclose(total, self.shots_postselected, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(
                f"counts_A + counts_B = {total} != shots_postselected = {self.shots_postselected}"
            )


@dataclass(frozen=True)
class PlannedSetting:
    ordinal: int
    tau_index: int
    setting: MeasurementSetting
    is_calibration: bool = False


@dataclass(frozen=True)
class ScanPlan:
    """The full tomographic schedule over (delta, tau, theta)."""

    grid: FrequencyGrid
    delta_indices: tuple[int, ...]
    shots_per_setting: int
    seed: int
    tau_indices: tuple[int, ...]
    thetas: tuple[float, float] = THETAS
    warnings: tuple[Diagnostic, ...] = field(default=(), compare=False)

    def __post_init__(self):
        n = self.grid.n
        if self.shots_per_setting <= 0:
            raise ValueError(f"shots_per_setting must be positive, got {self.shots_per_setting}")
        if list(self.delta_indices) != sorted(set(self.delta_indices)):
            raise ValueError("delta_indices must be sorted and unique")
        if self.delta_indices and not (0 <= self.delta_indices[0] and self.delta_indices[-1] < n):
            raise ValueError(f"delta_indices must lie in [0, {n - 1}]")
        if any(not 0 <= k < n for k in self.tau_indices):
            raise ValueError(f"tau_indices must lie in [0, {n - 1}]")
        if self.thetas != THETAS:
            raise ValueError(f"tomography rows use thetas {THETAS}, got {self.thetas}")

    @property
    def n_settings(self) -> int:
        return 2 + len(self.delta_indices) * len(self.tau_indices) * len(self.thetas)

    def settings(self) -> list[PlannedSetting]:
        """Canonical enumeration; the ordinal seeds the per-setting RNG substream."""
        d_tau = self.grid.d_tau
        out: list[PlannedSetting] = []
        for theta in self.thetas:
            out.append(
                PlannedSetting(len(out), 0, MeasurementSetting(0.0, 0, theta), is_calibration=True)
            )
        for delta_index in self.delta_indices:
            for tau_index in self.tau_indices:
                for theta in self.thetas:
                    out.append(
                        PlannedSetting(
                            len(out),
                            tau_index,
                            MeasurementSetting(tau_index * d_tau, delta_index, theta),
                        )
                    )
        return out


def plan_scan(
    grid: FrequencyGrid,
    max_delta_index: int,
    shots: int,
    seed: int,
    *,
    max_delta_advisory: float | None = None,
) -> ScanPlan:
    """Plan covering delta_index 0..max_delta_index over the full delay grid.

    Total settings: 2 * n * (max_delta_index + 1) tomography rows plus the
    two calibration rows. If the largest shift exceeds `max_delta_advisory`
    (a hardware limit, e.g. what an AOM can actually drive), the plan carries
    a hardware-advisory diagnostic.
    """
    if not 0 <= max_delta_index < grid.n:
        raise ValueError(f"max_delta_index must be in [0, {grid.n - 1}], got {max_delta_index}")
    plan_warnings: tuple[Diagnostic, ...] = ()
    max_shift = max_delta_index * grid.d_omega
    if max_delta_advisory is not None and max_shift > max_delta_advisory:
        diag = emit(
            "hardware-advisory",
            f"planned frequency shift {max_shift:.6g} rad/s exceeds the advisory "
            f"limit {max_delta_advisory:.6g} rad/s",
            max_shift=max_shift,
            advisory_limit=max_delta_advisory,
        )
        plan_warnings = (diag,)
    return ScanPlan(
        grid=grid,
        delta_indices=tuple(range(max_delta_index + 1)),
        shots_per_setting=shots,
        seed=seed,
        tau_indices=tuple(range(grid.n)),
        warnings=plan_warnings,
    )


def _setting_rng(seed: int, ordinal: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(ordinal,)))


def simulate_counts(state, plan: ScanPlan, config: InterferometerConfig, *, exact: bool = False):
    """Simulate the scan; returns records ordered by setting ordinal.

    Sampling mode: shots_postselected ~ Binomial(shots, xi * efficiency),
    counts_A ~ Binomial(shots_postselected, P_A), both from the setting's own
    substream. Exact mode keeps every shot and stores counts_A = shots * P_A
    unrounded.
    """
    require_post_selected_regime(config)
    rate = config.post_selection_rate
    records: list[MeasurementRecord] = []
    shots = plan.shots_per_setting
    for planned in plan.settings():
        p_a, _ = probabilities_closed_form(state, planned.setting, config)
        if exact:
            post: float = shots
            counts_a: float = shots * p_a
            counts_b: float = shots - counts_a
        else:
            rng = _setting_rng(plan.seed, planned.ordinal)
            post = int(rng.binomial(shots, rate))
            counts_a = int(rng.binomial(post, p_a))
            counts_b = post - counts_a
        records.append(
            MeasurementRecord(
                setting=planned.setting,
                tau_index=planned.tau_index,
                shots_attempted=shots,
                shots_postselected=post,
                counts_a=counts_a,
                counts_b=counts_b,
            )
        )
    return records


def estimate_p_delta(record: MeasurementRecord) -> tuple[float, float]:
    """Estimate P_A - P_B and its standard error from one record."""
    post = record.shots_postselected
    if post <= 0:
        raise InsufficientDataError(
            f"no post-selected shots at (delta={record.setting.delta_index}, "
            f"tau_index={record.tau_index}, theta={record.setting.theta})"
        )
    p_hat_a = float(record.counts_a) / post
    p_delta_hat = float(record.counts_a - record.counts_b) / post
    stderr = 2.0 * math.sqrt(max(p_hat_a * (1.0 - p_hat_a), 0.0) / post)
    return p_delta_hat, stderr


def pool_records(records) -> list[MeasurementRecord]:
    """Sum counts of records sharing a (delta_index, tau_index, theta) cell.

    Dedicated calibration rows and the coincident (delta=0, tau=0) tomography
    rows pool into one estimate this way.
    """
    merged: dict[tuple[int, int, float], MeasurementRecord] = {}
    for rec in records:
        key = (rec.setting.delta_index, rec.tau_index, rec.setting.theta)
        prev = merged.get(key)
        if prev is None:
            merged[key] = rec
        else:
            merged[key] = MeasurementRecord(
                setting=rec.setting,
                tau_index=rec.tau_index,
                shots_attempted=prev.shots_attempted + rec.shots_attempted,
                shots_postselected=prev.shots_postselected + rec.shots_postselected,
                counts_a=prev.counts_a + rec.counts_a,
                counts_b=prev.counts_b + rec.counts_b,
            )
    return [merged[key] for key in sorted(merged)]


# ---------------------------------------------------------------------------
# Record file format (CSV, also the import path for real laboratory data)
# ---------------------------------------------------------------------------

def _format_number(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    f = float(value)
    return str(int(f)) if f.is_integer() else repr(f)


def write_records(path, records) -> None:
    lines = [RECORD_HEADER]
    for rec in records:
        lines.append(
            ",".join(
                [
                    str(rec.setting.delta_index),
                    str(rec.tau_index),
                    repr(float(rec.setting.theta)),
                    str(rec.shots_attempted),
                    _format_number(rec.shots_postselected),
                    _format_number(rec.counts_a),
                    _format_number(rec.counts_b),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def _parse_count(text: str) -> float:
    value = float(text)
    return int(value) if value.is_integer() else value


def read_records(path, grid: FrequencyGrid) -> list[MeasurementRecord]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != RECORD_HEADER:
        raise DataFormatError(f"{path}: expected header {RECORD_HEADER!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise DataFormatError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
        try:
            delta_index = int(parts[0])
            tau_index = int(parts[1])
            theta = float(parts[2])
            shots_attempted = int(parts[3])
            post = _parse_count(parts[4])
            counts_a = _parse_count(parts[5])
            counts_b = _parse_count(parts[6])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        if not 0 <= delta_index < grid.n or not 0 <= tau_index < grid.n:
            raise DataFormatError(
                f"{path}:{lineno}: indices out of range for an n={grid.n} grid"
            )
        try:
            records.append(
                MeasurementRecord(
                    setting=MeasurementSetting(tau_index * grid.d_tau, delta_index, theta),
                    tau_index=tau_index,
                    shots_attempted=shots_attempted,
                    shots_postselected=post,
                    counts_a=counts_a,
                    counts_b=counts_b,
                )
            )
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    return records


def p_delta_rows(records, grid: FrequencyGrid) -> list[tuple]:
    """Plot-ready (delta_index, tau_index, tau, theta, p_delta, stderr) rows."""
    rows = []
    for rec in pool_records(records):
        p_delta_hat, stderr = estimate_p_delta(rec)
        rows.append(
            (
                rec.setting.delta_index,
                rec.tau_index,
                rec.tau_index * grid.d_tau,
                rec.setting.theta,
                p_delta_hat,
                stderr,
            )
        )
    return rows


def write_p_delta_table(path, records, grid: FrequencyGrid) -> None:
    lines = [P_DELTA_HEADER]
    for delta_index, tau_index, tau, theta, p_delta_hat, stderr in p_delta_rows(records, grid):
        lines.append(
            ",".join(
                [
                    str(delta_index),
                    str(tau_index),
                    repr(tau),
                    repr(theta),
                    repr(p_delta_hat),
                    repr(stderr),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
