"""Sweep protocol: incremental lam ladder with an SER gate and seed restarts.

For each lam on the grid, num_seeds systems are trained from seeds
base.seed + k and scored by Monte-Carlo SER and the delivered-power metric.
The grid stops advancing after the first lam where no run passes the SER
gate.  The best run at a lam is the accepted record with maximal p_del.
Everything is deterministic given the config; the optional process pool
changes wall time only, never the records.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .autoencoder import (
    Constellation,
    DegenerateConstellationError,
    TrainConfig,
    awgn_channel,
    estimate_ser,
    fmt17,
    train,
)
from .bessel import bessel_i0
from .nn import TrainingError
from .rectenna import delivered_power_metric

DEFAULT_LAMBDA_GRID = (0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)

# Stream tag separating SER-estimation draws from training draws.
_SER_STREAM = 929

RATIO_CAP = 1e9

RECORDS_HEADER = "lambda,seed,ser,ser_ci,p_del,final_loss,accepted"


class SweepError(RuntimeError):
    """A sweep cannot produce any usable record at some lam."""


@dataclass(frozen=True)
class SweepConfig:
    base: TrainConfig                      # base.lam is ignored
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    ser_max: float = 0.95
    num_seeds: int = 10
    ser_samples: int = 100000

    def __post_init__(self):
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid or grid[0] != 0.0:
            raise ValueError("lambda_grid must start at 0")
        if any(not (math.isfinite(v) and v >= 0.0) for v in grid):
            raise ValueError("lambda_grid values must be finite and >= 0")
        if any(a >= b for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda_grid must be strictly increasing")
        object.__setattr__(self, "lambda_grid", grid)
        if not (0.0 < self.ser_max <= 1.0):
            raise ValueError(f"ser_max must lie in (0, 1], got {self.ser_max!r}")
        if not (isinstance(self.num_seeds, int) and self.num_seeds >= 1):
            raise ValueError(f"num_seeds must be a positive integer, got {self.num_seeds!r}")
        if not (isinstance(self.ser_samples, int) and self.ser_samples >= 1):
            raise ValueError(f"ser_samples must be a positive integer, got {self.ser_samples!r}")


@dataclass(frozen=True)
class SweepRecord:
    lam: float
    seed: int
    constellation: Constellation | None
    ser: float
    ser_ci: float
    p_del: float
    final_loss: float
    accepted: bool

    def __post_init__(self):
        if not (0.0 <= self.ser <= 1.0):
            raise ValueError(f"ser must lie in [0, 1], got {self.ser!r}")
        if not (self.p_del >= 1.0):
            raise ValueError(f"p_del must be >= 1, got {self.p_del!r}")


@dataclass(frozen=True)
class ShapeReport:
    power_symbol_index: int
    amplitude_ratio: float       # max amplitude / second-max, capped at 1e9
    axis_deviation_deg: float    # power symbol's angle to the nearest multiple of 90 deg
    near_zero_count: int         # symbols with |x| < 0.1 * max amplitude


def _run_one(task) -> SweepRecord | None:
    """Train/score one (lam, seed) cell; None when the run itself fails."""
    config, lam_index, ser_samples, ser_max = task
    try:
        system = train(config)
    except (TrainingError, DegenerateConstellationError):
        return None
    rng = np.random.default_rng((config.seed, lam_index, _SER_STREAM))
    ser, ser_ci = estimate_ser(system, ser_samples, rng)
    p_del = delivered_power_metric(system.constellation.symbols, config.rectenna)
    return SweepRecord(
        lam=config.lam,
        seed=config.seed,
        constellation=system.constellation,
        ser=ser,
        ser_ci=ser_ci,
        p_del=p_del,
        final_loss=system.final_loss,
        accepted=ser <= ser_max,
    )


def run_sweep(config: SweepConfig, workers: int = 1, progress=None) -> list[SweepRecord]:
    """Execute the ladder; returns records in canonical (lam, seed) order.

    Per-run training failures are skipped; a lam where every run fails raises
    SweepError.  A lam with runs but no accepted record is recorded and stops
    the ladder.
    """
    if not (isinstance(workers, int) and workers >= 1):
        raise ValueError(f"workers must be a positive integer, got {workers!r}")
    records: list[SweepRecord] = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for lam_index, lam in enumerate(config.lambda_grid):
            tasks = [
                (replace(config.base, lam=lam, seed=config.base.seed + k),
                 lam_index, config.ser_samples, config.ser_max)
                for k in range(config.num_seeds)
            ]
            if pool is not None:
                results = list(pool.map(_run_one, tasks))
            else:
                results = [_run_one(t) for t in tasks]
            batch = [r for r in results if r is not None]
            if not batch:
                raise SweepError(
                    f"every training run failed at lambda={lam:g} "
                    f"({config.num_seeds} seeds attempted)"
                )
            records.extend(batch)
            if progress is not None:
                progress(lam, batch)
            if not any(r.accepted for r in batch):
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def best_record_per_lambda(records) -> dict[float, SweepRecord]:
    """Accepted record with maximal p_del per lam; ties go to the lower seed."""
    best: dict[float, SweepRecord] = {}
    for r in records:
        if not r.accepted:
            continue
        cur = best.get(r.lam)
        if cur is None or r.p_del > cur.p_del or (r.p_del == cur.p_del and r.seed < cur.seed):
            best[r.lam] = r
    return best


def classify_shape(constellation: Constellation) -> ShapeReport:
    """Geometry summary of a single-channel-use constellation."""
    if constellation.n_channel_uses != 1:
        raise ValueError("classify_shape is defined for n_channel_uses == 1")
    symbols = constellation.points[:, 0]
    if symbols.size < 2:
        raise ValueError("need at least 2 symbols")
    amps = np.abs(symbols)
    power_idx = int(np.argmax(amps))
    amax = float(amps[power_idx])
    rest = np.delete(amps, power_idx)
    second = float(rest.max())
    if amax == 0.0:
        ratio = 1.0
        axis_dev = 0.0
    else:
        ratio = min(amax / second, RATIO_CAP) if second > 0.0 else RATIO_CAP
        z = symbols[power_idx]
        ang = math.degrees(math.atan2(abs(z.imag), abs(z.real)))  # in [0, 90]
        axis_dev = min(ang, 90.0 - ang)
    near_zero = int(np.count_nonzero(amps < 0.1 * amax))
    return ShapeReport(power_idx, ratio, axis_dev, near_zero)


def rate_power_curve(records) -> list[tuple[float, float]]:
    """Pareto frontier of accepted records as (1-ser, p_del), sorted by 1-ser descending."""
    accepted = [r for r in records if r.accepted]
    if not accepted:
        warnings.warn("no accepted records; rate-power curve is empty")
        return []
    pts = sorted(((1.0 - r.ser, r.p_del) for r in accepted), key=lambda t: (-t[0], -t[1]))
    curve = []
    best_power = -math.inf
    for level, power in pts:
        if power > best_power:
            curve.append((level, power))
            best_power = power
    return curve


def binned_best_power(records, bin_width: float = 0.05) -> dict[int, float]:
    """Max p_del among accepted records per 1-ser bin (bin = floor((1-ser)/width))."""
    if not (0.0 < bin_width <= 1.0):
        raise ValueError(f"bin_width must lie in (0, 1], got {bin_width!r}")
    out: dict[int, float] = {}
    for r in records:
        if not r.accepted:
            continue
        b = int(math.floor((1.0 - r.ser) / bin_width))
        out[b] = max(out.get(b, -math.inf), r.p_del)
    return out


def noisy_delivered_power(system, num_samples: int, rng: np.random.Generator,
                          snr_db: float | None = None) -> float:
    """Diagnostic only: the metric evaluated on noisy received symbols.

    The loss and all reported p_del values use the noiseless channel input;
    this estimates how much the AWGN perturbs the harvested-power proxy.
    """
    cfg = system.config
    snr = cfg.snr_db if snr_db is None else snr_db
    idx = rng.integers(0, cfg.m_messages, size=num_samples)
    received = awgn_channel(system.constellation.points[idx], snr, cfg.avg_power, rng)
    b = cfg.rectenna.b
    amps = np.abs(received).ravel()
    return float(np.mean([bessel_i0(math.sqrt(2.0) * b * a) for a in amps]))


# --- records persistence --------------------------------------------------

def records_to_csv(records) -> str:
    lines = [RECORDS_HEADER]
    for r in records:
        lines.append(
            f"{fmt17(r.lam)},{r.seed},{fmt17(r.ser)},{fmt17(r.ser_ci)},"
            f"{fmt17(r.p_del)},{fmt17(r.final_loss)},{'true' if r.accepted else 'false'}"
        )
    return "\n".join(lines) + "\n"


def records_from_csv(text: str) -> list[SweepRecord]:
    """Parse records_to_csv output; constellations are not stored in the CSV."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != RECORDS_HEADER:
        raise ValueError(f"row 1: expected header {RECORDS_HEADER!r}")
    out = []
    for row, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 7:
            raise ValueError(f"row {row}: expected 7 fields, got {len(parts)}")
        if parts[6] not in ("true", "false"):
            raise ValueError(f"row {row}: accepted must be 'true' or 'false', got {parts[6]!r}")
        try:
            out.append(SweepRecord(
                lam=float(parts[0]), seed=int(parts[1]), constellation=None,
                ser=float(parts[2]), ser_ci=float(parts[3]), p_del=float(parts[4]),
                final_loss=float(parts[5]), accepted=parts[6] == "true",
            ))
        except ValueError as exc:
            raise ValueError(f"row {row}: {exc}") from exc
    return out
