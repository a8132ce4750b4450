"""End-to-end learned SWIPT link: encoder, power normalization, AWGN, decoder.

One message out of M is one-hot encoded, mapped by the encoder network to n
complex channel symbols, rescaled to meet the average-power constraint
exactly, corrupted by AWGN, and classified back by the decoder network.  The
training loss is mean cross-entropy plus lam / delivered-power-metric, so
raising lam trades detectability for harvested power.

The encoder only ever sees the M one-hot vectors, so each training step runs
it once on the identity matrix and scatter-adds the per-sample channel
gradients onto the M constellation rows; this is algebraically identical to
forwarding the whole batch through the encoder.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .nn import (
    PROB_FLOOR,
    AdamState,
    Mlp,
    TrainingError,
    adam_step,
    backward,
    forward,
    glorot_mlp,
    mlp_from_dict,
    mlp_to_dict,
)
from .rectenna import RectennaParams, delivered_power_metric, delivered_power_metric_gradient

MANIFEST_FORMAT = "swiptlearn-system-v1"


class DegenerateConstellationError(RuntimeError):
    """Raw encoder outputs are all zero; the power normalization is undefined."""


@dataclass(frozen=True)
class TrainConfig:
    """Every knob of one training run."""

    m_messages: int
    lam: float = 0.0
    n_channel_uses: int = 1
    snr_db: float = 20.0
    avg_power: float = 1.0
    batch_size: int = 1000
    train_set_size: int = 100000
    epochs: int = 50
    learning_rate: float = 1e-3
    seed: int = 0
    rectenna: RectennaParams = field(default_factory=RectennaParams)

    def __post_init__(self):
        if not (isinstance(self.m_messages, int) and self.m_messages >= 2):
            raise ValueError(f"m_messages must be an integer >= 2, got {self.m_messages!r}")
        if not (isinstance(self.n_channel_uses, int) and self.n_channel_uses >= 1):
            raise ValueError(f"n_channel_uses must be a positive integer, got {self.n_channel_uses!r}")
        if not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam!r}")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be a real value or +inf, got {self.snr_db!r}")
        if not (self.avg_power > 0.0 and math.isfinite(self.avg_power)):
            raise ValueError(f"avg_power must be > 0, got {self.avg_power!r}")
        for name in ("batch_size", "train_set_size", "epochs"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.train_set_size % self.batch_size != 0:
            raise ValueError(
                f"batch_size {self.batch_size} must divide train_set_size {self.train_set_size}"
            )
        if not (self.learning_rate > 0.0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def steps_per_epoch(self) -> int:
        return self.train_set_size // self.batch_size

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps_per_epoch

    @property
    def noise_variance(self) -> float:
        """Total complex noise variance per channel use; 0 when snr_db is +inf."""
        if math.isinf(self.snr_db):
            return 0.0
        return self.avg_power * 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class Constellation:
    """The M learned codewords (rows), one complex value per channel use."""

    points: np.ndarray          # (M, n) complex128
    avg_power: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError(f"points must be an (M, n) array, got shape {np.shape(self.points)}")
        if not np.all(np.isfinite(pts.real) & np.isfinite(pts.imag)):
            raise ValueError("constellation points must be finite")
        object.__setattr__(self, "points", pts)
        if not (self.avg_power >= 0.0 and math.isfinite(self.avg_power)):
            raise ValueError(f"avg_power must be finite and >= 0, got {self.avg_power!r}")
        mean_power = float(np.mean(np.abs(pts) ** 2))
        if abs(mean_power - self.avg_power) > 1e-9 * max(1.0, self.avg_power):
            raise ValueError(
                f"points have mean power {mean_power!r}, expected {self.avg_power!r}"
            )

    @property
    def m_messages(self) -> int:
        return self.points.shape[0]

    @property
    def n_channel_uses(self) -> int:
        return self.points.shape[1]

    @property
    def symbols(self) -> np.ndarray:
        """Flat view of the codeword entries, length M*n."""
        return self.points.ravel()


@dataclass
class TrainedSystem:
    encoder: Mlp
    decoder: Mlp
    config: TrainConfig
    final_loss: float
    constellation: Constellation


def complex_to_real_pairs(x: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) real with re/im interleaved."""
    x = np.asarray(x, dtype=np.complex128)
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],), dtype=float)
    out[..., 0::2] = x.real
    out[..., 1::2] = x.imag
    return out


def real_pairs_to_complex(z: np.ndarray) -> np.ndarray:
    """Inverse of complex_to_real_pairs."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] % 2 != 0:
        raise ValueError(f"last axis must be even, got {z.shape[-1]}")
    return z[..., 0::2] + 1j * z[..., 1::2]


def _power_scale(raw: np.ndarray, avg_power: float) -> float:
    """Scale s with mean |s*raw|^2 per channel use == avg_power."""
    total = float(np.sum(raw * raw))
    if total <= 0.0:
        raise DegenerateConstellationError("all raw encoder outputs are zero")
    m = raw.shape[0]
    n = raw.shape[1] // 2
    return math.sqrt(avg_power * m * n / total)


def encode_all(encoder: Mlp, m_messages: int, avg_power: float, n_channel_uses: int = 1) -> Constellation:
    """Evaluate the encoder on all M one-hot messages and normalize the power.

    Raw outputs z are scaled by s = sqrt(avg_power*M*n / sum(z^2)) so the
    constellation meets the average-power constraint exactly.
    """
    if encoder.in_dim != m_messages:
        raise ValueError(f"encoder expects {encoder.in_dim} messages, got m_messages={m_messages}")
    if encoder.out_dim != 2 * n_channel_uses:
        raise ValueError(
            f"encoder emits {encoder.out_dim} outputs, need {2 * n_channel_uses} for n={n_channel_uses}"
        )
    raw, _ = forward(encoder, np.eye(m_messages))
    s = _power_scale(raw, avg_power)
    return Constellation(real_pairs_to_complex(s * raw), avg_power)


def awgn_channel(symbols: np.ndarray, snr_db: float, avg_power: float, rng=None) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise at the given SNR.

    Total noise variance is avg_power * 10^(-snr_db/10), split evenly across
    the real and imaginary components.  snr_db = +inf disables the noise.
    """
    x = np.asarray(symbols, dtype=np.complex128)
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ValueError(f"snr_db must be a real value or +inf, got {snr_db!r}")
    if not (avg_power > 0.0 and math.isfinite(avg_power)):
        raise ValueError(f"avg_power must be > 0, got {avg_power!r}")
    if math.isinf(snr_db):
        return x.copy()
    if rng is None:
        raise ValueError("rng is required when noise is enabled")
    std = math.sqrt(avg_power * 10.0 ** (-snr_db / 10.0) / 2.0)
    noise = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + std * noise


def _validate_one_hots(one_hots: np.ndarray, m: int) -> np.ndarray:
    s = np.asarray(one_hots, dtype=float)
    if s.ndim != 2 or s.shape[1] != m:
        raise ValueError(f"one_hots must be (batch, {m}), got shape {s.shape}")
    if not (np.all((s == 0.0) | (s == 1.0)) and np.all(s.sum(axis=1) == 1.0)):
        raise ValueError("every row must be a one-hot indicator")
    return np.argmax(s, axis=1)


def _mean_nll(probs: np.ndarray, idx: np.ndarray) -> float:
    pt = probs[np.arange(idx.size), idx]
    return float(np.mean(-np.log(np.maximum(pt, PROB_FLOOR))))


def composite_loss(batch_one_hots, decoder_probs, constellation: Constellation,
                   lam: float, rectenna: RectennaParams):
    """Mean cross-entropy over the batch plus lam / delivered-power metric.

    Returns (loss, {"ce_term", "power_term", "p_del"}).
    """
    if lam < 0.0 or not math.isfinite(lam):
        raise ValueError(f"lam must be finite and >= 0, got {lam!r}")
    probs = np.asarray(decoder_probs, dtype=float)
    idx = _validate_one_hots(batch_one_hots, constellation.m_messages)
    if probs.shape != (idx.size, constellation.m_messages):
        raise ValueError(f"decoder_probs shape {probs.shape} does not match batch")
    ce = _mean_nll(probs, idx)
    p_del = delivered_power_metric(constellation.symbols, rectenna)
    power_term = lam / p_del
    return ce + power_term, {"ce_term": ce, "power_term": power_term, "p_del": p_del}


def system_loss_and_gradients(encoder: Mlp, decoder: Mlp, config: TrainConfig,
                              message_indices: np.ndarray, noise: np.ndarray):
    """Loss and exact gradients of one step with the channel noise held fixed.

    noise is the additive (batch, 2n) real perturbation, already scaled.
    Returns (loss, decomposition, grads) with grads aligned to
    encoder.parameters() + decoder.parameters().
    """
    m = config.m_messages
    two_n = 2 * config.n_channel_uses
    idx = np.asarray(message_indices, dtype=np.intp)
    noise = np.asarray(noise, dtype=float)
    if idx.ndim != 1 or noise.shape != (idx.size, two_n):
        raise ValueError(f"need indices (B,) and noise (B, {two_n}), got {idx.shape} and {noise.shape}")
    if np.any(idx < 0) or np.any(idx >= m):
        raise ValueError("message indices out of range")

    raw, enc_cache = forward(encoder, np.eye(m))
    total = float(np.sum(raw * raw))
    if total <= 0.0:
        raise DegenerateConstellationError("all raw encoder outputs are zero")
    s = math.sqrt(config.avg_power * m * config.n_channel_uses / total)
    points = s * raw                               # (M, 2n) real

    received = points[idx] + noise
    probs, dec_cache = forward(decoder, received)
    batch = idx.size
    pt = probs[np.arange(batch), idx]
    ce = float(np.mean(-np.log(np.maximum(pt, PROB_FLOOR))))

    # d(mean nll)/d(probs): nonzero only at the true class, flat below the floor.
    gout = np.zeros_like(probs)
    live = pt > PROB_FLOOR
    gout[np.arange(batch)[live], idx[live]] = -1.0 / (batch * pt[live])
    dec_grads, g_received = backward(decoder, dec_cache, gout)

    # Scatter per-sample gradients back onto the constellation rows.
    g_points = np.empty_like(points)
    for j in range(two_n):
        g_points[:, j] = np.bincount(idx, weights=g_received[:, j], minlength=m)

    flat = real_pairs_to_complex(points).ravel()
    p_del = delivered_power_metric(flat, config.rectenna)
    power_term = config.lam / p_del
    if config.lam > 0.0:
        gp = delivered_power_metric_gradient(flat, config.rectenna).reshape(m, config.n_channel_uses)
        coef = -config.lam / (p_del * p_del)
        g_points[:, 0::2] += coef * gp.real
        g_points[:, 1::2] += coef * gp.imag

    # Through the normalization: points = s(raw) * raw.
    dot = float(np.sum(g_points * raw))
    g_raw = s * g_points - (s / total) * dot * raw
    enc_grads, _ = backward(encoder, enc_cache, g_raw)

    loss = ce + power_term
    decomposition = {"ce_term": ce, "power_term": power_term, "p_del": p_del}
    return loss, decomposition, enc_grads + dec_grads


def system_loss(encoder: Mlp, decoder: Mlp, config: TrainConfig,
                message_indices: np.ndarray, noise: np.ndarray) -> float:
    """Loss of system_loss_and_gradients without the gradient work (for FD checks)."""
    m = config.m_messages
    raw, _ = forward(encoder, np.eye(m))
    total = float(np.sum(raw * raw))
    if total <= 0.0:
        raise DegenerateConstellationError("all raw encoder outputs are zero")
    s = math.sqrt(config.avg_power * m * config.n_channel_uses / total)
    points = s * raw
    idx = np.asarray(message_indices, dtype=np.intp)
    received = points[idx] + np.asarray(noise, dtype=float)
    probs, _ = forward(decoder, received)
    ce = _mean_nll(probs, idx)
    p_del = delivered_power_metric(real_pairs_to_complex(points).ravel(), config.rectenna)
    return ce + config.lam / p_del


def build_networks(config: TrainConfig, rng: np.random.Generator) -> tuple[Mlp, Mlp]:
    """Fresh Glorot-initialized encoder/decoder pair for the config's sizes."""
    m, two_n = config.m_messages, 2 * config.n_channel_uses
    encoder = glorot_mlp((m, m, two_n), ("relu", "identity"), rng)
    decoder = glorot_mlp((two_n, m, m), ("relu", "softmax"), rng)
    return encoder, decoder


def train(config: TrainConfig) -> TrainedSystem:
    """Run the full Adam training loop; deterministic given config.seed."""
    rng = np.random.default_rng(config.seed)
    encoder, decoder = build_networks(config, rng)
    params = encoder.parameters() + decoder.parameters()
    state = AdamState.init(params, learning_rate=config.learning_rate)
    noise_std = math.sqrt(config.noise_variance / 2.0)
    two_n = 2 * config.n_channel_uses
    loss = math.nan
    for step in range(1, config.total_steps + 1):
        idx = rng.integers(0, config.m_messages, size=config.batch_size)
        if noise_std > 0.0:
            noise = noise_std * rng.standard_normal((config.batch_size, two_n))
        else:
            noise = np.zeros((config.batch_size, two_n))
        loss, _, grads = system_loss_and_gradients(encoder, decoder, config, idx, noise)
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss!r} at step {step}", step=step)
        adam_step(params, grads, state)
    constellation = encode_all(encoder, config.m_messages, config.avg_power, config.n_channel_uses)
    return TrainedSystem(encoder, decoder, config, float(loss), constellation)


def estimate_ser(system: TrainedSystem, num_samples: int, rng: np.random.Generator,
                 snr_db: float | None = None, chunk: int = 50000):
    """Monte-Carlo symbol error rate through the noisy chain.

    Decoded message = argmax of the decoder probabilities (argmax takes the
    lowest index on ties).  Returns (ser, halfwidth) where halfwidth is the
    95% normal-approximation confidence half-interval.
    """
    if not (isinstance(num_samples, int) and num_samples >= 1):
        raise ValueError(f"num_samples must be a positive integer, got {num_samples!r}")
    cfg = system.config
    snr = cfg.snr_db if snr_db is None else snr_db
    pts = system.constellation.points
    errors = 0
    done = 0
    while done < num_samples:
        b = min(chunk, num_samples - done)
        idx = rng.integers(0, cfg.m_messages, size=b)
        received = awgn_channel(pts[idx], snr, cfg.avg_power, rng)
        probs, _ = forward(system.decoder, complex_to_real_pairs(received))
        errors += int(np.count_nonzero(np.argmax(probs, axis=1) != idx))
        done += b
    ser = errors / num_samples
    halfwidth = 1.96 * math.sqrt(max(ser * (1.0 - ser), 0.0) / num_samples)
    return ser, halfwidth


# --- persistence ---------------------------------------------------------

def rectenna_to_dict(params: RectennaParams) -> dict:
    return {
        "i_s": params.i_s, "eta": params.eta, "v_t": params.v_t,
        "r_a": params.r_a, "r_l": params.r_l, "b_scale": params.b_scale,
    }


def rectenna_from_dict(doc: dict) -> RectennaParams:
    return RectennaParams(**doc)


def config_to_dict(config: TrainConfig) -> dict:
    return {
        "m_messages": config.m_messages, "lam": config.lam,
        "n_channel_uses": config.n_channel_uses, "snr_db": config.snr_db,
        "avg_power": config.avg_power, "batch_size": config.batch_size,
        "train_set_size": config.train_set_size, "epochs": config.epochs,
        "learning_rate": config.learning_rate, "seed": config.seed,
        "rectenna": rectenna_to_dict(config.rectenna),
    }


def config_from_dict(doc: dict) -> TrainConfig:
    doc = dict(doc)
    doc["rectenna"] = rectenna_from_dict(doc.get("rectenna", {}))
    return TrainConfig(**doc)


def system_to_manifest(system: TrainedSystem, ser: float | None = None,
                       ser_ci: float | None = None) -> dict:
    """JSON-ready manifest; seeds and parameters suffice to regenerate the run."""
    pts = system.constellation.points
    return {
        "format": MANIFEST_FORMAT,
        "config": config_to_dict(system.config),
        "encoder": mlp_to_dict(system.encoder),
        "decoder": mlp_to_dict(system.decoder),
        "constellation": {
            "avg_power": system.constellation.avg_power,
            "points": [[z.real, z.imag] for z in pts.ravel()],
            "n_channel_uses": pts.shape[1],
        },
        "final_loss": system.final_loss,
        "ser": ser,
        "ser_ci": ser_ci,
    }


def system_from_manifest(doc: dict) -> TrainedSystem:
    fmt = doc.get("format")
    if fmt != MANIFEST_FORMAT:
        raise ValueError(f"unsupported manifest format {fmt!r}, expected {MANIFEST_FORMAT!r}")
    config = config_from_dict(doc["config"])
    cpts = np.array([complex(re, im) for re, im in doc["constellation"]["points"]])
    n = int(doc["constellation"].get("n_channel_uses", 1))
    constellation = Constellation(cpts.reshape(-1, n), float(doc["constellation"]["avg_power"]))
    return TrainedSystem(
        encoder=mlp_from_dict(doc["encoder"]),
        decoder=mlp_from_dict(doc["decoder"]),
        config=config,
        final_loss=float(doc["final_loss"]),
        constellation=constellation,
    )


def fmt17(x: float) -> str:
    """Fixed float formatting for byte-stable CSV output."""
    return format(float(x), ".17g")


def constellation_to_csv(constellation: Constellation) -> str:
    """`index,re,im` rows; single-channel-use constellations only."""
    if constellation.n_channel_uses != 1:
        raise ValueError("CSV export is defined for n_channel_uses == 1")
    lines = ["index,re,im"]
    for i, z in enumerate(constellation.points[:, 0]):
        lines.append(f"{i},{fmt17(z.real)},{fmt17(z.imag)}")
    return "\n".join(lines) + "\n"


def constellation_from_csv(text: str) -> np.ndarray:
    """Parse constellation_to_csv output back into a complex vector."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "index,re,im":
        raise ValueError("row 1: expected header 'index,re,im'")
    out = []
    for row, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 3:
            raise ValueError(f"row {row}: expected 3 fields, got {len(parts)}")
        try:
            out.append(complex(float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ValueError(f"row {row}: {exc}") from exc
    return np.array(out, dtype=np.complex128)


def save_system(system: TrainedSystem, path, ser: float | None = None,
                ser_ci: float | None = None) -> None:
    doc = system_to_manifest(system, ser=ser, ser_ci=ser_ci)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_system(path) -> TrainedSystem:
    with open(path) as fh:
        return system_from_manifest(json.load(fh))
