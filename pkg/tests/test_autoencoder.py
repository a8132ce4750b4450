import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from swiptlearn.autoencoder import (
    Constellation,
    DegenerateConstellationError,
    TrainConfig,
    TrainedSystem,
    awgn_channel,
    complex_to_real_pairs,
    composite_loss,
    constellation_from_csv,
    constellation_to_csv,
    encode_all,
    estimate_ser,
    real_pairs_to_complex,
    system_from_manifest,
    system_loss,
    system_loss_and_gradients,
    system_to_manifest,
    train,
)
from swiptlearn.nn import DenseLayer, Mlp
from swiptlearn.rectenna import RectennaParams, delivered_power_metric

QAM16 = np.array([complex(re, im)
                  for re in (-3, -1, 1, 3)
                  for im in (-3, -1, 1, 3)]) / math.sqrt(10.0)


def _qam16_system(snr_db=20.0):
    """Hand-built 16-QAM encoder and maximum-likelihood decoder.

    Min-distance decoding is exactly a linear layer: score_i = 2<x_i, y> - |x_i|^2
    is monotone in -|y - x_i|^2, and softmax preserves the argmax.
    """
    enc_w = np.zeros((2, 16))
    enc_w[0] = QAM16.real
    enc_w[1] = QAM16.imag
    encoder = Mlp([DenseLayer(enc_w, np.zeros(2), "identity")])
    dec_w = np.stack([2 * QAM16.real, 2 * QAM16.imag], axis=1)
    dec_b = -(np.abs(QAM16) ** 2)
    decoder = Mlp([DenseLayer(dec_w, dec_b, "softmax")])
    config = TrainConfig(m_messages=16, snr_db=snr_db, seed=0)
    constellation = encode_all(encoder, 16, 1.0)
    return TrainedSystem(encoder, decoder, config, 0.0, constellation)


def tiny_config(**kw):
    base = dict(m_messages=4, epochs=2, train_set_size=1000, batch_size=250, seed=1)
    base.update(kw)
    return TrainConfig(**base)


# --- config and constellation types ---------------------------------------

def test_train_config_validation():
    TrainConfig(m_messages=8)
    with pytest.raises(ValueError):
        TrainConfig(m_messages=1)
    with pytest.raises(ValueError):
        TrainConfig(m_messages=8, lam=-0.5)
    with pytest.raises(ValueError):
        TrainConfig(m_messages=8, batch_size=300)  # does not divide 100000
    with pytest.raises(ValueError):
        TrainConfig(m_messages=8, avg_power=0.0)
    with pytest.raises(ValueError):
        TrainConfig(m_messages=8, snr_db=-math.inf)
    with pytest.raises(ValueError):
        TrainConfig(m_messages=8, seed=-1)
    with pytest.raises(ValueError):
        TrainConfig(m_messages=8, learning_rate=0.0)


def test_train_config_defaults_match_protocol():
    cfg = TrainConfig(m_messages=16)
    assert cfg.batch_size == 1000
    assert cfg.train_set_size == 100000
    assert cfg.snr_db == 20.0
    assert cfg.n_channel_uses == 1
    assert cfg.total_steps == cfg.epochs * 100


def test_constellation_power_consistency():
    with pytest.raises(ValueError):
        Constellation(np.array([2 + 0j, 0j]), 1.0)
    c = Constellation(np.array([math.sqrt(2) + 0j, 0j]), 1.0)
    assert c.m_messages == 2 and c.n_channel_uses == 1


def test_real_complex_interleave_round_trip():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    npt.assert_array_equal(real_pairs_to_complex(complex_to_real_pairs(z)), z)


# --- encode_all ------------------------------------------------------------

def test_encode_all_scales_to_average_power():
    w = np.array([[2.0, 0.0], [0.0, 0.0]])  # one-hot 0 -> (2, 0), one-hot 1 -> (0, 0)
    encoder = Mlp([DenseLayer(w, np.zeros(2), "identity")])
    c = encode_all(encoder, 2, 1.0)
    npt.assert_allclose(c.points[:, 0], [math.sqrt(2), 0.0], atol=1e-15)


def test_encode_all_identity_when_already_normalized():
    w = np.zeros((2, 4))
    w[0] = [1.0, -1.0, 1.0, -1.0]
    w[1] = [1.0, 1.0, -1.0, -1.0]
    w /= math.sqrt(2.0)
    encoder = Mlp([DenseLayer(w, np.zeros(2), "identity")])
    c = encode_all(encoder, 4, 1.0)
    npt.assert_allclose(c.points[:, 0], (w[0] + 1j * w[1]), rtol=1e-14)


def test_encode_all_power_invariant_random_encoders():
    rng = np.random.default_rng(5)
    from swiptlearn.nn import glorot_mlp
    for _ in range(5):
        enc = glorot_mlp((8, 8, 2), ("relu", "identity"), rng)
        c = encode_all(enc, 8, 1.7)
        npt.assert_allclose(np.mean(np.abs(c.points) ** 2), 1.7, atol=1e-12 * 1.7)


def test_encode_all_degenerate():
    encoder = Mlp([DenseLayer(np.zeros((2, 4)), np.zeros(2), "identity")])
    with pytest.raises(DegenerateConstellationError):
        encode_all(encoder, 4, 1.0)


def test_encode_all_dimension_checks():
    encoder = Mlp([DenseLayer(np.eye(4), np.zeros(4), "identity")])
    with pytest.raises(ValueError):
        encode_all(encoder, 8, 1.0)
    with pytest.raises(ValueError):
        encode_all(encoder, 4, 1.0)  # out_dim 4 != 2n for n=1


# --- channel ---------------------------------------------------------------

def test_awgn_noise_free_sentinel():
    x = np.array([1 + 1j, -2j])
    y = awgn_channel(x, math.inf, 1.0)
    npt.assert_array_equal(y, x)


def test_awgn_snr_definition():
    # snr 20 dB at unit power -> total variance 0.01, 0.005 per component
    rng = np.random.default_rng(123)
    x = np.zeros(10**6, dtype=complex)
    y = awgn_channel(x, 20.0, 1.0, rng)
    total_var = np.mean(np.abs(y) ** 2)
    npt.assert_allclose(total_var, 0.01, rtol=0.01)
    npt.assert_allclose(np.var(y.real), 0.005, rtol=0.02)
    npt.assert_allclose(np.var(y.imag), 0.005, rtol=0.02)


def test_awgn_validation():
    with pytest.raises(ValueError):
        awgn_channel(np.zeros(2, dtype=complex), math.nan, 1.0)
    with pytest.raises(ValueError):
        awgn_channel(np.zeros(2, dtype=complex), 20.0, 1.0)  # rng missing


# --- composite loss --------------------------------------------------------

def test_composite_loss_lambda_zero_is_pure_ce():
    rng = np.random.default_rng(9)
    m = 8
    idx = rng.integers(0, m, size=32)
    one_hots = np.eye(m)[idx]
    probs = rng.uniform(0.05, 1.0, size=(32, m))
    probs /= probs.sum(axis=1, keepdims=True)
    c = Constellation(np.exp(2j * math.pi * np.arange(m) / m), 1.0)
    expected_ce = float(np.mean(-np.log(probs[np.arange(32), idx])))
    for rect in (RectennaParams(), RectennaParams(eta=1.6, b_scale=2.5)):
        loss, parts = composite_loss(one_hots, probs, c, 0.0, rect)
        npt.assert_allclose(loss, expected_ce, rtol=1e-14)
        assert parts["power_term"] == 0.0


def test_composite_loss_all_zero_constellation():
    c = Constellation(np.zeros(4, dtype=complex), 0.0)
    one_hots = np.eye(4)[[0, 2]]
    probs = np.full((2, 4), 0.25)
    loss, parts = composite_loss(one_hots, probs, c, 3.0, RectennaParams())
    assert parts["p_del"] == 1.0
    npt.assert_allclose(parts["power_term"], 3.0, rtol=1e-15)
    npt.assert_allclose(loss, math.log(4) + 3.0, rtol=1e-14)


def test_composite_loss_perfect_decoder_leaves_power_term():
    c = encode_all(_qam16_system().encoder, 16, 1.0)
    idx = np.arange(16)
    one_hots = np.eye(16)[idx]
    probs = np.eye(16)[idx]
    lam = 2.0
    loss, parts = composite_loss(one_hots, probs, c, lam, RectennaParams())
    assert parts["ce_term"] == 0.0
    npt.assert_allclose(loss, lam / parts["p_del"], rtol=1e-15)
    npt.assert_allclose(parts["p_del"],
                        delivered_power_metric(c.symbols, RectennaParams()), rtol=1e-15)


def test_composite_loss_rejects_bad_one_hots():
    c = Constellation(np.exp(2j * math.pi * np.arange(4) / 4), 1.0)
    probs = np.full((2, 4), 0.25)
    with pytest.raises(ValueError):
        composite_loss(np.full((2, 4), 0.25), probs, c, 0.0, RectennaParams())


# --- end-to-end gradients ---------------------------------------------------

def test_system_gradients_match_finite_differences():
    # frozen mini-batch and noise; every encoder/decoder parameter
    rng = np.random.default_rng(2024)
    from swiptlearn.autoencoder import build_networks
    for _ in range(3):
        cfg = TrainConfig(m_messages=8, lam=1.0, seed=int(rng.integers(2**32)))
        enc, dec = build_networks(cfg, rng)
        idx = rng.integers(0, 8, size=48)
        noise = math.sqrt(cfg.noise_variance / 2) * rng.standard_normal((48, 2))
        _, _, grads = system_loss_and_gradients(enc, dec, cfg, idx, noise)
        params = enc.parameters() + dec.parameters()
        h = 1e-5
        for p, g in zip(params, grads):
            fp, fg = p.ravel(), g.ravel()
            for j in range(fp.size):
                keep = fp[j]
                fp[j] = keep + h
                up = system_loss(enc, dec, cfg, idx, noise)
                fp[j] = keep - h
                down = system_loss(enc, dec, cfg, idx, noise)
                fp[j] = keep
                fd = (up - down) / (2 * h)
                if abs(fg[j]) < 1e-8:
                    assert abs(fd - fg[j]) < 1e-8
                else:
                    npt.assert_allclose(fd, fg[j], rtol=1e-5)


# --- training ----------------------------------------------------------------

def test_train_deterministic():
    a = train(tiny_config(lam=0.5))
    b = train(tiny_config(lam=0.5))
    npt.assert_array_equal(a.constellation.points, b.constellation.points)
    assert a.final_loss == b.final_loss
    c = train(tiny_config(lam=0.5, seed=2))
    assert not np.array_equal(a.constellation.points, c.constellation.points)


def test_train_lambda_zero_ignores_rectenna():
    a = train(tiny_config(rectenna=RectennaParams()))
    b = train(tiny_config(rectenna=RectennaParams(eta=1.9, b_scale=3.0)))
    npt.assert_array_equal(a.constellation.points, b.constellation.points)


def test_train_constellation_meets_power_budget():
    s = train(tiny_config(avg_power=2.5))
    npt.assert_allclose(np.mean(np.abs(s.constellation.points) ** 2), 2.5, rtol=1e-12)


def test_train_loss_decreases():
    cfg = tiny_config(epochs=8, seed=4)
    s = train(cfg)
    # after 32 steps of M=4 the fit should beat uniform guessing
    assert s.final_loss < math.log(4)


# --- SER estimation -----------------------------------------------------------

def test_ser_zero_without_noise():
    system = _qam16_system(snr_db=math.inf)
    ser, hw = estimate_ser(system, 5000, np.random.default_rng(0))
    assert ser == 0.0 and hw == 0.0


def test_ser_random_guesser():
    # zero-weight decoder emits uniform probabilities; argmax ties resolve to
    # index 0, so the error rate is exactly P(message != 0) ~ 1 - 1/M
    encoder = _qam16_system().encoder
    decoder = Mlp([DenseLayer(np.zeros((16, 2)), np.zeros(16), "softmax")])
    cfg = TrainConfig(m_messages=16, snr_db=20.0)
    system = TrainedSystem(encoder, decoder, cfg, 0.0, encode_all(encoder, 16, 1.0))
    ser, hw = estimate_ser(system, 40000, np.random.default_rng(7))
    assert abs(ser - 15 / 16) <= 3 * hw


def test_ser_qam16_matches_q_function_oracle():
    # closed-form 16-QAM symbol error rate at 20 dB
    q = 0.5 * math.erfc(math.sqrt(10.0))
    per_dim = 1.5 * q
    want = 1 - (1 - per_dim) ** 2
    system = _qam16_system()
    n = 2_000_000
    ser, _ = estimate_ser(system, n, np.random.default_rng(11))
    se = math.sqrt(want * (1 - want) / n)
    assert abs(ser - want) <= 3 * se


def test_ser_monotone_in_snr():
    system = _qam16_system()
    rng = np.random.default_rng(3)
    sers = []
    hws = []
    for snr in (0.0, 10.0, 20.0):
        ser, hw = estimate_ser(system, 50000, rng, snr_db=snr)
        sers.append(ser)
        hws.append(hw)
    assert sers[0] + 3 * hws[0] > sers[1] > sers[2] - 3 * hws[2]
    assert sers[0] > sers[1] > sers[2]


def test_ser_input_validation():
    with pytest.raises(ValueError):
        estimate_ser(_qam16_system(), 0, np.random.default_rng(0))


# --- persistence ---------------------------------------------------------------

def test_manifest_round_trip():
    s = train(tiny_config(lam=0.25))
    doc = system_to_manifest(s, ser=0.125, ser_ci=0.003)
    text = json.dumps(doc)
    back = system_from_manifest(json.loads(text))
    npt.assert_array_equal(back.constellation.points, s.constellation.points)
    assert back.config == s.config
    assert back.final_loss == s.final_loss
    for la, lb in zip(s.decoder.layers, back.decoder.layers):
        npt.assert_array_equal(la.weights, lb.weights)


def test_manifest_version_check():
    s = train(tiny_config())
    doc = system_to_manifest(s)
    doc["format"] = "swiptlearn-system-v0"
    with pytest.raises(ValueError, match="format"):
        system_from_manifest(doc)


def test_constellation_csv_format_and_round_trip():
    c = Constellation(np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2), 1.0)
    text = constellation_to_csv(c)
    lines = text.splitlines()
    assert lines[0] == "index,re,im"
    assert lines[1] == "0,0.70710678118654746,0.70710678118654746"
    assert len(lines) == 5
    back = constellation_from_csv(text)
    npt.assert_array_equal(back, c.points[:, 0])


def test_constellation_csv_parse_errors():
    with pytest.raises(ValueError, match="row 1"):
        constellation_from_csv("a,b\n")
    with pytest.raises(ValueError, match="row 3"):
        constellation_from_csv("index,re,im\n0,1.0,2.0\n1,x,0\n")
    with pytest.raises(ValueError, match="row 2"):
        constellation_from_csv("index,re,im\n0,1.0\n")
