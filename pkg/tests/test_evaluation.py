import numpy as np
import pytest

from binae import evaluation
from binae.analysis import decoder_agreement
from binae.classic import Codebook, exact_bler_perfect74, exact_bler_uncoded, hamming74_codebook, ml_decode_batch
from binae.errors import ConfigError, FormatError
from binae.evaluation import (
    BlerCurve,
    EvalConfig,
    aligned_neural_decoder,
    compare_curves,
    ml_decoder,
    pairing_sources,
    parse_grid,
    run_bler,
    standard_error,
)

HAM = hamming74_codebook()


def test_hamming_ml_matches_closed_form():
    cfg = EvalConfig(trials_per_p=200_000, seed=11)
    curve = run_bler(cfg, HAM, ml_decoder(HAM))
    for pt in curve.points:
        assert abs(pt.bler - exact_bler_perfect74(pt.p)) <= 4 * pt.se, pt


def test_uncoded_matches_closed_form():
    bits = np.array([[(m >> (3 - j)) & 1 for j in range(4)] for m in range(16)])
    unc = Codebook(4, 4, 1.0 - 2.0 * bits)
    curve = run_bler(EvalConfig(p_grid=(0.05,), trials_per_p=200_000), unc, ml_decoder(unc))
    pt = curve.points[0]
    assert abs(pt.bler - exact_bler_uncoded(0.05, n=4)) <= 4 * pt.se


def test_chunking_does_not_change_results():
    cfg = EvalConfig(p_grid=(0.07,), trials_per_p=30_000, seed=2)
    a = run_bler(cfg, HAM, ml_decoder(HAM))
    calls = []

    def counting(y):
        calls.append(len(y))
        return ml_decode_batch(y, HAM)

    b = run_bler(cfg, HAM, counting, chunk=7_000)
    assert a.points[0] == b.points[0]
    # the decoder is tabulated once over all 128 received words
    assert calls == [128]


def test_deterministic_and_seed_sensitive():
    cfg = EvalConfig(p_grid=(0.05, 0.1), trials_per_p=20_000, seed=5)
    a = run_bler(cfg, HAM, ml_decoder(HAM))
    assert a.to_csv() == run_bler(cfg, HAM, ml_decoder(HAM)).to_csv()
    other = run_bler(EvalConfig(p_grid=(0.05, 0.1), trials_per_p=20_000, seed=6), HAM, ml_decoder(HAM))
    assert a.to_csv() != other.to_csv()
    # a point's value does not depend on the rest of the grid
    solo = run_bler(EvalConfig(p_grid=(0.05,), trials_per_p=20_000, seed=5), HAM, ml_decoder(HAM))
    assert solo.points[0] == a.points[0]


def test_noiseless_channel():
    curve = run_bler(EvalConfig(p_grid=(0.0,), trials_per_p=5_000), HAM, ml_decoder(HAM))
    assert curve.points[0].errors == 0 and curve.points[0].se == 0.0


def test_standard_error():
    assert standard_error(0.1, 10 ** 6) == pytest.approx(3e-4)
    assert standard_error(0.0, 10) == 0.0


def test_compare_self_and_uncoded():
    cfg = EvalConfig(p_grid=(0.05, 0.1), trials_per_p=50_000)
    ham = run_bler(cfg, HAM, ml_decoder(HAM))
    same = compare_curves(ham, ham)
    assert same.equivalent and same.max_abs_z == 0.0
    # message bits plus copies of three of them: bit 3 is unprotected, d_min = 1
    unc = Codebook(4, 7, HAM.words[:, [0, 1, 2, 3, 0, 1, 2]])
    worse = run_bler(cfg, unc, ml_decoder(unc))
    cmp = compare_curves(worse, ham)
    assert not cmp.equivalent and cmp.max_abs_z > 4
    with pytest.raises(ValueError):
        compare_curves(ham, run_bler(EvalConfig(p_grid=(0.05,), trials_per_p=100), HAM, ml_decoder(HAM)))


def test_curve_csv_roundtrip():
    curve = run_bler(EvalConfig(p_grid=(0.03, 0.09), trials_per_p=5_000), HAM, ml_decoder(HAM))
    text = curve.to_csv()
    assert text.splitlines()[0] == "p,bler,se,trials,errors"
    back = BlerCurve.from_csv(text, "hamming-ml")
    assert back.points == curve.points
    with pytest.raises(FormatError):
        BlerCurve.from_csv("a,b\n1,2\n")
    with pytest.raises(FormatError):
        BlerCurve.from_csv("p,bler,se,trials,errors\n0.1,x,0,1,0\n")


def test_parse_grid():
    assert parse_grid("0.01:0.1:0.01") == evaluation.DEFAULT_GRID
    assert parse_grid("0.02, 0.08") == (0.02, 0.08)
    for bad in ("0.1:0.01:0.01", "a,b", "0:1:0"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_eval_config_validation():
    with pytest.raises(ConfigError):
        EvalConfig(pairing="ae-bogus").validate()
    with pytest.raises(ConfigError):
        EvalConfig(p_grid=(1.5,)).validate()
    with pytest.raises(ConfigError):
        pairing_sources("ae-ml")


def test_aligned_decoder_reproduces_ml(rng, monkeypatch):
    # a learned code that is a scrambled copy of Hamming, decoded by an ML "network"
    t = np.where(rng.random(7) < 0.5, -1.0, 1.0)
    cols = rng.permutation(7)
    learned = Codebook(4, 7, (HAM.words[rng.permutation(16)] * t)[:, cols])
    monkeypatch.setattr(evaluation, "decode_decisions", lambda params, y: ml_decode_batch(y, learned))
    dec = aligned_neural_decoder(object(), learned)
    agreement = decoder_agreement(HAM, dec)
    assert agreement.fraction == 1.0
    assert np.array_equal(dec(HAM.words), np.arange(16))


def test_aligned_decoder_rejects_non_equivalent():
    w = HAM.words.copy()
    w[2] = w[1]
    with pytest.raises(ValueError):
        aligned_neural_decoder(object(), Codebook(4, 7, w))
