"""Sweep driver: configuration, persistence, determinism, stopping, op counts."""

import json

import numpy as np
import pytest

from chemp import (
    BerCurve,
    BerPoint,
    JointConfig,
    MpdConfig,
    SimConfig,
    build_sweep_code,
    config_hash,
    count_operations,
    regular_profile,
    resolve_profile,
    run_coded_sweep,
    run_uncoded_sweep,
)
from chemp.ldpc import TABLE_PROFILES


def tiny_cfg(**over):
    base = dict(n_antennas=8, n_users=4, snr_db=(6.0,), receiver="mpd",
                seed=42, target_errors=20, max_trials=400, batch_size=50)
    base.update(over)
    return SimConfig(**base)


# ---------------------------------------------------------------------------
# configuration


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_cfg(n_antennas=4, n_users=8)         # overloaded
    with pytest.raises(ValueError):
        tiny_cfg(receiver="zf")                    # unknown receiver
    with pytest.raises(ValueError):
        tiny_cfg(csi="genie")                      # unknown csi mode
    with pytest.raises(ValueError):
        tiny_cfg(receiver="joint")                 # coded without code_spec
    with pytest.raises(ValueError):
        tiny_cfg(receiver="map-oracle", n_antennas=32, n_users=9)
    with pytest.raises(ValueError):
        tiny_cfg(receiver="chemp-estimated", frame_length=4)  # no data uses


def test_config_hash_stability_and_sensitivity():
    a = config_hash(tiny_cfg())
    b = config_hash(tiny_cfg())
    c = config_hash(tiny_cfg(seed=43))
    assert a == b
    assert a != c
    assert len(a) == 16
    int(a, 16)  # hex


def test_config_hash_covers_nested_configs():
    a = config_hash(tiny_cfg())
    b = config_hash(tiny_cfg(mpd=MpdConfig(damping=0.5)))
    assert a != b


# ---------------------------------------------------------------------------
# persistence


def test_curve_round_trip(tmp_path):
    points = [BerPoint(snr_db=8.0, bits=1000, errors=13, ber=0.013,
                       ci_halfwidth=0.002, trials=125)]
    curve = BerCurve(receiver="mpd", points=points, provenance={"seed": 1})
    jpath = tmp_path / "curve.json"
    curve.to_json(str(jpath))
    back = BerCurve.from_json(str(jpath))
    assert back.receiver == curve.receiver
    assert back.provenance == curve.provenance
    assert back.points[0] == points[0]


def test_curve_csv_format(tmp_path):
    points = [BerPoint(snr_db=8.0, bits=1000, errors=13, ber=0.013,
                       ci_halfwidth=0.002, trials=125)]
    curve = BerCurve(receiver="mpd", points=points, provenance={})
    cpath = tmp_path / "curve.csv"
    curve.to_csv(str(cpath))
    lines = cpath.read_text().strip().split("\n")
    assert lines[0] == "snr_db,bits,errors,ber,ci_halfwidth"
    fields = lines[1].split(",")
    assert float(fields[0]) == 8.0
    assert int(fields[1]) == 1000
    assert int(fields[2]) == 13


# ---------------------------------------------------------------------------
# uncoded sweeps


def test_uncoded_sweep_accounting():
    curve = run_uncoded_sweep(tiny_cfg())
    assert len(curve.points) == 1
    p = curve.points[0]
    assert p.bits == 8 * p.trials
    assert p.ber == pytest.approx(p.errors / p.bits)
    assert p.errors >= 20 or p.trials == 400
    assert p.ci_halfwidth > 0
    assert curve.provenance["config_hash"] == config_hash(tiny_cfg())


def test_uncoded_sweep_deterministic_same_seed():
    a = run_uncoded_sweep(tiny_cfg())
    b = run_uncoded_sweep(tiny_cfg())
    assert a.points == b.points


def test_uncoded_sweep_worker_count_invariance():
    a = run_uncoded_sweep(tiny_cfg(), workers=1)
    b = run_uncoded_sweep(tiny_cfg(), workers=3)
    assert a.points == b.points


def test_uncoded_sweep_seed_changes_results():
    a = run_uncoded_sweep(tiny_cfg())
    b = run_uncoded_sweep(tiny_cfg(seed=43))
    assert a.points != b.points


def test_snr_ordering_of_ber():
    cfg = tiny_cfg(snr_db=(0.0, 12.0), target_errors=60, max_trials=2000)
    curve = run_uncoded_sweep(cfg)
    assert curve.points[0].ber > curve.points[1].ber


def test_estimated_csi_receivers_run():
    for receiver in ("chemp-estimated", "mmse-estimated"):
        cfg = tiny_cfg(receiver=receiver, frame_length=12,
                       target_errors=10, max_trials=60)
        curve = run_uncoded_sweep(cfg)
        p = curve.points[0]
        # 12 - 4 data uses per frame, 8 bits per use
        assert p.bits == p.trials * 8 * 8
        assert 0 <= p.errors <= p.bits
        assert p.ber <= 1.0


def test_estimated_csi_approaches_perfect_csi_at_high_snr():
    # with near-noiseless pilots and data, both estimated receivers must
    # recover everything, which pins the per-use broadcasting of the
    # estimated channel against the data block
    for receiver in ("chemp-estimated", "mmse-estimated"):
        cfg = tiny_cfg(receiver=receiver, snr_db=(40.0,), frame_length=12,
                       target_errors=10**6, max_trials=40)
        p = run_uncoded_sweep(cfg).points[0]
        assert p.errors == 0, receiver


def test_map_oracle_receiver_runs():
    cfg = tiny_cfg(receiver="map-oracle", target_errors=10, max_trials=100)
    p = run_uncoded_sweep(cfg).points[0]
    assert p.bits == p.trials * 8


def test_mpd_not_worse_than_mmse_on_shared_draws():
    # shared seeds, light sanity version of the detector ordering claim
    kw = dict(n_antennas=32, n_users=8, snr_db=(8.0,), seed=7,
              target_errors=80, max_trials=3000, batch_size=200)
    mpd = run_uncoded_sweep(SimConfig(receiver="mpd", **kw)).points[0]
    mmse = run_uncoded_sweep(SimConfig(receiver="mmse", **kw)).points[0]
    assert mpd.ber <= mmse.ber * 1.05


# ---------------------------------------------------------------------------
# coded sweeps


def coded_cfg(**over):
    base = dict(n_antennas=8, n_users=8, snr_db=(7.0,), receiver="joint",
                code_spec="regular-3-6", block_length=64, seed=3,
                target_errors=50, max_trials=30, batch_size=10,
                joint=JointConfig(outer_iterations=6))
    base.update(over)
    return SimConfig(**base)


def test_coded_sweep_accounting():
    cfg = coded_cfg()
    curve = run_coded_sweep(cfg)
    p = curve.points[0]
    code = build_sweep_code(cfg)
    assert p.frames == p.trials
    assert p.bits == p.frames * 8 * code.k
    assert p.fer == pytest.approx(p.frame_errors / p.frames)
    assert curve.provenance["code"]["n"] == 64


def test_coded_sweep_worker_invariance_and_receivers():
    a = run_coded_sweep(coded_cfg(), workers=1)
    b = run_coded_sweep(coded_cfg(), workers=2)
    assert a.points == b.points
    sep = run_coded_sweep(coded_cfg(receiver="separate"))
    assert sep.points[0].bits == a.points[0].bits


def test_coded_sweep_estimated_csi_runs():
    curve = run_coded_sweep(coded_cfg(csi="estimated", max_trials=10))
    assert curve.points[0].frames == 10


def test_build_sweep_code_deterministic():
    a = build_sweep_code(coded_cfg())
    b = build_sweep_code(coded_cfg())
    np.testing.assert_array_equal(a.parity_check.toarray(),
                                  b.parity_check.toarray())


def test_resolve_profile():
    p = resolve_profile("regular-3-6")
    assert p.variable_degrees == ((3, 1.0),)
    assert resolve_profile("n128-alpha1") is TABLE_PROFILES["n128-alpha1"]
    q = resolve_profile("regular-4-8")
    assert q.rate == pytest.approx(0.5)
    with pytest.raises((KeyError, ValueError)):
        resolve_profile("fancy-code")


# ---------------------------------------------------------------------------
# operation counts


def test_count_operations_zero_iterations_is_frontend_only():
    c = count_operations("mpd", 64, 32, iterations=0)
    n, k = 64, 32
    assert c.total == 4 * n * k ** 2 + 4 * n * k + 8 * n * k
    assert c.total == sum(c.breakdown.values())


def test_count_operations_grows_with_iterations():
    a = count_operations("mpd", 64, 32, iterations=5)
    b = count_operations("mpd", 64, 32, iterations=20)
    assert b.total > a.total > count_operations("mpd", 64, 32, 0).total


def test_count_operations_model_documented():
    c = count_operations("mmse", 128, 64)
    assert c.total == sum(c.breakdown.values())
    assert c.model  # human-readable formulas present
    with pytest.raises(ValueError):
        count_operations("map-oracle", 8, 4)


def test_detector_cheaper_than_linear_baseline():
    for k in (64, 96, 128):
        mpd = count_operations("mpd", 128, k, iterations=20).total
        mmse = count_operations("mmse", 128, k).total
        assert mpd < mmse, k
