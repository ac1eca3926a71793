import numpy as np
import pytest
from hypothesis import given, strategies as st

from ergotwin.emgproc import N_MUSCLES
from ergotwin.musclesim import (DEFAULT_BASELINE, DEFAULT_FATIGUE_BETA,
                                DEFAULT_SYNERGY, EmgSynthesizer, FatigueState,
                                SynergyMatrix, activation_envelope,
                                fatigue_update, synth_emg, torque_channels)


def test_synergy_validation():
    with pytest.raises(ValueError):
        SynergyMatrix(weights=np.ones((5, 4)))
    with pytest.raises(ValueError):
        SynergyMatrix(baseline=-np.ones(N_MUSCLES))
    bad = DEFAULT_SYNERGY.copy()
    bad[0, 0] = -0.1
    with pytest.raises(ValueError):
        SynergyMatrix(weights=bad)
    dead_muscle = DEFAULT_SYNERGY.copy()
    dead_muscle[0] = 0.0
    with pytest.raises(ValueError):
        SynergyMatrix(weights=dead_muscle)
    dead_channel = DEFAULT_SYNERGY.copy()
    dead_channel[:, 1] = 0.0
    with pytest.raises(ValueError):
        SynergyMatrix(weights=dead_channel)


def test_default_synergy_has_phasic_and_tonic_groups():
    # movers: strong single-channel coupling, little resting tone;
    # stabilizers: weak coupling, high tone.  The contrast is what makes
    # overall effort level visible after sum-normalization.
    syn = SynergyMatrix()
    mover_gain = syn.weights[:4].max(axis=1)
    stabilizer_gain = syn.weights[4:].max(axis=1)
    assert mover_gain.min() > stabilizer_gain.max()
    assert syn.baseline[4:].min() > syn.baseline[:4].max()


def test_torque_channels_signs():
    np.testing.assert_array_equal(torque_channels(np.array([1.5, -2.0])),
                                  [1.5, 0.0, 0.0, 2.0])
    np.testing.assert_array_equal(torque_channels(np.array([-0.5, 0.25])),
                                  [0.0, 0.5, 0.25, 0.0])
    np.testing.assert_array_equal(torque_channels(np.zeros(2)), np.zeros(4))


def test_activation_envelope_worked_example():
    syn = SynergyMatrix()
    fat = FatigueState(np.zeros(N_MUSCLES))
    env = activation_envelope(syn, np.array([1.0, -2.0]), fat)
    expected = DEFAULT_SYNERGY @ np.array([1.0, 0.0, 0.0, 2.0]) + DEFAULT_BASELINE
    np.testing.assert_allclose(env, expected)


@given(st.floats(-10.0, 10.0), st.floats(-10.0, 10.0))
def test_envelope_nonnegative_for_any_torque(t1, t2):
    env = activation_envelope(SynergyMatrix(), np.array([t1, t2]),
                              FatigueState())
    assert np.all(env >= 0.0)


def test_fatigue_state_validation_and_multiplier():
    fat = FatigueState()
    np.testing.assert_array_equal(fat.multiplier, np.ones(N_MUSCLES))
    scalar = FatigueState(2e-3)
    np.testing.assert_array_equal(scalar.beta, np.full(N_MUSCLES, 2e-3))
    with pytest.raises(ValueError):
        FatigueState(-1e-3)
    with pytest.raises(ValueError):
        FatigueState(np.ones(4))


def test_fatigue_accumulation_integrates_envelope():
    fat = FatigueState(np.full(N_MUSCLES, 1e-2))
    env = np.linspace(0.1, 0.6, N_MUSCLES)
    for _ in range(100):
        fatigue_update(fat, env, 0.01)
    np.testing.assert_allclose(fat.accumulated_effort, env, atol=1e-12)
    np.testing.assert_allclose(fat.multiplier, 1.0 + 1e-2 * env)
    with pytest.raises(ValueError):
        fatigue_update(fat, env, -0.1)
    with pytest.raises(ValueError):
        fatigue_update(fat, -env, 0.1)


def test_default_beta_fatigues_movers_faster_than_stabilizers():
    assert DEFAULT_FATIGUE_BETA[:4].min() > DEFAULT_FATIGUE_BETA[4:].max()


def test_synthesizer_is_seed_deterministic():
    env = np.full(N_MUSCLES, 0.4)
    a = EmgSynthesizer(seed=12).synth_emg(env, 500)
    b = EmgSynthesizer(seed=12).synth_emg(env, 500)
    c = EmgSynthesizer(seed=13).synth_emg(env, 500)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    one_shot = synth_emg(env, 12, 500)
    np.testing.assert_array_equal(one_shot, a)


def test_synthesizer_envelope_scales_rms():
    env = np.full(N_MUSCLES, 0.5)
    raw = EmgSynthesizer(seed=2, noise_floor=0.0).synth_emg(env, 120000)
    steady = raw[2000:]
    np.testing.assert_allclose(steady.std(axis=0), 0.5, rtol=0.04)


def test_synthesizer_noise_floor_sets_quiet_level():
    raw = EmgSynthesizer(seed=2, noise_floor=0.02).synth_emg(
        np.zeros(N_MUSCLES), 50000)
    np.testing.assert_allclose(raw.std(axis=0), 0.02, rtol=0.05)


def test_synthesizer_accepts_per_sample_envelope():
    env = np.zeros((400, N_MUSCLES))
    env[200:] = 1.0
    raw = EmgSynthesizer(seed=1, noise_floor=0.0).synth_emg(env, 400)
    assert np.all(raw[:200] == 0.0)
    assert np.any(raw[200:] != 0.0)


def test_synthesizer_input_validation():
    synth = EmgSynthesizer(seed=0)
    with pytest.raises(ValueError):
        synth.synth_emg(np.zeros((10, N_MUSCLES)), 20)
    with pytest.raises(ValueError):
        synth.synth_emg(-np.ones(N_MUSCLES), 20)
