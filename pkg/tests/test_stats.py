import numpy as np
import pytest

from photonsub import (
    AbsorberParams,
    DetectorConfig,
    PulseSpec,
    g2_matrix,
    mandel_q,
    photon_deficit,
    pulse_shape,
    q_over_mean,
    run_ensemble,
    run_point,
    sem,
    substream,
)
from photonsub.detector import ClickRecord
from photonsub.stats import (
    hist_mean,
    hist_mean_sem,
    mandel_q_sem,
    q_over_mean_sem,
)

MEASURED = AbsorberParams()
DET = DetectorConfig()


def test_mandel_q_of_deterministic_counts():
    hist = np.array([0, 1000])  # every shot has exactly one count
    assert mandel_q(hist) == pytest.approx(-1.0, abs=1e-12)


def test_mandel_q_of_poisson_samples():
    rng = substream(1, 0)
    hist = np.bincount(rng.poisson(3.7, size=100000))
    assert abs(mandel_q(hist)) < 3 * mandel_q_sem(hist)


def test_mandel_q_of_bernoulli_population():
    # exact-proportion histogram: the population value is -p
    n = 10**8
    p = 0.29
    hist = np.array([n * (1 - p), n * p])
    assert mandel_q(hist) == pytest.approx(-p, abs=1e-6)
    assert q_over_mean(hist) == pytest.approx(-1.0, abs=1e-6)


def test_mandel_q_rejects_zero_mean():
    with pytest.raises(ValueError):
        mandel_q(np.array([100]))
    with pytest.raises(ValueError):
        q_over_mean(np.array([100, 0]))


def test_q_over_mean_of_bernoulli_samples():
    rng = substream(2, 0)
    hist = np.bincount(rng.binomial(1, 0.35, size=50000), minlength=2)
    assert abs(q_over_mean(hist) + 1.0) < 3 * q_over_mean_sem(hist) + 1e-4


def test_hist_mean_helpers():
    hist = np.array([10, 30, 60])
    assert hist_mean(hist) == pytest.approx(1.5)
    assert hist_mean_sem(hist) > 0


def test_sem_reference_values():
    assert sem([4.0, 4.0, 4.0]) == 0.0
    assert sem([0.0, 2.0]) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        sem([1.0])


def test_sem_scaling_with_sample_size():
    rng = substream(3, 0)
    small = sem(rng.standard_normal(5000))
    large = sem(rng.standard_normal(20000))
    assert small / large == pytest.approx(2.0, rel=0.15)


# ---------------------------------------------------------------------------
# g2 estimation

def test_duplicated_stream_matches_brute_force():
    rng = substream(4, 0)
    shots = [rng.poisson(2.0, size=4) for _ in range(10)]
    records = [ClickRecord(detectors=np.stack([s, s, np.zeros(4, np.int64), np.zeros(4, np.int64)])) for s in shots]
    mat = g2_matrix(records, bin_width_us=0.05, cell_edges=np.arange(5))
    data = np.stack(shots).astype(float)
    marg = data.mean(axis=0)
    expected = np.full((4, 4), np.nan)
    for i in range(4):
        for j in range(4):
            if marg[i] > 0 and marg[j] > 0:
                expected[i, j] = (data[:, i] * data[:, j]).mean() / (marg[i] * marg[j])
    np.testing.assert_allclose(mat.values, expected, rtol=1e-12)
    # autocorrelation of a duplicated stream carries the full variance:
    # g2(t, t) = 1 + Var/mean^2 with the population variance
    for i in range(4):
        if marg[i] > 0:
            var = data[:, i].var()
            assert mat.values[i, i] == pytest.approx(1.0 + var / marg[i] ** 2, rel=1e-12)


def test_g2_undefined_cells_are_nan():
    records = [
        ClickRecord(detectors=np.array([[1, 0], [1, 0], [0, 0], [0, 0]], dtype=np.int64))
        for _ in range(5)
    ]
    mat = g2_matrix(records, bin_width_us=0.05, cell_edges=np.arange(3))
    assert np.isfinite(mat.values[0, 0])
    assert np.isnan(mat.values[1, 1])


def test_g2_of_coherent_light_is_flat():
    spec = PulseSpec(mean_photons=15.76)
    transparent = AbsorberParams(p_ryd=0.0, p_ryd2=0.0, t=1.0)
    ens = run_point(spec, transparent, DET, 30000, 5, collect_g2=True)
    mat = ens.g2.finalize()
    finite = np.isfinite(mat.values)
    z = np.abs(mat.values[finite] - 1.0) / mat.sigma[finite]
    assert z.max() < 4.5
    assert abs(mat.front_g2 - 1.0) < 3 * mat.front_sigma
    assert abs(mat.rear_g2 - 1.0) < 3 * mat.rear_sigma


def test_g2_rejects_empty_ensemble():
    with pytest.raises(ValueError):
        g2_matrix([], bin_width_us=0.05)


def test_g2_rejects_single_detector():
    from photonsub.stats import G2Accumulator

    with pytest.raises(ValueError):
        G2Accumulator(n_bins=4, bin_width_us=0.05, n_det=1)


# ---------------------------------------------------------------------------
# pulse shapes and deficits

def test_transparent_medium_pulse_shape():
    spec = PulseSpec(mean_photons=12.0)
    params = AbsorberParams(p_ryd=0.0, p_ryd2=0.0, t=0.9)
    ens = run_ensemble(params, spec, 20000, 6)
    shape = pulse_shape(ens)
    ok = np.isfinite(shape.transmission)
    z = np.abs(shape.transmission[ok] - 0.9) / shape.transmission_sem[ok]
    assert z.max() < 4.5
    assert shape.band_transmission(0.0, 1.0) == pytest.approx(0.9, abs=0.01)


def test_pulse_shape_never_shows_gain():
    ens = run_ensemble(MEASURED, PulseSpec(mean_photons=15.76), 20000, 7)
    shape = pulse_shape(ens)
    ok = np.isfinite(shape.transmission)
    assert (shape.transmission[ok] <= MEASURED.t + 3 * shape.transmission_sem[ok]).all()


def test_photon_deficit_of_linear_medium_is_zero():
    params = AbsorberParams(p_ryd=0.0, p_ryd2=0.0, t=0.99)
    ens = run_ensemble(params, PulseSpec(mean_photons=10.0), 20000, 8)
    deficit, err = photon_deficit(ens, params.t)
    assert abs(deficit) < 3 * err


def test_photon_deficit_saturates_at_one_photon():
    params = AbsorberParams(p_ryd=0.35, p_ryd2=0.0, t=0.99)
    ens = run_ensemble(params, PulseSpec(mean_photons=20.0), 20000, 10)
    deficit, err = photon_deficit(ens, params.t)
    assert abs(deficit - (1.0 - np.exp(-0.99 * 20.0 * 0.35))) < 3 * err


def test_photon_deficit_network_bounds():
    ens = run_ensemble(MEASURED, PulseSpec(mean_photons=20.0), 20000, 9)
    deficit, err = photon_deficit(ens, MEASURED.t)
    second = ens.absorbed_hist[2] / ens.shots
    assert -3 * err <= deficit <= 1.0 + 2.0 * second + 3 * err
