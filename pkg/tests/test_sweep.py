import math

import numpy as np
import pytest

from onfcavity import (CouplingRegime, GratingDesign, SweepRow, find_critical_coupling,
                       linewidth_metrics, on_resonance_reflectivity, sweep_input_slats,
                       sweep_output_slats, tuning_scan)
from onfcavity.errors import InsufficientData, InvalidRange, TuningOutOfRange


@pytest.fixture(scope="module")
def input_sweep(reference_design):
    return sweep_input_slats(reference_design, 70, 240, 10, "x", workers=4)


@pytest.fixture(scope="module")
def output_sweep(reference_design):
    return sweep_output_slats(reference_design, 150, 400, 10, "x", workers=4)


def _regime_sequence(rows):
    labels = [r.regime for r in rows]
    return [labels[0]] + [b for a, b in zip(labels, labels[1:]) if b != a]


class TestInputSweep:
    def test_rows_ordered_and_fitted(self, input_sweep):
        assert [r.n_in for r in input_sweep] == list(range(70, 250, 10))
        assert all(r.n_out == 270 and r.fit_converged for r in input_sweep)

    def test_kappa_non_increasing(self, input_sweep):
        kappa = np.array([r.kappa for r in input_sweep])
        assert np.all(np.diff(kappa) <= 0)

    def test_single_interior_r0_minimum(self, input_sweep):
        r0 = np.array([r.r0 for r in input_sweep])
        turn = int(np.argmin(r0))
        assert 0 < turn < len(r0) - 1
        assert np.all(np.diff(r0[:turn + 1]) < 0) and np.all(np.diff(r0[turn:]) > 0)

    def test_regime_sequence(self, input_sweep):
        assert _regime_sequence(input_sweep) == [CouplingRegime.OVER, CouplingRegime.CRITICAL,
                                                 CouplingRegime.UNDER]

    def test_linewidth_identity(self, input_sweep):
        for r in input_sweep:
            kappa, q = linewidth_metrics(r.lambda0, r.delta_lambda)
            assert r.kappa == pytest.approx(kappa, rel=1e-9)
            assert r.q == pytest.approx(q, rel=1e-9)

    def test_critical_point(self, input_sweep):
        best = find_critical_coupling(input_sweep)
        assert best.regime is CouplingRegime.CRITICAL
        assert input_sweep[best.index].n_in == best.n_in

    def test_parallel_equals_sequential(self, reference_design, input_sweep):
        sequential = sweep_input_slats(reference_design, 70, 240, 10, "x", workers=1)
        assert sequential == input_sweep

    def test_rerun_is_bit_identical(self, reference_design):
        a = sweep_input_slats(reference_design, 100, 140, 20)
        b = sweep_input_slats(reference_design, 100, 140, 20)
        assert a == b


class TestOutputSweep:
    def test_kappa_non_increasing_and_saturating(self, output_sweep):
        kappa = np.array([r.kappa for r in output_sweep])
        steps = -np.diff(kappa)
        assert np.all(steps >= 0)
        assert steps[-5:].sum() < 0.1 * steps[:5].sum()

    def test_one_sided_at_large_output_mirror(self, reference_design):
        rows = sweep_output_slats(reference_design, 420, 460, 20)
        assert all(r.t0 < 0.01 for r in rows)

    def test_transmission_leak_shrinks(self, output_sweep):
        t0 = np.array([r.t0 for r in output_sweep])
        assert np.all(np.diff(t0) < 0)


class TestRanges:
    def test_step_beyond_range(self, reference_design):
        rows = sweep_input_slats(reference_design, 150, 155, 10)
        assert [r.n_in for r in rows] == [150]

    @pytest.mark.parametrize("args", [(150, 160, 0), (200, 100, 10), (150, 160, -5)])
    def test_invalid(self, reference_design, args):
        with pytest.raises(InvalidRange):
            sweep_input_slats(reference_design, *args)
        with pytest.raises(InvalidRange):
            sweep_output_slats(reference_design, *args)


def test_lossless_sweep_never_critical():
    rows = sweep_input_slats(GratingDesign(n_out_slats=270, slat_loss=0.0), 70, 240, 10)
    assert all(r.regime is not CouplingRegime.CRITICAL for r in rows)


def _row(n_in, kappa, r0):
    return SweepRow(n_in, 270, "x", 0.0, 640.0, math.nan, r0, kappa, math.nan, None, True)


class TestFindCritical:
    def test_reflectivity_generator(self):
        kappa = np.linspace(600, 130, 48)
        rows = [_row(70 + 10 * i, k, on_resonance_reflectivity(k, 120.0))
                for i, k in enumerate(kappa)]
        best = find_critical_coupling(rows)
        assert best.kappa == kappa[np.argmin(np.abs(kappa - 240))]

    def test_monotone_returns_endpoint(self):
        kappa = np.linspace(600, 300, 10)
        rows = [_row(70 + 10 * i, k, on_resonance_reflectivity(k, 50.0))
                for i, k in enumerate(kappa)]
        best = find_critical_coupling(rows)
        assert best.index == len(rows) - 1
        assert best.regime is not CouplingRegime.CRITICAL

    def test_ties_prefer_more_slats(self):
        rows = [_row(100, 300, 0.2), _row(110, 250, 0.1), _row(120, 200, 0.1)]
        assert find_critical_coupling(rows).n_in == 120

    def test_failed_rows_ignored(self):
        rows = [_row(100, 300, 0.2), _row(110, 250, 0.1),
                SweepRow(120, 270, "x", 0.0, *[math.nan] * 5, None, False)]
        with pytest.raises(InsufficientData):
            find_critical_coupling(rows)

    def test_two_rows(self):
        with pytest.raises(InsufficientData):
            find_critical_coupling([_row(100, 300, 0.2), _row(110, 250, 0.1)])


class TestTuning:
    def test_chirp_free_identical(self):
        rows = tuning_scan(GratingDesign(chirp_rate=0.0), [-200, 0, 200])
        assert rows[0].lambda0 == rows[1].lambda0 == rows[2].lambda0

    def test_span_matches_bragg_shift(self):
        design = GratingDesign()
        positions = np.linspace(-250, 250, 11)
        rows = tuning_scan(design, positions, workers=4)
        lam0 = np.array([r.lambda0 for r in rows])
        assert np.all(np.diff(lam0) > 0)
        period_span = design.chirp_rate * design.grating_length
        expected = 2 * design.mean_index() * period_span
        assert lam0.max() - lam0.min() == pytest.approx(expected, rel=0.15)

    def test_out_of_range(self):
        with pytest.raises(TuningOutOfRange):
            tuning_scan(GratingDesign(), [0, 300])
        with pytest.raises(InvalidRange):
            tuning_scan(GratingDesign(), [])
