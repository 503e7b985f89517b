from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from hiddenqj.errors import DegenerateSteadyStateError, ImpossibleTrajectoryError
from hiddenqj.linops import unvec, vec
from hiddenqj.model import DemonParams, build_demon_model, liouville_generators
from hiddenqj.unravel import (
    SERIES_COLUMNS,
    JumpEvent,
    Trajectory,
    TrajectorySampler,
    VisibleTrajectory,
    as_visible,
    conditioned_state_series,
    ensemble_populations,
    hidden_env_entropy,
    parse_trajectory_spec,
    sample_trajectory,
    steady_state,
    steady_state_density,
    visible_filter,
)

from helpers import FIG1_SPEC


def two_level_excited(down: float, up: float) -> float:
    return up / (up + down)


class TestTrajectory:
    def test_tuple_events_are_converted(self):
        t = Trajectory(0, ((4, 0.9), (1, 1.5)), 3, 3.0)
        assert t.events[0] == JumpEvent(4, 0.9)
        assert t.jump_ids == (4, 1)
        assert t.times == (0.9, 1.5)

    @pytest.mark.parametrize("events", [((4, 3.5),), ((4, 0.0),), ((4, 1.0), (1, 1.0)), ((4, 2.0), (1, 1.0))])
    def test_invalid_times(self, events):
        with pytest.raises(ValueError):
            Trajectory(0, events, 0, 3.0)

    def test_shifted(self):
        t = VisibleTrajectory(0, ((4, 0.9), (1, 1.5)), 3, 3.0).shifted(0.5)
        assert isinstance(t, VisibleTrajectory)
        assert_allclose(t.times, (1.4, 2.0))
        with pytest.raises(ValueError):
            t.shifted(1.0)


class TestSteadyState:
    def test_product_form_at_full_suppression(self):
        p = DemonParams(gamma_x=1.0, gamma_y=1.0)
        g = {k: v**2 for k, v in p.rates().items()}
        px = two_level_excited(g[1] + g[3], g[2] + g[4])
        py = two_level_excited(g[5] + g[7], g[6] + g[8])
        expected = np.kron([1 - px, px], [1 - py, py])
        assert_allclose(steady_state(build_demon_model(p)), expected, atol=1e-12)

    def test_infinite_temperature(self):
        m = build_demon_model(beta_x_hot=1e-6, beta_x_cold=1e-6, beta_y_hot=1e-6, beta_y_cold=1e-6)
        assert_allclose(steady_state(m), 0.25, atol=1e-4)

    def test_matches_long_time_propagation(self):
        m = build_demon_model()
        g = liouville_generators(m).G_full
        rho = unvec(scipy.linalg.expm(50 * g) @ vec(np.diag([1.0, 0, 0, 0])), 4)
        assert_allclose(steady_state(m), np.diag(rho).real, atol=1e-8)

    def test_normalised_and_diagonal(self, demon):
        ss = steady_state_density(demon)
        assert_allclose(ss.probabilities.sum(), 1.0, atol=1e-12)
        assert ss.probabilities.min() >= 0
        assert ss.max_offdiag < 1e-12
        assert ss.gap > 1e6

    def test_coherent_coupling_reports_offdiagonal(self):
        ss = steady_state_density(build_demon_model(lam=0.1))
        assert ss.max_offdiag > 1e-6

    def test_degenerate(self):
        with pytest.raises(DegenerateSteadyStateError):
            steady_state(build_demon_model(bath_rates=(0, 0, 0, 0)))


class TestSampling:
    def test_zero_rates(self):
        m = build_demon_model(bath_rates=(0, 0, 0, 0))
        sampler = TrajectorySampler(m, 3.0, initial_distribution=[0, 0, 1, 0])
        rng = np.random.default_rng(3)
        for _ in range(20):
            t = sampler.sample(rng)
            assert t.events == () and t.initial == t.final == 2

    def test_deterministic(self, demon):
        a = sample_trajectory(demon, 42, 3.0)
        b = sample_trajectory(demon, 42, 3.0)
        assert a == b

    def test_horizon(self, demon):
        with pytest.raises(ValueError):
            TrajectorySampler(demon, 0.0)

    def test_visible_jumps_consistent_with_transition_graph(self, demon):
        # at gamma_x = 0 each visible jump needs a unique pre-state; hidden
        # jumps only flip the demon, so the system bit must carry over
        pre = {4: "g0", 2: "g1", 3: "e0", 1: "e1"}
        post = {4: "e0", 2: "e1", 3: "g0", 1: "g1"}
        sampler = TrajectorySampler(demon, 3.0)
        rng = np.random.default_rng(11)
        for _ in range(500):
            v = visible_filter(sampler.sample(rng), demon)
            state = demon.basis_labels[v.initial]
            for k in v.jump_ids:
                assert state[0] == pre[k][0]
                state = post[k]
            assert state[0] == demon.basis_labels[v.final][0]

    def test_waiting_time_distribution(self):
        m = build_demon_model(gamma_x=0.5, gamma_y=0.5)
        sampler = TrajectorySampler(m, 1.0)
        psi = np.array([1.0, 1.0, 0.0, 1.0j]) / np.sqrt(3)
        rng = np.random.default_rng(5)
        n = 100_000
        times = np.sort([sampler.waiting_time(rng, psi, 60.0) for _ in range(n)])
        assert np.isfinite(times).all()
        w, v = np.linalg.eig(-1j * m.effective_hamiltonian())
        c = np.linalg.solve(v, psi)
        amps = (v[None, :, :] * (np.exp(np.outer(times, w)) * c)[:, None, :]).sum(axis=2)
        cdf = 1.0 - np.einsum("ni,ni->n", amps.conj(), amps).real
        ecdf_hi = np.arange(1, n + 1) / n
        ks = max(np.abs(ecdf_hi - cdf).max(), np.abs(ecdf_hi - 1.0 / n - cdf).max())
        assert ks < 0.01

    def test_channel_selection(self):
        m = build_demon_model(gamma_x=0.5, gamma_y=0.5)
        sampler = TrajectorySampler(m, 1.0)
        psi = np.array([0.5, 0.5, 0.5, 0.5j])
        weights = np.array([np.linalg.norm(j.matrix @ psi) ** 2 for j in m.jumps])
        probs = weights / weights.sum()
        rng = np.random.default_rng(9)
        n = 50_000
        counts = np.zeros(8)
        for _ in range(n):
            k, after = sampler.choose_channel(rng, psi)
            counts[k - 1] += 1
        assert_allclose(np.linalg.norm(after), 1.0)
        err = np.sqrt(probs * (1 - probs) / n)
        assert np.all(np.abs(counts / n - probs) < 3 * err + 1e-12)


class TestFilters:
    def test_visible_filter(self, demon):
        t = Trajectory(0, ((4, 0.9), (6, 1.1), (1, 1.5)), 3, 3.0)
        v = visible_filter(t, demon)
        assert isinstance(v, VisibleTrajectory)
        assert v.jump_ids == (4, 1) and v.initial == 0 and v.final == 3
        assert visible_filter(Trajectory(0, (), 0, 1.0), demon).events == ()

    def test_all_visible_identity(self, demon):
        m = demon.with_all_visible()
        t = Trajectory(0, ((4, 0.9), (6, 1.1), (1, 1.5)), 3, 3.0)
        assert visible_filter(t, m).events == t.events

    def test_hidden_env_entropy(self, demon):
        t = Trajectory(0, ((6, 0.5), (4, 0.9), (7, 1.2), (1, 1.5), (6, 2.0)), 3, 3.0)
        assert hidden_env_entropy(t, demon) == 3.0
        assert hidden_env_entropy(Trajectory(0, ((4, 1.0),), 2, 3.0), demon) == 0.0
        assert hidden_env_entropy(Trajectory(2, ((5, 1.0), (6, 2.0)), 2, 3.0), demon) == 0.0

    def test_as_visible_rejects_hidden(self, demon):
        with pytest.raises(ValueError):
            as_visible(demon, Trajectory(0, ((6, 1.0),), 1, 3.0))


class TestTrajectorySpec:
    def test_fig1(self, demon):
        v = parse_trajectory_spec(FIG1_SPEC, demon)
        assert v == VisibleTrajectory(0, ((4, 0.9), (1, 1.5), (4, 2.4)), 3, 3.0)

    @pytest.mark.parametrize("spec", [
        "g0; 4@3.5; e1; T=3", "g0; 4@0.9; e1", "x0; e1; T=3", "g0; 6@1.0; e1; T=3", "g0; 4@zz; e1; T=3",
    ])
    def test_invalid(self, demon, spec):
        with pytest.raises(ValueError):
            parse_trajectory_spec(spec, demon)


class TestConditionedSeries:
    def test_columns_and_grid(self):
        m = build_demon_model(gamma_x=0.5, gamma_y=0.5)
        s = conditioned_state_series(m, parse_trajectory_spec(FIG1_SPEC, m), 0.01)
        text = s.to_csv()
        assert text.splitlines()[0] == ",".join(SERIES_COLUMNS)
        assert s.t[0] == 0.0 and s.t[-1] == 3.0
        assert s.post_jump.sum() == 3
        assert np.all(np.diff(s.t) >= 0)
        assert_allclose(np.einsum("nii->n", s.rho).real, 1.0, atol=1e-12)

    def test_no_coherence_without_drive(self):
        m = build_demon_model(gamma_x=0.5, gamma_y=0.5)
        s = conditioned_state_series(m, parse_trajectory_spec(FIG1_SPEC, m), 0.01)
        assert np.abs(s.rho_y[:, 0, 1]).max() < 1e-14

    def test_pure_after_jumps_at_zero_coupling(self, demon):
        s = conditioned_state_series(demon, parse_trajectory_spec(FIG1_SPEC, demon), 0.05)
        purity = np.einsum("nij,nji->n", s.rho_y, s.rho_y).real
        assert_allclose(purity[s.post_jump], 1.0, atol=1e-12)
        assert purity.min() < 0.99

    def test_visible_jumps_leave_demon_untouched_at_full_suppression(self):
        m = build_demon_model(gamma_x=1.0, gamma_y=1.0)
        with_jumps = conditioned_state_series(m, parse_trajectory_spec(FIG1_SPEC, m), 0.1)
        without = conditioned_state_series(m, parse_trajectory_spec("g0; g0; T=3", m), 0.1)
        grid = ~with_jumps.post_jump
        assert_allclose(with_jumps.t[grid], without.t)
        assert_allclose(with_jumps.rho_y[grid], without.rho_y, atol=1e-12)
        # the post-jump hidden state equals the no-jump one at that instant
        for i in np.flatnonzero(with_jumps.post_jump):
            ref = conditioned_state_series(
                m, parse_trajectory_spec(f"g0; g0; T={float(with_jumps.t[i])!r}", m), 10.0)
            assert_allclose(with_jumps.rho_y[i], ref.rho_y[-1], atol=1e-12)

    def test_drive_generates_coherence(self):
        m = build_demon_model(gamma_x=0.5, gamma_y=0.5, drive=True)
        s = conditioned_state_series(m, parse_trajectory_spec(FIG1_SPEC, m), 0.05)
        assert np.abs(s.rho_y[:, 0, 1].imag).max() > 1e-3
        b = s.bloch()
        assert np.all(np.linalg.norm(b, axis=1) <= 1 + 1e-12)

    def test_impossible_record(self, demon):
        with pytest.raises(ImpossibleTrajectoryError):
            conditioned_state_series(demon, parse_trajectory_spec("g0; 1@0.9; e1; T=3", demon), 0.1)

    def test_grid_dt(self, demon):
        with pytest.raises(ValueError):
            conditioned_state_series(demon, parse_trajectory_spec(FIG1_SPEC, demon), 0.0)


def test_ensemble_populations(demon):
    freq, err = ensemble_populations(demon, [0, 0, 1, 3])
    assert_allclose(freq, [0.5, 0.25, 0, 0.25])
    assert_allclose(err[0], np.sqrt(0.25 / 4))
