"""Margin scans, the claim check, and the path-comparison machinery."""

import json
import math

import numpy as np
import pytest

import harnack_lab as hl
from _runs import CPRIME_QUINTUPLE, STANDARD_QUINTUPLE

TWO_PI = 2.0 * np.pi


class TestVerifyMatrix:
    def test_space_constant_margin(self, constant_traj):
        # F = t d u^(p-1) g >= 0 exactly, so the worst margin sits at the
        # earliest stored positive time with value t d u^(p-1) + 1/eps
        q = STANDARD_QUINTUPLE
        rep = hl.verify_matrix(constant_traj, q, 1)
        first = constant_traj.snapshots[1]
        expected = first.t * q.d * first.max() ** (constant_traj.p - 1.0) + 2.0
        assert rep.min_margin == pytest.approx(expected, rel=1e-12)
        assert rep.min_margin > 1.0 / hl.epsilon_of(q)
        assert rep.passed

    def test_standard_run_passes(self, standard):
        _, traj, cache = standard
        rep = hl.verify_matrix(traj, STANDARD_QUINTUPLE, 1, cache=cache)
        assert rep.passed
        assert rep.min_margin >= -1e-3
        assert rep.kind == "matrix"
        assert rep.epsilon == pytest.approx(0.5)

    def test_exponent_precondition(self, constant_traj):
        # gap of the reference quintuple is 1/3; p = 1.5 is out of range
        traj = hl.Trajectory(
            p=1.5,
            snapshots=constant_traj.snapshots,
            dt=constant_traj.dt,
        )
        with pytest.raises(ValueError, match="1.33333"):
            hl.verify_matrix(traj, STANDARD_QUINTUPLE, 1)

    def test_admissibility_precondition(self, constant_traj):
        with pytest.raises(ValueError, match="not admissible"):
            hl.verify_matrix(constant_traj, hl.Quintuple(1, 0, 2, 1, 1), 1)

    def test_dimension_mismatch(self, constant_traj):
        with pytest.raises(ValueError, match="dimension"):
            hl.verify_matrix(constant_traj, STANDARD_QUINTUPLE, 2)

    def test_scale_covariance(self, constant_traj):
        base = hl.verify_matrix(constant_traj, STANDARD_QUINTUPLE, 1)
        for lam in (0.5, 2.0):
            scaled = hl.verify_matrix(constant_traj, STANDARD_QUINTUPLE.scaled(lam), 1)
            assert scaled.passed == base.passed
            assert scaled.min_margin == pytest.approx(lam * base.min_margin, rel=1e-10)


class TestVerifyTrace:
    def test_space_constant_margin(self, constant_traj):
        q = STANDARD_QUINTUPLE
        rep = hl.verify_trace(constant_traj, q, 1)
        first = constant_traj.snapshots[1]
        expected = 1.0 / hl.epsilon_of(q) + first.t * q.d * first.max() ** (
            constant_traj.p - 1.0
        )
        assert rep.min_margin == pytest.approx(expected, rel=1e-12)

    def test_dominates_matrix_margin_dim1(self, standard):
        _, traj, cache = standard
        rm = hl.verify_matrix(traj, STANDARD_QUINTUPLE, 1, cache=cache)
        rt = hl.verify_trace(traj, STANDARD_QUINTUPLE, 1, cache=cache)
        assert rt.min_margin >= 1 * rm.min_margin - 1e-10

    def test_dominates_matrix_margin_dim2(self):
        g = hl.Grid(2, 32, 1.0)
        X, Y = g.coords()
        u0 = hl.ScalarField(g, 1.0 + 0.4 * np.sin(TWO_PI * X) * np.sin(TWO_PI * Y), 0.0)
        traj = hl.solve(u0, 0.05, 5e-4, p=1.1, stride=10)
        k = hl.k_threshold(2)
        q = hl.ConeFamilyPoint(2, k, hl.ridge_z(k, 2), 1.0).quintuple()
        cache = hl.FieldCache(traj)
        rm = hl.verify_matrix(traj, q, 2, cache=cache)
        rt = hl.verify_trace(traj, q, 2, cache=cache)
        assert rm.passed and rt.passed
        assert rt.min_margin >= 2 * rm.min_margin - 1e-10


class TestVerifyClaim:
    def test_vacuous_on_positive_tensor(self, constant_traj):
        rep = hl.verify_claim(constant_traj, STANDARD_QUINTUPLE, 1)
        assert rep.passed
        assert math.isinf(rep.min_margin)
        assert rep.argmin is None
        assert rep.extra["qualifying_points"] == 0

    def test_concave_transient(self, concave):
        _, traj, cache = concave
        rep = hl.verify_claim(traj, STANDARD_QUINTUPLE, 1, cache=cache)
        assert rep.extra["qualifying_points"] > 0
        assert rep.min_margin >= -1e-3
        assert rep.passed

    def test_consistent_with_direct_pointwise_evaluation(self, concave):
        # second route: recompute the margin at the reported argmin by hand
        _, traj, cache = concave
        q = STANDARD_QUINTUPLE
        rep = hl.verify_claim(traj, q, 1, cache=cache)
        (x, t) = rep.argmin
        i = traj.index_of_time(t)
        j = int(round(x / traj.grid.h))
        d = cache.derived(i)
        F = hl.harnack_tensor(d, q, traj.p, t)
        Q = hl.source_tensor(d, F, q, traj.p, t)
        eps = hl.epsilon_of(q)
        direct = q.theta**2 * Q.comps[0][j] - F.comps[0][j] ** 2 / (eps * t**2)
        assert direct == pytest.approx(rep.min_margin, rel=1e-10)
        assert F.comps[0][j] <= 1e-12


class TestPsiPath:
    def test_zero_for_stationary_query_without_curvature(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=5, x2=5, t1=times[40], t2=times[80], variant="harn")
        assert hl.psi_path(constant_traj, query, CPRIME_QUINTUPLE, 1) == 0.0

    def test_harn3_matches_direct_quadrature(self, constant_traj):
        # constant path is optimal: kinetic >= 0 and the potential is
        # space-independent, so the value is the destination-sampled sum
        times = constant_traj.times()
        t1, t2 = times[40], times[80]
        S = 16
        query = hl.PathQuery(x1=5, x2=5, t1=t1, t2=t2, variant="harn3", layers=S, radius=4)
        q = STANDARD_QUINTUPLE
        psi = hl.psi_path(constant_traj, query, q, 1)
        coef = -q.theta / (q.theta + q.a) * (t2 - t1)
        direct = 0.0
        for j in range(1, S + 1):
            tau = (1 - j / S) * t2 + (j / S) * t1
            i = constant_traj.nearest_index(tau)
            direct += (1.0 / S) * coef * constant_traj.snapshots[i].values[5] ** (
                constant_traj.p - 1.0
            )
        assert psi == pytest.approx(direct, abs=1e-6)
        assert psi == pytest.approx(direct, abs=1e-12)

    def test_refinement_within_one_percent_on_smooth_run(self, constant_traj):
        times = constant_traj.times()
        base = dict(x1=7, x2=7, t1=times[30], t2=times[90], variant="harn3")
        q = STANDARD_QUINTUPLE
        p1 = hl.psi_path(constant_traj, hl.PathQuery(**base, layers=16, radius=8), q, 1)
        p2 = hl.psi_path(constant_traj, hl.PathQuery(**base, layers=32, radius=16), q, 1)
        assert abs(p2 - p1) <= 0.01 * abs(p1)

    def test_radius_growth_never_increases_value(self, standard):
        # a larger radius strictly enlarges the edge set, so the DP minimum
        # cannot go up; this holds for arbitrary queries
        _, traj, cache = standard
        times = traj.times()[1:]
        rng = np.random.default_rng(11)
        for _ in range(5):
            i, j = sorted(rng.choice(len(times), size=2, replace=False))
            x1, x2 = (int(v) for v in rng.integers(0, 256, size=2))
            base = dict(x1=x1, x2=x2, t1=times[i], t2=times[j], variant="harn")
            lo = hl.psi_path(traj, hl.PathQuery(**base, layers=16, radius=8), CPRIME_QUINTUPLE, 1, cache=cache)
            hi = hl.psi_path(traj, hl.PathQuery(**base, layers=16, radius=16), CPRIME_QUINTUPLE, 1, cache=cache)
            assert hi <= lo + 1e-12

    def test_unreachable_configuration(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=3, x2=4, t1=times[10], t2=times[20], variant="harn", radius=0)
        with pytest.raises(hl.ConfigurationError, match="unreachable"):
            hl.psi_path(constant_traj, query, CPRIME_QUINTUPLE, 1)

    def test_stationary_zero_radius_allowed(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=3, x2=3, t1=times[10], t2=times[20], variant="harn", radius=0)
        assert hl.psi_path(constant_traj, query, CPRIME_QUINTUPLE, 1) == 0.0

    def test_subcone_required_for_harn_variants(self, constant_traj):
        times = constant_traj.times()
        for variant in ("harn", "harn2"):
            query = hl.PathQuery(x1=3, x2=4, t1=times[10], t2=times[20], variant=variant)
            with pytest.raises(hl.ConfigurationError, match="a = d and b - a \\+ c < 0"):
                hl.psi_path(constant_traj, query, STANDARD_QUINTUPLE, 1)

    def test_harn3_requires_admissible(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=3, x2=4, t1=times[10], t2=times[20], variant="harn3")
        with pytest.raises(hl.ConfigurationError, match="admissible"):
            hl.psi_path(constant_traj, query, hl.Quintuple(1, 0, 2, 1, 1), 1)

    def test_times_must_be_snapshot_times(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=3, x2=4, t1=times[10] + 1e-4, t2=times[20], variant="harn3")
        with pytest.raises(ValueError, match="snapshot time"):
            hl.psi_path(constant_traj, query, STANDARD_QUINTUPLE, 1)

    def test_query_validation(self):
        with pytest.raises(hl.ConfigurationError, match="t1 < t2"):
            hl.PathQuery(x1=0, x2=0, t1=0.2, t2=0.1)
        with pytest.raises(hl.ConfigurationError, match="t1 < t2"):
            hl.PathQuery(x1=0, x2=0, t1=0.2, t2=0.2)
        with pytest.raises(hl.ConfigurationError, match="t1 > 0"):
            hl.PathQuery(x1=0, x2=0, t1=0.0, t2=0.2)
        with pytest.raises(hl.ConfigurationError, match="layers"):
            hl.PathQuery(x1=0, x2=0, t1=0.1, t2=0.2, layers=1)
        with pytest.raises(hl.ConfigurationError, match="variant"):
            hl.PathQuery(x1=0, x2=0, t1=0.1, t2=0.2, variant="bogus")


class TestVerifyHarnackPair:
    def test_monotone_stationary_pair(self, constant_traj):
        # u grows in time and psi = 0, so the margin is strictly positive
        times = constant_traj.times()
        t2 = times[100]
        t1 = times[90]
        query = hl.PathQuery(x1=5, x2=5, t1=t1, t2=t2, variant="harn")
        rep = hl.verify_harnack_pair(constant_traj, query, CPRIME_QUINTUPLE, 1)
        assert rep.passed
        assert rep.min_margin > 0
        # independent bookkeeping of the same margin
        u = lambda i: constant_traj.snapshots[i].values[5]
        expected = (
            math.log(u(100)) - math.log(u(90)) + 2.0 * math.log(t2 / t1)
        )
        assert rep.min_margin == pytest.approx(expected, rel=1e-12)

    def test_reports_alternative_exponent(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=5, x2=5, t1=times[90], t2=times[100], variant="harn")
        rep = hl.verify_harnack_pair(constant_traj, query, CPRIME_QUINTUPLE, 1)
        eps = hl.epsilon_of(CPRIME_QUINTUPLE)
        shift = math.log(times[100] / times[90])
        expected_alt = rep.min_margin - shift / eps + shift / (CPRIME_QUINTUPLE.a * eps)
        assert rep.extra["alt_exponent_margin"] == pytest.approx(expected_alt, rel=1e-12)

    def test_degenerate_time_gap(self, constant_traj):
        # adjacent snapshots: margin reduces to the log difference plus the
        # (small) time shift and psi, all finite and consistent
        times = constant_traj.times()
        query = hl.PathQuery(x1=5, x2=9, t1=times[99], t2=times[100], variant="harn")
        rep = hl.verify_harnack_pair(constant_traj, query, CPRIME_QUINTUPLE, 1)
        psi = hl.psi_path(constant_traj, query, CPRIME_QUINTUPLE, 1)
        u1 = constant_traj.snapshots[99].values[5]
        u2 = constant_traj.snapshots[100].values[9]
        expected = math.log(u2) - math.log(u1) + 2.0 * math.log(times[100] / times[99]) + psi
        assert rep.min_margin == pytest.approx(expected, rel=1e-12)

    def test_harn3_notes_time_factor(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=5, x2=5, t1=times[40], t2=times[80], variant="harn3")
        rep = hl.verify_harnack_pair(constant_traj, query, STANDARD_QUINTUPLE, 1)
        assert "(t2-t1)" in rep.extra["notes"]

    def test_standard_run_random_queries(self, standard):
        _, traj, cache = standard
        times = traj.times()[1:]
        rng = np.random.default_rng(2024)
        for variant, q in (("harn", CPRIME_QUINTUPLE), ("harn2", CPRIME_QUINTUPLE), ("harn3", STANDARD_QUINTUPLE)):
            for _ in range(10):
                i, j = sorted(rng.choice(len(times), size=2, replace=False))
                x1, x2 = (int(v) for v in rng.integers(0, 256, size=2))
                query = hl.PathQuery(
                    x1=x1, x2=x2, t1=times[i], t2=times[j], variant=variant,
                    layers=16, radius=8,
                )
                rep = hl.verify_harnack_pair(traj, query, q, 1, cache=cache)
                assert rep.min_margin >= -1e-3
                assert rep.passed


class TestThreadedScans:
    def test_env_capped_width_same_result(self, standard, monkeypatch):
        _, traj, _ = standard
        serial = hl.verify_matrix(traj, STANDARD_QUINTUPLE, 1)
        monkeypatch.setenv("HARNACK_LAB_THREADS", "4")
        threaded = hl.verify_matrix(traj, STANDARD_QUINTUPLE, 1)
        assert threaded.min_margin == serial.min_margin
        assert threaded.argmin == serial.argmin

    def test_env_must_be_integer(self, monkeypatch):
        from harnack_lab.util import thread_count

        monkeypatch.setenv("HARNACK_LAB_THREADS", "many")
        with pytest.raises(ValueError):
            thread_count()
        monkeypatch.setenv("HARNACK_LAB_THREADS", "3")
        assert 1 <= thread_count() <= 3


class TestMarginReportSerialization:
    def test_required_keys(self, constant_traj):
        rep = hl.verify_matrix(constant_traj, STANDARD_QUINTUPLE, 1)
        payload = rep.to_dict()
        assert set(payload) >= {
            "kind", "min_margin", "argmin", "pass", "tolerance",
            "epsilon", "quintuple", "p", "n",
        }
        assert set(payload["argmin"]) == {"x", "t"}
        text = json.dumps(payload, sort_keys=True)
        assert json.loads(text)["kind"] == "matrix"

    def test_infinite_margin_round_trips(self, constant_traj):
        rep = hl.verify_claim(constant_traj, STANDARD_QUINTUPLE, 1)
        line = json.dumps(rep.to_dict(), sort_keys=True)
        assert "Infinity" in line
        assert math.isinf(json.loads(line)["min_margin"])

    def test_harnack_payload_carries_query_and_psi(self, constant_traj):
        times = constant_traj.times()
        query = hl.PathQuery(x1=5, x2=5, t1=times[90], t2=times[100], variant="harn")
        rep = hl.verify_harnack_pair(constant_traj, query, CPRIME_QUINTUPLE, 1)
        payload = rep.to_dict()
        assert payload["query"]["variant"] == "harn"
        assert "psi" in payload
