"""Pilot-design tests: DFT properties, column selection, plan invariants."""

import json

import numpy as np
import pytest

from ambciq.config import SystemConfig
from ambciq.pilots import (PilotCapacityError, build_pilot_plan, dft_matrix,
                           select_pilot_columns)


class TestDFTMatrix:
    def test_single_point(self):
        assert np.allclose(dft_matrix(1), [[1.0]])

    def test_two_point(self):
        expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.allclose(dft_matrix(2), expected)

    @pytest.mark.parametrize("N", [4, 8, 16, 32])
    def test_unitary(self, N):
        F = dft_matrix(N)
        assert np.max(np.abs(F.conj().T @ F - np.eye(N))) < 1e-12


class TestColumnSelection:
    def test_basic(self):
        assert select_pilot_columns(8, 3) == [1, 2, 3]
        conj_partners = {8 - c for c in (1, 2, 3)}
        assert conj_partners.isdisjoint({1, 2, 3})

    def test_phase1_m4(self):
        assert select_pilot_columns(16, 5) == [1, 2, 3, 4, 5]

    def test_capacity_error(self):
        with pytest.raises(PilotCapacityError, match="N >= 8"):
            select_pilot_columns(6, 3)

    @pytest.mark.parametrize("N,count", [(8, 3), (16, 5), (16, 7), (32, 15), (10, 4)])
    def test_selected_and_conjugates_orthonormal(self, N, count):
        cols = select_pilot_columns(N, count)
        F = dft_matrix(N)
        fam = np.column_stack([F[:, cols], np.conj(F[:, cols])])
        gram = fam.conj().T @ fam
        assert np.max(np.abs(gram - np.eye(2 * count))) < 1e-12


def gram_offdiag(A):
    G = A.conj().T @ A
    return np.max(np.abs(G - np.diag(np.diag(G))))


class TestPilotPlan:
    def test_feasible_paper_size(self):
        plan = build_pilot_plan(SystemConfig(M=4, K=2, N1=16, N2=16, N3=16))
        # Phase 1: LU sequence, its conjugate, AP columns and conjugates.
        fam1 = np.hstack([plan.S1(), plan.Rt()])
        assert gram_offdiag(fam1) < 1e-12 * plan.N1 * plan.P_T
        # Phase 2: tag sequences and conjugates.
        fam2 = np.hstack([plan.t.T, np.conj(plan.t.T)])
        assert gram_offdiag(fam2) < 1e-12 * plan.N2
        # Phase 3: AP columns and conjugates.
        assert gram_offdiag(plan.Rt3()) < 1e-12 * plan.N3 * plan.P_T

    def test_infeasible_m8_n16(self):
        cfg = SystemConfig(M=8, N1=16, N2=16, N3=18)
        with pytest.raises(PilotCapacityError):
            build_pilot_plan(cfg)

    def test_feasible_m8_n32(self):
        plan = build_pilot_plan(SystemConfig(M=8, N1=32, N2=32, N3=32))
        assert plan.n_total == 32 + 64 + 2 * 2 * 32

    def test_tag_pilots_unit_modulus(self, plan):
        assert np.allclose(np.abs(plan.t), 1.0)

    def test_symbol_power(self, plan, cfg):
        assert np.allclose(np.abs(plan.s1) ** 2, cfg.P_T)
        assert np.allclose(np.abs(plan.R) ** 2, cfg.P_T)
        assert np.allclose(np.abs(plan.s2_1) ** 2, cfg.P_T)
        assert np.allclose(np.abs(plan.R3) ** 2, cfg.P_T)

    def test_deterministic(self, cfg):
        a, b = build_pilot_plan(cfg), build_pilot_plan(cfg)
        assert np.array_equal(a.s1, b.s1)
        assert np.array_equal(a.R, b.R)
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.R3, b.R3)

    def test_slot_budget_formula(self, plan, cfg):
        assert plan.n_total == cfg.N1 + 2 * cfg.N2 + 2 * cfg.K * cfg.N3

    def test_json_description(self, plan):
        desc = json.loads(plan.to_json())
        assert desc["s1_col"] == 1
        assert desc["r_cols"] == [2, 3, 4, 5]
        assert desc["t_cols"] == [1, 2]
        assert desc["n_total"] == plan.n_total
