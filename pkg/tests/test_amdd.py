"""Detection and decision-directed estimation tests."""

import dataclasses

import numpy as np
import pytest

from ambciq.amdd import (amdd_estimate, amdd_update_h, amdd_update_q,
                         amdd_update_u, amdd_update_v, data_regressors)
from ambciq.channels import pack_theta
from ambciq.config import SystemConfig
from ambciq.detection import DetectedBlock, build_hypothesis_grid, ml_detect
from ambciq.pilot_estimator import estimate_matrices, genie_estimate, pilot_estimate
from ambciq.pilots import build_pilot_plan
from ambciq.synthesis import (lu_constellation, synth_data, synth_training,
                              synthesize_slot_effective, tag_constellation)

from conftest import make_draw


def full_setup(seed, sigma_sq=0.0, D=30, **overrides):
    cfg = dataclasses.replace(SystemConfig(), sigma_sq=sigma_sq, D=D, **overrides)
    rng, iq, phys, eff = make_draw(cfg, seed=seed)
    plan = build_pilot_plan(cfg)
    sig = synth_training(cfg, eff, iq, plan, rng)
    data = synth_data(cfg, eff, iq, rng)
    return cfg, rng, iq, eff, plan, sig, data


def genie_block(data) -> DetectedBlock:
    return DetectedBlock(x_hat=data.X.copy(), d_hat=data.d.copy(),
                         hyp_idx=np.zeros(data.D, dtype=int))


class TestMLDetect:
    def test_noiseless_exact_channels_no_errors(self):
        cfg, _, _, eff, plan, sig, data = full_setup(seed=50)
        grid = build_hypothesis_grid(lu_constellation(cfg.P_x), tag_constellation(), cfg.K)
        det = ml_detect(data.Z, estimate_matrices(genie_estimate(eff)), grid, data.C)
        assert np.array_equal(det.x_hat, data.X)
        assert np.array_equal(det.d_hat, data.d)

    def test_brute_force_oracle_single_tag(self):
        # Independent oracle: explicit loop over all 16 hypotheses per slot,
        # rebuilding the slot signal from scratch each time.
        cfg = SystemConfig(K=1, d_k=(2.0,), d_bar_k=(30.0,), eta=(0.6,),
                           N2=6, D=40, sigma_sq=1e-10)
        rng, iq, phys, eff = make_draw(cfg, seed=51)
        data = synth_data(cfg, eff, iq, rng)
        grid = build_hypothesis_grid(lu_constellation(cfg.P_x), tag_constellation(), 1)
        det = ml_detect(data.Z, estimate_matrices(genie_estimate(eff)), grid, data.C)

        lu_syms = lu_constellation(cfg.P_x)
        tag_syms = tag_constellation()
        Zt = data.Z - eff.Q_bar @ data.C.T - eff.Q_check @ np.conj(data.C).T
        for n in range(data.D):
            best, best_idx, idx = None, None, 0
            for x in lu_syms:
                for d1 in tag_syms:
                    recon = synthesize_slot_effective(eff, x, data.C[n], [d1],
                                                      np.zeros(cfg.M))
                    recon -= (eff.Q_bar @ data.C[n]
                              + eff.Q_check @ np.conj(data.C[n]))
                    resid = np.linalg.norm(Zt[:, n] - recon) ** 2
                    if best is None or resid < best:
                        best, best_idx = resid, idx
                    idx += 1
            assert det.hyp_idx[n] == best_idx

    def test_deterministic_tie_break(self):
        # All-zero channels make every hypothesis equally good; the lowest
        # index must win.
        cfg = SystemConfig(D=5)
        _, _, _, eff = make_draw(cfg, seed=52)
        zero = dataclasses.replace(
            eff, **{f: np.zeros_like(getattr(eff, f))
                    for f in ("h_bar", "h_check", "Q_bar", "Q_check", "v_bar",
                              "v_check", "v_ddot", "v_dot", "U_bar", "U_check",
                              "U_ddot", "U_dot")})
        grid = build_hypothesis_grid(lu_constellation(cfg.P_x), tag_constellation(), cfg.K)
        det = ml_detect(np.zeros((cfg.M, cfg.D), dtype=complex),
                        estimate_matrices(genie_estimate(zero)), grid,
                        np.zeros((cfg.D, cfg.M), dtype=complex))
        assert np.array_equal(det.hyp_idx, np.zeros(cfg.D, dtype=int))


class TestUpdatesNoiseless:
    def test_all_updates_exact_with_genie_decisions(self):
        cfg, _, _, eff, plan, sig, data = full_setup(seed=53)
        mats = estimate_matrices(genie_estimate(eff))
        reg = data_regressors(data.X, data.d, data.C)
        for k in range(cfg.K):
            Uk = amdd_update_u(k, data.Z, mats, reg, sig, plan)
            assert np.allclose(Uk, eff.Uk(k), rtol=1e-9, atol=1e-20)
        V = amdd_update_v(data.Z, mats, reg, sig, plan)
        for k in range(cfg.K):
            assert np.allclose(V[k], eff.Vk(k), rtol=1e-9, atol=1e-20)
        Q = amdd_update_q(data.Z, mats, reg, sig, plan)
        assert np.allclose(Q, eff.Qmat(), rtol=1e-9, atol=1e-20)
        H = amdd_update_h(data.Z, mats, reg, sig, plan)
        assert np.allclose(H, eff.H(), rtol=1e-9, atol=1e-20)

    def test_full_pass_noiseless_exact(self):
        cfg, _, _, eff, plan, sig, data = full_setup(seed=54)
        est = amdd_estimate(sig, data, plan, cfg.P_x)
        theta = pack_theta(eff)
        assert np.linalg.norm(est.theta() - theta) < 1e-9 * np.linalg.norm(theta)
        assert est.source == "amdd"


class TestZeroDataReduction:
    def test_u_update_reduces_to_fused_pilot_ls(self):
        cfg, _, _, eff, plan, sig, data = full_setup(seed=55, sigma_sq=1e-11, D=0)
        est_p = pilot_estimate(sig, plan)
        mats = estimate_matrices(est_p)
        reg = data_regressors(data.X, data.d, data.C)
        U0 = amdd_update_u(0, data.Z, mats, reg, sig, plan)
        # Oracle: joint least squares over both phase-3 sub-stages only.
        G = sum(plan.P3(i).conj().T @ plan.P3(i) for i in (1, 2))
        rhs = sum((sig.Y3[0, i - 1] - mats["Q"] @ plan.Rt3().T) @ np.conj(plan.P3(i))
                  for i in (1, 2))
        expected = np.linalg.solve(G, rhs.T).T
        assert np.allclose(U0, expected, rtol=1e-12)
        # With orthogonal sub-stage designs this equals the three-phase
        # recombination estimate as well.
        assert np.allclose(U0, est_p.channels.Uk(0), rtol=1e-9)

    def test_v_update_reduces_to_fused_pilot_ls(self):
        cfg, _, _, eff, plan, sig, data = full_setup(seed=56, sigma_sq=1e-11, D=0)
        est_p = pilot_estimate(sig, plan)
        mats = estimate_matrices(est_p)
        reg = data_regressors(data.X, data.d, data.C)
        V = amdd_update_v(data.Z, mats, reg, sig, plan)
        assert np.allclose(np.hstack(V), est_p.channels.Vmat(), rtol=1e-9)

    def test_q_update_without_data_matches_fused_ls_oracle(self):
        cfg, _, _, eff, plan, sig, data = full_setup(seed=57, sigma_sq=1e-11, D=0)
        est_p = pilot_estimate(sig, plan)
        mats = estimate_matrices(est_p)
        reg = data_regressors(data.X, data.d, data.C)
        Q = amdd_update_q(data.Z, mats, reg, sig, plan)
        Rt, Rt3 = plan.Rt(), plan.Rt3()
        G = Rt.conj().T @ Rt + 2 * cfg.K * (Rt3.conj().T @ Rt3)
        rhs = (sig.Y1 - mats["H"] @ plan.S1().T) @ np.conj(Rt)
        for k in range(cfg.K):
            for i in (1, 2):
                rhs += (sig.Y3[k, i - 1] - mats["U"][k] @ plan.P3(i).T) @ np.conj(Rt3)
        assert np.allclose(Q, np.linalg.solve(G, rhs.T).T, rtol=1e-12)

    def test_h_update_without_data_matches_fused_ls_oracle(self):
        cfg, _, _, eff, plan, sig, data = full_setup(seed=58, sigma_sq=1e-11, D=0)
        est_p = pilot_estimate(sig, plan)
        mats = estimate_matrices(est_p)
        reg = data_regressors(data.X, data.d, data.C)
        H = amdd_update_h(data.Z, mats, reg, sig, plan)
        S1 = plan.S1()
        G = S1.conj().T @ S1 + sum(plan.S2(i).conj().T @ plan.S2(i) for i in (1, 2))
        rhs = (sig.Y1 - mats["Q"] @ plan.Rt().T) @ np.conj(S1)
        for i in (1, 2):
            resid = sig.Y2(i).copy()
            for k in range(cfg.K):
                resid -= mats["V"][k] @ plan.T2_full(i)[:, 4 * k:4 * k + 4].T
            rhs += resid @ np.conj(plan.S2(i))
        assert np.allclose(H, np.linalg.solve(G, rhs.T).T, rtol=1e-12)


class TestFusionImproves:
    @pytest.mark.parametrize("block", ["u", "v", "q", "h"])
    def test_fused_error_not_worse_than_pilot(self, block):
        # Genie decisions isolate the fusion benefit from detection errors.
        trials, better, sums = 60, 0, [0.0, 0.0]
        for trial in range(trials):
            cfg, _, _, eff, plan, sig, data = full_setup(
                seed=600 + trial, sigma_sq=1e-11, D=100)
            est_p = pilot_estimate(sig, plan)
            mats = estimate_matrices(est_p)
            reg = data_regressors(data.X, data.d, data.C)
            if block == "u":
                got = amdd_update_u(0, data.Z, mats, reg, sig, plan)
                ref_p, truth = mats["U"][0], eff.Uk(0)
            elif block == "v":
                got = np.hstack(amdd_update_v(data.Z, mats, reg, sig, plan))
                ref_p, truth = np.hstack(mats["V"]), eff.Vmat()
            elif block == "q":
                got = amdd_update_q(data.Z, mats, reg, sig, plan)
                ref_p, truth = mats["Q"], eff.Qmat()
            else:
                got = amdd_update_h(data.Z, mats, reg, sig, plan)
                ref_p, truth = mats["H"], eff.H()
            e_fused = np.sum(np.abs(got - truth) ** 2)
            e_pilot = np.sum(np.abs(ref_p - truth) ** 2)
            sums[0] += e_fused
            sums[1] += e_pilot
            better += e_fused <= e_pilot
        assert sums[0] < sums[1]
        assert better > trials * 0.7
