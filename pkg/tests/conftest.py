"""Shared fixtures: default configurations and seeded channel draws."""

import dataclasses

import numpy as np
import pytest

from ambciq.channels import IQParams, derive_effective, sample_channels
from ambciq.config import SystemConfig
from ambciq.pilots import build_pilot_plan


@pytest.fixture
def cfg():
    """Default desk-scale configuration (M=4, K=2, N=16)."""
    return SystemConfig()


@pytest.fixture
def cfg_noiseless():
    return dataclasses.replace(SystemConfig(), sigma_sq=0.0, D=40)


def make_draw(cfg, seed, phi_T=0.37, phi_R=0.82):
    """One deterministic channel + imbalance realization."""
    rng = np.random.default_rng(seed)
    iq = IQParams.from_mismatch(cfg.g_T, phi_T, cfg.g_R, phi_R)
    phys = sample_channels(cfg, rng)
    eff = derive_effective(phys, iq)
    return rng, iq, phys, eff


@pytest.fixture
def draw(cfg):
    return make_draw(cfg, seed=11)


@pytest.fixture
def plan(cfg):
    return build_pilot_plan(cfg)
