import math

import pytest

from streliability.config import Config, paper_config, sample_trials, scaled_config


def test_guarantee_constants_small_instance():
    c = paper_config(5, 6, 0.5)
    assert (c.B, c.ell1, c.ell2) == (1200, 2000, 9_000_000)
    assert c.ell == 5_400_002_400_000
    assert c.sample_T == math.ceil(1000 * math.log(10))
    assert c.guaranteed


def test_guarantee_constants_two_vertices():
    c = paper_config(2, 1, 0.5)
    assert (c.B, c.ell1, c.ell2) == (270, 800, 160_000)
    assert c.ell == 270 * (800 + 8 * 10**7)


def test_eps_term_dominates_for_small_eps():
    c = paper_config(2, 1, 0.1)
    # 1/eps^2 = 100 exactly, not 100.00000000000001
    assert c.ell2 == 10**4 * 4 * 100


@pytest.mark.parametrize("args", [(5, 6, 1.0), (5, 6, 0.0), (1, 0, 0.5), (5, 3, 0.5)])
def test_guarantee_config_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        paper_config(*args)


def test_scaled_preset():
    c = scaled_config(10)
    assert c.preset == "scaled" and not c.guaranteed
    assert c.ell == c.B * (c.ell1 + 500 * c.ell2)
    assert c.sample_T == sample_trials(10, 0.5)
    c2 = scaled_config(10, B=31, ell1=64, ell2=256, sample_T=32)
    assert (c2.B, c2.ell1, c2.ell2, c2.sample_T) == (31, 64, 256, 32)


def test_round2_trials():
    c = Config(B=1, ell1=4, ell2=2, sample_T=1)
    assert c.round2_trials(0.0, 3) == 25 * 2 * 12
    assert c.round2_trials(1.0, 3) == 25 * 2 * 2
    assert c.round2_trials(0.01, 3) == 25 * 2 * 12
    assert c.round2_trials(0.3, 3) == math.ceil(25 * 2 * (2 / 0.3))


def test_config_validation():
    with pytest.raises(ValueError):
        Config(B=0, ell1=1, ell2=1, sample_T=1)
    with pytest.raises(ValueError):
        Config(B=1, ell1=1, ell2=1, sample_T=1, preset="fast")
    assert Config(B=1, ell1=1, ell2=1, sample_T=1).as_dict()["ell"] == 501
