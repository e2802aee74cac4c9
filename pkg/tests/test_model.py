import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadopo.errors import DomainError, SymmetryError
from quadopo.model import (
    PUMP_TO_PAIR_LABELS,
    TOPOLOGY,
    SystemParams,
    load_config,
    params_from_mapping,
    threshold_pump,
    validate,
)


def test_reference_parameters_are_valid(base):
    assert validate(base) is base
    assert base.is_symmetric


@pytest.mark.parametrize("changes, match", [
    ({"gamma": 0.0}, "loss rate"),
    ({"kappa": [1, 1, -1, 1]}, "loss rate"),
    ({"chi": -1.0}, "coupling sign"),
    ({"eps": [0, 0, 0, -2]}, "drive sign"),
])
def test_validate_rejects(base, changes, match):
    with pytest.raises(DomainError, match=match):
        validate(base.replace(**changes))


def test_wrong_length_rejected():
    with pytest.raises(DomainError):
        SystemParams(chi=[1, 2, 3], eps=1, gamma=1, kappa=1)


def test_arrays_are_read_only(base):
    with pytest.raises(ValueError):
        base.chi[0] = 5.0


@pytest.mark.parametrize("gamma, kappa, chi, expected", [
    (10.0, 1.0, 0.01, 500.0),
    (2.0, 1.0, 1.0, 1.0),
    (1.0, 1.0, 0.5, 1.0),
])
def test_threshold_pump(gamma, kappa, chi, expected):
    p = SystemParams(chi=chi, eps=0.0, gamma=gamma, kappa=kappa)
    assert threshold_pump(p) == pytest.approx(expected, rel=1e-15)


def test_threshold_requires_symmetry(base):
    with pytest.raises(SymmetryError):
        threshold_pump(base.replace(chi=[0.01, 0.01, 0.01, 0.02]))


@given(s=st.floats(0.1, 10.0), gamma=st.floats(0.1, 50.0), kappa=st.floats(0.1, 10.0),
       chi=st.floats(1e-4, 1.0))
def test_threshold_homogeneity(s, gamma, kappa, chi):
    base = threshold_pump(SystemParams(chi=chi, eps=0, gamma=gamma, kappa=kappa))
    losses = threshold_pump(SystemParams(chi=chi, eps=0, gamma=s * gamma, kappa=s * kappa))
    coupling = threshold_pump(SystemParams(chi=s * chi, eps=0, gamma=gamma, kappa=kappa))
    assert losses == pytest.approx(s**2 * base, rel=1e-12)
    assert coupling == pytest.approx(base / s, rel=1e-12)


def test_topology_is_a_single_ring():
    assert dict(PUMP_TO_PAIR_LABELS) == {1: (5, 6), 2: (6, 7), 3: (7, 8), 4: (8, 5)}
    assert list(TOPOLOGY.low_mode_degree()) == [2, 2, 2, 2]
    # walk the cycle: every low mode reached once before returning
    adj = {m: set() for m in range(4)}
    for a, b in TOPOLOGY.pump_to_pair.values():
        adj[a].add(b)
        adj[b].add(a)
    seen, prev, cur = [0], None, 0
    while True:
        nxt = next(iter(adj[cur] - {prev}))
        if nxt == 0:
            break
        seen.append(nxt)
        prev, cur = cur, nxt
    assert sorted(seen) == [0, 1, 2, 3]
    with pytest.raises(TypeError):
        TOPOLOGY.pump_to_pair[0] = (1, 2)


def test_config_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# fig 3\nchi = 0.01\neps=400  # drive\ngamma = 10\nkappa = 1\ngamma3 = 12\n")
    values = load_config(cfg)
    p = params_from_mapping(values)
    assert list(p.gamma) == [10, 10, 12, 10]
    assert list(p.eps) == [400] * 4
    assert not p.is_symmetric


def test_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("chi 0.01\n")
    with pytest.raises(DomainError, match="key = value"):
        load_config(cfg)
    with pytest.raises(DomainError, match="unknown"):
        params_from_mapping({"chi": 1, "eps": 1, "gamma": 1, "kappa": 1, "delta": 0})
    with pytest.raises(DomainError, match="missing"):
        params_from_mapping({"chi": 1, "eps": 1, "gamma": 1})
    with pytest.raises(DomainError, match="loss rate"):
        params_from_mapping({"chi": 1, "eps": 1, "gamma": 1, "kappa": 0})


def test_as_dict_roundtrip(base):
    assert params_from_mapping(base.as_dict()) == base
