import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kslab.config import (
    KEYS,
    PRESETS,
    ConfigError,
    apply_overrides,
    load_config,
    parse_config,
    preset_config,
    serialize_config,
)
from kslab.grid import GridSpec, ScalarField, integrate, write_snapshot

MINIMAL = """
# smallest useful document
grid.nx = 32
grid.ny = 32
grid.lx = 1.0
grid.ly = 1.0
t_end = 0.5
source.kind = none
init.kind = constant
"""


def test_minimal_document_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.grid == GridSpec(32, 32, 1.0, 1.0)
    assert cfg.cfl.c_diff == 0.2 and cfg.cfl.c_adv == 0.4 and cfg.cfl.c_src == 0.1
    assert cfg.cfl.dt_min == 1e-12 and cfg.cfl.dt_max == 1e-2
    assert cfg.linf_blowup_factor == 1e6
    assert cfg.snapshot_every == 0
    assert cfg.init.kind == "constant_plus_cosine" and cfg.init.amp == 0.0
    u0, t0 = cfg.initial_field()
    assert t0 == 0.0 and np.all(u0.values == 1.0)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="cfl.c_dif"):
        parse_config(MINIMAL + "cfl.c_dif = 0.3\n")


def test_missing_required_key():
    with pytest.raises(ConfigError, match="t_end"):
        parse_config(MINIMAL.replace("t_end = 0.5", ""))


def test_negative_mu_names_invariant():
    doc = MINIMAL.replace("source.kind = none", "source.kind = sublogistic\nsource.mu = -1")
    with pytest.raises(ConfigError, match="mu"):
        parse_config(doc)


@pytest.mark.parametrize(
    "line",
    ["grid.nx = 12.5", "t_end = soon", "chemotaxis = maybe", "grid.nx = 32\n"],
)
def test_malformed_or_duplicate_values(line):
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + line)


def test_line_without_equals():
    with pytest.raises(ConfigError, match="line"):
        parse_config(MINIMAL + "t_end 3\n")


@pytest.mark.parametrize(
    "extra",
    ["t_end = -1", "init.kind = gaussian_bump\ninit.mass = 0", "record_every = 0", "linf_blowup_factor = 1"],
)
def test_invariant_violations(extra):
    doc = MINIMAL.replace("t_end = 0.5\n", "") if extra.startswith("t_end") else MINIMAL
    doc = doc.replace("init.kind = constant\n", "") if extra.startswith("init.kind") else doc
    with pytest.raises(ConfigError):
        parse_config(doc + extra + "\n")


def test_v0_is_ignored_with_notice(caplog):
    with caplog.at_level(logging.WARNING):
        cfg = parse_config(MINIMAL + "v0 = 3.0\n")
    assert cfg == parse_config(MINIMAL)
    assert "v0" in caplog.text


def test_roundtrip_minimal():
    cfg = parse_config(MINIMAL)
    assert parse_config(serialize_config(cfg)) == cfg


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_roundtrip_presets(name):
    cfg = preset_config(name)
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text


@settings(max_examples=40, deadline=None)
@given(
    t_end=st.floats(1e-6, 1e3, allow_nan=False),
    mu=st.floats(1e-6, 1e3),
    r=st.floats(-10, 10),
    p=st.floats(0, 5),
    c_diff=st.floats(1e-3, 1.0),
)
def test_roundtrip_property(t_end, mu, r, p, c_diff):
    cfg = apply_overrides(
        parse_config(MINIMAL),
        {
            "t_end": repr(t_end),
            "source.kind": "sublogistic",
            "source.mu": repr(mu),
            "source.r": repr(r),
            "source.p": repr(p),
            "cfl.c_diff": repr(c_diff),
        },
    )
    assert parse_config(serialize_config(cfg)) == cfg


def test_serialization_covers_every_key():
    text = serialize_config(parse_config(MINIMAL))
    keys = [line.split("=")[0].strip() for line in text.splitlines()]
    assert keys == list(KEYS)


def test_presets_match_documented_scenarios():
    sub = preset_config("subcritical")
    assert sub.grid == GridSpec(256, 256, 2.0, 2.0)
    assert sub.init.mass == pytest.approx(2 * math.pi) and sub.init.sigma == 0.25
    assert sub.source.kind == "none" and sub.t_end == 5.0
    sup = preset_config("supercritical_blowup")
    assert sup.init.mass == pytest.approx(1.5 * 8 * math.pi) and sup.init.sigma == 0.1 and sup.t_end == 1.0
    sl = preset_config("sublogistic_p1")
    assert (sl.source.kind, sl.source.r, sl.source.mu, sl.source.p) == ("sublogistic", 0.0, 0.2, 1.0)
    assert sl.init == sup.init and sl.t_end == 5.0
    lg = preset_config("logistic_control")
    assert (lg.source.kind, lg.source.mu) == ("logistic", 1.0) and lg.init == sup.init


def test_preset_overrides_and_unknowns():
    cfg = preset_config("subcritical", {"grid.nx": "64", "grid.ny": "64"})
    assert cfg.grid.nx == 64
    with pytest.raises(ConfigError):
        preset_config("nonexistent")
    with pytest.raises(ConfigError, match="bogus"):
        preset_config("subcritical", {"bogus": "1"})


def test_bump_is_renormalized_to_mass():
    cfg = preset_config("supercritical_blowup", {"grid.nx": "64", "grid.ny": "64"})
    u0, _ = cfg.initial_field()
    assert integrate(u0) == pytest.approx(12 * math.pi, rel=1e-13)
    assert u0.min() >= 0


def test_cosine_initial_data():
    doc = MINIMAL.replace("init.kind = constant", "init.kind = constant_plus_cosine\ninit.amp = 0.5\ninit.kx = 2")
    u0, _ = parse_config(doc).initial_field()
    # Extremes sit at the first cell center, h/2 from the wall.
    peak = 0.5 * math.cos(2 * math.pi * (0.5 / 32))
    assert u0.max() == pytest.approx(1 + peak, rel=1e-14)
    assert u0.min() == pytest.approx(1 - peak, rel=1e-14)
    with pytest.raises(ConfigError):
        parse_config(doc.replace("init.amp = 0.5", "init.amp = 2.0"))


def test_snapshot_initial_data(tmp_path):
    g = GridSpec(32, 32, 1.0, 1.0)
    path = tmp_path / "s.ksfield"
    write_snapshot(path, ScalarField.constant(g, 2.0), 0.25)
    doc = MINIMAL.replace("init.kind = constant", f"init.kind = snapshot\ninit.path = {path}")
    u0, t0 = parse_config(doc).initial_field()
    assert t0 == 0.25 and np.all(u0.values == 2.0)
    with pytest.raises(ConfigError):
        parse_config(doc.replace("grid.nx = 32", "grid.nx = 16")).initial_field()
    with pytest.raises(ConfigError):
        parse_config(doc.replace("t_end = 0.5", "t_end = 0.1")).initial_field()


def test_load_config_from_file(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text(MINIMAL)
    assert load_config(path) == parse_config(MINIMAL)
