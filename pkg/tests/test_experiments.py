import math

import pytest

from kslab.config import CflParams, InitSpec, SimConfig
from kslab.diagnostics import column, read_csv
from kslab.experiments import (
    SUMMARY_COLUMNS,
    TIMING_KEYS,
    format_refinement,
    read_summary,
    refinement_study,
    run_preset,
)
from kslab.grid import GridSpec

SMALL = {"grid.nx": "32", "grid.ny": "32", "t_end": "0.02", "record_every": "10", "snapshot_every": "40"}


def test_preset_artifacts_and_summary_crosscheck(tmp_path):
    out = run_preset("sublogistic_p1", SMALL, tmp_path / "run")
    files = {p.name for p in (tmp_path / "run").iterdir()}
    assert {"config.txt", "diagnostics.csv", "summary.txt"} <= files
    assert any(name.endswith(".ksfield") for name in files)
    summary = read_summary(tmp_path / "run" / "summary.txt")
    history = read_csv(tmp_path / "run" / "diagnostics.csv")
    assert summary["verdict"] == out.result.verdict.kind == "none"
    assert summary["preset"] == "sublogistic_p1"
    for key in SUMMARY_COLUMNS:
        assert float(summary[f"sup_{key}"]) == column(history, key).max()
    assert float(summary["wall_time"]) >= 0


def test_preset_outputs_bit_identical(tmp_path):
    run_preset("supercritical_blowup", {"grid.nx": "32", "grid.ny": "32", "snapshot_every": "25"}, tmp_path / "a")
    run_preset("supercritical_blowup", {"grid.nx": "32", "grid.ny": "32", "snapshot_every": "25"}, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        if name == "summary.txt":
            strip = lambda text: [l for l in text.decode().splitlines() if l.split(" = ")[0] not in TIMING_KEYS]
            assert strip(a) == strip(b)
        else:
            assert a == b, name


def test_preset_in_memory():
    out = run_preset("subcritical", SMALL, write=False)
    assert out.out_dir is None
    assert out.result.final_state.t == 0.02


def test_refinement_pure_diffusion_order():
    cfg = SimConfig(
        grid=GridSpec(16, 16, 1.0, 1.0),
        t_end=0.02,
        init=InitSpec("constant_plus_cosine", base=1.0, amp=0.5, kx=1, ky=1),
        cfl=CflParams(c_diff=0.9),
        record_every=1000,
        chemotaxis=False,
    )
    table = refinement_study(cfg, 3)
    assert [r.nx for r in table] == [16, 32, 64]
    assert all(r.verdict == "none" for r in table)
    assert table[0].order >= 0.9
    assert table[-1].error == 0.0 and math.isnan(table[-1].order)
    assert "order" in format_refinement(table)


def test_refinement_requires_two_levels():
    cfg = SimConfig(grid=GridSpec(16, 16, 1.0, 1.0), t_end=0.01)
    with pytest.raises(ValueError):
        refinement_study(cfg, 1)


def test_refinement_writes_level_directories(tmp_path):
    cfg = SimConfig(grid=GridSpec(16, 16, 1.0, 1.0), t_end=0.005, record_every=50)
    refinement_study(cfg, 2, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["level_0_16x16", "level_1_32x32"]
