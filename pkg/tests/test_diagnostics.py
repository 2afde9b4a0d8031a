import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kslab.diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    assess_boundedness,
    column,
    differential_inequality_monitor,
    dissipation_integrand,
    lnln_integrand,
    read_csv,
    record,
    write_csv,
)
from kslab.grid import GridSpec, ScalarField
from kslab.sources import g_lnln
from kslab.stepper import SimState


def fake_history(values, key="y_lnln", dt=0.1):
    out = []
    for i, y in enumerate(values):
        fields = dict(step=i, t=i * dt, dt=dt, mass=1.0, linf=1.0, l2=1.0, y_lnln=1.0, dissip=1.0, g_integral=1.0)
        fields[key] = y
        out.append(DiagnosticsRecord(**fields))
    return out


def test_record_on_constant_field():
    g = GridSpec(16, 16, 2.0, 2.0)
    state = SimState.initial(ScalarField.constant(g, 3.0))
    rec = record(state)
    assert rec.mass == pytest.approx(12.0, rel=1e-15)
    assert rec.linf == 3.0
    assert rec.l2 == pytest.approx(6.0, rel=1e-15)
    assert rec.y_lnln == pytest.approx(4 * 3 * math.log(math.log(3 + math.e)), rel=1e-14)
    assert rec.g_integral == rec.y_lnln


def test_integrands_vanish_at_zero_and_are_nonnegative():
    u = np.array([0.0, 1e-300, 1e-8, 1.0, 1e6])
    assert lnln_integrand(u)[0] == 0.0
    assert dissipation_integrand(u)[0] == 0.0
    assert np.all(lnln_integrand(u) >= 0)
    assert np.all(dissipation_integrand(u) >= 0)
    np.testing.assert_array_equal(lnln_integrand(u), g_lnln(u))


def test_dissipation_integrand_closed_form():
    u = math.e**2 - math.e  # ln(u + e) = 2
    assert dissipation_integrand(np.array([u]))[0] == pytest.approx(u * u * math.log(2) / 2, rel=1e-14)


def test_column_rejects_unknown_key():
    with pytest.raises(KeyError):
        column(fake_history([1.0]), "energy")


def test_bounded_when_plateau():
    hist = fake_history(list(np.linspace(0, 5, 20)) + [5.0] * 30)
    rep = assess_boundedness(hist)
    assert rep.bounded and rep.sup == 5.0


def test_unbounded_when_growing():
    rep = assess_boundedness(fake_history(np.linspace(1, 50, 40)))
    assert not rep.bounded
    assert rep.tail_slope > 0


def test_decaying_is_bounded():
    rep = assess_boundedness(fake_history(np.exp(-np.linspace(0, 5, 30))))
    assert rep.bounded and rep.t_sup == 0.0


def test_boundedness_needs_ten_records():
    with pytest.raises(ValueError):
        assess_boundedness(fake_history([1.0] * 9))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1e6), min_size=10, max_size=60))
def test_sup_is_column_max(values):
    rep = assess_boundedness(fake_history(values))
    assert rep.sup == max(values)


def test_inequality_monitor_counts_violations():
    t = np.linspace(0, 1, 21)
    hist = []
    for i, ti in enumerate(t):
        y = 1.0 if ti < 0.5 else 1.0 + 10 * (ti - 0.5) ** 2
        hist.append(DiagnosticsRecord(i, ti, 0.05, 1, 1, 1, y, 0.0, y))
    mon = differential_inequality_monitor(hist, mu=0.2)
    assert mon.c_fit == pytest.approx(1.0)
    assert mon.violations > 0
    assert differential_inequality_monitor(hist[:3], mu=0.2) is None


def test_csv_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(2)
    hist = [DiagnosticsRecord(i, *rng.random(8) * 10.0**rng.integers(-10, 10)) for i in range(5)]
    path = tmp_path / "d.csv"
    write_csv(path, hist)
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_csv(path) == hist


def test_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(path)
