import numpy as np
import pytest

from inelastic_hermite.basis import ExpansionCenter, SpectralState, n_basis
from inelastic_hermite.config import PhysicalScales
from inelastic_hermite.output import FIELDS, emit_snapshot, header, read_snapshot_csv, snapshot_rows
from inelastic_hermite.transport import GridField


def test_state_row():
    rows = snapshot_rows(SpectralState.maxwellian(3, rho=2.0), 0.5)
    assert rows == [[0.5, 2.0, 0, 0, 0, 1.0] + [0.0] * 8]
    assert header(0) == ["t"] + FIELDS


def test_grid_rows_and_append(tmp_path):
    cells = np.zeros((4, 4, n_basis(3)))
    cells[..., 0] = 1.0
    g = GridField.from_cells(cells, 0.25, 0.25)
    p = tmp_path / "s.csv"
    emit_snapshot(g, 0.0, p)
    emit_snapshot(g, 0.1, p, append=True)
    head, data = read_snapshot_csv(p)
    assert head == header(2)
    assert data.shape == (32, 2 + 1 + len(FIELDS))
    assert np.all(data[:16, 0] == 0.0) and np.all(data[16:, 0] == 0.1)
    assert data[0, 1] == pytest.approx(0.125) and data[1, 2] == pytest.approx(0.375)


def test_redimensionalization(tmp_path):
    sc = PhysicalScales.argon()
    s = SpectralState.maxwellian(2, center=ExpansionCenter((0.1, 0, 0), 1.0))
    p = emit_snapshot(s, 1.0, tmp_path / "a.csv", sc)
    head, data = read_snapshot_csv(p)
    row = dict(zip(head, data[0]))
    assert row["theta"] == pytest.approx(273.0)
    assert row["rho"] == pytest.approx(sc.rho0)
    assert row["u1"] == pytest.approx(0.1 * sc.u0)
    assert row["t"] == pytest.approx(sc.t0)


def test_full_precision(tmp_path):
    c = np.zeros(n_basis(2))
    c[0] = 1 / 3
    p = emit_snapshot(SpectralState(c), 0.0, tmp_path / "p.csv")
    assert read_snapshot_csv(p)[1][0, 1] == 1 / 3


def test_rejects_unknown_object(tmp_path):
    with pytest.raises(TypeError):
        emit_snapshot(np.zeros(4), 0.0, tmp_path / "x.csv")
