import shutil
from pathlib import Path

import pytest

from ceitplots import FigureSpec, SchemaError, Table, render
from ceitplots.cli import main

DATA = Path(__file__).parent / "data"

FIGURE_INPUTS = {
    "fig2": ["spectrum_nth1.csv"],
    "fig3a": ["compare.csv"],
    "fig3b": ["compare.csv"],
    "fig4": ["multiion.csv", "multiion_calibration.csv"],
    "fig5a": ["spectrum_nth05.csv", "spectrum_nth1.csv"],
    "fig5b": ["calibration.csv"],
    "fig6": ["sideband_ratio.csv"],
    "fig7": ["sideband_trace_rabi.csv"],
    "fig8": ["sideband_trace_cool.csv", "sideband_trace_heat.csv"],
    "appendixA": ["map2d.csv"],
}

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize("figure_id", sorted(FIGURE_INPUTS))
def test_every_figure_renders(figure_id, tmp_path):
    inputs = tuple(str(DATA / name) for name in FIGURE_INPUTS[figure_id])
    out = tmp_path / f"{figure_id}.png"
    spec = FigureSpec(figure_id, inputs, str(out))
    assert render(spec) == str(out)
    blob = out.read_bytes()
    assert blob.startswith(PNG_MAGIC)
    assert len(blob) > 2000


def test_fig4_renders_without_optional_calibration(tmp_path):
    out = tmp_path / "fig4.png"
    render(FigureSpec("fig4", (str(DATA / "multiion.csv"),), str(out)))
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_unknown_figure_id_rejected(tmp_path):
    with pytest.raises(SchemaError, match="unknown figure id"):
        FigureSpec("fig99", (str(DATA / "calibration.csv"),), str(tmp_path / "x.png"))


def test_missing_input_file_rejected(tmp_path):
    spec = FigureSpec("fig2", (str(tmp_path / "absent.csv"),), str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="does not exist"):
        render(spec)


def test_schema_mismatch_names_the_column(tmp_path):
    src = (DATA / "calibration.csv").read_text().splitlines()
    header = src[0].split(",")
    header.remove("fwhm_mhz")
    keep = [",".join(line.split(",")[:3]) for line in src[1:]]
    broken = tmp_path / "broken.csv"
    broken.write_text(",".join(header) + "\n" + "\n".join(keep) + "\n")
    spec = FigureSpec("fig5b", (str(broken),), str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="fwhm_mhz"):
        render(spec)


def test_wrong_csv_for_figure_is_rejected(tmp_path):
    spec = FigureSpec("fig7", (str(DATA / "calibration.csv"),),
                      str(tmp_path / "x.png"))
    with pytest.raises(SchemaError, match="time_us"):
        render(spec)


def test_table_parses_empty_fields_as_nan(tmp_path):
    p = tmp_path / "gaps.csv"
    p.write_text("a,b\n1.0,\n2.0,3.0\n")
    table = Table(p)
    import math
    assert math.isnan(table.columns["b"][0])
    assert table.columns["b"][1] == 3.0


def test_cli_round_trip(tmp_path):
    out = tmp_path / "fig2.png"
    code = main(["fig2", str(DATA / "spectrum_nth1.csv"), "--out", str(out)])
    assert code == 0
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_cli_schema_error_exit_code(tmp_path):
    out = tmp_path / "fig.png"
    code = main(["fig7", str(DATA / "calibration.csv"), "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_no_interpolation_of_missing_inputs(tmp_path):
    # renderer must fail rather than fill in data when an input is lost
    partial = tmp_path / "copy.csv"
    shutil.copy(DATA / "multiion.csv", partial)
    spec = FigureSpec("fig4", (str(partial), str(tmp_path / "gone.csv")),
                      str(tmp_path / "x.png"))
    with pytest.raises(SchemaError):
        render(spec)
