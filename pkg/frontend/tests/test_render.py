import os

import numpy as np
import pytest
from PIL import Image

from eisenplots.cli import main
from eisenplots.render import FigureSpec, SchemaError, read_table, render

HERE = os.path.dirname(__file__)
DATA = os.path.join(HERE, "data")
GOLDEN = os.path.join(HERE, "golden")


def data(name):
    return os.path.join(DATA, name)


def assert_matches_golden(path, golden_name, tol=2.0):
    """Pixel comparison with tolerance (mean abs channel difference)."""
    golden_path = os.path.join(GOLDEN, golden_name)
    got = np.asarray(Image.open(path).convert("RGB"), dtype=float)
    want = np.asarray(Image.open(golden_path).convert("RGB"), dtype=float)
    assert got.shape == want.shape
    assert float(np.mean(np.abs(got - want))) <= tol


def test_read_table_schema():
    table = read_table(data("decay.csv"))
    ts, ds = table.series("D")
    assert len(ts) == 3 and np.all(ds > 0)


def test_decay_figure_golden(tmp_path):
    out = str(tmp_path / "decay.png")
    render(FigureSpec(csv=data("decay.csv"), kind="decay", out=out,
                      manifest=data("decay_manifest.json")))
    assert_matches_golden(out, "decay.png")


def test_trace_figure_golden(tmp_path):
    out = str(tmp_path / "trace.png")
    render(FigureSpec(csv=data("trace.csv"), kind="trace", out=out,
                      manifest=data("trace_manifest.json")))
    assert_matches_golden(out, "trace.png")


def test_counting_figure_golden(tmp_path):
    out = str(tmp_path / "counting.png")
    render(FigureSpec(csv=data("counting.csv"), kind="counting", out=out,
                      manifest=data("counting_manifest.json")))
    assert_matches_golden(out, "counting.png")


def test_render_deterministic(tmp_path):
    spec1 = FigureSpec(csv=data("decay.csv"), kind="decay",
                       out=str(tmp_path / "a.png"), manifest=data("decay_manifest.json"))
    spec2 = FigureSpec(csv=data("decay.csv"), kind="decay",
                       out=str(tmp_path / "b.png"), manifest=data("decay_manifest.json"))
    render(spec1)
    render(spec2)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_svg_output(tmp_path):
    out = str(tmp_path / "decay.svg")
    render(FigureSpec(csv=data("decay.csv"), kind="decay", out=out))
    assert os.path.getsize(out) > 1000


def test_schema_mismatch_errors(tmp_path):
    with pytest.raises(SchemaError):
        render(FigureSpec(csv=data("decay.csv"), kind="trace",
                          out=str(tmp_path / "x.png")))
    bad = tmp_path / "empty.csv"
    bad.write_text("t,name,value,error\n")
    with pytest.raises(SchemaError):
        read_table(str(bad))
    with pytest.raises(SchemaError):
        FigureSpec(csv=data("decay.csv"), kind="nope", out="x.png")
    with pytest.raises(SchemaError):
        FigureSpec(csv=data("decay.csv"), kind="decay", out="x.pdf")


def test_cli_spec_file(tmp_path, capsys):
    spec = tmp_path / "fig.spec"
    out = tmp_path / "out.png"
    spec.write_text(
        f"csv = {data('trace.csv')}\nkind = trace\nout = {out}\n"
        f"manifest = {data('trace_manifest.json')}\n"
    )
    assert main(["render", "--spec", str(spec)]) == 0
    assert out.exists()


def test_cli_positional(tmp_path):
    out = tmp_path / "c.png"
    assert main([data("counting.csv"), "counting", "--out", str(out),
                 "--manifest", data("counting_manifest.json")]) == 0
    assert out.exists()


def test_cli_schema_error_exit(tmp_path):
    out = tmp_path / "bad.png"
    assert main([data("decay.csv"), "trace", "--out", str(out)]) == 1


def test_cli_usage_error():
    assert main([]) == 2
