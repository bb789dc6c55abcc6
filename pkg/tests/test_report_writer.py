# tests/test_report_writer.py

import json

from src.utils.report_writer import SCHEMA_VERSION, bracketed, render_csv, render_json, write_text

def test_render_json_is_deterministic():
    """Test sorted keys, the schema version and the trailing newline."""
    text = render_json({"b": 1, "a": [float("inf"), float("nan"), 0.5]})

    assert text.endswith("}\n")
    assert text == render_json({"a": [float("inf"), float("nan"), 0.5], "b": 1})
    data = json.loads(text)
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["a"] == ["+inf", None, 0.5]
    assert list(data) == ["a", "b", "schema_version"]

def test_bracketed():
    """Test the exact-value bracket."""
    assert bracketed(0.5) == {"value": 0.5, "lower": 0.5, "upper": 0.5}
    assert bracketed(float("inf"))["upper"] == "+inf"

def test_render_csv():
    """Test the header, the quoting and the encoding of infinities."""
    text = render_csv([{"quantity": "modulus:g", "value": float("inf"), "note": "a, b"}],
                      columns=["quantity", "value", "note"])

    assert text == 'quantity,value,note\nmodulus:g,+inf,"a, b"\n'

def test_render_csv_header_only():
    """Test that no rows still give a header line."""
    assert render_csv([], columns=["axis", "value"]) == "axis,value\n"

def test_write_text(tmp_path, capsys):
    """Test writing to a nested path and to stdout."""
    out = tmp_path / "reports" / "r.json"
    write_text("{}\n", out)
    assert out.read_text() == "{}\n"

    write_text("hello\n", None)
    assert capsys.readouterr().out == "hello\n"
