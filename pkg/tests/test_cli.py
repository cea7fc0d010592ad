import csv
import io
import json

import jsonschema
import pytest

from bvlgcy.cli import main, output_schema, run


def _json(argv):
    code, text = run(argv)
    return code, json.loads(text) if text.startswith("{") else text


def _valid(doc):
    jsonschema.validate(doc, output_schema())


def test_state_space_gw_diamond():
    code, d = _json(["state-space", "--k3", "3,1,1,1", "--curve", "quartic", "--theory", "gw"])
    assert code == 0
    _valid(d)
    assert d["diamond"]["h11"] == 6 and d["diamond"]["h21"] == 60
    assert d["total"] == 136
    assert d["weights"] == [3, 1, 1, 1] and d["precision_bits"] == 256


def test_state_space_fjrw_total():
    code, d = _json(["state-space", "--theory", "fjrw", "--k3", "6,3,2,1"])
    assert code == 0 and d["total"] == 112
    _valid(d)


def test_state_space_narrow_labels():
    code, d = _json(["state-space", "--theory", "fjrw", "--narrow", "--k3", "5,2,2,1"])
    assert code == 0 and len(d["basis"]) == 12
    assert "J1^2J2^4" in {e["label"] for e in d["basis"]} or \
        any("J1^2" in e["label"] and "J2^4" in e["label"] for e in d["basis"])
    _valid(d)


@pytest.mark.parametrize("theory", ["mixed-fg", "mixed-gf"])
def test_state_space_mixed(theory):
    code, d = _json(["state-space", "--theory", theory])
    assert code == 0
    _valid(d)


def test_i_function_fjrw_unit():
    code, d = _json(["i-function", "--theory", "fjrw", "--max-deg", "1"])
    assert code == 0
    _valid(d)
    unit = [t for t in d["terms"] if t["z_exponent"] == 1]
    assert unit[0]["coefficient"][0]["rational"] == "13824/1"
    assert unit[0]["coefficient"][0]["sector"] == "φ(J1J2)"


def test_i_function_gw_leading():
    code, d = _json(["i-function", "--theory", "gw", "--max-deg", "1"])
    assert code == 0
    _valid(d)
    t0 = d["terms"][0]
    assert t0["index"][:3] == [0, 0, 0]
    assert t0["coefficient"] == [{"sector": "1_0", "dE_pow": 0, "dK_pow": 0, "z_pow": 1,
                                  "rational": "1/1"}]


def test_i_function_z_order_drops():
    _, full = _json(["i-function", "--max-deg", "2", "--z-order", "4"])
    _, cut = _json(["i-function", "--max-deg", "2", "--z-order", "1"])
    assert cut["metadata"]["dropped_monomials"] > full["metadata"]["dropped_monomials"]
    assert all(c["z_pow"] >= 0 for t in cut["terms"] for c in t["coefficient"])


def test_determinism():
    argv = ["i-function", "--theory", "mixed-gf", "--max-deg", "2"]
    assert run(argv) == run(argv)


@pytest.mark.parametrize("check", ["homogeneity", "oracle", "symplectic", "statespace-iso"])
def test_verify_checks(check):
    code, d = _json(["verify", "--check", check, "--max-deg", "2"])
    assert code == 0 and d["passed"]
    _valid(d)


def test_verify_symplectic_seed_control():
    a = _json(["verify", "--check", "symplectic", "--seed", "3"])[1]
    b = _json(["verify", "--check", "symplectic", "--seed", "3"])[1]
    assert a == b
    assert [x["item"] for x in a["details"]] == ["U_E", "U_K", "U_both"]
    assert all(x["negative_control"]["detected"] for x in a["details"])
    c = _json(["verify", "--check", "symplectic", "--seed", "4"])[1]
    assert [x["negative_control"] for x in c["details"]] != [x["negative_control"] for x in a["details"]]


def test_exit_codes(capsys):
    assert run(["state-space", "--k3", "4,1,1,1"])[0] == 2
    assert run(["state-space", "--k3", "3,1,1"])[0] == 2
    assert run(["verify", "--check", "continuation", "--point", "-1"])[0] == 2
    assert run(["verify", "--check", "continuation", "--curve", "cubic-sextic"])[0] == 4
    assert run(["verify", "--check", "symplectic", "--k3", "6,3,2,1"])[0] == 0  # E side only
    with pytest.raises(SystemExit) as e:
        run(["state-space", "--theory", "nope"])
    assert e.value.code == 2
    assert main(["state-space", "--k3", "4,1,1,1"]) == 2
    assert "error" in capsys.readouterr().err


def test_yaml_config(tmp_path):
    cfg = tmp_path / "run.yaml"
    out = tmp_path / "out.csv"
    cfg.write_text(f"""
orbifold: {{curve: quartic, k3: [6, 3, 2, 1]}}
truncation: {{novikov_degree: 1, z_order: 4}}
precision_bits: 128
output: {{format: csv, path: {out}}}
""")
    code, text = run(["state-space", "--config", str(cfg), "--theory", "fjrw"])
    assert code == 0 and text == ""
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["label", "degree", "sector", "flag"]
    # flags override the file
    code, d = _json(["state-space", "--config", str(cfg), "--format", "json", "--out", "",
                     "--k3", "3,1,1,1"])
    assert d["weights"] == [3, 1, 1, 1] and d["precision_bits"] == 128


def test_bad_config(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("- just\n- a list\n")
    assert run(["state-space", "--config", str(p)])[0] == 2
    assert run(["state-space", "--config", str(tmp_path / "missing.yaml")])[0] == 2


def test_table_format():
    code, text = run(["verify", "--check", "homogeneity", "--max-deg", "1", "--format", "table"])
    assert code == 0 and text.startswith("check homogeneity: passed")
