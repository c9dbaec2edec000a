import json
import math

import pytest

from lfvm.cli import main
from lfvm.reliability import write_endurance_csv, write_retention_csv


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def ret_csv(tmp_path):
    t = [10.0**k for k in range(5)]
    p = tmp_path / "ret.csv"
    write_retention_csv(p, [(x, 1e-6) for x in t], [(x, 1e-9 * x**0.25) for x in t])
    return p


@pytest.fixture
def end_csv(tmp_path):
    p = tmp_path / "end.csv"
    write_endurance_csv(p, [(10.0**k, 1.0 - 0.05 * k) for k in range(10)])
    return p


def test_pv_loop_csv(capsys):
    code, out, _ = run(["pv-loop"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "v_afe_V,e_V_per_m,p_C_per_m2,switching"
    assert float(lines[-1].split(",")[2]) == 0.0


def test_pv_loop_json_params(tmp_path, capsys):
    p = tmp_path / "lgd.ini"
    p.write_text("[lgd]\nalpha = 1\nbeta = -1.8\nxi = 1\np_scale = 1\ne_scale = 1e8\n")
    code, out, _ = run(["pv-loop", "--params", str(p), "--format", "json"], capsys)
    assert code == 0
    d = json.loads(out)
    assert sum(d["switching"]) == 4


def test_pv_loop_bad_params(tmp_path, capsys):
    p = tmp_path / "lgd.ini"
    p.write_text("[lgd]\nxi = 0\n")
    assert run(["pv-loop", "--params", str(p)], capsys)[0] == 2


def test_fit_retention(ret_csv, capsys):
    code, out, _ = run(["fit", "retention", str(ret_csv)], capsys)
    assert code == 0
    assert json.loads(out)["extrapolated_crossing"] == pytest.approx(1e8, rel=1e-6)


def test_fit_endurance(end_csv, capsys):
    code, out, _ = run(["fit", "endurance", str(end_csv), "--mw0", "1.0"], capsys)
    assert code == 0
    assert json.loads(out)["extrapolated_crossing"] == pytest.approx(1e10, rel=1e-6)


def test_fit_errors(tmp_path, capsys):
    assert run(["fit", "retention", str(tmp_path / "missing.csv")], capsys)[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("cycles,mw_V\n1,1.0\n")
    assert run(["fit", "endurance", str(bad)], capsys)[0] == 1
    cols = tmp_path / "cols.csv"
    cols.write_text("a,b\n1,2\n")
    assert run(["fit", "endurance", str(cols)], capsys)[0] == 2


def test_usage_errors(tmp_path, capsys):
    assert run([], capsys)[0] == 2
    assert run(["nope"], capsys)[0] == 2
    assert run(["array-compare", "--config", str(tmp_path / "none.ini")], capsys)[0] == 2
    assert run(["array-compare", "--parallel", "0"], capsys)[0] == 2
    cfg = tmp_path / "c.ini"
    cfg.write_text("[array]\ntechs = DRAM\n")
    assert run(["array-compare", "--config", str(cfg)], capsys)[0] == 2
    cfg.write_text("[sweep]\nstep = 0.1\n")
    assert run(["idvg", "--config", str(cfg)], capsys)[0] == 2
    cfg.write_text("not an ini")
    assert run(["idvg", "--config", str(cfg)], capsys)[0] == 2


def test_array_compare(capsys):
    code, out, _ = run(["array-compare", "--format", "json"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["claimed_savings"] == {"SRAM6T": 4178.0, "EDRAM2T": 7805.0}
    assert {r["tech"] for r in d["rows"]} == {"SRAM6T", "EDRAM2T", "AF2T1"}


def test_cell_demo(tmp_path, capsys):
    s = tmp_path / "ops.txt"
    s.write_text("WRITE 0 0 1\nREAD 0 0\nHOLD 1\nREAD 0 0\n")
    code, out, _ = run(["cell-demo", str(s)], capsys)
    assert code == 0
    log = json.loads(out)
    assert [r["bit_read"] for r in log] == [None, 1, None, 1]
    s.write_text("WRITE 0 0 7\n")
    assert run(["cell-demo", str(s)], capsys)[0] == 2


def test_idvg_parallel_identical(tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[sweep]\nar = 8, 16\n")
    c1, a, ea = run(["idvg", "--config", str(cfg)], capsys)
    c2, b, eb = run(["idvg", "--config", str(cfg), "--parallel", "2"], capsys)
    assert c1 == c2 == 0
    assert a == b and ea == eb
    assert ea.splitlines()[0] == "ar,mw_V,on_off,v_th_p_V,v_th_e_V"


def test_out_file(tmp_path, capsys):
    o = tmp_path / "a.csv"
    assert run(["array-compare", "--out", str(o)], capsys)[0] == 0
    assert o.read_text().startswith("n_bits,rows,tech")
