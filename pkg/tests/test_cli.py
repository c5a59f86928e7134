import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fixtures import semeraro_market, vgpp_model
from levy_exchange import cli
from levy_exchange.calibration import synthetic_snapshot
from levy_exchange.errors import DomainError
from levy_exchange.gammapp import GammaPPParams
from levy_exchange.models import MarginalVGppParams
from levy_exchange.pricing_closed import ExchangeContract, price_exchange_closed
from levy_exchange.serialization import (DataError, dumps, fmt, load_market, load_model,
                                         save_market, save_model)

CONTRACT = "s1=100,s2=105,T=1"


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model.json"
    save_model(vgpp_model(0.3), str(path))
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parsers():
    assert cli.parse_contract("s1=1,s2=2,T=0.5") == {"s1_0": 1.0, "s2_0": 2.0, "maturity_T": 0.5,
                                                    "strike_K": 0.0}
    for bad in ("s1=1,s2=2", "s1=1,s2=2,T=x", "s1=1,s2=2,T=1,Q=3", "s1"):
        with pytest.raises(cli.UsageError):
            cli.parse_contract(bad)
    assert cli.parse_methods("closed, mc") == ["closed", "mc"]
    with pytest.raises(cli.UsageError):
        cli.parse_methods(" , ")
    with pytest.raises(cli.UsageError):
        cli.parse_methods("closed,magic")
    name, vals = cli.parse_sweep("a=0.1:0.5:5")
    assert name == "a" and vals == [0.1, 0.2, 0.3, 0.4, 0.5]
    for bad in ("a=0.1:0.5", "a0.1:0.5:3", "a=x:1:3", "a=0:1:0"):
        with pytest.raises(cli.UsageError):
            cli.parse_sweep(bad)


def test_fmt_round_trips():
    for x in (0.1, 1e-300, 10.224901106, -3.5e17):
        assert float(fmt(x)) == x
    assert fmt(None) == "" and fmt(True) == "true" and fmt(np.int64(3)) == "3"
    assert json.loads(dumps({"b": np.float64(0.1), "a": np.arange(2)})) == {"a": [0, 1], "b": 0.1}


def test_price_command(tmp_path, model_file):
    out = tmp_path / "p.csv"
    code = cli.main(["price", "--model", model_file, "--contract", CONTRACT,
                     "--methods", "closed,fourier,mc", "--paths", "200000", "--out", str(out)])
    assert code == cli.EXIT_OK
    rows = read_rows(out)
    assert [r["method"] for r in rows] == ["closed", "fourier", "mc"]
    ref = price_exchange_closed(ExchangeContract(100.0, 105.0, 1.0), vgpp_model(0.3)).price
    assert float(rows[0]["price"]) == ref
    assert rows[0]["std_error"] == ""
    mc = rows[2]
    assert abs(float(mc["price"]) - ref) <= 4 * float(mc["std_error"])
    assert json.loads(rows[2]["diagnostics"])["n_paths"] == 200000
    assert float(rows[0]["runtime"]) >= 0.0


def test_price_output_is_byte_reproducible(tmp_path, model_file):
    outs = []
    for k in range(2):
        out = tmp_path / f"p{k}.csv"
        cli.main(["price", "--model", model_file, "--contract", CONTRACT, "--methods", "closed,mc",
                  "--paths", "100000", "--seed", "7", "--no-timing", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_compare_command(tmp_path, model_file):
    out = tmp_path / "c.csv"
    code = cli.main(["compare", "--model", model_file, "--contract", CONTRACT,
                     "--methods", "closed,fourier,mc", "--sweep", "a=0.2:0.6:3", "--unit-mean",
                     "--paths", "100000", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert list(rows[0]) == ["a", "closed", "fourier", "mc", "mc_se"]
    assert [float(r["a"]) for r in rows] == [0.2, 0.4, 0.6]
    for r in rows:
        a = float(r["a"])
        ref = price_exchange_closed(ExchangeContract(100.0, 105.0, 1.0), vgpp_model(a)).price
        assert float(r["closed"]) == pytest.approx(ref, rel=1e-14)
        assert abs(float(r["fourier"]) - ref) < 1e-4


def test_compare_contract_sweep(tmp_path, model_file):
    out = tmp_path / "c.csv"
    cli.main(["compare", "--model", model_file, "--contract", CONTRACT, "--methods", "closed",
              "--sweep", "s2=90:110:3", "--out", str(out)])
    rows = read_rows(out)
    assert [float(r["s2"]) for r in rows] == [90.0, 100.0, 110.0]
    assert float(rows[0]["closed"]) < float(rows[2]["closed"])
    code = cli.main(["compare", "--model", model_file, "--contract", CONTRACT, "--methods", "closed",
                     "--sweep", "zeta=0:1:2", "--out", str(out)])
    assert code == cli.EXIT_USAGE


def test_simulate_command(tmp_path, model_file):
    out = tmp_path / "s.csv"
    assert cli.main(["simulate", "--model", model_file, "--times", "0.5,1", "--paths", "10",
                     "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 20
    assert list(rows[0]) == ["path", "t", "y1", "y2"]
    assert cli.main(["simulate", "--model", model_file, "--times", "a,b", "--paths", "10",
                     "--out", str(out)]) == cli.EXIT_USAGE


def test_calibrate_command(tmp_path):
    m = MarginalVGppParams(-0.27, 0.98, GammaPPParams(0.0, 2.04, 2.04))
    rng = np.random.default_rng(0)
    z = rng.standard_normal((500, 2))
    snap = synthetic_snapshot([m, m], 0.015, [50.0, 52.0],
                              returns=np.column_stack([z[:, 0], 0.9 * z[:, 0] + 0.3 * z[:, 1]]))
    market = tmp_path / "market"
    save_market(snap, str(market))
    back = load_market(str(market), rate=0.015)
    assert np.array_equal(back.forwards, snap.forwards)
    assert np.array_equal(back.quotes[1], snap.quotes[1])
    assert back.empirical_correlation() == pytest.approx(snap.empirical_correlation(), rel=1e-14)
    out = tmp_path / "fit.json"
    code = cli.main(["calibrate", "--market", str(market), "--kind", "VG", "--rate", "0.015",
                     "--target", "0.96", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["model"]["kind"] == "VG"
    assert doc["correlation_residual"] < 1e-12
    assert doc["marginal_params"][0]["sigma"] == pytest.approx(0.98, rel=1e-3)


def test_exit_codes(tmp_path, model_file, capsys):
    out = str(tmp_path / "x.csv")
    assert cli.main(["price", "--model", model_file, "--contract", CONTRACT, "--methods", "",
                     "--out", out]) == cli.EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "VG",\n "rate": }')
    assert cli.main(["price", "--model", str(bad), "--contract", CONTRACT, "--out", out]) == cli.EXIT_DATA
    assert f"{bad}:2:" in capsys.readouterr().err
    inadmissible = tmp_path / "inad.json"
    d = vgpp_model(0.3).to_dict()
    d["theta"] = [3.0, -0.1]
    inadmissible.write_text(json.dumps(d))
    assert cli.main(["price", "--model", str(inadmissible), "--contract", CONTRACT,
                     "--out", out]) == cli.EXIT_DATA
    assert "beta - (theta + sigma^2/2) > 0" in capsys.readouterr().err
    assert cli.main(["price", "--model", str(tmp_path / "none.json"), "--contract", CONTRACT,
                     "--out", out]) == cli.EXIT_DATA
    # closed pricer for a model with no closed form
    sem = tmp_path / "sem.json"
    save_model(semeraro_market(), str(sem))
    assert cli.main(["price", "--model", str(sem), "--contract", CONTRACT, "--methods", "closed",
                     "--out", out]) == cli.EXIT_DATA
    tiny = tmp_path / "tiny.json"
    save_model(vgpp_model(1e-6), str(tiny))
    assert cli.main(["price", "--model", str(tiny), "--contract", CONTRACT, "--methods", "closed",
                     "--out", out]) == cli.EXIT_NUMERICAL
    assert "cap" in capsys.readouterr().err


def test_market_errors(tmp_path):
    d = tmp_path / "m"
    d.mkdir()
    (d / "forwards.csv").write_text("date,product,price\n2020-01-01,A,50\n2020-01-02,A,oops\n")
    (d / "quotes.csv").write_text("product,maturity,strike,mid\n")
    with pytest.raises(DataError, match=":3:3:"):
        load_market(str(d))
    (d / "forwards.csv").write_text("date,product\n")
    with pytest.raises(DataError, match="missing column"):
        load_market(str(d))
    (d / "forwards.csv").write_text("date,product,price\n2020-01-01,A,50\n")
    (d / "quotes.csv").write_text("product,maturity,strike,mid\nB,1,50,2\n")
    with pytest.raises(DataError, match="no forward"):
        load_market(str(d))
    assert issubclass(DataError, DomainError)


def test_model_file_errors(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("[1, 2]")
    with pytest.raises(DataError):
        load_model(str(p))


def test_module_entry_point(tmp_path, model_file):
    out = tmp_path / "p.csv"
    proc = subprocess.run([sys.executable, "-m", "levy_exchange.cli", "price", "--model", model_file,
                           "--contract", CONTRACT, "--methods", "closed", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert read_rows(out)[0]["method"] == "closed"
    proc = subprocess.run([sys.executable, "-m", "levy_exchange.cli", "price"], capture_output=True)
    assert proc.returncode == 2
