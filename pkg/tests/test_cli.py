"""Command-line front end: verbs, exit codes, CSV shape, trace auditing."""

import csv
import io
import json

from conftest import fig3_oracle_config
from wsnsim.cli import (
    CSV_COLUMNS,
    MEAN_COLUMNS,
    audit_trace,
    main,
    run_experiment,
)
from wsnsim.config import serialize


def parse_kv(text):
    out = {}
    for line in text.splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            out[key] = value
    return out


def test_derive_defaults(capsys):
    assert main(["derive"]) == 0
    sheet = parse_kv(capsys.readouterr().out)
    assert float(sheet["wavelength_m"]) == 0.34538301612903227
    assert float(sheet["max_range_m"]) == 530.8844442309885
    assert float(sheet["data_packet_time_s"]) == 0.00875
    assert float(sheet["tx_energy_per_data_packet_j"]) == 0.0008662500000000002
    assert float(sheet["battery_energy_j"]) == 20304.000000000004
    assert int(sheet["data_packet_bytes"]) == 84
    assert int(sheet["control_packet_bytes"]) == 102
    assert float(sheet["avg_current_a"]) == 0.0235


def test_derive_respects_config(tmp_path, capsys):
    path = tmp_path / "radio.cfg"
    path.write_text("[radio]\nfrequency_hz = 915e6\n[sim]\nsource = 0\nsink = 1\n")
    assert main(["derive", str(path)]) == 0
    sheet = parse_kv(capsys.readouterr().out)
    assert float(sheet["wavelength_m"]) == 0.32764203060109287
    assert main(["derive", "--preset", "fig3"]) == 0
    sheet = parse_kv(capsys.readouterr().out)
    assert abs(float(sheet["max_range_m"]) - 200.0) < 1e-6


def test_simulate_json_and_human(tmp_path, capsys):
    path = tmp_path / "oracle.cfg"
    path.write_text(serialize(fig3_oracle_config()))
    assert main(["simulate", str(path), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["generated"] == 6 and payload["delivered"] == 5
    assert payload["routes"][-1]["path"] == "7-4-8-1-5"
    assert main(["simulate", str(path)]) == 0
    out = capsys.readouterr().out
    assert "generated = 6" in out and "delivered = 5" in out
    assert "path=7-4-8-1-5" in out
    assert "avg_total_j = " in out


def test_simulate_overrides(tmp_path, capsys):
    path = tmp_path / "oracle.cfg"
    path.write_text(serialize(fig3_oracle_config()))
    assert main(["simulate", str(path), "--mode", "aodv", "--seed", "3",
                 "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["generated"] == 6


def test_simulate_trace_then_audit(tmp_path, capsys):
    trace = tmp_path / "run.trace"
    assert main(["simulate", "--preset", "fig3", "--trace", str(trace),
                 "--json"]) == 0
    capsys.readouterr()
    assert main(["audit", str(trace)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("audit ok:")


def test_audit_catches_tampering(tmp_path, capsys):
    trace = tmp_path / "run.trace"
    assert main(["simulate", "--preset", "fig3", "--trace", str(trace),
                 "--json"]) == 0
    capsys.readouterr()
    lines = trace.read_text().splitlines()
    # inflate a delivery: claim one more packet arrived than was sent
    idx = next(i for i, l in enumerate(lines) if " deliver " in l)
    lines.insert(idx, lines[idx].replace("pkt=d7-", "pkt=d7-99"))
    trace.write_text("\n".join(lines) + "\n")
    assert main(["audit", str(trace)]) == 2
    out = capsys.readouterr().out
    assert "audit:" in out
    assert main(["audit", str(tmp_path / "missing.trace")]) == 2


def test_audit_trace_rebuilds_stats():
    from wsnsim.simcore import run
    _, lines = run(fig3_oracle_config(), trace=True)
    assert audit_trace(lines) == []
    # drop the stats line: that is a problem
    assert audit_trace(lines[:-1]) == ["trace has no stats line"]
    # perturb a node summary: books no longer balance
    bad = [l.replace("residual=", "residual=1") if " node_summary " in l else l
           for l in lines]
    assert any("do not balance" in p or "stats mismatch" in p
               for p in audit_trace(bad))


def test_compare_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    path = tmp_path / "oracle.cfg"
    path.write_text(serialize(fig3_oracle_config()))
    assert main(["compare", str(path), "--seeds", "0..2", "--out",
                 str(out)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(CSV_COLUMNS)
    runs = [r for r in rows if r["seed"] != "mean"]
    means = [r for r in rows if r["seed"] == "mean"]
    assert len(runs) == 6 and len(means) == 2  # 3 seeds x 2 modes
    assert {r["mode"] for r in means} == {"aodv", "newaodv"}
    for mean in means:
        sub = [r for r in runs if r["mode"] == mean["mode"]]
        for col in MEAN_COLUMNS:
            expect = sum(float(r[col]) for r in sub) / len(sub)
            assert abs(float(mean[col]) - expect) <= 1e-12 * max(1.0, expect)
    for r in runs:
        assert r["route_sent_counts"] != ""
        assert float(r["delivery_ratio"]) == (float(r["delivered"])
                                              / float(r["generated"]))


def test_compare_seed_list(tmp_path, capsys):
    path = tmp_path / "oracle.cfg"
    path.write_text(serialize(fig3_oracle_config()))
    assert main(["compare", str(path), "--seeds", "1,3", "--modes",
                 "newaodv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["seed"] for r in rows] == ["1", "3", "mean"]


def test_run_experiment_means_match_columns():
    rows = run_experiment(fig3_oracle_config(), seeds=[0, 1], modes=["newaodv"])
    runs = [r for r in rows if r["seed"] != "mean"]
    mean = rows[-1]
    assert mean["seed"] == "mean"
    for col in MEAN_COLUMNS:
        assert mean[col] == sum(r[col] for r in runs) / len(runs)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[sim]\nsource = 0\nbogus = 1\n")
    assert main(["simulate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "config error:" in err and "bad.cfg:3" in err

    invalid = tmp_path / "invalid.cfg"
    invalid.write_text("[radio]\nrange_m = 140\n[sim]\nsource = 0\nsink = 8\n")
    assert main(["simulate", str(invalid)]) == 2
    assert "error:" in capsys.readouterr().err

    assert main(["simulate"]) == 1  # neither config nor preset
    capsys.readouterr()
    assert main(["compare", "--preset", "fig3", "--seeds", "5..2"]) == 1
    capsys.readouterr()
    assert main(["compare", "--preset", "fig3", "--modes", "dsr"]) == 1
    capsys.readouterr()
