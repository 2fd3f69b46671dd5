import csv
import io
import subprocess
import sys

import pytest

from csach.cli import BENCH_FIELDS, main
from csach.graph import dump_dimacs, gen_random_graph
from csach.hierarchy import build_ch, serialize_ch

from conftest import DIAMOND_DIMACS


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


def rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def dia_gr(tmp_path):
    p = tmp_path / "dia.gr"
    p.write_text(DIAMOND_DIMACS)
    return p


@pytest.fixture
def dia_ch(tmp_path, dia_gr):
    out = tmp_path / "dia.ch"
    assert run("preprocess", dia_gr, "--ordering", "by-node-id", "--out", out)[0] == 0
    return out


def test_preprocess_diamond(tmp_path, dia_gr):
    code, text = run("preprocess", dia_gr, "--ordering", "by-node-id", "--out", tmp_path / "x.ch")
    assert code == 0
    header, row = rows(text)
    summary = dict(zip(header, row))
    assert (summary["nodes"], summary["arcs"], summary["shortcuts"]) == ("4", "5", "0")
    assert (tmp_path / "x.ch").read_text().startswith("ch 1 4 5 5\n")


def test_preprocess_chain_explicit_ranks(tmp_path):
    g = tmp_path / "chain.gr"
    g.write_text("p sp 3 2\na 1 2 1\na 2 3 1\n")
    code, text = run("preprocess", g, "--ordering", "2,0,1", "--out", tmp_path / "c.ch")
    assert code == 0
    assert dict(zip(*rows(text)))["shortcuts"] == "1"
    assert "s 1 3 2 2" in (tmp_path / "c.ch").read_text()


def test_preprocess_missing_file(tmp_path, capsys):
    code, text = run("preprocess", tmp_path / "nope.gr", "--out", tmp_path / "o.ch")
    assert code != 0 and text == ""
    assert "cannot read" in capsys.readouterr().err


def test_preprocess_malformed(tmp_path, capsys):
    g = tmp_path / "bad.gr"
    g.write_text("a 1 2 5\n")
    assert run("preprocess", g, "--out", tmp_path / "o.ch")[0] != 0
    assert "line 1" in capsys.readouterr().err


@pytest.mark.parametrize("algo", ["csa-ch", "bidir-dijkstra-ch", "csa-ch-m2m", "dijkstra"])
def test_query_diamond(dia_ch, algo):
    code, text = run("query", dia_ch, "--from", "1", "--to", "4", "--algo", algo, "--paths")
    assert code == 0
    assert text.splitlines() == ["source,target,distance,path", "1,4,2.5,1->3->4"]


def test_query_lists_and_same_node(dia_ch):
    code, text = run("query", dia_ch, "--from", "1,3", "--to", "2", "3")
    assert code == 0
    assert text.splitlines()[1:] == ["1,2,1.5", "1,3,0.5", "3,2,1", "3,3,0"]


def test_query_unreachable(dia_ch):
    code, text = run("query", dia_ch, "--from", "4", "--to", "1", "--paths")
    assert code == 0 and text.splitlines()[1] == "4,1,inf,"


def test_query_unknown_node(dia_ch, capsys):
    code, text = run("query", dia_ch, "--from", "1", "--to", "5")
    assert code != 0
    assert "unknown node 5" in capsys.readouterr().err


def test_query_tolerance_flag(dia_ch):
    assert run("--tolerance", "1e-6", "query", dia_ch, "--from", "1", "--to", "4")[1].splitlines()[1] == "1,4,2.5"


def test_verify_default_suite():
    code, text = run("verify")
    table = rows(text)
    assert code == 0
    assert table[0][:8] == ["instance", "ordering", "nodes", "arcs", "shortcuts", "pairs", "mismatches", "status"]
    assert len(table) == 1 + 2 * 3 * 2
    assert all(r[7] == "pass" for r in table[1:])


def test_verify_single_node_vacuous():
    code, text = run("verify", "--sizes", "1", "--seeds", "0")
    assert code == 0
    assert all(r[7] == "pass" and r[2] == "1" for r in rows(text)[1:])


def test_verify_graph_file(dia_gr):
    code, text = run("verify", dia_gr)
    assert code == 0 and len(rows(text)) == 3


def test_verify_corrupted_ch(tmp_path):
    ch = build_ch(gen_random_graph(20, 100, 3), "input-order")
    assert ch.shortcut_count > 0
    lines = serialize_ch(ch).splitlines()
    # drop every shortcut and patch the header so the file still parses
    kept = [l for l in lines if not l.startswith("s ")]
    kept[0] = f"ch 1 20 {ch.base.arc_count} {ch.base.arc_count}"
    bad = tmp_path / "bad.ch"
    bad.write_text("\n".join(kept) + "\n")
    code, text = run("verify", bad)
    row = rows(text)[1]
    assert code == 1
    assert row[7] == "fail" and int(row[6]) > 0 and "->" in row[8]
    # and the intact file passes
    good = tmp_path / "good.ch"
    good.write_text(serialize_ch(ch))
    assert run("verify", good)[0] == 0


def test_bench_records(tmp_path):
    g = tmp_path / "g.gr"
    g.write_text(dump_dimacs(gen_random_graph(40, 200, 1)))
    code, text = run("bench", g, "--pairs", "6", "--seed", "3")
    table = rows(text)
    assert code == 0
    assert tuple(table[0]) == BENCH_FIELDS
    body = [dict(zip(table[0], r)) for r in table[1:]]
    assert len(body) == 24
    assert [r["pair"] for r in body] == [str(i) for i in range(6) for _ in range(4)]
    assert {r["algorithm"] for r in body} == {"dijkstra", "bidir-dijkstra-ch", "csa-ch", "csa-ch-m2m"}
    ch = build_ch(gen_random_graph(40, 200, 1))
    for i in range(0, 24, 4):
        assert len({float(r["distance"]) for r in body[i:i + 4]}) == 1
    for r in body:
        assert int(r["wall_ns"]) >= 0
        if r["algorithm"].startswith("csa"):
            assert int(r["arcs_scanned"]) <= ch.scan.up_count + ch.scan.down_count


def test_bench_deterministic_without_timing(tmp_path):
    g = tmp_path / "g.gr"
    g.write_text(dump_dimacs(gen_random_graph(30, 150, 2)))
    a = run("bench", g, "--pairs", "5", "--seed", "9", "--no-timing")[1]
    b = run("bench", g, "--pairs", "5", "--seed", "9", "--no-timing")[1]
    assert a == b


def test_bench_zero_pairs(dia_gr):
    code, text = run("bench", dia_gr, "--pairs", "0")
    assert code == 0 and text == ",".join(BENCH_FIELDS) + "\n"


def test_bench_negative_pairs(dia_gr):
    assert run("bench", dia_gr, "--pairs", "-1")[0] != 0


@pytest.fixture
def tt_csv(tmp_path):
    p = tmp_path / "tt.csv"
    p.write_text("dep_stop,arr_stop,dep_time,arr_time\nA,B,0,5\nB,C,6,10\nA,C,1,20\n")
    return p


def test_timetable_command(tt_csv, capsys):
    code, text = run("timetable", tt_csv, "--from", "A@0", "--to", "C", "B", "--journeys")
    assert code == 0
    assert text.splitlines() == ["stop,arrival,journey", "C,10,A@0->B@5;B@6->C@10", "B,5,A@0->B@5"]
    assert "scanned" in capsys.readouterr().err


def test_timetable_unreachable_and_no_break(tt_csv):
    code, text = run("timetable", tt_csv, "--from", "A@2", "--to", "C", "--no-break")
    assert code == 0 and text.splitlines()[1] == "C,inf"


def test_timetable_unknown_stop(tt_csv, capsys):
    assert run("timetable", tt_csv, "--from", "Q@0", "--to", "C")[0] != 0
    assert "unknown stop" in capsys.readouterr().err


def test_timetable_bad_from(tt_csv):
    with pytest.raises(SystemExit) as e:
        run("timetable", tt_csv, "--from", "A", "--to", "C")
    assert e.value.code != 0


def test_console_entry_point(dia_ch):
    out = subprocess.run([sys.executable, "-m", "csach.cli", "query", str(dia_ch), "--from", "1",
                          "--to", "4", "--paths"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.splitlines()[1] == "1,4,2.5,1->3->4"
