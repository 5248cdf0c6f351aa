import csv
import io
import json
from pathlib import Path

import pytest

from hgum.cli import main
from hgum.wire import read_phits_file

DATA = Path(__file__).parent / "data"
LISTARRAY = [str(DATA / "listarray.schema.json"), "--message-name", "Msg"]
LISTARRAY_CLIENT = ["--client", str(DATA / "listarray.client.json")]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(capsys):
    assert run(capsys, "validate", *LISTARRAY, *LISTARRAY_CLIENT)[0] == 0
    code, _, err = run(capsys, "validate", str(DATA / "recursive.schema.json"), "--message-name", "Msg")
    assert code == 1 and "RecursiveStruct" in err


def test_validate_missing_list_end(capsys, tmp_path):
    tags = json.loads((DATA / "listarray.client.json").read_text())
    del tags["a.end"]
    (tmp_path / "c.json").write_text(json.dumps(tags))
    code, _, err = run(capsys, "validate", *LISTARRAY, "--client", str(tmp_path / "c.json"))
    assert code == 1 and "a.end" in err


def test_compile(capsys, tmp_path):
    code, out, _ = run(capsys, "compile", *LISTARRAY, *LISTARRAY_CLIENT)
    assert code == 0 and out == (DATA / "listarray.rom.txt").read_text()
    assert run(capsys, "compile", *LISTARRAY, *LISTARRAY_CLIENT, "-o", str(tmp_path / "r.txt"))[0] == 0
    assert (tmp_path / "r.txt").read_text() == out


def test_compile_unknown_struct(capsys, tmp_path):
    (tmp_path / "s.json").write_text('{"M": [["a", ["Struct", "Nope"]]]}')
    code, _, err = run(capsys, "compile", str(tmp_path / "s.json"), "--message-name", "M")
    assert code == 1 and "UnresolvedStructRef" in err


@pytest.mark.parametrize("path", ["sw-hw", "hw-sw", "hw-hw", "loopback"])
def test_roundtrip_paths(capsys, tmp_path, path):
    w, t = tmp_path / "w.phits", tmp_path / "t.tokens"
    code, out, _ = run(capsys, "roundtrip", *LISTARRAY, str(DATA / "listarray.message.json"), *LISTARRAY_CLIENT,
                       "--path", path, "--emit-wire", str(w), "--emit-tokens", str(t))
    assert code == 0 and "roundtrip ok" in out
    phits, total = read_phits_file(w)
    assert total == (68 if path in ("hw-hw", "loopback") else 28)
    assert [line.split()[0] for line in t.read_text().splitlines()] == ["1", "2", "3", "4", "3", "4", "5", "6", "7"]


def test_roundtrip_empty_list_hw_hw(capsys, tmp_path):
    w = tmp_path / "w.phits"
    code, out, _ = run(capsys, "roundtrip", str(DATA / "framing.schema.json"), "--message-name", "Msg",
                       str(DATA / "framing.empty.message.json"), "--client", str(DATA / "framing.client.json"),
                       "--path", "hw-hw", "--emit-wire", str(w))
    assert code == 0 and "empty_frames=1" in out
    phits, _ = read_phits_file(w)
    headers = [p for p in phits if p[4] == 1 and not any(p[5:])]
    assert len(phits) == 2 and headers == [bytes([0, 0, 0, 0, 1]) + bytes(11)]


def test_roundtrip_bit_flip(capsys):
    code, _, err = run(capsys, "roundtrip", *LISTARRAY, str(DATA / "listarray.message.json"), *LISTARRAY_CLIENT,
                       "--path", "hw-hw", "--inject-flip", "33")
    assert code == 2 and "offset 0" in err
    code, _, err = run(capsys, "roundtrip", *LISTARRAY, str(DATA / "listarray.message.json"), *LISTARRAY_CLIENT,
                       "--path", "sw-hw", "--inject-flip", "1")
    assert code == 2 and "IncompleteMessage" in err and "offset 28" in err
    # a payload bit is not a protocol error; the reference comparison catches it
    code, _, err = run(capsys, "roundtrip", *LISTARRAY, str(DATA / "listarray.message.json"), *LISTARRAY_CLIENT,
                       "--path", "sw-hw", "--inject-flip", "200")
    assert code == 2 and "Mismatch" in err


def test_roundtrip_needs_client(capsys):
    assert run(capsys, "roundtrip", *LISTARRAY, str(DATA / "listarray.message.json"))[0] == 1


def test_roundtrip_bad_message(capsys, tmp_path):
    (tmp_path / "m.json").write_text('[[], "0500"]')
    code, _, err = run(capsys, "roundtrip", *LISTARRAY, str(tmp_path / "m.json"), *LISTARRAY_CLIENT)
    assert code == 1 and "LengthMismatch" in err


def test_io_error(capsys):
    assert run(capsys, "roundtrip", *LISTARRAY, "/no/such/file.json", *LISTARRAY_CLIENT)[0] == 3
    assert run(capsys, "validate", "/no/such/schema.json", "--message-name", "M")[0] == 3


def test_bench(capsys, tmp_path):
    code, out, _ = run(capsys, "bench", "array", "--lengths", "1")
    assert code == 0 and out == "n,optimal_cycles,measured_cycles,ratio\n1,2,8,0.250000\n"
    out_csv = tmp_path / "l.csv"
    assert run(capsys, "bench", "list", "--lengths", "pow2", "-o", str(out_csv))[0] == 0
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert [int(r["n"]) for r in rows] == [1 << k for k in range(14)]
    assert all(float(r["ratio"]) < 1 for r in rows)
    assert run(capsys, "bench", "array", "--lengths", "0")[0] == 1
