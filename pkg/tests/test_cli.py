from pathlib import Path

import pytest

from stamr.cli import main
from stamr.gadgets import diagonal_detector

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as e:
        code = e.code
    out, err = capsys.readouterr()
    return code, out, err


def test_encode_all_gives_twelve(capsys):
    code, out, _ = run(capsys, "encode", "--shape", str(FIX / "l.shape"), "--all")
    assert code == 0
    assert out.splitlines()[0] == "# encodings 12"
    assert out.count("# encoding ") == 12


def test_witness_check(capsys):
    code, out, _ = run(capsys, "witness", "--check")
    assert code == 0
    assert out == "sizes 96/96\nbent=yes/yes\nenclosed=no/no\ncongruent=no\n"


def test_roundtrip(capsys):
    code, out, _ = run(capsys, "roundtrip", "--seed", "7", "--count", "200", "--bbox", "5")
    assert code == 0 and out.splitlines()[-1] == "200/200 OK"
    assert "seed 7" in out.splitlines()[0]


def test_unknown_command_is_usage_error(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 2 and "error:" in err


def test_missing_file_is_usage_error(capsys):
    code, _, err = run(capsys, "analyze", "--shape", "/nonexistent.shape")
    assert code == 2 and err.startswith("error:")


def test_bad_shape_file_is_usage_error(capsys, tmp_path):
    p = tmp_path / "bad.shape"
    p.write_text("0 0 0\n0 0\n")
    code, _, err = run(capsys, "analyze", "--shape", str(p))
    assert code == 2 and "line 2" in err


def test_decode_failure_is_domain_failure(capsys, tmp_path):
    p = tmp_path / "split.enc"
    p.write_text("2 2 1\n0011\n1001\n")
    code, _, err = run(capsys, "decode", "--enc", str(p))
    assert code == 1 and err.startswith("error:")


def test_decode_fixture(capsys):
    code, out, _ = run(capsys, "decode", "--enc", str(FIX / "l.enc"))
    assert code == 0 and out == "0 0 0\n0 1 0\n1 0 0\n"


def test_analyze_hook(capsys):
    code, out, _ = run(capsys, "analyze", "--shape", str(FIX / "hook.shape"))
    assert code == 0
    assert "bent-cavities 1" in out and "enclosed-cavities 0" in out


def test_schedule_check_overhang(capsys):
    shape = str(FIX / "overhang.shape")
    code, out, _ = run(capsys, "schedule-check", "--shape", shape)
    assert code == 0 and out.rstrip().endswith("violations 0")
    code, _, err = run(capsys, "schedule-check", "--shape", shape, "--scaffold", "strict")
    assert code == 1 and "violations" in err


def test_gadget_demo_pass_and_negative(capsys):
    code, out, _ = run(capsys, "gadget-demo", "diagonal", "--seed", "1", "--trials", "3")
    assert code == 0 and out.splitlines()[-1] == "3/3 pass"
    code, _, err = run(capsys, "gadget-demo", "filler-negative", "--seed", "0")
    assert code == 1 and err.startswith("error:")
    code, _, _ = run(capsys, "gadget-demo", "nope", "--seed", "0")
    assert code == 2


def test_randomized_commands_require_seed(capsys):
    code, _, err = run(capsys, "gadget-demo", "diagonal")
    assert code == 2 and "--seed" in err
    code, _, _ = run(capsys, "roundtrip")
    assert code == 2


def _emit(tmp_path):
    b = diagonal_detector()
    (tmp_path / "d.tiles").write_text(b.tileset_text())
    (tmp_path / "d.scenario").write_text(b.scenario_text())
    return str(tmp_path / "d.tiles"), str(tmp_path / "d.scenario")


def test_simulate_is_deterministic(capsys, tmp_path):
    tiles, scen = _emit(tmp_path)
    argv = ["simulate", "--tileset", tiles, "--scenario", scen, "--seed", "11"]
    c1, o1, _ = run(capsys, *argv)
    c2, o2, _ = run(capsys, *argv)
    assert c1 == c2 == 0 and o1 == o2
    assert o1.startswith("# simulate seed 11") and "quiescent yes" in o1


def test_simulate_flags(capsys, tmp_path):
    tiles, scen = _emit(tmp_path)
    code, out, _ = run(
        capsys, "simulate", "--tileset", tiles, "--scenario", scen, "--seed", "2",
        "--bond-policy", "random", "--diffusion", "path", "--arena", "3", "--quiet",
    )
    assert code == 0 and " combine " not in out


def test_enumerate(capsys, tmp_path):
    (tmp_path / "ab.tiles").write_text(
        "tile A\n face +x glue a strength 2 state on\nend\ntile B\n face -x glue a* strength 2 state on\nend\n"
    )
    (tmp_path / "ab.scenario").write_text("tau 2\nmode stam_r\n")
    code, out, _ = run(capsys, "enumerate", "--tileset", str(tmp_path / "ab.tiles"),
                       "--scenario", str(tmp_path / "ab.scenario"), "--max-size", "4")
    assert code == 0 and "producibles 3 terminal 1 frontier 0" in out


def test_audit_gadget(capsys):
    code, out, _ = run(capsys, "audit", "--gadget", "corner-3d", "--seed", "3")
    assert code == 0 and out.rstrip().endswith("oversize 0")


def test_out_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "w.txt"
    code, out, _ = run(capsys, "witness", "--out", str(target))
    assert code == 0 and out == "" and target.read_text().startswith("sizes 96/96")


def test_gadget_emit_files_reload(capsys, tmp_path):
    code, _, _ = run(capsys, "gadget-demo", "corner-2d", "--seed", "0", "--emit", str(tmp_path))
    assert code == 0
    code, out, _ = run(capsys, "simulate", "--tileset", str(tmp_path / "corner-2d.tiles"),
                       "--scenario", str(tmp_path / "corner-2d.scenario"), "--seed", "0", "--quiet")
    assert code == 0 and "quiescent yes" in out


@pytest.mark.parametrize("cmd", ["analyze", "encode"])
def test_dump_and_listing_are_byte_stable(capsys, cmd):
    argv = [cmd, "--shape", str(FIX / "prism345.shape")]
    assert run(capsys, *argv) == run(capsys, *argv)
