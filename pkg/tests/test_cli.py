import io
import subprocess
import sys

import pytest

from capnet import load_network, load_path_measure
from capnet.cli import run


def cli(*argv):
    buf = io.StringIO()
    code = run([str(a) for a in argv], stdout=buf)
    return code, buf.getvalue()


def values(text):
    out = {}
    for line in text.splitlines():
        key, _, rest = line.partition(" ")
        out.setdefault(key, rest)
    return out


def checks(text):
    return {line.split()[1]: line.split()[0] for line in text.splitlines() if line.split()[0] in ("PASS", "FAIL", "SKIP")}


class TestSolve:
    def test_diamond(self, data):
        code, out = cli("solve", "--net", data / "diamond.net")
        assert code == 0
        kv = values(out)
        assert kv["cap"] == "1"
        assert kv["charge-A"] == "1" and kv["charge-B"] == "-1"
        assert kv["h.x"] == "0.5"
        assert "net-sha256" in kv and kv["seed"] == "0"

    def test_partition_override(self, data):
        code, out = cli("solve", "--net", data / "diamond.net", "--A", "x", "--B", "y")
        assert code == 0
        assert float(values(out)["cap"]) == pytest.approx(1.0)

    def test_corrupted(self, data):
        code, out = cli("solve", "--net", data / "corrupted.net")
        assert code == 1
        assert "FAIL validate" in out
        assert "K-symmetry" in out

    def test_out_file(self, data, tmp_path):
        target = tmp_path / "r.txt"
        code, out = cli("solve", "--net", data / "chain.net", "--out", target)
        assert code == 0 and out == ""
        assert "cap 0.5" in target.read_text()

    def test_killing_unsupported(self, data):
        code, _ = cli("solve", "--net", data / "killed_chain.net")
        assert code == 1


class TestUsage:
    def test_unknown_flag(self, data):
        assert cli("solve", "--net", data / "diamond.net", "--bogus")[0] == 2

    def test_missing_file(self, tmp_path):
        assert cli("solve", "--net", tmp_path / "nope.net")[0] == 2

    @pytest.mark.parametrize("tol", ["0", "-1e-3"])
    def test_bad_tol(self, data, tol):
        assert cli("solve", "--net", data / "diamond.net", "--tol", tol)[0] == 2

    def test_no_command(self):
        assert cli()[0] == 2

    def test_malformed_network(self, tmp_path):
        p = tmp_path / "bad.net"
        p.write_text("state a 1\nedge a a 1\n")
        assert cli("solve", "--net", p)[0] == 2

    def test_no_partition(self, tmp_path):
        p = tmp_path / "np.net"
        p.write_text("state a\nstate b\nedge a b 1\n")
        assert cli("solve", "--net", p)[0] == 2

    def test_seed_from_environment(self, data, monkeypatch):
        monkeypatch.setenv("CAPNET_SEED", "31")
        _, out = cli("solve", "--net", data / "diamond.net")
        assert values(out)["seed"] == "31"
        _, out = cli("solve", "--net", data / "diamond.net", "--seed", "4")
        assert values(out)["seed"] == "4"


class TestCharges:
    def test_diamond(self, data):
        code, out = cli("charges", "--net", data / "diamond.net")
        assert code == 0
        assert checks(out)["charge-identity"] == "PASS"


class TestIterate:
    def test_killed_chain(self, data):
        code, out = cli("iterate", "--net", data / "killed_chain.net", "--tol", "1e-12")
        assert code == 0
        kv = values(out)
        assert float(kv["g_AB.m"]) == pytest.approx(0.25, abs=1e-12)
        assert float(kv["g_BA.m"]) == pytest.approx(0.25, abs=1e-12)
        assert float(kv["escape.m"]) == pytest.approx(0.5, abs=1e-12)

    def test_max_steps(self, tmp_path):
        p = tmp_path / "long.net"
        names = ["a"] + [f"m{i}" for i in range(20)] + ["b"]
        p.write_text("".join(f"edge {x} {y} 1\n" for x, y in zip(names, names[1:]))
                     + "".join(f"state {s}\n" for s in names) + "set A a\nset B b\n")
        assert cli("iterate", "--net", p, "--max-steps", "3")[0] == 1


class TestBounds:
    def test_bad_flow(self, data):
        code, out = cli("bounds", "--net", data / "diamond.net", "--flow", data / "bad.flow")
        assert code == 1
        assert checks(out)["flow-kirchhoff"] == "FAIL"
        assert "kirchhoff [x]" in out

    def test_split_flow(self, data):
        code, out = cli("bounds", "--net", data / "diamond.net", "--flow", data / "split.flow")
        assert code == 0
        kv = values(out)
        assert float(kv["thomson-lower"]) == pytest.approx(1 / 1.36, rel=1e-11)
        assert float(kv["bk-exact"]) == pytest.approx(1.0, abs=1e-11)
        assert checks(out)["thomson<=bk"] == "PASS"
        assert "flow-sha256" in kv

    def test_mc_mode(self, data):
        code, out = cli("bounds", "--net", data / "diamond.net", "--flow", data / "split.flow", "--mode", "mc",
                        "--samples", "2000", "--seed", "3")
        assert code == 0
        kv = values(out)
        # per-path conductances are 1/1.6 and 1/0.4, only their mean is 1
        assert abs(float(kv["bk-mc"]) - 1.0) <= 4 * float(kv["bk-stderr"])

    def test_potential_and_paths(self, data):
        code, out = cli("bounds", "--net", data / "diamond.net", "--potential", data / "tilted.potential",
                        "--paths", data / "uniform.paths")
        assert code == 0
        kv = values(out)
        assert float(kv["dirichlet-upper"]) == pytest.approx(1.16)
        assert float(kv["bk-path"]) == pytest.approx(1.0)

    def test_needs_an_object(self, data):
        assert cli("bounds", "--net", data / "diamond.net")[0] == 2


class TestFlowCheck:
    def test_ok(self, data):
        code, out = cli("flow-check", "--net", data / "diamond.net", "--flow", data / "harmonic.flow", "--loop-free")
        assert code == 0
        assert checks(out)["flow-loop"] == "PASS"

    def test_bad(self, data):
        code, out = cli("flow-check", "--net", data / "diamond.net", "--flow", data / "bad.flow")
        assert code == 1

    def test_antiparallel(self, data, tmp_path):
        p = tmp_path / "anti.flow"
        p.write_text("flow a x 1\nflow x b 1\nflow x y 0.5\nflow y x 0.5\n")
        net = tmp_path / "n.net"
        net.write_text((data / "diamond.net").read_text() + "edge x y 1\n")
        code, out = cli("flow-check", "--net", net, "--flow", p)
        assert code == 1
        assert checks(out)["flow-directedness"] == "FAIL"


class TestSample:
    def test_diamond(self, data, tmp_path):
        target = tmp_path / "emp.paths"
        code, out = cli("sample", "--net", data / "diamond.net", "--flow", data / "harmonic.flow",
                        "--samples", "4000", "--seed", "1", "--paths-out", target)
        assert code == 0
        kv = values(out)
        assert kv["self-avoiding"] == "1"
        assert kv["mean-length"] == "2"
        assert float(kv["bk-mc"]) == pytest.approx(1.0)
        pm = load_path_measure(target.read_text())
        assert {p.states for p, _ in pm} == {("a", "x", "b"), ("a", "y", "b")}


class TestTruncateSweep:
    def test_parallel3(self, data):
        code, out = cli("truncate-sweep", "--net", data / "parallel3.net", "--ladder", data / "parallel3.ladder")
        assert code == 0
        kv = values(out)
        assert [kv[f"level.{i}.cap"] for i in (1, 2, 3)] == ["0.5", "1", "1.5"]
        assert checks(out) == {"validate": "PASS", "monotone": "PASS", "terminal=cap": "PASS"}

    def test_bad_ladder(self, data, tmp_path):
        p = tmp_path / "l.ladder"
        p.write_text("level a x1\n")
        assert cli("truncate-sweep", "--net", data / "parallel3.net", "--ladder", p)[0] == 2


class TestEquiv:
    def test_uniform(self, data, tmp_path):
        target = tmp_path / "eq.net"
        code, out = cli("equiv", "--net", data / "diamond.net", "--paths", data / "uniform.paths",
                        "--emit-network", target)
        assert code == 0
        kv = values(out)
        assert kv["total"] == "1" and kv["bk-path"] == "1"
        net = load_network(target.read_text())
        assert net.n == 4 and "γ0.1" in net.states


class TestSimulate:
    def test_diamond(self, data, tmp_path):
        dump = tmp_path / "t.txt"
        code, out = cli("simulate", "--net", data / "diamond.net", "--x0", "x", "--samples", "10000",
                        "--seed", "7", "--dump", dump)
        assert code == 0
        assert abs(float(values(out)["estimate"]) - 0.5) <= 0.015
        lines = dump.read_text().splitlines()
        assert lines[0] == "t 0.0 x" and lines[-1].startswith("end ")

    def test_unknown_state(self, data):
        assert cli("simulate", "--net", data / "diamond.net", "--x0", "q")[0] == 2


class TestVerify:
    def test_diamond(self, data):
        code, out = cli("verify", "--net", data / "diamond.net", "--seed", "7")
        assert code == 0
        c = checks(out)
        assert len(c) == 11
        assert set(c.values()) == {"PASS"}

    def test_chain(self, data):
        code, out = cli("verify", "--net", data / "chain.net", "--seed", "7")
        assert code == 0
        assert set(checks(out).values()) == {"PASS"}

    def test_corrupted(self, data):
        code, out = cli("verify", "--net", data / "corrupted.net", "--seed", "7")
        assert code == 1
        c = checks(out)
        assert c["validate"] == "FAIL"
        assert [v for k, v in c.items() if k != "validate"] == ["SKIP"] * 10

    def test_killing_rejected(self, data):
        code, out = cli("verify", "--net", data / "killed_chain.net")
        assert code == 1
        assert checks(out)["validate"] == "FAIL"

    def test_deterministic(self, data):
        a = cli("verify", "--net", data / "parallel3.net", "--seed", "7")[1]
        b = cli("verify", "--net", data / "parallel3.net", "--seed", "7")[1]
        assert a == b


def test_module_entry_point(data):
    proc = subprocess.run([sys.executable, "-m", "capnet", "solve", "--net", str(data / "chain.net")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "cap 0.5" in proc.stdout
