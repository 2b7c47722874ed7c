import json
from fractions import Fraction as F

import pytest
from click.testing import CliRunner

from cantor_arith import cli
from cantor_arith.renormalization import Certificate, verify_certificate
from cantor_arith.sets import pair

MT = {"type": "two_map", "p0": "3", "p1": "3", "a": "1"}
FIFTHS = {"type": "two_map", "p0": "5", "p1": "5", "a": "1"}
HALF = {"type": "ifs", "a": "1", "maps": [{"r": "1/2", "t": "0"}]}
QUARTER_EIGHTH = {"type": "ifs", "a": "1", "maps": [{"r": "1/4", "t": "0"}, {"r": "1/8", "t": "7/8"}]}


@pytest.fixture
def run(tmp_path):
    def go(cmd, cfg, *extra, raw=None):
        path = tmp_path / f"{cmd}.json"
        path.write_text(raw if raw is not None else json.dumps(cfg))
        out = tmp_path / "out"
        res = CliRunner().invoke(cli.main, [cmd, "--config", str(path), "--out", str(out), *extra])
        return res, out

    return go


class TestDim:
    def test_middle_thirds(self, run):
        res, out = run("dim", {"K": MT, "Kp": MT, "depths": [5, 6, 7, 8]})
        assert res.exit_code == 0, res.output
        s = json.loads((out / "dim.json").read_text())
        assert s["d"] == pytest.approx(0.6309297535714574, abs=1e-12)
        assert s["box_estimate"] == pytest.approx(1.0, abs=0.05)
        assert (out / "dim.csv").read_text().startswith("# cantor-arith dim schema v1")

    def test_malformed(self, run):
        res, _ = run("dim", None, raw="{not json")
        assert res.exit_code == 2

    def test_one_depth(self, run):
        res, _ = run("dim", {"K": MT, "Kp": MT, "depths": [6]})
        assert res.exit_code == 2 and ">=3 depths required" in res.output

    def test_unknown_key(self, run):
        res, _ = run("dim", {"K": MT, "Kp": MT, "colour": 1})
        assert res.exit_code == 2

    def test_budget(self, run):
        res, _ = run("dim", {"K": MT, "Kp": MT, "depths": [5, 6, 7]}, "--budget", "10")
        assert res.exit_code == 3


class TestCover:
    def test_outputs(self, run):
        res, out = run("cover", {"K": FIFTHS, "Kp": FIFTHS, "depth": 2})
        assert res.exit_code == 0
        lines = (out / "cover.csv").read_text().splitlines()
        assert lines[0] == "# cantor-arith cover schema v1" and lines[1] == "lo,hi"
        assert lines[2] == "-1,-23/25"  # [0, 1/25] - [24/25, 1]
        assert (out / "cover.svg").read_text().startswith("<svg")

    def test_bad_op(self, run):
        res, _ = run("cover", {"K": MT, "Kp": MT, "op": "product"})
        assert res.exit_code == 2


class TestCertify:
    def test_yes(self, run):
        res, out = run("certify", {"K": FIFTHS, "Kp": FIFTHS, "s": "1", "t": "1"})
        assert res.exit_code == 0 and res.output.strip() == "yes"
        cert = Certificate.from_json(json.loads((out / "certificate.json").read_text()))
        assert verify_certificate(pair((5, 5, 1), (5, 5, 1)), cert)

    def test_no(self, run):
        res, out = run("certify", {"K": FIFTHS, "Kp": FIFTHS, "s": "1", "t": "2"})
        assert res.exit_code == 0 and res.output.strip() == "no"
        assert json.loads((out / "certificate.json").read_text())["tree"] == "."

    def test_unknown(self, run):
        res, _ = run("certify", {"K": MT, "Kp": MT, "s": "1", "t": "1/2"}, "--depth", "0")
        assert res.exit_code == 0

    def test_deep_unknown(self, run):
        cfg = {"K": {"type": "two_map", "p0": "3", "p1": "4", "a": "1"}, "Kp": FIFTHS, "s": "1", "t": "1/7"}
        res, _ = run("certify", cfg, "--depth", "3", "--budget", "20")
        assert res.exit_code == 0 and res.output.strip() in ("yes", "no", "unknown")

    def test_box(self, run):
        res, _ = run("certify", {"K": FIFTHS, "Kp": FIFTHS, "box": {"s": ["1", "1"], "t": ["5/2", "3"]}})
        assert res.exit_code == 0 and res.output.strip() == "no"

    def test_replay_failure(self, run, monkeypatch):
        monkeypatch.setattr(cli, "verify_certificate", lambda *a: False)
        res, out = run("certify", {"K": FIFTHS, "Kp": FIFTHS, "s": "1", "t": "1"})
        assert res.exit_code == 4 and not (out / "certificate.json").exists()


class TestClassify:
    def test_fifths(self, run):
        res, out = run("classify", {"K": FIFTHS, "Kp": FIFTHS})
        assert res.exit_code == 0 and res.output.strip() == "CantorSet Proven"
        row = (out / "classify.csv").read_text().splitlines()[2].split(",")
        assert row[1:3] == ["CantorSet", "Proven"]
        assert (out / "classify.svg").exists()

    def test_sweep(self, run):
        res, out = run("sweep", {"K": MT, "Kp": MT, "lams": ["1/9", "1/3", "1", "3", "9"]}, "--jobs", "2")
        assert res.exit_code == 0
        rows = (out / "sweep.csv").read_text().splitlines()[2:]
        assert len(rows) == 5 and all(r.split(",")[1] == "FiniteUnionIntervals" for r in rows)
        assert [r.split(",")[0] for r in rows] == ["1/9", "1/3", "1", "3", "9"]

    def test_sample_deterministic(self, run, tmp_path):
        cfg = {"count": 3, "depth": 3}
        res1, out = run("sample", cfg, "--seed", "7")
        first = (out / "sample.csv").read_bytes()
        res2, out = run("sample", cfg, "--seed", "7", "--jobs", "2")
        assert res1.exit_code == res2.exit_code == 0
        assert first == (out / "sample.csv").read_bytes()

    def test_sample_infeasible(self, run):
        res, _ = run("sample", {"count": 2, "bounds": {"p0": [1.1, 1.9], "p1": [1.1, 1.9]}})
        assert res.exit_code == 2


class TestWitness:
    def test_middle_thirds(self, run):
        res, out = run("witness", {"K": MT, "Kp": MT, "t": "0", "R": "2/3"})
        assert res.exit_code == 0, res.output
        data = json.loads((out / "witness.json").read_text())
        assert set(data["F"]) == {"scale", "shift"} and "A" in data
        assert all(data["checks"].values())
        assert F(data["F"]["scale"]) > F(data["A"]) * F(2, 3)

    def test_irrational(self, run):
        res, _ = run("witness", {"K": {"type": "two_map", "p0": "2", "p1": "3", "a": "1"}, "Kp": MT, "t": "0", "R": "1/2"})
        assert res.exit_code == 5

    def test_radius_too_big(self, run):
        res, _ = run("witness", {"K": MT, "Kp": MT, "t": "0", "R": "2"})
        assert res.exit_code == 2

    def test_single_map(self, run):
        res, _ = run("witness", {"K": QUARTER_EIGHTH, "Kp": HALF, "t": "1", "R": "1/4"})
        assert res.exit_code == 0, res.output


def test_deterministic_bytes(run):
    res, out = run("classify", {"K": {"type": "two_map", "p0": "10/3", "p1": "10/3"}, "Kp": MT, "depth": 4})
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    res, out = run("classify", {"K": {"type": "two_map", "p0": "10/3", "p1": "10/3"}, "Kp": MT, "depth": 4})
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}
