import json
import subprocess
import sys

import numpy as np
import pytest

from csv_schema import check_samples, check_table
from pfpp import cli
from pfpp.skew import SkewMatrix


@pytest.fixture
def wd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*argv):
    return cli.run([str(a) for a in argv])


@pytest.fixture
def goe_kernel(wd):
    assert run("kernel", "build", "--family", "goe", "--N", 4, "--grid", "-6:6:0.1",
               "--out", "goe.pfk") == 0
    return wd / "goe.pfk"


def test_sample_is_deterministic(goe_kernel, wd):
    for name in ("a.csv", "b.csv"):
        assert run("sample", "--kernel", goe_kernel, "--samples", 10, "--seed", 7, "--out", name) == 0
    assert (wd / "a.csv").read_bytes() == (wd / "b.csv").read_bytes()
    configs = check_samples(wd / "a.csv")
    assert len(configs) == 10
    run("sample", "--kernel", goe_kernel, "--samples", 10, "--seed", 8, "--out", "c.csv")
    assert (wd / "c.csv").read_bytes() != (wd / "a.csv").read_bytes()


def test_kernel_file_and_sidecar(goe_kernel):
    A = SkewMatrix.load(goe_kernel)
    side = json.loads(open(str(goe_kernel) + ".json").read())
    assert A.n == 121
    assert side["family"] == "GOE_N" and side["grid"] == {"x_min": -6.0, "x_max": 6.0, "delta": 0.1}
    assert side["build_tolerances"]["expected_points"] == pytest.approx(4.0, abs=0.01)


def test_sampling_commands_are_reproducible(wd):
    cmds = [
        ["oracle", "goe", "--N", 3, "--samples", 5],
        ["oracle", "gse", "--N", 3, "--samples", 5],
        ["oracle", "tridiag", "--N", 6, "--beta", 2, "--samples", 5, "--top", 2],
        ["oracle", "corner-growth", "--N", 3, "--q", 0.5, "--samples", 5],
        ["gibbs", "--family", "gse", "--N", 2, "--steps", 8, "--burn-in", 2],
    ]
    for k, c in enumerate(cmds):
        outs = []
        for r in range(2):
            name = f"o{k}_{r}.csv"
            assert run(*c, "--seed", 3, "--out", name) == 0
            outs.append((wd / name).read_bytes())
        assert outs[0] == outs[1]
    check_samples(wd / "o3_0.csv", integer=True)
    check_samples(wd / "o4_0.csv", sweep=True)
    assert [len(c) for c in check_samples(wd / "o2_0.csv")] == [2] * 5


def test_corner_growth_kernel_samples_integers(wd):
    assert run("kernel", "build", "--family", "corner-growth", "--N", 2, "--q", 0.5,
               "--out", "cg.pfk") == 0
    assert run("sample", "--kernel", "cg.pfk", "--samples", 20, "--seed", 1, "--out", "s.csv") == 0
    configs = check_samples(wd / "s.csv")
    assert all(len(c) == 2 and all(float(v).is_integer() for v in c) for c in configs)


def test_hist_with_batches(goe_kernel, wd):
    run("sample", "--kernel", goe_kernel, "--samples", 60, "--seed", 1, "--out", "s.csv")
    assert run("hist", "--samples", "s.csv", "--bins", 5, "--range", "-2:6", "--batches", 3,
               "--batch-size", 20, "--out", "h.csv") == 0
    left, right, count, dens, bmean, bstd = check_table(
        wd / "h.csv", ["bin_left", "bin_right", "count", "density", "batch_mean", "batch_std"])
    assert left[0] == -2.0 and right[-1] == 6.0
    assert np.allclose(np.array(dens) * 60 * 1.6, count)
    # three equal batches of the same data: mean of batch densities is the pooled density
    assert np.allclose(bmean, dens)
    assert all(s >= 0 for s in bstd)


def test_hist_without_batches(goe_kernel, wd):
    run("sample", "--kernel", goe_kernel, "--samples", 20, "--seed", 2, "--out", "s.csv")
    assert run("hist", "--samples", "s.csv", "--statistic", "count", "--out", "h.csv") == 0
    cols = check_table(wd / "h.csv", ["bin_left", "bin_right", "count", "density"])
    assert sum(cols[2]) == 20


def test_fredholm_airy1_is_a_cdf(wd):
    assert run("fredholm", "--family", "airy1", "--s", "-4:2:0.1", "--nodes", 80,
               "--out", "f.csv") == 0
    s, F = check_table(wd / "f.csv", ["s", "cdf"])
    assert len(s) == 61 and s[0] == -4.0
    assert all(-1e-12 <= v <= 1.0 + 1e-12 for v in F)
    assert all(b >= a for a, b in zip(F, F[1:]))


def test_density_command(wd):
    assert run("density", "second-eig", "--family", "gse", "--N", 3, "--s", "-1:1:0.5",
               "--nodes", 60, "--out", "d.csv") == 0
    s, d = check_table(wd / "d.csv", ["s", "density"])
    assert len(s) == 5 and all(v >= 0 for v in d)


def test_sop_command(wd):
    assert run("sop", "--inner", "uniform", "--n", 6, "--nodes", 40, "--out", "sop.csv") == 0
    side = json.loads((wd / "sop.csv.json").read_text())
    assert side["skew_orthogonality_error"] <= 1e-10


def test_stdout_default(goe_kernel, capsys):
    assert run("sample", "--kernel", goe_kernel, "--samples", 2, "--seed", 1) == 0
    assert capsys.readouterr().out.startswith("sample_index,points\n")


DUMPS = {
    "kernel build": ["kernel", "build", "--family", "gse", "--N", 2, "--grid", "-4:4:0.2",
                     "--out", "k.pfk"],
    "sample": ["sample", "--kernel", "k.pfk", "--samples", 4, "--seed", 2, "--out", "s.csv"],
    "sop": ["sop", "--inner", "geometric", "--n", 4, "--nodes", 30, "--out", "p.csv"],
    "oracle goe": ["oracle", "goe", "--N", 2, "--samples", 3, "--seed", 1, "--out", "g.csv"],
    "oracle gse": ["oracle", "gse", "--N", 2, "--samples", 3, "--seed", 1, "--out", "h.csv"],
    "oracle tridiag": ["oracle", "tridiag", "--N", 5, "--beta", 4, "--samples", 3, "--seed", 1,
                       "--rescale", "true", "--out", "t.csv"],
    "oracle corner-growth": ["oracle", "corner-growth", "--N", 2, "--q", 0.3, "--samples", 3,
                             "--seed", 1, "--out", "c.csv"],
    "fredholm": ["fredholm", "--family", "gse", "--N", 2, "--s", "-1:1:1", "--nodes", 40,
                 "--out", "f.csv"],
    "density second-eig": ["density", "second-eig", "--family", "goe", "--N", 2, "--s", "0:1:1",
                           "--nodes", 40, "--out", "d.csv"],
    "hist": ["hist", "--samples", "s.csv", "--bins", 3, "--out", "hh.csv"],
    "gibbs": ["gibbs", "--family", "gse", "--N", 1, "--steps", 5, "--burn-in", 1, "--seed", 4,
              "--out", "gb.csv"],
}


def test_dump_config_round_trip(wd, capsys):
    assert set(DUMPS) == set(cli.COMMANDS)
    for command, argv in DUMPS.items():
        assert run(*argv) == 0, command
        first = {p: (wd / p).read_bytes() for p in [argv[argv.index("--out") + 1]]}
        capsys.readouterr()
        assert run(*argv, "--dump-config") == 0
        dumped = json.loads(capsys.readouterr().out)
        assert dumped["command"] == command
        (wd / "cfg.json").write_text(json.dumps(dumped))
        for p in first:
            (wd / p).unlink()
        words = command.split()
        assert run(*words, "--config", "cfg.json") == 0, command
        for p, data in first.items():
            assert (wd / p).read_bytes() == data, command


class TestExitCodes:
    def test_unknown_field_reports_line(self, wd, capsys):
        (wd / "c.json").write_text('{\n  "N": 2,\n  "bogus": 1\n}\n')
        assert run("oracle", "goe", "--config", "c.json", "--samples", 1, "--seed", 1) == 2
        err = capsys.readouterr().err
        assert "line 3" in err and "bogus" in err

    def test_missing_seed(self, goe_kernel):
        assert run("sample", "--kernel", goe_kernel, "--samples", 3) == 2

    def test_bad_choice_and_unknown_command(self, wd):
        assert run("kernel", "build", "--family", "gue", "--out", "x.pfk") == 2
        assert run("frobnicate") == 2

    def test_unwritable_output(self, wd):
        assert run("oracle", "goe", "--N", 2, "--samples", 1, "--seed", 1,
                   "--out", "missing/dir/x.csv") == 2

    def test_odd_goe(self, wd):
        assert run("kernel", "build", "--family", "goe", "--N", 3, "--out", "x.pfk") == 2

    def test_numerical_failure(self, wd, capsys):
        # a non-kernel matrix: the sampler meets an inclusion probability above one
        A = 3.0 * np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
        SkewMatrix(A).save(wd / "bad.pfk")
        assert run("sample", "--kernel", "bad.pfk", "--samples", 1, "--seed", 1, "--out", "o.csv") == 1
        assert "InvalidKernelError" in capsys.readouterr().err


def test_console_entry_point(wd):
    out = subprocess.run([sys.executable, "-m", "pfpp.cli", "oracle", "goe", "--N", "2",
                          "--samples", "2", "--seed", "5"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.splitlines()[0] == "sample_index,points"
    bad = subprocess.run([sys.executable, "-m", "pfpp.cli", "sample"], capture_output=True)
    assert bad.returncode == 2
