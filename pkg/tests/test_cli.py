import json
import math

import numpy as np
import pytest

from svtkit.cli import main
from svtkit.data import (
    SyntheticSpec,
    gen_lowrank,
    load_image,
    load_matrix_csv,
    save_image,
    save_matrix_csv,
    save_observations_csv,
)
from svtkit.penalties import Penalty
from svtkit.scalar_prox import brute_force_prox


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_prox_l1(capsys):
    code, out, _ = run(capsys, "prox", "l1:lambda=1", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["minimizer"] == 2.0
    assert payload["manifest"]["subcommand"] == "prox"
    assert payload["manifest"]["version"]


def test_prox_lp_at_zero(capsys):
    code, out, _ = run(capsys, "prox", "lp:lambda=1,p=0.5", "0")
    assert code == 0
    assert json.loads(out)["minimizer"] == 0.0


def test_prox_sweep_matches_grid_oracle(capsys):
    pen = Penalty("logarithm", lam=1.0, gamma=1.5)
    for b in np.linspace(0.0, 4.0, 9):
        code, out, _ = run(capsys, "prox", "logarithm:lambda=1,gamma=1.5", str(b))
        assert code == 0
        x = json.loads(out)["minimizer"]
        xg = brute_force_prox(pen, float(b), 1e-5)
        f = lambda v: pen.value(v) + 0.5 * (v - b) ** 2
        assert f(x) <= f(xg) + 1e-8


def test_prox_bad_spec_is_usage_error(capsys):
    code, _, err = run(capsys, "prox", "nope:lambda=1", "3")
    assert code == 2
    assert "nope" in err


def test_gsvt_csv_round_trip(tmp_path, capsys):
    matrix = np.diag([3.0, 0.5])
    path = tmp_path / "matrix.csv"
    save_matrix_csv(path, matrix)
    out_dir = tmp_path / "out"
    code, _, _ = run(capsys, "gsvt", str(path), "l1:lambda=1", "--out", str(out_dir))
    assert code == 0
    np.testing.assert_allclose(
        load_matrix_csv(out_dir / "thresholded.csv"), np.diag([2.0, 0.0]), atol=1e-12
    )
    sigma = json.loads((out_dir / "gsvt.json").read_text())
    assert sigma["input_sigma"] == [3.0, 0.5]
    assert sigma["shrunk_sigma"] == [2.0, 0.0]
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["inputs"]


def test_gsvt_missing_file_is_data_error(tmp_path, capsys):
    code, _, err = run(
        capsys, "gsvt", str(tmp_path / "nothing.csv"), "l1:lambda=1", "--out", str(tmp_path)
    )
    assert code == 3


def test_complete_round_trip(tmp_path, capsys):
    truth, problem = gen_lowrank(SyntheticSpec(20, 16, 2, 0.6, seed=5))
    obs = tmp_path / "observations.csv"
    save_observations_csv(obs, problem)
    truth_path = tmp_path / "truth.csv"
    save_matrix_csv(truth_path, truth)
    out_dir = tmp_path / "run"
    code, _, _ = run(
        capsys,
        "complete",
        "--observations", str(obs),
        "--truth", str(truth_path),
        "--out", str(out_dir),
        "--max-iters", "400",
        "--decay", "0.95",
        "--continuation-tol", "1e-3",
    )
    assert code == 0
    result = json.loads((out_dir / "result.json").read_text())
    assert result["rel_err"] < 1e-3
    lines = (out_dir / "trace.jsonl").read_text().splitlines()
    assert len(lines) == result["iterations"]
    first = json.loads(lines[0])
    assert set(first) == {"k", "lambda", "objective", "step_norm", "rel_err"}
    x = load_matrix_csv(out_dir / "solution.csv")
    assert x.shape == (20, 16)


def test_complete_needs_shape_or_truth(tmp_path, capsys):
    truth, problem = gen_lowrank(SyntheticSpec(6, 6, 1, 0.8, seed=0))
    obs = tmp_path / "observations.csv"
    save_observations_csv(obs, problem)
    code, _, err = run(capsys, "complete", "--observations", str(obs), "--out", str(tmp_path / "o"))
    assert code == 2
    code, _, _ = run(
        capsys,
        "complete",
        "--observations", str(obs),
        "--shape", "6x6",
        "--out", str(tmp_path / "o2"),
        "--max-iters", "30",
    )
    assert code == 0


def test_bench_synthetic_single_seed(tmp_path, capsys):
    out_dir = tmp_path / "bench"
    code, _, _ = run(
        capsys,
        "bench-synthetic",
        "--m", "30", "--n", "30",
        "--ranks", "3",
        "--seeds", "1",
        "--solvers", "gpg",
        "--decay", "0.95",
        "--continuation-tol", "1e-3",
        "--max-iters", "500",
        "--out", str(out_dir),
    )
    assert code == 0
    lines = (out_dir / "records.csv").read_text().splitlines()
    assert lines[0] == "solver,r,seed,rel_err,success,iterations,wall_time"
    assert len(lines) == 2
    agg = json.loads((out_dir / "aggregate.json").read_text())
    assert len(agg) == 1
    record_err = float(lines[1].split(",")[3])
    assert agg[0]["mean_rel_err"] == pytest.approx(record_err)
    assert agg[0]["fos"] == float(lines[1].split(",")[4] == "1")


def strip_wall_time(csv_text):
    return ["," .join(line.split(",")[:-1]) for line in csv_text.splitlines()]


def test_bench_synthetic_deterministic_and_parallel(tmp_path, capsys):
    common = [
        "bench-synthetic",
        "--m", "25", "--n", "25",
        "--ranks", "2,3",
        "--seeds", "2",
        "--solvers", "gpg,convex",
        "--max-iters", "120",
        "--seed", "7",
    ]
    runs = {}
    for name, extra in {"a": [], "b": [], "par": ["--jobs", "2"]}.items():
        out_dir = tmp_path / name
        code, _, _ = run(capsys, *common, "--out", str(out_dir), *extra)
        assert code == 0
        runs[name] = strip_wall_time((out_dir / "records.csv").read_text())
    assert runs["a"] == runs["b"]
    assert runs["a"] == runs["par"]


def test_inpaint_identity_when_nothing_missing(tmp_path, capsys):
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(1, 12, 10), dtype=np.uint8).astype(float)
    img = tmp_path / "img.pgm"
    save_image(img, pixels)
    out_dir = tmp_path / "out"
    code, _, _ = run(
        capsys, "inpaint", str(img), "--missing-fraction", "0", "--out", str(out_dir)
    )
    assert code == 0
    metrics = json.loads((out_dir / "metrics.json").read_text())
    assert metrics["psnr"] == math.inf
    recovered = load_image(out_dir / "recovered.pgm")
    np.testing.assert_array_equal(recovered, pixels)


def test_inpaint_gpg_beats_convex_on_lowrank_image(tmp_path, capsys):
    rng = np.random.default_rng(1)
    raw = rng.standard_normal((64, 5)) @ rng.standard_normal((5, 64))
    lo, hi = raw.min(), raw.max()
    pixels = (raw - lo) / (hi - lo) * 255.0
    img = tmp_path / "img.pgm"
    save_image(img, pixels[None])
    scores = {}
    for solver in ("gpg", "convex"):
        out_dir = tmp_path / solver
        code, _, _ = run(
            capsys,
            "inpaint", str(img),
            "--missing-fraction", "0.4",
            "--solver", solver,
            "--seed", "3",
            "--out", str(out_dir),
        )
        assert code == 0
        scores[solver] = json.loads((out_dir / "metrics.json").read_text())["psnr"]
    # the moderate final lambda biases the convex solver visibly
    assert scores["gpg"] >= scores["convex"] + 3.0


def test_inpaint_deterministic(tmp_path, capsys):
    rng = np.random.default_rng(2)
    raw = rng.standard_normal((24, 3)) @ rng.standard_normal((3, 20))
    pixels = (raw - raw.min()) / (raw.max() - raw.min()) * 255.0
    img = tmp_path / "img.pgm"
    save_image(img, pixels[None])
    payloads = []
    for name in ("r1", "r2"):
        out_dir = tmp_path / name
        code, _, _ = run(
            capsys,
            "inpaint", str(img),
            "--missing-fraction", "0.3",
            "--seed", "9",
            "--max-iters", "150",
            "--out", str(out_dir),
        )
        assert code == 0
        payloads.append((out_dir / "recovered.pgm").read_bytes())
    assert payloads[0] == payloads[1]


def write_synthetic_ratings(path, m=24, n=18, rank=2, seed=0, keep=0.5):
    """Low-rank structured ratings in the tab-separated format."""
    rng = np.random.default_rng(seed)
    scores = rng.uniform(0.5, 2.5, size=(m, rank)) @ rng.uniform(0.5, 2.5, size=(rank, n))
    scores = 1 + 4 * (scores - scores.min()) / (scores.max() - scores.min())
    with open(path, "w") as fh:
        for u in range(m):
            for i in range(n):
                if rng.uniform() < keep:
                    fh.write(f"{u + 1}\t{i + 1}\t{scores[u, i]:.3f}\t{700000 + u}\n")


def test_movielens_holdout_run(tmp_path, capsys):
    ratings = tmp_path / "u.data"
    write_synthetic_ratings(ratings)
    out_dir = tmp_path / "ml"
    code, _, _ = run(
        capsys,
        "movielens", str(ratings),
        "--holdout", "0.2",
        "--seed", "4",
        "--out", str(out_dir),
    )
    assert code == 0
    result = json.loads((out_dir / "nmae.json").read_text())
    assert result["shape"] == [24, 18]
    assert 0 <= result["nmae"] < 0.5
    assert result["test_ratings"] + result["train_ratings"] > 0


def test_movielens_overfit_sanity(tmp_path, capsys):
    ratings = tmp_path / "u.data"
    write_synthetic_ratings(ratings, seed=3)
    out_dir = tmp_path / "ml0"
    code, _, _ = run(
        capsys,
        "movielens", str(ratings),
        "--holdout", "0",
        "--max-iters", "500",
        "--lambda-target-ratio", "1e-6",
        "--out", str(out_dir),
    )
    assert code == 0
    result = json.loads((out_dir / "nmae.json").read_text())
    assert result["train_nmae"] < 0.05


def test_movielens_malformed_file(tmp_path, capsys):
    ratings = tmp_path / "bad.data"
    ratings.write_text("1\t1\t5\t0\ngarbage line\n")
    code, _, err = run(capsys, "movielens", str(ratings), "--out", str(tmp_path / "o"))
    assert code == 3
    assert "line 2" in err
