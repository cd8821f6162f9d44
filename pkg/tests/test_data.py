import math

import numpy as np
import pytest

from svtkit.data import (
    SyntheticSpec,
    aggregate,
    gen_lowrank,
    load_image,
    load_movielens,
    make_record,
    mask_uniform,
    nmae,
    psnr,
    rel_err,
    save_image,
)
from svtkit.errors import DataFormatError


def test_gen_lowrank_paper_scale_instance():
    truth, problem = gen_lowrank(SyntheticSpec(150, 150, 20, 0.5, seed=42))
    sigma = np.linalg.svd(truth, compute_uv=False)
    assert sigma[20] < 1e-8 * sigma[0]
    assert sigma[19] > 1e-8 * sigma[0]
    assert problem.omega.shape == (11250, 2)
    assert problem.shape == (150, 150)


def test_gen_lowrank_full_observation_reconstructs():
    truth, problem = gen_lowrank(SyntheticSpec(12, 9, 3, 1.0, seed=1))
    np.testing.assert_array_equal(problem.observed_matrix(), truth)


def test_gen_lowrank_deterministic():
    spec = SyntheticSpec(20, 30, 4, 0.4, noise_sigma=0.1, seed=7)
    t1, p1 = gen_lowrank(spec)
    t2, p2 = gen_lowrank(spec)
    np.testing.assert_array_equal(t1, t2)
    np.testing.assert_array_equal(p1.omega, p2.omega)
    np.testing.assert_array_equal(p1.observed, p2.observed)


def test_gen_lowrank_noise_only_on_observed():
    spec = SyntheticSpec(15, 15, 2, 0.5, noise_sigma=0.5, seed=3)
    truth, problem = gen_lowrank(spec)
    clean = truth[problem.omega[:, 0], problem.omega[:, 1]]
    assert not np.allclose(problem.observed, clean)
    assert np.abs(problem.observed - clean).max() < 5.0  # noise scale, not signal


def test_gen_lowrank_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(10, 10, 11, 0.5)
    with pytest.raises(ValueError):
        SyntheticSpec(10, 10, 2, 0.0)
    with pytest.raises(ValueError):
        SyntheticSpec(10, 10, 2, 1.5)


def test_rel_err_basics():
    rng = np.random.default_rng(0)
    truth = rng.standard_normal((6, 5))
    assert rel_err(truth, truth) == 0.0
    assert rel_err(np.zeros_like(truth), truth) == pytest.approx(1.0)
    assert rel_err(1.001 * truth, truth) == pytest.approx(0.001)
    # scale invariance
    x = rng.standard_normal((6, 5))
    assert rel_err(3.5 * x, 3.5 * truth) == pytest.approx(rel_err(x, truth))
    with pytest.raises(ValueError):
        rel_err(np.zeros((2, 2)), np.zeros((2, 2)))


def test_psnr_values():
    img = np.full((10, 10), 100.0)
    assert psnr(img, img) == math.inf
    assert psnr(img, img + 1.0) == pytest.approx(10 * math.log10(255.0**2), abs=1e-9)
    assert psnr(img, img + 1.0) == pytest.approx(48.13, abs=0.01)
    assert psnr(np.zeros((4, 4)), np.full((4, 4), 255.0)) == 0.0
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 2)), np.zeros((3, 3)))


def test_nmae_values():
    x = np.arange(4.0).reshape(2, 2)
    omega = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
    assert nmae(x, x[omega[:, 0], omega[:, 1]], omega) == 0.0
    assert nmae(x + 2.5, x[omega[:, 0], omega[:, 1]], omega) == pytest.approx(2.5)
    truth = x[omega[:, 0], omega[:, 1]] + np.array([1.0, 0.0, 0.0, 3.0])
    assert nmae(x, truth, omega) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        nmae(x, np.empty(0), np.empty((0, 2), dtype=int))


def write_ratings(path, rows):
    with open(path, "w") as fh:
        for user, item, rating, ts in rows:
            fh.write(f"{user}\t{item}\t{rating}\t{ts}\n")


def test_load_movielens_round_trip(tmp_path):
    path = tmp_path / "u.data"
    rows = [(1, 1, 5, 100), (1, 2, 3, 101), (2, 1, 4, 102), (3, 3, 2, 103), (2, 3, 1, 104)]
    write_ratings(path, rows)
    train, (test_omega, test_values) = load_movielens(path, holdout_fraction=0.0)
    assert train.shape == (3, 3)
    assert test_omega.shape == (0, 2)
    assert train.omega.shape == (5, 2)
    dense = train.observed_matrix()
    assert dense[0, 0] == 5 and dense[1, 2] == 1 and dense[2, 2] == 2


def test_load_movielens_holdout_split(tmp_path):
    path = tmp_path / "u.data"
    rng = np.random.default_rng(5)
    rows = [
        (u + 1, i + 1, int(rng.integers(1, 6)), 900000000 + u * 100 + i)
        for u in range(20)
        for i in range(15)
    ]
    write_ratings(path, rows)
    train1, (om1, val1) = load_movielens(path, holdout_fraction=0.2, seed=11)
    train2, (om2, val2) = load_movielens(path, holdout_fraction=0.2, seed=11)
    np.testing.assert_array_equal(om1, om2)
    np.testing.assert_array_equal(val1, val2)
    np.testing.assert_array_equal(train1.omega, train2.omega)
    assert om1.shape[0] == round(0.2 * 300)
    assert train1.omega.shape[0] == 300 - om1.shape[0]
    other = load_movielens(path, holdout_fraction=0.2, seed=12)[1][0]
    assert not np.array_equal(om1, other)


def test_load_movielens_keeps_last_duplicate(tmp_path):
    path = tmp_path / "u.data"
    write_ratings(path, [(1, 1, 5, 1), (2, 2, 3, 2), (1, 1, 2, 3)])
    with pytest.warns(UserWarning, match="1 duplicated"):
        train, _ = load_movielens(path, holdout_fraction=0.0)
    assert train.observed_matrix()[0, 0] == 2.0


def test_load_movielens_reports_line_numbers(tmp_path):
    path = tmp_path / "u.data"
    with open(path, "w") as fh:
        fh.write("1\t1\t5\t100\n")
        fh.write("not a rating\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_movielens(path)
    path2 = tmp_path / "u2.data"
    with open(path2, "w") as fh:
        fh.write("1\t1\tfive\t100\n")
    with pytest.raises(DataFormatError, match="line 1"):
        load_movielens(path2)


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    pixels = rng.integers(0, 256, size=(3, 7, 5), dtype=np.uint8)
    path = tmp_path / "img.ppm"
    save_image(path, pixels.astype(float))
    loaded = load_image(path)
    assert loaded.shape == (3, 7, 5)
    np.testing.assert_array_equal(loaded, pixels.astype(float))
    # byte-identical payload on a second save
    path2 = tmp_path / "copy.ppm"
    save_image(path2, loaded)
    assert path.read_bytes() == path2.read_bytes()


def test_pgm_round_trip_and_comments(tmp_path):
    rng = np.random.default_rng(2)
    pixels = rng.integers(0, 256, size=(4, 6), dtype=np.uint8)
    path = tmp_path / "img.pgm"
    with open(path, "wb") as fh:
        fh.write(b"P5\n# a comment\n6 4\n255\n")
        fh.write(pixels.tobytes())
    loaded = load_image(path)
    np.testing.assert_array_equal(loaded[0], pixels.astype(float))


def test_image_format_errors(tmp_path):
    bad = tmp_path / "bad.ppm"
    bad.write_bytes(b"P3\n2 2\n255\n")
    with pytest.raises(DataFormatError, match="magic"):
        load_image(bad)
    trunc = tmp_path / "trunc.ppm"
    trunc.write_bytes(b"P6\n4 4\n255\n\x00\x01")
    with pytest.raises(DataFormatError, match="truncated"):
        load_image(trunc)


def test_save_image_clamps_and_rounds(tmp_path):
    path = tmp_path / "clamp.pgm"
    save_image(path, np.array([[[-5.0, 12.4], [12.6, 300.0]]]))
    loaded = load_image(path)
    np.testing.assert_array_equal(loaded[0], [[0.0, 12.0], [13.0, 255.0]])


def test_mask_uniform_counts_and_determinism():
    omega = mask_uniform((100, 100), 0.4, seed=9)
    assert omega.shape == (6000, 2)
    np.testing.assert_array_equal(omega, mask_uniform((100, 100), 0.4, seed=9))
    assert not np.array_equal(omega, mask_uniform((100, 100), 0.4, seed=10))
    # no duplicates, indices in range
    lin = omega[:, 0] * 100 + omega[:, 1]
    assert np.unique(lin).size == 6000
    assert omega.min() >= 0 and omega.max() < 100


def test_aggregate_records():
    records = [
        make_record(0, 5e-4, 100, 0.1),
        make_record(1, 2e-3, 120, 0.2),
        make_record(2, 9e-4, 90, 0.15),
    ]
    result = aggregate(records)
    assert result.fos == pytest.approx(2 / 3)
    assert result.mean_rel_err == pytest.approx(np.mean([5e-4, 2e-3, 9e-4]))
    assert records[0].success and not records[1].success
