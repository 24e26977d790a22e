import numpy as np
import pytest

from scartest.data import (
    Art1Config,
    Art2Config,
    DataError,
    OracleDataset,
    PUDataset,
    empirical_prior,
    gen_art1,
    gen_art2,
    load_csv,
    load_oracle_csv,
    write_csv,
    write_oracle_csv,
)


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_basic(self, tmp_path):
        path = write(tmp_path, "a,b,s\n1.5,2,1\n3,4,0\n-5,6e-3,0\n")
        ds = load_csv(path, "s")
        assert (ds.n, ds.d) == (3, 2)
        np.testing.assert_array_equal(ds.s, [1, 0, 0])
        np.testing.assert_array_equal(ds.features, [[1.5, 2], [3, 4], [-5, 6e-3]])

    def test_label_column_anywhere(self, tmp_path):
        path = write(tmp_path, "lab,a\n0,1\n1,2\n")
        ds = load_csv(path, "lab")
        np.testing.assert_array_equal(ds.features[:, 0], [1, 2])

    def test_invalid_label(self, tmp_path):
        path = write(tmp_path, "a,s\n1,1\n2,2\n")
        with pytest.raises(DataError, match="invalid label"):
            load_csv(path, "s")

    def test_all_unlabeled(self, tmp_path):
        path = write(tmp_path, "a,s\n1,0\n2,0\n")
        with pytest.raises(DataError, match="empty labeled set"):
            load_csv(path, "s")

    def test_all_labeled(self, tmp_path):
        path = write(tmp_path, "a,s\n1,1\n2,1\n")
        with pytest.raises(DataError, match="empty unlabeled set"):
            load_csv(path, "s")

    def test_non_numeric(self, tmp_path):
        path = write(tmp_path, "a,s\n1,1\nfoo,0\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_csv(path, "s")

    @pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
    def test_non_finite(self, tmp_path, bad):
        path = write(tmp_path, f"a,s\n1,1\n{bad},0\n")
        with pytest.raises(DataError, match="non-finite"):
            load_csv(path, "s")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv", "s")

    def test_missing_label_column(self, tmp_path):
        path = write(tmp_path, "a,b\n1,1\n2,0\n")
        with pytest.raises(DataError, match="not found"):
            load_csv(path, "s")

    def test_round_trip(self, tmp_path, rng):
        x = rng.standard_normal((50, 3)) * 10.0 ** rng.integers(-8, 8, size=(50, 3))
        s = np.r_[np.ones(10), np.zeros(40)].astype(int)
        ds = PUDataset(x, s)
        write_csv(ds, tmp_path / "rt.csv")
        back = load_csv(tmp_path / "rt.csv")
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.s, ds.s)

    def test_oracle_round_trip(self, tmp_path):
        ds = gen_art1(Art1Config(n=30, seed=3))
        s = ((ds.y == 1) & (np.arange(30) % 2 == 0)).astype(int)
        labeled = OracleDataset(ds.features, ds.y, s)
        write_oracle_csv(labeled, tmp_path / "o.csv")
        back = load_oracle_csv(tmp_path / "o.csv")
        np.testing.assert_array_equal(back.features, labeled.features)
        np.testing.assert_array_equal(back.y, labeled.y)
        np.testing.assert_array_equal(back.s, labeled.s)


class TestContainers:
    def test_features_frozen(self):
        ds = PUDataset([[1.0], [2.0]], [1, 0])
        with pytest.raises(ValueError):
            ds.features[0, 0] = 5.0

    def test_negative_cannot_be_labeled(self):
        with pytest.raises(DataError):
            OracleDataset([[0.0], [1.0]], y=[0, 1], s=[1, 0])

    @pytest.mark.parametrize("y,expected", [([1, 1, 0, 0], 0.5), ([1, 1, 1], 1.0), ([1, 0, 0, 0, 0], 0.2)])
    def test_empirical_prior(self, y, expected):
        ds = OracleDataset(np.zeros((len(y), 1)), y)
        assert empirical_prior(ds) == expected


class TestGenerators:
    def test_art1_moments(self):
        n = 100_000
        ds = gen_art1(Art1Config(n=n, d=2, seed=1))
        pos = ds.features[ds.y == 1]
        neg = ds.features[ds.y == 0]
        assert abs(pos[:, 0].mean() - 1.0) < 3 / np.sqrt(n / 2)
        assert abs(neg[:, 1].mean()) < 4 / np.sqrt(n / 2)
        assert abs(ds.y.mean() - 0.5) < 3 * 0.5 / np.sqrt(n)
        cov = np.cov(pos, rowvar=False)
        np.testing.assert_allclose(cov, np.eye(2), atol=4 * np.sqrt(2 / (n / 2)))

    def test_art1_determinism(self):
        a = gen_art1(Art1Config(n=500, d=3, seed=9))
        b = gen_art1(Art1Config(n=500, d=3, seed=9))
        assert a.features.tobytes() == b.features.tobytes()
        assert a.y.tobytes() == b.y.tobytes()
        c = gen_art1(Art1Config(n=500, d=3, seed=10))
        assert a.features.tobytes() != c.features.tobytes()

    def test_art2_covariance(self):
        n = 100_000
        ds = gen_art2(Art2Config(n=n, d=2, seed=2))
        pos = ds.features[ds.y == 1]
        neg = ds.features[ds.y == 0]
        assert abs(np.cov(pos, rowvar=False)[0, 1] - 0.5) < 0.02
        assert abs(np.cov(neg, rowvar=False)[0, 1]) < 0.02
        np.testing.assert_allclose(pos.mean(axis=0), [1, 1], atol=4 / np.sqrt(n / 2))

    def test_art2_longer_range_covariance(self):
        ds = gen_art2(Art2Config(n=100_000, d=4, seed=4))
        cov = np.cov(ds.features[ds.y == 1], rowvar=False)
        np.testing.assert_allclose(cov, Art2Config(n=1, d=4).covariance(), atol=0.03)

    def test_art2_d1_equals_art1(self):
        a = gen_art1(Art1Config(n=1000, d=1, seed=5))
        b = gen_art2(Art2Config(n=1000, d=1, seed=5))
        assert a.features.tobytes() == b.features.tobytes()
        assert a.y.tobytes() == b.y.tobytes()

    @pytest.mark.parametrize("prior", [0.0, 1.0, -0.1])
    def test_bad_prior(self, prior):
        with pytest.raises(ValueError):
            Art1Config(n=10, prior=prior)
