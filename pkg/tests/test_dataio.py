import numpy as np
import pytest

from dmkde import (
    GaussianComponent,
    InsufficientClassError,
    InsufficientDataError,
    InvalidArgumentError,
    LabeledDataset,
    ParseError,
    SyntheticSpec,
    apply_standardizer,
    fit_standardizer,
    generate_synthetic,
    load_csv,
    save_csv,
    stratified_split,
)
from tests.conftest import ODDS_DIR, two_cluster_spec


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        path = write(tmp_path, "a,b,label\n0,0,0\n1,1,0\n9,9,1\n")
        ds = load_csv(path)
        assert ds.features.shape == (3, 2)
        assert ds.anomaly_rate == pytest.approx(1 / 3)
        assert ds.name == "data"

    def test_nan_cell_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "a,b,label\n0,nan,0\n1,1,1\n")
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.row == 2
        assert exc.value.column == "b"

    def test_non_numeric_cell(self, tmp_path):
        path = write(tmp_path, "a,b,label\n0,oops,0\n1,1,1\n")
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.row == 2 and exc.value.column == "b"

    def test_ragged_row(self, tmp_path):
        path = write(tmp_path, "a,b,label\n0,0,0\n1,1\n")
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.row == 3

    def test_label_outside_binary(self, tmp_path):
        path = write(tmp_path, "a,b,label\n0,0,2\n")
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.column == "label"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(tmp_path / "nope.csv")

    def test_label_column_by_name(self, tmp_path):
        path = write(tmp_path, "label,x\n1,5.5\n0,6.5\n")
        ds = load_csv(path, label_column="label")
        assert ds.features[0, 0] == 5.5
        assert list(ds.labels) == [1, 0]

    def test_unknown_label_column(self, tmp_path):
        path = write(tmp_path, "a,label\n0,0\n")
        with pytest.raises(ParseError):
            load_csv(path, label_column="target")

    def test_empty_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "a,label\n"))

    @pytest.mark.skipif(not (ODDS_DIR / "arrhythmia.csv").exists(),
                        reason="user-supplied ODDS conversion not present")
    def test_arrhythmia_shape(self):
        ds = load_csv(ODDS_DIR / "arrhythmia.csv")
        assert len(ds) == 452
        assert ds.features.shape[1] == 274
        assert ds.anomaly_rate == pytest.approx(0.146, abs=0.001)


class TestSaveLoadRoundTrip:
    def test_values_identical(self, tmp_path):
        ds = generate_synthetic(two_cluster_spec(), seed=2)
        path = tmp_path / "round.csv"
        save_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        save_csv(back, tmp_path / "round2.csv")
        assert (tmp_path / "round.csv").read_text() == (tmp_path / "round2.csv").read_text()


class TestStratifiedSplit:
    @pytest.fixture()
    def fixture_100_10(self):
        features = np.arange(200, dtype=np.float64).reshape(100, 2)
        labels = np.array([1] * 10 + [0] * 90)
        return LabeledDataset(features, labels, name="fixture")

    def test_documented_counts(self, fixture_100_10):
        split = stratified_split(fixture_100_10, seed=0)
        labels = fixture_100_10.labels
        assert (len(split.test), len(split.val), len(split.train)) == (30, 21, 49)
        assert labels[split.test].sum() == 3
        assert labels[split.val].sum() == 2
        assert labels[split.train].sum() == 5

    def test_deterministic(self, fixture_100_10):
        a = stratified_split(fixture_100_10, seed=4)
        b = stratified_split(fixture_100_10, seed=4)
        assert np.array_equal(a.train, b.train)
        assert np.array_equal(a.val, b.val)
        assert np.array_equal(a.test, b.test)

    def test_disjoint_and_exhaustive(self, fixture_100_10):
        split = stratified_split(fixture_100_10, seed=7)
        merged = np.concatenate([split.train, split.val, split.test])
        assert np.array_equal(np.sort(merged), np.arange(100))

    def test_proportions_within_one_sample(self, fixture_100_10):
        rate = fixture_100_10.anomaly_rate
        labels = fixture_100_10.labels
        for seed in range(20):
            split = stratified_split(fixture_100_10, seed=seed)
            for idx in (split.train, split.val, split.test):
                assert abs(labels[idx].sum() - rate * len(idx)) <= 1.0

    def test_all_normal_raises_for_class_1(self):
        ds = LabeledDataset(np.zeros((20, 2)), np.zeros(20, dtype=int))
        with pytest.raises(InsufficientClassError) as exc:
            stratified_split(ds, seed=0)
        assert exc.value.label == 1

    def test_tiny_class_raises(self):
        ds = LabeledDataset(np.zeros((21, 2)), np.array([1] + [0] * 20))
        with pytest.raises(InsufficientClassError) as exc:
            stratified_split(ds, seed=0)
        assert exc.value.label == 1

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.2])
    def test_fraction_range(self, fixture_100_10, frac):
        with pytest.raises(InvalidArgumentError):
            stratified_split(fixture_100_10, test_frac=frac)


class TestStandardizer:
    def test_two_point_column(self):
        shift, scale = fit_standardizer(np.array([[1.0], [3.0]]))
        assert shift[0] == 2.0 and scale[0] == 1.0

    def test_constant_column_scale_one(self):
        shift, scale = fit_standardizer(np.array([[5.0, 1.0], [5.0, 2.0]]))
        assert scale[0] == 1.0

    def test_standardized_moments(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(1000, 5)) * np.array([1, 10, 0.1, 3, 7]) + 4
        shift, scale = fit_standardizer(x)
        z = apply_standardizer(x, shift, scale)
        assert np.max(np.abs(z.mean(axis=0))) <= 1e-9
        assert np.max(np.abs(z.std(axis=0) - 1.0)) <= 1e-6

    def test_needs_two_rows(self):
        with pytest.raises(InsufficientDataError):
            fit_standardizer(np.zeros((1, 3)))


class TestSynthetic:
    def test_counts(self):
        ds = generate_synthetic(two_cluster_spec(), seed=0)
        assert len(ds) == 525
        assert ds.labels.sum() == 25
        assert ds.anomaly_rate == pytest.approx(25 / 525)

    def test_deterministic(self):
        a = generate_synthetic(two_cluster_spec(), seed=9)
        b = generate_synthetic(two_cluster_spec(), seed=9)
        assert np.array_equal(a.features, b.features)

    def test_exclusion_radius_respected(self):
        spec = two_cluster_spec()
        spec.exclusion_radius = 3.0
        ds = generate_synthetic(spec, seed=1)
        anomalies = ds.features[ds.labels == 1]
        means = np.stack([c.mean for c in spec.components])
        dist = np.linalg.norm(anomalies[:, None, :] - means[None, :, :], axis=2)
        assert dist.min() > 3.0

    def test_anomalies_inside_box(self):
        spec = two_cluster_spec()
        ds = generate_synthetic(spec, seed=2)
        anomalies = ds.features[ds.labels == 1]
        assert np.all(anomalies >= spec.box_low) and np.all(anomalies <= spec.box_high)

    def test_impossible_box_rejected(self):
        spec = SyntheticSpec(
            components=[GaussianComponent(np.zeros(2), 1.0, 10)],
            anomaly_count=5,
            box_low=np.array([-1.0, -1.0]),
            box_high=np.array([1.0, 1.0]),
            exclusion_radius=5.0,
        )
        with pytest.raises(InvalidArgumentError):
            generate_synthetic(spec, seed=0)

    def test_from_dict(self):
        spec = SyntheticSpec.from_dict({
            "name": "mini",
            "components": [{"mean": [0, 0], "cov": 1.0, "count": 10}],
            "anomaly_count": 2,
            "box_low": [-5, -5],
            "box_high": [5, 5],
            "exclusion_radius": 3.0,
        })
        ds = generate_synthetic(spec, seed=3)
        assert len(ds) == 12 and ds.name == "mini"

    def test_from_dict_missing_key(self):
        with pytest.raises(InvalidArgumentError):
            SyntheticSpec.from_dict({"components": []})


class TestLabeledDataset:
    def test_rejects_nonfinite_features(self):
        with pytest.raises(InvalidArgumentError):
            LabeledDataset(np.array([[np.inf]]), np.array([0]))

    def test_rejects_nonbinary_labels(self):
        with pytest.raises(InvalidArgumentError):
            LabeledDataset(np.zeros((2, 1)), np.array([0, 2]))

    def test_anomaly_rate_is_label_mean(self):
        ds = LabeledDataset(np.zeros((4, 1)), np.array([0, 1, 1, 0]))
        assert ds.anomaly_rate == 0.5
