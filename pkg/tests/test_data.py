import csv

import numpy as np
import pytest

from fairbound.core import EmptyCellError, FairboundError, LabeledDataset
from fairbound.data import (
    PUBLISHED_COUNTS,
    EmptyTestSplitWarning,
    SchemaError,
    bundled_schema,
    dump_dataset,
    group_conditional_samples,
    load_csv,
    load_split,
    parse_schema,
    read_dump,
    read_samples,
    split,
    split_indices,
    write_samples,
)

SCHEMA = """\
[dataset]
name = toy
label_column = outcome
label_positive_value = yes
label_negative_value = no
group_column = race
group_a_value = White

[features]
age = numeric
colour = categorical
"""

ROWS = [
    ("age", "colour", "race", "outcome"),
    ("30", "red", "White", "yes"),
    ("40", "blue", "Black", "no"),
    ("", "red", "Asian", "yes"),
    ("50", "green", "White", "no"),
    ("20", "blue", "Other", "yes"),
    ("35", "red", "Black", "no"),
]


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return path


@pytest.fixture
def toy_csv(tmp_path):
    return write_csv(tmp_path / "toy.csv", ROWS)


class TestSchema:
    def test_parse(self):
        s = parse_schema(SCHEMA)
        assert s.label_column == "outcome" and s.group_a_value == "White"
        assert s.feature_columns == (("age", "numeric"), ("colour", "categorical"))
        assert s.drop_rows_with_missing is True

    def test_inline_comments(self):
        s = parse_schema(SCHEMA.replace("label_positive_value = yes", "label_positive_value = yes, y   ; either spelling"))
        assert s.positive_labels == ("yes", "y")

    def test_feature_cannot_be_label(self):
        with pytest.raises(SchemaError, match="outcome"):
            parse_schema(SCHEMA + "outcome = numeric\n")

    def test_bad_kind(self):
        with pytest.raises(SchemaError, match="kind"):
            parse_schema(SCHEMA.replace("age = numeric", "age = ordinal"))

    def test_missing_key(self):
        with pytest.raises(SchemaError, match="group_column"):
            parse_schema(SCHEMA.replace("group_column = race\n", ""))

    def test_no_features(self):
        with pytest.raises(SchemaError):
            parse_schema(SCHEMA.split("[features]")[0] + "[features]\n")

    @pytest.mark.parametrize("name,n_features", [("compas", 10), ("adult", 13), ("lawschool", 7)])
    def test_bundled(self, name, n_features):
        s = bundled_schema(name)
        assert len(s.feature_columns) == n_features
        assert s.group_column not in dict(s.feature_columns)
        assert name in PUBLISHED_COUNTS

    def test_adult_accepts_both_label_spellings(self):
        assert set(bundled_schema("adult").positive_labels) == {">50K", ">50K."}

    def test_unknown_bundled(self):
        with pytest.raises(SchemaError, match="no bundled schema"):
            bundled_schema("mnist")


class TestLoadCsv:
    def test_counts_and_encoding(self, toy_csv):
        data, report = load_csv(toy_csv, parse_schema(SCHEMA), standardize=False)
        assert (report.rows_read, report.rows_dropped, report.rows_kept) == (6, 1, 5)
        assert data.feature_names == ("age", "colour=red", "colour=blue", "colour=green")
        np.testing.assert_array_equal(data.features[:, 0], [30, 40, 50, 20, 35])
        np.testing.assert_array_equal(data.features[:, 1:], [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]])
        np.testing.assert_array_equal(data.labels, [1, 0, 0, 1, 0])
        assert list(data.groups) == ["a", "b", "a", "b", "b"]

    def test_standardized(self, toy_csv):
        data, report = load_csv(toy_csv, parse_schema(SCHEMA))
        np.testing.assert_allclose(data.features.mean(axis=0), 0, atol=1e-10)
        np.testing.assert_allclose(data.features.std(axis=0), 1, atol=1e-10)
        assert report.means["age"] == pytest.approx(35.0)
        assert report.n_features_after_encoding == 4

    def test_constant_column_dropped(self, tmp_path):
        rows = [("age", "colour", "race", "outcome")] + [(str(20 + i), "red", "White" if i % 2 else "X", "yes" if i % 3 else "no")
                                                          for i in range(6)]
        data, report = load_csv(write_csv(tmp_path / "c.csv", rows), parse_schema(SCHEMA))
        assert report.dropped_constant_columns == ["colour=red"]
        assert data.feature_names == ("age",)

    def test_stable_encoding(self, toy_csv):
        a, _ = load_csv(toy_csv, parse_schema(SCHEMA))
        b, _ = load_csv(toy_csv, parse_schema(SCHEMA))
        assert a.feature_names == b.feature_names
        np.testing.assert_array_equal(a.features, b.features)

    def test_missing_column_named(self, tmp_path):
        path = write_csv(tmp_path / "m.csv", [r[:2] + r[3:] for r in ROWS])
        with pytest.raises(SchemaError, match="race"):
            load_csv(path, parse_schema(SCHEMA))

    def test_unmappable_label(self, tmp_path):
        path = write_csv(tmp_path / "u.csv", ROWS + [("22", "red", "White", "maybe")])
        with pytest.raises(FairboundError, match="line 8"):
            load_csv(path, parse_schema(SCHEMA))

    def test_missing_not_dropped(self, toy_csv):
        schema = parse_schema(SCHEMA.replace("group_a_value = White", "group_a_value = White\ndrop_rows_with_missing = false"))
        with pytest.raises(FairboundError, match="line 4"):
            load_csv(toy_csv, schema)

    def test_all_rows_dropped(self, tmp_path):
        path = write_csv(tmp_path / "e.csv", [ROWS[0], ("", "red", "White", "yes")])
        with pytest.raises(FairboundError, match="all rows dropped"):
            load_csv(path, parse_schema(SCHEMA))

    def test_non_numeric(self, tmp_path):
        path = write_csv(tmp_path / "n.csv", ROWS + [("old", "red", "White", "yes")])
        with pytest.raises(FairboundError, match="age.*line 8"):
            load_csv(path, parse_schema(SCHEMA))


class TestSplit:
    def test_counts(self):
        tr, te = split_indices(7214, seed=0, counts=(5049, 2165))
        assert (len(tr), len(te)) == (5049, 2165)
        assert not set(tr) & set(te)

    def test_fraction(self):
        tr, te = split_indices(10, seed=1, train_fraction=0.7)
        assert (len(tr), len(te)) == (7, 3)

    def test_deterministic(self):
        a = split_indices(500, seed=3, train_fraction=0.6)
        b = split_indices(500, seed=3, train_fraction=0.6)
        np.testing.assert_array_equal(a[0], b[0])
        assert not np.array_equal(a[0], split_indices(500, seed=4, train_fraction=0.6)[0])

    def test_counts_exceed(self):
        with pytest.raises(FairboundError, match="exceed"):
            split_indices(10, seed=0, counts=(8, 3))

    def test_full_train_warns(self):
        data = LabeledDataset(np.zeros((4, 1)), np.array([0, 1, 0, 1]), np.array(["a", "a", "b", "b"]))
        with pytest.warns(EmptyTestSplitWarning):
            tr, te = split(data, train_fraction=1.0)
        assert (len(tr), len(te)) == (4, 0)

    def test_exactly_one_mode(self):
        with pytest.raises(FairboundError):
            split_indices(10, seed=0)

    def test_training_statistics(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [("age", "colour", "race", "outcome")] + [
            (repr(float(v)), rng.choice(["r", "g", "b"]), rng.choice(["White", "Black"]), rng.choice(["yes", "no"]))
            for v in rng.normal(40, 10, 300)]
        train, test, report = load_split(write_csv(tmp_path / "s.csv", rows), parse_schema(SCHEMA), seed=2, train_fraction=0.7)
        np.testing.assert_allclose(train.features.mean(axis=0), 0, atol=1e-10)
        np.testing.assert_allclose(train.features.std(axis=0), 1, atol=1e-10)
        assert (len(train), len(test)) == (210, 90)
        assert np.abs(test.features.mean(axis=0)).max() > 1e-6  # test rows use training statistics


class TestGroupConditional:
    def test_singletons(self):
        x = np.arange(4.0).reshape(4, 1)
        data = LabeledDataset(x, np.array([1, 1, 0, 0]), np.array(["a", "b", "a", "b"]))
        s = group_conditional_samples(data)
        assert s.cells[1, "a"].tolist() == [[0.0]] and s.cells[0, "b"].tolist() == [[3.0]]
        p, q = s.pair_group("b")
        assert (p.tolist(), q.tolist()) == ([[1.0]], [[3.0]])

    def test_partition_and_union(self):
        rng = np.random.default_rng(1)
        data = LabeledDataset(rng.normal(size=(50, 2)), np.r_[[0, 0, 1, 1], rng.integers(0, 2, 46)],
                              np.r_[["a", "b", "a", "b"], rng.choice(["a", "b"], 46)])
        s = group_conditional_samples(data)
        assert sum(len(v) for v in s.cells.values()) == 50
        for y in (0, 1):
            union = np.vstack([s.cells[y, "a"], s.cells[y, "b"]])
            assert sorted(map(tuple, union)) == sorted(map(tuple, s.by_label[y]))

    def test_empty_cell_named(self):
        data = LabeledDataset(np.zeros((3, 1)), np.array([1, 1, 0]), np.array(["a", "b", "a"]))
        with pytest.raises(EmptyCellError, match="y=0, z=b"):
            group_conditional_samples(data)


class TestDumps:
    def test_round_trip(self, toy_csv, tmp_path):
        data, _ = load_csv(toy_csv, parse_schema(SCHEMA))
        dump_dataset(data, tmp_path / "dump.csv")
        back = read_dump(tmp_path / "dump.csv")
        np.testing.assert_array_equal(back.features, data.features)
        np.testing.assert_array_equal(back.labels, data.labels)
        np.testing.assert_array_equal(back.groups, data.groups)
        assert back.feature_names == data.feature_names

    def test_not_a_dump(self, toy_csv):
        with pytest.raises(FairboundError, match="not a dataset dump"):
            read_dump(toy_csv)

    def test_samples_round_trip(self, tmp_path):
        s = np.random.default_rng(0).normal(size=(5, 3))
        write_samples(s, tmp_path / "s.csv")
        np.testing.assert_array_equal(read_samples(tmp_path / "s.csv"), s)


class TestBundledSchemaShapes:
    @pytest.mark.parametrize("name", ["compas", "lawschool"])
    def test_fabricated_file_with_published_split(self, name, tmp_path):
        schema = bundled_schema(name)
        n, n_train, n_test = PUBLISHED_COUNTS[name]
        rng = np.random.default_rng(0)
        header = schema.columns
        rows = [header]
        for i in range(n):
            row = []
            for col in header:
                if col == schema.label_column:
                    row.append(schema.positive_labels[0] if i % 3 else (schema.label_negative_value or "0"))
                elif col == schema.group_column:
                    row.append(schema.group_a_value if i % 2 else "Other")
                elif dict(schema.feature_columns)[col] == "numeric":
                    row.append(repr(float(rng.normal())))
                else:
                    row.append(f"c{i % 4}")
            rows.append(row)
        data, report = load_csv(write_csv(tmp_path / f"{name}.csv", rows), schema)
        tr, te = split(data, counts=(n_train, n_test), seed=0)
        assert (len(data), len(tr), len(te)) == (n, n_train, n_test)
        assert report.rows_dropped == 0
