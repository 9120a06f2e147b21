import json

import numpy as np
import pytest

from aldp_toolkit.exceptions import DomainViolation, EmptyInput, MissingValue, NonFiniteInput, SchemaError
from aldp_toolkit.models.core import Task
from aldp_toolkit.services.datasets import (
    binarize_labels,
    gen_gaussian_numeric,
    gen_regression_task,
    gen_zipf_categorical,
    load_csv_dataset,
    normalize_numeric,
    one_hot_minus_one,
    to_labeled_data,
    zipf_pmf,
)
from aldp_toolkit.services.randomness import RandomSource


@pytest.fixture
def survey(tmp_path):
    csv = tmp_path / "survey.csv"
    csv.write_text("age,income,region,rating,note\n20,100,north,1,a\n40,300,south,3,b\n60,200,north,2,c\n")
    schema = tmp_path / "survey.json"
    schema.write_text(
        json.dumps(
            {
                "columns": {
                    "age": {"type": "numeric"},
                    "income": {"type": "numeric"},
                    "region": {"type": "categorical", "categories": ["north", "south", "east"]},
                    "rating": {"type": "categorical", "domain_size": 5},
                }
            }
        )
    )
    return csv, schema


class TestNormalize:
    @pytest.mark.parametrize(
        "raw, expected",
        [([0, 5, 10], [-1, 0, 1]), ([3, 3, 3], [0, 0, 0]), ([1, 2, 4], [-1, -1 / 3, 1])],
    )
    def test_examples(self, raw, expected):
        np.testing.assert_allclose(normalize_numeric(raw), expected)

    def test_idempotent(self):
        column = normalize_numeric([2.0, 7.5, 11.0, 4.0])
        np.testing.assert_array_equal(normalize_numeric(column), column)

    def test_errors(self):
        with pytest.raises(NonFiniteInput):
            normalize_numeric([1.0, np.inf])
        with pytest.raises(EmptyInput):
            normalize_numeric([])


class TestGenerators:
    def test_gaussian_moments(self):
        data = gen_gaussian_numeric(400_000, 1, RandomSource(1))
        values = data.numeric[:, 0]
        assert abs(values.mean()) <= 4 * 0.25 / np.sqrt(400_000)
        assert values.var() == pytest.approx(1 / 16, rel=0.02)
        assert np.all(np.abs(values) <= 1)

    def test_zipf_ratio(self):
        pmf = zipf_pmf(2, 1.3)
        assert pmf[0] / pmf[1] == pytest.approx(2**1.3)
        assert zipf_pmf(5, 200.0)[0] == pytest.approx(1.0)

    def test_zipf_frequencies(self):
        data = gen_zipf_categorical(100_000, 8, 1.3, RandomSource(2))
        pmf = zipf_pmf(8, 1.3)
        observed = np.bincount(data.categorical[:, 0], minlength=8) / 100_000
        bound = 4 * np.sqrt(pmf * (1 - pmf) / 100_000)
        assert np.all(np.abs(observed - pmf) <= bound)
        assert data.domain_sizes == (8,)

    def test_zipf_rejects_bad_input(self):
        with pytest.raises(DomainViolation):
            gen_zipf_categorical(10, 1, 1.3, RandomSource(0))
        with pytest.raises(DomainViolation):
            gen_zipf_categorical(10, 4, 0.0, RandomSource(0))

    def test_regression_task(self):
        data, theta_star = gen_regression_task(1000, 4, Task.LINEAR, RandomSource(3))
        assert data.features.shape == (1000, 4)
        np.testing.assert_array_equal(data.features[:, -1], 1.0)
        np.testing.assert_allclose(data.labels, data.features @ theta_star)

    @pytest.mark.parametrize("task", [Task.LOGISTIC, Task.SVM])
    def test_classification_labels(self, task):
        data, _ = gen_regression_task(500, 3, task, RandomSource(4))
        assert set(np.unique(data.labels)) <= {-1.0, 1.0}


class TestEncoding:
    def test_one_hot_minus_one(self):
        np.testing.assert_array_equal(
            one_hot_minus_one([0, 1, 2], 3), [[-1, -1], [1, -1], [-1, 1]]
        )

    def test_binarize(self):
        np.testing.assert_array_equal(binarize_labels([10, 20, 30, 40]), [-1, -1, 1, 1])


class TestCsvIngestion:
    def test_load(self, survey):
        data = load_csv_dataset(*survey)
        assert data.n_users == 3
        assert data.numeric_columns == ("age", "income")
        np.testing.assert_allclose(data.numeric[:, 0], [-1, 0, 1])
        np.testing.assert_allclose(data.numeric[:, 1], [-1, 1, 0])
        assert data.categorical_columns == ("region", "rating")
        assert data.domain_sizes == (3, 5)
        np.testing.assert_array_equal(data.categorical[:, 0], [0, 1, 0])
        np.testing.assert_array_equal(data.categorical[:, 1], [0, 2, 1])

    def test_missing_value_row(self, survey):
        csv, schema = survey
        csv.write_text("age,income,region,rating\n20,100,north,1\n40,,south,3\n")
        with pytest.raises(MissingValue, match="row 3"):
            load_csv_dataset(csv, schema)

    def test_unknown_category(self, survey):
        csv, schema = survey
        csv.write_text("age,income,region,rating\n20,100,west,1\n")
        with pytest.raises(DomainViolation, match="west"):
            load_csv_dataset(csv, schema)

    def test_code_out_of_range(self, survey):
        csv, schema = survey
        csv.write_text("age,income,region,rating\n20,100,north,6\n")
        with pytest.raises(DomainViolation):
            load_csv_dataset(csv, schema)

    def test_missing_column(self, survey):
        csv, schema = survey
        csv.write_text("age,region,rating\n20,north,1\n")
        with pytest.raises(SchemaError, match="income"):
            load_csv_dataset(csv, schema)

    def test_bad_schema(self, survey, tmp_path):
        csv, _ = survey
        schema = tmp_path / "broken.json"
        schema.write_text('{"columns": {"age": {"type": "text"}}}')
        with pytest.raises(SchemaError):
            load_csv_dataset(csv, schema)


class TestLabeledData:
    def test_linear_features(self, survey):
        data = to_labeled_data(load_csv_dataset(*survey), "income", Task.LINEAR)
        assert data.features.shape == (3, 8)
        np.testing.assert_allclose(data.features[:, 0], [-1, 0, 1])
        np.testing.assert_array_equal(data.features[:, 1:3], [[-1, -1], [1, -1], [-1, -1]])
        np.testing.assert_array_equal(data.features[:, -1], 1.0)
        np.testing.assert_allclose(data.labels, [-1, 1, 0])

    def test_classification_labels(self, survey):
        data = to_labeled_data(load_csv_dataset(*survey), "income", Task.LOGISTIC)
        np.testing.assert_array_equal(data.labels, [-1, 1, -1])

    @pytest.mark.parametrize("label", ["region", "salary"])
    def test_label_must_be_numeric(self, survey, label):
        with pytest.raises(SchemaError, match=label):
            to_labeled_data(load_csv_dataset(*survey), label, Task.LINEAR)
