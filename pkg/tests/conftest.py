import numpy as np
import pytest

from leafbridge.dataset import NUMERIC, AttributeSchema, Dataset


def numeric_dataset(records, labels, n_classes=None, domain_tag="source"):
    """Dataset with anonymous numeric attributes f0..f{d-1} and classes c0..."""
    records = np.asarray(records, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = n_classes or int(labels.max()) + 1
    schema = tuple(AttributeSchema(f"f{j}", NUMERIC) for j in range(records.shape[1]))
    return Dataset(schema, records, labels,
                   tuple(f"c{c}" for c in range(n_classes)), domain_tag)


@pytest.fixture
def mixed_csv(tmp_path):
    """A small CSV with one numeric and one categorical column plus labels."""
    path = tmp_path / "mixed.csv"
    path.write_text(
        "a,b,label\n"
        "1.5,x,yes\n"
        "2.5,y,no\n"
        "3.5,x,yes\n",
        encoding="utf-8",
    )
    return path
