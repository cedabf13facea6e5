import numpy as np
import pytest

from semshift.ingest import Period

GROUPING_MAP = {"1810-1860": Period.OLD, "1960-2010": Period.MODERN}

# old period: 99 instances of sense 0 plus one unassigned; modern period:
# counts (64, 17, 11, 1, 1, 1, 1) over senses 0..6 plus four unassigned
RECORD_OLD_SENSES = [0] * 99 + [-1]
RECORD_MODERN_SENSES = (
    [0] * 64 + [1] * 17 + [2] * 11 + [3, 4, 5, 6] + [-1] * 4
)


def write_record_files(directory):
    """DWUG-style uses/senses fixture for the word 'record' (100 + 100 rows)."""
    uses = directory / "uses.tsv"
    senses = directory / "senses.tsv"
    rows = ["identifier\tlemma\tgrouping\tcontext\tindexes_target_token"]
    sense_rows = ["identifier\tcluster"]
    for k, sense in enumerate(RECORD_OLD_SENSES):
        ident = f"record-old-{k:03d}"
        rows.append(f"{ident}\trecord\t1810-1860\tan old record kept here\t7:13")
        sense_rows.append(f"{ident}\t{sense}")
    for k, sense in enumerate(RECORD_MODERN_SENSES):
        ident = f"record-new-{k:03d}"
        rows.append(f"{ident}\trecord\t1960-2010\tthe record of the season\t4:10")
        sense_rows.append(f"{ident}\t{sense}")
    uses.write_text("\n".join(rows) + "\n", encoding="utf-8")
    senses.write_text("\n".join(sense_rows) + "\n", encoding="utf-8")
    return uses, senses


@pytest.fixture
def record_files(tmp_path):
    return write_record_files(tmp_path)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_blob_points(per_blob=20, seed=0):
    """Two tight point clouds on the unit sphere: pairwise cosine similarity
    is ~0.99 inside a blob and ~0.01 across blobs."""
    rng = np.random.default_rng(seed)
    d = 8
    first = np.zeros(d)
    first[0] = 1.0
    cross = 0.01
    second = cross * first + np.sqrt(1.0 - cross * cross) * np.eye(d)[1]
    points = []
    for center in (first, second):
        x = center[None, :] + 0.05 * rng.normal(size=(per_blob, d))
        points.append(x / np.linalg.norm(x, axis=1, keepdims=True))
    return np.vstack(points)
