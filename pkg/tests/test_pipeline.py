import json
import math
import os

import numpy as np
import pytest

from sizemix.distributions import LNParams
from sizemix.errors import DomainError, EmptyAfterCleaning
from sizemix.estimation import FitConfig
from sizemix.mixtures import MixtureParams
from sizemix.pipeline import (
    Dataset,
    describe,
    emit_describe,
    emit_reports,
    ingest_csv,
    run_full_workflow,
    run_is_oos_workflow,
    run_tt_workflow,
    split_75_25,
    table_from_dict,
    table_to_dict,
)
from sizemix.sampling import RngStream, sample
from sizemix.selection import CRITERIA

FAST = FitConfig(n_starts=2, simplex_tol=1e-8)

TWO_LN = MixtureParams((LNParams(1.0, 0.5), LNParams(4.0, 0.8)), (0.35,))


def write_csv(tmp_path, values, name="acme2001.csv", header="sales"):
    p = tmp_path / name
    lines = ([header] if header else []) + [repr(float(v)) for v in values]
    p.write_text("\n".join(lines) + "\n")
    return str(p)


@pytest.fixture(scope="module")
def two_ln_sample():
    return sample(TWO_LN, 3000, RngStream(77))


def test_ingest_basic(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("1\n2\n3\n")
    ds = ingest_csv(str(p))
    assert ds.n == 3
    assert ds.values.min() == 1.0 and ds.values.max() == 3.0
    assert ds.label == "t"


def test_ingest_drops_bad_rows_with_warning(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("sales\n5\n-5\nabc\n2\n\n")
    with pytest.warns(UserWarning, match="dropped 3"):
        ds = ingest_csv(str(p), column="sales")
    assert ds.n == 2
    assert ds.n_dropped == 3


def test_ingest_empty_after_cleaning(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("sales\n-1\n-2\n")
    with pytest.raises(EmptyAfterCleaning):
        ingest_csv(str(p), column="sales")


def test_ingest_round_trips_values_bitwise(tmp_path):
    rng = np.random.default_rng(3)
    x = np.sort(np.exp(rng.normal(0, 1, size=5000)))
    path = write_csv(tmp_path, x)
    ds = ingest_csv(path, column=0)
    assert np.array_equal(ds.values, x)


def test_dataset_invariants():
    with pytest.raises(DomainError):
        Dataset("d", np.array([1.0, -1.0]))
    with pytest.raises(DomainError):
        Dataset("d", np.array([]))
    ds = Dataset("d", np.array([3.0, 1.0, 2.0]))
    assert list(ds.values) == [1.0, 2.0, 3.0]  # stored sorted


def test_describe_normal_log_data():
    rng = np.random.default_rng(5)
    ds = Dataset("d", np.exp(rng.normal(2.0, 0.7, size=200_000)))
    st = describe(ds)
    assert st.mean_log == pytest.approx(2.0, abs=0.01)
    assert st.sd_log == pytest.approx(0.7, abs=0.01)
    assert st.skew_log == pytest.approx(0.0, abs=0.03)
    assert st.kurt_log == pytest.approx(3.0, abs=0.05)  # non-excess
    assert st.min <= st.max


def test_describe_exp_uniform_kurtosis():
    # ln x ~ Uniform has kurtosis 9/5 exactly
    rng = np.random.default_rng(6)
    ds = Dataset("d", np.exp(rng.uniform(0.0, 1.0, size=1_000_000)))
    assert describe(ds).kurt_log == pytest.approx(1.8, abs=0.02)


def test_describe_guards():
    with pytest.raises(DomainError):
        describe(Dataset("d", np.array([1.0, 2.0, 3.0])))  # n < 4
    with pytest.raises(DomainError):
        describe(Dataset("d", np.full(10, 2.5)))  # zero variance


def test_split_sizes_and_partition():
    rng = np.random.default_rng(1)
    ds = Dataset("d", np.exp(rng.normal(size=100)))
    a, b = split_75_25(ds, seed=4)
    assert (a.n, b.n) == (75, 25)
    union = np.sort(np.concatenate([a.values, b.values]))
    assert np.array_equal(union, ds.values)
    # odd n: ceil for the in-sample part
    ds2 = Dataset("d", np.exp(rng.normal(size=101)))
    a2, b2 = split_75_25(ds2, seed=4)
    assert (a2.n, b2.n) == (76, 25)
    # deterministic per seed
    a3, _ = split_75_25(ds, seed=4)
    assert np.array_equal(a3.values, a.values)


def test_full_workflow_selects_the_generating_model(two_ln_sample):
    ds = Dataset("synth", two_ln_sample)
    table, fits = run_full_workflow(ds, ["LN", "2LN"], FAST)
    assert table.winners()["bic"] == "2LN"
    assert table.winners()["ks"] == "2LN"
    assert table.n == ds.n
    assert fits["2LN"].converged


def test_full_workflow_handles_not_estimable(two_ln_sample):
    ds = Dataset("synth", two_ln_sample[:100])
    # 5LN needs n >= 10 observations per free parameter: not estimable here
    table, fits = run_full_workflow(ds, ["LN", "5LN"], FAST)
    assert fits["5LN"] is None
    assert not table.row("5LN").estimable
    assert table.winners()["bic"] == "LN"


def test_is_oos_workflow_uses_out_of_sample_n(two_ln_sample):
    ds = Dataset("synth", two_ln_sample)
    table, fits = run_is_oos_workflow(ds, ["LN", "2LN"], FAST, seed=9)
    assert table.n == ds.n - math.ceil(0.75 * ds.n)
    row = table.row("2LN")
    assert row.loglik is not None and np.isfinite(row.loglik)
    # the mixture should also win out of sample on these data
    assert table.winners()["aic"] == "2LN"


def test_tt_workflow_truncated_names_and_survivor_count(two_ln_sample):
    ds = Dataset("synth", two_ln_sample)
    table, fits = run_tt_workflow(ds, (0.10, 0.001), ["LN", "2LN"], FAST)
    names = [r.model for r in table.rows]
    assert names == ["LNtt", "2LNtt"]
    n_expected = ds.n - math.floor(0.10 * ds.n) - math.floor(0.001 * ds.n)
    assert table.n == n_expected
    assert fits["2LN"].window is not None


def test_emit_reports_shapes_and_round_trip(tmp_path, two_ln_sample):
    ds = Dataset("synth", two_ln_sample)
    table, _ = run_full_workflow(ds, ["LN", "2LN"], FAST)
    out = str(tmp_path / "rep")
    written = emit_reports([table], out, fmt="both")
    assert len(written) == 4
    csv_lines = open(os.path.join(out, "synth_table.csv")).read().splitlines()
    assert len(csv_lines) == 1 + 2 + 1  # header, two models, Total row
    totals = csv_lines[-1].split(",")
    assert totals[0] == "Total"
    assert totals[-6:] == ["1"] * 6  # one argmin per criterion
    doc = json.load(open(os.path.join(out, "synth_table.json")))
    assert doc["schema"] == "composite-dist/1"
    back = table_from_dict(doc)
    assert table_to_dict(back) == table_to_dict(table)
    counts = json.load(open(os.path.join(out, "summary_counts.json")))
    for crit in CRITERIA:
        assert sum(counts["counts"][m][crit] for m in counts["counts"]) == 1


def test_emit_reports_byte_identical_reruns(tmp_path, two_ln_sample):
    ds = Dataset("synth", two_ln_sample)
    blobs = []
    for run in range(2):
        table, _ = run_full_workflow(ds, ["LN", "2LN"], FAST)
        out = str(tmp_path / f"rep{run}")
        emit_reports([table], out, fmt="json")
        blobs.append(open(os.path.join(out, "synth_table.json"), "rb").read())
    assert blobs[0] == blobs[1]


def test_emit_describe_columns(tmp_path):
    rng = np.random.default_rng(2)
    ds = Dataset("acme", np.exp(rng.normal(size=500)))
    path = str(tmp_path / "describe.csv")
    emit_describe({"acme": describe(ds)}, path)
    header = open(path).read().splitlines()[0].split(",")
    assert header == ["label", "n", "mean", "sd", "mean_log", "sd_log",
                      "skew_log", "kurt_log", "min", "max"]
