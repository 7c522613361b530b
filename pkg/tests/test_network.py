import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddprior import BeliefNet, Dataset, NodeSpec, count_tuples, proportions
from ddprior.exceptions import DataError, NetworkError

BIN = ("0", "1")


def chain():
    return BeliefNet((NodeSpec("C", BIN, ("A", "B")), NodeSpec("A", BIN),
                      NodeSpec("B", ("x", "y", "z"), ("A",))))


def test_topological_order_respects_parents():
    order = chain().order
    assert order.index("A") < order.index("B") < order.index("C")


@pytest.mark.parametrize("nodes, fragment", [
    ((NodeSpec("A", BIN), NodeSpec("A", BIN)), "duplicate"),
    ((NodeSpec("A", ("0",)),), "at least 2"),
    ((NodeSpec("A", ("0", "0")),), "distinct"),
    ((NodeSpec("A", BIN, ("Z",)),), "unknown"),
    ((NodeSpec("A", BIN, ("B",)), NodeSpec("B", BIN, ("A",))), "cycle"),
    ((NodeSpec("A", BIN), NodeSpec("B", BIN, ("A", "A"))), "repeat"),
])
def test_invalid_networks(nodes, fragment):
    with pytest.raises(NetworkError, match=fragment):
        BeliefNet(nodes)


def test_row_order_is_mixed_radix_last_parent_fastest():
    net = chain()
    assert net.parent_sizes("C") == (2, 3)
    assert net.row_assignments("C")[:4] == [("0", "x"), ("0", "y"), ("0", "z"), ("1", "x")]
    assert net.row_index("C", ("1", "y")) == 4
    np.testing.assert_array_equal(net.row_codes("C")[4], [1, 1])
    assert net.n_rows("A") == 1


def test_counts_match_hand_tally():
    net = chain()
    data = Dataset(("A", "B", "C"), [("0", "x", "1"), ("0", "x", "1"), ("1", "z", "0"),
                                     ("1", "x", "1")])
    counts = count_tuples(net, data)
    np.testing.assert_array_equal(counts["A"].counts, [[2, 2]])
    c = counts["C"].counts
    assert c.shape == (6, 2)
    assert c[0, 1] == 2 and c[5, 0] == 1 and c[3, 1] == 1
    assert counts["C"].total == 4
    props = proportions(counts["C"])
    assert np.isnan(props.p[1]).all()
    np.testing.assert_array_equal(props.active_rows, [0, 3, 5])


def test_empty_dataset_gives_zero_counts():
    counts = count_tuples(chain(), Dataset(("A", "B", "C"), []))
    assert all(t.total == 0 for t in counts.values())


@pytest.mark.parametrize("rows, column", [
    ([("0", "q", "1")], "B"),
    ([("0", "", "1")], "B"),
])
def test_data_errors_name_row_and_column(rows, column):
    with pytest.raises(DataError) as err:
        count_tuples(chain(), Dataset(("A", "B", "C"), [("0", "x", "0")] + rows))
    assert err.value.row == 1 and err.value.column == column


def test_missing_column_is_rejected():
    with pytest.raises(DataError, match="no column"):
        Dataset(("A", "B"), []).encode(chain())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(BIN), st.sampled_from("xyz"), st.sampled_from(BIN)),
                max_size=60))
def test_counts_sum_to_records(rows):
    counts = count_tuples(chain(), Dataset(("A", "B", "C"), rows))
    for table in counts.values():
        assert table.total == len(rows)
    b = counts["B"].counts
    np.testing.assert_array_equal(b.sum(axis=0),
                                  [sum(r[1] == v for r in rows) for v in "xyz"])
