from isobem.utils.run_utils import chunked, parallel_map


def test_parallel_map_keeps_order():
    assert parallel_map(lambda x: x * x, range(20), workers=4) == [x * x for x in range(20)]


def test_parallel_map_single_worker():
    assert parallel_map(str, [1, 2], workers=1) == ["1", "2"]


def test_chunked_covers_range():
    slices = list(chunked(10, 4))
    assert slices == [slice(0, 4), slice(4, 8), slice(8, 10)]
    assert list(chunked(0, 4)) == []
