import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from minplus.core import MaskedMatrix

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@st.composite
def masked(draw, rows=st.integers(1, 5), cols=st.integers(1, 5), lo=0, hi=8, shape=None):
    n, m = shape if shape is not None else (draw(rows), draw(cols))
    vals = draw(hnp.arrays(np.int64, (n, m), elements=st.integers(lo, hi)))
    mask = draw(hnp.arrays(np.bool_, (n, m)))
    return MaskedMatrix(vals, mask)


@st.composite
def product_pair(draw, max_dim=5, lo=0, hi=8):
    n1, n2, n3 = (draw(st.integers(1, max_dim)) for _ in range(3))
    return draw(masked(shape=(n1, n2), lo=lo, hi=hi)), draw(masked(shape=(n2, n3), lo=lo, hi=hi))


def loop_min_plus(A: MaskedMatrix, B: MaskedMatrix) -> list[list]:
    """Pure-Python triple loop, independent of the numpy implementation."""
    a, b = A.to_rows(), B.to_rows()
    n2 = len(b)
    m = len(b[0]) if b else B.cols
    out = []
    for row in a:
        cells = []
        for j in range(m):
            sums = [row[k] + b[k][j] for k in range(n2) if row[k] is not None and b[k][j] is not None]
            cells.append(min(sums) if sums else None)
        out.append(cells)
    return out
