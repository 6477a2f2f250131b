"""Hypothesis strategies shared by the test modules."""
import random

from hypothesis import strategies as st

from mcdline.grid import Instance, Replica


@st.composite
def instances(draw, n_max=8, N_max=4, t_max=5, n_min=1):
    n = draw(st.integers(n_min, n_max))
    origin = draw(st.integers(1, n))
    reqs = draw(st.lists(st.tuples(st.integers(1, n), st.integers(0, t_max)), max_size=N_max))
    reqs.sort(key=lambda r: r[1])
    return Instance(n, origin, tuple(Replica(*r) for r in reqs))


def random_instance(rng: random.Random, n_max: int, N_max: int, t_max: int, n_min: int = 1) -> Instance:
    n = rng.randint(n_min, n_max)
    N = rng.randint(0, N_max)
    reqs = sorted(((rng.randint(1, n), rng.randint(0, t_max)) for _ in range(N)), key=lambda r: r[1])
    return Instance(n, rng.randint(1, n), tuple(Replica(*r) for r in reqs))
