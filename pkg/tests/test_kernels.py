"""Compiled kernels and their numpy fallbacks must agree exactly."""
from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cms import _kernels as K


@settings(max_examples=80, deadline=None)
@given(vals=st.lists(st.integers(0, 30), min_size=1, max_size=7), d=st.integers(0, 300))
def test_knapsack_paths_agree(vals, d):
    v = np.asarray(vals, dtype=np.int64)
    a = K.knapsack_min_cost(v, d)
    b = K.knapsack_min_cost_numpy(v, d)
    c = K.knapsack_min_cost_loop(v, d)
    assert np.array_equal(a, b) and np.array_equal(a, c)


@settings(max_examples=80, deadline=None)
@given(sizes=st.lists(st.integers(1, 6), max_size=40), k=st.integers(6, 9))
def test_first_fit_paths_agree(sizes, k):
    s = np.asarray(sorted(sizes, reverse=True), dtype=np.int64)
    a = K.first_fit(s, k)
    b = K.first_fit_numpy(s, k)
    assert np.array_equal(a, b)
    loads = np.bincount(a, weights=s) if len(s) else np.zeros(0)
    assert (loads <= k).all()


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 3), nb=st.integers(1, 3), ns=st.integers(0, 4), seed=st.integers(0, 10**6))
def test_brute_paths_agree(n, nb, ns, seed):
    rng = np.random.default_rng(seed)
    table = rng.integers(0, 6, size=(n, nb))
    demand = rng.integers(0, 10, size=n)
    slots = rng.integers(0, nb, size=ns)
    assert K.brute_throughput(table, demand, slots) == K.brute_throughput_numpy(table, demand, slots)


def test_brute_example():
    table = np.array([[3, 3], [2, 1]])
    assert K.brute_throughput(table, np.array([3, 3]), np.array([0, 1])) == 5


def test_env_flag_selects_fallback():
    code = ("import cms._kernels as K; "
            "print(K.NUMBA, K.knapsack_min_cost is K.knapsack_min_cost_numpy)")
    env = dict(os.environ, CMS_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["False", "True"]


@pytest.mark.skipif(not K.NUMBA, reason="numba unavailable")
def test_numba_is_default():
    assert K.knapsack_min_cost is not K.knapsack_min_cost_numpy
