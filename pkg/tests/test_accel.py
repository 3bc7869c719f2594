"""Kernel backend selection and numba/numpy agreement."""

from __future__ import annotations

import os
import random
import subprocess
import sys

import numpy as np

from callnet import _accel

from conftest import random_simple_graph


def _arrays(nodes, edges):
    pos = {n: i for i, n in enumerate(sorted(nodes))}
    us = np.array([pos[u] for u, _ in edges], dtype=np.int64)
    vs = np.array([pos[v] for _, v in edges], dtype=np.int64)
    indptr, indices, edge_ids = _accel.build_csr(len(nodes), us, vs)
    return len(nodes), indptr, indices, edge_ids, len(edges)


def test_backends_agree_on_random_graphs():
    rng = random.Random(41)
    for _ in range(15):
        nodes, edges = random_simple_graph(rng, rng.randint(2, 40), 0.15)
        n, indptr, indices, edge_ids, m = _arrays(nodes, edges)
        nb_nodes, nb_edges = _accel._betweenness_numpy(n, indptr, indices, edge_ids, m)
        if _accel.BACKEND == "numba":
            jit_nodes, jit_edges = _accel._betweenness_njit(n, indptr, indices, edge_ids, m)
            assert np.allclose(nb_nodes, jit_nodes, atol=1e-12)
            assert np.allclose(nb_edges, jit_edges, atol=1e-12)
            g1 = _accel._geodesic_stats_njit(n, indptr, indices)
            g2 = _accel._geodesic_stats_numpy(n, indptr, indices)
            for a, b in zip(g1, g2):
                assert np.array_equal(a, b)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, CALLNET_ACCEL="numpy")
    out = subprocess.run(
        [sys.executable, "-c", "from callnet import _accel; print(_accel.active_backend())"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_bad_env_flag_rejected():
    env = dict(os.environ, CALLNET_ACCEL="gpu")
    out = subprocess.run(
        [sys.executable, "-c", "import callnet"],
        env=env,
        capture_output=True,
        text=True,
    )
    assert out.returncode != 0
    assert "CALLNET_ACCEL" in out.stderr


def test_empty_graph_kernels():
    node_bc, edge_bc = _accel.betweenness_arrays(
        0, np.zeros(1, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64), 0
    )
    assert node_bc.size == 0 and edge_bc.size == 0
