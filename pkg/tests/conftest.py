"""Shared fixtures. The kernel table and the two reference solves are
expensive, so they are built once per session and reused across files."""
import numpy as np
import pytest

from cornerflow import (CornerData, build_kernel_table, reconstruct_U,
                        solve_similarity_profile, symmetric_grid)


@pytest.fixture(scope="session")
def ktable():
    return build_kernel_table()


@pytest.fixture(scope="session")
def corner_ab():
    return CornerData(0.1, 0.1)


@pytest.fixture(scope="session")
def profile_8k(ktable, corner_ab):
    return solve_similarity_profile(corner_ab, table=ktable)


@pytest.fixture(scope="session")
def profile_16k(ktable, corner_ab):
    xs = symmetric_grid(40.0, 16384)
    return solve_similarity_profile(corner_ab, table=ktable, xs=xs)


@pytest.fixture(scope="session")
def phi_8k(profile_8k, ktable):
    return reconstruct_U(profile_8k, 1.0, ktable).phi


@pytest.fixture(scope="session")
def phi_16k(profile_16k, ktable):
    return reconstruct_U(profile_16k, 1.0, ktable).phi


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
