import functools

import pytest

from flopqlh import curveclasses as cc
from flopqlh.birkhoff import gauge_from_connection
from flopqlh.lerayhirsch import Reducer, assemble_connection
from flopqlh.scenario import bundled


@functools.lru_cache(maxsize=None)
def scenario(name):
    return bundled(name)


@functools.lru_cache(maxsize=None)
def algebra(name):
    return scenario(name).algebra()


@functools.lru_cache(maxsize=None)
def reducer(name):
    sc = scenario(name)
    return Reducer.for_algebra(algebra(name), sc.lift)


@functools.lru_cache(maxsize=None)
def connection(name):
    sc = scenario(name)
    return assemble_connection(algebra(name), sc.lift, reducer(name))


@functools.lru_cache(maxsize=None)
def gauge(name):
    sc = scenario(name)
    return gauge_from_connection(algebra(name), connection(name), sc.weight_bound)


def nonzero_box(name):
    sc = scenario(name)
    return [b for b in cc.box_classes(algebra(name), *sc.box) if not b.is_zero()]


@pytest.fixture
def hirz():
    return algebra("hirzebruch")


@pytest.fixture
def p1flop():
    return algebra("p1flop_00_01")
