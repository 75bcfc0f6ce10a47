import pytest

from cxcdyn.dynsys import circle_system, fsr_system, fullshift_system
from cxcdyn.gamma import build_graph
from cxcdyn.hypmetric import MetricParams


@pytest.fixture(scope="session")
def circle_spec():
    return circle_system(2, 4)


@pytest.fixture(scope="session")
def circle6(circle_spec):
    return build_graph(circle_spec, 6)


@pytest.fixture(scope="session")
def circle8(circle_spec):
    return build_graph(circle_spec, 8)


@pytest.fixture(scope="session")
def circle9(circle_spec):
    return build_graph(circle_spec, 9)


@pytest.fixture(scope="session")
def shift_spec():
    return fullshift_system(2)


@pytest.fixture(scope="session")
def shift6(shift_spec):
    return build_graph(shift_spec, 6)


@pytest.fixture(scope="session")
def bary_spec():
    return fsr_system("barycentric")


@pytest.fixture(scope="session")
def bary4(bary_spec):
    return build_graph(bary_spec, 4)


@pytest.fixture(scope="session")
def pillow_spec():
    return fsr_system("pillow")


@pytest.fixture(scope="session")
def pillow4(pillow_spec):
    return build_graph(pillow_spec, 4)


@pytest.fixture
def params():
    return MetricParams(0.25, 6)
