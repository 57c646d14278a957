import pytest
from gmpy2 import mpq

from miop.families import make_family


def acceptance_specs():
    return {
        "M": make_family("M", {"beta": 2, "c": "1/2"}),
        "lqL": make_family("lqL", {"a": "1/2"}, q="1/4"),
        "lqJ": make_family("lqJ", {"a": "1/2", "b": "1/3"}, q="1/4"),
        "R": make_family("R", {"b": 7, "c": 1, "d": "1/2"}, N=5),
        "qR": make_family("qR", {"b": "1/4096", "c": "1/2", "d": "1/2"}, q="1/4", N=5),
        "W": make_family("W", {"a": ["1/2", "2/3", "3/4", "4/5"]}),
        "AW": make_family("AW", {"a": ["1/4", "1/9", "2/5", "1/10"]}, q="1/4"),
    }


SPECS = acceptance_specs()
RDQM_NAMES = ["M", "lqL", "lqJ", "R", "qR"]
IDQM_NAMES = ["W", "AW"]


@pytest.fixture(params=list(SPECS))
def any_spec(request):
    return SPECS[request.param]


@pytest.fixture(params=RDQM_NAMES)
def rdqm_spec(request):
    return SPECS[request.param]


@pytest.fixture(params=IDQM_NAMES)
def idqm_spec(request):
    return SPECS[request.param]
