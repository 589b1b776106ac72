"""Bundled example maps."""
from __future__ import annotations

from importlib import resources

from ..mapspec import parse_map_spec

FIXTURES = {
    "f1": "x/2 + 1/8 on [0,1/2), x/2 + 3/8 on [1/2,1]; two fixed points, no connections",
    "f2": "x/2 + 1/4 on [0,1/2), x/2 on [1/2,1]; a connection, no periodic points",
    "golden": "rotation by the golden mean (float)",
    "sqrt_golden": "golden rotation conjugated by x -> x^2; invariant CDF is sqrt(x) (float)",
    "flip_involution": "3/5 - x on [0,3/5), 8/5 - x on [3/5,1]; an IET with both pieces flipped",
}


def list_fixtures() -> list[tuple[str, str]]:
    return list(FIXTURES.items())


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"no bundled fixture named {name!r}")
    return resources.files(__name__).joinpath(f"{name}.map").read_text(encoding="utf-8")


def load_fixture(name: str):
    return parse_map_spec(fixture_text(name))
