"""Access to the shipped example netlists and configs."""

from importlib import resources


def fixture_text(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")


def fixture_path(name: str):
    return resources.files(__package__).joinpath(name)
