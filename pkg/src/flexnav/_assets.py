from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def prompt(name: str) -> str:
    """Text of a bundled prompt asset, trailing newline stripped."""
    return (resources.files("flexnav") / "prompts" / name).read_text(encoding="utf-8").rstrip("\n")
