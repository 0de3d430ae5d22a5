"""The rich-text, recipe and slideshow editors as scripted scenarios."""

from .builders import (
    CLOSED,
    HALF_OPEN,
    clockwise,
    rich_text_bold,
    rich_text_delete_range,
    rotate_group,
    scale_recipe,
    translate_object,
)
from .runner import ScenarioError, available, check, load, load_golden, oracle_outcome, render, run

__all__ = [
    "CLOSED",
    "HALF_OPEN",
    "ScenarioError",
    "available",
    "check",
    "clockwise",
    "load",
    "load_golden",
    "oracle_outcome",
    "render",
    "rich_text_bold",
    "rich_text_delete_range",
    "rotate_group",
    "run",
    "scale_recipe",
    "translate_object",
]
