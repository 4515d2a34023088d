"""Resolution planning and prompt templates for training and inference.

The generated image keeps the content reference's exact dimensions; the
style reference is resized to a square whose side is the smaller content
edge. Training resolutions scale the smaller edge to min_edge and snap
both edges to a latent-grid multiple.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import PlannerError

DEFAULT_PROMPT = (
    "Style Transfer the style of Figure 2 to Figure 1, "
    "and keep the content and characteristics of Figure 1."
)
MATERIAL_PROMPT = "Transfer Figure 1 into {arg} material."
STYLE_PROMPT = "Transfer Figure 1 into {arg} style."


class PromptTemplate(str, Enum):
    DEFAULT = "default"
    MATERIAL = "material"
    STYLE = "style"


@dataclass(frozen=True)
class ResolutionPlan:
    output_w: int
    output_h: int
    style_side: int

    def to_obj(self) -> dict:
        return {
            "output_w": self.output_w,
            "output_h": self.output_h,
            "style_side": self.style_side,
        }


def plan_inference_resolution(content_w: int, content_h: int) -> ResolutionPlan:
    """Output matches the content dims; style square side is min(w, h)."""
    if content_w < 1 or content_h < 1:
        raise PlannerError(
            f"content dimensions must be positive, got {content_w}x{content_h}"
        )
    return ResolutionPlan(
        output_w=content_w,
        output_h=content_h,
        style_side=min(content_w, content_h),
    )


def _round_half_away(x: Fraction) -> int:
    # positive inputs only; .5 rounds up
    shifted = x + Fraction(1, 2)
    return shifted.numerator // shifted.denominator


def plan_training_resolution(
    w: int, h: int, min_edge: int = 1024, multiple: int = 16
) -> tuple[int, int]:
    """Scale so the smaller edge is exactly min_edge, snapping to `multiple`.

    Exact rational arithmetic, round-half-away-from-zero: the result is
    identical on every platform. min_edge must itself be a multiple of
    `multiple`, otherwise the two postconditions (grid-aligned dims, exact
    min edge) are unsatisfiable.
    """
    if multiple < 1:
        raise PlannerError(f"multiple must be >= 1, got {multiple}")
    if min_edge < multiple:
        raise PlannerError(f"min_edge {min_edge} is smaller than multiple {multiple}")
    if min_edge % multiple != 0:
        raise PlannerError(
            f"min_edge {min_edge} is not a multiple of {multiple}; "
            "grid-aligned dims with an exact min edge would be unsatisfiable"
        )
    if min(w, h) < multiple:
        raise PlannerError(
            f"image {w}x{h} is smaller than the grid multiple {multiple}"
        )
    scale = Fraction(min_edge, min(w, h))
    out_w = _round_half_away(Fraction(w) * scale / multiple) * multiple
    out_h = _round_half_away(Fraction(h) * scale / multiple) * multiple
    if w <= h:
        out_w = min_edge
    if h <= w:
        out_h = min_edge
    return out_w, out_h


def render_prompt(template: PromptTemplate | str, arg: str | None = None) -> str:
    template = PromptTemplate(template)
    if template is PromptTemplate.DEFAULT:
        if arg is not None:
            raise PlannerError("default template takes no argument")
        return DEFAULT_PROMPT
    if arg is None or not arg.strip():
        raise PlannerError(f"{template.value} template requires an argument")
    pattern = MATERIAL_PROMPT if template is PromptTemplate.MATERIAL else STYLE_PROMPT
    return pattern.format(arg=arg)
