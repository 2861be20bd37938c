"""Tiny distilled sine-network avatars: training, rendering, serving."""

from .autodiff import Tensor, Tape, tape_forward, backward, adam_step, AdamState

__version__ = "0.1.0"

__all__ = ["Tensor", "Tape", "tape_forward", "backward", "adam_step", "AdamState"]
