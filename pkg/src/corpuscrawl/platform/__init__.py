from ..errors import ValidationError
from .base import AlignmentSource, LivePlatform, Platform
from .sim import SimPlatform, World, bundled_worlds, generate_world, resolve_world_path, synth_posteriors
from .http import HttpPlatform, PlatformServer


def open_platform(spec: str):
    """``sim:<world.json>``, ``http://...`` for a mounted simulator, or ``live_stub``."""
    if spec == "live_stub":
        return LivePlatform()
    if spec.startswith("sim:"):
        return SimPlatform.from_file(spec[4:])
    if spec.startswith(("http://", "https://")):
        return HttpPlatform(spec)
    raise ValidationError(f"unknown platform spec {spec!r}")


__all__ = ["AlignmentSource", "LivePlatform", "Platform", "SimPlatform", "World", "bundled_worlds",
           "generate_world", "resolve_world_path", "synth_posteriors", "HttpPlatform", "PlatformServer",
           "open_platform"]
