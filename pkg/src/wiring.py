"""Engine wiring files.

A wiring file is YAML::

    channels:
      LokibotProcess: lokiBotProcSet
    bindings:
      plugins:
        - {function: IsProcessName, argument: ytpgwim, value: true}
      flags:
        SomeFlag: true
    externals: [KnownCCAccesed]
    loop_bound: 1
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from .gtdl.ast import PluginCall
from .gtdl.compiler import EngineWiring
from .gtdl.semantics import PluginValuation

logger = logging.getLogger(__name__)


class WiringFileError(ValueError):
    """Raised when a wiring file is not valid YAML or violates the schema."""


class PluginBinding(BaseModel):
    function: str = Field(..., min_length=1)
    argument: str
    value: bool


class BindingSpec(BaseModel):
    plugins: List[PluginBinding] = Field(default_factory=list)
    flags: Dict[str, bool] = Field(default_factory=dict)


class WiringSpec(BaseModel):
    """Schema of a wiring file."""

    channels: Dict[str, str] = Field(default_factory=dict)
    bindings: BindingSpec = Field(default_factory=BindingSpec)
    externals: List[str] = Field(default_factory=list)
    loop_bound: Optional[int] = Field(None, ge=1)

    model_config = {"extra": "forbid"}

    def to_wiring(self, extra_externals: Optional[List[str]] = None) -> EngineWiring:
        plugins = {
            PluginCall(binding.function, binding.argument): binding.value
            for binding in self.bindings.plugins
        }
        externals = frozenset(self.externals) | frozenset(extra_externals or [])
        return EngineWiring(
            channels=dict(self.channels),
            bindings=PluginValuation(plugins=plugins, flags=dict(self.bindings.flags)),
            externals=externals,
        )


def parse_wiring(text: str) -> WiringSpec:
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise WiringFileError(f"invalid wiring YAML: {e}") from e
    if not isinstance(data, dict):
        raise WiringFileError("wiring file must be a mapping")
    try:
        spec = WiringSpec.model_validate(data)
    except ValidationError as e:
        raise WiringFileError(f"invalid wiring file: {e}") from e
    logger.debug(
        f"Loaded wiring with {len(spec.channels)} channels, "
        f"{len(spec.bindings.plugins)} pinned plugin calls"
    )
    return spec


def load_wiring(path: Union[str, Path]) -> WiringSpec:
    return parse_wiring(Path(path).read_text(encoding="utf-8"))
