"""Prompt template loading and `{placeholder}` substitution."""
from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Optional

from .beliefs import AgentKind

_PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")

BELIEF_UPDATE = "belief_update"
DESIRE_GENERATION = "desire_generation"
ACTION_DECISION = "action_decision"
IDENTITY_SUMMARY = "identity_summary"
TRAIT_MATCHING = "trait_matching"
OPINION_INTERVIEW = "opinion_interview"

RETRY_SUFFIX = "\n\nRespond with valid JSON only."


def placeholders(template: str) -> List[str]:
    return _PLACEHOLDER.findall(template)


def render(template: str, values: Mapping[str, object]) -> str:
    """Substitute every `{name}`; JSON braces in the template are left alone."""
    missing = sorted({n for n in placeholders(template) if n not in values})
    if missing:
        raise KeyError(f"template placeholders without values: {missing}")
    return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), template)


class TemplateSet:
    """Prompt templates plus the per-role tables that fill them.

    `template_dir` overrides the bundled files; any file missing from it falls
    back to the packaged copy.
    """

    def __init__(self, template_dir: Optional[str] = None):
        self.template_dir = Path(template_dir) if template_dir else None
        self._cache: Dict[str, str] = {}
        self.roles = json.loads(self._read("roles.json"))
        for kind in AgentKind:
            if kind.value not in self.roles:
                raise ValueError(f"role table lacks an entry for {kind.value}")

    def _read(self, name: str) -> str:
        if self.template_dir is not None and (self.template_dir / name).exists():
            return (self.template_dir / name).read_text(encoding="utf-8")
        return resources.files("opinionsim.cognition").joinpath("templates", name).read_text(encoding="utf-8")

    def template(self, name: str) -> str:
        if name not in self._cache:
            self._cache[name] = self._read(f"{name}.txt")
        return self._cache[name]

    def role(self, kind: AgentKind) -> dict:
        return self.roles[AgentKind(kind).value]

    def desire_candidates(self, kind: AgentKind) -> List[str]:
        return list(self.role(kind)["desire_types"])

    def render(self, name: str, **values) -> str:
        return render(self.template(name), values)


@lru_cache(maxsize=1)
def default_templates() -> TemplateSet:
    return TemplateSet()


@lru_cache(maxsize=1)
def trait_pool() -> Dict[str, List[str]]:
    text = resources.files("opinionsim").joinpath("data", "trait_pool.json").read_text(encoding="utf-8")
    return json.loads(text)
