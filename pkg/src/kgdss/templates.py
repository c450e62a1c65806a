"""Prompt templates: built-in defaults plus file-based overrides.

Placeholders use {name} syntax (lowercase identifiers only, so literal
braces in grammar examples or JSON snippets pass through untouched). A
placeholder left unfilled at render time is a hard error.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import TemplateError

_PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")

KG_CONSTRUCTION = (
    "You are a networked intelligence helping a human track knowledge triples,"
    " about all relevant people, things, concepts, etc. and integrating them with"
    " your knowledge stored within your weights, as well as that stored in a"
    " knowledge graph. Extract all of the knowledge triples from the text."
    " A knowledge triple is a clause that contains a subject, a predicate,"
    " and an object. The subject is the entity being described, the predicate"
    " is the property of the subject that is being described, and the object"
    " is the value of the property. thinking in English, but please keep the"
    " original language."
    "\n\nEXAMPLE"
    "\n\nINPUT: Ammonia is an irritating gas that can form explosive mixtures"
    " with air; inhalation can cause toxic pulmonary edema. It can cause eye,"
    " skin, and respiratory tract burns; if the gas leak cannot be shut off,"
    " the flame at the leak site should not be extinguished; when handling"
    " liquid ammonia, wear cold-resistant clothing."
    "\n\nOUTPUT: (Ammonia, is, irritating gas) <|> (Ammonia, form, explosive"
    " mixtures with air) <|> (Ammonia, cause, toxic pulmonary edema) <|>"
    " (Ammonia, cause, eye burns) <|> (Ammonia, cause, skin burns) <|>"
    " (Ammonia, cause, respiratory tract burns) <|> (Handling liquid ammonia,"
    " require ,wearing cold-resistant clothing)"
    "\n\nEND OF EXAMPLE"
    "\n\nINPUT: \"{text}\""
    "\n\nOUTPUT:\"\""
)

DECISION_SUPPORT = (
    "There are the following triple arrays representing relationships between entities:"
    "\n\n\"{context_str}\""
    "\n\nBased on the above information, answer the following questions: \"{query_str}\""
    "\n\nPlease refrain from using knowledge beyond the above information."
)

REFRAIN_SENTENCE = "Please refrain from using knowledge beyond the above information."

PROJECTION = 'What are the entities connected to "{entity}" by relation "{relation}"'
INTERSECTION = 'What are the entities in the intersection of "{entities1}" and "{entities2}"'
UNION = 'What are the entities in the union of "{entities1}" and "{entities2}"'
NEGATION = 'Which entities do not belong to the entity set "{entities}"'

# Built-in decomposition prompt: the grammar plus three worked examples drawn
# from the shipped fixtures. Override via the templates file to fit a corpus.
DECOMPOSITION = (
    "Translate the question into a logical query over the knowledge graph."
    " Reply with the logical query only, written in exactly this grammar:"
    "\n\n"
    'p(<query>, "<relation>")     entities reached from <query> via the relation;'
    " prefix the quoted relation with ^ to traverse it in reverse\n"
    "and(<query>, <query>, ...)  entities present in every part\n"
    "or(<query>, <query>, ...)   entities present in any part\n"
    "not(<query>)                entities not in the part\n"
    '{"<entity>", "<entity>"}    a set of entity labels'
    "\n\nEXAMPLES"
    "\n\nQuestion: What is the protection level for the moderate toxicity, low hazard zone?"
    '\nLogical query: p({"Moderate toxicity, low hazard zone"}, "Protection level")'
    "\n\nQuestion: What protective equipment is required when sulfur dioxide and"
    " acetylene leak in a moderate toxicity, low hazard zone?"
    '\nLogical query: and(p({"Acetylene"}, "requires protection"),'
    ' p({"Moderate toxicity, low hazard zone"}, "Protection level"),'
    ' p({"Sulfur dioxide"}, "requires protection"))'
    "\n\nQuestion: Which substances can cause eye burns or skin burns?"
    '\nLogical query: or(p({"eye burns"}, ^"cause"), p({"skin burns"}, ^"cause"))'
    "\n\nEND OF EXAMPLES"
    "\n\nQuestion: \"{question}\""
    "\nLogical query:"
)


def render_template(template: str, /, **params) -> str:
    """Substitute {name} placeholders; any unfilled placeholder is an error.

    Positional-only first argument: placeholder names like {text} stay usable
    as keywords.
    """
    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in params:
            raise TemplateError(f"missing placeholder {{{name}}} at render time")
        return str(params[name])

    return _PLACEHOLDER.sub(substitute, template)


@dataclass(frozen=True)
class PromptTemplateSet:
    kg_construction: str = KG_CONSTRUCTION
    decision_support: str = DECISION_SUPPORT
    projection: str = PROJECTION
    intersection: str = INTERSECTION
    union: str = UNION
    negation: str = NEGATION
    decomposition: str = DECOMPOSITION

    @classmethod
    def defaults(cls) -> "PromptTemplateSet":
        return cls()

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def render(self, name: str, **params) -> str:
        if name not in self.names():
            raise TemplateError(f"unknown template {name!r}")
        return render_template(getattr(self, name), **params)


def load_templates(path: str | Path) -> PromptTemplateSet:
    """Read a templates file (JSON object name -> text) over the defaults."""
    try:
        overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateError(f"templates file {path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(overrides, dict):
        raise TemplateError(f"templates file {path} must hold one object")
    known = PromptTemplateSet.names()
    for name in overrides:
        if name not in known:
            raise TemplateError(f"templates file names unknown template {name!r}")
        if not isinstance(overrides[name], str):
            raise TemplateError(f"template {name!r} must be text")
    base = PromptTemplateSet.defaults().__dict__ | overrides
    return PromptTemplateSet(**base)
