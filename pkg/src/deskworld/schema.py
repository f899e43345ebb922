"""Command schemas and the static command registry.

Every command the build understands is declared here as a CommandSchema;
decode-time validation rejects unknown "$type" names, unknown fields and
missing required fields.  The reference document for the whole vocabulary
can be generated from the registry itself (``render_reference``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DuplicateCommand, SchemaViolation, UnknownCommand
from .protocol import CommandEnvelope

_NUMBER = (int, float)


def _check_vec3(v) -> bool:
    return (
        isinstance(v, dict)
        and set(v) == {"x", "y", "z"}
        and all(isinstance(v[k], _NUMBER) and not isinstance(v[k], bool) for k in "xyz")
    )


_CHECKS = {
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, _NUMBER) and not isinstance(v, bool),
    "string": lambda v: isinstance(v, str),
    "vec3": _check_vec3,
    "string_list": lambda v: isinstance(v, list) and all(isinstance(x, str) for x in v),
    "int_list": lambda v: isinstance(v, list)
    and all(isinstance(x, int) and not isinstance(x, bool) for x in v),
    "frequency": lambda v: v in ("once", "always", "never"),
}


@dataclass
class FieldSpec:
    name: str
    semantic_type: str
    required: bool = True
    default: object = None
    aliases: tuple[str, ...] = ()
    doc: str = ""

    def __post_init__(self) -> None:
        if self.semantic_type not in _CHECKS:
            raise ValueError(f"unknown semantic type {self.semantic_type}")


@dataclass
class CommandSchema:
    type_name: str
    fields: list[FieldSpec] = field(default_factory=list)
    doc: str = ""

    def validate(self, raw: dict) -> CommandEnvelope:
        params: dict = {}
        seen_keys = set()
        for f in self.fields:
            names = (f.name, *f.aliases)
            present = [n for n in names if n in raw]
            if len(present) > 1:
                raise SchemaViolation(
                    f"{self.type_name}: conflicting aliases {present} for field {f.name}"
                )
            if present:
                value = raw[present[0]]
                if not _CHECKS[f.semantic_type](value):
                    raise SchemaViolation(
                        f"{self.type_name}: field {f.name} expects {f.semantic_type},"
                        f" got {value!r}"
                    )
                params[f.name] = value
                seen_keys.add(present[0])
            elif f.required:
                raise SchemaViolation(f"{self.type_name}: missing required field {f.name}")
            else:
                params[f.name] = f.default
        unknown = set(raw) - seen_keys - {"$type"}
        if unknown:
            raise SchemaViolation(f"{self.type_name}: unknown fields {sorted(unknown)}")
        return CommandEnvelope(self.type_name, params)


class CommandRegistry:
    def __init__(self) -> None:
        self._schemas: dict[str, CommandSchema] = {}

    def register(self, schema: CommandSchema) -> None:
        if schema.type_name in self._schemas:
            raise DuplicateCommand(schema.type_name)
        self._schemas[schema.type_name] = schema

    def get(self, type_name: str) -> CommandSchema:
        try:
            return self._schemas[type_name]
        except KeyError:
            raise UnknownCommand(type_name) from None

    def names(self) -> list[str]:
        return sorted(self._schemas)

    def __contains__(self, type_name: str) -> bool:
        return type_name in self._schemas

    def validate(self, raw) -> CommandEnvelope:
        if not isinstance(raw, dict) or "$type" not in raw:
            raise SchemaViolation("command object must carry a $type key")
        type_name = raw["$type"]
        if not isinstance(type_name, str) or not type_name:
            raise SchemaViolation("$type must be a non-empty string")
        return self.get(type_name).validate(raw)

    def render_reference(self) -> str:
        """Markdown reference for every registered command."""
        lines = ["# Command reference", ""]
        for name in self.names():
            s = self._schemas[name]
            lines.append(f"## {name}")
            if s.doc:
                lines.append(s.doc)
            for f in s.fields:
                req = "required" if f.required else f"optional, default {f.default!r}"
                alias = f" (alias: {', '.join(f.aliases)})" if f.aliases else ""
                doc = f" -- {f.doc}" if f.doc else ""
                lines.append(f"- `{f.name}`: {f.semantic_type}, {req}{alias}{doc}")
            lines.append("")
        return "\n".join(lines)


def _f(name, t, required=True, default=None, aliases=(), doc=""):
    return FieldSpec(name, t, required, default, tuple(aliases), doc)


_VEC0 = {"x": 0, "y": 0, "z": 0}


def builtin_registry() -> CommandRegistry:
    reg = CommandRegistry()
    for schema in [
        CommandSchema("load_scene", [_f("scene_name", "string")],
                      "Reset the world and load a named (empty) scene."),
        CommandSchema("create_empty_room", [
            _f("width", "number"), _f("length", "number")],
            "Build a static floor and four walls, width x length meters."),
        CommandSchema("add_object", [
            _f("name", "string", aliases=("model_name",)),
            _f("id", "int"),
            _f("url", "string", required=False),
            _f("scale_factor", "number", required=False),
            _f("position", "vec3", required=False, default=_VEC0),
            _f("rotation", "vec3", required=False, default=_VEC0),
            _f("category", "string", required=False),
        ], "Instantiate a model-library record as a dynamic object."),
        CommandSchema("destroy_object", [_f("id", "int")]),
        CommandSchema("teleport_object", [_f("id", "int"), _f("position", "vec3")]),
        CommandSchema("rotate_object", [_f("id", "int"), _f("rotation", "vec3")]),
        CommandSchema("apply_force_to_object", [
            _f("id", "int"), _f("force", "vec3", doc="impulse, N*s")]),
        CommandSchema("set_mass", [_f("id", "int"), _f("mass", "number")]),
        CommandSchema("set_physic_material", [
            _f("id", "int"),
            _f("dynamic_friction", "number"),
            _f("static_friction", "number"),
            _f("bounciness", "number"),
        ]),
        CommandSchema("set_audio_material", [_f("id", "int"), _f("material", "string")]),
        CommandSchema("set_kinematic_state", [
            _f("id", "int"), _f("is_kinematic", "int", required=False, default=1)],
            "Freeze (1) or unfreeze (0) an object; frozen objects are static."),
        CommandSchema("create_avatar", [
            _f("type", "string"),
            _f("avatar_id", "string", aliases=("id",)),
        ], "Avatar kinds: A_Img_Caps_Kinematic (camera), sphere_embodied, capsule_embodied."),
        CommandSchema("teleport_avatar_to", [
            _f("position", "vec3"),
            _f("avatar_id", "string", required=False,
               doc="may be omitted when exactly one avatar exists"),
        ]),
        CommandSchema("look_at", [
            _f("object_id", "int"),
            _f("avatar_id", "string", required=False),
        ]),
        CommandSchema("move_avatar", [
            _f("force", "vec3"), _f("avatar_id", "string", required=False)]),
        CommandSchema("set_pass_masks", [
            _f("pass_masks", "string_list"),
            _f("avatar_id", "string", required=False),
        ]),
        CommandSchema("send_images", [
            _f("frequency", "frequency"),
            _f("avatar_id", "string", required=False),
        ]),
        CommandSchema("send_bounds", [
            _f("frequency", "frequency"),
            _f("ids", "int_list", required=False),
        ]),
        CommandSchema("send_transforms", [_f("frequency", "frequency")]),
        CommandSchema("send_rigidbodies", [_f("frequency", "frequency")]),
        CommandSchema("send_collisions", [_f("frequency", "frequency")]),
        CommandSchema("send_audio", [_f("frequency", "frequency")],
                      "Per-collision synthesized impact clips, WAV base64."),
        CommandSchema("send_grayscale", [
            _f("object_id", "int"),
            _f("frequency", "frequency"),
            _f("avatar_id", "string", required=False),
        ], "Coverage fraction of the object in the avatar's id pass."),
        CommandSchema("set_gravity", [_f("vector", "vec3")]),
        CommandSchema("set_random_seed", [_f("seed", "int")]),
        CommandSchema("terminate", []),
    ]:
        reg.register(schema)
    return reg
