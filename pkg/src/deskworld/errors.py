"""Exception hierarchy shared across the engine."""


class DeskworldError(Exception):
    """Base class for all engine errors."""


# --- wire / protocol ---

class OversizePayload(DeskworldError):
    pass


class MalformedFrame(DeskworldError):
    pass


class UnknownCommand(DeskworldError):
    pass


class SchemaViolation(DeskworldError):
    pass


class DuplicateCommand(DeskworldError):
    pass


class ProtocolError(DeskworldError):
    pass


# --- world / library ---

class LibraryNotFound(DeskworldError):
    pass


class RecordNotFound(DeskworldError):
    pass


class DuplicateId(DeskworldError):
    pass


class DuplicateAvatarId(DeskworldError):
    pass


class UnknownObject(DeskworldError):
    pass


class UnknownAvatar(DeskworldError):
    pass


class MeshLoadError(DeskworldError):
    pass


class DegenerateLookAt(DeskworldError):
    pass


# --- physics ---

class DegenerateInput(DeskworldError):
    pass


class StaticBody(DeskworldError):
    pass


class SimulationDiverged(DeskworldError):
    pass


# --- audio ---

class UnknownMaterial(DeskworldError):
    pass


class SubThresholdImpact(DeskworldError):
    pass


# --- sensors ---

class PassNotEnabled(DeskworldError):
    pass


# --- scenarios / server ---

class NoValidPose(DeskworldError):
    pass


class PortInUse(DeskworldError):
    pass
