"""Exception types raised across the workbench."""


class ThermopadError(Exception):
    """Base class for all workbench errors."""


class ShapeError(ThermopadError):
    """An input tensor does not match the shape a network expects."""


class LabelError(ThermopadError):
    """A class label lies outside the valid index range."""


class StructureError(ThermopadError):
    """A network's layer sequence violates a structural requirement."""


class ConfigurationError(ThermopadError):
    """A model or experiment configuration is unusable as given."""


class ParameterError(ThermopadError):
    """Synthetic-generator parameters are out of range."""


class IngestionError(ThermopadError):
    """A dataset manifest or its image files cannot be ingested."""


class ProtocolError(ThermopadError):
    """A split plan or training run violates the experimental protocol."""


class FusionError(ThermopadError):
    """Per-modality score records cannot be fused."""


class WeightFormatError(ThermopadError):
    """A weight file is malformed or does not match the target network."""


class ConfigError(ThermopadError):
    """An experiment config file is missing, malformed, or inconsistent."""
