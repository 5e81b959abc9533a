class SuaveError(Exception):
    """Base class for every error raised by the exemplar."""


class WiringError(SuaveError, RuntimeError):
    """The bus was wired inconsistently. Signals a build bug, not a runtime condition."""


class RegistrationError(SuaveError, RuntimeError):
    pass


class ServiceNotFound(SuaveError, LookupError):
    pass


class KnowledgeBaseError(SuaveError, ValueError):
    pass


class MissionError(SuaveError, RuntimeError):
    pass


class ConfigError(SuaveError, ValueError):
    pass
