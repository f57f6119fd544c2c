"""Exception types shared across the package."""


class TomographyError(Exception):
    """Base class for all polytomo-specific failures."""


class IncompleteProtocolError(TomographyError):
    """The summed row projectors of a protocol are not proportional to the identity."""


class DegeneratePrecisionModelError(TomographyError):
    """The loss-coefficient count does not match the model's degrees of freedom."""


class ConfigError(TomographyError):
    """A campaign configuration file is malformed or inconsistent."""


class CampaignRunError(TomographyError):
    """A Monte Carlo run failed; the message names the run index and seed."""
