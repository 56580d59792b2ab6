"""Enumerations for milking sessions, models and factor kinds."""

from enum import Enum


class Session(Enum):
    """Class for representing the milking that was sampled on a test day."""

    AM = "Morning milking"
    PM = "Evening milking"

    def serialize(self):
        """Convert class data into a string."""
        return self.name

    @property
    def index(self) -> int:
        """Milking number (1 for AM, 2 for PM)."""
        return 1 if self is Session.AM else 2

    @classmethod
    def parse(cls, value) -> "Session":
        """Get a session from its name ('AM'/'PM') or milking number (1/2)."""
        if isinstance(value, Session):
            return value
        text = str(value).strip().upper()
        if text in ("1", "AM"):
            return cls.AM
        if text in ("2", "PM"):
            return cls.PM
        raise ValueError(f"Unknown session {value!r}, expected 'AM' or 'PM'")


class FactorKind(Enum):
    """Class for representing the two kinds of correction factors."""

    additive = "Added to b times the partial yield"
    multiplicative = "Multiplied with the partial yield"

    def serialize(self):
        """Convert class data into a string."""
        return self.name


class PredictMode(Enum):
    """Class for representing how a fitted model turns a partial yield into a daily yield."""

    direct = "Evaluate the fitted model at the observed interval"
    factor = "Look up a correction factor for the interval bin"

    def serialize(self):
        """Convert class data into a string."""
        return self.name


class ModelId(Enum):
    """Class for representing the models of the catalog."""

    M1 = "Class means of y - 2x per session and interval bin"
    M2A = "y - 2x on session intercepts and interval, direct"
    M2B = "y - 2x on session intercepts and interval, additive factors"
    M3A = "y on session intercepts, interval and x, direct"
    M3B = "y on session intercepts, interval and x, additive factors"
    M4 = "Quadratic smoothing of per-bin partial proportions"
    M5 = "Linear smoothing of reciprocal per-bin ratio factors"
    M6A = "x/y on session intercepts and interval, direct"
    M6B = "x/y on session intercepts and interval, multiplicative factors"
    M7A = "log y on session intercepts, interval and log x, direct"
    M7B = "log y on session intercepts, interval and log x, multiplicative factors"

    def serialize(self):
        """Convert class data into a string."""
        return self.name

    @property
    def family(self) -> str:
        """Name shared by models with the same fit (e.g. 'M3' for M3A and M3B)."""
        return self.name.rstrip("AB")

    @property
    def factor_kind(self) -> FactorKind:
        """Kind of correction factor table this model produces."""
        if self.family in ("M1", "M2", "M3"):
            return FactorKind.additive
        return FactorKind.multiplicative

    @property
    def default_mode(self) -> PredictMode:
        """A-suffix models predict directly, all others through factor tables."""
        return PredictMode.direct if self.name.endswith("A") else PredictMode.factor

    @property
    def supports_direct(self) -> bool:
        """Check if the model has coefficients that can be evaluated at any interval."""
        return self.family in ("M2", "M3", "M6", "M7")

    @property
    def supports_dim(self) -> bool:
        """Check if a DIM covariate can be fitted with this model."""
        return self.family in ("M2", "M3", "M5", "M6", "M7")

    @classmethod
    def parse_list(cls, text: str) -> list:
        """Parse 'all' or a comma separated list of model ids."""
        if text.strip().lower() == "all":
            return list(cls)
        ids = []
        for item in text.split(","):
            item = item.strip().upper()
            if not item:
                continue
            try:
                ids.append(cls[item])
            except KeyError:
                valid = ", ".join(m.name for m in cls)
                raise ValueError(f"Unknown model id {item!r}, valid ids: {valid}") from None
        return ids
