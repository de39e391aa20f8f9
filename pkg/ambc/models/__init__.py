# Dataclass domain models
