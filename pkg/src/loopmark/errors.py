"""Exception hierarchy shared by all modules."""


class LoopmarkError(Exception):
    """Base class for every error raised by this package."""


class PddlSyntaxError(LoopmarkError):
    """Malformed PDDL input; carries the source position."""

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
            if column is not None:
                where += f"{column}:"
        super().__init__(f"{where} {message}" if where else message)


class UnsupportedRequirementError(LoopmarkError):
    """A :requirements key outside the supported STRIPS subset."""


class TypeCycleError(LoopmarkError):
    """The type hierarchy contains a cycle."""


class ValidationError(LoopmarkError):
    """A structurally parsed definition violates referential integrity."""


class GroundingLimitError(LoopmarkError):
    """Grounding exceeded the configured atom or action cap."""


class PlanExecutionError(LoopmarkError):
    """A plan step is inapplicable; carries the failing step index."""

    def __init__(self, message, step=None, task_id=None):
        self.step = step
        self.task_id = task_id
        prefix = ""
        if task_id is not None:
            prefix += f"[{task_id}] "
        if step is not None:
            prefix += f"step {step}: "
        super().__init__(prefix + message)


class GoalNotReachedError(PlanExecutionError):
    """The executed plan ended in a non-goal state."""


class UnsupportedGoalError(LoopmarkError):
    """Goal annotation requires a conjunction of positive literals."""


class FingerprintMismatchError(LoopmarkError):
    """A serialized artifact belongs to a different domain."""


class SchemaError(LoopmarkError):
    """A serialized artifact does not match the expected JSON layout."""


class EmptyPoolError(LoopmarkError):
    """Feature generation produced no features."""


class PreprocessingError(LoopmarkError):
    """Preprocessing removed every feature."""


class DiscoveryFailedError(LoopmarkError):
    """No landmark could be discovered from the training trajectories."""


class GraphInapplicableError(LoopmarkError):
    """A landmark graph cannot be initialized on the given task."""


class CounterDisagreementError(GraphInapplicableError):
    """Loop counter values disagree on the task's initial state."""


class ResourceLimitError(LoopmarkError):
    """A configured time/expansion/size cap was exceeded."""
