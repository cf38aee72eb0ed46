"""Exception hierarchy shared by every stage of the flow."""


class FlowError(Exception):
    """Base class for all errors raised by fpga3d."""


# --- netlist-io -------------------------------------------------------------

class BlifError(FlowError):
    def __init__(self, msg, line=None):
        self.line = line
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


class UnknownDirective(BlifError):
    pass


class DuplicateDriver(BlifError):
    pass


class LutTooWide(BlifError):
    def __init__(self, signal, width, k, line=None):
        self.k = k
        self.width = width
        super().__init__(f"LUT driving {signal!r} has {width} inputs, K={k}", line)


class DanglingSignal(BlifError):
    pass


class MalformedTruthTableRow(BlifError):
    pass


# --- arch-model -------------------------------------------------------------

class ArchError(FlowError):
    pass


class MissingField(ArchError):
    def __init__(self, field):
        self.field = field
        super().__init__(f"missing required field {field!r}")


class InvariantViolation(ArchError):
    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class UnknownKey(ArchError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"unknown key {key!r}")


class OutOfGrid(FlowError):
    pass


# --- partitioner / placer ---------------------------------------------------

class TooFewVertices(FlowError):
    pass


class SameTier(FlowError):
    pass


class GridTooSmall(FlowError):
    def __init__(self, tier, needed, available, what="clb"):
        self.tier = tier
        self.needed = needed
        self.available = available
        self.what = what
        super().__init__(
            f"tier {tier}: {needed} {what} blocks but only {available} sites")


# --- router -----------------------------------------------------------------

class InvalidWidth(FlowError):
    pass


class Unroutable(FlowError):
    def __init__(self, iterations, overuse, result=None):
        self.iterations = iterations
        self.overuse = overuse
        self.result = result
        super().__init__(
            f"routing failed after {iterations} iterations, overuse={overuse}")


class DisconnectedRrg(FlowError):
    def __init__(self, net, sink):
        self.net = net
        self.sink = sink
        super().__init__(f"net {net!r}: sink node {sink} unreachable")


class UnroutableAtMax(FlowError):
    def __init__(self, w_max):
        self.w_max = w_max
        super().__init__(f"not routable at maximum channel width {w_max}")


# --- timing / report / flow -------------------------------------------------

class CombinationalLoop(FlowError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("combinational loop: " + " -> ".join(map(str, self.cycle)))


class StageMissing(FlowError):
    def __init__(self, stage):
        self.stage = stage
        super().__init__(f"stage {stage!r} has not been run")


class MissingPrerequisite(FlowError):
    def __init__(self, stage, path=None):
        self.stage = stage
        self.path = path
        super().__init__(f"missing prerequisite {stage!r}" + (f" ({path})" if path else ""))
