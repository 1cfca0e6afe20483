"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument falls outside an operation's domain."""


class GenerationFailure(RuntimeError):
    """Random topology generation gave up before finding a connected graph."""


class TopologyFileError(ValueError):
    """Base class for problems found while loading an edge-list file."""

    def __init__(self, message: str, *, line: int | None = None, node: int | None = None):
        self.line = line
        self.node = node
        where = []
        if line is not None:
            where.append(f"line {line}")
        if node is not None:
            where.append(f"node {node}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class TopologyParseError(TopologyFileError):
    pass


class SelfLoopError(TopologyFileError):
    pass


class AsymmetricEdgeError(TopologyFileError):
    pass


class DisconnectedGraphError(TopologyFileError):
    pass
