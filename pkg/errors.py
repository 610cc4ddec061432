"""ldlsim 异常层级。"""


class LdlSimError(Exception):
    """所有模拟器错误的基类"""


class ShapeError(LdlSimError, ValueError):
    pass


class ContractViolation(LdlSimError, ValueError):
    pass


class DecompositionError(ContractViolation):
    pass


class UncoveredVertexError(DecompositionError):
    def __init__(self, vertex: int):
        super().__init__(f"vertex {vertex} is not covered by any bag")
        self.vertex = vertex


class UncoveredEdgeError(DecompositionError):
    def __init__(self, u: int, v: int):
        super().__init__(f"edge ({u}, {v}) is not covered by any bag")
        self.edge = (u, v)


class DisconnectedBagsError(DecompositionError):
    def __init__(self, vertex: int):
        super().__init__(f"bags containing vertex {vertex} do not form a connected subtree")
        self.vertex = vertex


class EliminationError(LdlSimError):
    def __init__(self, step: int, message: str):
        super().__init__(f"elimination failed at step {step}: {message}")
        self.step = step


class CircuitParseError(LdlSimError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnsupportedGateError(LdlSimError):
    pass


class LimitExceeded(LdlSimError):
    pass
