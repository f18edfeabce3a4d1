"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class MemCamError(Exception):
    exit_code = 1


class NotARotation(MemCamError, ValueError):
    exit_code = 10

    def __init__(self, msg="matrix is not a proper rotation", line_no=None):
        if line_no is not None:
            msg = f"line {line_no}: {msg}"
        super().__init__(msg)
        self.line_no = line_no


class BadClipPlanes(MemCamError, ValueError):
    exit_code = 11


class BadIntrinsics(MemCamError, ValueError):
    exit_code = 12


class _LineError(MemCamError, ValueError):
    def __init__(self, line_no, msg):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class FieldCount(_LineError):
    exit_code = 13


class NonNumeric(_LineError):
    exit_code = 14


class EmptyInput(MemCamError, ValueError):
    exit_code = 20


class NonMonotonicId(MemCamError, ValueError):
    exit_code = 21


class EmptyMemory(MemCamError, LookupError):
    exit_code = 22


class CameraOutsideScene(MemCamError, ValueError):
    exit_code = 30


class ShapeMismatch(MemCamError, ValueError):
    exit_code = 40


class OddChannels(MemCamError, ValueError):
    exit_code = 41


class FrameCountMismatch(MemCamError, ValueError):
    exit_code = 50


class DimensionMismatch(MemCamError, ValueError):
    exit_code = 51


class TooSmall(MemCamError, ValueError):
    exit_code = 52
