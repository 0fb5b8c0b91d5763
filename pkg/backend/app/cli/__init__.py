from . import count, davenport, fd, minima, verify, version

COMMANDS = [minima, verify, fd, davenport, count, version]

__all__ = ["COMMANDS"]
