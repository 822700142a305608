import os
import sys

PROGRAM, WORKDIR, CACHE = sys.argv[1], os.path.realpath(sys.argv[2]), os.path.realpath(sys.argv[3])
DENIED = [os.path.realpath(p) for p in sys.argv[4:]]
WRITABLE = [WORKDIR, CACHE]

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402,F401
import numpy as np  # noqa: E402,F401
from mpl_toolkits.axes_grid1 import make_axes_locatable  # noqa: E402,F401
from mpl_toolkits.mplot3d import Axes3D  # noqa: E402,F401

with open(PROGRAM, encoding="utf-8") as fh:
    SOURCE = fh.read()


def _under(path, roots):
    return any(path == r or path.startswith(r + os.sep) for r in roots)


def _resolve(path):
    if isinstance(path, int):
        return None
    return os.path.realpath(os.fsdecode(path))


_WRITE_FLAGS = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_APPEND | os.O_TRUNC
_BLOCKED = {
    "socket.__new__", "socket.connect", "socket.bind", "socket.getaddrinfo", "socket.sendto", "socket.gethostbyname",
    "subprocess.Popen", "os.system", "os.exec", "os.posix_spawn", "os.spawn", "os.fork", "os.forkpty", "pty.spawn",
    "urllib.Request", "ctypes.dlopen",
}
_MUTATING = {"os.remove", "os.rename", "os.rmdir", "os.mkdir", "os.symlink", "os.link", "os.chmod", "os.truncate",
             "shutil.rmtree", "shutil.copyfile", "shutil.move"}


def _hook(event, args):
    if event == "open":
        path = _resolve(args[0])
        if path is None:
            return
        if _under(path, DENIED):
            raise PermissionError("sandbox: read denied: %s" % path)
        mode, flags = args[1], args[2] or 0
        writing = (mode is not None and any(c in mode for c in "wax+")) or bool(flags & _WRITE_FLAGS)
        if writing and not _under(path, WRITABLE):
            raise PermissionError("sandbox: write denied: %s" % path)
    elif event in ("os.listdir", "os.scandir", "glob.glob"):
        path = _resolve(args[0] if args and args[0] is not None else ".")
        if path is not None and _under(path, DENIED):
            raise PermissionError("sandbox: listing denied: %s" % path)
    elif event in _BLOCKED:
        raise PermissionError("sandbox: %s denied" % event)
    elif event in _MUTATING:
        for a in args:
            if isinstance(a, (str, bytes, os.PathLike)):
                path = _resolve(a)
                if path is not None and not _under(path, WRITABLE):
                    raise PermissionError("sandbox: %s denied on %s" % (event, path))


sys.addaudithook(_hook)
os.chdir(WORKDIR)
exec(compile(SOURCE, "program.py", "exec"), {"__name__": "__main__"})
