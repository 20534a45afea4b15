import os
import sys

from . import serve


def main() -> int:
    # Reserve the real stdout for protocol responses and point fd 1 at
    # stderr so subject-code writes (even C-level ones) cannot interleave
    # with the response stream.
    protocol_out = os.fdopen(os.dup(1), "w", buffering=1)
    os.dup2(2, 1)
    return serve(sys.stdin, protocol_out)


if __name__ == "__main__":
    sys.exit(main())
