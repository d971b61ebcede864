import os
import sys

ext_dir = os.environ.get("TEXSAN_EXT_DIR")
pkg_dir = os.environ.get("TEXSAN_PYPKG_DIR")
for d in (ext_dir, pkg_dir):
    if d and d not in sys.path:
        sys.path.insert(0, d)
