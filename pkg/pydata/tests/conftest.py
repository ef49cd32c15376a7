import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from fixture_factory import annotation_file, graph_file, raster_file  # noqa: E402,F401
