__all__ = ["test_gevrey", "test_approximation", "test_nonresonance", "test_symbols", "test_homological",
           "test_normalform", "test_config", "test_pipeline", "test_message", "test_props", "test_utils", "test_main"]

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

import qbirkhoff
