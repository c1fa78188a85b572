import pathlib
import sys

# make sibling test modules (shared brute-force oracles) importable under
# any pytest invocation style
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))
