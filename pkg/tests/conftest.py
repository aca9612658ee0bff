import sys
from pathlib import Path

# allow acceptance tests to reuse the oracles defined in sibling test modules
sys.path.insert(0, str(Path(__file__).parent))
