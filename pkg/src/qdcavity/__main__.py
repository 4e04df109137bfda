import sys

from qdcavity.io.cli import main

sys.exit(main())
