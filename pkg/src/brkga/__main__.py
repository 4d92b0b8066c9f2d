import sys
from brkga.cli import main

sys.exit(main())
