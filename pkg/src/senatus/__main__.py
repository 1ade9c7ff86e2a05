import sys

from senatus.cli import main

sys.exit(main())
