import sys

from enclosure.app.cli import main

sys.exit(main())
