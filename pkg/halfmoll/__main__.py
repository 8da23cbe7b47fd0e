import sys

from halfmoll.cli.main import main

sys.exit(main())
