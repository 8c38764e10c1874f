import sys

from rc_lab.cli import main

sys.exit(main())
