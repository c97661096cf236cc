import sys

from momarl.cli import main

sys.exit(main())
