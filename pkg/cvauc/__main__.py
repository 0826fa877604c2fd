import sys

from cvauc.main import main

sys.exit(main())
