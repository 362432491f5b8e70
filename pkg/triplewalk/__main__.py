import sys

from triplewalk.main import main

sys.exit(main())
