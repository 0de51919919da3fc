import sys

from embed_router.cli import main

sys.exit(main())
