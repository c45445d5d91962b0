import sys

from pseudocone.cli import main

sys.exit(main())
