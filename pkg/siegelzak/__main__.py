import sys

from siegelzak.main import main

sys.exit(main())
