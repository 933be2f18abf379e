from __future__ import annotations

import sys

from mqt.atomgw.cli import main

sys.exit(main())
