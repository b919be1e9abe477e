# This file allows Python to treat directories as modules.
