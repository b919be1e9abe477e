# data/__init__.py
# This file allows Python to treat directories as modules.
