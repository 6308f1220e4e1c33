# Empty __init__.py files for Python package structure
