"""CLI interface for the Yang-Mills workbench."""
