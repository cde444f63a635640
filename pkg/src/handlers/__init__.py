"""Command-line handlers."""