"""
fairalloc - online alpha-fair resource allocation experiments.
Entry point of the fairalloc command.
"""
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Configure Logfire before any logger is created
from src.utils.logfire_config import configure_logfire
configure_logfire()

from src.handlers.cli import main

if __name__ == "__main__":
    main()
