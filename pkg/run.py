"""Run the command line interface locally for testing and debugging."""

from dailyyield.cli import main

if __name__ == "__main__":
    main()
