# Enable python -m call
from .cli import main

if __name__ == "__main__":
    main()
