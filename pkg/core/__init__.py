"""
diffprox Core Application
This app holds the code shared by every other app:
- Settings access with library-safe defaults
- The numerical exception hierarchy
- Numeric input validators
- Report formatting for the command-line tools
"""
