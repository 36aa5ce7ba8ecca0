"""adkit: windowed asymptotic dimension estimation for finite metric spaces,
with certified cover transport operations and a small zoo of group models."""

__version__ = "0.1.0"
