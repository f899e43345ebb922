"""Controller-side SDK for the deskworld simulation server.

Pure protocol sugar over the TCP wire format: no client-side physics,
no caching — every state question goes to the server.
"""

__version__ = "0.1.0"
