"""Shared virtual environment tutoring engine: geometry, scene, session
state, wire protocol, simulated-network harness and CLI."""

__version__ = "0.1.0"
PROTOCOL_VERSION = "tutorlink/1"
