from tankloc.service.app import CheckpointPredictor, ServiceState, create_app

__all__ = ["CheckpointPredictor", "ServiceState", "create_app"]
