from dysect.service.app import AuthConfig, create_app

__all__ = ["AuthConfig", "create_app"]
