from siegelzak.config import settings

__version__ = settings.VERSION
