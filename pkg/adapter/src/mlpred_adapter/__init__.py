"""Reference MLPRED/1 prediction server.

Wraps either a mirror of the toy classifiers shipped with the explanation
toolkit or a user-supplied model callable, and answers batch prediction
requests over stdio or TCP.  The point of this process is the boundary:
any real model (a trained CNN, a different language, a GPU box) can sit
behind the same wire format, and the explanation side never knows the
difference.
"""

from .models import build_model, load_user_model
from .server import AdapterConfig, serve_stream

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "build_model", "load_user_model", "serve_stream", "__version__"]
