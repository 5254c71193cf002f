"""Rule-based engagement inference and adaptive content pacing.

The package turns behavioral telemetry (head kinematics, gaze dwell,
locomotion) into a five-level engagement state through transparent,
threshold-based fusion, and paces exhibit content generation off that state
without ever blocking the inference loop.
"""

from .config import EngineConfig, load_config
from .content import (
    ContentCache,
    ContentPipeline,
    ContentRecord,
    DisplayEvent,
    Exhibit,
    build_prompt,
    builtin_catalog,
)
from .engine import EngagementEngine, TickResult
from .errors import (
    ConfigError,
    EngagekitError,
    InvalidSignalError,
    OrderingError,
    ProviderError,
    TraceFormatError,
    TraceVersionError,
)
from .fusion import EngagementEstimate, FusionWeights, RollingWindow, fuse, smooth
from .metrics import MetricsAccumulator, SessionMetrics
from .providers import MockProvider, RemoteProvider
from .session import ReplayResult, replay
from .signals import (
    DwellTracker,
    NormalizedSignals,
    TelemetryFrame,
    normalize_gaze,
    normalize_head,
    normalize_locomotion,
)
from .states import EngagementState
from .trace import (
    FocusedReader,
    Mixed,
    ParsedTrace,
    Runner,
    Scanner,
    TraceHeader,
    Walker,
    generate_trace,
    parse_trace,
    write_trace,
)

__version__ = "0.1.0"
