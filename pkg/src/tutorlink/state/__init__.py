from . import events
from .events import Event, EventCodecError, event_from_json
from .session import (
    BEAM_MAX,
    BEAM_MIN,
    HEADLINE_MAX,
    DerivedEffect,
    EventRejected,
    Label,
    Landmark,
    SessionState,
    Sketch,
    StudentState,
    TeacherState,
    apply_event,
    apply_snapshot,
    canonical_json,
    initial_state,
    label_create_event,
    reposition_student,
    snapshot,
    state_digest,
)
