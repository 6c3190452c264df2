"""Four-factor transaction authentication with an encrypted stego envelope.

Gateway side: verify password, OTP, face template and geolocation in order,
assemble the four credentials into a text payload, and seal it (XTEA-CBC,
encrypt-then-MAC with HMAC-SHA256) into the pixel LSBs of a cover PNG.
Merchant side: recover, authenticate and adjudicate the payload.
"""

from .config import Config, ConfigError, load_config
from .crypto import (
    cbc_decrypt,
    cbc_encrypt,
    derive_key,
    hmac_sha256,
    xtea_decrypt_block,
    xtea_encrypt_block,
)
from .factors import (
    FaceTemplate,
    GeoPoint,
    OtpChallenge,
    UserRecord,
    enroll_user,
    face_to_template,
    geo_distance,
    issue_otp,
    match_face,
    verify_location,
    verify_otp,
    verify_password,
)
from .flow import (
    FlowSettings,
    Session,
    SessionState,
    TransactionPayload,
    apply_event,
    assemble_payload,
    begin_session,
    finalize_transaction,
    parse_payload,
    serialize_payload,
)
from .merchant import Decision, Outcome, authenticate_payload, process_envelope
from .raster import RasterImage, decode_png, encode_png, read_png, write_png
from .sms import HttpSmsTransport, RecordingSmsTransport, TransportError
from .stego import capacity_of, open_envelope, seal_envelope
from .store import UserStore

__version__ = "0.1.0"
