"""Password, OTP, face-template and geolocation factor behavior."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourfa import factors
from fourfa.factors import (
    ASCII_RAMP,
    ChallengeLocked,
    FaceTemplate,
    GeoPoint,
    ImageTooSmall,
    InvalidLocation,
    InvalidUsername,
    enroll_user,
    face_to_template,
    geo_distance,
    issue_otp,
    match_face,
    verify_location,
    verify_otp,
    verify_password,
)
from fourfa.raster import RasterImage

from conftest import HOME, make_cover, random_face_image, template_image

QUARTER_CIRCUMFERENCE = 10_007_543.398
METERS_PER_DEGREE = 111_194.9266


def gray_image(level, w=64, h=32):
    return RasterImage(w, h, 3, bytes([level]) * (w * h * 3))


class TestPassword:
    def test_enroll_verify_roundtrip(self, face_image):
        record = enroll_user("bob", b"s3cret", face_image, HOME)
        assert verify_password(record, b"s3cret")

    def test_wrong_password(self, face_image):
        record = enroll_user("bob", b"s3cret", face_image, HOME)
        assert not verify_password(record, b"s3cret!")

    def test_empty_password_against_nonempty(self, face_image):
        record = enroll_user("bob", b"s3cret", face_image, HOME)
        assert not verify_password(record, b"")

    def test_salts_differ_digests_differ(self, face_image):
        a = enroll_user("bob", b"same", face_image, HOME)
        b = enroll_user("bob", b"same", face_image, HOME)
        assert a.pw_salt != b.pw_salt
        assert a.pw_digest != b.pw_digest

    @given(password=st.binary(max_size=64), other=st.binary(max_size=64))
    @settings(max_examples=50)
    def test_verify_accepts_only_enrolled(self, password, other, ):
        record = enroll_user("prop", password, random_face_image(), HOME)
        assert verify_password(record, password)
        if other != password:
            assert not verify_password(record, other)

    @pytest.mark.parametrize("name", ["", "a\nb", "x" * 65, "tab\tname"])
    def test_invalid_usernames(self, name, face_image):
        with pytest.raises(InvalidUsername):
            enroll_user(name, b"pw", face_image, HOME)

    def test_multibyte_username_length_counted_in_bytes(self, face_image):
        with pytest.raises(InvalidUsername):
            enroll_user("é" * 33, b"pw", face_image, HOME)  # 66 UTF-8 bytes


class FailingTransport:
    def send(self, destination, body):
        raise factors.TransportError("boom")


class TestOtp:
    def test_issue_dispatches_six_digits(self, transport):
        challenge = issue_otp(6, now=1000.0, ttl=120.0, transport=transport,
                              destination="sess-1", rng=random.Random(1))
        body = transport.sent[-1].body
        assert len(body) == 6 and body.isdigit()
        assert verify_otp(challenge, body, now=1001.0)

    def test_issue_four_digits(self, transport):
        challenge = issue_otp(4, now=0.0, ttl=60.0, transport=transport,
                              destination="s", rng=random.Random(2))
        assert len(transport.sent[-1].body) == 4
        assert challenge.digits == 4

    def test_code_not_retained_in_challenge(self, transport):
        challenge = issue_otp(6, now=0.0, ttl=60.0, transport=transport, destination="s")
        code = transport.sent[-1].body
        assert code.encode() not in challenge.salt
        assert code.encode() not in challenge.commitment
        assert code not in repr(challenge)

    def test_transport_failure_aborts(self):
        with pytest.raises(factors.TransportError):
            issue_otp(6, now=0.0, ttl=60.0, transport=FailingTransport(), destination="s")

    def test_expiry_boundary(self, transport):
        challenge = issue_otp(6, now=1000.0, ttl=120.0, transport=transport, destination="s")
        code = transport.sent[-1].body
        assert verify_otp(challenge, code, now=1000.0 + 120.0 - 1.0)

    def test_expired_code_rejected(self, transport):
        challenge = issue_otp(6, now=1000.0, ttl=120.0, transport=transport, destination="s")
        code = transport.sent[-1].body
        assert not verify_otp(challenge, code, now=1000.0 + 120.0 + 1.0)

    def test_three_wrong_attempts_lock(self, transport):
        challenge = issue_otp(6, now=0.0, ttl=600.0, transport=transport, destination="s")
        code = transport.sent[-1].body
        wrong = "000000" if code != "000000" else "999999"
        for _ in range(3):
            assert not verify_otp(challenge, wrong, now=1.0)
        with pytest.raises(ChallengeLocked):
            verify_otp(challenge, code, now=1.0)

    def test_wrong_code_rejected(self, transport):
        challenge = issue_otp(4, now=0.0, ttl=60.0, transport=transport, destination="s")
        code = transport.sent[-1].body
        wrong = f"{(int(code) + 1) % 10000:04d}"
        assert not verify_otp(challenge, wrong, now=1.0)

    @pytest.mark.parametrize("digits", [0, 5, 7])
    def test_rejects_bad_digit_counts(self, digits, transport):
        with pytest.raises(ValueError):
            issue_otp(digits, now=0.0, ttl=60.0, transport=transport, destination="s")

    def test_codes_uniform_over_10000_issues(self, tmp_path):
        from scipy import stats

        from fourfa.sms import RecordingSmsTransport

        transport = RecordingSmsTransport(tmp_path / "bulk-outbox.jsonl")
        rng = random.Random(0xD15)
        counts = [0] * 10
        for _ in range(10_000):
            issue_otp(4, now=0.0, ttl=60.0, transport=transport, destination="s", rng=rng)
            code = transport.sent[-1].body
            assert len(code) == 4 and code.isdigit()
            assert 0 <= int(code) <= 9999
            counts[int(code[0])] += 1
        result = stats.chisquare(counts)
        assert result.pvalue > 0.001

    def test_constant_time_comparisons_by_inspection(self):
        import inspect

        assert "compare_digest" in inspect.getsource(verify_password)
        assert "compare_digest" in inspect.getsource(verify_otp)


class TestFaceTemplate:
    def test_all_black_is_darkest(self):
        assert set(face_to_template(gray_image(0)).cells) == {"@"}

    def test_all_white_is_lightest(self):
        assert set(face_to_template(gray_image(255)).cells) == {" "}

    def test_uniform_gray_128_is_equals_sign(self):
        assert set(face_to_template(gray_image(128)).cells) == {"="}

    def test_too_small_raises(self):
        with pytest.raises(ImageTooSmall):
            face_to_template(gray_image(0, w=63, h=32))
        with pytest.raises(ImageTooSmall):
            face_to_template(gray_image(0, w=64, h=31))

    def test_alpha_changes_do_not_matter(self):
        rgb = make_cover(128, 64, channels=4, seed=3)
        import numpy as np

        arr = np.frombuffer(rgb.samples, np.uint8).reshape(-1, 4).copy()
        arr[:, 3] = 0
        zeroed = RasterImage(128, 64, 4, arr.tobytes())
        assert face_to_template(rgb) == face_to_template(zeroed)

    def test_template_roundtrip_through_rendering(self):
        img = random_face_image(seed=11)
        template = face_to_template(img)
        assert template_image(template.cells).samples == img.samples

    def test_scaling_preserves_template(self):
        template = face_to_template(random_face_image(seed=12))
        scaled = template_image(template.cells, scale=3)
        assert face_to_template(scaled) == template

    def test_cell_count_invariant(self):
        with pytest.raises(ValueError):
            FaceTemplate("@" * 2047)
        with pytest.raises(ValueError):
            FaceTemplate("@" * 2047 + "q")


class TestMatchFace:
    def test_identity(self):
        t = face_to_template(random_face_image(seed=4))
        assert match_face(t, t) == 1.0

    def test_disjoint(self):
        assert match_face(FaceTemplate("@" * 2048), FaceTemplate(" " * 2048)) == 0.0

    def test_half_agreement(self):
        a = FaceTemplate("@" * 2048)
        b = FaceTemplate("@" * 1024 + " " * 1024)
        assert match_face(a, b) == 0.5

    @given(
        seed=st.integers(0, 2**32 - 1),
        flips=st.sets(st.integers(0, 2047), max_size=200),
    )
    @settings(max_examples=30)
    def test_symmetric_and_hamming(self, seed, flips):
        rng = random.Random(seed)
        cells_a = "".join(rng.choice(ASCII_RAMP) for _ in range(2048))
        cells_b = list(cells_a)
        for i in flips:
            cells_b[i] = ASCII_RAMP[(ASCII_RAMP.index(cells_b[i]) + 1) % 10]
        a, b = FaceTemplate(cells_a), FaceTemplate("".join(cells_b))
        assert match_face(a, b) == match_face(b, a) == 1 - len(flips) / 2048


class TestGeo:
    def test_zero_distance_on_diagonal(self):
        p = GeoPoint(12.5, -33.25)
        assert geo_distance(p, p) == 0.0

    def test_quarter_circumference(self):
        d = geo_distance(GeoPoint(0, 0), GeoPoint(0, 90))
        assert d == pytest.approx(QUARTER_CIRCUMFERENCE, abs=1.0)

    def test_meridian_degree(self):
        d = geo_distance(GeoPoint(0, 0), GeoPoint(1, 0))
        assert d == pytest.approx(METERS_PER_DEGREE, abs=1.0)

    @given(
        lat1=st.floats(-90, 90), lon1=st.floats(-179.999999, 180),
        lat2=st.floats(-90, 90), lon2=st.floats(-179.999999, 180),
    )
    @settings(max_examples=100)
    def test_symmetric_nonnegative(self, lat1, lon1, lat2, lon2):
        p, q = GeoPoint(lat1, lon1), GeoPoint(lat2, lon2)
        d = geo_distance(p, q)
        assert d >= 0
        assert math.isclose(d, geo_distance(q, p), rel_tol=1e-12, abs_tol=1e-9)

    def test_geofence_boundary(self, face_image):
        record = enroll_user("geo", b"pw", face_image, GeoPoint(0.0, 0.0))
        inside = GeoPoint(499 / METERS_PER_DEGREE, 0.0)
        outside = GeoPoint(501 / METERS_PER_DEGREE, 0.0)
        assert verify_location(record, inside, radius=500.0)
        assert not verify_location(record, outside, radius=500.0)

    def test_home_is_inside(self, face_image):
        record = enroll_user("geo", b"pw", face_image, HOME)
        assert verify_location(record, HOME)

    @pytest.mark.parametrize(
        "lat,lon",
        [(91, 0), (-91, 0), (0, 181), (0, -180.0), (float("nan"), 0), (0, float("inf"))],
    )
    def test_invalid_coordinates(self, lat, lon):
        with pytest.raises(InvalidLocation):
            GeoPoint(lat, lon)
