"""Exact serialization grammar of the four-credential payload."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourfa.factors import ASCII_RAMP, FaceTemplate, GeoPoint
from fourfa.flow import (
    MalformedPayload,
    TransactionPayload,
    parse_payload,
    serialize_payload,
)


def sample_payload(username="alice", password="hunter2", lat=0.0, lon=0.0, cells=None):
    return TransactionPayload(
        username=username,
        password=password,
        face=FaceTemplate(cells or "@" * 2048),
        geo=GeoPoint(lat, lon),
    )


usernames = st.text(
    alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x7E),
    min_size=1,
    max_size=64,
)
passwords = st.text(
    alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x10FFFF,
                           blacklist_categories=("Cs",)),
    max_size=40,
)
lats = st.integers(-90_000_000, 90_000_000).map(lambda v: v / 1e6)
lons = st.integers(-179_999_999, 180_000_000).map(lambda v: v / 1e6)
templates = st.integers(0, 2**32 - 1).map(
    lambda seed: "".join(
        __import__("random").Random(seed).choice(ASCII_RAMP) for _ in range(2048)
    )
)


class TestSerialize:
    def test_golden_layout(self):
        data = serialize_payload(sample_payload())
        lines = data.decode().split("\n")
        assert lines[0] == "MTRK-PAYLOAD/1"
        assert lines[1] == "user=alice"
        assert lines[2] == "pass=hunter2"
        assert lines[3] == "geo=0.000000,0.000000"
        assert lines[4] == "face=64x32"
        assert lines[5] == "@" * 64
        assert len(lines) == 38 and lines[37] == ""

    def test_length_formula(self):
        # 15 + (6+len(user)) + (6+len(pass)) + (5+len(geo)) + 11 + 32*65,
        # hand-counted for alice/hunter2 at the origin: 2152 bytes.
        assert len(serialize_payload(sample_payload())) == 2152

    def test_negative_coordinates_format(self):
        data = serialize_payload(sample_payload(lat=-1.5, lon=-179.999999))
        assert b"geo=-1.500000,-179.999999\n" in data

    def test_newline_in_password_rejected(self):
        with pytest.raises(ValueError):
            serialize_payload(sample_payload(password="a\nb"))

    @given(username=usernames, password=passwords, lat=lats, lon=lons, cells=templates)
    @settings(max_examples=60)
    def test_roundtrip(self, username, password, lat, lon, cells):
        payload = sample_payload(username, password, lat, lon, cells)
        parsed = parse_payload(serialize_payload(payload))
        assert parsed == payload

    @given(username=usernames, password=passwords, lat=lats, lon=lons)
    @settings(max_examples=40)
    def test_serialize_after_parse_is_identity(self, username, password, lat, lon):
        data = serialize_payload(sample_payload(username, password, lat, lon))
        assert serialize_payload(parse_payload(data)) == data


def mutate(data: bytes, index: int, value: int) -> bytes:
    return data[:index] + bytes([value]) + data[index + 1 :]


class TestParseRejections:
    def test_wrong_header(self):
        data = serialize_payload(sample_payload())
        bad = b"MTRK-PAYLOAD/2" + data[14:]
        with pytest.raises(MalformedPayload) as err:
            parse_payload(bad)
        assert err.value.line == 1

    def test_every_header_mutation_rejected(self):
        data = serialize_payload(sample_payload())
        for i in range(14):
            for v in (0x41, data[i] ^ 1):
                if v == data[i]:
                    continue
                with pytest.raises(MalformedPayload):
                    parse_payload(mutate(data, i, v))

    def test_missing_face_row(self):
        data = serialize_payload(sample_payload())
        truncated = b"\n".join(data.split(b"\n")[:-2]) + b"\n"
        with pytest.raises(MalformedPayload):
            parse_payload(truncated)

    def test_short_face_row(self):
        lines = serialize_payload(sample_payload()).split(b"\n")
        lines[5] = lines[5][:-1]
        with pytest.raises(MalformedPayload) as err:
            parse_payload(b"\n".join(lines))
        assert err.value.line == 6

    def test_bad_geo_precision(self):
        lines = serialize_payload(sample_payload()).split(b"\n")
        lines[3] = b"geo=0.00000,0.000000"
        with pytest.raises(MalformedPayload) as err:
            parse_payload(b"\n".join(lines))
        assert err.value.line == 4

    def test_out_of_range_geo(self):
        lines = serialize_payload(sample_payload()).split(b"\n")
        lines[3] = b"geo=91.000000,0.000000"
        with pytest.raises(MalformedPayload) as err:
            parse_payload(b"\n".join(lines))
        assert err.value.line == 4

    def test_missing_final_newline(self):
        data = serialize_payload(sample_payload())[:-1]
        with pytest.raises(MalformedPayload):
            parse_payload(data)

    def test_trailing_extra_line(self):
        data = serialize_payload(sample_payload()) + b"extra\n"
        with pytest.raises(MalformedPayload):
            parse_payload(data)

    def test_non_utf8(self):
        with pytest.raises(MalformedPayload):
            parse_payload(b"MTRK-PAYLOAD/1\n\xff\xfe\n")

    def test_empty(self):
        with pytest.raises(MalformedPayload):
            parse_payload(b"")

    def test_face_row_with_foreign_character(self):
        lines = serialize_payload(sample_payload()).split(b"\n")
        lines[10] = b"q" + lines[10][1:]
        with pytest.raises(MalformedPayload) as err:
            parse_payload(b"\n".join(lines))
        assert err.value.line == 11
