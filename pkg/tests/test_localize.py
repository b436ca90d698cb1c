import http.server
import json
import socket
import threading

import pytest
from hypothesis import given, strategies as st

from patchprobe.errors import (AllSegmentsFailed, OutOfRangeLines, OversizePrompt,
                               PreconditionError, PromptError, RateLimited, ReplayMiss,
                               TransportError, UnparseableResponse, ConfigError)
from patchprobe.ingest import PseudoSegment, parse_pseudocode, segment_pseudocode, truncate_source
from patchprobe.localize import (LineMapping, LocalizationResult, Provider, ProviderConfig,
                                 TemplateId, build_localization_prompt, heuristic_localize,
                                 localize, parse_localization_response, query_provider,
                                 reverse_match)
from patchprobe.localize.heuristic import lcs_ratio, line_signature
from patchprobe.localize.provider import prompt_key
from patchprobe.source_model import PatchKind, Version, extract_function

from conftest import prepare

HEUR = ProviderConfig(mode="heuristic")


def small_src():
    f = extract_function("int f(int x)\n{\n    if (x == 0x303)\n        return 1;\n    return 0;\n}\n",
                         "f").with_marks([3])
    return truncate_source(f, 3000)


def small_seg():
    p = parse_pseudocode("__int64 f(int a1)\n{\n  if ( !(a1 ^ 0x303) )\n    return 1LL;\n  return 0LL;\n}\n")
    return segment_pseudocode(p, 3000)[0]


# ---------------------------------------------------------------- prompts

def test_prompt_contains_blocks_and_instruction():
    p = build_localization_prompt(small_src(), small_seg())
    assert p.template_id is TemplateId.LOCALIZATION
    assert "Must only output your findings as a JSON dictionary" in p.rendered_text
    assert 'Lines in the source code that end with "//patch_code" are patch codes' in p.rendered_text
    assert "3:     if (x == 0x303) //patch_code" in p.rendered_text
    assert "3:   if ( !(a1 ^ 0x303) )" in p.rendered_text
    for name in ("<source_code>", "<pseudo_code>", "<json_format_sample>"):
        assert name not in p.rendered_text
    assert set(p.placeholders_filled) == {"source_code", "pseudo_code", "json_format_sample"}


def test_prompt_needs_marker():
    f = extract_function("int f(void)\n{\n  return 0;\n}\n", "f")
    bare = truncate_source(f.with_marks([3]), 3000)
    stripped = type(bare)(bare.span, bare.rendered_text, bare.token_count,
                          tuple((i, t.replace(" //patch_code", "")) for i, t in bare.lines), 3)
    with pytest.raises(PromptError):
        build_localization_prompt(stripped, small_seg())


def test_prompt_oversize():
    with pytest.raises(OversizePrompt):
        build_localization_prompt(small_src(), small_seg(), context_tokens=50)


def test_placeholder_text_in_code_not_reexpanded():
    seg = PseudoSegment("f", (1, 1), 3, ((1, "x = '<source_code>';"),))
    p = build_localization_prompt(small_src(), seg)
    assert p.rendered_text.count("<source_code>") == 1


# ---------------------------------------------------------------- parsing

def test_parse_plain():
    m = parse_localization_response('{"1": [12,13]}')
    assert m.pairs == ((1, (12, 13)),)


def test_parse_chatty():
    raw = ("Sure! Here is what I found.\n```json\n{\n  \"4\": [9],\n  \"5\": [10, 11]\n}\n```\n"
           "Line 4 is the guard {not json}.")
    assert parse_localization_response(raw).as_dict() == {"4": [9], "5": [10, 11]}


def test_parse_out_of_range():
    with pytest.raises(OutOfRangeLines):
        parse_localization_response('{"1": [999]}', span=(1, 50))


def test_parse_garbage():
    with pytest.raises(UnparseableResponse):
        parse_localization_response("I could not find the patch.")


def test_parse_drops_unqueried():
    m = parse_localization_response('{"1": [2], "7": [3]}', queried=[1, 2])
    assert m.pairs == ((1, (2,)),)
    assert m.unmatched_source_lines == (2,)


def test_parse_ranges_and_strings():
    m = parse_localization_response('{"mapping": {"3": ["4-6"], "8": "9"}}')
    assert m.as_dict() == {"3": [4, 5, 6], "8": [9]}


@given(st.dictionaries(st.integers(1, 500), st.lists(st.integers(1, 500), max_size=5), max_size=12))
def test_parse_serialize_identity(d):
    m = LineMapping.build(d)
    assert parse_localization_response(m.serialize()) == m


# ---------------------------------------------------------------- heuristic

def test_heuristic_identity():
    m = heuristic_localize(["x = y + 1;"], ["x = y + 1;"])
    assert m.pairs == ((1, (1,)),)
    sig = line_signature("x = y + 1;")
    assert lcs_ratio(sig, sig) == 1.0


def test_heuristic_constant_canonical():
    a = line_signature("if (x == 0x303)")
    b = line_signature("if ( v3 == 771 )")
    assert lcs_ratio(a, b) >= 0.5
    assert heuristic_localize(["if (x == 0x303)"], ["v2 = 0;", "if ( v3 == 771 )"]).pairs == ((1, (2,)),)


def test_heuristic_unrelated():
    m = heuristic_localize(["memcpy(dst, src, n);"], ["return 0;", "goto out;", "}"])
    assert not m.pairs and m.unmatched_source_lines == (1,)


def test_heuristic_calls_share_shape():
    # normalized calls keep the callee, so a different callee scores lower
    # than the same callee with different argument names
    sig = line_signature("memcpy(dst, src, n);")
    same = line_signature("memcpy(v4 + 3, v1 + 3, v2);")
    other = line_signature('puts("hello world");')
    assert lcs_ratio(sig, same) > lcs_ratio(sig, other)


def test_heuristic_lowest_line_tie():
    m = heuristic_localize(["a = b;"], ["a = b;", "c = 1;", "a = b;"])
    assert m.pairs == ((1, (1,)),)


# ---------------------------------------------------------------- providers

def test_config_validation():
    with pytest.raises(ConfigError):
        ProviderConfig(mode="heuristic", temperature=2.5)
    with pytest.raises(ConfigError):
        ProviderConfig(mode="heuristic", max_retries=-1)
    with pytest.raises(ConfigError):
        ProviderConfig(mode="replay")
    assert ProviderConfig().temperature == 1.0


def test_replay_byte_identical(tmp_path):
    p = build_localization_prompt(small_src(), small_seg())
    canned = 'noise é {"3": [3]}\r\n'
    (tmp_path / f"{prompt_key(p)}.txt").write_bytes(canned.encode("utf-8"))
    cfg = ProviderConfig(mode="replay", replay_dir=str(tmp_path))
    assert query_provider(p, cfg) == canned
    with pytest.raises(ReplayMiss):
        query_provider(p.with_suffix("x"), cfg)


def test_heuristic_no_network(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("socket used")
    monkeypatch.setattr(socket, "socket", boom)
    monkeypatch.setattr(socket, "create_connection", boom)
    raw = query_provider(build_localization_prompt(small_src(), small_seg()), HEUR)
    m = parse_localization_response(raw)
    assert m.pairs == ((3, (3,)),)


class _Handler(http.server.BaseHTTPRequestHandler):
    script: list = []
    seen: list = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((body, self.headers.get("Authorization")))
        code = type(self).script.pop(0) if type(self).script else 200
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        if code == 200:
            payload = {"choices": [{"message": {"role": "assistant", "content": '{"3": [3]}'}}]}
            self.wfile.write(json.dumps(payload).encode())

    def log_message(self, *a):
        pass


@pytest.fixture
def endpoint():
    _Handler.script = []
    _Handler.seen = []
    srv = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}/v1/chat/completions"
    srv.shutdown()


def remote_cfg(url, retries=2):
    return ProviderConfig(mode="remote", endpoint=url, model_name="m", max_retries=retries,
                          backoff_s=0.0, timeout_s=5, api_key_env="PP_TEST_KEY")


def test_remote_success(endpoint, monkeypatch):
    monkeypatch.setenv("PP_TEST_KEY", "sekrit")
    p = build_localization_prompt(small_src(), small_seg())
    assert query_provider(p, remote_cfg(endpoint)) == '{"3": [3]}'
    body, auth = _Handler.seen[0]
    assert body["temperature"] == 1.0 and body["model"] == "m"
    assert body["messages"] == [{"role": "user", "content": p.rendered_text}]
    assert auth == "Bearer sekrit"


def test_remote_5xx_then_ok(endpoint):
    _Handler.script = [502, 200]
    p = build_localization_prompt(small_src(), small_seg())
    assert query_provider(p, remote_cfg(endpoint)) == '{"3": [3]}'


def test_remote_5xx_exhausted(endpoint):
    _Handler.script = [500, 500, 500]
    with pytest.raises(TransportError):
        query_provider(build_localization_prompt(small_src(), small_seg()), remote_cfg(endpoint))
    assert len(_Handler.seen) == 3


def test_remote_rate_limited(endpoint):
    _Handler.script = [429, 429]
    with pytest.raises(RateLimited):
        query_provider(build_localization_prompt(small_src(), small_seg()), remote_cfg(endpoint, 1))


def test_retry_on_unparseable(tmp_path):
    calls = []

    class Flaky(Provider):
        def query(self, prompt):
            calls.append(prompt.rendered_text)
            return "no idea" if len(calls) < 3 else '{"3": [3]}'

    prov = Flaky(HEUR)
    m = prov.ask(build_localization_prompt(small_src(), small_seg()), parse_localization_response)
    assert m.pairs == ((3, (3,)),)
    assert calls[1].endswith("with no other text.")


def test_all_segments_failed():
    class Mute(Provider):
        def query(self, prompt):
            return "nothing"

    c = prepare("A_tls_version_patched")
    with pytest.raises(AllSegmentsFailed):
        localize(c.slices[Version.PATCHED], c.pseudo, HEUR, Mute(HEUR))


# ---------------------------------------------------------------- localize

def test_localize_motivating_case():
    c = prepare("A_tls_version_patched")
    res = localize(c.slices[Version.PATCHED], c.pseudo, HEUR)
    assert res.provenance == "forward" and res.version_tag is Version.PATCHED
    patch_line = c.slices[Version.PATCHED].patch_line_numbers[0]
    hit = dict(res.mapping.pairs)[patch_line]
    assert any("^ 0x303" in c.pseudo.text_of(p) for p in hit)
    assert res.pseudo_line_numbers == sorted(set(res.pseudo_line_numbers))
    assert all(1 <= n <= len(c.pseudo) for n in res.pseudo_line_numbers)


def test_localize_prefers_better_segment(tmp_path):
    c = prepare("B_record_bound_patched")
    sl = c.slices[Version.PATCHED]
    segs = segment_pseudocode(c.pseudo, 40)
    assert len(segs) >= 2
    texts = {ln.index: ln.text for ln in sl.lines}
    src = truncate_source(sl.function.with_texts(texts).with_marks(texts), 40,
                          sl.patch_line_numbers[0])
    q = src.marked_lines
    for k, seg in enumerate(segs):
        lines = list(range(seg.start, seg.end + 1))
        n = 3 if k == 1 else 1
        body = {str(s): [lines[0]] for s in q[:n]}
        prompt = build_localization_prompt(src, seg)
        (tmp_path / f"{prompt_key(prompt)}.txt").write_text(json.dumps(body))
    cfg = ProviderConfig(mode="replay", replay_dir=str(tmp_path))
    res = localize(sl, c.pseudo, cfg, token_limit=40)
    assert res.segment_span == segs[1].span
    assert res.mapping.coverage == 3


def test_result_round_trip():
    c = prepare("A_tls_version_patched")
    res = localize(c.slices[Version.PATCHED], c.pseudo, HEUR)
    assert LocalizationResult.from_dict(json.loads(json.dumps(res.to_dict()))) == res


def test_reverse_add_only():
    c = prepare("C_heartbeat_len_patched")
    assert c.kind is PatchKind.ADD_ONLY
    fwd = localize(c.slices[Version.PATCHED], c.pseudo, HEUR)
    rev = reverse_match(fwd, c.full[Version.PRE_PATCH], HEUR, c.pseudo, c.kind)
    assert rev.provenance == "reverse" and rev.version_tag is Version.PRE_PATCH
    assert set(rev.pseudo_line_numbers) <= set(fwd.pseudo_line_numbers)
    for n, text in rev.source_lines:
        assert c.full[Version.PRE_PATCH].text_of(n) == text


def test_reverse_delete_only():
    c = prepare("E_premature_free_vulnerable")
    assert c.kind is PatchKind.DELETE_ONLY
    fwd = localize(c.slices[Version.PRE_PATCH], c.pseudo, HEUR)
    rev = reverse_match(fwd, c.full[Version.PATCHED], HEUR, c.pseudo, c.kind)
    assert rev.provenance == "reverse" and rev.version_tag is Version.PATCHED


def test_reverse_rejects_edit():
    c = prepare("A_tls_version_patched")
    fwd = localize(c.slices[Version.PATCHED], c.pseudo, HEUR)
    with pytest.raises(PreconditionError):
        reverse_match(fwd, c.full[Version.PRE_PATCH], HEUR, c.pseudo, c.kind)


def test_replay_localize_deterministic(corpus_dir):
    cfg = ProviderConfig(mode="replay", replay_dir=str(corpus_dir / "replay"))
    c = prepare("D_sess_cert_patched")
    a = localize(c.slices[Version.PATCHED], c.pseudo, cfg)
    b = localize(c.slices[Version.PATCHED], c.pseudo, cfg)
    assert a == b and a.to_dict() == b.to_dict()
