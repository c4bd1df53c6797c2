#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include "refgpt/postprocess.hpp"
#include "support/fixtures.hpp"

using namespace refgpt;

namespace {

ParsedDialogue dialogue_of(std::vector<std::pair<Role, std::string>> turns) {
  ParsedDialogue d;
  d.had_end_marker = true;
  int index = 1;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    Turn t;
    t.role = turns[i].first;
    t.index = index;
    if (t.role == Role::assistant) ++index;
    t.text = turns[i].second;
    t.word_count = count_units(t.text, CountingStrategy::words);
    d.turns.push_back(std::move(t));
  }
  return d;
}

DatasetRecord record_with(std::uint64_t sequence, bool obeys) {
  DatasetRecord r;
  r.record_id = "r" + std::to_string(sequence);
  r.sequence = sequence;
  r.reference_id = "ref-" + std::to_string(sequence);
  r.reference_text_hash = content_hash("text");
  r.plan.n_turns = 1;
  r.plan.utterances = {{Role::user, 1, 10, "", ""}, {Role::assistant, 1, 10, "", ""}};
  r.turns = {{Role::user, 1, "q", 1}, {Role::assistant, 1, "a", 1}};
  r.generation = {"mock", "mock", 1, "1970-01-01T00:00:00Z", 1};
  r.validation.obeys_template = obeys;
  r.validation.turn_count_match = obeys;
  r.validation.end_marker_present = true;
  if (!obeys) r.validation.failure_reasons.push_back(FailureReason::turn_count_mismatch);
  return r;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_SUITE("postprocess") {

TEST_CASE("sha256 matches the reference vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("content hash normalizes newlines") {
  CHECK(content_hash("a\r\nb\rc\n") == content_hash("a\nb\nc\n"));
  CHECK(content_hash("a") != content_hash("b"));
}

TEST_CASE("attach_reference_code prepends a fenced block to the first question only") {
  auto dialogue = dialogue_of({{Role::user, "What does this do?"},
                               {Role::assistant, "It sorts."},
                               {Role::user, "Can it be faster?"},
                               {Role::assistant, "Use a heap."},
                               {Role::user, "Thanks!"},
                               {Role::assistant, "Anytime."}});
  auto ref = make_reference("code-1", "def sort(xs):\n    return sorted(xs)", Language::en,
                            DomainTag::code, "repo/sort.py");
  auto result = attach_reference_code(dialogue, ref);
  CHECK_FALSE(result.empty_question);

  const auto& first = result.dialogue.turns[0].text;
  CHECK(first.rfind("```python\n", 0) == 0);
  CHECK(first.find(ref.text) != std::string::npos);
  CHECK(first.find("What does this do?") != std::string::npos);
  CHECK(first.find("```\n\nWhat does this do?") != std::string::npos);

  for (std::size_t i = 1; i < dialogue.turns.size(); ++i)
    CHECK(result.dialogue.turns[i].text == dialogue.turns[i].text);
  CHECK(result.dialogue.turns[0].word_count >
        dialogue.turns[0].word_count);
}

TEST_CASE("attach_reference_code flags an empty first question") {
  auto dialogue = dialogue_of({{Role::user, ""}, {Role::assistant, "Sure."}});
  auto ref = make_reference("code-2", "x = 1", Language::en, DomainTag::code);
  auto result = attach_reference_code(dialogue, ref);
  CHECK(result.empty_question);
  CHECK(result.dialogue.turns[0].text.find("x = 1") != std::string::npos);
}

TEST_CASE("attach_reference_code without a user turn is an error") {
  ParsedDialogue d;
  d.turns = {{Role::assistant, 1, "hello", 1}};
  auto ref = make_reference("code-3", "y = 2", Language::en, DomainTag::code);
  CHECK_THROWS_AS(attach_reference_code(d, ref), Error);
}

TEST_CASE("fence hints follow the source extension") {
  auto py = make_reference("a", "x", Language::en, DomainTag::code, "pkg/mod.py");
  CHECK(code_fence_hint(py) == "python");
  auto rs = make_reference("b", "x", Language::en, DomainTag::code, "src/lib.rs");
  CHECK(code_fence_hint(rs) == "rust");
  auto none = make_reference("c", "x", Language::en, DomainTag::code);
  CHECK(code_fence_hint(none).empty());
}

TEST_CASE("records round-trip through JSON") {
  auto record = record_with(3, true);
  record.scenario = Scenario::code_bg;
  record.language = Language::zh;
  record.validation.word_count_deviations = {0.0, -0.25};
  auto restored = record_from_json(to_json(record));
  CHECK(restored.record_id == record.record_id);
  CHECK(restored.sequence == record.sequence);
  CHECK(restored.scenario == record.scenario);
  CHECK(restored.language == record.language);
  CHECK(restored.reference_text_hash == record.reference_text_hash);
  CHECK(restored.plan.n_turns == record.plan.n_turns);
  CHECK(restored.turns.size() == record.turns.size());
  CHECK(restored.turns[1].text == "a");
  CHECK(restored.generation.timestamp == record.generation.timestamp);
  CHECK(restored.validation.obeys_template == record.validation.obeys_template);
  CHECK(restored.validation.word_count_deviations == record.validation.word_count_deviations);
}

TEST_CASE("emission is ordered by sequence regardless of arrival order") {
  auto dir = fixtures::temp_dir("refgpt_emit_order");
  auto path = dir / "out.jsonl";
  OrderedEmitter emitter(path, false);
  for (std::uint64_t seq : {4, 1, 0, 3, 2}) emitter.push(record_with(seq, true));
  auto summary = emitter.finish();
  CHECK(summary.written == 5);

  auto lines = read_lines(path);
  REQUIRE(lines.size() == 5);
  for (std::size_t i = 0; i < lines.size(); ++i)
    CHECK(nlohmann::json::parse(lines[i])["sequence"] == i);
}

TEST_CASE("drop_invalid diverts failing records to the rejected sidecar") {
  auto dir = fixtures::temp_dir("refgpt_emit_drop");
  auto path = dir / "out.jsonl";
  std::vector<DatasetRecord> records;
  for (std::uint64_t i = 0; i < 10; ++i) records.push_back(record_with(i, i != 4));
  auto summary = emit_records(records, path, true);
  CHECK(summary.written == 9);
  CHECK(summary.dropped_invalid == 1);
  CHECK(read_lines(path).size() == 9);

  auto rejected = read_lines(dir / "out.jsonl.rejected.jsonl");
  REQUIRE(rejected.size() == 1);
  CHECK(nlohmann::json::parse(rejected[0])["sequence"] == 4);
}

TEST_CASE("without drop_invalid failing records stay in the main output") {
  auto dir = fixtures::temp_dir("refgpt_emit_keep");
  auto path = dir / "out.jsonl";
  std::vector<DatasetRecord> records;
  for (std::uint64_t i = 0; i < 4; ++i) records.push_back(record_with(i, i != 2));
  auto summary = emit_records(records, path, false);
  CHECK(summary.written == 4);
  CHECK(summary.dropped_invalid == 0);
}

TEST_CASE("rejected slots keep the sequence gap-free") {
  auto dir = fixtures::temp_dir("refgpt_emit_gap");
  auto path = dir / "out.jsonl";
  OrderedEmitter emitter(path, false);
  emitter.push(record_with(0, true));
  emitter.push_rejected(1, {{"sequence", 1}, {"error", "backend exploded"}});
  emitter.push(record_with(2, true));
  auto summary = emitter.finish();
  CHECK(summary.written == 2);
  CHECK(read_lines(path).size() == 2);
  CHECK(read_lines(dir / "out.jsonl.rejected.jsonl").size() == 1);
}

TEST_CASE("a missing sequence is caught at finish") {
  auto dir = fixtures::temp_dir("refgpt_emit_missing");
  OrderedEmitter emitter(dir / "out.jsonl", false);
  emitter.push(record_with(1, true));  // sequence 0 never arrives
  CHECK_THROWS_AS(emitter.finish(), Error);
}

TEST_CASE("load_records reads back what emit wrote") {
  auto dir = fixtures::temp_dir("refgpt_emit_load");
  auto path = dir / "out.jsonl";
  std::vector<DatasetRecord> records;
  for (std::uint64_t i = 0; i < 6; ++i) records.push_back(record_with(i, true));
  emit_records(records, path, false);
  auto loaded = load_records(path);
  REQUIRE(loaded.size() == 6);
  CHECK(loaded[3].record_id == "r3");
}

}  // TEST_SUITE
