#include "seamstress/llm_backend.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"

namespace seamstress {

using nlohmann::json;
using nlohmann::ordered_json;

void BackendProfile::validate() const {
  if (context_window == 0) throw ConfigError("profile " + name + ": context_window must be > 0");
  if (output_limit == 0 || output_limit > context_window)
    throw ConfigError("profile " + name + ": output_limit must be in 1..context_window");
  if (max_transport_retries < 0 || backoff_ms < 0 || timeout_seconds < 1)
    throw ConfigError("profile " + name + ": bad retry or timeout settings");
}

const std::vector<BackendProfile>& builtin_profiles() {
  static const std::vector<BackendProfile> profiles = [] {
    std::vector<BackendProfile> v;
    BackendProfile gpt;
    gpt.name = "gpt-4o";
    gpt.context_window = 128000;
    gpt.output_limit = 4096;
    gpt.base_url = "https://api.openai.com";
    gpt.model = "gpt-4o";
    gpt.api_key_env = "OPENAI_API_KEY";
    v.push_back(gpt);

    BackendProfile claude;
    claude.name = "claude-3.5-sonnet";
    claude.context_window = 200000;
    claude.output_limit = 8192;
    claude.base_url = "https://api.anthropic.com";
    claude.path = "/v1/messages";
    claude.model = "claude-3-5-sonnet-20240620";
    claude.api_key_env = "ANTHROPIC_API_KEY";
    claude.auth_header = "x-api-key";
    claude.auth_prefix = "";
    claude.extra_headers = {{"anthropic-version", "2023-06-01"}};
    claude.response_text = "/content/0/text";
    claude.finish_reason = "/stop_reason";
    claude.truncated_reason = "max_tokens";
    v.push_back(claude);

    BackendProfile gemini;
    gemini.name = "gemini-1.5-pro";
    gemini.context_window = 2000000;
    gemini.output_limit = 8192;
    gemini.base_url = "https://generativelanguage.googleapis.com";
    gemini.path = "/v1beta/openai/chat/completions";
    gemini.model = "gemini-1.5-pro";
    gemini.api_key_env = "GEMINI_API_KEY";
    v.push_back(gemini);

    // Self-hosted through any OpenAI-compatible server.
    BackendProfile llama;
    llama.name = "llama-3-70b";
    llama.context_window = 8000;
    llama.output_limit = 2048;
    llama.base_url = "http://localhost:8000";
    llama.model = "meta-llama/Meta-Llama-3-70B-Instruct";
    v.push_back(llama);

    BackendProfile replay;
    replay.name = "replay";
    replay.context_window = 200000;
    replay.output_limit = 8192;
    v.push_back(replay);
    return v;
  }();
  return profiles;
}

std::optional<BackendProfile> find_profile(std::string_view name) {
  for (const auto& p : builtin_profiles())
    if (p.name == name) return p;
  return std::nullopt;
}

namespace {

std::size_t turn_tokens(const Turn& t) {
  std::size_t n = estimate_tokens(t.prompt);
  for (std::size_t i = 0; i < t.parts.size(); ++i) {
    n += estimate_tokens(t.parts[i]);
    if (i > 0) n += estimate_tokens(t.continuation);
  }
  return n;
}

}  // namespace

void ConversationMemory::append(Turn t) {
  t.est_tokens = turn_tokens(t);
  total_ += t.est_tokens;
  turns_.push_back(std::move(t));
}

void ConversationMemory::append_part(std::string part, const std::string& continuation) {
  if (turns_.empty()) throw std::logic_error("append_part on empty memory");
  auto& t = turns_.back();
  total_ -= t.est_tokens;
  if (!t.parts.empty()) t.continuation = continuation;
  t.parts.push_back(std::move(part));
  t.est_tokens = turn_tokens(t);
  total_ += t.est_tokens;
}

void ConversationMemory::drop_last_turn() {
  if (turns_.empty()) return;
  total_ -= turns_.back().est_tokens;
  turns_.pop_back();
}

std::vector<ChatMessage> ConversationMemory::messages() const {
  std::vector<ChatMessage> out;
  for (const auto& t : turns_) {
    out.push_back({"user", t.prompt});
    for (std::size_t i = 0; i < t.parts.size(); ++i) {
      if (i > 0) out.push_back({"user", t.continuation});
      out.push_back({"assistant", t.parts[i]});
    }
  }
  return out;
}

ordered_json ConversationMemory::to_json() const {
  ordered_json j;
  j["unit_id"] = unit_id_;
  j["est_tokens_total"] = total_;
  j["turns"] = ordered_json::array();
  for (const auto& t : turns_)
    j["turns"].push_back({{"prompt", t.prompt},
                          {"parts", t.parts},
                          {"continuation", t.continuation},
                          {"est_tokens", t.est_tokens}});
  return j;
}

ConversationMemory clear_memory(const ConversationMemory& old, const std::string& next_unit,
                                const std::optional<fs::path>& dir) {
  if (dir && !old.empty() && !old.unit_id().empty())
    write_file_atomic(*dir / (old.unit_id() + ".json"), old.to_json().dump(2) + "\n");
  return ConversationMemory(next_unit);
}

void check_window(const BackendProfile& profile, std::size_t prompt_tokens,
                  const ConversationMemory& memory, std::string_view what) {
  auto need = prompt_tokens + memory.est_tokens_total() + profile.output_limit;
  if (need > profile.context_window)
    throw ContextOverflow(std::string(what) + ": " + std::to_string(prompt_tokens) +
                          " prompt + " + std::to_string(memory.est_tokens_total()) + " memory + " +
                          std::to_string(profile.output_limit) + " reserved tokens exceed the " +
                          std::to_string(profile.context_window) + "-token window of " +
                          profile.name);
}

TranscriptWriter::TranscriptWriter(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  // Continue numbering after whatever a previous run left.
  for (const auto& e : fs::directory_iterator(dir_)) {
    auto stem = e.path().stem().string();
    if (e.path().extension() != ".json" || stem.empty() ||
        !std::all_of(stem.begin(), stem.end(), ::isdigit))
      continue;
    seq_ = std::max(seq_, std::stoi(stem) + 1);
  }
}

void TranscriptWriter::write(ordered_json record) {
  char name[32];
  std::snprintf(name, sizeof name, "%06d.json", seq_);
  ordered_json out;
  out["seq"] = seq_;
  for (auto it = record.begin(); it != record.end(); ++it) out[it.key()] = it.value();
  write_file_atomic(dir_ / name, out.dump(2) + "\n");
  ++seq_;
}

std::string exchange_key(const PromptEnvelope& env) { return env.digest(); }

std::string exchange_key(const PromptEnvelope& env, std::string_view follow_up) {
  return sha256_hex(env.canonical() + "\n\n--- follow-up ---\n" + std::string(follow_up));
}

std::vector<LlmResponsePart> LlmClient::send(const PromptEnvelope& env, ConversationMemory& memory) {
  check_window(profile_, env.est_tokens, memory, "prompt for " + env.unit_id);
  return exchange({&env, env.text, exchange_key(env), false}, memory);
}

std::vector<LlmResponsePart> LlmClient::follow_up(const PromptEnvelope& env,
                                                  const std::string& message,
                                                  ConversationMemory& memory) {
  check_window(profile_, estimate_tokens(message), memory, "follow-up for " + env.unit_id);
  return exchange({&env, message, exchange_key(env, message), true}, memory);
}

void LlmClient::add_part(std::string part, ConversationMemory& memory) {
  if (!memory.turns().back().parts.empty())
    check_window(profile_, estimate_tokens(continue_message_), memory,
                 "continuation for " + memory.unit_id());
  memory.append_part(std::move(part), continue_message_);
}

std::vector<LlmResponsePart> LlmClient::exchange(const Request& req, ConversationMemory& memory) {
  if (!memory.unit_id().empty() && memory.unit_id() != req.envelope->unit_id)
    throw std::logic_error("memory of " + memory.unit_id() + " used for " + req.envelope->unit_id);
  if (continue_message_.empty()) continue_message_ = PromptTemplates::defaults().continue_response;
  auto before = memory.est_tokens_total();
  memory.append({req.message, {}, "", 0});
  try {
    answer(req, memory);
  } catch (...) {
    memory.drop_last_turn();
    throw;
  }
  const auto& turn = memory.turns().back();
  std::vector<LlmResponsePart> parts;
  int n = static_cast<int>(turn.parts.size());
  for (int i = 0; i < n; ++i) parts.push_back({i + 1, n, turn.parts[static_cast<std::size_t>(i)]});

  if (transcript_) {
    ordered_json rec;
    rec["type"] = req.is_follow_up ? "follow_up" : "send";
    rec["unit_id"] = req.envelope->unit_id;
    rec["kind"] = to_string(req.envelope->kind);
    rec["key"] = req.key;
    rec["memory_tokens_before"] = before;
    rec["envelope"] = req.envelope->to_json();
    if (req.is_follow_up) rec["message"] = req.message;
    if (n > 1) rec["continuation"] = turn.continuation;
    rec["parts"] = turn.parts;
    transcript_->write(std::move(rec));
  }
  return parts;
}

ChatClient::ChatClient(BackendProfile profile, std::unique_ptr<ChatTransport> transport, int max_parts)
    : LlmClient(std::move(profile)), transport_(std::move(transport)), max_parts_(max_parts) {
  profile_.validate();
}

void ChatClient::answer(const Request&, ConversationMemory& memory) {
  std::string joined;
  for (int i = 0; i < max_parts_; ++i) {
    auto msgs = memory.messages();
    if (i > 0) {
      check_window(profile_, estimate_tokens(continue_message_), memory,
                   "continuation for " + memory.unit_id());
      msgs.push_back({"user", continue_message_});
    }
    auto c = transport_->complete(msgs, profile_.output_limit);
    joined += c.text;
    memory.append_part(std::move(c.text), continue_message_);
    if (!c.truncated && decode_json(joined).status != DecodeStatus::incomplete) return;
  }
}

namespace {

std::size_t common_prefix(std::string_view a, std::string_view b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

std::string line_at(std::string_view text, std::size_t offset, int& line_no) {
  line_no = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
  auto start = text.rfind('\n', offset == 0 ? 0 : offset - 1);
  start = (start == std::string_view::npos || offset == 0) ? 0 : start + 1;
  auto end = text.find('\n', offset);
  return std::string(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
}

}  // namespace

ReplayClient::ReplayClient(BackendProfile profile, const fs::path& dir) : LlmClient(std::move(profile)) {
  profile_.validate();
  if (!fs::is_directory(dir)) throw ReplayMiss("replay transcript directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  int fallback_seq = 0;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(read_file(f));
    } catch (const json::exception& e) {
      throw FormatError(f.filename().string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("parts")) continue;  // not an exchange record
    try {
      auto env = PromptEnvelope::from_json(j.at("envelope"));
      bool follow = j.value("type", std::string("send")) == "follow_up";
      std::string message = follow ? j.at("message").get<std::string>() : env.text;
      auto key = follow ? exchange_key(env, message) : exchange_key(env);
      if (j.contains("key") && j.at("key").get<std::string>() != key)
        throw FormatError(f.filename().string() + ": key does not match its envelope");
      Recorded r;
      r.seq = j.value("seq", ++fallback_seq);
      r.unit_id = env.unit_id;
      r.kind = std::string(to_string(env.kind)) + (follow ? " follow-up" : "");
      r.prompt = follow ? env.canonical() + "\n\n--- follow-up ---\n" + message : env.canonical();
      r.parts = j.at("parts").get<std::vector<std::string>>();
      if (r.parts.empty()) throw FormatError(f.filename().string() + ": no parts");
      by_key_[key].push_back(r);
      all_.emplace_back(key, std::move(r));
    } catch (const json::exception& e) {
      throw FormatError(f.filename().string() + ": " + e.what());
    }
  }
}

std::size_t ReplayClient::remaining() const {
  std::size_t n = 0;
  for (const auto& [k, q] : by_key_) n += q.size();
  return n;
}

void ReplayClient::answer(const Request& req, ConversationMemory& memory) {
  auto it = by_key_.find(req.key);
  if (it == by_key_.end() || it->second.empty()) {
    std::string sent = req.is_follow_up
                           ? req.envelope->canonical() + "\n\n--- follow-up ---\n" + req.message
                           : req.envelope->canonical();
    std::string msg = "no recorded answer for " + req.key + " (" + req.envelope->unit_id + " " +
                      std::string(to_string(req.envelope->kind)) + (req.is_follow_up ? " follow-up" : "") + ")";
    const std::pair<std::string, Recorded>* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& e : all_) {
      auto len = common_prefix(e.second.prompt, sent);
      if (!best || len > best_len) {
        best = &e;
        best_len = len;
      }
    }
    if (best) {
      int line = 0;
      auto recorded = line_at(best->second.prompt, best_len, line);
      auto got = line_at(sent, best_len, line);
      msg += "; nearest recorded: " + best->first + " (" + best->second.unit_id + " " + best->second.kind +
             "), first difference at line " + std::to_string(line) + ": recorded \"" + recorded +
             "\", sent \"" + got + "\"";
    }
    throw ReplayMiss(msg);
  }
  auto r = std::move(it->second.front());
  it->second.pop_front();
  for (auto& p : r.parts) add_part(std::move(p), memory);
}

ScriptedClient::ScriptedClient(BackendProfile profile, Script script)
    : LlmClient(std::move(profile)), script_(std::move(script)) {
  profile_.validate();
}

void ScriptedClient::answer(const Request& req, ConversationMemory& memory) {
  ++calls_;
  auto parts = script_({*req.envelope, req.message, req.is_follow_up, memory});
  if (parts.empty()) throw TransportError("scripted client returned no answer");
  for (auto& p : parts) add_part(std::move(p), memory);
}

json request_json(LlmClient& client, const PromptEnvelope& env, ConversationMemory& memory,
                  const PromptTemplates& templates, int max_format_failures,
                  const AnswerCheck& check) {
  auto parts = client.send(env, memory);
  int failures = 0;
  while (true) {
    std::string error;
    try {
      auto doc = assemble_multipart(parts, env.response_schema_id);
      if (check) check(doc);
      return doc;
    } catch (const FormatError& e) {
      error = e.what();
    }
    if (++failures >= max_format_failures)
      throw GiveUp(env.unit_id + ": no usable " + std::string(to_string(env.kind)) + " answer after " +
                   std::to_string(failures) + " attempts; last error: " + error);
    bool cut_off = error.rfind("incomplete JSON", 0) == 0;
    parts = client.follow_up(env, format_retry_message(templates, error, cut_off), memory);
  }
}

}  // namespace seamstress
