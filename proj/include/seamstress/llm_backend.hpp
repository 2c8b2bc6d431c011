#pragma once

// LLM access: backend profiles, per-unit conversation memory, a generic
// chat-over-HTTP client, a replay client driven by recorded transcripts and
// a scripted client for tests. All clients enforce the window accounting.

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seamstress/prompts.hpp"

namespace seamstress {

struct BackendProfile {
  std::string name;
  std::size_t context_window = 0;
  std::size_t output_limit = 0;

  // HTTP endpoint. Fields are JSON pointers into request / response bodies.
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // empty: no credentials needed
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::vector<std::pair<std::string, std::string>> extra_headers;
  std::string messages_field = "/messages";
  std::string model_field = "/model";
  std::string max_tokens_field = "/max_tokens";
  std::string response_text = "/choices/0/message/content";
  std::string finish_reason = "/choices/0/finish_reason";
  std::string truncated_reason = "length";

  int timeout_seconds = 300;
  int max_transport_retries = 4;
  int backoff_ms = 2000;  // doubled per retry, capped at 60 s

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// gpt-4o, claude-3.5-sonnet, gemini-1.5-pro, llama-3-70b and "replay".
const std::vector<BackendProfile>& builtin_profiles();
std::optional<BackendProfile> find_profile(std::string_view name);

struct ChatMessage {
  std::string role;  // "user" | "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct Turn {
  std::string prompt;              // envelope text or follow-up message
  std::vector<std::string> parts;  // assistant answer, one entry per part
  std::string continuation;        // user message sent between parts
  std::size_t est_tokens = 0;

  bool operator==(const Turn&) const = default;
};

class ConversationMemory {
 public:
  explicit ConversationMemory(std::string unit_id = "") : unit_id_(std::move(unit_id)) {}

  const std::string& unit_id() const { return unit_id_; }
  const std::vector<Turn>& turns() const { return turns_; }
  std::size_t est_tokens_total() const { return total_; }
  bool empty() const { return turns_.empty(); }

  void append(Turn t);
  /// Adds a part to the last turn; parts after the first are preceded by
  /// `continuation` in the conversation.
  void append_part(std::string part, const std::string& continuation);
  void drop_last_turn();
  /// Flattened user/assistant messages, oldest first.
  std::vector<ChatMessage> messages() const;
  nlohmann::ordered_json to_json() const;

 private:
  std::string unit_id_;
  std::vector<Turn> turns_;
  std::size_t total_ = 0;
};

/// Writes memory to `dir`/<unit>.json (when dir is set) and returns a fresh
/// memory for `next_unit`.
ConversationMemory clear_memory(const ConversationMemory& old, const std::string& next_unit,
                                const std::optional<std::filesystem::path>& dir);

/// ContextOverflow unless prompt + memory + reserved output fits the window.
void check_window(const BackendProfile& profile, std::size_t prompt_tokens,
                  const ConversationMemory& memory, std::string_view what);

/// Appends one file per exchange to <dir>/<seq>.json.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(std::filesystem::path dir);
  void write(nlohmann::ordered_json record);
  int next_seq() const { return seq_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  int seq_ = 1;
};

/// Replay key of a fresh envelope, and of a follow-up message sent after it.
std::string exchange_key(const PromptEnvelope& env);
std::string exchange_key(const PromptEnvelope& env, std::string_view follow_up);

class LlmClient {
 public:
  virtual ~LlmClient() = default;

  const BackendProfile& profile() const { return profile_; }
  void set_transcript(TranscriptWriter* w) { transcript_ = w; }
  void set_continue_message(std::string m) { continue_message_ = std::move(m); }

  /// Sends `env` as a new turn. Checks the window first (ContextOverflow).
  std::vector<LlmResponsePart> send(const PromptEnvelope& env, ConversationMemory& memory);
  /// Sends a follow-up (format correction) in the conversation of `env`.
  std::vector<LlmResponsePart> follow_up(const PromptEnvelope& env, const std::string& message,
                                         ConversationMemory& memory);

 protected:
  explicit LlmClient(BackendProfile profile) : profile_(std::move(profile)) {}

  struct Request {
    const PromptEnvelope* envelope;
    std::string message;  // text of the new user message
    std::string key;
    bool is_follow_up;
  };
  /// Produces the answer parts. `memory` already holds the new turn with no
  /// parts; implementations add them through add_part.
  virtual void answer(const Request& req, ConversationMemory& memory) = 0;
  /// Parts after the first cost a continuation message, so each is
  /// window-checked before it joins the memory.
  void add_part(std::string part, ConversationMemory& memory);

  BackendProfile profile_;
  TranscriptWriter* transcript_ = nullptr;
  std::string continue_message_;

 private:
  std::vector<LlmResponsePart> exchange(const Request& req, ConversationMemory& memory);
};

/// One raw completion from a chat endpoint.
struct Completion {
  std::string text;
  bool truncated = false;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual Completion complete(const std::vector<ChatMessage>& messages, std::size_t max_output) = 0;
};

/// Chat-completions-style endpoint described by the profile. Throws
/// MissingCredentials when the key variable is unset.
std::unique_ptr<ChatTransport> make_http_transport(const BackendProfile& profile);

/// Live client: asks for continuations while the answer is cut off.
class ChatClient : public LlmClient {
 public:
  ChatClient(BackendProfile profile, std::unique_ptr<ChatTransport> transport, int max_parts = 32);

 protected:
  void answer(const Request& req, ConversationMemory& memory) override;

 private:
  std::unique_ptr<ChatTransport> transport_;
  int max_parts_;
};

/// Answers from transcript files written by TranscriptWriter (or authored by
/// hand). Entries with the same key are used in order; a miss raises
/// ReplayMiss naming the nearest recorded exchange.
class ReplayClient : public LlmClient {
 public:
  ReplayClient(BackendProfile profile, const std::filesystem::path& dir);
  std::size_t remaining() const;

 protected:
  void answer(const Request& req, ConversationMemory& memory) override;

 private:
  struct Recorded {
    int seq;
    std::string unit_id;
    std::string kind;
    std::string prompt;
    std::vector<std::string> parts;
  };
  std::map<std::string, std::deque<Recorded>> by_key_;
  std::vector<std::pair<std::string, Recorded>> all_;
};

/// Test double: a function decides each answer.
class ScriptedClient : public LlmClient {
 public:
  struct Call {
    const PromptEnvelope& envelope;
    const std::string& message;
    bool is_follow_up;
    const ConversationMemory& memory;
  };
  using Script = std::function<std::vector<std::string>(const Call&)>;
  ScriptedClient(BackendProfile profile, Script script);
  int calls() const { return calls_; }

 protected:
  void answer(const Request& req, ConversationMemory& memory) override;

 private:
  Script script_;
  int calls_ = 0;
};

/// Extra check on a decoded answer; throw FormatError to reject it.
using AnswerCheck = std::function<void(const nlohmann::json&)>;

/// send + assemble + validate, resending with a corrective message after
/// each unusable answer. GiveUp after `max_format_failures` bad answers.
nlohmann::json request_json(LlmClient& client, const PromptEnvelope& env,
                            ConversationMemory& memory, const PromptTemplates& templates,
                            int max_format_failures, const AnswerCheck& check = {});

}  // namespace seamstress
