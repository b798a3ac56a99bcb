#include "manyshot/synthesis.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <ctime>
#include <thread>

#include "manyshot/unicode.hpp"

namespace manyshot {

using nlohmann::json;

std::string build_translation_prompt(std::string_view sentence, const LanguageTag& source,
                                     const LanguageTag& target) {
  std::string out;
  out += "Translate this ";
  out += source.label;
  out += " sentence into ";
  out += target.label;
  out += ". You must only reply with the translated sentence, no other details are required.\n\n";
  out += sentence;
  return out;
}

std::string_view to_string(ValidationErrc code) {
  switch (code) {
    case ValidationErrc::empty_response: return "EmptyResponse";
    case ValidationErrc::multi_paragraph: return "MultiParagraph";
    case ValidationErrc::refusal_detected: return "RefusalDetected";
  }
  return "?";
}

namespace {

// Longest first so "here is the translation:" wins over "here is".
constexpr std::array<std::string_view, 10> kPreambles = {
    "here is the translated sentence:", "here's the translated sentence:",
    "here is the translation:",         "here's the translation:",
    "translated sentence:",             "the translation is:",
    "translation:",                     "here is",
    "here's",                           "sure,"};

constexpr std::array<std::string_view, 8> kRefusals = {
    "i'm sorry", "i am sorry", "i cannot", "i can't", "i am unable", "i'm unable",
    "as an ai",  "i apologize"};

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) != prefix[i]) return false;
  }
  return true;
}

}  // namespace

std::variant<std::string, ValidationRejection> validate_translation(std::string_view raw) {
  std::string_view text = unicode::trim(raw);
  bool stripped = true;
  while (stripped && !text.empty()) {
    stripped = false;
    for (std::string_view p : kPreambles) {
      if (starts_with_ci(text, p)) {
        text.remove_prefix(p.size());
        while (!text.empty() && (text.front() == ':' || text.front() == ' ' ||
                                 text.front() == '\t' || text.front() == '\n' ||
                                 text.front() == '\r')) {
          text.remove_prefix(1);
        }
        stripped = true;
        break;
      }
    }
  }
  text = unicode::trim(text);
  if (text.empty()) return ValidationRejection{ValidationErrc::empty_response, "no content"};
  if (text.find('\n') != std::string_view::npos || text.find('\r') != std::string_view::npos) {
    return ValidationRejection{ValidationErrc::multi_paragraph, "response spans several lines"};
  }
  for (std::string_view r : kRefusals) {
    if (starts_with_ci(text, r)) {
      return ValidationRejection{ValidationErrc::refusal_detected, std::string(text.substr(0, 60))};
    }
  }
  return std::string(text);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

void validate_job(const SynthesisJob& job, const LanguageTable& languages) {
  if (job.reference_langs.empty()) throw SynthesisError("synthesis needs reference languages");
  if (job.max_attempts < 1) throw SynthesisError("max_attempts must be >= 1");
  const auto& source = languages.entry(job.source_lang.code);
  if (source.reference) {
    throw SynthesisError("synthesis translates out of the low-resource language; " +
                         job.source_lang.code + " is a reference language");
  }
  for (const auto& ref : job.reference_langs) {
    if (ref.code == job.source_lang.code) {
      throw SynthesisError("reference languages must exclude the source language");
    }
    if (!languages.entry(ref.code).reference) {
      throw SynthesisError(ref.code + " is not a reference language; translation must go into "
                                      "a higher-resource language");
    }
  }
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct TaskOutcome {
  std::optional<std::string> translation;
  std::string reason;
  int attempts = 0;
  bool connection_failure = false;
};

}  // namespace

SynthesisOutput translate_batch(const SynthesisJob& job, const ChatBackend& backend,
                                const LanguageTable& languages) {
  SynthesisOutput output;
  if (job.sentences.empty()) return output;
  validate_job(job, languages);

  const std::size_t n_refs = job.reference_langs.size();
  const std::size_t n_tasks = job.sentences.size() * n_refs;
  std::vector<TaskOutcome> outcomes(n_tasks);
  std::atomic<std::size_t> next{0};

  // Endpoints that reject the reasoning hint with a 400 get plain requests from then on.
  std::atomic<bool> send_reasoning{job.reasoning_mode == ReasoningMode::minimal &&
                                   !job.endpoint.extra_body.contains("reasoning")};

  auto run_task = [&](std::size_t t) {
    const std::size_t s = t / n_refs;
    const LanguageTag& ref = job.reference_langs[t % n_refs];
    ChatRequest request;
    request.user_text = build_translation_prompt(job.sentences[s], job.source_lang, ref);
    TaskOutcome& out = outcomes[t];
    for (int attempt = 0; attempt < job.max_attempts; ++attempt) {
      if (attempt > 0) backoff_sleep(job.endpoint.backoff_base, attempt - 1);
      out.attempts = attempt + 1;
      const bool with_reasoning = send_reasoning.load();
      request.extra_body = with_reasoning ? json{{"reasoning", {{"effort", "minimal"}}}}
                                          : json::object();
      try {
        ChatResponse response = backend.complete(request);
        auto checked = validate_translation(response.content);
        out.connection_failure = false;
        if (auto* text = std::get_if<std::string>(&checked)) {
          out.translation = std::move(*text);
          return;
        }
        const auto& rej = std::get<ValidationRejection>(checked);
        out.reason = std::string(to_string(rej.code)) + ": " + rej.detail;
      } catch (const TransportError& e) {
        out.reason = e.what();
        out.connection_failure = e.kind() == TransportKind::connection;
        if (with_reasoning && e.kind() == TransportKind::http_status && e.status() == 400) {
          // Not counted as an attempt: the plain request is retried once the hint is dropped.
          send_reasoning.store(false);
          --attempt;
          continue;
        }
        if (!e.retryable()) return;
      }
    }
  };

  auto worker = [&] {
    for (std::size_t t = next.fetch_add(1); t < n_tasks; t = next.fetch_add(1)) run_task(t);
  };
  const int width = std::max(1, std::min<int>(job.endpoint.parallelism, static_cast<int>(n_tasks)));
  std::vector<std::thread> threads;
  for (int i = 0; i < width; ++i) threads.emplace_back(worker);
  for (auto& th : threads) th.join();

  const std::string model = job.endpoint.model_id;
  const std::string stamp = utc_timestamp();
  bool any_success = false;
  bool all_connection = true;
  for (std::size_t s = 0; s < job.sentences.size(); ++s) {
    SynthesizedTriplet triplet;
    triplet.index = s;
    triplet.target_text = job.sentences[s];
    std::string prompts;
    std::optional<SynthesisFailure> failure;
    for (std::size_t r = 0; r < n_refs; ++r) {
      const TaskOutcome& out = outcomes[s * n_refs + r];
      const LanguageTag& ref = job.reference_langs[r];
      prompts += build_translation_prompt(job.sentences[s], job.source_lang, ref);
      prompts.push_back('\0');
      if (out.translation) {
        any_success = true;
        triplet.translations[ref.code] = *out.translation;
      } else {
        all_connection = all_connection && out.connection_failure;
        if (!failure) failure = SynthesisFailure{s, job.sentences[s], ref.code, out.reason, out.attempts};
      }
    }
    if (failure) {
      output.failures.push_back(std::move(*failure));
      continue;
    }
    triplet.provenance = {model, stamp, sha256_hex(prompts)};
    output.triplets.push_back(std::move(triplet));
  }
  if (!any_success && all_connection) {
    throw EndpointUnavailable("endpoint unreachable: " + job.endpoint.base_url);
  }
  return output;
}

std::string to_jsonl_line(const SynthesizedTriplet& t) {
  json translations = json::object();
  for (const auto& [code, text] : t.translations) translations[code] = text;
  return json{{"tgt_text", t.target_text},
              {"translations", translations},
              {"provenance",
               {{"model_id", t.provenance.model_id},
                {"timestamp", t.provenance.timestamp},
                {"prompt_hash", t.provenance.prompt_hash}}}}
      .dump();
}

json failures_json(const std::vector<SynthesisFailure>& failures) {
  json arr = json::array();
  for (const auto& f : failures) {
    arr.push_back({{"index", f.index},
                   {"sentence", f.sentence},
                   {"ref_lang", f.reference_lang},
                   {"reason", f.reason},
                   {"attempts", f.attempts}});
  }
  return arr;
}

}  // namespace manyshot
