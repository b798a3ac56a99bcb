#include "manyshot/refinery.hpp"

#include <algorithm>
#include <array>
#include <queue>

#include "manyshot/shuffle.hpp"
#include "manyshot/unicode.hpp"

namespace manyshot {

namespace {

struct CodePoint {
  char32_t cp;
  std::size_t offset;  // byte offset of the code point
  std::size_t length;  // byte length
};

std::vector<CodePoint> code_points(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    const char32_t cp = unicode::decode_at(text, i, len);
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

bool is_terminal(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'…'; }

constexpr std::array<std::string_view, 33> kAbbreviations = {
    "Dr",  "Mr",   "Mrs", "Ms",  "Prof", "Sr",  "Jr",  "St",  "Mt",   "vs",  "etc",
    "e.g", "i.e",  "Inc", "Ltd", "Co",   "No",  "Gen", "Col", "Capt", "Lt",  "Sgt",
    "Rev", "Hon",  "Fig", "al",  "approx", "Dept", "Univ", "Jan", "Feb", "Aug", "Sep"};

bool is_abbreviation(std::string_view word) {
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.remove_prefix(1);
  }
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end()) {
    return true;
  }
  // Single-letter initials such as "D. W. Griffith".
  const std::u32string cps = unicode::decode(word);
  return cps.size() == 1 && unicode::is_upper(cps.front());
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  const auto cps = code_points(text);
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    const std::string_view piece = unicode::trim(text.substr(start, end - start));
    if (!piece.empty()) sentences.emplace_back(piece);
    start = end;
  };

  std::size_t i = 0;
  while (i < cps.size()) {
    if (!is_terminal(cps[i].cp)) {
      ++i;
      continue;
    }
    const std::size_t mark = i;
    std::size_t j = i;
    while (j < cps.size() && is_terminal(cps[j].cp)) ++j;
    while (j < cps.size() && unicode::is_closing_quote_or_bracket(cps[j].cp)) ++j;
    std::size_t k = j;
    while (k < cps.size() && unicode::is_space(cps[k].cp)) ++k;
    const bool has_gap = k > j;
    const bool next_opens = k < cps.size() && (unicode::is_upper(cps[k].cp) ||
                                               unicode::is_opening_quote(cps[k].cp));
    bool boundary = has_gap && next_opens;
    if (boundary && cps[mark].cp == U'.' && j == mark + 1) {
      std::size_t w = mark;
      while (w > 0 && !unicode::is_space(cps[w - 1].cp)) --w;
      const std::size_t from = cps[w].offset;
      boundary = !is_abbreviation(text.substr(from, cps[mark].offset - from));
    }
    if (boundary) emit(j < cps.size() ? cps[j].offset : text.size());
    i = j;
  }
  emit(text.size());
  return sentences;
}

void FilterConfig::validate() const {
  if (min_words <= 0 || min_words > max_words) {
    throw std::invalid_argument("filter requires 0 < min_words <= max_words");
  }
  for (double r : {max_digit_ratio, max_punct_ratio, max_upper_ratio, max_nonlatin_ratio}) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("filter ratios must lie in [0,1]");
  }
}

std::string_view to_string(RejectionCode code) {
  switch (code) {
    case RejectionCode::too_short: return "too_short";
    case RejectionCode::too_long: return "too_long";
    case RejectionCode::web_artifact: return "web_artifact";
    case RejectionCode::code_like: return "code_like";
    case RejectionCode::nonlatin_excess: return "nonlatin_excess";
    case RejectionCode::digit_ratio: return "digit_ratio";
    case RejectionCode::punct_ratio: return "punct_ratio";
    case RejectionCode::upper_ratio: return "upper_ratio";
    case RejectionCode::bad_start: return "bad_start";
    case RejectionCode::no_terminal_punct: return "no_terminal_punct";
  }
  return "?";
}

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_alnum(char c) { return is_ascii_alpha(c) || (c >= '0' && c <= '9'); }

std::optional<std::string> find_web_artifact(std::string_view sentence) {
  const std::string lower = ascii_lower(sentence);
  for (std::string_view marker : {"http://", "https://", "ftp://", "www."}) {
    if (lower.find(marker) != std::string::npos) return "url marker '" + std::string(marker) + "'";
  }
  for (std::string_view piece : unicode::split_whitespace(sentence)) {
    const auto at = piece.find('@');
    if (at != std::string_view::npos && at > 0 && piece.find('.', at) != std::string_view::npos &&
        at + 1 < piece.size() && is_ascii_alnum(piece[at + 1])) {
      return "email address";
    }
  }
  for (std::size_t i = 0; i + 1 < sentence.size(); ++i) {
    if (sentence[i] == '<') {
      std::size_t j = i + 1;
      if (sentence[j] == '/') ++j;
      if (j < sentence.size() && is_ascii_alpha(sentence[j])) {
        const auto close = sentence.find('>', j);
        const auto reopen = sentence.find('<', j);
        if (close != std::string_view::npos && (reopen == std::string_view::npos || close < reopen)) {
          return "html tag";
        }
      }
    }
    if (sentence[i] == '&') {
      std::size_t j = i + 1;
      if (j < sentence.size() && sentence[j] == '#') ++j;
      const std::size_t name_start = j;
      while (j < sentence.size() && is_ascii_alnum(sentence[j])) ++j;
      if (j > name_start && j < sentence.size() && sentence[j] == ';') return "html entity";
    }
  }
  return std::nullopt;
}

bool is_code_symbol(char32_t cp) {
  if (cp < 0x80) {
    switch (cp) {
      case U'#': case U'$': case U'%': case U'&': case U'*': case U'+': case U'-':
      case U'/': case U'<': case U'=': case U'>': case U'@': case U'\\': case U'^':
      case U'_': case U'`': case U'|': case U'~': case U'[': case U']': case U'{':
      case U'}': case U';':
        return true;
      default:
        return false;
    }
  }
  return unicode::is_symbol(cp);
}

// Code points outside "..." and “...” spans.
std::u32string outside_quotes(const std::u32string& cps) {
  std::u32string out;
  bool in_ascii = false;
  bool in_curly = false;
  for (char32_t cp : cps) {
    if (cp == U'"' && !in_curly) {
      in_ascii = !in_ascii;
      out.push_back(U' ');
      continue;
    }
    if (cp == U'“' && !in_ascii) {
      in_curly = true;
      out.push_back(U' ');
      continue;
    }
    if (cp == U'”' && in_curly) {
      in_curly = false;
      out.push_back(U' ');
      continue;
    }
    out.push_back(in_ascii || in_curly ? U' ' : cp);
  }
  return out;
}

std::optional<std::string> find_code_syntax(const std::u32string& cps) {
  const std::u32string bare = outside_quotes(cps);
  for (char32_t c : {U'{', U'}', U';', U'='}) {
    if (bare.find(c) != std::u32string::npos) {
      return "code character '" + unicode::encode(std::u32string(1, c)) + "'";
    }
  }
  if (bare.find(U"</") != std::u32string::npos) return "code sequence '</'";
  if (bare.find(U"```") != std::u32string::npos) return "code fence";
  int run = 0;
  for (char32_t cp : bare) {
    run = is_code_symbol(cp) ? run + 1 : 0;
    if (run > 2) return "more than 2 consecutive symbol characters";
  }
  return std::nullopt;
}

bool starts_validly(char32_t cp, const std::vector<StartClass>& classes) {
  for (StartClass c : classes) {
    switch (c) {
      case StartClass::uppercase_letter:
        if (unicode::is_upper(cp)) return true;
        break;
      case StartClass::opening_quote:
        if (unicode::is_opening_quote(cp)) return true;
        break;
      case StartClass::lowercase_letter:
        if (unicode::is_letter(cp) && !unicode::is_upper(cp)) return true;
        break;
      case StartClass::digit:
        if (unicode::is_digit(cp)) return true;
        break;
    }
  }
  return false;
}

std::string ratio_detail(std::size_t num, std::size_t den, double limit) {
  return std::to_string(num) + "/" + std::to_string(den) + " exceeds " + std::to_string(limit);
}

}  // namespace

std::optional<RejectionReason> passes_filter(std::string_view sentence, const FilterConfig& cfg) {
  sentence = unicode::trim(sentence);
  const auto words = unicode::split_whitespace(sentence);
  const auto n_words = static_cast<int>(words.size());
  if (n_words < cfg.min_words) {
    return RejectionReason{RejectionCode::too_short,
                           std::to_string(n_words) + " words < " + std::to_string(cfg.min_words)};
  }
  if (n_words > cfg.max_words) {
    return RejectionReason{RejectionCode::too_long,
                           std::to_string(n_words) + " words > " + std::to_string(cfg.max_words)};
  }
  if (auto hit = find_web_artifact(sentence)) {
    return RejectionReason{RejectionCode::web_artifact, *hit};
  }
  const std::u32string cps = unicode::decode(sentence);
  if (auto hit = find_code_syntax(cps)) return RejectionReason{RejectionCode::code_like, *hit};

  std::size_t non_space = 0, letters = 0, latin = 0, digits = 0, punct = 0, upper = 0;
  for (char32_t cp : cps) {
    if (unicode::is_space(cp)) continue;
    ++non_space;
    if (unicode::is_letter(cp)) {
      ++letters;
      if (unicode::is_latin_letter(cp)) ++latin;
      if (unicode::is_upper(cp)) ++upper;
    } else if (unicode::is_digit(cp)) {
      ++digits;
    } else if (unicode::is_punct_or_symbol(cp)) {
      ++punct;
    }
  }
  const auto exceeds = [](std::size_t num, std::size_t den, double limit) {
    return den > 0 && static_cast<double>(num) / static_cast<double>(den) > limit;
  };
  if (exceeds(letters - latin, letters, cfg.max_nonlatin_ratio)) {
    return RejectionReason{RejectionCode::nonlatin_excess,
                           ratio_detail(letters - latin, letters, cfg.max_nonlatin_ratio)};
  }
  if (exceeds(digits, non_space, cfg.max_digit_ratio)) {
    return RejectionReason{RejectionCode::digit_ratio,
                           ratio_detail(digits, non_space, cfg.max_digit_ratio)};
  }
  if (exceeds(punct, non_space, cfg.max_punct_ratio)) {
    return RejectionReason{RejectionCode::punct_ratio,
                           ratio_detail(punct, non_space, cfg.max_punct_ratio)};
  }
  if (exceeds(upper, letters, cfg.max_upper_ratio)) {
    return RejectionReason{RejectionCode::upper_ratio,
                           ratio_detail(upper, letters, cfg.max_upper_ratio)};
  }
  if (!starts_validly(cps.front(), cfg.valid_start_classes)) {
    return RejectionReason{RejectionCode::bad_start,
                           "starts with '" + unicode::encode(cps.substr(0, 1)) + "'"};
  }
  if (cfg.require_terminal_punct) {
    std::size_t end = cps.size();
    while (end > 0 && unicode::is_closing_quote_or_bracket(cps[end - 1])) --end;
    if (end == 0 || !is_terminal(cps[end - 1])) {
      return RejectionReason{RejectionCode::no_terminal_punct, "no terminal . ! or ?"};
    }
  }
  return std::nullopt;
}

FilterResult filter_corpus(const std::vector<std::string>& sentences, const FilterConfig& cfg) {
  cfg.validate();
  FilterResult result;
  for (const auto& s : sentences) {
    if (auto reason = passes_filter(s, cfg)) {
      ++result.rejections[std::string(to_string(reason->code))];
    } else {
      result.kept.push_back(s);
    }
  }
  return result;
}

std::string normalize_for_dedup(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    const char32_t cp = unicode::decode_at(text, i, len);
    i += len;
    if (unicode::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (unicode::is_punct_or_symbol(cp)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    unicode::append_utf8(out, unicode::to_lower(cp));
  }
  return out;
}

namespace {

std::vector<std::string_view> space_words(std::string_view normalized) {
  std::vector<std::string_view> words;
  std::size_t start = 0;
  while (start <= normalized.size()) {
    const auto end = normalized.find(' ', start);
    const auto stop = end == std::string_view::npos ? normalized.size() : end;
    if (stop > start) words.push_back(normalized.substr(start, stop - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return words;
}

}  // namespace

void ContainmentIndex::insert(std::string normalized) {
  const auto id = static_cast<std::uint32_t>(texts_.size());
  texts_.push_back(std::move(normalized));
  const std::string& text = texts_.back();
  exact_.insert(text);
  const auto words = space_words(text);
  if (words.size() < 3) {
    short_texts_.push_back(id);
    return;
  }
  std::string_view key;
  for (std::size_t i = 1; i + 1 < words.size(); ++i) {
    auto& posting = by_word_[std::string(words[i])];
    if (posting.empty() || posting.back() != id) posting.push_back(id);
    if (words[i].size() > key.size()) key = words[i];
  }
  by_key_word_[std::string(key)].push_back(id);
}

bool ContainmentIndex::contains_related(std::string_view normalized) const {
  if (texts_.empty()) return false;
  if (exact_.count(std::string(normalized)) > 0) return true;
  const auto words = space_words(normalized);
  return inside_indexed(normalized, words) || contains_indexed(normalized, words);
}

bool ContainmentIndex::inside_indexed(std::string_view normalized,
                                      const std::vector<std::string_view>& words) const {
  if (words.size() < 3) {
    return std::any_of(texts_.begin(), texts_.end(), [&](const std::string& t) {
      return t.find(normalized) != std::string::npos;
    });
  }
  // Interior words of the candidate must be interior words of the container.
  const std::vector<std::uint32_t>* rarest = nullptr;
  for (std::size_t i = 1; i + 1 < words.size(); ++i) {
    auto it = by_word_.find(std::string(words[i]));
    if (it == by_word_.end()) return false;
    if (rarest == nullptr || it->second.size() < rarest->size()) rarest = &it->second;
  }
  return std::any_of(rarest->begin(), rarest->end(), [&](std::uint32_t id) {
    return texts_[id].find(normalized) != std::string::npos;
  });
}

bool ContainmentIndex::contains_indexed(std::string_view normalized,
                                        const std::vector<std::string_view>& words) const {
  for (std::uint32_t id : short_texts_) {
    if (normalized.find(texts_[id]) != std::string_view::npos) return true;
  }
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 1; i + 1 < words.size(); ++i) {
    if (!seen.insert(words[i]).second) continue;
    auto it = by_key_word_.find(std::string(words[i]));
    if (it == by_key_word_.end()) continue;
    for (std::uint32_t id : it->second) {
      if (normalized.find(texts_[id]) != std::string_view::npos) return true;
    }
  }
  return false;
}

bool is_near_duplicate(std::string_view candidate, const ContainmentIndex& selected) {
  return selected.contains_related(normalize_for_dedup(candidate));
}

std::vector<std::string> sampler_words(std::string_view sentence) {
  const std::string normalized = normalize_for_dedup(sentence);
  std::vector<std::string> out;
  for (auto w : space_words(normalized)) out.emplace_back(w);
  return out;
}

namespace {

struct Candidate {
  std::size_t input_index;
  std::vector<std::string> words;
  std::string normalized;
  TokenCount tokens;
};

double novelty(const std::vector<std::string>& words,
               const std::unordered_map<std::string, std::uint64_t>& counts) {
  double sum = 0.0;
  for (const auto& w : words) {
    auto it = counts.find(w);
    const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    sum += 1.0 / (1.0 + c);
  }
  return sum / static_cast<double>(words.size());
}

}  // namespace

SampleResult sample_diverse(const std::vector<std::string>& sentences, const SamplerConfig& cfg,
                            const Tokenizer& tokenizer) {
  if (cfg.token_budget.value == 0) throw std::invalid_argument("token budget must be positive");

  std::vector<std::size_t> order(sentences.size());
  if (cfg.seed == 0) {
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    order = seeded_permutation(sentences.size(), cfg.seed);
  }

  // Pool positions follow `order`; ties break toward the smaller position.
  std::vector<Candidate> pool;
  pool.reserve(sentences.size());
  for (std::size_t idx : order) {
    Candidate c;
    c.input_index = idx;
    c.normalized = normalize_for_dedup(sentences[idx]);
    for (auto w : space_words(c.normalized)) c.words.emplace_back(w);
    if (c.words.empty()) continue;
    std::size_t chars = 0;
    for (const auto& w : c.words) chars += unicode::decode(w).size();
    const double avg = static_cast<double>(chars) / static_cast<double>(c.words.size());
    if (avg < cfg.min_avg_word_len) continue;
    c.tokens = tokenizer.count(sentences[idx]);
    if (c.tokens > cfg.token_budget) continue;
    pool.push_back(std::move(c));
  }

  struct Entry {
    double score;
    std::size_t position;
  };
  auto lower_priority = [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.position > b.position;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> heap(lower_priority);
  // Every word is unseen at the start, so each score begins at exactly 1.
  for (std::size_t p = 0; p < pool.size(); ++p) heap.push({1.0, p});

  SampleResult result;
  ContainmentIndex index;
  std::uint64_t remaining = cfg.token_budget.value;

  // Scores only fall as the vocabulary fills, so a stale heap key is an upper
  // bound: a popped entry whose recomputed score is unchanged is the argmax.
  while (!heap.empty()) {
    const Entry top = heap.top();
    heap.pop();
    const Candidate& c = pool[top.position];
    if (c.tokens.value > remaining) continue;
    const double fresh = novelty(c.words, result.vocabulary.counts);
    if (fresh < top.score) {
      heap.push({fresh, top.position});
      continue;
    }
    if (index.contains_related(c.normalized)) continue;
    index.insert(c.normalized);
    for (const auto& w : c.words) ++result.vocabulary.counts[w];
    result.vocabulary.total_tokens += c.tokens;
    remaining -= c.tokens.value;
    result.selected.push_back(sentences[c.input_index]);
    result.selected_indices.push_back(c.input_index);
  }

  if (result.selected.empty()) throw EmptyPoolError("no candidate fits the sampler budget");
  return result;
}

}  // namespace manyshot
