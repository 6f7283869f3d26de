#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "activeeval/errors.hpp"
#include "activeeval/metric_oracle.hpp"

namespace activeeval {

namespace {

constexpr int kCharOrder = 6;
constexpr int kTokenOrder = 4;
constexpr double kBeta = 2.0;

// Decodes UTF-8 into code points, dropping whitespace. Invalid bytes pass
// through as single units.
std::u32string chars_without_space(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    char32_t cp = c;
    std::size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (len > 1 && i + len <= s.size()) {
      for (std::size_t k = 1; k < len; ++k) {
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
      }
    } else {
      len = 1;
      cp = c;
    }
    i += len;
    if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v') {
      continue;
    }
    out.push_back(cp);
  }
  return out;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

template <typename Seq>
std::map<Seq, double> ngrams(const Seq& seq, std::size_t n) {
  std::map<Seq, double> out;
  if (seq.size() < n) return out;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    const auto first = seq.begin() + static_cast<std::ptrdiff_t>(i);
    out[Seq(first, first + static_cast<std::ptrdiff_t>(n))] += 1.0;
  }
  return out;
}

template <typename Seq>
void fill(LexicalStats& st, const Seq& hyp, const Seq& ref, int order) {
  st.matches.assign(static_cast<std::size_t>(order), 0.0);
  st.hyp_totals.assign(static_cast<std::size_t>(order), 0.0);
  st.ref_totals.assign(static_cast<std::size_t>(order), 0.0);
  for (int n = 1; n <= order; ++n) {
    const auto h = ngrams(hyp, static_cast<std::size_t>(n));
    const auto r = ngrams(ref, static_cast<std::size_t>(n));
    const auto k = static_cast<std::size_t>(n - 1);
    for (const auto& [g, c] : h) {
      st.hyp_totals[k] += c;
      const auto it = r.find(g);
      if (it != r.end()) st.matches[k] += std::min(c, it->second);
    }
    for (const auto& [g, c] : r) st.ref_totals[k] += c;
  }
  st.hyp_length = static_cast<double>(hyp.size());
  st.ref_length = static_cast<double>(ref.size());
}

}  // namespace

std::string_view lexical_kind_name(LexicalKind k) {
  return k == LexicalKind::kCharNgramF ? "chrf" : "bleu";
}

LexicalKind parse_lexical_kind(std::string_view name) {
  if (name == "chrf" || name == "char_ngram_f") return LexicalKind::kCharNgramF;
  if (name == "bleu" || name == "token_ngram_precision") return LexicalKind::kTokenNgramPrecision;
  throw ConfigError("unknown lexical metric '" + std::string(name) + "'");
}

LexicalStats& LexicalStats::operator+=(const LexicalStats& o) {
  if (matches.empty()) {
    *this = o;
    return *this;
  }
  for (std::size_t i = 0; i < matches.size(); ++i) {
    matches[i] += o.matches[i];
    hyp_totals[i] += o.hyp_totals[i];
    ref_totals[i] += o.ref_totals[i];
  }
  hyp_length += o.hyp_length;
  ref_length += o.ref_length;
  return *this;
}

LexicalStats lexical_stats(std::string_view hypothesis, std::string_view reference,
                           LexicalKind kind) {
  LexicalStats st;
  st.kind = kind;
  if (kind == LexicalKind::kCharNgramF) {
    const auto ref = chars_without_space(reference);
    if (ref.empty()) throw DegenerateInputError("empty reference");
    fill(st, chars_without_space(hypothesis), ref, kCharOrder);
  } else {
    const auto ref = tokens(reference);
    if (ref.empty()) throw DegenerateInputError("empty reference");
    fill(st, tokens(hypothesis), ref, kTokenOrder);
  }
  return st;
}

double score_from_stats(const LexicalStats& st) {
  if (st.kind == LexicalKind::kCharNgramF) {
    double p = 0.0, r = 0.0;
    int used = 0;
    for (std::size_t n = 0; n < st.matches.size(); ++n) {
      if (st.ref_totals[n] <= 0) continue;
      ++used;
      if (st.hyp_totals[n] > 0) p += st.matches[n] / st.hyp_totals[n];
      r += st.matches[n] / st.ref_totals[n];
    }
    if (used == 0) return 0.0;
    p /= used;
    r /= used;
    if (p <= 0 && r <= 0) return 0.0;
    const double b2 = kBeta * kBeta;
    return (1.0 + b2) * p * r / (b2 * p + r);
  }
  if (st.hyp_length <= 0) return 0.0;
  double log_sum = 0.0;
  int used = 0;
  for (std::size_t n = 0; n < st.matches.size(); ++n) {
    if (st.hyp_totals[n] <= 0) break;
    if (st.matches[n] <= 0) return 0.0;
    log_sum += std::log(st.matches[n] / st.hyp_totals[n]);
    ++used;
  }
  if (used == 0) return 0.0;
  const double bp =
      st.hyp_length > st.ref_length ? 1.0 : std::exp(1.0 - st.ref_length / st.hyp_length);
  return bp * std::exp(log_sum / used);
}

double lexical_score(std::string_view hypothesis, std::string_view reference, LexicalKind kind) {
  return score_from_stats(lexical_stats(hypothesis, reference, kind));
}

double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size() || hypotheses.empty()) {
    throw ConfigError("corpus BLEU needs equally many hypotheses and references");
  }
  LexicalStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    total += lexical_stats(hypotheses[i], references[i], LexicalKind::kTokenNgramPrecision);
  }
  return score_from_stats(total);
}

}  // namespace activeeval
