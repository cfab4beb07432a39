#pragma once

// Brute-force reference for the detectors over small bigram models. Nothing
// here calls into the library's scoring code: conditionals come from raw
// bigram counts and every statistic is evaluated term by term.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::uint32_t>;
using Probs = std::vector<double>;

constexpr double kFloor = 1e-12;
constexpr double kSigmaFloor = 1e-6;
constexpr double kEps = 1e-6;

inline double flog(double p) { return std::log(std::max(p, kFloor)); }

// Add-alpha bigram. Id 0 follows the last token of every training line.
struct Bigram {
  std::size_t C = 0;
  double alpha = 1.0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> pair;
  std::map<std::uint32_t, double> single;
  std::map<std::uint32_t, double> unigram;
  double total = 0;

  Bigram(const std::vector<Tokens>& lines, std::size_t vocab, double a) : C(vocab), alpha(a) {
    for (const auto& line : lines) {
      for (std::size_t i = 0; i < line.size(); ++i) {
        unigram[line[i]] += 1;
        total += 1;
        const std::uint32_t next = i + 1 < line.size() ? line[i + 1] : 0;
        pair[{line[i], next}] += 1;
        single[line[i]] += 1;
      }
    }
  }

  // P(. | history); an empty history uses unigram counts.
  Probs conditional(const Tokens& history) const {
    Probs p(C);
    for (std::uint32_t t = 0; t < C; ++t) {
      double num = alpha, den = alpha * static_cast<double>(C);
      if (history.empty()) {
        auto u = unigram.find(t);
        if (u != unigram.end()) num += u->second;
        den += total;
      } else {
        const std::uint32_t prev = history.back();
        auto c = pair.find({prev, t});
        if (c != pair.end()) num += c->second;
        auto s = single.find(prev);
        if (s != single.end()) den += s->second;
      }
      p[t] = num / den;
    }
    return p;
  }
};

// Conditionals at the scored positions: every body token when a prefix is
// given, every body token but the first otherwise.
inline std::vector<Probs> stream(const Bigram& m, const Tokens& prefix, const Tokens& body) {
  Tokens ctx = prefix;
  std::vector<Probs> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (!ctx.empty()) out.push_back(m.conditional(ctx));
    ctx.push_back(body[i]);
  }
  return out;
}

inline Tokens targets(const Tokens& prefix, const Tokens& body) {
  return prefix.empty() ? Tokens(body.begin() + 1, body.end()) : body;
}

inline double rank(const Probs& p, std::uint32_t t) {
  double r = 1;
  for (std::uint32_t j = 0; j < p.size(); ++j) {
    if (p[j] > p[t] || (p[j] == p[t] && j < t)) r += 1;
  }
  return r;
}

inline double sum_ll(const std::vector<Probs>& s, const Tokens& y) {
  double v = 0;
  for (std::size_t i = 0; i < y.size(); ++i) v += flog(s[i][y[i]]);
  return v;
}

inline double mean_log_rank(const std::vector<Probs>& s, const Tokens& y) {
  double v = 0;
  for (std::size_t i = 0; i < y.size(); ++i) v += std::log(rank(s[i], y[i]));
  return v / static_cast<double>(y.size());
}

inline double log_likelihood(const std::vector<Probs>& s, const Tokens& y) {
  return sum_ll(s, y) / static_cast<double>(y.size());
}

// Returns the raw (un-negated) mean entropy.
inline double entropy(const std::vector<Probs>& s) {
  double v = 0;
  for (const auto& p : s) {
    for (double q : p) {
      if (q > 0) v -= q * std::log(q);
    }
  }
  return v / static_cast<double>(s.size());
}

inline double rank_score(const std::vector<Probs>& s, const Tokens& y) {
  double v = 0;
  for (std::size_t i = 0; i < y.size(); ++i) v += rank(s[i], y[i]);
  return -v / static_cast<double>(y.size());
}

inline double log_rank_score(const std::vector<Probs>& s, const Tokens& y) { return -mean_log_rank(s, y); }

inline double lrr(const std::vector<Probs>& s, const Tokens& y) {
  double lr = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lr += std::log(rank(s[i], y[i]));
  return -sum_ll(s, y) / std::max(lr, kEps);
}

inline double discrepancy(double x, const std::vector<double>& v) {
  double m = 0;
  for (double a : v) m += a;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (double a : v) ss += (a - m) * (a - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return (x - m) / std::max(sd, kSigmaFloor);
}

// Variants rescored under their own contexts.
inline double detectgpt(const Bigram& m, const Tokens& prefix, const Tokens& body,
                        const std::vector<Tokens>& variants) {
  std::vector<double> v;
  for (const auto& var : variants) v.push_back(sum_ll(stream(m, prefix, var), targets(prefix, var)));
  return discrepancy(sum_ll(stream(m, prefix, body), targets(prefix, body)), v);
}

// Variants read off the original's conditionals.
inline double fast_detectgpt(const Bigram& m, const Tokens& prefix, const Tokens& body,
                             const std::vector<Tokens>& variants) {
  const auto s = stream(m, prefix, body);
  std::vector<double> v;
  for (const auto& var : variants) v.push_back(sum_ll(s, targets(prefix, var)));
  return discrepancy(sum_ll(s, targets(prefix, body)), v);
}

inline double npr(const Bigram& m, const Tokens& prefix, const Tokens& body, const std::vector<Tokens>& variants) {
  double num = 0;
  for (const auto& var : variants) num += mean_log_rank(stream(m, prefix, var), targets(prefix, var));
  num /= static_cast<double>(variants.size());
  return num / std::max(mean_log_rank(stream(m, prefix, body), targets(prefix, body)), kEps);
}

inline double fast_npr(const Bigram& m, const Tokens& prefix, const Tokens& body,
                       const std::vector<Tokens>& variants) {
  const auto s = stream(m, prefix, body);
  double num = 0;
  for (const auto& var : variants) num += mean_log_rank(s, targets(prefix, var));
  num /= static_cast<double>(variants.size());
  return num / std::max(mean_log_rank(s, targets(prefix, body)), kEps);
}

// Raw B; the score is its negation.
inline double binoculars(const std::vector<Probs>& m1, const std::vector<Probs>& m2, const Tokens& y) {
  double ppl = 0, x = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ppl -= flog(m1[i][y[i]]);
    for (std::size_t j = 0; j < m1[i].size(); ++j) x -= m1[i][j] * flog(m2[i][j]);
  }
  ppl /= static_cast<double>(y.size());
  x /= static_cast<double>(y.size());
  return ppl / std::max(x, kEps);
}

// Mann-Whitney by counting every pair.
inline double auc(const std::vector<double>& ai, const std::vector<double>& human) {
  double wins = 0;
  for (double a : ai) {
    for (double h : human) wins += a > h ? 1.0 : (a == h ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(ai.size()) * static_cast<double>(human.size()));
}

}  // namespace oracle
