// src/channel.cc

// Copyright 2026  The imly Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "imly/channel.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "imly/config_file.h"
#include "imly/ctc.h"
#include "imly/error.h"
#include "imly/matrix.h"
#include "imly/rng.h"

namespace imly {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Log-domain lattice over (canonical position i, observed position j).
// f(i, j): i symbols and j outputs generated, gap i not yet filled.
// g(i, j): same, after gap i's insertions.
struct Lattice {
  Matrix<double> f, g;
};

struct EdgeWeights {
  double match, sub, del, ins_symbol;
  std::vector<double> gap;  // by insertion count

  EdgeWeights(const ChannelParams& ch, int max_ins)
      : match(safe_log(ch.p_match)),
        sub(safe_log(ch.p_sub / (ch.alphabet_size - 1))),
        del(safe_log(ch.p_del)),
        ins_symbol(-std::log(static_cast<double>(ch.alphabet_size))) {
    for (int m = 0; m <= max_ins; ++m) {
      gap.push_back(gap_logprob(m, ch.p_ins, max_ins) + m * ins_symbol);
    }
  }

  double emit(Phoneme c, Phoneme o) const { return c == o ? match : sub; }
};

template <bool kMax>
double combine(double a, double b) {
  if constexpr (kMax) {
    return std::max(a, b);
  } else {
    return log_sum_exp(a, b);
  }
}

template <bool kMax>
Lattice forward_lattice(const std::vector<Phoneme>& obs, const std::vector<Phoneme>& can,
                        const EdgeWeights& w) {
  const std::size_t n = can.size(), len = obs.size();
  Lattice lat{Matrix<double>(n + 1, len + 1, kNegInf), Matrix<double>(n + 1, len + 1, kNegInf)};
  lat.f(0, 0) = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= len; ++j) {
      double acc = kNegInf;
      for (std::size_t m = 0; m < w.gap.size() && m <= j; ++m) {
        acc = combine<kMax>(acc, lat.f(i, j - m) + w.gap[m]);
      }
      lat.g(i, j) = acc;
    }
    if (i == n) break;
    for (std::size_t j = 0; j <= len; ++j) {
      double acc = lat.g(i, j) + w.del;
      if (j > 0) acc = combine<kMax>(acc, lat.g(i, j - 1) + w.emit(can[i], obs[j - 1]));
      lat.f(i + 1, j) = acc;
    }
  }
  return lat;
}

// bf(i, j): log-probability of producing obs[j..] from can[i..] starting
// before gap i's insertions; bg(i, j): after them.
Lattice backward_lattice(const std::vector<Phoneme>& obs, const std::vector<Phoneme>& can,
                         const EdgeWeights& w) {
  const std::size_t n = can.size(), len = obs.size();
  Lattice lat{Matrix<double>(n + 1, len + 1, kNegInf), Matrix<double>(n + 1, len + 1, kNegInf)};
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = 0; j <= len; ++j) {
      if (i == n) {
        lat.g(i, j) = j == len ? 0.0 : kNegInf;
        continue;
      }
      double acc = w.del + lat.f(i + 1, j);
      if (j < len) acc = log_sum_exp(acc, w.emit(can[i], obs[j]) + lat.f(i + 1, j + 1));
      lat.g(i, j) = acc;
    }
    for (std::size_t j = 0; j <= len; ++j) {
      double acc = kNegInf;
      for (std::size_t m = 0; m < w.gap.size() && j + m <= len; ++m) {
        acc = log_sum_exp(acc, w.gap[m] + lat.g(i, j + m));
      }
      lat.f(i, j) = acc;
    }
  }
  return lat;
}

void check_symbols(const std::vector<Phoneme>& seq, int alphabet) {
  for (Phoneme p : seq) {
    if (p < 1 || p > alphabet) throw DataError("phoneme index out of range for the channel alphabet");
  }
}

double floor_rate(double raw, double slots) { return 1e-3 + (1.0 - slots * 1e-3) * raw; }

}  // namespace

void ChannelParams::validate() const {
  for (double p : {p_match, p_sub, p_del, p_ins}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("channel rates must lie in [0, 1]");
  }
  if (!(p_ins < 1.0)) throw ConfigError("p_ins must be below 1");
  if (std::abs(p_match + p_sub + p_del - 1.0) > 1e-6) {
    throw ConfigError("p_match + p_sub + p_del must equal 1");
  }
  if (alphabet_size < 2) throw ConfigError("channel alphabet needs at least two symbols");
}

double gap_logprob(int m, double p_ins, int max_insertions) {
  if (m < 0 || m > max_insertions) return kNegInf;
  const double stop = m < max_insertions ? std::log1p(-p_ins) : 0.0;
  if (m == 0) return stop;
  return m * safe_log(p_ins) + stop;
}

std::vector<Phoneme> corrupt(const std::vector<Phoneme>& canonical, const ChannelParams& ch,
                             std::uint64_t seed, int max_insertions) {
  ch.validate();
  check_symbols(canonical, ch.alphabet_size);
  Rng rng(seed);
  const auto alphabet = static_cast<std::uint64_t>(ch.alphabet_size);
  std::vector<Phoneme> out;
  auto fill_gap = [&] {
    for (int m = 0; m < max_insertions && rng.uniform() < ch.p_ins; ++m) {
      out.push_back(1 + static_cast<Phoneme>(rng.below(alphabet)));
    }
  };
  fill_gap();
  for (Phoneme p : canonical) {
    const double u = rng.uniform();
    if (u < ch.p_match) {
      out.push_back(p);
    } else if (u < ch.p_match + ch.p_sub) {
      Phoneme s = 1 + static_cast<Phoneme>(rng.below(alphabet - 1));
      if (s >= p) ++s;
      out.push_back(s);
    }
    fill_gap();
  }
  return out;
}

double channel_logprob(const std::vector<Phoneme>& observed,
                       const std::vector<Phoneme>& canonical, const ChannelParams& ch,
                       int max_insertions) {
  ch.validate();
  const EdgeWeights w(ch, max_insertions);
  const Lattice lat = forward_lattice<false>(observed, canonical, w);
  return lat.g(canonical.size(), observed.size());
}

double channel_viterbi_logprob(const std::vector<Phoneme>& observed,
                               const std::vector<Phoneme>& canonical,
                               const ChannelParams& ch, int max_insertions) {
  ch.validate();
  const EdgeWeights w(ch, max_insertions);
  const Lattice lat = forward_lattice<true>(observed, canonical, w);
  return lat.g(canonical.size(), observed.size());
}

ChannelParams estimate_channel(const std::vector<ChannelPair>& pairs, int max_insertions,
                               int alphabet, int iterations) {
  if (pairs.empty()) throw DataError("channel estimation needs at least one pair");
  ChannelParams ch{0.7, 0.15, 0.15, 0.15, alphabet};
  for (const auto& pr : pairs) {
    check_symbols(pr.canonical, alphabet);
    check_symbols(pr.observed, alphabet);
  }
  for (int it = 0; it < iterations; ++it) {
    const EdgeWeights w(ch, max_insertions);
    double n_match = 0, n_sub = 0, n_del = 0, coins_up = 0, coins_down = 0;
    for (const auto& pr : pairs) {
      const auto& can = pr.canonical;
      const auto& obs = pr.observed;
      const Lattice fw = forward_lattice<false>(obs, can, w);
      const Lattice bw = backward_lattice(obs, can, w);
      const double z = fw.g(can.size(), obs.size());
      if (!std::isfinite(z)) continue;
      for (std::size_t i = 0; i <= can.size(); ++i) {
        for (std::size_t j = 0; j <= obs.size(); ++j) {
          if (i < can.size()) {
            if (j < obs.size()) {
              const double e = std::exp(fw.g(i, j) + w.emit(can[i], obs[j]) + bw.f(i + 1, j + 1) - z);
              (can[i] == obs[j] ? n_match : n_sub) += e;
            }
            n_del += std::exp(fw.g(i, j) + w.del + bw.f(i + 1, j) - z);
          }
          for (std::size_t m = 0; m < w.gap.size() && j + m <= obs.size(); ++m) {
            const double e = std::exp(fw.f(i, j) + w.gap[m] + bw.g(i, j + m) - z);
            coins_up += e * static_cast<double>(m);
            if (static_cast<int>(m) < max_insertions) coins_down += e;
          }
        }
      }
    }
    const double symbols = n_match + n_sub + n_del;
    if (symbols > 0.0) {
      ch.p_match = floor_rate(n_match / symbols, 3);
      ch.p_sub = floor_rate(n_sub / symbols, 3);
      ch.p_del = floor_rate(n_del / symbols, 3);
    }
    const double coins = coins_up + coins_down;
    if (coins > 0.0) ch.p_ins = floor_rate(coins_up / coins, 2);
  }
  return ch;
}

std::string format_channel(const ChannelParams& ch) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "p_match=%.17g\np_sub=%.17g\np_del=%.17g\np_ins=%.17g\n",
                ch.p_match, ch.p_sub, ch.p_del, ch.p_ins);
  return buf;
}

ChannelParams parse_channel(const std::string& text) {
  ChannelParams ch;
  try {
    const KeyValues kv = parse_key_values(text);
    const char* keys[] = {"p_match", "p_sub", "p_del", "p_ins"};
    double* slots[] = {&ch.p_match, &ch.p_sub, &ch.p_del, &ch.p_ins};
    for (int i = 0; i < 4; ++i) {
      const auto it = kv.find(keys[i]);
      if (it == kv.end()) throw DataError(std::string("channel file lacks ") + keys[i]);
      *slots[i] = parse_double(it->second, keys[i]);
    }
    for (const auto& [k, v] : kv) {
      if (k != "p_match" && k != "p_sub" && k != "p_del" && k != "p_ins") {
        throw DataError("unknown channel key " + k);
      }
    }
    ch.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad channel file: ") + e.what());
  }
  return ch;
}

ChannelParams load_channel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open channel file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_channel(ss.str());
}

void save_channel_file(const std::string& path, const ChannelParams& ch) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << format_channel(ch);
}

}  // namespace imly
