// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "planner/planner.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <limits>
#include <set>

#include "common/error.hpp"

namespace meltcheck::planner {
using nlohmann::json;

namespace {

using u128 = unsigned __int128;

[[noreturn]] void overflow(unsigned m, MaxDepth d) {
  throw Error(ErrorCode::overflow,
              "count_pairs(" + std::to_string(m) + ", " +
                  (d ? std::to_string(*d) : std::string("unlimited")) +
                  ") exceeds the 64-bit range");
}

u128 checked_mul(u128 a, u128 b, unsigned m, MaxDepth d) {
  u128 out;
  if (__builtin_mul_overflow(a, b, &out)) overflow(m, d);
  return out;
}

u128 checked_add(u128 a, u128 b, unsigned m, MaxDepth d) {
  u128 out;
  if (__builtin_add_overflow(a, b, &out)) overflow(m, d);
  return out;
}

// Calls fn(combination) for every k-subset of `items` in lexicographic order.
// Stops early when fn returns false; returns false in that case.
bool for_each_combination(const std::vector<int>& items, std::size_t k,
                          const std::function<bool(const std::vector<int>&)>& fn) {
  const std::size_t n = items.size();
  if (k > n) return true;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::vector<int> combo(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) combo[i] = items[idx[i]];
    if (!fn(combo)) return false;
    // Advance the rightmost index that still has room.
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return true;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

std::string state_suffix(const std::vector<int>& removed) {
  if (removed.empty()) return "root";
  std::vector<int> sorted = removed;
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i) out.push_back('-');
    out += std::to_string(sorted[i]);
  }
  return out;
}

std::string state_key(const MeltState& state) {
  return state.seed_id + "/" + state_suffix(state.removed);
}

MeltState parse_state_key(std::string_view key) {
  auto slash = key.rfind('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == key.size()) {
    throw Error(ErrorCode::invalid_argument, "malformed state key '" + std::string(key) + "'");
  }
  MeltState state;
  state.seed_id = std::string(key.substr(0, slash));
  std::string_view rest = key.substr(slash + 1);
  if (rest == "root") return state;
  if (rest.back() == '-') throw Error(ErrorCode::invalid_argument, "malformed state key '" + std::string(key) + "'");
  while (!rest.empty()) {
    auto dash = rest.find('-');
    std::string_view part = rest.substr(0, dash);
    int id = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), id);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) {
      throw Error(ErrorCode::invalid_argument, "malformed state key '" + std::string(key) + "'");
    }
    state.removed.push_back(id);
    rest = dash == std::string_view::npos ? std::string_view() : rest.substr(dash + 1);
  }
  if (!std::is_sorted(state.removed.begin(), state.removed.end()) ||
      std::adjacent_find(state.removed.begin(), state.removed.end()) != state.removed.end()) {
    throw Error(ErrorCode::invalid_argument, "non-canonical state key '" + std::string(key) + "'");
  }
  return state;
}

std::uint64_t count_pairs(unsigned m, MaxDepth max_depth) {
  u128 total = 0;
  if (!max_depth) {
    u128 pow3 = 1, pow2 = 1;
    for (unsigned i = 0; i < m; ++i) {
      pow3 = checked_mul(pow3, 3, m, max_depth);
      pow2 = checked_mul(pow2, 2, m, max_depth);
    }
    total = pow3 - pow2;
  } else {
    const unsigned top = std::min(m, *max_depth);
    u128 binom = 1;  // C(m, k), updated incrementally
    for (unsigned k = 1; k <= top; ++k) {
      binom = checked_mul(binom, m - k + 1, m, max_depth) / k;
      if (k >= 127) overflow(m, max_depth);
      u128 proper_subsets = (u128(1) << k) - 1;
      total = checked_add(total, checked_mul(binom, proper_subsets, m, max_depth), m, max_depth);
    }
  }
  if (total > std::numeric_limits<std::uint64_t>::max()) overflow(m, max_depth);
  return static_cast<std::uint64_t>(total);
}

std::vector<MeltPair> enumerate_pairs(const std::string& seed_id, std::vector<int> object_ids,
                                      const PlanOptions& options) {
  std::sort(object_ids.begin(), object_ids.end());
  object_ids.erase(std::unique(object_ids.begin(), object_ids.end()), object_ids.end());
  const std::size_t m = object_ids.size();
  const std::size_t top = options.max_depth ? std::min<std::size_t>(m, *options.max_depth) : m;
  const std::size_t budget = options.pair_budget.value_or(std::numeric_limits<std::size_t>::max());

  std::vector<MeltPair> pairs;
  if (budget == 0) return pairs;
  for (std::size_t t_size = 1; t_size <= top; ++t_size) {
    bool more = for_each_combination(object_ids, t_size, [&](const std::vector<int>& t) {
      for (std::size_t s_size = 0; s_size < t_size; ++s_size) {
        bool inner = for_each_combination(t, s_size, [&](const std::vector<int>& s) {
          pairs.push_back({MeltState{seed_id, s}, MeltState{seed_id, t}});
          return pairs.size() < budget;
        });
        if (!inner) return false;
      }
      return true;
    });
    if (!more) break;
  }
  return pairs;
}

std::vector<MeltPair> enumerate_pairs(const corpus::SeedImage& seed, const PlanOptions& options) {
  return enumerate_pairs(seed.seed_id, corpus::meltable_objects(seed), options);
}

std::vector<MeltState> unique_states(const std::vector<MeltPair>& pairs) {
  std::set<MeltState> states;
  for (const auto& p : pairs) {
    states.insert(p.ancestor);
    states.insert(p.descendant);
  }
  return {states.begin(), states.end()};
}

json to_json(const MeltPair& pair) {
  return json{{"seed_id", pair.ancestor.seed_id},
              {"ancestor", pair.ancestor.removed},
              {"descendant", pair.descendant.removed}};
}

MeltPair pair_from_json(const json& value) {
  try {
    MeltPair pair;
    std::string seed = value.at("seed_id").get<std::string>();
    pair.ancestor = {seed, value.at("ancestor").get<std::vector<int>>()};
    pair.descendant = {seed, value.at("descendant").get<std::vector<int>>()};
    std::sort(pair.ancestor.removed.begin(), pair.ancestor.removed.end());
    std::sort(pair.descendant.removed.begin(), pair.descendant.removed.end());
    bool proper = pair.ancestor.removed.size() < pair.descendant.removed.size() &&
                  std::includes(pair.descendant.removed.begin(), pair.descendant.removed.end(),
                                pair.ancestor.removed.begin(), pair.ancestor.removed.end());
    if (!proper) {
      throw Error(ErrorCode::invalid_argument,
                  "plan entry for '" + seed + "': ancestor is not a proper subset of descendant");
    }
    return pair;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("plan entry: ") + e.what());
  }
}

}  // namespace meltcheck::planner
