// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpus/corpus.hpp"

namespace meltcheck::planner {

/// A node of the melt lattice: which objects of a seed have been removed.
/// `removed` is kept sorted ascending and duplicate free.
struct MeltState {
  std::string seed_id;
  std::vector<int> removed;

  friend bool operator==(const MeltState&, const MeltState&) = default;
  friend auto operator<=>(const MeltState&, const MeltState&) = default;
};

struct MeltPair {
  MeltState ancestor;
  MeltState descendant;

  friend bool operator==(const MeltPair&, const MeltPair&) = default;
};

/// Depth limit; std::nullopt means unlimited.
using MaxDepth = std::optional<unsigned>;

inline constexpr unsigned kDefaultMaxDepth = 2;

/// "seed/3-7", or "seed/root" for the empty set.
std::string state_key(const MeltState& state);
/// The part of the key after "seed/".
std::string state_suffix(const std::vector<int>& removed);
/// Inverse of state_key. Throws Error(invalid_argument) on malformed keys.
MeltState parse_state_key(std::string_view key);

/// Number of (S, T) with S a proper subset of T, T a subset of an m-element
/// set and |T| <= max_depth. Throws Error(overflow) past 2^64 - 1.
std::uint64_t count_pairs(unsigned m, MaxDepth max_depth);

struct PlanOptions {
  MaxDepth max_depth = kDefaultMaxDepth;
  std::optional<std::size_t> pair_budget;  // per-seed truncation, in emission order
};

/// Every (S, T) with S proper subset of T, T within meltable_objects(seed) and
/// |T| <= max_depth. Ordered by |T|, then T's ids, then |S|, then S's ids.
std::vector<MeltPair> enumerate_pairs(const corpus::SeedImage& seed, const PlanOptions& options);

/// Same lattice over an explicit id list (used directly by tests and the
/// C API's count checks).
std::vector<MeltPair> enumerate_pairs(const std::string& seed_id, std::vector<int> object_ids,
                                      const PlanOptions& options);

/// Distinct states appearing in `pairs`, sorted.
std::vector<MeltState> unique_states(const std::vector<MeltPair>& pairs);

nlohmann::json to_json(const MeltPair& pair);
MeltPair pair_from_json(const nlohmann::json& value);

}  // namespace meltcheck::planner
